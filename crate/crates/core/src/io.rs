//! Binary field format and CSV helpers.
//!
//! Scalar fields serialize as: magic `"OLF1"`, `u32` dimension, `u32` cell
//! count per axis, `f64` spacing, then `f64` little-endian node values in
//! row-major order. Vector fields are written one component per file.

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"OLF1";

pub fn write_scalar(path: &Path, f: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(f.grid.dim() as u32).to_le_bytes())?;
    for &s in f.grid.shape() {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    w.write_all(&f.grid.spacing().to_le_bytes())?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?} in {}", path.display())));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    if !(n == 2 || n == 3) {
        return Err(Error::Format(format!("unsupported dimension {n}")));
    }
    let mut shape = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut b4)?;
        shape.push(u32::from_le_bytes(b4) as usize);
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let h = f64::from_le_bytes(b8);
    if shape.iter().any(|&s| s != shape[0]) {
        return Err(Error::Format("only cubic shapes round-trip through the scalar format".into()));
    }
    let grid = Grid::periodic(n, shape[0], h)?;
    let count = grid.node_count();
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    ScalarField::new(grid, values)
}

/// Writes one file per component with suffixes `_0`, `_1`, ...
pub fn write_vector(stem: &Path, v: &VectorField) -> Result<Vec<std::path::PathBuf>> {
    let mut paths = Vec::new();
    for (k, comp) in v.comps.iter().enumerate() {
        let path = component_path(stem, k);
        let f = ScalarField::new(v.grid.clone(), comp.clone())?;
        write_scalar(&path, &f)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn read_vector(stem: &Path, dim: usize) -> Result<VectorField> {
    let mut comps = Vec::with_capacity(dim);
    let mut grid: Option<Grid> = None;
    for k in 0..dim {
        let f = read_scalar(&component_path(stem, k))?;
        if let Some(g) = &grid {
            if *g != f.grid {
                return Err(Error::Format("vector components disagree on geometry".into()));
            }
        } else {
            grid = Some(f.grid.clone());
        }
        comps.push(f.values);
    }
    VectorField::new(grid.expect("dim >= 1"), comps)
}

fn component_path(stem: &Path, k: usize) -> std::path::PathBuf {
    let ext = stem.extension().map(|e| e.to_string_lossy().into_owned());
    let base = stem.with_extension("");
    match ext {
        Some(e) => base.with_file_name(format!(
            "{}_{k}.{e}",
            base.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => base.with_file_name(format!(
            "{}_{k}",
            base.file_name().unwrap_or_default().to_string_lossy()
        )),
    }
}

/// CSV export of a 2D slice: `x,y,value` rows. For 3D fields `slice_axis2`
/// picks the layer; 2D fields export whole.
pub fn write_scalar_csv(path: &Path, f: &ScalarField, layer: usize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,value")?;
    let shape = f.grid.shape();
    match f.grid.dim() {
        2 => {
            for i in 0..shape[0] {
                for j in 0..shape[1] {
                    let flat = f.grid.flat_index(&[i, j]);
                    let x = f.grid.coords(flat);
                    writeln!(w, "{},{},{}", x[0], x[1], f.values[flat])?;
                }
            }
        }
        3 => {
            if layer >= shape[2] {
                return Err(Error::Format(format!("layer {layer} out of range")));
            }
            for i in 0..shape[0] {
                for j in 0..shape[1] {
                    let flat = f.grid.flat_index(&[i, j, layer]);
                    let x = f.grid.coords(flat);
                    writeln!(w, "{},{},{}", x[0], x[1], f.values[flat])?;
                }
            }
        }
        _ => return Err(Error::Format("unsupported dimension".into())),
    }
    w.flush()?;
    Ok(())
}

/// Minimal CSV table writer with a fixed header; values use the shortest
/// round-trip float formatting, which is deterministic.
pub struct CsvWriter {
    w: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{header}")?;
        Ok(CsvWriter { w })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.w, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("alaplace_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let grid = Grid::periodic(2, 8, 0.125).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = (0..grid.node_count()).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let f = ScalarField::new(grid, values.clone()).unwrap();
        let path = dir.join("f.olf");
        write_scalar(&path, &f).unwrap();
        let g = read_scalar(&path).unwrap();
        assert_eq!(g.values, values);
        assert_eq!(g.grid.shape(), f.grid.shape());
        assert_eq!(g.grid.spacing(), f.grid.spacing());
    }

    #[test]
    fn vector_round_trip() {
        let dir = std::env::temp_dir().join("alaplace_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let grid = Grid::periodic(3, 4, 0.25).unwrap();
        let v = VectorField::from_fn(grid, |x| vec![x[0], x[1] * 2.0, -x[2]]);
        let stem = dir.join("v.olf");
        write_vector(&stem, &v).unwrap();
        let w = read_vector(&stem, 3).unwrap();
        assert_eq!(v.comps, w.comps);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = std::env::temp_dir().join("alaplace_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("junk.olf");
        std::fs::write(&path, b"NOPE____________").unwrap();
        assert!(read_scalar(&path).is_err());
    }
}
