//! Sampled scalar and vector fields on regular Cartesian grids, plus their
//! on-disk formats.
//!
//! Sample ordering is x fastest, then y, then z:
//! `index = (iz * ny + iy) * nx + ix`.
//!
//! Binary blobs are flat little-endian `f64`. A scalar grid writes one plane;
//! a vector grid writes six planes in the order Re Ex, Im Ex, Re Ey, Im Ey,
//! Re Ez, Im Ez. The JSON header next to the blob carries the geometry.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Geometry of a regular grid. Positions are `origin + i * spacing` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub shape: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: [f64; 3], spacing: [f64; 3], shape: [usize; 3]) -> Result<Self> {
        let g = GridSpec { origin, spacing, shape };
        g.validate()?;
        Ok(g)
    }

    /// Grid spanning `[min, max]` on each axis with `n` samples (endpoints included).
    /// An axis with `n == 1` sits at `min` and gets unit spacing.
    pub fn from_bounds(min: [f64; 3], max: [f64; 3], shape: [usize; 3]) -> Result<Self> {
        let mut spacing = [1.0; 3];
        for a in 0..3 {
            if shape[a] == 0 {
                return Err(invalid("shape", "every axis needs at least one sample"));
            }
            if shape[a] > 1 {
                spacing[a] = (max[a] - min[a]) / (shape[a] - 1) as f64;
            }
        }
        Self::new(min, spacing, shape)
    }

    /// One-dimensional line along `axis` (0 = x, 1 = y, 2 = z) through `through`.
    pub fn line(axis: usize, through: [f64; 3], min: f64, max: f64, n: usize) -> Result<Self> {
        let mut lo = through;
        let mut hi = through;
        lo[axis] = min;
        hi[axis] = max;
        let mut shape = [1; 3];
        shape[axis] = n;
        Self::from_bounds(lo, hi, shape)
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            if !(self.spacing[a] > 0.0 && self.spacing[a].is_finite()) {
                return Err(invalid("spacing", "grid spacing must be positive and finite"));
            }
            if self.shape[a] == 0 {
                return Err(invalid("shape", "every axis needs at least one sample"));
            }
            if !self.origin[a].is_finite() {
                return Err(invalid("origin", "grid origin must be finite"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.shape[1] + iy) * self.shape[0] + ix
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let nx = self.shape[0];
        let ny = self.shape[1];
        let ix = idx % nx;
        let iy = (idx / nx) % ny;
        let iz = idx / (nx * ny);
        [
            self.origin[0] + ix as f64 * self.spacing[0],
            self.origin[1] + iy as f64 * self.spacing[1],
            self.origin[2] + iz as f64 * self.spacing[2],
        ]
    }

    pub fn axis(&self, a: usize) -> Vec<f64> {
        (0..self.shape[a])
            .map(|i| self.origin[a] + i as f64 * self.spacing[a])
            .collect()
    }

    pub fn max_coord(&self, a: usize) -> f64 {
        self.origin[a] + (self.shape[a] - 1) as f64 * self.spacing[a]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.coords(i)).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BlobHeader {
    kind: String,
    origin: [f64; 3],
    spacing: [f64; 3],
    shape: [usize; 3],
    order: String,
    dtype: String,
    planes: Vec<String>,
}

/// Real-valued samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                spec.len()
            )));
        }
        Ok(ScalarGrid { spec, values })
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.spec.index(ix, iy, iz)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index triple of the largest sample (first one on ties).
    pub fn argmax(&self) -> [usize; 3] {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        let nx = self.spec.shape[0];
        let ny = self.spec.shape[1];
        [best % nx, (best / nx) % ny, best / (nx * ny)]
    }

    /// Samples along `axis` through the index triple `at`.
    pub fn line_through(&self, axis: usize, at: [usize; 3]) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::with_capacity(self.spec.shape[axis]);
        let mut vals = Vec::with_capacity(self.spec.shape[axis]);
        for i in 0..self.spec.shape[axis] {
            let mut idx = at;
            idx[axis] = i;
            pos.push(self.spec.origin[axis] + i as f64 * self.spec.spacing[axis]);
            vals.push(self.get(idx[0], idx[1], idx[2]));
        }
        (pos, vals)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,z,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let [x, y, z] = self.spec.coords(i);
            let _ = writeln!(s, "{x:.9e},{y:.9e},{z:.9e},{v:.12e}");
        }
        s
    }

    pub fn header_json(&self) -> String {
        let h = BlobHeader {
            kind: "scalar".into(),
            origin: self.spec.origin,
            spacing: self.spec.spacing,
            shape: self.spec.shape,
            order: "x-fastest".into(),
            dtype: "f64-le".into(),
            planes: vec!["value".into()],
        };
        serde_json::to_string_pretty(&h).expect("header serializes")
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Writes `<stem>.json` and `<stem>.bin` into `dir`.
    pub fn write_binary(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::write(dir.join(format!("{stem}.json")), self.header_json())?;
        let mut f = std::fs::File::create(dir.join(format!("{stem}.bin")))?;
        f.write_all(&self.to_le_bytes())?;
        Ok(())
    }

    pub fn read_binary(dir: &Path, stem: &str) -> Result<Self> {
        let header = std::fs::read_to_string(dir.join(format!("{stem}.json")))?;
        let h: BlobHeader = serde_json::from_str(&header).map_err(|e| Error::Io(format!("bad header: {e}")))?;
        let spec = GridSpec::new(h.origin, h.spacing, h.shape)?;
        let bytes = std::fs::read(dir.join(format!("{stem}.bin")))?;
        let values = decode_f64_le(&bytes);
        ScalarGrid::new(spec, values)
    }
}

/// Three complex field components on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVectorGrid {
    pub spec: GridSpec,
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
    pub ez: Vec<Complex64>,
}

impl ComplexVectorGrid {
    pub fn new(spec: GridSpec, ex: Vec<Complex64>, ey: Vec<Complex64>, ez: Vec<Complex64>) -> Result<Self> {
        spec.validate()?;
        let n = spec.len();
        if ex.len() != n || ey.len() != n || ez.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "component lengths ({}, {}, {}) for a grid of {n} points",
                ex.len(),
                ey.len(),
                ez.len()
            )));
        }
        Ok(ComplexVectorGrid { spec, ex, ey, ez })
    }

    pub fn from_vectors(spec: GridSpec, vals: Vec<[Complex64; 3]>) -> Result<Self> {
        let ex = vals.iter().map(|v| v[0]).collect();
        let ey = vals.iter().map(|v| v[1]).collect();
        let ez = vals.iter().map(|v| v[2]).collect();
        Self::new(spec, ex, ey, ez)
    }

    pub fn vector(&self, idx: usize) -> [Complex64; 3] {
        [self.ex[idx], self.ey[idx], self.ez[idx]]
    }

    /// Total intensity `|Ex|^2 + |Ey|^2 + |Ez|^2`.
    pub fn intensity(&self) -> ScalarGrid {
        let values = (0..self.spec.len())
            .map(|i| self.ex[i].norm_sqr() + self.ey[i].norm_sqr() + self.ez[i].norm_sqr())
            .collect();
        ScalarGrid {
            spec: self.spec,
            values,
        }
    }

    pub fn header_json(&self) -> String {
        let h = BlobHeader {
            kind: "complex-vector".into(),
            origin: self.spec.origin,
            spacing: self.spec.spacing,
            shape: self.spec.shape,
            order: "x-fastest".into(),
            dtype: "f64-le".into(),
            planes: ["re_ex", "im_ex", "re_ey", "im_ey", "re_ez", "im_ez"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        };
        serde_json::to_string_pretty(&h).expect("header serializes")
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.ex.len() * 48);
        for comp in [&self.ex, &self.ey, &self.ez] {
            for v in comp.iter() {
                out.extend_from_slice(&v.re.to_le_bytes());
            }
            for v in comp.iter() {
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }

    pub fn write_binary(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::write(dir.join(format!("{stem}.json")), self.header_json())?;
        std::fs::write(dir.join(format!("{stem}.bin")), self.to_le_bytes())?;
        Ok(())
    }

    pub fn read_binary(dir: &Path, stem: &str) -> Result<Self> {
        let header = std::fs::read_to_string(dir.join(format!("{stem}.json")))?;
        let h: BlobHeader = serde_json::from_str(&header).map_err(|e| Error::Io(format!("bad header: {e}")))?;
        let spec = GridSpec::new(h.origin, h.spacing, h.shape)?;
        let raw = decode_f64_le(&std::fs::read(dir.join(format!("{stem}.bin")))?);
        let n = spec.len();
        if raw.len() != 6 * n {
            return Err(Error::ShapeMismatch(format!(
                "blob holds {} values, expected {}",
                raw.len(),
                6 * n
            )));
        }
        let plane = |k: usize| -> Vec<Complex64> {
            (0..n)
                .map(|i| Complex64::new(raw[2 * k * n + i], raw[(2 * k + 1) * n + i]))
                .collect()
        };
        Self::new(spec, plane(0), plane(1), plane(2))
    }

    /// CSV line cut along `axis` through index triple `at`: position, then
    /// Re/Im of each component and the total intensity.
    pub fn line_csv(&self, axis: usize, at: [usize; 3]) -> String {
        let mut s = String::from("pos,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez,intensity\n");
        for i in 0..self.spec.shape[axis] {
            let mut idx = at;
            idx[axis] = i;
            let k = self.spec.index(idx[0], idx[1], idx[2]);
            let q = self.spec.origin[axis] + i as f64 * self.spec.spacing[axis];
            let [a, b, c] = self.vector(k);
            let inten = a.norm_sqr() + b.norm_sqr() + c.norm_sqr();
            let _ = writeln!(
                s,
                "{q:.9e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{inten:.12e}",
                a.re, a.im, b.re, b.im, c.re, c.im
            );
        }
        s
    }
}

fn decode_f64_le(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_and_coords_agree() {
        let g = GridSpec::new([0.0, 1.0, 2.0], [0.5, 0.25, 1.0], [3, 4, 2]).unwrap();
        let idx = g.index(2, 3, 1);
        assert_eq!(g.coords(idx), [1.0, 1.75, 3.0]);
        assert_eq!(g.len(), 24);
    }

    #[test]
    fn rejects_nonpositive_spacing() {
        assert!(GridSpec::new([0.0; 3], [1.0, 0.0, 1.0], [1, 1, 1]).is_err());
        assert!(ScalarGrid::new(GridSpec::new([0.0; 3], [1.0; 3], [2, 1, 1]).unwrap(), vec![1.0]).is_err());
    }

    #[test]
    fn scalar_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::from_bounds([-1.0, 0.0, 0.0], [1.0, 0.0, 2.0], [5, 1, 3]).unwrap();
        let vals: Vec<f64> = (0..15).map(|i| (i as f64).sin()).collect();
        let g = ScalarGrid::new(spec, vals).unwrap();
        g.write_binary(dir.path(), "s").unwrap();
        assert_eq!(ScalarGrid::read_binary(dir.path(), "s").unwrap(), g);
        assert_eq!(std::fs::metadata(dir.path().join("s.bin")).unwrap().len(), 15 * 8);
    }

    #[test]
    fn vector_blob_plane_layout() {
        let spec = GridSpec::new([0.0; 3], [1.0; 3], [2, 1, 1]).unwrap();
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let g = ComplexVectorGrid::new(
            spec,
            vec![c(1.0, 2.0), c(3.0, 4.0)],
            vec![c(5.0, 6.0), c(7.0, 8.0)],
            vec![c(9.0, 10.0), c(11.0, 12.0)],
        )
        .unwrap();
        let raw = decode_f64_le(&g.to_le_bytes());
        assert_eq!(raw, vec![1.0, 3.0, 2.0, 4.0, 5.0, 7.0, 6.0, 8.0, 9.0, 11.0, 10.0, 12.0]);
        let dir = tempfile::tempdir().unwrap();
        g.write_binary(dir.path(), "v").unwrap();
        assert_eq!(ComplexVectorGrid::read_binary(dir.path(), "v").unwrap(), g);
    }
}
