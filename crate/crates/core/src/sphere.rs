//! Points on S^{d-1} and point sets.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A unit vector in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Normalizes `coords` onto the sphere.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid(format!("dimension {} < 2", coords.len())));
        }
        let norm = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::invalid(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        Ok(Self {
            coords: coords.into_iter().map(|x| x / norm).collect(),
        })
    }

    /// (cos θ, sin θ).
    pub fn from_angle(theta: f64) -> Self {
        Self {
            coords: vec![theta.cos(), theta.sin()],
        }
    }

    /// Polar angle θ from the +z axis and azimuth φ.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let st = theta.sin();
        Self {
            coords: vec![st * phi.cos(), st * phi.sin(), theta.cos()],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        dot(&self.coords, &other.coords)
    }

    /// The lifted point (x, 1)/√2 on S^d.
    pub fn lifted(&self) -> Vec<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v: Vec<f64> = self.coords.iter().map(|x| x * s).collect();
        v.push(s);
        v
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// n unit vectors of a common dimension d, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePointSet {
    d: usize,
    coords: Vec<f64>,
}

impl SpherePointSet {
    pub fn from_points(points: &[SpherePoint]) -> Result<Self> {
        let d = points
            .first()
            .map(|p| p.dim())
            .ok_or_else(|| Error::invalid("empty point set"))?;
        let mut coords = Vec::with_capacity(d * points.len());
        for p in points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(Self { d, coords })
    }

    /// Builds from raw rows; each row must already have unit norm within 1e-12.
    pub fn from_rows(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d < 2 || coords.is_empty() || coords.len() % d != 0 {
            return Err(Error::invalid(
                "coordinate array does not form rows of length d",
            ));
        }
        for (i, row) in coords.chunks_exact(d).enumerate() {
            let norm = dot(row, row).sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::NotOnSphere { index: i, norm });
            }
        }
        Ok(Self { d, coords })
    }

    /// Points (cos θ_i, sin θ_i).
    pub fn from_angles(thetas: &[f64]) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::invalid("empty point set"));
        }
        let mut coords = Vec::with_capacity(2 * thetas.len());
        for t in thetas {
            coords.push(t.cos());
            coords.push(t.sin());
        }
        Ok(Self { d: 2, coords })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn to_point(&self, i: usize) -> SpherePoint {
        SpherePoint {
            coords: self.point(i).to_vec(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    pub fn raw(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinates grouped by dimension: `out[k][i]` is coordinate k of point i.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|k| self.iter().map(|p| p[k]).collect())
            .collect()
    }

    /// Azimuth atan2(y, x) in [0, 2π) for each point.
    pub fn angles(&self) -> Vec<f64> {
        self.iter()
            .map(|p| p[1].atan2(p[0]).rem_euclid(std::f64::consts::TAU))
            .collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Self { d: self.d, coords }
    }

    /// SHA-256 over the little-endian coordinate bytes, truncated to 64 bits.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update((self.d as u64).to_le_bytes());
        for x in &self.coords {
            h.update(x.to_le_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    /// Smallest pairwise angular distance and the pair attaining it.
    pub fn min_separation(&self) -> (f64, usize, usize) {
        let n = self.len();
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..n {
            for j in i + 1..n {
                let a = angle_between(self.point(i), self.point(j));
                if a < best.0 {
                    best = (a, i, j);
                }
            }
        }
        best
    }

    /// Errors on any pair closer than `tol` radians.
    pub fn check_distinct(&self, tol: f64) -> Result<()> {
        if self.len() < 2 {
            return Ok(());
        }
        let (sep, i, j) = self.min_separation();
        if sep <= tol {
            return Err(Error::DuplicateNodes {
                first: i,
                second: j,
            });
        }
        Ok(())
    }

    /// Reads `x,y[,z]` rows. Blank lines and lines starting with `#` are skipped;
    /// a non-numeric first line is treated as a header.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_csv_rows(path, &text)?;
        let d = rows.first().map(|r| r.len()).ok_or_else(|| Error::Format {
            path: path.into(),
            msg: "no data rows".into(),
        })?;
        let mut coords = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Format {
                    path: path.into(),
                    msg: format!("row {i} has {} columns, expected {d}", r.len()),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::from_rows(d, coords).map_err(|e| Error::Format {
            path: path.into(),
            msg: e.to_string(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let header = ["x", "y", "z", "w"];
        let mut s = String::new();
        s.push_str(&header[..self.d.min(4)].join(","));
        s.push('\n');
        for p in self.iter() {
            push_row(&mut s, p);
        }
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    // atan2 of cross/dot magnitude is accurate for tiny angles
    let d = dot(a, b);
    let mut c2 = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let c = a[i] * b[j] - a[j] * b[i];
            c2 += c * c;
        }
    }
    c2.sqrt().atan2(d)
}

pub(crate) fn push_row(s: &mut String, vals: &[f64]) {
    for (k, v) in vals.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push_str(&format!("{v:e}"));
    }
    s.push('\n');
}

pub(crate) fn parse_csv_rows(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() && lineno == 0 => continue,
            Err(e) => {
                return Err(Error::Format {
                    path: path.into(),
                    msg: format!("line {}: {e}", lineno + 1),
                })
            }
        }
    }
    Ok(rows)
}

/// Spherical Fibonacci lattice with n points on S².
pub fn fibonacci_sphere(n: usize) -> SpherePointSet {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let mut coords = Vec::with_capacity(3 * n);
    for i in 0..n {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = std::f64::consts::TAU * ((i as f64 / golden).fract());
        let v = [r * phi.cos(), r * phi.sin(), z];
        let nrm = dot(&v, &v).sqrt();
        coords.extend(v.iter().map(|x| x / nrm));
    }
    SpherePointSet { d: 3, coords }
}

/// Greedy farthest-point subsample of size k, seeded at index 0.
pub fn farthest_point_subsample(set: &SpherePointSet, k: usize) -> Result<Vec<usize>> {
    let n = set.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("subsample size {k} not in 1..={n}")));
    }
    let mut chosen = vec![0usize];
    // track max dot product to the chosen set (larger dot = closer)
    let mut closest: Vec<f64> = (0..n).map(|i| dot(set.point(i), set.point(0))).collect();
    while chosen.len() < k {
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        for (i, &c) in closest.iter().enumerate() {
            if c < best_val {
                best_val = c;
                best = i;
            }
        }
        chosen.push(best);
        let p = set.point(best).to_vec();
        for (i, c) in closest.iter_mut().enumerate() {
            let v = dot(set.point(i), &p);
            if v > *c {
                *c = v;
            }
        }
    }
    Ok(chosen)
}
