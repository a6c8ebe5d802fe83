//! Real orthonormal spherical harmonics on S¹ and S², ultraspherical
//! polynomials, and finite harmonic expansions.

mod gegenbauer;

pub(crate) use gegenbauer::gegenbauer_unchecked;
pub use gegenbauer::{gegenbauer, gegenbauer_all};

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::sphere::{SpherePoint, SpherePointSet};

/// Γ(x) for x = k/2 with k a positive integer.
fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    debug_assert!(twice >= 1 && ((2.0 * x) - twice as f64).abs() < 1e-12);
    if twice % 2 == 0 {
        (1..(twice / 2)).map(|k| k as f64).product()
    } else {
        // Γ(1/2) = √π, Γ(k + 1/2) = (k - 1/2) Γ(k - 1/2)
        let mut g = PI.sqrt();
        let mut y = 0.5;
        while y + 0.5 < x + 1e-9 {
            g *= y;
            y += 1.0;
        }
        g
    }
}

/// Dimension N(d, ℓ) of the degree-ℓ harmonic space on S^{d-1}.
pub fn harmonic_count(d: usize, ell: usize) -> Result<usize> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension {d} < 2")));
    }
    if ell == 0 {
        return Ok(1);
    }
    if d == 2 {
        return Ok(2);
    }
    // (2ℓ+d-2)/ℓ · C(ℓ+d-3, ℓ-1), exact in integers
    let mut binom: u128 = 1;
    for k in 1..=(ell as u128 - 1) {
        binom = binom * (d as u128 - 3 + 1 + k) / k;
    }
    let num = (2 * ell + d - 2) as u128 * binom;
    usize::try_from(num / ell as u128).map_err(|_| Error::invalid("harmonic count overflows"))
}

/// dim Π^d_L = Σ_{ℓ ≤ L} N(d, ℓ).
pub fn space_dim(d: usize, l_max: usize) -> Result<usize> {
    (0..=l_max).map(|l| harmonic_count(d, l)).sum()
}

/// Surface measure A_d = 2π^{d/2}/Γ(d/2) of S^{d-1}.
pub fn surface_area(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension {d} < 2")));
    }
    let h = d as f64 / 2.0;
    Ok(2.0 * PI.powf(h) / gamma_half_integer(h))
}

/// Degree ℓ and order p, 1 ≤ p ≤ N(d, ℓ).
///
/// On S¹, p = 1 is sin(ℓθ) and p = 2 is cos(ℓθ). On S², p = ℓ + 1 + m with
/// m ∈ [-ℓ, ℓ]: m < 0 is the sin(|m|φ) harmonic, m = 0 is zonal, m > 0 cos(mφ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicIndex {
    pub degree: usize,
    pub order: usize,
}

impl HarmonicIndex {
    pub fn new(d: usize, degree: usize, order: usize) -> Result<Self> {
        let n = harmonic_count(d, degree)?;
        if order < 1 || order > n {
            return Err(Error::invalid(format!(
                "order {order} outside 1..={n} for degree {degree}"
            )));
        }
        Ok(Self { degree, order })
    }

    /// The zonal (axially symmetric about +z) harmonic of degree ℓ on S².
    pub fn zonal(degree: usize) -> Self {
        Self {
            degree,
            order: degree + 1,
        }
    }

    /// Position in the flat basis ordering for dimension d (2 or 3).
    pub fn flat(&self, d: usize) -> usize {
        flat_index(d, self.degree, self.order)
    }
}

fn flat_index(d: usize, ell: usize, p: usize) -> usize {
    match (d, ell) {
        (_, 0) => 0,
        (2, _) => 2 * ell - 1 + (p - 1),
        _ => ell * ell + p - 1,
    }
}

fn check_supported(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "harmonic evaluation only on S¹ and S² (d = {d})"
        )))
    }
}

/// Evaluates every harmonic of degree ≤ L at `x` into `out` (flat ordering).
pub fn eval_all_into(d: usize, l_max: usize, x: &[f64], out: &mut [f64]) {
    match d {
        2 => eval_all_s1(l_max, x, out),
        3 => eval_all_s2(l_max, x, out),
        _ => panic!("unsupported dimension {d}"),
    }
}

fn eval_all_s1(l_max: usize, x: &[f64], out: &mut [f64]) {
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    out[0] = 1.0 / (2.0 * PI).sqrt();
    // (cos ℓθ, sin ℓθ) by angle addition from (x, y)
    let (c1, s1) = (x[0], x[1]);
    let (mut c, mut s) = (1.0, 0.0);
    for l in 1..=l_max {
        let nc = c * c1 - s * s1;
        let ns = s * c1 + c * s1;
        c = nc;
        s = ns;
        out[2 * l - 1] = s * inv_sqrt_pi;
        out[2 * l] = c * inv_sqrt_pi;
    }
}

fn eval_all_s2(l_max: usize, x: &[f64], out: &mut [f64]) {
    let (px, py, z) = (x[0], x[1], x[2]);
    let sqrt2 = std::f64::consts::SQRT_2;
    // q^m_m without the sin^m θ factor, which is carried by Re/Im (x + iy)^m
    let mut qmm = 1.0 / (4.0 * PI).sqrt();
    let (mut re, mut im) = (1.0, 0.0);
    for m in 0..=l_max {
        if m > 0 {
            let mf = m as f64;
            qmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
            let nre = re * px - im * py;
            let nim = re * py + im * px;
            re = nre;
            im = nim;
        }
        let mut store = |l: usize, q: f64| {
            if m == 0 {
                out[l * l + l] = q;
            } else {
                out[l * l + l + m] = sqrt2 * q * re;
                out[l * l + l - m] = sqrt2 * q * im;
            }
        };
        store(m, qmm);
        if m == l_max {
            break;
        }
        let mf = m as f64;
        let mut prev = qmm;
        let mut cur = (2.0 * mf + 3.0).sqrt() * z * qmm;
        store(m + 1, cur);
        for l in m + 2..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            let next = a * (z * cur - b * prev);
            prev = cur;
            cur = next;
            store(l, cur);
        }
    }
}

/// Y_{ℓ,p}(x) under the orthonormal convention.
pub fn eval_harmonic(idx: HarmonicIndex, x: &SpherePoint) -> Result<f64> {
    let d = x.dim();
    check_supported(d)?;
    HarmonicIndex::new(d, idx.degree, idx.order)?;
    let mut buf = vec![0.0; space_dim(d, idx.degree)?];
    eval_all_into(d, idx.degree, x.coords(), &mut buf);
    Ok(buf[idx.flat(d)])
}

/// Matrix of harmonic values: row k is basis function k (flat ordering), column i is node i.
pub fn basis_matrix(nodes: &SpherePointSet, l_max: usize) -> Result<DMatrix<f64>> {
    let d = nodes.dim();
    check_supported(d)?;
    let k = space_dim(d, l_max)?;
    let n = nodes.len();
    let mut m = DMatrix::zeros(k, n);
    let mut buf = vec![0.0; k];
    for (i, p) in nodes.iter().enumerate() {
        eval_all_into(d, l_max, p, &mut buf);
        m.column_mut(i).copy_from_slice(&buf);
    }
    Ok(m)
}

/// Degrees of each flat basis index up to L.
pub fn flat_degrees(d: usize, l_max: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for l in 0..=l_max {
        out.extend(std::iter::repeat(l).take(harmonic_count(d, l)?));
    }
    Ok(out)
}

/// Finite expansion Σ_{ℓ ≤ L} Σ_p ĝ_{ℓ,p} Y_{ℓ,p}.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicExpansion {
    d: usize,
    l_max: usize,
    coeffs: Vec<f64>,
}

impl HarmonicExpansion {
    pub fn zeros(d: usize, l_max: usize) -> Result<Self> {
        check_supported(d)?;
        Ok(Self {
            d,
            l_max,
            coeffs: vec![0.0; space_dim(d, l_max)?],
        })
    }

    pub fn from_coeffs(d: usize, l_max: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_supported(d)?;
        let k = space_dim(d, l_max)?;
        if coeffs.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: coeffs.len(),
            });
        }
        Ok(Self { d, l_max, coeffs })
    }

    /// Σ_{ℓ=1}^{L} sin(ℓθ) on S¹.
    pub fn sine_sum(l_max: usize) -> Self {
        let mut e = Self::zeros(2, l_max).expect("d = 2 supported");
        for l in 1..=l_max {
            e.set(
                HarmonicIndex {
                    degree: l,
                    order: 1,
                },
                PI.sqrt(),
            );
        }
        e
    }

    /// sin(ℓθ) on S¹.
    pub fn single_sine(ell: usize) -> Self {
        let mut e = Self::zeros(2, ell).expect("d = 2 supported");
        if ell > 0 {
            e.set(
                HarmonicIndex {
                    degree: ell,
                    order: 1,
                },
                PI.sqrt(),
            );
        }
        e
    }

    /// Σ_{k=1}^{K} Y_{2k, zonal} on S².
    pub fn even_zonal_sum(k_max: usize) -> Self {
        let mut e = Self::zeros(3, 2 * k_max).expect("d = 3 supported");
        for k in 1..=k_max {
            e.set(HarmonicIndex::zonal(2 * k), 1.0);
        }
        e
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.l_max
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, idx: HarmonicIndex) -> f64 {
        if idx.degree > self.l_max {
            return 0.0;
        }
        self.coeffs[idx.flat(self.d)]
    }

    pub fn set(&mut self, idx: HarmonicIndex, v: f64) {
        let k = idx.flat(self.d);
        self.coeffs[k] = v;
    }

    /// Coefficients of degree ℓ.
    pub fn degree_coeffs(&self, ell: usize) -> &[f64] {
        if ell > self.l_max {
            return &[];
        }
        let start = flat_index(self.d, ell, 1);
        let n = harmonic_count(self.d, ell).expect("d checked");
        &self.coeffs[start..start + n]
    }

    /// Squared L² norm (Parseval).
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// The degree-ℓ component g_ℓ as its own expansion.
    pub fn component(&self, ell: usize) -> Self {
        let mut out = Self::zeros(self.d, self.l_max).expect("d checked");
        if ell <= self.l_max {
            let start = flat_index(self.d, ell, 1);
            let n = harmonic_count(self.d, ell).expect("d checked");
            out.coeffs[start..start + n].copy_from_slice(&self.coeffs[start..start + n]);
        }
        out
    }

    /// Values at every node.
    pub fn sample(&self, nodes: &SpherePointSet) -> Result<Vec<f64>> {
        if nodes.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: nodes.dim(),
            });
        }
        let mut buf = vec![0.0; self.coeffs.len()];
        Ok(nodes
            .iter()
            .map(|p| {
                eval_all_into(self.d, self.l_max, p, &mut buf);
                buf.iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
            })
            .collect())
    }
}

/// Σ ĝ_{ℓ,p} Y_{ℓ,p}(x).
pub fn eval_expansion(e: &HarmonicExpansion, x: &SpherePoint) -> Result<f64> {
    if x.dim() != e.d {
        return Err(Error::DimensionMismatch {
            expected: e.d,
            got: x.dim(),
        });
    }
    let mut buf = vec![0.0; e.coeffs.len()];
    eval_all_into(e.d, e.l_max, x.coords(), &mut buf);
    Ok(buf.iter().zip(&e.coeffs).map(|(y, c)| y * c).sum())
}

/// ĝ_{ℓ,p} = Σ_i c_i Y_{ℓ,p}(x_i) samples_i for all ℓ ≤ L.
pub fn project(samples: &[f64], rule: &QuadratureRule, l_max: usize) -> Result<HarmonicExpansion> {
    let nodes = rule.nodes();
    if samples.len() != nodes.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            got: samples.len(),
        });
    }
    if l_max > rule.certified_degree() {
        log::warn!(
            "projecting to degree {l_max} beyond the rule's certified degree {}",
            rule.certified_degree()
        );
    }
    let d = nodes.dim();
    check_supported(d)?;
    let k = space_dim(d, l_max)?;
    let mut coeffs = vec![0.0; k];
    let mut buf = vec![0.0; k];
    for ((p, &c), &s) in nodes.iter().zip(rule.weights()).zip(samples) {
        eval_all_into(d, l_max, p, &mut buf);
        let w = c * s;
        for (acc, y) in coeffs.iter_mut().zip(&buf) {
            *acc += w * y;
        }
    }
    HarmonicExpansion::from_coeffs(d, l_max, coeffs)
}
