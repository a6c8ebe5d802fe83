//! The infinite-width kernel K∞, its Gram matrices, its Funk–Hecke
//! eigenvalues μ_ℓ, and the spectrum of H∞P.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::harmonics::{eval_harmonic, gegenbauer_unchecked, HarmonicIndex};
use crate::numerics::{gauss_legendre, sym_eigenvalues};
use crate::sphere::{SpherePoint, SpherePointSet};
use crate::trainer::{LossOperator, TwoLayerReluNet};

/// K∞(t) = (t + 1)(π − arccos t)/(4π).
pub fn k_infinity(t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "kernel argument {t} outside [-1, 1]"
        )));
    }
    Ok(k_inf(t))
}

#[inline]
pub(crate) fn k_inf(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    (t + 1.0) * (PI - t.acos()) / (4.0 * PI)
}

/// Symmetric n×n kernel matrix tagged with the fingerprint of its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    fingerprint: u64,
}

impl KernelMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        sym_eigenvalues(self.entries.clone())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        (&self.entries * v).iter().copied().collect()
    }
}

/// H∞_ij = K∞(x_iᵀ x_j).
pub fn build_h_infinity(nodes: &SpherePointSet) -> Result<KernelMatrix> {
    nodes.check_distinct(1e-14)?;
    let n = nodes.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = 0.5;
        let xi = nodes.point(i);
        for j in 0..i {
            let v = k_inf(crate::sphere::dot(xi, nodes.point(j)));
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(KernelMatrix {
        entries: h,
        fingerprint: nodes.fingerprint(),
    })
}

/// H_ij = (1/m) x̃_iᵀx̃_j Σ_r 1{x̃_iᵀw̃_r ≥ 0, x̃_jᵀw̃_r ≥ 0}.
pub fn build_h_empirical(net: &TwoLayerReluNet, nodes: &SpherePointSet) -> Result<KernelMatrix> {
    if net.d() != nodes.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.d(),
            got: nodes.dim(),
        });
    }
    let n = nodes.len();
    let m = net.m();
    let mut act = DMatrix::<f64>::zeros(m, n);
    for (i, x) in nodes.iter().enumerate() {
        for r in 0..m {
            if net.preactivation(r, x) >= 0.0 {
                act[(r, i)] = 1.0;
            }
        }
    }
    let counts = act.tr_mul(&act);
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let g = 0.5 * (crate::sphere::dot(nodes.point(i), nodes.point(j)) + 1.0);
            h[(i, j)] = g * counts[(i, j)] / m as f64;
        }
    }
    Ok(KernelMatrix {
        entries: h,
        fingerprint: nodes.fingerprint(),
    })
}

fn binom(n: i64, k: i64) -> BigInt {
    if k < 0 || k > n {
        return BigInt::zero();
    }
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

fn fact(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

fn rat(n: BigInt) -> BigRational {
    BigRational::from_integer(n)
}

fn ri(n: i64) -> BigRational {
    rat(BigInt::from(n))
}

fn half_central(q: i64) -> BigRational {
    // (1 − C(q, q/2)/2^q) / (2q) for even q ≥ 2
    let c = BigRational::new(binom(q, q / 2), BigInt::one() << (q as usize));
    (BigRational::one() - c) / ri(2 * q)
}

/// Exact rational R with μ_ℓ = R · π^{(d−1)/2}, for odd d ≥ 3.
fn mu_closed_rational(d: usize, ell: usize) -> BigRational {
    let h = (d as i64 - 3) / 2;
    let l = ell as i64;
    let dm1 = d as i64 - 1;
    // 2 / ((d−1) 2^ℓ (ℓ+h)!) with sign (−1)^ℓ, times ½, times 2^{(d−1)/2}
    let mut pref = BigRational::new(
        BigInt::from(2) << ((h + 1) as usize),
        BigInt::from(dm1) * (BigInt::one() << ell) * fact(l + h) * BigInt::from(2),
    );
    if ell % 2 == 1 {
        pref = -pref;
    }
    let s = if ell == 0 {
        let a = BigRational::new(binom(dm1, dm1 / 2), BigInt::from(dm1) << (d));
        let b = BigRational::new(
            BigInt::one() << (d - 2),
            BigInt::from(dm1) * binom(d as i64 - 2, dm1 / 2),
        );
        let mut alt = BigRational::zero();
        for p in 0..=h {
            let term = BigRational::new(binom(h, p), BigInt::from(2 * p + 1));
            if p % 2 == 0 {
                alt += term;
            } else {
                alt -= term;
            }
        }
        a + b - alt / ri(2)
    } else {
        let mut s = BigRational::zero();
        for p in (l + 1) / 2..=l + h {
            let mut c2 = rat(binom(l + h, p) * fact(2 * p)) / rat(fact(2 * p - l));
            if p % 2 == 1 {
                c2 = -c2;
            }
            let t = if l == 1 {
                BigRational::new(BigInt::one(), BigInt::from(2 * (2 * p + 1))) + half_central(2 * p)
            } else if l % 2 == 0 {
                let q = 2 * p - l + 2;
                -BigRational::new(BigInt::one(), BigInt::from(2 * (2 * p - l + 1)))
                    + half_central(q)
            } else {
                half_central(2 * p - l + 1)
            };
            s += c2 * t;
        }
        s
    };
    pref * s
}

/// Funk–Hecke eigenvalue μ_ℓ of K∞ on S^{d−1} from the closed form for odd d ≥ 3.
///
/// The rational part is evaluated exactly, so there is no cancellation.
pub fn mu_closed(d: usize, ell: usize) -> Result<f64> {
    if d < 3 || d % 2 == 0 {
        return Err(Error::Unsupported(format!(
            "closed-form eigenvalues need odd d >= 3 (got {d})"
        )));
    }
    let r = mu_closed_rational(d, ell);
    if !r.is_positive() {
        return Err(Error::NoConvergence(format!(
            "closed form gave a nonpositive eigenvalue at degree {ell}"
        )));
    }
    let v = r
        .to_f64()
        .ok_or_else(|| Error::NoConvergence("rational out of range".into()))?;
    Ok(v * PI.powi(((d - 1) / 2) as i32))
}

/// |S^{d−2}| = 2π^{(d−1)/2}/Γ((d−1)/2); equals 2 for d = 2.
fn sphere_section_area(d: usize) -> f64 {
    if d == 2 {
        2.0
    } else {
        crate::harmonics::surface_area(d - 1).expect("d - 1 >= 2")
    }
}

fn funk_hecke_theta(d: usize, ell: usize, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        let theta = 0.5 * PI * (xi + 1.0);
        let t = theta.cos();
        let weight = if d == 2 {
            1.0
        } else {
            theta.sin().powi(d as i32 - 2)
        };
        acc += wi * k_inf(t) * gegenbauer_unchecked(ell, d, t) * weight;
    }
    sphere_section_area(d) * 0.5 * PI * acc
}

/// μ_ℓ = |S^{d−2}| ∫_{−1}^{1} K∞(t) P_{ℓ,d}(t) (1 − t²)^{(d−3)/2} dt.
///
/// Integrated in θ = arccos t, where the integrand is smooth, by Gauss–Legendre
/// rules doubled until the relative change is at most 1e-10.
pub fn mu_numeric(d: usize, ell: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension {d} < 2")));
    }
    let mut n = ell + 16;
    let mut prev = funk_hecke_theta(d, ell, n);
    for _ in 0..8 {
        n *= 2;
        let cur = funk_hecke_theta(d, ell, n);
        if (cur - prev).abs() <= 1e-10 * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence(format!(
        "Funk–Hecke quadrature for d = {d}, degree {ell} did not settle"
    )))
}

/// μ_ℓ by direct integration ∫ K∞(⟨x, y⟩) Y(y) dy / Y(x) over the sphere with
/// x at a pole: a `resolution`-point trapezoid rule on S¹, or a Gauss–Legendre
/// × trapezoid product rule on S².
pub fn mu_dense_sphere(d: usize, ell: usize, resolution: usize) -> Result<f64> {
    match d {
        2 => {
            let n = resolution.max(8);
            let h = 2.0 * PI / n as f64;
            // x = (1, 0) and Y = cos(ℓθ)/√π, so Y(x) = 1/√π cancels
            let mut acc = 0.0;
            for j in 0..n {
                let th = h * j as f64;
                acc += k_inf(th.cos()) * (ell as f64 * th).cos();
            }
            Ok(acc * h)
        }
        3 => {
            let north = SpherePoint::new(vec![0.0, 0.0, 1.0])?;
            let idx = HarmonicIndex::zonal(ell);
            let y0 = eval_harmonic(idx, &north)?;
            let nt = resolution.max(ell + 8);
            let np = 8;
            let (x, w) = gauss_legendre(nt);
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let th = 0.5 * PI * (xi + 1.0);
                let mut ring = 0.0;
                for k in 0..np {
                    let ph = 2.0 * PI * k as f64 / np as f64;
                    let y = SpherePoint::from_spherical(th, ph);
                    ring += eval_harmonic(idx, &y)?;
                }
                ring *= 2.0 * PI / np as f64;
                acc += wi * 0.5 * PI * th.sin() * k_inf(th.cos()) * ring;
            }
            Ok(acc / y0)
        }
        _ => Err(Error::Unsupported(format!(
            "dense sphere integration for d = {d}"
        ))),
    }
}

/// How a spectrum was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMethod {
    ClosedForm,
    FunkHecke1d,
    DenseSphere,
}

impl SpectrumMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            SpectrumMethod::ClosedForm => "closed-form",
            SpectrumMethod::FunkHecke1d => "funk-hecke-1d",
            SpectrumMethod::DenseSphere => "dense-sphere",
        }
    }
}

/// μ_0, ..., μ_L.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpectrum {
    pub d: usize,
    pub mu: Vec<f64>,
    pub method: SpectrumMethod,
}

impl KernelSpectrum {
    pub fn compute(d: usize, l_max: usize, method: SpectrumMethod) -> Result<Self> {
        let mu = (0..=l_max)
            .map(|l| match method {
                SpectrumMethod::ClosedForm => mu_closed(d, l),
                SpectrumMethod::FunkHecke1d => mu_numeric(d, l),
                SpectrumMethod::DenseSphere => mu_dense_sphere(d, l, 200_000.min(4096 + 64 * l)),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(l) = mu.iter().position(|&m| !(m > 0.0)) {
            return Err(Error::NoConvergence(format!(
                "eigenvalue μ_{l} = {} is not positive",
                mu[l]
            )));
        }
        Ok(Self { d, mu, method })
    }

    /// Closed form when available, otherwise the 1-D Funk–Hecke integral.
    pub fn best(d: usize, l_max: usize) -> Result<Self> {
        if d >= 3 && d % 2 == 1 {
            Self::compute(d, l_max, SpectrumMethod::ClosedForm)
        } else {
            Self::compute(d, l_max, SpectrumMethod::FunkHecke1d)
        }
    }

    pub fn l_max(&self) -> usize {
        self.mu.len() - 1
    }

    pub fn get(&self, ell: usize) -> Result<f64> {
        self.mu.get(ell).copied().ok_or_else(|| {
            Error::invalid(format!(
                "degree {ell} beyond spectrum range {}",
                self.l_max()
            ))
        })
    }
}

/// Ascending eigenvalues of P^{1/2} H P^{1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedSpectrum {
    pub eigenvalues: Vec<f64>,
    pub operator: String,
}

impl GeneralizedSpectrum {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty")
    }
}

/// Spectrum of H∞P via the similar symmetric matrix P^{1/2}HP^{1/2}
/// (or LᵀHL for a Cholesky factor P = LLᵀ).
pub fn spectrum_hp(h: &KernelMatrix, p: &LossOperator) -> Result<GeneralizedSpectrum> {
    let n = h.n();
    if p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.n(),
        });
    }
    let sym = match p {
        LossOperator::ScaledIdentity { alpha, .. } => h.entries() * *alpha,
        LossOperator::Diagonal { c } => {
            let s: Vec<f64> = c.iter().map(|x| x.sqrt()).collect();
            DMatrix::from_fn(n, n, |i, j| s[i] * h.entries()[(i, j)] * s[j])
        }
        LossOperator::Sobolev(op) => {
            if !op.is_certified_spd() {
                return Err(Error::invalid(
                    "spectrum of H∞P requires a positive definite loss operator",
                ));
            }
            let l = op
                .assemble_dense()
                .cholesky()
                .ok_or_else(|| Error::NotPositiveDefinite("Cholesky of P_s failed".into()))?
                .l();
            l.transpose() * h.entries() * l
        }
    };
    let eigenvalues = sym_eigenvalues(sym);
    if !(eigenvalues[0] > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue of H∞P is {}",
            eigenvalues[0]
        )));
    }
    Ok(GeneralizedSpectrum {
        eigenvalues,
        operator: p.describe(),
    })
}

/// Largest eigenvalue of HP by power iteration in the P-inner product.
/// Works for semidefinite P.
pub fn largest_eigenvalue_hp(h: &KernelMatrix, p: &LossOperator) -> Result<f64> {
    let n = h.n();
    let mut v = vec![1.0; n];
    for (i, x) in v.iter_mut().enumerate() {
        *x += 0.01 * ((i as f64) * 0.7).sin();
    }
    let mut lambda = 0.0;
    for it in 0..5000 {
        let pv = p.apply(&v);
        let w = h.mul_vec(&pv);
        let pw = p.apply(&w);
        let num: f64 = w.iter().zip(&pv).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().zip(&pv).map(|(a, b)| a * b).sum();
        if den <= 0.0 {
            return Err(Error::NoConvergence(
                "start vector lies in the kernel of P".into(),
            ));
        }
        let new = num / den;
        let norm: f64 = w.iter().zip(&pw).map(|(a, b)| a * b).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
        if it > 5 && (new - lambda).abs() <= 1e-12 * new.abs() {
            return Ok(new);
        }
        lambda = new;
    }
    Ok(lambda)
}
