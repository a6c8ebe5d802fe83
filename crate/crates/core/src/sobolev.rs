//! Sobolev-weighted losses: the spherical operator P_s and the image mask S_s.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::harmonics::{basis_matrix, flat_degrees, space_dim};
use crate::ntk::KernelSpectrum;
use crate::numerics::sym_eigenvalues;
use crate::quadrature::QuadratureRule;

/// P_s = Σ_{ℓ ≤ ℓ_max} (1+ℓ)^{2s} Σ_p a_{ℓ,p} a_{ℓ,p}ᵀ with (a_{ℓ,p})_i = c_i Y_{ℓ,p}(x_i),
/// held as its factors.
#[derive(Debug, Clone)]
pub struct SobolevOperator {
    s: f64,
    l_max: usize,
    n: usize,
    /// Row k is a_k.
    factors: DMatrix<f64>,
    omega: Vec<f64>,
    lambda_max: f64,
    min_eigenvalue: Option<f64>,
}

fn factors(rule: &QuadratureRule, s: f64, l_max: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let mut a = basis_matrix(rule.nodes(), l_max)?;
    for (i, c) in rule.weights().iter().enumerate() {
        a.column_mut(i).scale_mut(*c);
    }
    let omega = flat_degrees(rule.nodes().dim(), l_max)?
        .into_iter()
        .map(|l| (1.0 + l as f64).powf(2.0 * s))
        .collect();
    Ok((a, omega))
}

fn gram_lambda_max(a: &DMatrix<f64>, omega: &[f64]) -> f64 {
    let k = a.nrows();
    let mut b = a.clone();
    for r in 0..k {
        b.row_mut(r).scale_mut(omega[r].sqrt());
    }
    let g = &b * b.transpose();
    *sym_eigenvalues(g).last().expect("k >= 1")
}

/// Builds P_s and certifies that it is positive definite.
pub fn build_p_sobolev(rule: &QuadratureRule, s: f64, l_max: usize) -> Result<SobolevOperator> {
    let d = rule.nodes().dim();
    let n = rule.len();
    let k = space_dim(d, l_max)?;
    if k < n {
        log::warn!("harmonic space of dimension {k} is smaller than n = {n}");
        return Err(Error::DegenerateOperator(format!(
            "rank of P_s is at most {k} < n = {n}; smallest eigenvalue is 0"
        )));
    }
    let (factors, omega) = factors(rule, s, l_max)?;
    let mut op = SobolevOperator {
        s,
        l_max,
        n,
        lambda_max: gram_lambda_max(&factors, &omega),
        factors,
        omega,
        min_eigenvalue: None,
    };
    let dense = op.assemble_dense();
    let trace = dense.trace();
    let ev = sym_eigenvalues(dense);
    let min = ev[0];
    if !(min > 1e-12 * trace / n as f64) {
        return Err(Error::DegenerateOperator(format!(
            "smallest eigenvalue {min:e} of P_s is not positive"
        )));
    }
    op.min_eigenvalue = Some(min);
    Ok(op)
}

/// Builds P_s without requiring positive definiteness. When the harmonic space
/// is smaller than n the operator is only semidefinite: residual components
/// outside the span of the a_{ℓ,p} carry no loss.
pub fn build_p_sobolev_semidefinite(
    rule: &QuadratureRule,
    s: f64,
    l_max: usize,
) -> Result<SobolevOperator> {
    let (factors, omega) = factors(rule, s, l_max)?;
    Ok(SobolevOperator {
        s,
        l_max,
        n: rule.len(),
        lambda_max: gram_lambda_max(&factors, &omega),
        factors,
        omega,
        min_eigenvalue: None,
    })
}

impl SobolevOperator {
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank_bound(&self) -> usize {
        self.factors.nrows()
    }

    pub fn is_certified_spd(&self) -> bool {
        self.min_eigenvalue.is_some()
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.min_eigenvalue
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn factor_matrix(&self) -> &DMatrix<f64> {
        &self.factors
    }

    pub fn weights(&self) -> &[f64] {
        &self.omega
    }

    /// Coefficients a_kᵀv for every factor.
    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        (&self.factors * v).iter().copied().collect()
    }

    /// P_s v without forming P_s.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must equal n");
        let mut t = &self.factors * DVector::from_column_slice(v);
        for (x, w) in t.iter_mut().zip(&self.omega) {
            *x *= w;
        }
        self.factors.tr_mul(&t).iter().copied().collect()
    }

    pub fn try_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(self.apply(v))
    }

    /// vᵀ P_s v = Σ ω_k (a_kᵀv)².
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.coefficients(v)
            .iter()
            .zip(&self.omega)
            .map(|(t, w)| w * t * t)
            .sum()
    }

    /// Dense n×n matrix, for certification and small oracles.
    pub fn assemble_dense(&self) -> DMatrix<f64> {
        let mut scaled = self.factors.clone();
        for r in 0..scaled.nrows() {
            scaled.row_mut(r).scale_mut(self.omega[r]);
        }
        self.factors.tr_mul(&scaled)
    }
}

/// 1 − 2η μ_ℓ (1+ℓ)^{2s}.
pub fn theoretical_rate(ell: usize, eta: f64, s: f64, spec: &KernelSpectrum) -> Result<f64> {
    let mu = spec.get(ell)?;
    let r = 1.0 - 2.0 * eta * mu * (1.0 + ell as f64).powf(2.0 * s);
    if r <= 0.0 {
        log::warn!("rate for degree {ell} at s = {s} is {r}, outside (0, 1)");
    }
    Ok(r)
}

/// A real image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != h * w || h == 0 || w == 0 {
            return Err(Error::invalid("image data length does not match its shape"));
        }
        Ok(Self { h, w, data })
    }

    pub fn zeros(h: usize, w: usize) -> Self {
        Self {
            h,
            w,
            data: vec![0.0; h * w],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.data.chunks_exact(self.w) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

/// Signed frequency of DFT index j for length n, in −⌊n/2⌋..⌈n/2⌉−1.
pub fn centered_frequency(j: usize, n: usize) -> i64 {
    if j < n.div_ceil(2) {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// S_{jk} = (1 + f_j² + f_k²)^{s/2} on centered frequencies.
#[derive(Clone)]
pub struct ImageSobolevMask {
    pub h: usize,
    pub w: usize,
    pub s: f64,
    mask: Vec<f64>,
    row_fft: Arc<dyn Fft<f64>>,
    col_fft: Arc<dyn Fft<f64>>,
    row_ifft: Arc<dyn Fft<f64>>,
    col_ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for ImageSobolevMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImageSobolevMask")
            .field("h", &self.h)
            .field("w", &self.w)
            .field("s", &self.s)
            .finish()
    }
}

pub fn build_image_mask(h: usize, w: usize, s: f64) -> Result<ImageSobolevMask> {
    if h == 0 || w == 0 {
        return Err(Error::invalid("image dimensions must be positive"));
    }
    let mut mask = Vec::with_capacity(h * w);
    for j in 0..h {
        let fj = centered_frequency(j, h) as f64;
        for k in 0..w {
            let fk = centered_frequency(k, w) as f64;
            mask.push(if s == 0.0 {
                1.0
            } else {
                (1.0 + fj * fj + fk * fk).powf(s / 2.0)
            });
        }
    }
    let mut planner = FftPlanner::new();
    Ok(ImageSobolevMask {
        h,
        w,
        s,
        mask,
        row_fft: planner.plan_fft_forward(w),
        col_fft: planner.plan_fft_forward(h),
        row_ifft: planner.plan_fft_inverse(w),
        col_ifft: planner.plan_fft_inverse(h),
    })
}

impl ImageSobolevMask {
    pub fn values(&self) -> &[f64] {
        &self.mask
    }

    /// Mask value at signed frequencies (f_row, f_col).
    pub fn at_frequency(&self, fr: i64, fc: i64) -> f64 {
        let j = fr.rem_euclid(self.h as i64) as usize;
        let k = fc.rem_euclid(self.w as i64) as usize;
        self.mask[j * self.w + k]
    }

    fn transform(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (rf, cf) = if inverse {
            (&self.row_ifft, &self.col_ifft)
        } else {
            (&self.row_fft, &self.col_fft)
        };
        for row in buf.chunks_exact_mut(self.w) {
            rf.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); self.h];
        for k in 0..self.w {
            for j in 0..self.h {
                col[j] = buf[j * self.w + k];
            }
            cf.process(&mut col);
            for j in 0..self.h {
                buf[j * self.w + k] = col[j];
            }
        }
        let scale = 1.0 / ((self.h * self.w) as f64).sqrt();
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    /// Unitary 2-D DFT of a real image.
    pub fn dft(&self, img: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = img.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Real part of the unitary inverse 2-D DFT.
    pub fn idft_real(&self, spectrum: &[Complex<f64>]) -> Result<Vec<f64>> {
        self.check(spectrum.len())?;
        let mut buf = spectrum.to_vec();
        self.transform(&mut buf, true);
        Ok(buf.iter().map(|z| z.re).collect())
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.h * self.w {
            return Err(Error::DimensionMismatch {
                expected: self.h * self.w,
                got: len,
            });
        }
        Ok(())
    }

    /// ½‖S ∘ F r‖² for a residual image r.
    pub fn residual_loss(&self, r: &[f64]) -> Result<f64> {
        self.check(r.len())?;
        let f = self.dft(r);
        Ok(0.5
            * f.iter()
                .zip(&self.mask)
                .map(|(z, m)| m * m * z.norm_sqr())
                .sum::<f64>())
    }

    /// Loss and its gradient Re F^H(S² ∘ F r) with respect to r.
    pub fn residual_loss_grad(&self, r: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(r.len())?;
        let mut f = self.dft(r);
        let mut loss = 0.0;
        for (z, m) in f.iter_mut().zip(&self.mask) {
            let m2 = m * m;
            loss += m2 * z.norm_sqr();
            *z *= m2;
        }
        self.transform(&mut f, true);
        Ok((0.5 * loss, f.iter().map(|z| z.re).collect()))
    }
}

/// ½‖S_s ∘ DFT2(pred − target)‖²_F with a unitary DFT.
pub fn image_sobolev_loss(pred: &Image, target: &Image, mask: &ImageSobolevMask) -> Result<f64> {
    if pred.h != mask.h || pred.w != mask.w || target.h != mask.h || target.w != mask.w {
        return Err(Error::invalid("image shapes do not match the mask"));
    }
    let r: Vec<f64> = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(a, b)| a - b)
        .collect();
    mask.residual_loss(&r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_examples() {
        let m = build_image_mask(4, 4, 0.0).unwrap();
        assert!(m.values().iter().all(|&v| v == 1.0));
        let m = build_image_mask(4, 4, 2.0).unwrap();
        assert!((m.at_frequency(1, 1) - 3.0).abs() < 1e-15);
        assert_eq!(m.at_frequency(0, 0), 1.0);
        let m = build_image_mask(5, 6, 1.3).unwrap();
        for fr in -2..=2 {
            for fc in -2..=2 {
                assert_eq!(m.at_frequency(fr, fc), m.at_frequency(-fr, -fc));
            }
        }
    }

    #[test]
    fn centered_range() {
        let f: Vec<i64> = (0..5).map(|j| centered_frequency(j, 5)).collect();
        assert_eq!(f, vec![0, 1, 2, -2, -1]);
        let f: Vec<i64> = (0..4).map(|j| centered_frequency(j, 4)).collect();
        assert_eq!(f, vec![0, 1, -2, -1]);
    }

    #[test]
    fn high_frequency_difference_weighs_more_for_positive_s() {
        let (h, w) = (8, 8);
        let data: Vec<f64> = (0..h * w)
            .map(|i| if (i / w + i % w) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let img = Image::new(h, w, data).unwrap();
        let zero = Image::zeros(h, w);
        let lp = image_sobolev_loss(&img, &zero, &build_image_mask(h, w, 1.0).unwrap()).unwrap();
        let ln = image_sobolev_loss(&img, &zero, &build_image_mask(h, w, -1.0).unwrap()).unwrap();
        assert!(lp > ln);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = build_image_mask(5, 4, 1.5).unwrap();
        let r: Vec<f64> = (0..20).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let (_, g) = m.residual_loss_grad(&r).unwrap();
        let h = 1e-6;
        for i in 0..20 {
            let mut rp = r.clone();
            rp[i] += h;
            let mut rm = r.clone();
            rm[i] -= h;
            let fd = (m.residual_loss(&rp).unwrap() - m.residual_loss(&rm).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()));
        }
    }
}
