//! Frequency-resolved errors, kernel-regime residual prediction, rate fits, and
//! quadrature error budgets.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::harmonics::{
    basis_matrix, flat_degrees, project, surface_area, HarmonicExpansion, HarmonicIndex,
};
use crate::ntk::{build_h_infinity, KernelMatrix, KernelSpectrum};
use crate::numerics::linear_fit;
use crate::quadrature::{equispaced_nodes, QuadratureRule};
use crate::sphere::SpherePointSet;
use crate::trainer::{LossOperator, Observer, TrainingTrace, TwoLayerReluNet};

/// One column of a frequency report: degree ℓ and, on S², the order index p
/// (p = 0 on S¹, where the value is a complex Fourier magnitude).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrequencyLabel {
    pub ell: usize,
    pub p: usize,
}

/// Frequency losses per recorded epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyLossReport {
    pub labels: Vec<FrequencyLabel>,
    pub epochs: Vec<usize>,
    /// `values[e][k]` belongs to `epochs[e]` and `labels[k]`.
    pub values: Vec<Vec<f64>>,
}

impl FrequencyLossReport {
    /// Reassembles a report from the observed columns of a trace.
    /// `offset` skips values contributed by earlier observers.
    pub fn from_trace(
        trace: &TrainingTrace,
        labels: Vec<FrequencyLabel>,
        offset: usize,
    ) -> Result<Self> {
        let mut epochs = Vec::with_capacity(trace.records.len());
        let mut values = Vec::with_capacity(trace.records.len());
        for r in &trace.records {
            let row = r
                .observed
                .get(offset..offset + labels.len())
                .ok_or_else(|| Error::invalid("trace has fewer observed values than labels"))?;
            epochs.push(r.epoch);
            values.push(row.to_vec());
        }
        Ok(Self {
            labels,
            epochs,
            values,
        })
    }

    pub fn column_index(&self, label: FrequencyLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn series(&self, label: FrequencyLabel) -> Option<Vec<f64>> {
        let k = self.column_index(label)?;
        Some(self.values.iter().map(|row| row[k]).collect())
    }

    /// First recorded epoch at which the value drops to `fraction` of its
    /// initial value; `None` if that never happens within the trace.
    pub fn epochs_to_fraction(&self, label: FrequencyLabel, fraction: f64) -> Option<usize> {
        let k = self.column_index(label)?;
        let first = self.values.first()?[k];
        self.epochs
            .iter()
            .zip(&self.values)
            .find(|(_, row)| row[k] <= fraction * first)
            .map(|(&e, _)| e)
    }

    /// `epoch,ell,value` on S¹ and `epoch,ell,p,value` on S².
    pub fn to_csv(&self, with_order: bool) -> String {
        let mut s = String::from(if with_order {
            "epoch,ell,p,value\n"
        } else {
            "epoch,ell,value\n"
        });
        for (e, row) in self.epochs.iter().zip(&self.values) {
            for (l, v) in self.labels.iter().zip(row) {
                if with_order {
                    let _ = writeln!(s, "{e},{},{},{v:e}", l.ell, l.p);
                } else {
                    let _ = writeln!(s, "{e},{},{v:e}", l.ell);
                }
            }
        }
        s
    }
}

/// Complex Fourier coefficients ĝ(ℓ), ℓ = 0..=cap, of an S¹ expansion under
/// the convention g(θ) = Σ_ℓ ĝ(ℓ) e^{iℓθ} (ℓ ∈ ℤ).
pub fn fourier_coefficients(target: &HarmonicExpansion, cap: usize) -> Result<Vec<Complex<f64>>> {
    if target.dim() != 2 {
        return Err(Error::invalid("Fourier coefficients need an S¹ expansion"));
    }
    let top = target.max_degree();
    let mut out = vec![Complex::new(0.0, 0.0); cap + 1];
    out[0] = Complex::new(target.coeffs()[0] / (2.0 * PI).sqrt(), 0.0);
    let s = 2.0 * PI.sqrt();
    for (ell, slot) in out.iter_mut().enumerate().skip(1) {
        if ell > top {
            break;
        }
        let c = target.degree_coeffs(ell);
        // c[0] multiplies sin(ℓθ)/√π, c[1] multiplies cos(ℓθ)/√π
        *slot = Complex::new(c[1] / s, -c[0] / s);
    }
    Ok(out)
}

/// Evaluates |N̂(ℓ) − ĝ(ℓ)| on S¹ from a uniform grid of θ values.
pub struct S1FrequencyLoss {
    grid: SpherePointSet,
    fft: Arc<dyn Fft<f64>>,
    target: Vec<Complex<f64>>,
    cap: usize,
}

impl std::fmt::Debug for S1FrequencyLoss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("S1FrequencyLoss")
            .field("grid_n", &self.grid.len())
            .field("cap", &self.cap)
            .finish()
    }
}

impl S1FrequencyLoss {
    pub fn new(target: &HarmonicExpansion, grid_n: usize, cap: usize) -> Result<Self> {
        if grid_n <= 2 * cap {
            return Err(Error::invalid(format!(
                "invalid grid: {grid_n} samples alias frequencies up to {cap}"
            )));
        }
        if target.max_degree() > cap {
            log::warn!(
                "target degree {} exceeds the reported cap {cap}",
                target.max_degree()
            );
        }
        Ok(Self {
            grid: equispaced_nodes(grid_n)?,
            fft: FftPlanner::new().plan_fft_forward(grid_n),
            target: fourier_coefficients(target, cap)?,
            cap,
        })
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn labels(&self) -> Vec<FrequencyLabel> {
        (0..=self.cap)
            .map(|ell| FrequencyLabel { ell, p: 0 })
            .collect()
    }

    /// |N̂(ℓ) − ĝ(ℓ)| for ℓ = 0..=cap, with the DFT normalized by 1/grid_n.
    pub fn evaluate(&self, net: &TwoLayerReluNet) -> Result<Vec<f64>> {
        let u = net.forward_batch(&self.grid)?;
        self.evaluate_samples(&u)
    }

    pub fn evaluate_samples(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.len();
        if samples.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: samples.len(),
            });
        }
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft.process(&mut buf);
        let inv = 1.0 / n as f64;
        Ok((0..=self.cap)
            .map(|ell| (buf[ell] * inv - self.target[ell]).norm())
            .collect())
    }
}

pub fn frequency_loss_s1(
    net: &TwoLayerReluNet,
    target: &HarmonicExpansion,
    grid_n: usize,
    cap: usize,
) -> Result<Vec<f64>> {
    S1FrequencyLoss::new(target, grid_n, cap)?.evaluate(net)
}

/// |N̂_{ℓ,p} − ĝ_{ℓ,p}| for every (ℓ, p) with ℓ ≤ ℓ_max, in flat order.
///
/// Both the network and the target samples are projected through the same
/// rule, so quadrature error common to both cancels.
pub fn frequency_loss_sphere(
    net: &TwoLayerReluNet,
    target: &HarmonicExpansion,
    rule: &QuadratureRule,
    l_max: usize,
) -> Result<Vec<f64>> {
    let nodes = rule.nodes();
    let u = net.forward_batch(nodes)?;
    let g = target.sample(nodes)?;
    let pn = project(&u, rule, l_max)?;
    let pg = project(&g, rule, l_max)?;
    Ok(pn
        .coeffs()
        .iter()
        .zip(pg.coeffs())
        .map(|(a, b)| (a - b).abs())
        .collect())
}

/// Tracks when selected columns first fall to half their initial value.
#[derive(Debug, Clone, Default)]
struct HalfTracker {
    watch: Vec<usize>,
    initial: Vec<f64>,
    reached: Vec<Option<usize>>,
}

impl HalfTracker {
    fn new(watch: Vec<usize>) -> Self {
        let k = watch.len();
        Self {
            watch,
            initial: Vec::new(),
            reached: vec![None; k],
        }
    }

    fn update(&mut self, epoch: usize, values: &[f64]) {
        if self.initial.is_empty() {
            self.initial = self.watch.iter().map(|&k| values[k]).collect();
            return;
        }
        for (j, &k) in self.watch.iter().enumerate() {
            if self.reached[j].is_none() && values[k] <= 0.5 * self.initial[j] {
                self.reached[j] = Some(epoch);
            }
        }
    }

    fn done(&self) -> bool {
        !self.watch.is_empty() && self.reached.iter().all(Option::is_some)
    }
}

/// Records the S¹ frequency loss of the network; optionally stops training
/// once every watched frequency has halved.
#[derive(Debug)]
pub struct S1FrequencyObserver {
    loss: S1FrequencyLoss,
    tracker: HalfTracker,
    stop_when_halved: bool,
}

impl S1FrequencyObserver {
    pub fn new(loss: S1FrequencyLoss) -> Self {
        Self {
            loss,
            tracker: HalfTracker::default(),
            stop_when_halved: false,
        }
    }

    /// Watches the listed degrees and ends training once all have halved.
    pub fn stop_when_halved(mut self, degrees: &[usize]) -> Result<Self> {
        if let Some(&bad) = degrees.iter().find(|&&l| l > self.loss.cap) {
            return Err(Error::invalid(format!(
                "degree {bad} exceeds the cap {}",
                self.loss.cap
            )));
        }
        self.tracker = HalfTracker::new(degrees.to_vec());
        self.stop_when_halved = true;
        Ok(self)
    }

    pub fn labels(&self) -> Vec<FrequencyLabel> {
        self.loss.labels()
    }

    /// Epoch at which each watched degree halved, in watch order.
    pub fn half_epochs(&self) -> Vec<Option<usize>> {
        self.tracker.reached.clone()
    }
}

impl Observer for S1FrequencyObserver {
    fn width(&self) -> usize {
        self.loss.cap + 1
    }

    fn observe(
        &mut self,
        epoch: usize,
        net: &TwoLayerReluNet,
        _residual: &[f64],
    ) -> Result<Vec<f64>> {
        let v = self.loss.evaluate(net)?;
        self.tracker.update(epoch, &v);
        Ok(v)
    }

    fn done(&self) -> bool {
        self.stop_when_halved && self.tracker.done()
    }
}

/// Records |N̂_{ℓ,p} − ĝ_{ℓ,p}| for selected harmonics on S², computed from
/// the training residual: with both sides projected through the same rule the
/// difference is −Σ_i c_i Y_{ℓ,p}(x_i) z_i.
#[derive(Debug, Clone)]
pub struct SphereFrequencyObserver {
    labels: Vec<FrequencyLabel>,
    rows: Vec<Vec<f64>>,
    tracker: HalfTracker,
    stop_when_halved: bool,
}

impl SphereFrequencyObserver {
    pub fn new(rule: &QuadratureRule, harmonics: &[HarmonicIndex]) -> Result<Self> {
        let d = rule.nodes().dim();
        let top = harmonics.iter().map(|h| h.degree).max().unwrap_or(0);
        if top > rule.certified_degree() {
            log::warn!(
                "projecting degree {top} beyond the rule's certified degree {}",
                rule.certified_degree()
            );
        }
        let basis = basis_matrix(rule.nodes(), top)?;
        let mut rows = Vec::with_capacity(harmonics.len());
        let mut labels = Vec::with_capacity(harmonics.len());
        for h in harmonics {
            let k = HarmonicIndex::new(d, h.degree, h.order)?.flat(d);
            rows.push(
                basis
                    .row(k)
                    .iter()
                    .zip(rule.weights())
                    .map(|(y, c)| y * c)
                    .collect(),
            );
            labels.push(FrequencyLabel {
                ell: h.degree,
                p: h.order,
            });
        }
        Ok(Self {
            labels,
            rows,
            tracker: HalfTracker::default(),
            stop_when_halved: false,
        })
    }

    /// Ends training once every tracked harmonic has halved.
    pub fn stop_when_halved(mut self) -> Self {
        self.tracker = HalfTracker::new((0..self.labels.len()).collect());
        self.stop_when_halved = true;
        self
    }

    pub fn labels(&self) -> Vec<FrequencyLabel> {
        self.labels.clone()
    }

    pub fn half_epochs(&self) -> Vec<Option<usize>> {
        self.tracker.reached.clone()
    }
}

impl Observer for SphereFrequencyObserver {
    fn width(&self) -> usize {
        self.rows.len()
    }

    fn observe(
        &mut self,
        epoch: usize,
        _net: &TwoLayerReluNet,
        residual: &[f64],
    ) -> Result<Vec<f64>> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .map(|a| {
                a.iter()
                    .zip(residual)
                    .map(|(a, z)| a * z)
                    .sum::<f64>()
                    .abs()
            })
            .collect();
        if self.stop_when_halved {
            self.tracker.update(epoch, &v);
        }
        Ok(v)
    }

    fn done(&self) -> bool {
        self.stop_when_halved && self.tracker.done()
    }
}

/// Kernel-regime residuals (I − 2ηH∞P)^k y at the requested k.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPrediction {
    pub eta: f64,
    pub ks: Vec<usize>,
    pub residuals: Vec<Vec<f64>>,
    /// (ℓ, 1 − 2ημ_ℓ(1+ℓ)^{2s}) when attached.
    pub rates: Vec<(usize, f64)>,
}

impl ResidualPrediction {
    pub fn at(&self, k: usize) -> Option<&[f64]> {
        self.ks
            .iter()
            .position(|&j| j == k)
            .map(|i| self.residuals[i].as_slice())
    }

    /// Adds per-degree rates from a spectrum (s = 0 for the quadrature loss).
    pub fn attach_rates(&mut self, spec: &KernelSpectrum, s: f64) -> Result<()> {
        self.rates = (0..=spec.l_max())
            .map(|l| Ok((l, crate::sobolev::theoretical_rate(l, self.eta, s, spec)?)))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// `k,i,z_pred`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,i,z_pred\n");
        for (k, z) in self.ks.iter().zip(&self.residuals) {
            for (i, v) in z.iter().enumerate() {
                let _ = writeln!(s, "{k},{i},{v:e}");
            }
        }
        s
    }
}

pub fn predict_residual(
    h: &KernelMatrix,
    p: &LossOperator,
    y: &[f64],
    eta: f64,
    ks: &[usize],
) -> Result<ResidualPrediction> {
    if !(eta > 0.0) {
        return Err(Error::invalid("step size must be positive"));
    }
    let n = h.n();
    if y.len() != n || p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if y.len() != n { y.len() } else { p.n() },
        });
    }
    let mut order: Vec<usize> = ks.to_vec();
    order.sort_unstable();
    order.dedup();
    let mut residuals = Vec::with_capacity(order.len());
    let mut z = DVector::from_column_slice(y);
    let mut k = 0;
    for &target in &order {
        while k < target {
            let pz = DVector::from_vec(p.apply(z.as_slice()));
            let hpz = h.entries() * pz;
            z.axpy(-2.0 * eta, &hpz, 1.0);
            k += 1;
        }
        residuals.push(z.as_slice().to_vec());
    }
    Ok(ResidualPrediction {
        eta,
        ks: order,
        residuals,
        rates: Vec::new(),
    })
}

/// ε(k) = ‖z_observed(k) − z_predicted(k)‖_P for every predicted k.
pub fn compare_trace(
    trace: &TrainingTrace,
    prediction: &ResidualPrediction,
    p: &LossOperator,
) -> Result<Vec<(usize, f64)>> {
    prediction
        .ks
        .iter()
        .zip(&prediction.residuals)
        .map(|(&k, zp)| {
            let rec = trace.record_at(k).ok_or_else(|| {
                Error::invalid(format!("epoch mismatch: trace has no record at {k}"))
            })?;
            let zo = rec.residual.as_ref().ok_or_else(|| {
                Error::invalid(format!("epoch mismatch: no residual stored at {k}"))
            })?;
            if zo.len() != zp.len() {
                return Err(Error::DimensionMismatch {
                    expected: zp.len(),
                    got: zo.len(),
                });
            }
            let diff: Vec<f64> = zo.iter().zip(zp).map(|(a, b)| a - b).collect();
            Ok((k, p.norm(&diff)))
        })
        .collect()
}

/// ⟨z, v⟩_c / ‖v‖²_c.
pub fn weighted_projection(z: &[f64], v: &[f64], c: &[f64]) -> Result<f64> {
    if z.len() != v.len() || c.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: if z.len() != v.len() { z.len() } else { c.len() },
        });
    }
    let num: f64 = z.iter().zip(v).zip(c).map(|((a, b), w)| a * b * w).sum();
    let den: f64 = v.iter().zip(c).map(|(b, w)| b * b * w).sum();
    if den == 0.0 {
        return Err(Error::invalid("projection onto a zero vector"));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares slope of log(iterations) against log(ℓ).
pub fn fit_iteration_scaling(ells: &[usize], iterations: &[f64]) -> Result<ScalingFit> {
    if ells.len() != iterations.len() {
        return Err(Error::DimensionMismatch {
            expected: ells.len(),
            got: iterations.len(),
        });
    }
    if ells.len() < 3 {
        return Err(Error::invalid("scaling fit needs at least 3 frequencies"));
    }
    if ells.iter().any(|&l| l == 0) || iterations.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::invalid(
            "scaling fit needs positive degrees and counts",
        ));
    }
    let x: Vec<f64> = ells.iter().map(|&l| (l as f64).ln()).collect();
    let y: Vec<f64> = iterations.iter().map(|v| v.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&x, &y)?;
    Ok(ScalingFit {
        slope,
        intercept,
        residual,
    })
}

/// Quadrature error terms and the resulting bounds on ε₁(k) and ε₂.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonBounds {
    /// e^c_{j,ℓ} = E_c(g_j g_ℓ).
    pub e_c: DMatrix<f64>,
    /// max_i |e^d_{i,ℓ}| with e^d_{i,ℓ} = E_c(K∞(x_i, ·) g_ℓ).
    pub e_d_max: Vec<f64>,
    /// (k, |Σ_{j,ℓ} (1−2ημ_j)^k (1−2ημ_ℓ)^k e^c_{j,ℓ}|).
    pub eps1: Vec<(usize, f64)>,
    /// Σ_ℓ √A_d / μ_ℓ · max_i |e^d_{i,ℓ}|.
    pub eps2: f64,
}

/// e^d_{i,ℓ} = μ_ℓ g_ℓ(x_i) − (H∞ D_c g_ℓ)_i for every node.
pub fn funk_hecke_errors(
    h: &KernelMatrix,
    rule: &QuadratureRule,
    samples: &[f64],
    mu: f64,
) -> Result<Vec<f64>> {
    let n = rule.len();
    if samples.len() != n || h.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if samples.len() != n {
                samples.len()
            } else {
                h.n()
            },
        });
    }
    let cg: Vec<f64> = samples
        .iter()
        .zip(rule.weights())
        .map(|(g, c)| g * c)
        .collect();
    let hg = h.mul_vec(&cg);
    Ok(samples.iter().zip(&hg).map(|(g, v)| mu * g - v).collect())
}

pub fn epsilon_decomposition(
    rule: &QuadratureRule,
    target: &HarmonicExpansion,
    spec: &KernelSpectrum,
    eta: f64,
    ks: &[usize],
) -> Result<EpsilonBounds> {
    let nodes = rule.nodes();
    let d = nodes.dim();
    if target.dim() != d || spec.d != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if target.dim() != d {
                target.dim()
            } else {
                spec.d
            },
        });
    }
    let big_l = target.max_degree();
    if big_l > spec.l_max() {
        return Err(Error::invalid(format!(
            "spectrum covers degrees up to {}, target needs {big_l}",
            spec.l_max()
        )));
    }
    let comps: Vec<Vec<f64>> = (0..=big_l)
        .map(|l| target.component(l).sample(nodes))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = (0..=big_l).map(|l| target.component(l).norm_sq()).collect();
    let c = rule.weights();
    let mut e_c = DMatrix::zeros(big_l + 1, big_l + 1);
    for j in 0..=big_l {
        for l in j..=big_l {
            let q: f64 = comps[j]
                .iter()
                .zip(&comps[l])
                .zip(c)
                .map(|((a, b), w)| a * b * w)
                .sum();
            let exact = if j == l { norms[l] } else { 0.0 };
            e_c[(j, l)] = exact - q;
            e_c[(l, j)] = exact - q;
        }
    }
    let h = build_h_infinity(nodes)?;
    let mut e_d_max = Vec::with_capacity(big_l + 1);
    let mut eps2 = 0.0;
    let sqrt_area = surface_area(d)?.sqrt();
    for l in 0..=big_l {
        let mu = spec.get(l)?;
        let m = if norms[l] == 0.0 {
            0.0
        } else {
            funk_hecke_errors(&h, rule, &comps[l], mu)?
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
        };
        eps2 += sqrt_area / mu * m;
        e_d_max.push(m);
    }
    let eps1 = ks
        .iter()
        .map(|&k| {
            let r: Vec<f64> = (0..=big_l)
                .map(|l| Ok((1.0 - 2.0 * eta * spec.get(l)?).powi(k as i32)))
                .collect::<Result<_>>()?;
            let mut s = 0.0;
            for j in 0..=big_l {
                for l in 0..=big_l {
                    s += r[j] * r[l] * e_c[(j, l)];
                }
            }
            Ok((k, s.abs()))
        })
        .collect::<Result<_>>()?;
    Ok(EpsilonBounds {
        e_c,
        e_d_max,
        eps1,
        eps2,
    })
}

/// Degree of every flat coefficient, for labelling S² reports.
pub fn sphere_labels(l_max: usize) -> Result<Vec<FrequencyLabel>> {
    let degrees = flat_degrees(3, l_max)?;
    let mut out = Vec::with_capacity(degrees.len());
    let mut prev = usize::MAX;
    let mut p = 0;
    for l in degrees {
        if l != prev {
            prev = l;
            p = 1;
        } else {
            p += 1;
        }
        out.push(FrequencyLabel { ell: l, p });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::{init_net, InitScheme};

    #[test]
    fn sine_sum_magnitudes_are_half() {
        let net = init_net(8, 2, 1.0, 0, InitScheme::Antithetic).unwrap();
        let g = HarmonicExpansion::sine_sum(9);
        let v = frequency_loss_s1(&net, &g, 100, 30).unwrap();
        assert_eq!(v.len(), 31);
        assert!(v[0].abs() < 1e-15);
        for (l, x) in v.iter().enumerate() {
            let want = if (1..=9).contains(&l) { 0.5 } else { 0.0 };
            assert!((x - want).abs() < 1e-14, "ell {l}: {x}");
        }
    }

    #[test]
    fn grid_must_resolve_cap() {
        let g = HarmonicExpansion::sine_sum(3);
        assert!(S1FrequencyLoss::new(&g, 60, 30).is_err());
        assert!(S1FrequencyLoss::new(&g, 61, 30).is_ok());
    }

    #[test]
    fn scaling_fit_on_synthetic_counts() {
        let ells = [3usize, 4, 5, 6, 7];
        let sq: Vec<f64> = ells.iter().map(|&l| 7.0 * (l * l) as f64).collect();
        assert!((fit_iteration_scaling(&ells, &sq).unwrap().slope - 2.0).abs() < 1e-12);
        let flat = vec![10.0; 5];
        assert!(fit_iteration_scaling(&ells, &flat).unwrap().slope.abs() < 1e-12);
        assert!(fit_iteration_scaling(&ells[..2], &sq[..2]).is_err());
    }

    #[test]
    fn sphere_labels_follow_flat_order() {
        let l = sphere_labels(2).unwrap();
        assert_eq!(l.len(), 9);
        assert_eq!(l[0], FrequencyLabel { ell: 0, p: 1 });
        assert_eq!(l[3], FrequencyLabel { ell: 1, p: 3 });
        assert_eq!(l[8], FrequencyLabel { ell: 2, p: 5 });
    }
}
