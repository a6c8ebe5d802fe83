//! The two-layer ReLU network, the structured loss, and full-batch gradient descent.

mod loss;
mod net;

pub use loss::{loss, m_constants, max_step_size, LossOperator};
pub use net::{init_net, Gradient, InitScheme, TwoLayerReluNet};

use crate::error::{Error, Result};
use crate::sphere::SpherePointSet;

/// Step size, budget, and initialization knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub eta: f64,
    pub epochs: usize,
    pub kappa: f64,
    pub seed: u64,
    pub scheme: InitScheme,
    pub record_stride: usize,
    pub record_residuals: bool,
    pub track_sign_flips: bool,
}

impl TrainConfig {
    pub fn new(eta: f64, epochs: usize) -> Self {
        Self {
            eta,
            epochs,
            kappa: 1e-2,
            seed: 0,
            scheme: InitScheme::Gaussian,
            record_stride: 1,
            record_residuals: false,
            track_sign_flips: false,
        }
    }

    pub fn init_net(&self, m: usize, d: usize) -> Result<TwoLayerReluNet> {
        init_net(m, d, self.kappa, self.seed, self.scheme)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid(format!(
                "step size {} is not a nonnegative number",
                self.eta
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record stride must be at least 1"));
        }
        Ok(())
    }
}

/// A pure callback evaluated at recorded epochs.
pub trait Observer {
    /// Number of values returned by `observe`.
    fn width(&self) -> usize;
    fn observe(
        &mut self,
        epoch: usize,
        net: &TwoLayerReluNet,
        residual: &[f64],
    ) -> Result<Vec<f64>>;
    /// Lets training stop early once the observer has what it needs.
    fn done(&self) -> bool {
        false
    }
}

/// State at one recorded epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub epoch: usize,
    pub loss: f64,
    pub residual: Option<Vec<f64>>,
    pub observed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub eta: f64,
    pub records: Vec<TraceRecord>,
    /// Steps whose loss exceeded the previous epoch's loss.
    pub monotonicity_violations: usize,
    pub steps: usize,
    /// Activation-pattern changes per step, when tracked.
    pub sign_flips: Vec<usize>,
    pub stopped_early: bool,
}

impl TrainingTrace {
    pub fn record_at(&self, epoch: usize) -> Option<&TraceRecord> {
        self.records
            .binary_search_by_key(&epoch, |r| r.epoch)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map(|r| r.loss).unwrap_or(f64::NAN)
    }
}

/// Runs `config.epochs` full-batch gradient-descent steps on ½(y−u)ᵀP(y−u).
pub fn train(
    net: &mut TwoLayerReluNet,
    y: &[f64],
    nodes: &SpherePointSet,
    p: &LossOperator,
    config: &TrainConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<TrainingTrace> {
    config.validate()?;
    let n = nodes.len();
    if y.len() != n || p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if y.len() != n { y.len() } else { p.n() },
        });
    }
    if nodes.dim() != net.d {
        return Err(Error::DimensionMismatch {
            expected: net.d,
            got: nodes.dim(),
        });
    }
    let bound = max_step_size(p, n);
    if config.eta > bound {
        log::warn!(
            "step size {:e} exceeds the guaranteed bound {:e}",
            config.eta,
            bound
        );
    }
    let cols = nodes.columns();
    let mut u = net.forward_batch(nodes)?;
    let mut u_next = vec![0.0; n];
    let mut pre = vec![0.0; n];
    let mut trace = TrainingTrace {
        eta: config.eta,
        records: Vec::new(),
        monotonicity_violations: 0,
        steps: 0,
        sign_flips: Vec::new(),
        stopped_early: false,
    };
    let mut last_loss = f64::NAN;
    for epoch in 0..=config.epochs {
        let z: Vec<f64> = y.iter().zip(&u).map(|(a, b)| a - b).collect();
        let v = p.apply(&z);
        let cur = 0.5 * z.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        if !cur.is_finite() {
            return Err(Error::Divergence { epoch, last_loss });
        }
        if epoch > 0 && cur > last_loss {
            trace.monotonicity_violations += 1;
        }
        last_loss = cur;
        let all_done = !observers.is_empty() && observers.iter().all(|o| o.done());
        let last = epoch == config.epochs || all_done;
        if epoch % config.record_stride == 0 || last {
            let mut observed = Vec::new();
            for o in observers.iter_mut() {
                observed.extend(o.observe(epoch, net, &z)?);
            }
            trace.records.push(TraceRecord {
                epoch,
                loss: cur,
                residual: config.record_residuals.then(|| z.clone()),
                observed,
            });
        }
        if last || (!observers.is_empty() && observers.iter().all(|o| o.done())) {
            trace.stopped_early = epoch < config.epochs;
            break;
        }
        let flips = sweep(net, &cols, &v, config.eta, &mut u_next, &mut pre);
        if config.track_sign_flips {
            trace.sign_flips.push(flips);
        }
        std::mem::swap(&mut u, &mut u_next);
        trace.steps += 1;
    }
    if trace.monotonicity_violations > 0 {
        log::debug!(
            "{} of {} steps increased the loss",
            trace.monotonicity_violations,
            trace.steps
        );
    }
    Ok(trace)
}

/// One gradient step on every neuron followed by the forward pass at the new
/// weights, in a single sweep. Returns the number of activation changes.
fn sweep(
    net: &mut TwoLayerReluNet,
    cols: &[Vec<f64>],
    v: &[f64],
    eta: f64,
    u_next: &mut [f64],
    pre: &mut [f64],
) -> usize {
    u_next.iter_mut().for_each(|x| *x = 0.0);
    let flips = match cols.len() {
        2 => sweep_fixed::<2>(net, [&cols[0], &cols[1]], v, eta, u_next, pre),
        3 => sweep_fixed::<3>(net, [&cols[0], &cols[1], &cols[2]], v, eta, u_next, pre),
        _ => sweep_dyn(net, cols, v, eta, u_next, pre),
    };
    let s = 1.0 / (net.m as f64).sqrt();
    u_next.iter_mut().for_each(|x| *x *= s);
    flips
}

fn sweep_fixed<const D: usize>(
    net: &mut TwoLayerReluNet,
    x: [&[f64]; D],
    v: &[f64],
    eta: f64,
    u_next: &mut [f64],
    pre: &mut [f64],
) -> usize {
    let n = v.len();
    let scale = 1.0 / (net.m as f64).sqrt();
    let x: [&[f64]; D] = std::array::from_fn(|k| &x[k][..n]);
    let pre = &mut pre[..n];
    let u_next = &mut u_next[..n];
    let mut flips = 0usize;
    let body = n / 4 * 4;
    for r in 0..net.m {
        let mut w: [f64; D] = std::array::from_fn(|k| net.w[r * D + k]);
        let mut b = net.b[r];
        let mut acc = [[0.0f64; 4]; D];
        let mut accb = [0.0f64; 4];
        for c in (0..body).step_by(4) {
            for l in 0..4 {
                let i = c + l;
                let mut p = b;
                for k in 0..D {
                    p += w[k] * x[k][i];
                }
                pre[i] = p;
                let m = if p >= 0.0 { v[i] } else { 0.0 };
                accb[l] += m;
                for k in 0..D {
                    acc[k][l] += m * x[k][i];
                }
            }
        }
        for i in body..n {
            let mut p = b;
            for k in 0..D {
                p += w[k] * x[k][i];
            }
            pre[i] = p;
            let m = if p >= 0.0 { v[i] } else { 0.0 };
            accb[0] += m;
            for k in 0..D {
                acc[k][0] += m * x[k][i];
            }
        }
        let f = -net.a[r] * scale;
        for k in 0..D {
            let g = (acc[k][0] + acc[k][1]) + (acc[k][2] + acc[k][3]);
            w[k] -= eta * (f * g);
            net.w[r * D + k] = w[k];
        }
        b -= eta * (f * ((accb[0] + accb[1]) + (accb[2] + accb[3])));
        net.b[r] = b;
        let ar = net.a[r];
        for i in 0..n {
            let mut p = b;
            for k in 0..D {
                p += w[k] * x[k][i];
            }
            flips += ((p >= 0.0) != (pre[i] >= 0.0)) as usize;
            u_next[i] += ar * p.max(0.0);
        }
    }
    flips
}

fn sweep_dyn(
    net: &mut TwoLayerReluNet,
    cols: &[Vec<f64>],
    v: &[f64],
    eta: f64,
    u_next: &mut [f64],
    pre: &mut [f64],
) -> usize {
    let d = net.d;
    let scale = 1.0 / (net.m as f64).sqrt();
    let mut flips = 0;
    let mut gw = vec![0.0; d];
    let mut post = vec![0.0; v.len()];
    for r in 0..net.m {
        net::pre_activations(&net.w[r * d..(r + 1) * d], net.b[r], cols, pre);
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (i, &p) in pre.iter().enumerate() {
            if p >= 0.0 {
                gb += v[i];
                for k in 0..d {
                    gw[k] += v[i] * cols[k][i];
                }
            }
        }
        let f = -net.a[r] * scale;
        for k in 0..d {
            net.w[r * d + k] -= eta * (f * gw[k]);
        }
        net.b[r] -= eta * (f * gb);
        net::pre_activations(&net.w[r * d..(r + 1) * d], net.b[r], cols, &mut post);
        for i in 0..v.len() {
            flips += ((post[i] >= 0.0) != (pre[i] >= 0.0)) as usize;
            u_next[i] += net.a[r] * post[i].max(0.0);
        }
    }
    flips
}
