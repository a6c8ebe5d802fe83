use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sphere::{SpherePoint, SpherePointSet};
use crate::trainer::loss::LossOperator;

const MAGIC: &[u8; 4] = b"SBLN";
const ENDIAN_TAG: u32 = 0x0102_0304;

/// Initialization of the hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    /// w_r ~ N(0, κ²I), b_r = 0, a_r = ±1.
    Gaussian,
    /// Neurons in pairs sharing (w, b) with opposite a, so the output starts at 0.
    Antithetic,
}

impl std::str::FromStr for InitScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "antithetic" => Ok(Self::Antithetic),
            _ => Err(Error::Config(format!("unknown init scheme '{s}'"))),
        }
    }
}

impl std::fmt::Display for InitScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Antithetic => "antithetic",
        })
    }
}

/// N(x) = (1/√m) Σ_r a_r ReLU(w_rᵀx + b_r).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerReluNet {
    pub(crate) m: usize,
    pub(crate) d: usize,
    pub(crate) w: Vec<f64>,
    pub(crate) b: Vec<f64>,
    pub(crate) a: Vec<f64>,
}

/// ∂Φ/∂W (m×d, row-major) and ∂Φ/∂b.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

pub fn init_net(
    m: usize,
    d: usize,
    kappa: f64,
    seed: u64,
    scheme: InitScheme,
) -> Result<TwoLayerReluNet> {
    if m == 0 {
        return Err(Error::invalid("width must be at least 1"));
    }
    if d < 2 {
        return Err(Error::invalid(format!("dimension {d} < 2")));
    }
    if !(kappa > 0.0) {
        return Err(Error::invalid("init scale κ must be positive"));
    }
    if scheme == InitScheme::Antithetic && m % 2 == 1 {
        return Err(Error::invalid(
            "antithetic initialization needs an even width",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; m * d];
    let mut a = vec![0.0; m];
    let step = if scheme == InitScheme::Antithetic {
        2
    } else {
        1
    };
    for r in (0..m).step_by(step) {
        for k in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            w[r * d + k] = kappa * z;
        }
        a[r] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        if step == 2 {
            let (lo, hi) = w.split_at_mut((r + 1) * d);
            hi[..d].copy_from_slice(&lo[r * d..]);
            a[r + 1] = -a[r];
        }
    }
    Ok(TwoLayerReluNet {
        m,
        d,
        w,
        b: vec![0.0; m],
        a,
    })
}

impl TwoLayerReluNet {
    pub fn from_parts(m: usize, d: usize, w: Vec<f64>, b: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if w.len() != m * d || b.len() != m || a.len() != m {
            return Err(Error::invalid("parameter lengths do not match m and d"));
        }
        if a.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::invalid("output signs must be ±1"));
        }
        Ok(Self { m, d, w, b, a })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn biases(&self) -> &[f64] {
        &self.b
    }

    pub fn signs(&self) -> &[f64] {
        &self.a
    }

    /// w_rᵀx + b_r.
    #[inline]
    pub fn preactivation(&self, r: usize, x: &[f64]) -> f64 {
        let wr = &self.w[r * self.d..(r + 1) * self.d];
        self.b[r] + wr.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn forward(&self, x: &SpherePoint) -> Result<f64> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.dim(),
            });
        }
        Ok(self.forward_raw(x.coords()))
    }

    pub(crate) fn forward_raw(&self, x: &[f64]) -> f64 {
        let s: f64 = (0..self.m)
            .map(|r| self.a[r] * self.preactivation(r, x).max(0.0))
            .sum();
        s / (self.m as f64).sqrt()
    }

    /// Outputs at every node; accumulation order matches the training sweep.
    pub fn forward_batch(&self, nodes: &SpherePointSet) -> Result<Vec<f64>> {
        if nodes.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: nodes.dim(),
            });
        }
        let cols = nodes.columns();
        let mut u = vec![0.0; nodes.len()];
        let mut pre = vec![0.0; nodes.len()];
        for r in 0..self.m {
            let wr = &self.w[r * self.d..(r + 1) * self.d];
            pre_activations(wr, self.b[r], &cols, &mut pre);
            let ar = self.a[r];
            for (ui, &p) in u.iter_mut().zip(&pre) {
                *ui += ar * p.max(0.0);
            }
        }
        let s = 1.0 / (self.m as f64).sqrt();
        u.iter_mut().for_each(|x| *x *= s);
        Ok(u)
    }

    /// Exact subgradient of ½(y−u)ᵀP(y−u) with the convention 1{t ≥ 0}.
    pub fn gradient(
        &self,
        y: &[f64],
        nodes: &SpherePointSet,
        p: &LossOperator,
    ) -> Result<Gradient> {
        let u = self.forward_batch(nodes)?;
        check_len(y.len(), nodes.len())?;
        check_len(p.n(), nodes.len())?;
        let z: Vec<f64> = y.iter().zip(&u).map(|(a, b)| a - b).collect();
        let v = p.apply(&z);
        Ok(self.gradient_from_weighted_residual(&v, nodes))
    }

    /// Gradient given v = P z.
    pub fn gradient_from_weighted_residual(&self, v: &[f64], nodes: &SpherePointSet) -> Gradient {
        let cols = nodes.columns();
        let d = self.d;
        let mut dw = vec![0.0; self.m * d];
        let mut db = vec![0.0; self.m];
        let mut pre = vec![0.0; nodes.len()];
        let scale = 1.0 / (self.m as f64).sqrt();
        for r in 0..self.m {
            let wr = &self.w[r * d..(r + 1) * d];
            pre_activations(wr, self.b[r], &cols, &mut pre);
            let mut gb = 0.0;
            let mut gw = vec![0.0; d];
            for (i, &p) in pre.iter().enumerate() {
                if p >= 0.0 {
                    gb += v[i];
                    for k in 0..d {
                        gw[k] += v[i] * cols[k][i];
                    }
                }
            }
            let f = -self.a[r] * scale;
            for k in 0..d {
                dw[r * d + k] = f * gw[k];
            }
            db[r] = f * gb;
        }
        Gradient { dw, db }
    }

    /// w ← w − η ∂w, b ← b − η ∂b; the signs a never change.
    pub fn gd_step(&mut self, grads: &Gradient, eta: f64) {
        for (w, g) in self.w.iter_mut().zip(&grads.dw) {
            *w -= eta * g;
        }
        for (b, g) in self.b.iter_mut().zip(&grads.db) {
            *b -= eta * g;
        }
    }

    /// Activation pattern 1{w̃_rᵀx̃_i ≥ 0} as packed bits, neuron-major.
    pub fn activation_pattern(&self, nodes: &SpherePointSet) -> Vec<u64> {
        let n = nodes.len();
        let words = (self.m * n).div_ceil(64);
        let mut bits = vec![0u64; words];
        for r in 0..self.m {
            for (i, x) in nodes.iter().enumerate() {
                if self.preactivation(r, x) >= 0.0 {
                    let k = r * n + i;
                    bits[k / 64] |= 1 << (k % 64);
                }
            }
        }
        bits
    }

    /// Checkpoint bytes: "SBLN", m and d as u32, a byte-order tag, then w, b, a as f64, all little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(16 + 8 * (self.m * (self.d + 2)));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.m as u32).to_le_bytes());
        buf.extend_from_slice(&(self.d as u32).to_le_bytes());
        buf.extend_from_slice(&ENDIAN_TAG.to_le_bytes());
        for x in self.w.iter().chain(&self.b).chain(&self.a) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        buf
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&buf).map_err(|msg| Error::Format {
            path: path.into(),
            msg,
        })
    }

    pub fn from_bytes(buf: &[u8]) -> std::result::Result<Self, String> {
        if buf.len() < 16 || &buf[..4] != MAGIC {
            return Err("not a network checkpoint".into());
        }
        let word = |k: usize| u32::from_le_bytes(buf[k..k + 4].try_into().expect("4 bytes"));
        if word(12) != ENDIAN_TAG {
            return Err("unexpected byte order".into());
        }
        let (m, d) = (word(4) as usize, word(8) as usize);
        let count = m * (d + 2);
        if buf.len() != 16 + 8 * count {
            return Err("truncated checkpoint".into());
        }
        let vals: Vec<f64> = buf[16..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let w = vals[..m * d].to_vec();
        let b = vals[m * d..m * d + m].to_vec();
        let a = vals[m * d + m..].to_vec();
        Self::from_parts(m, d, w, b, a).map_err(|e| e.to_string())
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[inline]
pub(crate) fn pre_activations(wr: &[f64], br: f64, cols: &[Vec<f64>], out: &mut [f64]) {
    out.iter_mut().for_each(|p| *p = br);
    for (k, col) in cols.iter().enumerate() {
        let wk = wr[k];
        for (p, x) in out.iter_mut().zip(col) {
            *p += wk * x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antithetic_output_is_zero() {
        let net = init_net(64, 3, 1.0, 3, InitScheme::Antithetic).unwrap();
        let x = SpherePoint::from_spherical(0.3, 0.2);
        assert_eq!(net.forward(&x).unwrap(), 0.0);
        assert!(init_net(63, 3, 1.0, 3, InitScheme::Antithetic).is_err());
    }

    #[test]
    fn single_neuron() {
        let x = SpherePoint::from_angle(0.4);
        let net =
            TwoLayerReluNet::from_parts(1, 2, x.coords().to_vec(), vec![0.0], vec![1.0]).unwrap();
        assert!((net.forward(&x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_init() {
        let a = init_net(100, 2, 0.01, 9, InitScheme::Gaussian).unwrap();
        let b = init_net(100, 2, 0.01, 9, InitScheme::Gaussian).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("net.bin");
        let net = init_net(10, 3, 0.5, 1, InitScheme::Gaussian).unwrap();
        net.save(&p).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 16 + 8 * 50);
        assert_eq!(TwoLayerReluNet::load(&p).unwrap(), net);
        std::fs::write(&p, b"nope").unwrap();
        assert!(TwoLayerReluNet::load(&p).is_err());
    }
}
