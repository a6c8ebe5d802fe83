use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::sobolev::SobolevOperator;
use crate::sphere::SpherePointSet;
use crate::trainer::net::TwoLayerReluNet;

/// The matrix P of the loss ½(y − u)ᵀP(y − u), kept in structured form.
#[derive(Debug, Clone)]
pub enum LossOperator {
    ScaledIdentity { alpha: f64, n: usize },
    Diagonal { c: Vec<f64> },
    Sobolev(SobolevOperator),
}

impl LossOperator {
    pub fn scaled_identity(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0) || n == 0 {
            return Err(Error::invalid("scaled identity needs α > 0 and n ≥ 1"));
        }
        Ok(Self::ScaledIdentity { alpha, n })
    }

    /// P = n⁻¹I, the mean-squared loss.
    pub fn mse(n: usize) -> Result<Self> {
        Self::scaled_identity(1.0 / n as f64, n)
    }

    pub fn diagonal(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() || c.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::invalid("diagonal operator needs positive entries"));
        }
        Ok(Self::Diagonal { c })
    }

    /// P = D_c.
    pub fn quadrature(rule: &QuadratureRule) -> Self {
        Self::Diagonal {
            c: rule.weights().to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Self::ScaledIdentity { n, .. } => *n,
            Self::Diagonal { c } => c.len(),
            Self::Sobolev(op) => op.n(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Self::ScaledIdentity { alpha, .. } => v.iter().map(|x| alpha * x).collect(),
            Self::Diagonal { c } => v.iter().zip(c).map(|(x, c)| x * c).collect(),
            Self::Sobolev(op) => op.apply(v),
        }
    }

    /// vᵀPv.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        match self {
            Self::Sobolev(op) => op.quad_form(v),
            _ => self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum(),
        }
    }

    /// ‖v‖_P = √(vᵀPv).
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.quad_form(v).max(0.0).sqrt()
    }

    pub fn lambda_max(&self) -> f64 {
        match self {
            Self::ScaledIdentity { alpha, .. } => *alpha,
            Self::Diagonal { c } => c.iter().copied().fold(0.0, f64::max),
            Self::Sobolev(op) => op.lambda_max(),
        }
    }

    /// (M_I, M_P) = (√λ_max(P), √λ_max(P)).
    pub fn m_constants(&self) -> (f64, f64) {
        let m = self.lambda_max().sqrt();
        (m, m)
    }

    pub fn describe(&self) -> String {
        match self {
            Self::ScaledIdentity { alpha, n } => format!("scaled-identity alpha={alpha:e} n={n}"),
            Self::Diagonal { c } => format!("diagonal n={}", c.len()),
            Self::Sobolev(op) => format!("sobolev s={} l_max={} n={}", op.s(), op.l_max(), op.n()),
        }
    }
}

pub fn m_constants(p: &LossOperator) -> (f64, f64) {
    p.m_constants()
}

/// 1/(2 M_I M_P n).
pub fn max_step_size(p: &LossOperator, n: usize) -> f64 {
    let (mi, mp) = p.m_constants();
    1.0 / (2.0 * mi * mp * n as f64)
}

/// ½(y − u)ᵀP(y − u) with u the network outputs at the nodes.
pub fn loss(
    net: &TwoLayerReluNet,
    y: &[f64],
    nodes: &SpherePointSet,
    p: &LossOperator,
) -> Result<f64> {
    if y.len() != nodes.len() || p.n() != nodes.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            got: if y.len() != nodes.len() {
                y.len()
            } else {
                p.n()
            },
        });
    }
    let u = net.forward_batch(nodes)?;
    let z: Vec<f64> = y.iter().zip(&u).map(|(a, b)| a - b).collect();
    Ok(0.5 * p.quad_form(&z))
}
