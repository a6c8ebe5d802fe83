//! Shared setup for the desk-scale experiments.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harmonics::{space_dim, HarmonicExpansion};
use crate::ntk::{build_h_infinity, largest_eigenvalue_hp, KernelMatrix};
use crate::quadrature::{design_weights, three_arc_nodes, QuadratureRule};
use crate::sobolev::{build_p_sobolev, build_p_sobolev_semidefinite, SobolevOperator};
use crate::sphere::{farthest_point_subsample, SpherePointSet};
use crate::trainer::{max_step_size, LossOperator};

/// The 2500-point spherical Fibonacci lattice shipped with the crate.
pub const SPHERE_ASSET: &str = include_str!("../../assets/fibonacci_2500.csv");
pub const SPHERE_ASSET_NAME: &str = "assets/fibonacci_2500.csv";

pub fn sphere_asset() -> Result<SpherePointSet> {
    let rows =
        crate::sphere::parse_csv_rows(std::path::Path::new(SPHERE_ASSET_NAME), SPHERE_ASSET)?;
    let mut coords = Vec::with_capacity(3 * rows.len());
    for r in rows {
        if r.len() != 3 {
            return Err(Error::invalid("sphere asset rows must have three columns"));
        }
        coords.extend(r);
    }
    SpherePointSet::from_rows(3, coords)
}

/// Farthest-point subsample of the sphere asset.
pub fn sphere_subsample(k: usize) -> Result<SpherePointSet> {
    let all = sphere_asset()?;
    let idx = farthest_point_subsample(&all, k)?;
    Ok(all.subset(&idx))
}

/// Three arcs on the circle with a positive least-norm rule of degree L.
pub fn circle_rule(counts: [usize; 3], degree: usize) -> Result<QuadratureRule> {
    design_weights(&three_arc_nodes(counts[0], counts[1], counts[2]), degree)
}

/// P_s, certified positive definite when the harmonic space is at least as
/// large as the node set and semidefinite otherwise.
pub fn sobolev_operator(rule: &QuadratureRule, s: f64, l_max: usize) -> Result<SobolevOperator> {
    if space_dim(rule.nodes().dim(), l_max)? < rule.len() {
        log::info!(
            "P_s with l_max = {l_max} on {} nodes is semidefinite",
            rule.len()
        );
        build_p_sobolev_semidefinite(rule, s, l_max)
    } else {
        build_p_sobolev(rule, s, l_max)
    }
}

/// Which matrix P defines the training loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// n⁻¹I.
    Mse,
    /// D_c.
    Quadrature,
    /// P_s with the given s and ℓ_max.
    Sobolev { s: f64, l_max: usize },
}

impl LossKind {
    pub fn parse(kind: &str, s: f64, l_max: usize) -> Result<Self> {
        match kind {
            "mse" => Ok(Self::Mse),
            "quadrature" => Ok(Self::Quadrature),
            "sobolev" => Ok(Self::Sobolev { s, l_max }),
            other => Err(Error::Config(format!(
                "loss `{other}` is not mse, quadrature or sobolev"
            ))),
        }
    }

    pub fn build(&self, rule: &QuadratureRule) -> Result<LossOperator> {
        match *self {
            Self::Mse => LossOperator::mse(rule.len()),
            Self::Quadrature => Ok(LossOperator::quadrature(rule)),
            Self::Sobolev { s, l_max } => {
                Ok(LossOperator::Sobolev(sobolev_operator(rule, s, l_max)?))
            }
        }
    }
}

/// A rule, a target sampled at its nodes, and the infinite-width kernel there.
#[derive(Debug, Clone)]
pub struct Problem {
    pub rule: QuadratureRule,
    pub target: HarmonicExpansion,
    pub y: Vec<f64>,
    pub h: KernelMatrix,
}

impl Problem {
    pub fn new(rule: QuadratureRule, target: HarmonicExpansion) -> Result<Self> {
        let y = target.sample(rule.nodes())?;
        let h = build_h_infinity(rule.nodes())?;
        Ok(Self { rule, target, y, h })
    }

    /// Same nodes and kernel, different target.
    pub fn with_target(&self, target: HarmonicExpansion) -> Result<Self> {
        Ok(Self {
            y: target.sample(self.rule.nodes())?,
            target,
            rule: self.rule.clone(),
            h: self.h.clone(),
        })
    }

    pub fn nodes(&self) -> &SpherePointSet {
        self.rule.nodes()
    }
}

/// How the step size is chosen when it is not given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaRule {
    /// fraction / (2 λ_max(H∞P)): the largest stable kernel-regime step, scaled.
    Spectral,
    /// fraction × 1/(2 M_I M_P n).
    Bound,
}

impl std::str::FromStr for EtaRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "bound" => Ok(Self::Bound),
            other => Err(Error::Config(format!(
                "eta_rule `{other}` is not spectral or bound"
            ))),
        }
    }
}

/// The step size for `p`, unless `explicit` is given.
pub fn choose_eta(
    h: &KernelMatrix,
    p: &LossOperator,
    rule: EtaRule,
    fraction: f64,
    explicit: Option<f64>,
) -> Result<f64> {
    if let Some(e) = explicit {
        return Ok(e);
    }
    Ok(match rule {
        EtaRule::Spectral => fraction / (2.0 * largest_eigenvalue_hp(h, p)?),
        EtaRule::Bound => fraction * max_step_size(p, p.n()),
    })
}

/// Median with `None` ordered above every value (a censored observation).
pub fn censored_median(values: &[Option<usize>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values
        .iter()
        .map(|x| x.map_or(f64::INFINITY, |e| e as f64))
        .collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    m.is_finite().then_some(m).or(Some(f64::INFINITY))
}

pub fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

pub fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] >= w[1])
}

/// Renders an optional epoch count for CSV output (`censored` when absent).
pub fn epoch_cell(e: Option<usize>) -> String {
    e.map_or_else(|| "censored".to_string(), |v| v.to_string())
}

pub fn fmt_median(m: f64) -> String {
    if m.is_finite() {
        format!("{m}")
    } else {
        "inf".to_string()
    }
}

/// `key = value` summary lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}
