//! Node sets, positive quadrature weights exact on harmonic spaces, and
//! measured quadrature errors.

mod nnqp;

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::harmonics::{basis_matrix, space_dim, surface_area};
use crate::sphere::{fibonacci_sphere, parse_csv_rows, push_row, SpherePointSet};

/// Positive weights on a node set, exact on Π^d_L for L = `certified_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: SpherePointSet,
    weights: Vec<f64>,
    certified_degree: usize,
}

impl QuadratureRule {
    /// Wraps existing weights after checking positivity and Σc = A_d.
    pub fn new(nodes: SpherePointSet, weights: Vec<f64>, certified_degree: usize) -> Result<Self> {
        if weights.len() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|&c| !(c > 0.0)) {
            return Err(Error::invalid(format!("weight {i} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        let area = surface_area(nodes.dim())?;
        if (total - area).abs() > 1e-8 {
            return Err(Error::invalid(format!(
                "weights sum to {total}, expected {area}"
            )));
        }
        Ok(Self {
            nodes,
            weights,
            certified_degree,
        })
    }

    pub fn nodes(&self) -> &SpherePointSet {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn certified_degree(&self) -> usize {
        self.certified_degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn c_max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Reads `x,y[,z],c` rows; the certified degree is supplied by the caller.
    pub fn read_csv(path: &Path, certified_degree: usize) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_csv_rows(path, &text)?;
        let fmt = |msg: String| Error::Format {
            path: path.into(),
            msg,
        };
        let width = rows
            .first()
            .map(|r| r.len())
            .ok_or_else(|| fmt("no data rows".into()))?;
        if width < 3 {
            return Err(fmt(format!("expected x,y[,z],c rows, got {width} columns")));
        }
        let d = width - 1;
        let mut coords = Vec::with_capacity(rows.len() * d);
        let mut weights = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(fmt(format!("row {i} has {} columns", r.len())));
            }
            coords.extend_from_slice(&r[..d]);
            weights.push(r[d]);
        }
        let nodes = SpherePointSet::from_rows(d, coords).map_err(|e| fmt(e.to_string()))?;
        Self::new(nodes, weights, certified_degree).map_err(|e| fmt(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// `x,y[,z],c` rows with shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.nodes.dim() == 2 {
            "x,y,c\n"
        } else {
            "x,y,z,c\n"
        });
        let mut row = Vec::with_capacity(self.nodes.dim() + 1);
        for (p, c) in self.nodes.iter().zip(&self.weights) {
            row.clear();
            row.extend_from_slice(p);
            row.push(*c);
            push_row(&mut s, &row);
        }
        s
    }
}

/// A node moved off a collision, in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub index: usize,
    pub from: f64,
    pub to: f64,
}

/// Angles of the three-arc set plus the collisions that were resolved.
#[derive(Debug, Clone)]
pub struct ThreeArcAngles {
    pub angles: Vec<f64>,
    pub perturbed: Vec<Perturbation>,
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn arc(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Base grid θ_j = 2πj/n_base, j = 1..n_base, plus arcs on [0, 0.3π] and
/// [1.4π, 1.8π]. An arc node that coincides with an earlier node (within
/// 1e-12 rad) is moved half of its arc spacing toward the arc's midpoint.
pub fn three_arc_angles(n_base: usize, n_arc1: usize, n_arc2: usize) -> ThreeArcAngles {
    let mut angles: Vec<f64> = (1..=n_base)
        .map(|j| TAU * j as f64 / n_base as f64)
        .collect();
    let mut perturbed = Vec::new();
    for (lo, hi, n) in [(0.0, 0.3 * PI, n_arc1), (1.4 * PI, 1.8 * PI, n_arc2)] {
        let mid = 0.5 * (lo + hi);
        let half = if n > 1 {
            0.5 * (hi - lo) / (n - 1) as f64
        } else {
            0.25 * (hi - lo)
        };
        for mut t in arc(lo, hi, n) {
            let original = t;
            let mut tries = 0;
            while angles.iter().any(|&a| circle_distance(a, t) < 1e-12) {
                let shift = half / (1u64 << tries) as f64;
                t += if t < mid { shift } else { -shift };
                tries += 1;
            }
            if tries > 0 {
                perturbed.push(Perturbation {
                    index: angles.len(),
                    from: original,
                    to: t,
                });
            }
            angles.push(t);
        }
    }
    ThreeArcAngles { angles, perturbed }
}

/// The nonuniform three-arc node set on S¹.
pub fn three_arc_nodes(n_base: usize, n_arc1: usize, n_arc2: usize) -> SpherePointSet {
    let t = three_arc_angles(n_base, n_arc1, n_arc2);
    for p in &t.perturbed {
        log::info!(
            "three-arc node {} moved from {:.6}π to {:.6}π to avoid a duplicate",
            p.index,
            p.from / PI,
            p.to / PI
        );
    }
    SpherePointSet::from_angles(&t.angles).expect("at least one node")
}

/// n equispaced points θ_j = 2πj/n on S¹.
pub fn equispaced_nodes(n: usize) -> Result<SpherePointSet> {
    let a: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    SpherePointSet::from_angles(&a)
}

/// Summary of how a rule was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignInfo {
    pub used_active_set: bool,
    pub iterations: usize,
    pub at_lower_bound: usize,
    pub max_violation: f64,
}

/// Minimum-norm positive weights exact on Π^d_L.
pub fn design_weights(nodes: &SpherePointSet, l_max: usize) -> Result<QuadratureRule> {
    design_weights_with_info(nodes, l_max).map(|(r, _)| r)
}

pub fn design_weights_with_info(
    nodes: &SpherePointSet,
    l_max: usize,
) -> Result<(QuadratureRule, DesignInfo)> {
    let d = nodes.dim();
    let n = nodes.len();
    let k = space_dim(d, l_max)?;
    nodes.check_distinct(1e-14)?;
    let area = surface_area(d)?;
    let eps = 1e-12 * area / n as f64;
    let a = basis_matrix(nodes, l_max)?;
    let mut b = DVector::zeros(k);
    b[0] = area.sqrt();
    if n < k {
        return overdetermined(nodes, l_max, a, b, eps);
    }

    // least-norm solution through QR of Aᵀ: c = Q R^{-T} b, λ = R^{-1} R^{-T} b
    let qr = a.transpose().qr();
    let r = qr.r();
    let diag = r.diagonal().map(f64::abs);
    let (rmin, rmax) = (diag.min(), diag.max());
    if !(rmin > 1e-12 * rmax) {
        return Err(Error::DegenerateNodes(format!(
            "moment matrix is rank deficient (|R| range {rmin:e}..{rmax:e})"
        )));
    }
    let y = r
        .transpose()
        .solve_lower_triangular(&b)
        .ok_or_else(|| Error::DegenerateNodes("singular triangular factor".into()))?;
    let c_ln = qr.q() * &y;
    let max_violation = (&b - &a * &c_ln).amax();
    if c_ln.iter().all(|&c| c > eps) {
        let rule = QuadratureRule::new(nodes.clone(), c_ln.iter().copied().collect(), l_max)?;
        return Ok((
            rule,
            DesignInfo {
                used_active_set: false,
                iterations: 0,
                at_lower_bound: 0,
                max_violation,
            },
        ));
    }
    let lambda0 = r
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::DegenerateNodes("singular triangular factor".into()))?;
    let out = nnqp::solve(&a, &b, eps, lambda0, 1e-12, 200)?;
    if out.max_violation > 1e-9 {
        return Err(Error::Infeasible {
            msg: "active-set solve stalled".into(),
            max_violation: out.max_violation,
        });
    }
    let info = DesignInfo {
        used_active_set: true,
        iterations: out.iterations,
        at_lower_bound: out.at_bound,
        max_violation: out.max_violation,
    };
    Ok((
        QuadratureRule::new(nodes.clone(), out.weights, l_max)?,
        info,
    ))
}

/// More moments than nodes: the exact rule, if any, is the unique solution
/// of the consistent overdetermined system.
fn overdetermined(
    nodes: &SpherePointSet,
    l_max: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    eps: f64,
) -> Result<(QuadratureRule, DesignInfo)> {
    let qr = a.clone().qr();
    let r = qr.r();
    let diag = r.diagonal().map(f64::abs);
    let (rmin, rmax) = (diag.min(), diag.max());
    if !(rmin > 1e-12 * rmax) {
        return Err(Error::DegenerateNodes(format!(
            "moment matrix is rank deficient (|R| range {rmin:e}..{rmax:e})"
        )));
    }
    let c = r
        .solve_upper_triangular(&(qr.q().transpose() * &b))
        .ok_or_else(|| Error::DegenerateNodes("singular triangular factor".into()))?;
    let max_violation = (&b - &a * &c).amax();
    if max_violation > 1e-8 {
        return Err(Error::Infeasible {
            msg: format!(
                "{} nodes cannot integrate all {} harmonics of degree <= {l_max}",
                nodes.len(),
                b.len()
            ),
            max_violation,
        });
    }
    if c.iter().any(|&x| !(x > eps)) {
        return Err(Error::Infeasible {
            msg: "the only exact rule has nonpositive weights".into(),
            max_violation,
        });
    }
    let rule = QuadratureRule::new(nodes.clone(), c.iter().copied().collect(), l_max)?;
    Ok((
        rule,
        DesignInfo {
            used_active_set: false,
            iterations: 0,
            at_lower_bound: 0,
            max_violation,
        },
    ))
}

/// Σ c_i samples_i.
pub fn integrate(rule: &QuadratureRule, samples: &[f64]) -> Result<f64> {
    if samples.len() != rule.len() {
        return Err(Error::DimensionMismatch {
            expected: rule.len(),
            got: samples.len(),
        });
    }
    Ok(rule.weights.iter().zip(samples).map(|(c, s)| c * s).sum())
}

/// E_c = exact − Σ c_i samples_i.
pub fn quadrature_error(rule: &QuadratureRule, samples: &[f64], exact_value: f64) -> Result<f64> {
    Ok(exact_value - integrate(rule, samples)?)
}

/// Largest moment error |Σ c_i Y_{ℓ,p}(x_i) − √A_d δ_{ℓ0}| per degree ℓ ≤ L.
pub fn moment_errors(rule: &QuadratureRule, l_max: usize) -> Result<Vec<f64>> {
    let d = rule.nodes.dim();
    let a = basis_matrix(&rule.nodes, l_max)?;
    let c = DVector::from_column_slice(&rule.weights);
    let m = a * c;
    let area = surface_area(d)?;
    let degrees = crate::harmonics::flat_degrees(d, l_max)?;
    let mut out = vec![0.0f64; l_max + 1];
    for (k, &l) in degrees.iter().enumerate() {
        let exact = if l == 0 { area.sqrt() } else { 0.0 };
        out[l] = out[l].max((m[k] - exact).abs());
    }
    Ok(out)
}

fn dense_grid(d: usize, l_max: usize) -> Result<SpherePointSet> {
    match d {
        2 => equispaced_nodes((8 * (l_max + 1)).max(4096)),
        3 => Ok(fibonacci_sphere((4 * space_dim(3, l_max)?).max(4000))),
        _ => Err(Error::Unsupported(format!("dense grid for d = {d}"))),
    }
}

/// Randomized lower estimate of γ_{n,ℓ} = sup{|E_c(h)| : h ∈ Π_ℓ, ‖h‖_∞ = 1}.
///
/// Trial functions for degree ℓ include those drawn for every lower degree,
/// so the estimate is nondecreasing in ℓ for a fixed seed.
pub fn estimate_gamma(rule: &QuadratureRule, ell: usize, trials: usize, seed: u64) -> Result<f64> {
    Ok(*estimate_gamma_all(rule, ell, trials, seed)?
        .last()
        .expect("at least degree 0"))
}

/// Estimates for every degree 0..=ℓ.
pub fn estimate_gamma_all(
    rule: &QuadratureRule,
    ell: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let d = rule.nodes.dim();
    let grid = dense_grid(d, ell)?;
    let yg = basis_matrix(&grid, ell)?;
    let yn = basis_matrix(&rule.nodes, ell)?;
    let sqrt_area = surface_area(d)?.sqrt();
    let c = DVector::from_column_slice(&rule.weights);
    // quadrature of each basis function, so E_c(h) = √A_d ĥ_0 − coeffᵀ (Y c)
    let yc = &yn * &c;
    let mut best = 0.0f64;
    let mut out = Vec::with_capacity(ell + 1);
    for deg in 0..=ell {
        let k = space_dim(d, deg)?;
        for t in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((deg * trials + t) as u64);
            let coef: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            let coef = DVector::from_vec(coef);
            let vals = yg.rows(0, k).tr_mul(&coef);
            let sup = vals.amax();
            if sup == 0.0 {
                continue;
            }
            let err = (sqrt_area * coef[0] - coef.dot(&yc.rows(0, k))) / sup;
            best = best.max(err.abs());
        }
        out.push(best);
    }
    Ok(out)
}

/// Per-degree moment errors and γ estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    pub max_moment_error: Vec<f64>,
    pub gamma_estimate: Vec<(usize, f64)>,
}

pub fn exactness_report(
    rule: &QuadratureRule,
    l_max: usize,
    gamma_degrees: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ExactnessReport> {
    let max_moment_error = moment_errors(rule, l_max)?;
    let mut gamma_estimate = Vec::new();
    if let Some(&top) = gamma_degrees.iter().max() {
        let all = estimate_gamma_all(rule, top, trials, seed)?;
        for &g in gamma_degrees {
            gamma_estimate.push((g, all[g]));
        }
    }
    Ok(ExactnessReport {
        max_moment_error,
        gamma_estimate,
    })
}

/// Dense moment matrix for callers that need it.
pub fn moment_matrix(nodes: &SpherePointSet, l_max: usize) -> Result<DMatrix<f64>> {
    basis_matrix(nodes, l_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equispaced_gets_equal_weights() {
        let nodes = equispaced_nodes(64).unwrap();
        let rule = design_weights(&nodes, 31).unwrap();
        for c in rule.weights() {
            assert!((c - TAU / 64.0).abs() < 1e-13);
        }
    }

    #[test]
    fn three_arc_counts_and_collisions() {
        let t = three_arc_angles(100, 40, 1000);
        assert_eq!(t.angles.len(), 1140);
        assert_eq!(t.perturbed.len(), 6);
        let nodes = three_arc_nodes(100, 40, 1000);
        nodes.check_distinct(1e-9).unwrap();
        assert_eq!(three_arc_nodes(4, 0, 0).len(), 4);
    }

    #[test]
    fn rule_rejects_bad_weights() {
        let nodes = equispaced_nodes(4).unwrap();
        assert!(QuadratureRule::new(nodes.clone(), vec![1.0; 4], 1).is_err());
        assert!(QuadratureRule::new(nodes, vec![TAU / 2.0, -1.0, 1.0, TAU / 2.0], 1).is_err());
    }

    #[test]
    fn too_few_nodes() {
        let nodes = equispaced_nodes(5).unwrap();
        assert!(matches!(
            design_weights(&nodes, 5),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn equispaced_overdetermined_up_to_n_minus_one() {
        let nodes = equispaced_nodes(64).unwrap();
        for l in [40, 63] {
            for c in design_weights(&nodes, l).unwrap().weights() {
                assert!((c - TAU / 64.0).abs() < 1e-12);
            }
        }
        assert!(design_weights(&nodes, 64).is_err());
    }

    #[test]
    fn gamma_zero_within_exactness() {
        let rule = design_weights(&equispaced_nodes(32).unwrap(), 15).unwrap();
        let g = estimate_gamma_all(&rule, 20, 4, 7).unwrap();
        assert!(g[15] < 1e-8);
        assert!(g.windows(2).all(|w| w[0] <= w[1]));
    }
}
