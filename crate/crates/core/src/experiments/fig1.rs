//! `fig1`: frequency biasing on a nonuniform circle under n⁻¹I and D_c, and
//! the iteration-count scaling of single-frequency targets.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::common::{
    censored_median, choose_eta, circle_rule, epoch_cell, fmt_median, nondecreasing, EtaRule,
    LossKind, Problem, Summary,
};
use super::config::{key, ExperimentConfig, KeySpec};
use super::manifest::RunDir;
use super::quad::three_arc_counts;
use super::svg::{Plot, Series, Style};
use super::train::{epochs_to_threshold, net_spec, train_s1, FrequencyRun, NetSpec, RunSpec};
use crate::diagnostics::{fit_iteration_scaling, FrequencyLabel, ScalingFit};
use crate::error::Result;
use crate::harmonics::HarmonicExpansion;
use crate::trainer::LossOperator;

pub const SCHEMA: &[KeySpec] = &[
    key("three_arc", "100,40,1000", "three-arc counts"),
    key("degree", "55", "quadrature exactness degree"),
    key(
        "target_degree",
        "9",
        "target is sin(theta) + ... + sin(L theta)",
    ),
    key("m", "16384", "hidden width"),
    key(
        "kappa",
        "10",
        "initialization scale (u(0) = 0 under antithetic init for any value)",
    ),
    key("scheme", "antithetic", "gaussian | antithetic"),
    key("eta", "auto", "step size, or auto (each loss gets its own)"),
    key("eta_rule", "spectral", "spectral | bound"),
    key("eta_fraction", "0.9", "multiplier applied by the eta rule"),
    key("seed", "0", "first seed"),
    key("n_seeds", "5", "seeds for the half-loss ordering"),
    key(
        "watch",
        "1,5,9",
        "frequencies whose half-loss epochs are compared",
    ),
    key("half_budget", "3000", "epoch cap for the ordering runs"),
    key(
        "curve_epochs",
        "1000",
        "epochs for the frequency-loss curves",
    ),
    key(
        "curve_stride",
        "10",
        "record every k-th epoch of the curves",
    ),
    key(
        "sweep_ells",
        "3..10",
        "single-frequency targets sin(l theta)",
    ),
    key(
        "sweep_threshold",
        "1e-3",
        "loss threshold defining the iteration count",
    ),
    key("sweep_budget", "20000", "epoch cap per sweep target"),
    key("grid_n", "100", "uniform samples for the frequency loss"),
    key("cap", "30", "largest reported frequency"),
];

pub const CSV_HELP: &str =
    "nodes.csv: theta,c; curves_mse.csv, curves_quadrature.csv: epoch,ell,value; \
half.csv: loss,seed,ell,epoch; scaling.csv: ell,iterations";

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Params {
    pub counts: [usize; 3],
    pub degree: usize,
    pub target_degree: usize,
    pub net: NetSpec,
    pub eta: Option<f64>,
    pub eta_rule: EtaRule,
    pub eta_fraction: f64,
    pub seeds: Vec<u64>,
    pub watch: Vec<usize>,
    pub half_budget: usize,
    pub curve_epochs: usize,
    pub curve_stride: usize,
    pub sweep_ells: Vec<usize>,
    pub sweep_threshold: f64,
    pub sweep_budget: usize,
    pub grid_n: usize,
    pub cap: usize,
}

pub fn seeds(cfg: &ExperimentConfig) -> Result<Vec<u64>> {
    let first = cfg.u64("seed")?;
    Ok((0..cfg.u64("n_seeds")?).map(|k| first + k).collect())
}

impl Fig1Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            counts: three_arc_counts(cfg, "three_arc")?,
            degree: cfg.usize("degree")?,
            target_degree: cfg.usize("target_degree")?,
            net: net_spec(cfg)?,
            eta: cfg.f64_or_auto("eta")?,
            eta_rule: cfg.raw("eta_rule")?.parse()?,
            eta_fraction: cfg.f64("eta_fraction")?,
            seeds: seeds(cfg)?,
            watch: cfg.usize_list("watch")?,
            half_budget: cfg.usize("half_budget")?,
            curve_epochs: cfg.usize("curve_epochs")?,
            curve_stride: cfg.usize("curve_stride")?,
            sweep_ells: cfg.usize_list("sweep_ells")?,
            sweep_threshold: cfg.f64("sweep_threshold")?,
            sweep_budget: cfg.usize("sweep_budget")?,
            grid_n: cfg.usize("grid_n")?,
            cap: cfg.usize("cap")?,
        })
    }

    pub fn defaults() -> Self {
        Self::from_config(&ExperimentConfig::defaults("fig1", SCHEMA)).expect("defaults parse")
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(
            circle_rule(self.counts, self.degree)?,
            HarmonicExpansion::sine_sum(self.target_degree),
        )
    }

    pub fn eta_for(&self, problem: &Problem, p: &LossOperator) -> Result<f64> {
        choose_eta(&problem.h, p, self.eta_rule, self.eta_fraction, self.eta)
    }
}

/// Half-loss epochs of the watched frequencies for every seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Ordering {
    pub eta: f64,
    pub watch: Vec<usize>,
    pub per_seed: Vec<(u64, Vec<Option<usize>>)>,
    /// Median per watched frequency; censored runs count as +∞.
    pub medians: Vec<f64>,
}

impl Ordering {
    pub fn nondecreasing(&self) -> bool {
        nondecreasing(&self.medians)
    }

    pub fn nonincreasing(&self) -> bool {
        super::common::nonincreasing(&self.medians)
    }
}

/// Trains one network per seed on S¹, stopping once every watched
/// frequency loss has halved or the budget runs out.
#[allow(clippy::too_many_arguments)]
pub fn half_loss_ordering(
    problem: &Problem,
    p: &LossOperator,
    net: NetSpec,
    eta: f64,
    seeds: &[u64],
    watch: &[usize],
    budget: usize,
    grid_n: usize,
    cap: usize,
) -> Result<Ordering> {
    let per_seed: Vec<(u64, Vec<Option<usize>>)> = seeds
        .par_iter()
        .map(|&seed| {
            let run = RunSpec {
                eta,
                epochs: budget,
                seed,
                record_stride: 1,
            };
            match train_s1(problem, p, net, run, grid_n, cap, watch, true) {
                Ok(r) => Ok((seed, r.half)),
                Err(e @ crate::Error::Divergence { .. }) => {
                    log::error!("seed {seed}: {e}");
                    Ok((seed, vec![None; watch.len()]))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let medians = (0..watch.len())
        .map(|j| {
            let col: Vec<Option<usize>> = per_seed.iter().map(|(_, h)| h[j]).collect();
            censored_median(&col).unwrap_or(f64::INFINITY)
        })
        .collect();
    Ok(Ordering {
        eta,
        watch: watch.to_vec(),
        per_seed,
        medians,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub eta: f64,
    pub ells: Vec<usize>,
    pub iterations: Vec<Option<usize>>,
    /// Present when at least three targets reached the threshold.
    pub fit: Option<ScalingFit>,
}

/// Epochs for sin(ℓθ) to reach loss < threshold under D_c, for each ℓ.
pub fn single_frequency_sweep(params: &Fig1Params, base: &Problem, seed: u64) -> Result<Sweep> {
    let p = LossKind::Quadrature.build(&base.rule)?;
    let eta = params.eta_for(base, &p)?;
    let iterations: Vec<Option<usize>> = params
        .sweep_ells
        .par_iter()
        .map(|&l| {
            let problem = base.with_target(HarmonicExpansion::single_sine(l))?;
            let run = RunSpec {
                eta,
                epochs: params.sweep_budget,
                seed,
                record_stride: 1,
            };
            match epochs_to_threshold(&problem, &p, params.net, run, params.sweep_threshold) {
                Ok(v) => Ok(v),
                Err(e @ crate::Error::Divergence { .. }) => {
                    log::error!("sweep target {l}: {e}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let (ells, counts): (Vec<usize>, Vec<f64>) = params
        .sweep_ells
        .iter()
        .zip(&iterations)
        .filter_map(|(&l, it)| it.map(|k| (l, k as f64)))
        .unzip();
    let fit = if ells.len() >= 3 {
        Some(fit_iteration_scaling(&ells, &counts)?)
    } else {
        None
    };
    Ok(Sweep {
        eta,
        ells: params.sweep_ells.clone(),
        iterations,
        fit,
    })
}

fn curve_run(
    params: &Fig1Params,
    problem: &Problem,
    p: &LossOperator,
    eta: f64,
) -> Result<FrequencyRun> {
    let run = RunSpec {
        eta,
        epochs: params.curve_epochs,
        seed: params.seeds.first().copied().unwrap_or(0),
        record_stride: params.curve_stride,
    };
    train_s1(
        problem,
        p,
        params.net,
        run,
        params.grid_n,
        params.cap,
        &[],
        false,
    )
}

fn curve_plot(title: &str, run: &FrequencyRun, ells: &[usize]) -> Plot {
    let mut plot = Plot::new(title, "epoch", "frequency loss").log_y();
    for &l in ells {
        let label = FrequencyLabel { ell: l, p: 0 };
        if let Some(series) = run.report.series(label) {
            let pts = run
                .report
                .epochs
                .iter()
                .zip(series)
                .map(|(&e, v)| (e as f64, v))
                .collect();
            plot = plot.with(Series::new(format!("l = {l}"), pts, Style::Line));
        }
    }
    plot
}

pub fn run(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<Summary> {
    let params = Fig1Params::from_config(cfg)?;
    let problem = params.problem()?;
    let mut summary = Summary::default();

    let mut nodes_csv = String::from("theta,c\n");
    let mut node_pts = Vec::with_capacity(problem.rule.len());
    for (t, c) in problem
        .nodes()
        .angles()
        .into_iter()
        .zip(problem.rule.weights())
    {
        let _ = writeln!(nodes_csv, "{t:e},{c:e}");
        node_pts.push((t, *c));
    }
    node_pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.add_file("nodes.csv", nodes_csv);
    out.add_file(
        "nodes.svg",
        Plot::new("Nodes and quadrature weights", "theta", "weight")
            .log_y()
            .with(Series::new("c", node_pts, Style::Points))
            .render(),
    );

    let mut half_csv = String::from("loss,seed,ell,epoch\n");
    let curve_ells: Vec<usize> = (1..=params.target_degree).collect();
    for (name, kind) in [("mse", LossKind::Mse), ("quadrature", LossKind::Quadrature)] {
        let p = kind.build(&problem.rule)?;
        let eta = params.eta_for(&problem, &p)?;
        summary.push(format!("eta_{name}"), format!("{eta:e}"));
        let curves = curve_run(&params, &problem, &p, eta)?;
        out.add_file(&format!("curves_{name}.csv"), curves.report.to_csv(false));
        out.add_file(
            &format!("curves_{name}.svg"),
            curve_plot(&format!("Frequency loss, {name}"), &curves, &curve_ells).render(),
        );
        let ord = half_loss_ordering(
            &problem,
            &p,
            params.net,
            eta,
            &params.seeds,
            &params.watch,
            params.half_budget,
            params.grid_n,
            params.cap,
        )?;
        for (seed, h) in &ord.per_seed {
            for (l, e) in params.watch.iter().zip(h) {
                let _ = writeln!(half_csv, "{name},{seed},{l},{}", epoch_cell(*e));
            }
        }
        for (l, m) in params.watch.iter().zip(&ord.medians) {
            summary.push(format!("median_half_{name}_ell{l}"), fmt_median(*m));
        }
        summary.push(
            format!("ordering_nondecreasing_{name}"),
            ord.nondecreasing(),
        );
    }
    out.add_file("half.csv", half_csv);

    let sweep = single_frequency_sweep(
        &params,
        &problem,
        params.seeds.first().copied().unwrap_or(0),
    )?;
    let mut scaling_csv = String::from("ell,iterations\n");
    for (l, it) in sweep.ells.iter().zip(&sweep.iterations) {
        let _ = writeln!(scaling_csv, "{l},{}", epoch_cell(*it));
    }
    out.add_file("scaling.csv", scaling_csv);
    let pts: Vec<(f64, f64)> = sweep
        .ells
        .iter()
        .zip(&sweep.iterations)
        .filter_map(|(&l, it)| it.map(|k| (l as f64, k as f64)))
        .collect();
    let mut plot = Plot::new(
        "Iterations to reach the loss threshold",
        "frequency",
        "iterations",
    )
    .log_log()
    .with(Series::new("observed", pts.clone(), Style::Line));
    if let Some(&(l0, k0)) = pts.first() {
        let reference = pts
            .iter()
            .map(|&(l, _)| (l, k0 * (l / l0).powi(2)))
            .collect();
        plot = plot.with(Series::new("l^2", reference, Style::Dashed));
    }
    out.add_file("scaling.svg", plot.render());
    if let Some(fit) = sweep.fit {
        summary.push("scaling_slope", format!("{:.4}", fit.slope));
        summary.push("scaling_fit_rms", format!("{:.4}", fit.residual));
    }
    out.add_file("summary.txt", summary.to_text());
    Ok(summary)
}
