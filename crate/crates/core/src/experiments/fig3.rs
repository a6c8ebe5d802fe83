//! `fig3`: zonal frequency losses on S² under P_s for several s.

use std::fmt::Write as _;

use super::common::{
    choose_eta, epoch_cell, sphere_subsample, EtaRule, LossKind, Problem, Summary, SPHERE_ASSET,
    SPHERE_ASSET_NAME,
};
use super::config::{key, ExperimentConfig, KeySpec};
use super::manifest::RunDir;
use super::svg::{Plot, Series, Style};
use super::train::{net_spec, train_sphere, FrequencyRun, NetSpec, RunSpec};
use crate::error::Result;
use crate::harmonics::{HarmonicExpansion, HarmonicIndex};
use crate::quadrature::design_weights;

pub const SCHEMA: &[KeySpec] = &[
    key(
        "sphere_n",
        "900",
        "farthest-point subsample of the bundled 2500-point lattice",
    ),
    key("degree", "26", "quadrature exactness degree"),
    key("l_max", "22", "Sobolev truncation degree"),
    key(
        "target_terms",
        "15",
        "target is Y_{2,0} + Y_{4,0} + ... + Y_{2K,0}",
    ),
    key("s_values", "-1,0,2.5", "Sobolev exponents"),
    key("watch", "4,10,20", "zonal degrees whose losses are tracked"),
    key("m", "8192", "hidden width"),
    key(
        "kappa",
        "10",
        "initialization scale (u(0) = 0 under antithetic init for any value)",
    ),
    key("scheme", "antithetic", "gaussian | antithetic"),
    key("eta", "auto", "step size, or auto (each s gets its own)"),
    key("eta_rule", "spectral", "spectral | bound"),
    key("eta_fraction", "0.9", "multiplier applied by the eta rule"),
    key("epochs", "3000", "epoch cap"),
    key(
        "stop_when_halved",
        "true",
        "stop once every tracked loss has halved",
    ),
    key("seed", "0", "initialization seed"),
];

pub const CSV_HELP: &str = "curves_s<S>.csv: epoch,ell,p,value; half.csv: s,ell,epoch";

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Params {
    pub sphere_n: usize,
    pub degree: usize,
    pub l_max: usize,
    pub target_terms: usize,
    pub s_values: Vec<f64>,
    pub watch: Vec<usize>,
    pub net: NetSpec,
    pub eta: Option<f64>,
    pub eta_rule: EtaRule,
    pub eta_fraction: f64,
    pub epochs: usize,
    pub stop_when_halved: bool,
    pub seed: u64,
}

impl Fig3Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            sphere_n: cfg.usize("sphere_n")?,
            degree: cfg.usize("degree")?,
            l_max: cfg.usize("l_max")?,
            target_terms: cfg.usize("target_terms")?,
            s_values: cfg.f64_list("s_values")?,
            watch: cfg.usize_list("watch")?,
            net: net_spec(cfg)?,
            eta: cfg.f64_or_auto("eta")?,
            eta_rule: cfg.raw("eta_rule")?.parse()?,
            eta_fraction: cfg.f64("eta_fraction")?,
            epochs: cfg.usize("epochs")?,
            stop_when_halved: cfg.bool("stop_when_halved")?,
            seed: cfg.u64("seed")?,
        })
    }

    pub fn defaults() -> Self {
        Self::from_config(&ExperimentConfig::defaults("fig3", SCHEMA)).expect("defaults parse")
    }

    pub fn problem(&self) -> Result<Problem> {
        let rule = design_weights(&sphere_subsample(self.sphere_n)?, self.degree)?;
        Problem::new(rule, HarmonicExpansion::even_zonal_sum(self.target_terms))
    }

    /// Trains under P_s while tracking the zonal coefficients in `watch`.
    pub fn run_at(&self, problem: &Problem, s: f64) -> Result<(f64, FrequencyRun)> {
        let p = LossKind::Sobolev {
            s,
            l_max: self.l_max,
        }
        .build(&problem.rule)?;
        let eta = choose_eta(&problem.h, &p, self.eta_rule, self.eta_fraction, self.eta)?;
        let harmonics: Vec<HarmonicIndex> = self
            .watch
            .iter()
            .map(|&l| HarmonicIndex::zonal(l))
            .collect();
        let run = RunSpec {
            eta,
            epochs: self.epochs,
            seed: self.seed,
            record_stride: 1,
        };
        Ok((
            eta,
            train_sphere(
                problem,
                &p,
                self.net,
                run,
                &harmonics,
                self.stop_when_halved,
            )?,
        ))
    }
}

/// The watched degree whose loss halves first; ties go to the lower degree,
/// and `None` if no watched loss halves.
pub fn fastest(watch: &[usize], half: &[Option<usize>]) -> Option<usize> {
    watch
        .iter()
        .zip(half)
        .filter_map(|(&l, h)| h.map(|e| (e, l)))
        .min()
        .map(|(_, l)| l)
}

pub fn run(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<Summary> {
    let params = Fig3Params::from_config(cfg)?;
    out.add_input(SPHERE_ASSET_NAME, SPHERE_ASSET.as_bytes());
    let problem = params.problem()?;
    let mut summary = Summary::default();
    summary.push("n", problem.rule.len());
    let mut half_csv = String::from("s,ell,epoch\n");
    for &s in &params.s_values {
        let (eta, run) = match params.run_at(&problem, s) {
            Ok(r) => r,
            Err(e @ crate::Error::Divergence { .. }) => {
                log::error!("s = {s}: {e}");
                summary.push(format!("failed_s{s}"), true);
                continue;
            }
            Err(e) => return Err(e),
        };
        summary.push(format!("eta_s{s}"), format!("{eta:e}"));
        for (l, h) in params.watch.iter().zip(&run.half) {
            let _ = writeln!(half_csv, "{s},{l},{}", epoch_cell(*h));
        }
        if let Some(l) = fastest(&params.watch, &run.half) {
            summary.push(format!("fastest_s{s}"), l);
        }
        out.add_file(&format!("curves_s{s}.csv"), run.report.to_csv(true));
        let mut plot = Plot::new(
            &format!("Zonal frequency loss, s = {s}"),
            "epoch",
            "frequency loss",
        )
        .log_y();
        for (k, &l) in params.watch.iter().enumerate() {
            let pts = run
                .report
                .epochs
                .iter()
                .zip(&run.report.values)
                .map(|(&e, row)| (e as f64, row[k]))
                .collect();
            plot = plot.with(Series::new(format!("l = {l}"), pts, Style::Line));
        }
        out.add_file(&format!("curves_s{s}.svg"), plot.render());
    }
    out.add_file("half.csv", half_csv);
    out.add_file("summary.txt", summary.to_text());
    Ok(summary)
}
