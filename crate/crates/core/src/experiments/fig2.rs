//! `fig2`: per-frequency losses under P_s across s, and the half-loss
//! ordering flip between s = 0 and a large s.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::common::{
    choose_eta, circle_rule, epoch_cell, fmt_median, EtaRule, LossKind, Problem, Summary,
};
use super::config::{key, ExperimentConfig, KeySpec};
use super::fig1::{half_loss_ordering, seeds, Ordering};
use super::manifest::RunDir;
use super::quad::three_arc_counts;
use super::svg::{Plot, Series, Style};
use super::train::{net_spec, train_s1, NetSpec, RunSpec};
use crate::error::Result;
use crate::harmonics::HarmonicExpansion;

pub const SCHEMA: &[KeySpec] = &[
    key("three_arc", "100,40,1000", "three-arc counts"),
    key("degree", "55", "quadrature exactness degree"),
    key(
        "target_degree",
        "9",
        "target is sin(theta) + ... + sin(L theta)",
    ),
    key("s_values", "-1,0,1,2,3,4", "Sobolev exponents"),
    key("l_max", "30", "Sobolev truncation degree"),
    key("m", "16384", "hidden width"),
    key(
        "kappa",
        "10",
        "initialization scale (u(0) = 0 under antithetic init for any value)",
    ),
    key("scheme", "antithetic", "gaussian | antithetic"),
    key("eta", "auto", "step size, or auto (each s gets its own)"),
    key("eta_rule", "spectral", "spectral | bound"),
    key("eta_fraction", "0.9", "multiplier applied by the eta rule"),
    key("epochs", "2000", "epochs before the final losses are read"),
    key("seed", "0", "first seed"),
    key("n_seeds", "5", "seeds for the half-loss ordering"),
    key(
        "ordering_s",
        "0,3",
        "exponents at which the half-loss ordering is measured",
    ),
    key(
        "watch",
        "1,5,9",
        "frequencies whose half-loss epochs are compared",
    ),
    key("half_budget", "1500", "epoch cap for the ordering runs"),
    key("grid_n", "100", "uniform samples for the frequency loss"),
    key("cap", "30", "largest reported frequency"),
];

pub const CSV_HELP: &str = "rainbow.csv: s,ell,loss; half.csv: s,seed,ell,epoch";

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Params {
    pub counts: [usize; 3],
    pub degree: usize,
    pub target_degree: usize,
    pub s_values: Vec<f64>,
    pub l_max: usize,
    pub net: NetSpec,
    pub eta: Option<f64>,
    pub eta_rule: EtaRule,
    pub eta_fraction: f64,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub ordering_s: Vec<f64>,
    pub watch: Vec<usize>,
    pub half_budget: usize,
    pub grid_n: usize,
    pub cap: usize,
}

impl Fig2Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            counts: three_arc_counts(cfg, "three_arc")?,
            degree: cfg.usize("degree")?,
            target_degree: cfg.usize("target_degree")?,
            s_values: cfg.f64_list("s_values")?,
            l_max: cfg.usize("l_max")?,
            net: net_spec(cfg)?,
            eta: cfg.f64_or_auto("eta")?,
            eta_rule: cfg.raw("eta_rule")?.parse()?,
            eta_fraction: cfg.f64("eta_fraction")?,
            epochs: cfg.usize("epochs")?,
            seeds: seeds(cfg)?,
            ordering_s: cfg.f64_list("ordering_s")?,
            watch: cfg.usize_list("watch")?,
            half_budget: cfg.usize("half_budget")?,
            grid_n: cfg.usize("grid_n")?,
            cap: cfg.usize("cap")?,
        })
    }

    pub fn defaults() -> Self {
        Self::from_config(&ExperimentConfig::defaults("fig2", SCHEMA)).expect("defaults parse")
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(
            circle_rule(self.counts, self.degree)?,
            HarmonicExpansion::sine_sum(self.target_degree),
        )
    }

    /// Half-loss ordering under P_s.
    pub fn ordering_at(&self, problem: &Problem, s: f64) -> Result<Ordering> {
        let p = LossKind::Sobolev {
            s,
            l_max: self.l_max,
        }
        .build(&problem.rule)?;
        let eta = choose_eta(&problem.h, &p, self.eta_rule, self.eta_fraction, self.eta)?;
        half_loss_ordering(
            problem,
            &p,
            self.net,
            eta,
            &self.seeds,
            &self.watch,
            self.half_budget,
            self.grid_n,
            self.cap,
        )
    }
}

/// Final per-frequency losses after `epochs` for one s; `None` on failure.
fn final_losses(params: &Fig2Params, problem: &Problem, s: f64) -> Result<Option<(f64, Vec<f64>)>> {
    let p = LossKind::Sobolev {
        s,
        l_max: params.l_max,
    }
    .build(&problem.rule)?;
    let eta = choose_eta(
        &problem.h,
        &p,
        params.eta_rule,
        params.eta_fraction,
        params.eta,
    )?;
    let run = RunSpec {
        eta,
        epochs: params.epochs,
        seed: params.seeds.first().copied().unwrap_or(0),
        record_stride: params.epochs.max(1),
    };
    match train_s1(
        problem,
        &p,
        params.net,
        run,
        params.grid_n,
        params.cap,
        &[],
        false,
    ) {
        Ok(r) => {
            let last = r.report.values.last().cloned().unwrap_or_default();
            Ok(Some((eta, last)))
        }
        Err(e) => {
            log::error!("s = {s}: {e}");
            Ok(None)
        }
    }
}

pub fn run(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<Summary> {
    let params = Fig2Params::from_config(cfg)?;
    let problem = params.problem()?;
    let mut summary = Summary::default();

    let finals: Vec<Option<(f64, Vec<f64>)>> = params
        .s_values
        .par_iter()
        .map(|&s| final_losses(&params, &problem, s))
        .collect::<Result<_>>()?;
    let mut rainbow = String::from("s,ell,loss\n");
    let ells: Vec<usize> = (1..=params.target_degree).collect();
    let mut curves: Vec<Vec<(f64, f64)>> = vec![Vec::new(); ells.len()];
    for (&s, f) in params.s_values.iter().zip(&finals) {
        let Some((eta, losses)) = f else {
            summary.push(format!("failed_s{s}"), true);
            continue;
        };
        summary.push(format!("eta_s{s}"), format!("{eta:e}"));
        for (k, &l) in ells.iter().enumerate() {
            let v = losses[l];
            let _ = writeln!(rainbow, "{s},{l},{v:e}");
            curves[k].push((s, v));
        }
    }
    let mut plot = Plot::new(
        &format!("Frequency loss after {} epochs", params.epochs),
        "s",
        "frequency loss",
    )
    .log_y();
    for (k, &l) in ells.iter().enumerate() {
        plot = plot.with(Series::new(
            format!("l = {l}"),
            curves[k].clone(),
            Style::Line,
        ));
    }
    out.add_file("rainbow.csv", rainbow);
    out.add_file("rainbow.svg", plot.render());

    let mut half = String::from("s,seed,ell,epoch\n");
    for &s in &params.ordering_s {
        let ord = params.ordering_at(&problem, s)?;
        for (seed, h) in &ord.per_seed {
            for (l, e) in params.watch.iter().zip(h) {
                let _ = writeln!(half, "{s},{seed},{l},{}", epoch_cell(*e));
            }
        }
        for (l, m) in params.watch.iter().zip(&ord.medians) {
            summary.push(format!("median_half_s{s}_ell{l}"), fmt_median(*m));
        }
        summary.push(format!("nondecreasing_s{s}"), ord.nondecreasing());
        summary.push(format!("nonincreasing_s{s}"), ord.nonincreasing());
    }
    out.add_file("half.csv", half);
    out.add_file("summary.txt", summary.to_text());
    Ok(summary)
}
