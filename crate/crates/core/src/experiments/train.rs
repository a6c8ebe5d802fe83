//! `train`: one training run, plus the training drivers shared by the figures.

use std::fmt::Write as _;

use super::common::{
    choose_eta, circle_rule, sphere_subsample, EtaRule, LossKind, Problem, Summary,
};
use super::config::{key, ExperimentConfig, KeySpec};
use super::manifest::RunDir;
use super::quad::three_arc_counts;
use super::svg::{Plot, Series, Style};
use crate::diagnostics::{
    sphere_labels, FrequencyLabel, FrequencyLossReport, S1FrequencyLoss, S1FrequencyObserver,
    SphereFrequencyObserver,
};
use crate::error::{Error, Result};
use crate::harmonics::{HarmonicExpansion, HarmonicIndex};
use crate::quadrature::{design_weights, equispaced_nodes};
use crate::trainer::{
    train, InitScheme, LossOperator, Observer, TrainConfig, TrainingTrace, TwoLayerReluNet,
};

/// Width and initialization of a network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetSpec {
    pub m: usize,
    pub kappa: f64,
    pub scheme: InitScheme,
}

/// Step size and budget of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub eta: f64,
    pub epochs: usize,
    pub seed: u64,
    pub record_stride: usize,
}

impl RunSpec {
    fn config(&self, net: &NetSpec) -> TrainConfig {
        let mut c = TrainConfig::new(self.eta, self.epochs);
        c.kappa = net.kappa;
        c.scheme = net.scheme;
        c.seed = self.seed;
        c.record_stride = self.record_stride;
        c
    }
}

/// A finished run with its frequency report and half-loss epochs.
#[derive(Debug, Clone)]
pub struct FrequencyRun {
    pub trace: TrainingTrace,
    pub report: FrequencyLossReport,
    /// First epoch at which each watched frequency fell to half its initial value.
    pub half: Vec<Option<usize>>,
}

/// Trains on S¹ while recording |N̂(ℓ) − ĝ(ℓ)| for ℓ ≤ cap on a uniform grid.
/// With `stop_early`, training ends once every watched degree has halved.
#[allow(clippy::too_many_arguments)]
pub fn train_s1(
    problem: &Problem,
    p: &LossOperator,
    net: NetSpec,
    run: RunSpec,
    grid_n: usize,
    cap: usize,
    watch: &[usize],
    stop_early: bool,
) -> Result<FrequencyRun> {
    let config = run.config(&net);
    let mut model = config.init_net(net.m, 2)?;
    let loss = S1FrequencyLoss::new(&problem.target, grid_n, cap)?;
    let mut obs = S1FrequencyObserver::new(loss).stop_when_halved(watch)?;
    let labels = obs.labels();
    let trace = if stop_early {
        train(
            &mut model,
            &problem.y,
            problem.nodes(),
            p,
            &config,
            &mut [&mut obs],
        )?
    } else {
        let mut passive = Passive(&mut obs);
        train(
            &mut model,
            &problem.y,
            problem.nodes(),
            p,
            &config,
            &mut [&mut passive],
        )?
    };
    let report = FrequencyLossReport::from_trace(&trace, labels, 0)?;
    Ok(FrequencyRun {
        half: obs.half_epochs(),
        trace,
        report,
    })
}

/// Trains on S² while recording selected projected coefficient errors.
pub fn train_sphere(
    problem: &Problem,
    p: &LossOperator,
    net: NetSpec,
    run: RunSpec,
    harmonics: &[HarmonicIndex],
    stop_early: bool,
) -> Result<FrequencyRun> {
    let config = run.config(&net);
    let mut model = config.init_net(net.m, 3)?;
    let mut obs = SphereFrequencyObserver::new(&problem.rule, harmonics)?.stop_when_halved();
    let labels = obs.labels();
    let trace = if stop_early {
        train(
            &mut model,
            &problem.y,
            problem.nodes(),
            p,
            &config,
            &mut [&mut obs],
        )?
    } else {
        let mut passive = Passive(&mut obs);
        train(
            &mut model,
            &problem.y,
            problem.nodes(),
            p,
            &config,
            &mut [&mut passive],
        )?
    };
    let report = FrequencyLossReport::from_trace(&trace, labels, 0)?;
    Ok(FrequencyRun {
        half: obs.half_epochs(),
        trace,
        report,
    })
}

/// Forwards observations but never asks training to stop.
struct Passive<'a, O: Observer>(&'a mut O);

impl<O: Observer> Observer for Passive<'_, O> {
    fn width(&self) -> usize {
        self.0.width()
    }

    fn observe(
        &mut self,
        epoch: usize,
        net: &TwoLayerReluNet,
        residual: &[f64],
    ) -> Result<Vec<f64>> {
        self.0.observe(epoch, net, residual)
    }
}

/// Stops training at the first epoch with ½ zᵀPz below a threshold.
struct LossBelow<'a> {
    p: &'a LossOperator,
    threshold: f64,
    hit: Option<usize>,
}

impl Observer for LossBelow<'_> {
    fn width(&self) -> usize {
        0
    }

    fn observe(
        &mut self,
        epoch: usize,
        _net: &TwoLayerReluNet,
        residual: &[f64],
    ) -> Result<Vec<f64>> {
        if self.hit.is_none() && 0.5 * self.p.quad_form(residual) < self.threshold {
            self.hit = Some(epoch);
        }
        Ok(Vec::new())
    }

    fn done(&self) -> bool {
        self.hit.is_some()
    }
}

/// Epochs until the loss first drops below `threshold`, or `None` within budget.
pub fn epochs_to_threshold(
    problem: &Problem,
    p: &LossOperator,
    net: NetSpec,
    run: RunSpec,
    threshold: f64,
) -> Result<Option<usize>> {
    let mut config = run.config(&net);
    config.record_stride = 1;
    let mut model = config.init_net(net.m, problem.nodes().dim())?;
    let mut obs = LossBelow {
        p,
        threshold,
        hit: None,
    };
    train(
        &mut model,
        &problem.y,
        problem.nodes(),
        p,
        &config,
        &mut [&mut obs],
    )?;
    Ok(obs.hit)
}

pub const SCHEMA: &[KeySpec] = &[
    key("nodes", "three-arc", "three-arc | equispaced | sphere"),
    key("three_arc", "100,40,1000", "three-arc counts"),
    key("equispaced_n", "256", "equispaced circle nodes"),
    key(
        "sphere_n",
        "900",
        "farthest-point subsample of the bundled S^2 lattice",
    ),
    key("degree", "55", "quadrature exactness degree"),
    key("target", "sine_sum", "sine_sum | single_sine | even_zonal"),
    key(
        "target_degree",
        "9",
        "top degree of the target (even_zonal: number of terms)",
    ),
    key("loss", "quadrature", "mse | quadrature | sobolev"),
    key("s", "0", "Sobolev exponent"),
    key("l_max", "30", "Sobolev truncation degree"),
    key("m", "4096", "hidden width"),
    key(
        "kappa",
        "10",
        "initialization scale (u(0) = 0 under antithetic init for any value)",
    ),
    key("scheme", "antithetic", "gaussian | antithetic"),
    key("eta", "auto", "step size, or auto"),
    key(
        "eta_rule",
        "spectral",
        "spectral | bound (used when eta = auto)",
    ),
    key("eta_fraction", "0.9", "multiplier applied by the eta rule"),
    key("epochs", "1000", "gradient steps"),
    key("record_stride", "10", "record every k-th epoch"),
    key("cap", "30", "largest reported frequency"),
    key(
        "grid_n",
        "100",
        "uniform samples for the S^1 frequency loss",
    ),
    key("seed", "0", "initialization seed"),
];

pub const CSV_HELP: &str =
    "loss.csv: epoch,loss; frequency.csv: epoch,ell,value (S^2: epoch,ell,p,value); \
net.bin: network checkpoint";

pub fn net_spec(cfg: &ExperimentConfig) -> Result<NetSpec> {
    Ok(NetSpec {
        m: cfg.usize("m")?,
        kappa: cfg.f64("kappa")?,
        scheme: cfg
            .raw("scheme")?
            .parse()
            .map_err(|e: Error| Error::Config(e.to_string()))?,
    })
}

pub fn run(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<Summary> {
    let degree = cfg.usize("degree")?;
    let top = cfg.usize("target_degree")?;
    let on_sphere = cfg.raw("nodes")? == "sphere";
    let rule = match cfg.raw("nodes")? {
        "three-arc" => circle_rule(three_arc_counts(cfg, "three_arc")?, degree)?,
        "equispaced" => design_weights(&equispaced_nodes(cfg.usize("equispaced_n")?)?, degree)?,
        "sphere" => {
            out.add_input(
                super::common::SPHERE_ASSET_NAME,
                super::common::SPHERE_ASSET.as_bytes(),
            );
            design_weights(&sphere_subsample(cfg.usize("sphere_n")?)?, degree)?
        }
        other => return Err(Error::Config(format!("unknown node set `{other}`"))),
    };
    let target = match (cfg.raw("target")?, on_sphere) {
        ("sine_sum", false) => HarmonicExpansion::sine_sum(top),
        ("single_sine", false) => HarmonicExpansion::single_sine(top),
        ("even_zonal", true) => HarmonicExpansion::even_zonal_sum(top),
        (t, _) => {
            return Err(Error::Config(format!(
                "target `{t}` does not live on the chosen node set"
            )))
        }
    };
    let problem = Problem::new(rule, target)?;
    let kind = LossKind::parse(cfg.raw("loss")?, cfg.f64("s")?, cfg.usize("l_max")?)?;
    let p = kind.build(&problem.rule)?;
    let eta_rule: EtaRule = cfg.raw("eta_rule")?.parse()?;
    let eta = choose_eta(
        &problem.h,
        &p,
        eta_rule,
        cfg.f64("eta_fraction")?,
        cfg.f64_or_auto("eta")?,
    )?;
    let net = net_spec(cfg)?;
    let spec = RunSpec {
        eta,
        epochs: cfg.usize("epochs")?,
        seed: cfg.u64("seed")?,
        record_stride: cfg.usize("record_stride")?,
    };
    let config = spec.config(&net);
    let d = problem.nodes().dim();
    let mut model = config.init_net(net.m, d)?;
    let (trace, report) = if on_sphere {
        let l_max = problem.target.max_degree();
        let harmonics: Vec<HarmonicIndex> = sphere_labels(l_max)?
            .into_iter()
            .map(|l| HarmonicIndex {
                degree: l.ell,
                order: l.p,
            })
            .collect();
        let mut obs = SphereFrequencyObserver::new(&problem.rule, &harmonics)?;
        let labels = obs.labels();
        let trace = train(
            &mut model,
            &problem.y,
            problem.nodes(),
            &p,
            &config,
            &mut [&mut obs],
        )?;
        let report = FrequencyLossReport::from_trace(&trace, labels, 0)?;
        (trace, report)
    } else {
        let loss = S1FrequencyLoss::new(&problem.target, cfg.usize("grid_n")?, cfg.usize("cap")?)?;
        let mut obs = S1FrequencyObserver::new(loss);
        let labels = obs.labels();
        let trace = train(
            &mut model,
            &problem.y,
            problem.nodes(),
            &p,
            &config,
            &mut [&mut obs],
        )?;
        let report = FrequencyLossReport::from_trace(&trace, labels, 0)?;
        (trace, report)
    };

    let mut loss_csv = String::from("epoch,loss\n");
    for r in &trace.records {
        let _ = writeln!(loss_csv, "{},{:e}", r.epoch, r.loss);
    }
    let curve: Vec<(f64, f64)> = trace
        .records
        .iter()
        .map(|r| (r.epoch as f64, r.loss))
        .collect();
    let plot = Plot::new("Training loss", "epoch", "loss")
        .log_y()
        .with(Series::new(p.describe(), curve, Style::Line));
    out.add_file("loss.csv", loss_csv);
    out.add_file("frequency.csv", report.to_csv(on_sphere));
    out.add_file("loss.svg", plot.render());
    out.add_file("net.bin", model.to_bytes());

    let mut summary = Summary::default();
    summary.push("n", problem.rule.len());
    summary.push("loss_operator", p.describe());
    summary.push("eta", format!("{eta:e}"));
    summary.push("initial_loss", format!("{:e}", trace.records[0].loss));
    summary.push("final_loss", format!("{:e}", trace.final_loss()));
    summary.push("loss_increases", trace.monotonicity_violations);
    for l in [1usize, 5, 9] {
        let label = FrequencyLabel {
            ell: l,
            p: if on_sphere { l + 1 } else { 0 },
        };
        if let Some(e) = report.epochs_to_fraction(label, 0.5) {
            summary.push(format!("half_epoch_ell{l}"), e);
        }
    }
    out.add_file("summary.txt", summary.to_text());
    Ok(summary)
}
