//! `spectrum`: kernel eigenvalues μ_ℓ and their decay.

use std::fmt::Write as _;

use super::common::Summary;
use super::config::{key, ExperimentConfig, KeySpec};
use super::manifest::RunDir;
use super::svg::{Plot, Series, Style};
use crate::error::{Error, Result};
use crate::ntk::{KernelSpectrum, SpectrumMethod};
use crate::numerics::linear_fit;

pub const SCHEMA: &[KeySpec] = &[
    key("d", "3", "ambient dimension (sphere S^{d-1})"),
    key("l_max", "20", "largest degree"),
    key("method", "best", "closed | numeric | dense | best | both"),
    key("fit_from", "10", "smallest degree in the log-log decay fit"),
    key("seed", "0", "unused; accepted for interface uniformity"),
];

pub const CSV_HELP: &str = "spectrum.csv: ell,mu (method=both: ell,mu_closed,mu_numeric,abs_diff)";

/// Least-squares slope of log μ_ℓ against log ℓ over `from..=mu.len()-1`.
pub fn decay_slope(mu: &[f64], from: usize) -> Result<f64> {
    let from = from.max(1);
    if mu.len() < from + 3 {
        return Err(Error::invalid("decay fit needs at least three degrees"));
    }
    let x: Vec<f64> = (from..mu.len()).map(|l| (l as f64).ln()).collect();
    let y: Vec<f64> = mu[from..].iter().map(|m| m.ln()).collect();
    Ok(linear_fit(&x, &y)?.0)
}

fn method(s: &str) -> Result<Option<SpectrumMethod>> {
    Ok(Some(match s {
        "closed" => SpectrumMethod::ClosedForm,
        "numeric" => SpectrumMethod::FunkHecke1d,
        "dense" => SpectrumMethod::DenseSphere,
        "best" | "both" => return Ok(None),
        other => return Err(Error::Config(format!("unknown spectrum method `{other}`"))),
    }))
}

pub fn run(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<Summary> {
    let d = cfg.usize("d")?;
    let l_max = cfg.usize("l_max")?;
    let which = cfg.string("method")?;
    let fit_from = cfg.usize("fit_from")?;
    let mut csv = String::new();
    let mut summary = Summary::default();
    let mu = if which == "both" {
        let a = KernelSpectrum::compute(d, l_max, SpectrumMethod::ClosedForm)?;
        let b = KernelSpectrum::compute(d, l_max, SpectrumMethod::FunkHecke1d)?;
        csv.push_str("ell,mu_closed,mu_numeric,abs_diff\n");
        let mut worst = 0.0f64;
        for (l, (x, y)) in a.mu.iter().zip(&b.mu).enumerate() {
            worst = worst.max((x - y).abs());
            let _ = writeln!(csv, "{l},{x:e},{y:e},{:e}", (x - y).abs());
        }
        summary.push("max_abs_diff", format!("{worst:e}"));
        a.mu
    } else {
        let spec = match method(&which)? {
            Some(m) => KernelSpectrum::compute(d, l_max, m)?,
            None => KernelSpectrum::best(d, l_max)?,
        };
        summary.push("method", spec.method.tag());
        csv.push_str("ell,mu\n");
        for (l, m) in spec.mu.iter().enumerate() {
            let _ = writeln!(csv, "{l},{m:e}");
        }
        spec.mu
    };
    summary.push("rows", mu.len());
    if let Ok(slope) = decay_slope(&mu, fit_from) {
        summary.push("decay_slope", format!("{slope:.6}"));
    }
    let pts: Vec<(f64, f64)> = mu
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, &m)| (l as f64, m))
        .collect();
    let anchor = mu[l_max] * (l_max as f64).powi(d as i32);
    let reference: Vec<(f64, f64)> = (1..=l_max)
        .map(|l| (l as f64, anchor * (l as f64).powi(-(d as i32))))
        .collect();
    let plot = Plot::new(&format!("Kernel eigenvalues, d = {d}"), "degree", "mu")
        .log_log()
        .with(Series::new("mu", pts, Style::Line))
        .with(Series::new(format!("l^-{d}"), reference, Style::Dashed));
    out.add_file("spectrum.csv", csv);
    out.add_file("spectrum.svg", plot.render());
    out.add_file("summary.txt", summary.to_text());
    Ok(summary)
}
