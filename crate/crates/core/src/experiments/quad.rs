//! `quad`: positive quadrature design and its exactness report.

use std::fmt::Write as _;
use std::path::Path;

use super::common::Summary;
use super::config::{key, ExperimentConfig, KeySpec};
use super::manifest::RunDir;
use super::svg::{Plot, Series, Style};
use crate::error::{Error, Result};
use crate::quadrature::{
    design_weights_with_info, equispaced_nodes, exactness_report, three_arc_angles,
};
use crate::sphere::SpherePointSet;

pub const SCHEMA: &[KeySpec] = &[
    key("nodes", "three-arc", "three-arc | equispaced | file"),
    key(
        "three_arc",
        "100,40,1000",
        "three-arc counts: uniform, arc [0,0.4pi), arc [1.4pi,1.8pi)",
    ),
    key("equispaced_n", "64", "number of equispaced circle nodes"),
    key(
        "nodes_file",
        "",
        "CSV of unit vectors (x,y[,z]) when nodes = file",
    ),
    key("degree", "55", "exactness degree L"),
    key(
        "gamma_degrees",
        "",
        "degrees at which to estimate the worst-case error gamma",
    ),
    key("gamma_trials", "20", "random trial functions per degree"),
    key("seed", "0", "seed for the gamma trial functions"),
];

pub const CSV_HELP: &str = "rule.csv: x,y[,z],c; moments.csv: ell,max_moment_error; \
gamma.csv: ell,gamma; perturbations.csv: index,from,to";

pub fn three_arc_counts(cfg: &ExperimentConfig, key: &str) -> Result<[usize; 3]> {
    let v = cfg.usize_list(key)?;
    <[usize; 3]>::try_from(v.as_slice())
        .map_err(|_| Error::Config(format!("`{key}` needs three counts")))
}

pub fn run(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<Summary> {
    let degree = cfg.usize("degree")?;
    let mut perturb_csv = None;
    let nodes = match cfg.raw("nodes")? {
        "three-arc" => {
            let [a, b, c] = three_arc_counts(cfg, "three_arc")?;
            let t = three_arc_angles(a, b, c);
            let mut s = String::from("index,from,to\n");
            for p in &t.perturbed {
                let _ = writeln!(s, "{},{:e},{:e}", p.index, p.from, p.to);
            }
            perturb_csv = Some(s);
            SpherePointSet::from_angles(&t.angles)?
        }
        "equispaced" => equispaced_nodes(cfg.usize("equispaced_n")?)?,
        "file" => {
            let path = cfg.string("nodes_file")?;
            if path.is_empty() {
                return Err(Error::Config("nodes = file needs nodes_file".into()));
            }
            let path = Path::new(&path);
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            out.add_input(&path.display().to_string(), &bytes);
            SpherePointSet::read_csv(path)?
        }
        other => return Err(Error::Config(format!("unknown node set `{other}`"))),
    };
    let (rule, info) = design_weights_with_info(&nodes, degree)?;
    let gamma_degrees = cfg.usize_list("gamma_degrees")?;
    let report = exactness_report(
        &rule,
        degree,
        &gamma_degrees,
        cfg.usize("gamma_trials")?,
        cfg.u64("seed")?,
    )?;

    let mut moments = String::from("ell,max_moment_error\n");
    for (l, e) in report.max_moment_error.iter().enumerate() {
        let _ = writeln!(moments, "{l},{e:e}");
    }
    let mut gamma = String::from("ell,gamma\n");
    for (l, g) in &report.gamma_estimate {
        let _ = writeln!(gamma, "{l},{g:e}");
    }
    let w = rule.weights();
    let mut summary = Summary::default();
    summary.push("n", rule.len());
    summary.push("degree", degree);
    summary.push("sum_weights", format!("{:.15e}", w.iter().sum::<f64>()));
    summary.push(
        "min_weight",
        format!("{:e}", w.iter().copied().fold(f64::INFINITY, f64::min)),
    );
    summary.push("c_max", format!("{:e}", rule.c_max()));
    summary.push("active_set", info.used_active_set);
    summary.push("active_set_iterations", info.iterations);
    summary.push("weights_at_floor", info.at_lower_bound);
    summary.push(
        "max_moment_error",
        format!(
            "{:e}",
            report.max_moment_error.iter().copied().fold(0.0, f64::max)
        ),
    );

    let plot = if nodes.dim() == 2 {
        let mut pts: Vec<(f64, f64)> = nodes.angles().into_iter().zip(w.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        Plot::new("Quadrature weights", "theta", "weight")
            .log_y()
            .with(Series::new("c", pts, Style::Points))
    } else {
        let pts: Vec<(f64, f64)> = nodes.iter().zip(w).map(|(p, &c)| (p[2], c)).collect();
        Plot::new("Quadrature weights", "z", "weight")
            .log_y()
            .with(Series::new("c", pts, Style::Points))
    };
    out.add_file("rule.csv", rule.to_csv());
    out.add_file("moments.csv", moments);
    out.add_file("gamma.csv", gamma);
    if let Some(p) = perturb_csv {
        out.add_file("perturbations.csv", p);
    }
    out.add_file("rule.svg", plot.render());
    out.add_file("summary.txt", summary.to_text());
    Ok(summary)
}
