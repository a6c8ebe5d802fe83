//! `image-demo`: a dense autoencoder trained on noisy synthetic images under
//! the image Sobolev loss, scored against the clean images.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::common::{fmt_median, Summary};
use super::config::{key, ExperimentConfig, KeySpec};
use super::manifest::RunDir;
use super::svg::{Plot, Series, Style};
use crate::error::{Error, Result};
use crate::numerics::median;
use crate::sobolev::{build_image_mask, centered_frequency, ImageSobolevMask};

pub const SCHEMA: &[KeySpec] = &[
    key("size", "16", "image side length"),
    key("n_images", "64", "training images"),
    key("blobs", "3", "Gaussian blobs per clean image"),
    key("blob_sigma", "0.8,1.5", "range of blob widths in pixels"),
    key("noise_std", "0.3", "noise standard deviation"),
    key(
        "high_cutoff",
        "5",
        "high-frequency noise keeps radial frequencies >= this",
    ),
    key(
        "low_cutoff",
        "1.5",
        "low-frequency noise keeps radial frequencies in (0, this]",
    ),
    key("hidden", "64", "autoencoder bottleneck width"),
    key("s_values", "-1,0,1", "Sobolev exponents"),
    key(
        "eta",
        "0.2",
        "step size before division by the largest squared mask value",
    ),
    key("epochs", "1000", "full-batch gradient steps"),
    key("seed", "0", "first seed"),
    key("n_seeds", "5", "seeds per noise type"),
];

pub const CSV_HELP: &str = "denoise.csv: noise,seed,s,clean_error,best_epoch; \
curve_<noise>.csv: epoch,s,clean_error,loss; images_<noise>.csv: kind,row,col,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseBand {
    Low,
    High,
}

impl NoiseBand {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseBand::Low => "low",
            NoiseBand::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoParams {
    pub size: usize,
    pub n_images: usize,
    pub blobs: usize,
    pub blob_sigma: (f64, f64),
    pub noise_std: f64,
    pub high_cutoff: f64,
    pub low_cutoff: f64,
    pub hidden: usize,
    pub s_values: Vec<f64>,
    pub eta: f64,
    pub epochs: usize,
    pub seeds: Vec<u64>,
}

impl DemoParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let sig = cfg.f64_list("blob_sigma")?;
        if sig.len() != 2 || !(sig[0] > 0.0 && sig[0] <= sig[1]) {
            return Err(Error::Config(
                "blob_sigma needs `lo,hi` with 0 < lo <= hi".into(),
            ));
        }
        Ok(Self {
            size: cfg.usize("size")?,
            n_images: cfg.usize("n_images")?,
            blobs: cfg.usize("blobs")?,
            blob_sigma: (sig[0], sig[1]),
            noise_std: cfg.f64("noise_std")?,
            high_cutoff: cfg.f64("high_cutoff")?,
            low_cutoff: cfg.f64("low_cutoff")?,
            hidden: cfg.usize("hidden")?,
            s_values: cfg.f64_list("s_values")?,
            eta: cfg.f64("eta")?,
            epochs: cfg.usize("epochs")?,
            seeds: super::fig1::seeds(cfg)?,
        })
    }

    pub fn defaults() -> Self {
        Self::from_config(&ExperimentConfig::defaults("image-demo", SCHEMA))
            .expect("defaults parse")
    }
}

/// Clean and noisy images, row-major, one image per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub clean: DMatrix<f64>,
    pub noisy: DMatrix<f64>,
}

/// Sums of Gaussian blobs plus band-limited Gaussian noise scaled to `noise_std`.
pub fn make_dataset(params: &DemoParams, band: NoiseBand, seed: u64) -> Result<Dataset> {
    let n = params.size;
    let px = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clean = DMatrix::zeros(params.n_images, px);
    let margin = (n as f64 / 8.0).min(2.0);
    for i in 0..params.n_images {
        for _ in 0..params.blobs {
            let cy = rng.gen_range(margin..n as f64 - margin);
            let cx = rng.gen_range(margin..n as f64 - margin);
            let s = if params.blob_sigma.0 < params.blob_sigma.1 {
                rng.gen_range(params.blob_sigma.0..params.blob_sigma.1)
            } else {
                params.blob_sigma.0
            };
            for r in 0..n {
                for c in 0..n {
                    let d2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
                    clean[(i, r * n + c)] += (-d2 / (2.0 * s * s)).exp();
                }
            }
        }
    }
    let fft = build_image_mask(n, n, 0.0)?;
    let keep = |j: usize, k: usize| {
        let (fj, fk) = (
            centered_frequency(j, n) as f64,
            centered_frequency(k, n) as f64,
        );
        let r = (fj * fj + fk * fk).sqrt();
        match band {
            NoiseBand::High => r >= params.high_cutoff,
            NoiseBand::Low => r > 0.0 && r <= params.low_cutoff,
        }
    };
    let mut noise = DMatrix::zeros(params.n_images, px);
    for i in 0..params.n_images {
        let white: Vec<f64> = (0..px).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut spec = fft.dft(&white);
        for j in 0..n {
            for k in 0..n {
                if !keep(j, k) {
                    spec[j * n + k] = Default::default();
                }
            }
        }
        for (p, v) in fft.idft_real(&spec)?.into_iter().enumerate() {
            noise[(i, p)] = v;
        }
    }
    let mean = noise.mean();
    let sd = (noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / noise.len() as f64).sqrt();
    if !(sd > 0.0) {
        return Err(Error::invalid("noise band is empty for this image size"));
    }
    noise *= params.noise_std / sd;
    Ok(Dataset {
        noisy: &clean + noise,
        clean,
    })
}

/// Per-epoch record of one autoencoder run.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseRun {
    pub s: f64,
    /// Mean squared distance of the reconstructions to the clean images.
    pub clean_error: Vec<f64>,
    /// Mean Sobolev loss against the noisy targets.
    pub loss: Vec<f64>,
    pub best_epoch: usize,
    pub best_clean_error: f64,
    /// Reconstruction of the first image at the best epoch.
    pub best_output: Vec<f64>,
}

/// Mean over images of ½‖S ∘ F(out_i − target_i)‖² and its gradient.
fn batch_loss_grad(
    mask: &ImageSobolevMask,
    out: &DMatrix<f64>,
    target: &DMatrix<f64>,
) -> Result<(f64, DMatrix<f64>)> {
    let n = out.nrows() as f64;
    let mut grad = DMatrix::zeros(out.nrows(), out.ncols());
    let mut total = 0.0;
    for i in 0..out.nrows() {
        let r: Vec<f64> = out
            .row(i)
            .iter()
            .zip(target.row(i).iter())
            .map(|(a, b)| a - b)
            .collect();
        let (l, g) = mask.residual_loss_grad(&r)?;
        total += l;
        for (j, v) in g.into_iter().enumerate() {
            grad[(i, j)] = v / n;
        }
    }
    Ok((total / n, grad))
}

/// Trains 256 → hidden (ReLU) → 256 with full-batch gradient descent on the
/// Sobolev loss between reconstructions and the noisy inputs.
pub fn train_autoencoder(
    params: &DemoParams,
    data: &Dataset,
    s: f64,
    seed: u64,
) -> Result<DenoiseRun> {
    let px = params.size * params.size;
    let h = params.hidden;
    let mask = build_image_mask(params.size, params.size, s)?;
    let m2max = mask.values().iter().map(|v| v * v).fold(0.0, f64::max);
    let eta = params.eta / m2max;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_ae);
    let mut normal = |sd: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        sd * z
    };
    let mut w1 = DMatrix::from_fn(px, h, |_, _| normal((2.0 / px as f64).sqrt()));
    let mut w2 = DMatrix::from_fn(h, px, |_, _| normal((1.0 / h as f64).sqrt()));
    let mut b1 = DMatrix::<f64>::zeros(1, h);
    let mut b2 = DMatrix::<f64>::zeros(1, px);
    let x = &data.noisy;
    let rows = x.nrows();
    let ones = DMatrix::from_element(1, rows, 1.0);
    let mut run = DenoiseRun {
        s,
        clean_error: Vec::with_capacity(params.epochs),
        loss: Vec::with_capacity(params.epochs),
        best_epoch: 0,
        best_clean_error: f64::INFINITY,
        best_output: Vec::new(),
    };
    for epoch in 0..=params.epochs {
        let pre = x * &w1 + &ones.transpose() * &b1;
        let hid = pre.map(|v| v.max(0.0));
        let out = &hid * &w2 + &ones.transpose() * &b2;
        let ce = (&out - &data.clean)
            .row_iter()
            .map(|r| r.norm_squared())
            .sum::<f64>()
            / rows as f64;
        let (loss, g) = batch_loss_grad(&mask, &out, x)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                last_loss: run.loss.last().copied().unwrap_or(f64::NAN),
            });
        }
        run.clean_error.push(ce);
        run.loss.push(loss);
        if ce < run.best_clean_error {
            run.best_clean_error = ce;
            run.best_epoch = epoch;
            run.best_output = out.row(0).iter().copied().collect();
        }
        if epoch == params.epochs {
            break;
        }
        let gw2 = hid.transpose() * &g;
        let gb2 = &ones * &g;
        let mut gh = &g * w2.transpose();
        gh.zip_apply(&pre, |v, p| {
            if p <= 0.0 {
                *v = 0.0
            }
        });
        let gw1 = x.transpose() * &gh;
        let gb1 = &ones * &gh;
        w1 -= eta * gw1;
        b1 -= eta * gb1;
        w2 -= eta * gw2;
        b2 -= eta * gb2;
    }
    Ok(run)
}

/// Clean-reference errors for every s, for one noise band and seed.
pub fn denoise(
    params: &DemoParams,
    band: NoiseBand,
    seed: u64,
) -> Result<(Dataset, Vec<DenoiseRun>)> {
    let data = make_dataset(params, band, seed)?;
    let runs = params
        .s_values
        .iter()
        .map(|&s| train_autoencoder(params, &data, s, seed))
        .collect::<Result<_>>()?;
    Ok((data, runs))
}

/// The s with the smallest median clean error over seeds.
pub fn best_s(s_values: &[f64], per_seed: &[Vec<f64>]) -> Option<f64> {
    let med: Vec<f64> = (0..s_values.len())
        .map(|k| median(&per_seed.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect();
    med.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| s_values[k])
}

fn image_rows(kind: &str, img: &[f64], n: usize, s: &mut String) {
    for r in 0..n {
        for c in 0..n {
            let _ = writeln!(s, "{kind},{r},{c},{:e}", img[r * n + c]);
        }
    }
}

pub fn run(cfg: &ExperimentConfig, out: &mut RunDir) -> Result<Summary> {
    let params = DemoParams::from_config(cfg)?;
    let mut summary = Summary::default();
    let mut table = String::from("noise,seed,s,clean_error,best_epoch\n");
    for band in [NoiseBand::High, NoiseBand::Low] {
        let results: Vec<(u64, Result<(Dataset, Vec<DenoiseRun>)>)> = params
            .seeds
            .par_iter()
            .map(|&seed| (seed, denoise(&params, band, seed)))
            .collect();
        let mut per_seed = Vec::new();
        for (k, (seed, res)) in results.into_iter().enumerate() {
            let (data, runs) = match res {
                Ok(v) => v,
                Err(e) => {
                    log::error!("{} noise, seed {seed}: {e}", band.name());
                    continue;
                }
            };
            for r in &runs {
                let _ = writeln!(
                    table,
                    "{},{seed},{},{:e},{}",
                    band.name(),
                    r.s,
                    r.best_clean_error,
                    r.best_epoch
                );
            }
            per_seed.push(runs.iter().map(|r| r.best_clean_error).collect::<Vec<_>>());
            if k == 0 {
                let mut curve = String::from("epoch,s,clean_error,loss\n");
                let mut plot = Plot::new(
                    &format!("Clean-reference error, {} noise", band.name()),
                    "epoch",
                    "mean squared error",
                )
                .log_y();
                for r in &runs {
                    for (e, (c, l)) in r.clean_error.iter().zip(&r.loss).enumerate() {
                        let _ = writeln!(curve, "{e},{},{c:e},{l:e}", r.s);
                    }
                    let pts = r
                        .clean_error
                        .iter()
                        .enumerate()
                        .map(|(e, &c)| (e as f64, c))
                        .collect();
                    plot = plot.with(Series::new(format!("s = {}", r.s), pts, Style::Line));
                }
                out.add_file(&format!("curve_{}.csv", band.name()), curve);
                out.add_file(&format!("curve_{}.svg", band.name()), plot.render());
                let n = params.size;
                let mut imgs = String::from("kind,row,col,value\n");
                let first = |m: &DMatrix<f64>| m.row(0).iter().copied().collect::<Vec<_>>();
                image_rows("clean", &first(&data.clean), n, &mut imgs);
                image_rows("noisy", &first(&data.noisy), n, &mut imgs);
                for r in &runs {
                    image_rows(&format!("output_s{}", r.s), &r.best_output, n, &mut imgs);
                }
                out.add_file(&format!("images_{}.csv", band.name()), imgs);
            }
        }
        for (k, s) in params.s_values.iter().enumerate() {
            let col: Vec<f64> = per_seed.iter().map(|r| r[k]).collect();
            if !col.is_empty() {
                summary.push(
                    format!("median_clean_error_{}_s{s}", band.name()),
                    fmt_median(median(&col)),
                );
            }
        }
        if let Some(b) = best_s(&params.s_values, &per_seed) {
            summary.push(format!("best_s_{}", band.name()), b);
        }
    }
    out.add_file("denoise.csv", table);
    out.add_file("summary.txt", summary.to_text());
    Ok(summary)
}
