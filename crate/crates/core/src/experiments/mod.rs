//! Desk-scale experiment drivers behind the `sbl` command line.

use std::path::Path;

use crate::error::{Error, Result};

pub mod common;
pub mod config;
pub mod fig1;
pub mod fig2;
pub mod fig3;
pub mod image_demo;
pub mod manifest;
pub mod quad;
pub mod spectrum;
pub mod svg;
pub mod train;

use common::Summary;
use config::{ExperimentConfig, KeySpec};
use manifest::{RunDir, RunManifest};

/// Every runnable experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Spectrum,
    Quad,
    Train,
    Fig1,
    Fig2,
    Fig3,
    ImageDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Spectrum,
        Experiment::Quad,
        Experiment::Train,
        Experiment::Fig1,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::ImageDemo,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Quad => "quad",
            Experiment::Train => "train",
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::ImageDemo => "image-demo",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{name}`")))
    }

    pub fn schema(&self) -> &'static [KeySpec] {
        match self {
            Experiment::Spectrum => spectrum::SCHEMA,
            Experiment::Quad => quad::SCHEMA,
            Experiment::Train => train::SCHEMA,
            Experiment::Fig1 => fig1::SCHEMA,
            Experiment::Fig2 => fig2::SCHEMA,
            Experiment::Fig3 => fig3::SCHEMA,
            Experiment::ImageDemo => image_demo::SCHEMA,
        }
    }

    pub fn csv_help(&self) -> &'static str {
        match self {
            Experiment::Spectrum => spectrum::CSV_HELP,
            Experiment::Quad => quad::CSV_HELP,
            Experiment::Train => train::CSV_HELP,
            Experiment::Fig1 => fig1::CSV_HELP,
            Experiment::Fig2 => fig2::CSV_HELP,
            Experiment::Fig3 => fig3::CSV_HELP,
            Experiment::ImageDemo => image_demo::CSV_HELP,
        }
    }

    pub fn defaults(&self) -> ExperimentConfig {
        ExperimentConfig::defaults(self.name(), self.schema())
    }

    pub fn load(&self, path: &Path) -> Result<ExperimentConfig> {
        ExperimentConfig::load(self.name(), self.schema(), path)
    }

    /// Runs into memory; nothing touches disk until [`RunDir::finish`].
    pub fn run(&self, cfg: &ExperimentConfig, out: &mut RunDir) -> Result<Summary> {
        match self {
            Experiment::Spectrum => spectrum::run(cfg, out),
            Experiment::Quad => quad::run(cfg, out),
            Experiment::Train => train::run(cfg, out),
            Experiment::Fig1 => fig1::run(cfg, out),
            Experiment::Fig2 => fig2::run(cfg, out),
            Experiment::Fig3 => fig3::run(cfg, out),
            Experiment::ImageDemo => image_demo::run(cfg, out),
        }
    }

    /// Runs and writes outputs, the resolved config and the manifest to `dir`.
    pub fn run_to_dir(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<(Summary, RunManifest)> {
        let mut out = RunDir::new(dir);
        let summary = self.run(cfg, &mut out)?;
        let manifest = out.finish(cfg)?;
        Ok((summary, manifest))
    }
}
