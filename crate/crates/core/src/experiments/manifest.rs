//! Run directories: outputs, resolved config, and a hash manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const CONFIG_FILE: &str = "config.resolved";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Git-style content hash: sha256 over `blob <len>\0<bytes>`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// What a run consumed and produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    /// (label, content hash) for every external input.
    pub inputs: Vec<(String, String)>,
    /// (file name, content hash) for every output in the run directory.
    pub outputs: Vec<(String, String)>,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "config = {}", self.config_hash);
        for (k, v) in &self.inputs {
            let _ = writeln!(s, "input {k} = {v}");
        }
        for (k, v) in &self.outputs {
            let _ = writeln!(s, "output {k} = {v}");
        }
        let _ = writeln!(s, "wall_clock_secs = {:.3}", self.wall_clock_secs);
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |msg: String| Error::Format {
            path: path.to_path_buf(),
            msg,
        };
        let mut m = RunManifest {
            experiment: String::new(),
            config_hash: String::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_secs: 0.0,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| bad(format!("malformed line `{line}`")))?;
            let v = v.trim().to_string();
            match k.split_once(' ') {
                Some(("input", name)) => m.inputs.push((name.to_string(), v)),
                Some(("output", name)) => m.outputs.push((name.to_string(), v)),
                _ => match k {
                    "experiment" => m.experiment = v,
                    "config" => m.config_hash = v,
                    "wall_clock_secs" => {
                        m.wall_clock_secs = v
                            .parse()
                            .map_err(|_| bad(format!("bad wall clock `{v}`")))?
                    }
                    other => return Err(bad(format!("unknown manifest entry `{other}`"))),
                },
            }
        }
        Ok(m)
    }
}

/// Collects outputs in memory and writes them, the resolved config, and the
/// manifest on `finish`.
#[derive(Debug)]
pub struct RunDir {
    dir: PathBuf,
    started: Instant,
    inputs: Vec<(String, String)>,
    files: Vec<(String, Vec<u8>)>,
}

impl RunDir {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            inputs: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn add_input(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.push((label.to_string(), content_hash(bytes)));
    }

    pub fn add_file(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        let contents = contents.into();
        match self.files.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = contents,
            None => self.files.push((name.to_string(), contents)),
        }
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    pub fn file_names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn finish(self, config: &ExperimentConfig) -> Result<RunManifest> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let cfg_text = config.to_text();
        write(&self.dir.join(CONFIG_FILE), cfg_text.as_bytes())?;
        let mut outputs = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            write(&self.dir.join(name), bytes)?;
            outputs.push((name.clone(), content_hash(bytes)));
        }
        let manifest = RunManifest {
            experiment: config.experiment.clone(),
            config_hash: content_hash(cfg_text.as_bytes()),
            inputs: self.inputs,
            outputs,
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        write(&self.dir.join(MANIFEST_FILE), manifest.to_text().as_bytes())?;
        Ok(manifest)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Re-hashes the resolved config and every output listed in a run's manifest.
pub fn verify_run(dir: &Path) -> Result<RunManifest> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let m = RunManifest::parse(&text, &mpath)?;
    let cpath = dir.join(CONFIG_FILE);
    let cfg = std::fs::read(&cpath).map_err(|e| Error::io(&cpath, e))?;
    if content_hash(&cfg) != m.config_hash {
        return Err(Error::Verification(format!(
            "{} does not match the manifest",
            cpath.display()
        )));
    }
    for (name, hash) in &m.outputs {
        let p = dir.join(name);
        let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
        if &content_hash(&bytes) != hash {
            return Err(Error::Verification(format!(
                "{name} does not match the manifest"
            )));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_blob_hash_matches_git_style_sha256() {
        // sha256 of "blob 0\0"
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn manifest_text_roundtrip() {
        let m = RunManifest {
            experiment: "quad".into(),
            config_hash: "ab".into(),
            inputs: vec![("nodes.csv".into(), "cd".into())],
            outputs: vec![("rule.csv".into(), "ef".into())],
            wall_clock_secs: 1.5,
        };
        assert_eq!(RunManifest::parse(&m.to_text(), Path::new("m")).unwrap(), m);
    }
}
