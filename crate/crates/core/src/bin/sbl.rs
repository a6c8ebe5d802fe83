use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use sbl_core::experiments::config::{schema_help, ExperimentConfig};
use sbl_core::experiments::manifest::{verify_run, CONFIG_FILE};
use sbl_core::experiments::Experiment;
use sbl_core::{Error, Result};

fn experiment_command(e: Experiment) -> Command {
    Command::new(e.name())
        .about(format!("Run the `{}` experiment", e.name()))
        .arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("flat `key = value` config; omitted keys take their defaults"),
        )
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("N")
                .value_parser(clap::value_parser!(u64))
                .help("overrides the config's `seed`"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .short('o')
                .value_name("DIR")
                .value_parser(clap::value_parser!(PathBuf))
                .help("run directory [default: runs/<experiment>]"),
        )
        .arg(
            Arg::new("verify")
                .long("verify")
                .action(ArgAction::SetTrue)
                .help(
                    "re-check manifest hashes; without --config, re-run the stored config \
             and compare every output byte for byte",
                ),
        )
        .after_help(format!(
            "Output files:\n  {}\n\nConfig keys:\n{}",
            e.csv_help(),
            schema_help(e.schema())
        ))
}

fn cli() -> Command {
    let mut outputs = String::from("Output files per experiment:\n");
    for e in Experiment::ALL {
        outputs.push_str(&format!("  {}: {}\n", e.name(), e.csv_help()));
    }
    outputs.push_str(
        "  every run: config.resolved (the fully resolved config), manifest.txt (hashes)\n\n\
         Exit codes: 0 ok, 1 numeric failure, 2 I/O or config error",
    );
    Command::new("sbl")
        .about("Frequency-biasing experiments for two-layer ReLU networks on spherical data")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("verbose")
                .long("verbose")
                .short('v')
                .global(true)
                .action(ArgAction::Count)
                .help("more log output (repeat for debug)"),
        )
        .subcommands(Experiment::ALL.map(experiment_command))
        .after_help(outputs)
}

/// Re-runs the config stored in `dir` into a scratch directory and compares outputs.
fn rerun_and_compare(e: Experiment, dir: &Path) -> Result<()> {
    let manifest = verify_run(dir)?;
    let cfg = e.load(&dir.join(CONFIG_FILE))?;
    let scratch = dir.join(".verify");
    let (_, again) = e.run_to_dir(&cfg, &scratch)?;
    let _ = std::fs::remove_dir_all(&scratch);
    if again.outputs != manifest.outputs {
        let differing: Vec<&str> = manifest
            .outputs
            .iter()
            .filter(|o| !again.outputs.contains(o))
            .map(|(n, _)| n.as_str())
            .collect();
        return Err(Error::Verification(format!(
            "re-run differs from the manifest in: {}",
            differing.join(", ")
        )));
    }
    Ok(())
}

fn execute(e: Experiment, m: &ArgMatches) -> Result<()> {
    let out = m
        .get_one::<PathBuf>("out")
        .cloned()
        .unwrap_or_else(|| PathBuf::from("runs").join(e.name()));
    let verify = m.get_flag("verify");
    let config = m.get_one::<PathBuf>("config");
    if verify && config.is_none() && m.get_one::<u64>("seed").is_none() {
        rerun_and_compare(e, &out)?;
        println!("verified {}", out.display());
        return Ok(());
    }
    let mut cfg: ExperimentConfig = match config {
        Some(p) => e.load(p)?,
        None => e.defaults(),
    };
    if let Some(seed) = m.get_one::<u64>("seed") {
        cfg.set("seed", &seed.to_string())?;
    }
    let (summary, manifest) = e.run_to_dir(&cfg, &out)?;
    print!("{}", summary.to_text());
    log::info!(
        "{} outputs in {} ({:.1} s)",
        manifest.outputs.len(),
        out.display(),
        manifest.wall_clock_secs
    );
    if verify {
        verify_run(&out)?;
        println!("verified {}", out.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let level = match matches.get_count("verbose") {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let result = Experiment::from_name(name).and_then(|e| execute(e, sub));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_io_or_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
