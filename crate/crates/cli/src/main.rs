use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};

use pdpmean::config::ExperimentConfig;
use pdpmean::error::CliError;
use pdpmean::experiments::{find, registry, RunContext};

fn build_cli() -> Command {
    let mut cmd = Command::new("pdpmean")
        .about("Personalized-DP mean estimation experiments")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for experiment in registry() {
        cmd = cmd.subcommand(
            Command::new(experiment.name())
                .about(experiment.about())
                .arg(
                    Arg::new("config")
                        .long("config")
                        .value_name("PATH")
                        .required(true)
                        .help("JSON experiment configuration"),
                )
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_name("N")
                        .value_parser(clap::value_parser!(u64))
                        .help("Override the config seed"),
                )
                .arg(
                    Arg::new("threads")
                        .long("threads")
                        .value_name("N")
                        .value_parser(clap::value_parser!(usize))
                        .default_value("0")
                        .help("Worker pool size (0 = all cores); output is thread-count invariant"),
                )
                .arg(
                    Arg::new("zero-noise")
                        .long("zero-noise")
                        .action(ArgAction::SetTrue)
                        .help("Deterministic trace mode: all mechanism noise is zero"),
                )
                .arg(
                    Arg::new("assert")
                        .long("assert")
                        .action(ArgAction::SetTrue)
                        .help("Exit 3 unless the run's acceptance checks pass"),
                )
                .arg(
                    Arg::new("out")
                        .long("out")
                        .value_name("DIR")
                        .help("Output directory (default: config output, then ./results)"),
                ),
        );
    }
    cmd
}

fn run() -> Result<ExitCode, CliError> {
    let matches = build_cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let experiment = find(name).expect("registry and CLI stay in sync");

    let config_path: &String = sub.get_one("config").expect("required");
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("config {config_path}: {e}")))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(&seed) = sub.get_one::<u64>("seed") {
        config.seed = Some(seed);
    }
    let seed = config.require_seed()?;
    let out_dir = sub
        .get_one::<String>("out")
        .cloned()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| "results".into());

    let ctx = RunContext {
        seed,
        zero_noise: sub.get_flag("zero-noise"),
        threads: *sub.get_one::<usize>("threads").expect("has default"),
        out_dir: PathBuf::from(out_dir),
        assert_mode: sub.get_flag("assert"),
        config,
    };

    let outcome = experiment.run(&ctx)?;
    println!("{}: {}", experiment.name(), outcome.summary_line);
    for file in &outcome.files {
        println!("  wrote {}", file.display());
    }
    if ctx.assert_mode && !outcome.assert_ok {
        eprintln!("{}: acceptance check failed", experiment.name());
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
