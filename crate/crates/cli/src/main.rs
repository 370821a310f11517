use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use reclab::config::ExperimentConfig;
use reclab::report::{csv_string, write_files};
use reclab::verify::{all_passed, verify_theorems, Fixture};
use reclab::{catalog, exit, run};

#[derive(Parser)]
#[command(name = "reclab", version, about = "Recurrence experiments on weighted function spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sampled admissibility certificates only.
    CheckAdmissible(RunArgs),
    /// Every operation listed in the configuration.
    Analyze(RunArgs),
    /// Nested-ball construction of a recurrent vector, plus its G-delta check.
    ConstructRecurrent(RunArgs),
    /// Strong and uniform rigidity scans.
    Rigidity(RunArgs),
    /// Spectral radius and operator norm of T(t).
    Spectrum(RunArgs),
    /// Invariant suites; pass `all` or suite names. No names runs nothing.
    VerifyTheorems {
        suites: Vec<String>,
        /// Override a suite tolerance, as `suite=value`.
        #[arg(long = "inject-tol", hide = true)]
        inject_tol: Vec<String>,
    },
    /// Built-in instances with expected verdicts.
    Catalog {
        #[arg(long)]
        format: Option<Format>,
        /// Print the configuration of one instance.
        #[arg(long)]
        show: Option<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Structured,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "instance")]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<String>,
    /// Directory for `<name>.csv` and `<name>.summary.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long)]
    format: Option<Format>,
    /// Detector horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Detector tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.instance) {
        (Some(p), _) => ExperimentConfig::load(p)?,
        (None, Some(name)) => match catalog::find(name) {
            Some(i) => i.config(),
            None => bail!("unknown instance {name:?}; known: {}", catalog::names().join(", ")),
        },
        (None, None) => bail!("pass --config <path> or --instance <name>"),
    };
    if let Some(h) = args.horizon {
        cfg.analysis.horizon = h;
    }
    if let Some(t) = args.tol {
        cfg.analysis.tol = t;
    }
    if let Some(s) = args.seed {
        cfg.analysis.seed = s;
    }
    if let Some(f) = args.format {
        cfg.output.format = match f {
            Format::Csv => "csv".into(),
            Format::Structured => "structured".into(),
        };
    }
    if let Some(o) = &args.out {
        cfg.output.path = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn restrict(cfg: &mut ExperimentConfig, ops: &[&str]) {
    cfg.analysis.operations = ops.iter().map(|s| s.to_string()).collect();
}

fn execute(args: &RunArgs, ops: Option<&[&str]>) -> anyhow::Result<i32> {
    let mut cfg = load(args)?;
    if let Some(ops) = ops {
        restrict(&mut cfg, ops);
    }
    let record = run(&cfg)?;
    eprintln!("{}: finished in {:.2?}", record.instance, record.wall_time);
    let summary = record.summary();
    if let Some(dir) = &cfg.output.path {
        let (c, j) = write_files(PathBuf::from(dir).as_path(), &cfg.name, &record.rows, &summary)?;
        eprintln!("wrote {} and {}", c.display(), j.display());
    }
    if cfg.output.format == "structured" {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        print!("{}", csv_string(&record.rows)?);
    }
    if let Some(c) = &record.consistency {
        eprintln!("consistency: {:?}", c.status);
    }
    Ok(if record.contradiction() { exit::CONTRADICTION } else { exit::OK })
}

fn verify(suites: &[String], inject: &[String]) -> anyhow::Result<i32> {
    let mut fixture = Fixture::default();
    for spec in inject {
        let (name, value) = spec.split_once('=').with_context(|| format!("expected suite=value, got {spec:?}"))?;
        fixture.tol.insert(name.to_string(), value.parse().with_context(|| format!("tolerance in {spec:?}"))?);
    }
    let results = verify_theorems(suites, &fixture)?;
    if results.is_empty() {
        println!("no suites selected");
        return Ok(exit::OK);
    }
    for r in &results {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        println!("{mark} {:<22} deviation {:.3e} (tol {:.3e})  {}", r.suite, r.deviation, r.tol, r.detail);
    }
    if all_passed(&results) {
        Ok(exit::OK)
    } else {
        let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.suite.as_str()).collect();
        eprintln!("failed: {}", failed.join(", "));
        Ok(exit::ERROR)
    }
}

fn listing(format: Option<Format>, show: Option<&str>) -> anyhow::Result<i32> {
    if let Some(name) = show {
        let inst = catalog::find(name).with_context(|| format!("unknown instance {name:?}"))?;
        print!("{}", inst.config().to_toml());
        return Ok(exit::OK);
    }
    if format == Some(Format::Structured) {
        println!("{}", serde_json::to_string_pretty(catalog::instances())?);
        return Ok(exit::OK);
    }
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.write_record(["name", "expected", "basis", "summary"])?;
    for i in catalog::instances() {
        w.write_record([i.name, i.expected.label(), i.basis, i.summary])?;
    }
    w.flush()?;
    Ok(exit::OK)
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::CheckAdmissible(a) => execute(&a, Some(&["admissibility"])),
        Command::Analyze(a) => execute(&a, None),
        Command::ConstructRecurrent(a) => execute(&a, Some(&["criterion", "nested_ball", "gdelta"])),
        Command::Rigidity(a) => execute(&a, Some(&["rigidity", "uniform_rigidity"])),
        Command::Spectrum(a) => execute(&a, Some(&["spectrum"])),
        Command::VerifyTheorems { suites, inject_tol } => verify(&suites, &inject_tol),
        Command::Catalog { format, show } => listing(format, show.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::ERROR as u8)
        }
    }
}
