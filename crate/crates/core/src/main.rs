use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chemofront::harness::{
    certify, parse_sweep_param, run_scenario, run_sweep, write_outcome, Report, ScenarioConfig, ScenarioKind,
    Verdict,
};
use chemofront::harness::output::write_report_json;
use chemofront::{Error, Result};

/// Simulate and certify front dynamics of a degenerate chemotaxis system.
#[derive(Parser, Debug)]
#[command(name = "chemofront", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write trace.csv, snapshots/ and report.json.
    Simulate(Common),
    /// Run the Cartesian product of parameter values in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `key=v1,v2,...` with a dotted config key; repeatable. Without
        /// any, the base config runs as a single point.
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Search and check certificates from the initial data only.
    Certify(Common),
    /// Run the Barenblatt convergence study.
    ValidatePme(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario configuration (TOML).
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override `grid.cells`.
    #[arg(long)]
    cells: Option<usize>,
    /// Override `controls.t_end`.
    #[arg(long)]
    t_end: Option<f64>,
    /// Sweep worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Extra `key=value` overrides; repeatable.
    #[arg(long = "set")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        let base = ScenarioConfig::from_path(&self.config)?;
        let mut overrides = Vec::new();
        if let Some(n) = self.cells {
            overrides.push(("grid.cells".to_string(), n.to_string()));
        }
        if let Some(t) = self.t_end {
            overrides.push(("controls.t_end".to_string(), format!("{t:?}")));
        }
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set `{s}` must look like key=value")))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        base.with_overrides(&overrides)
    }

    fn out_dir(&self, config: &ScenarioConfig) -> PathBuf {
        self.out
            .clone()
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn exit_for(verdict: Verdict) -> ExitCode {
    match verdict {
        Verdict::Pass => ExitCode::SUCCESS,
        Verdict::Fail => ExitCode::from(1),
        Verdict::Error => ExitCode::from(2),
    }
}

fn summarize(report: &Report, dir: &Path) {
    for c in &report.checks {
        let tag = if c.passed { "ok  " } else { "FAIL" };
        println!("{tag} {} ({})", c.name, c.detail);
    }
    if let Some(e) = &report.error {
        eprintln!("error: {}", e.message);
    }
    println!("{}: {:?} -> {}", report.scenario, report.verdict, dir.display());
}

fn simulate(common: &Common, force_pme: bool) -> Result<Verdict> {
    let mut config = common.load()?;
    if force_pme {
        config.scenario = ScenarioKind::PmeValidate;
    }
    let dir = common.out_dir(&config);
    let outcome = run_scenario(&config)?;
    write_outcome(&dir, &outcome)?;
    summarize(&outcome.report, &dir);
    Ok(outcome.report.verdict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c, false),
        Command::ValidatePme(c) => simulate(c, true),
        Command::Certify(c) => (|| {
            let config = c.load()?;
            let dir = c.out_dir(&config);
            let report = certify(&config)?;
            std::fs::create_dir_all(&dir)?;
            write_report_json(&dir.join("report.json"), &report)?;
            summarize(&report, &dir);
            Ok(report.verdict)
        })(),
        Command::Sweep { common, params } => (|| {
            let config = common.load()?;
            let parsed = params.iter().map(|p| parse_sweep_param(p)).collect::<Result<Vec<_>>>()?;
            let dir = common.out_dir(&config);
            let points = run_sweep(&config, &parsed, &dir, common.threads)?;
            let mut worst = Verdict::Pass;
            for p in &points {
                let v = p.verdict();
                println!("point_{:03} {:?} {:?}", p.index, p.overrides, v);
                worst = match (worst, v) {
                    (Verdict::Error, _) | (_, Verdict::Error) => Verdict::Error,
                    (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
                    _ => Verdict::Pass,
                };
            }
            println!("summary: {}", dir.join("summary.csv").display());
            Ok(worst)
        })(),
    };
    match result {
        Ok(v) => exit_for(v),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
