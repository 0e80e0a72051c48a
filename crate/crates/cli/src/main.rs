//! Command-line driver for heat-kernel estimate verification.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use heatcert::suite::{parse_settings, FitRow, Suite, SuiteConfig};
use heatcert::{Error, Execution};

#[derive(Parser)]
#[command(name = "heatcert", version, about = "Certify heat-kernel gradient and Laplacian estimates numerically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate estimates and write a JSON report.
    Verify(Common),
    /// Fit constants and write a CSV table (value at 1x and 2x resolution).
    Fit(Common),
    /// Scan the kernel Laplacian bound's ratio as t -> 0 (CSV: t,lhs,rhs,ratio).
    Sharpness(Common),
    /// Run the radial heat solver on a warped surface and export snapshots as CSV.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Export every k-th recorded snapshot.
        #[arg(long, default_value_t = 10)]
        every: usize,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Geometry key, e.g. euclidean:n=2, torus:n=1,L=6.2831853, warped:f=cigar,Rmax=20.
    #[arg(long)]
    geometry: Option<String>,
    /// Comma-separated estimate ids.
    #[arg(long)]
    estimates: Option<String>,
    #[arg(long = "plan.t_min")]
    t_min: Option<String>,
    #[arg(long = "plan.t_max")]
    t_max: Option<String>,
    #[arg(long = "plan.per_decade")]
    per_decade: Option<String>,
    #[arg(long = "plan.radius")]
    radius: Option<String>,
    #[arg(long = "plan.step")]
    step: Option<String>,
    /// Gaussian slack δ in (0, 4).
    #[arg(long)]
    delta: Option<String>,
    /// Comma-separated ε levels as fractions of the bound A.
    #[arg(long)]
    epsilon: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any other setting as key=value (repeatable), e.g. --set sharpness.d=1.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// Exit codes.
const PASS: u8 = 0;
const MARGIN_FAILURE: u8 = 1;
const CONFIG_ERROR: u8 = 2;

impl Common {
    /// Settings in precedence order: file first, command line last.
    fn settings(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            out.extend(parse_settings(&text)?);
        }
        let flags = [
            ("geometry", &self.geometry),
            ("estimates", &self.estimates),
            ("plan.t_min", &self.t_min),
            ("plan.t_max", &self.t_max),
            ("plan.per_decade", &self.per_decade),
            ("plan.radius", &self.radius),
            ("plan.step", &self.step),
            ("delta", &self.delta),
            ("epsilon", &self.epsilon),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                out.push((key.to_string(), v.clone()));
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }

    fn suite(&self) -> Result<Suite> {
        let settings = self.settings()?;
        let key = settings
            .iter()
            .rev()
            .find(|(k, _)| k == "geometry")
            .map(|(_, v)| v.clone())
            .context("no geometry given (use --geometry or a 'geometry' line in --config)")?;
        let mut config = SuiteConfig::new(key.parse()?);
        for (k, v) in settings.iter().filter(|(k, _)| k != "geometry") {
            config.apply(k, v)?;
        }
        if let Some(n) = self.threads {
            if n == 0 {
                bail!("--threads must be at least 1");
            }
            if n == 1 {
                config.plan.execution = Execution::Sequential;
            } else {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
            }
        }
        Ok(Suite::new(config)?)
    }

    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn verify(common: &Common) -> Result<u8> {
    let suite = common.suite()?;
    if suite.config.estimates.is_empty() {
        bail!("no estimates given (use --estimates)");
    }
    let report = suite.verify();
    common.write(&(report.to_json() + "\n"))?;
    for e in &report.errors {
        eprintln!("{}: {}", e.estimate_id, e.message);
    }
    for r in report.results.iter().filter(|r| !r.pass) {
        eprintln!("{}: worst margin {:e} below floor {:e}", r.estimate_id, r.worst_margin, r.tolerance_floor);
    }
    Ok(if report.errors.iter().any(|e| e.kind != "data") {
        CONFIG_ERROR
    } else if report.passed() {
        PASS
    } else {
        MARGIN_FAILURE
    })
}

fn fit(common: &Common) -> Result<u8> {
    let suite = common.suite()?;
    if suite.config.estimates.is_empty() {
        bail!("no estimates given (use --estimates)");
    }
    let mut csv = String::from(FitRow::CSV_HEADER);
    csv.push('\n');
    for id in &suite.config.estimates {
        let row = suite.fit_row(id)?;
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    common.write(&csv)?;
    Ok(PASS)
}

fn sharpness(common: &Common) -> Result<u8> {
    let suite = common.suite()?;
    let scan = suite.sharpness()?;
    common.write(&scan.to_csv())?;
    let last = scan.rows.last().map(|r| r.ratio).unwrap_or(f64::NAN);
    eprintln!("final ratio {last:.6}, limit (4-delta)/32 = {:.6}, monotone = {}", scan.limit, scan.monotone);
    Ok(PASS)
}

fn solve(common: &Common, every: usize) -> Result<u8> {
    let suite = common.suite()?;
    let field = suite.field()?;
    let k = every.max(1);
    let last = field.times.len() - 1;
    let mut snaps: Vec<usize> = (0..=last).step_by(k).collect();
    if snaps.last() != Some(&last) {
        snaps.push(last);
    }
    common.write(&field.to_csv(&snaps))?;
    let drift = (field.mass(last) / field.mass(0) - 1.0).abs();
    let mp = field.max_principle();
    eprintln!(
        "snapshots {}, relative mass drift {drift:.2e}, max increase {:.2e}, min decrease {:.2e}",
        field.times.len(),
        mp.max_increase,
        mp.min_decrease
    );
    if field.positivity_violations > 0 {
        eprintln!("warning: {} positivity violations during the solve", field.positivity_violations);
    }
    Ok(PASS)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::DataIntegrity(_)) => MARGIN_FAILURE,
        _ => CONFIG_ERROR,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(c) => verify(c),
        Command::Fit(c) => fit(c),
        Command::Sharpness(c) => sharpness(c),
        Command::Solve { common, every } => solve(common, *every),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
