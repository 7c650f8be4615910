use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use robust_nag::problem::ProblemFile;
use robust_nag::recover::{points_csv, run_problem, run_study, StudyRow};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Nearest exceptional parameters for parameterized polynomial systems.
#[derive(Parser)]
#[command(name = "rnag", version)]
struct Cli {
    /// Progress on stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect, stabilize, descend and validate; writes report.json and points.csv.
    Recover {
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat recovery from Gaussian perturbations of p_nominal; writes study.csv and hist.json.
    Study {
        problem: PathBuf,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long)]
    tol_infinity: Option<f64>,
    #[arg(long)]
    max_components: Option<usize>,
    /// Retries with derived seeds until one run validates.
    #[arg(long)]
    attempts: Option<usize>,
    /// Stop after detection.
    #[arg(long)]
    detect_only: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl Common {
    fn apply(&self, p: &mut ProblemFile) {
        let o = &mut p.options;
        if let Some(s) = self.seed {
            o.seed = s;
        }
        if let Some(t) = self.tol_rank {
            o.tol_rank = t;
        }
        if let Some(t) = self.tol_residual {
            o.tol_residual = t;
        }
        if let Some(t) = self.tol_infinity {
            o.tol_infinity = t;
        }
        if let Some(m) = self.max_components {
            o.max_components = m;
        }
        if self.detect_only {
            o.detect_only = true;
        }
        if let Some(a) = self.attempts {
            o.attempts = a.max(1);
        }
    }
}

enum Failure {
    Input(anyhow::Error),
    NotRecovered,
}

fn load(path: &Path, common: &Common) -> Result<ProblemFile> {
    let mut p = ProblemFile::load(path).with_context(|| format!("reading {}", path.display()))?;
    common.apply(&mut p);
    p.parse().with_context(|| format!("checking {}", path.display()))?;
    Ok(p)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn recover(problem: &Path, common: &Common) -> std::result::Result<(), Failure> {
    let p = load(problem, common).map_err(Failure::Input)?;
    let out = run_problem(&p).map_err(|e| Failure::Input(e.into()))?;
    write(&common.out_dir, "report.json", &out.report.to_json()).map_err(Failure::Input)?;
    write(&common.out_dir, "points.csv", &points_csv(&out.points)).map_err(Failure::Input)?;
    let r = &out.report;
    if let Some(ps) = &r.p_star {
        let fmt: Vec<String> = ps.iter().map(|c| format!("{:.10}", c.re)).collect();
        println!("p* = ({})", fmt.join(", "));
    }
    if let Some(d) = r.distance {
        println!("distance = {d:.6e}");
    }
    println!("status: {}", r.status);
    if r.recovered() || r.detected_only() {
        Ok(())
    } else {
        if let Some(e) = &r.error {
            eprintln!("{e}");
        }
        Err(Failure::NotRecovered)
    }
}

fn study(problem: &Path, samples: usize, sigma: f64, common: &Common) -> std::result::Result<(), Failure> {
    let p = load(problem, common).map_err(Failure::Input)?;
    let s = run_study(&p, samples, sigma, p.options.seed).map_err(|e| Failure::Input(e.into()))?;
    let m = p.p_hat.len();
    let mut csv = StudyRow::csv_header(m);
    csv.push('\n');
    for row in &s.rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    write(&common.out_dir, "study.csv", &csv).map_err(Failure::Input)?;
    let hist = serde_json::json!({
        "samples": s.samples,
        "recovered": s.recovered,
        "sigma": s.sigma,
        "codim": s.codim,
        "mean_chi2": s.mean_chi2,
        "intrinsic_std": s.intrinsic_std,
        "histograms": s.histograms,
    });
    let text = serde_json::to_string_pretty(&hist).map_err(|e| Failure::Input(e.into()))?;
    write(&common.out_dir, "hist.json", &text).map_err(Failure::Input)?;
    println!("{}/{} recovered", s.recovered, s.samples);
    if let Some(c) = s.mean_chi2 {
        println!("mean chi2 statistic = {c:.4}");
    }
    if let Some(sd) = s.intrinsic_std {
        println!("intrinsic stddev = {sd:.4}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp_millis().init();
    let res = match &cli.command {
        Command::Recover { problem, common } => recover(problem, common),
        Command::Study { problem, samples, sigma, common } => study(problem, *samples, *sigma, common),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotRecovered) => ExitCode::from(2),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
