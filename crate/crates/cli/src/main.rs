use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hydrobid::{build_single_level_milp, BigMConfig};
use hydrobid_cli::{case_instances, run_case, run_sweep, write_outputs, CaseConfig, CaseReport, HarnessError};
use hydrobid_pdf::{fit_price_pdfs, FitConfig, Likelihood, NutsConfig};
use lpmilp::{export_model, parse_model, render_model, ExportFormat};

#[derive(Parser)]
#[command(
    name = "hydrobid",
    version,
    about = "Strategic hydro bidding in sequential DA, ID and FCR-N markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a case and write its report and plot data.
    Run(Common),
    /// Merit-order price sweeps of Case I or II.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// Write the single-level MILP of each instance of a case.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Mps)]
        format: Format,
    },
    /// Fit posterior predictive price densities to grouped samples.
    Pdf {
        /// CSV with columns `group,value`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Model::Normal)]
        likelihood: Model,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Case configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative optimality gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Seconds per MILP solve.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Mps,
    Lp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Normal,
    Lognormal,
}

impl Common {
    fn load(&self) -> Result<CaseConfig> {
        let mut c = CaseConfig::load(&self.config).with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(g) = self.gap {
            c.solve.rel_gap = g;
        }
        if let Some(t) = self.time_limit {
            c.solve.time_limit_s = Some(t);
        }
        if let Some(n) = self.node_limit {
            c.solve.node_limit = Some(n);
        }
        if let Some(d) = &self.output_dir {
            c.output_dir = d.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_report(report: &CaseReport, written: &[PathBuf]) {
    for r in &report.runs {
        println!(
            "{:<10} {:<10} objective {:.4} bound {:.4} gap {:.2e} nodes {} certified {}",
            r.label, r.status, r.objective, r.bound, r.rel_gap, r.nodes, r.certified
        );
    }
    if let Some(e) = &report.export {
        println!(
            "exported {} ({} rows, {} cols, {} binaries), round trip {}",
            e.file, e.rows, e.cols, e.binaries, e.round_trip
        );
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    eprintln!("wall clock {:.3} s", report.wall_clock.as_secs_f64());
}

fn export(config: &CaseConfig, format: Format) -> Result<()> {
    let (fmt, ext) = match format {
        Format::Mps => (ExportFormat::Mps, "mps"),
        Format::Lp => (ExportFormat::LpText, "lp"),
    };
    std::fs::create_dir_all(&config.output_dir)?;
    for (label, c) in case_instances(config)? {
        let milp = build_single_level_milp(&c.instance, &c.scenarios, &BigMConfig::for_instance(&c.instance))?;
        let path = config.output_dir.join(format!("{label}.{ext}"));
        export_model(&milp.mip, &path, fmt)?;
        let text = std::fs::read_to_string(&path)?;
        let same = render_model(&parse_model(&text, fmt)?, fmt)? == text;
        println!(
            "wrote {} ({} rows, {} cols, {} binaries), round trip {}",
            path.display(),
            milp.mip.lp.num_rows(),
            milp.mip.lp.num_cols(),
            milp.mip.binaries().len(),
            same
        );
        if !same {
            bail!("{} does not round-trip", path.display());
        }
    }
    Ok(())
}

fn read_groups(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    let mut rdr = csv::Reader::from_path(path)?;
    let head = rdr.headers()?.clone();
    let col = |name: &str| {
        head.iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("missing column {name}"))
    };
    let (g, v) = (col("group")?, col("value")?);
    for rec in rdr.records() {
        let rec = rec?;
        let name = rec.get(g).unwrap_or_default().trim().to_string();
        let value: f64 = rec
            .get(v)
            .unwrap_or_default()
            .trim()
            .parse()
            .with_context(|| format!("bad value in {rec:?}"))?;
        match groups.iter_mut().find(|(n, _)| *n == name) {
            Some((_, vals)) => vals.push(value),
            None => groups.push((name, vec![value])),
        }
    }
    Ok(groups)
}

fn pdf(input: &Path, seed: u64, model: Model, out: &Path) -> Result<()> {
    let groups = read_groups(input)?;
    let cfg = FitConfig {
        likelihood: match model {
            Model::Normal => Likelihood::Normal,
            Model::Lognormal => Likelihood::LogNormal,
        },
        nuts: NutsConfig {
            seed,
            ..Default::default()
        },
        ..Default::default()
    };
    let fits = fit_price_pdfs(&groups, &cfg)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("pdf.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["group", "price", "density"])?;
    for f in &fits {
        println!(
            "{}: n {} mean {:.4} std {:.4} divergences {} accept {:.3}",
            f.name,
            f.observations.len(),
            f.predictive_mean,
            f.predictive_std,
            f.divergences,
            f.mean_accept
        );
        for (x, d) in f.grid.iter().zip(&f.density) {
            w.write_record([f.name.clone(), x.to_string(), d.to_string()])?;
        }
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(common) => common.load().and_then(|c| {
            let report = run_case(&c)?;
            let written = write_outputs(&report, &c.output_dir)?;
            print_report(&report, &written);
            Ok(report.exit_code())
        }),
        Command::Sweep { common, points } => common.load().and_then(|c| {
            let report = run_sweep(&c, points)?;
            let written = write_outputs(&report, &c.output_dir)?;
            print_report(&report, &written);
            Ok(0)
        }),
        Command::Export { common, format } => common.load().and_then(|c| export(&c, format).map(|_| 0)),
        Command::Pdf {
            input,
            seed,
            likelihood,
            output_dir,
        } => pdf(&input, seed, likelihood, &output_dir).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<HarnessError>().map_or(1, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
