use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use pagrad_core::pipeline::{
    render_report, run_explain, run_pag, run_phantom, run_radiomics, with_threads, PipelineKind,
    RunConfig, RunOptions,
};
use pagrad_core::Error;

#[derive(Parser)]
#[command(
    name = "pagrad",
    version,
    about = "Pixel-array graph and radiomics classifiers for 3D image patches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic cohort (volumes and manifest.csv).
    Phantom(Common),
    /// Graph spectral features, per-region cross-validation and cistern fusion.
    Pag(Pipeline),
    /// Radiomics features, per-fold reduction and cross-validation.
    Radiomics(Pipeline),
    /// Permutation importance of a saved model on a feature table.
    Explain(Explain),
    /// Print a summary table of a report.json.
    Report {
        /// A report.json or the directory holding one.
        path: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores (overrides `threads` in the config).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Pipeline {
    /// CSV of subject_id,label,region,volume_path,roi_origin,roi_size.
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Leave `generated_at` out of report.json.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct Explain {
    /// Model JSON written by `pag` or `radiomics`.
    #[arg(long)]
    model: PathBuf,
    /// Feature table CSV written by `pag` or `radiomics`.
    #[arg(long)]
    table: PathBuf,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, PathBuf), Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .ok_or_else(|| {
                Error::Config("no output directory: pass --out or set output in the config".into())
            })?;
        Ok((cfg, out))
    }
}

fn run_pipeline(kind: PipelineKind, args: &Pipeline) -> Result<(), Error> {
    let (cfg, out) = args.common.resolve()?;
    if cfg.pipeline.is_some_and(|p| p != kind) {
        return Err(Error::Config(format!(
            "config is for pipeline {}, not {kind}",
            cfg.pipeline.unwrap()
        )));
    }
    let opts = RunOptions {
        timestamp: !args.no_timestamp,
    };
    with_threads(cfg.threads, || match kind {
        PipelineKind::Pag => run_pag(&args.manifest, &cfg, &out, opts),
        PipelineKind::Radiomics => run_radiomics(&args.manifest, &cfg, &out, opts),
    })??;
    let report = out.join("report.json");
    info!("wrote {}", report.display());
    print!("{}", render_report(&report)?);
    Ok(())
}

fn report_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("report.json")
    } else {
        path.to_path_buf()
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Phantom(common) => {
            let (cfg, out) = common.resolve()?;
            let manifest = run_phantom(&cfg, &out)?;
            println!("{}", manifest.display());
        }
        Command::Pag(args) => run_pipeline(PipelineKind::Pag, &args)?,
        Command::Radiomics(args) => run_pipeline(PipelineKind::Radiomics, &args)?,
        Command::Explain(args) => {
            let (cfg, out) = args.common.resolve()?;
            let imp = with_threads(cfg.threads, || {
                run_explain(
                    &args.model,
                    &args.table,
                    &out,
                    cfg.importance_repeats,
                    cfg.seed,
                )
            })??;
            for i in imp {
                println!(
                    "{:<48} {:>10.4} {:>10.4}",
                    i.feature, i.mean_f1_drop, i.std_f1_drop
                );
            }
        }
        Command::Report { path } => print!("{}", render_report(&report_path(&path))?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_analysis_failure() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
