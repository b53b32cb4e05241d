use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use birefsim::config::{load_config_or_preset, ScenarioConfig};
use birefsim::experiment::{run_study, sweep_deliberate, tradeoff_curve, TRADEOFF_SAMPLES};
use birefsim::herald::HeraldPattern;
use birefsim::landscape::FidelityKind;
use birefsim::output::{parse_landscape_csv, tradeoff_csv, tradeoff_svg, write_file, write_study, write_sweep};
use clap::{Args, Parser, Subcommand};

/// Heralded entanglement between birefringent emitter-cavity nodes.
#[derive(Parser)]
#[command(name = "birefsim", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Landscapes, trade-offs and summary for every Ω_B of a scenario.
    Run(ScenarioArgs),
    /// Average fidelity and success probability against deliberate splitting.
    Sweep(ScenarioArgs),
    /// Trade-off curves of a landscape CSV written by `run`.
    Tradeoff(TradeoffArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Config file or preset name (fig2, fig3, fig5-degenerate, fig5-nondegenerate).
    config: Option<String>,
    /// Same as the positional argument.
    #[arg(long = "config", conflicts_with = "config")]
    config_flag: Option<String>,
    /// Output directory (default: the config's output_dir, else runs/<name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Landscape grid points per axis.
    #[arg(long)]
    resolution: Option<usize>,
    /// Herald pattern to evaluate, e.g. cc; repeat for several.
    #[arg(long)]
    pattern: Vec<HeraldPattern>,
}

#[derive(Args)]
struct TradeoffArgs {
    landscape: PathBuf,
    /// Pattern the landscape was computed for; only used for labelling.
    #[arg(long, default_value = "cc")]
    pattern: HeraldPattern,
    /// Average-fidelity targets to mark.
    #[arg(long = "target", default_values_t = [0.99, 0.999])]
    targets: Vec<f64>,
    /// Output directory (default: next to the landscape file).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<(ScenarioConfig, PathBuf)> {
        let spec = self
            .config
            .as_deref()
            .or(self.config_flag.as_deref())
            .ok_or_else(|| anyhow!("no config given"))?;
        let mut cfg = load_config_or_preset(spec)?;
        if let Some(r) = self.resolution {
            cfg.landscape.resolution = r;
        }
        if !self.pattern.is_empty() {
            cfg.landscape.patterns = self.pattern.clone();
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| Path::new("runs").join(&cfg.name));
        Ok((cfg, out))
    }
}

fn run(args: &ScenarioArgs) -> Result<()> {
    let (cfg, out) = args.load()?;
    let results = run_study(&cfg)?;
    for r in &results {
        println!(
            "omega_b={:.6} f_raw={:.6} f_corr={:.6} success_total={:.6} success_patterns={:.6}",
            r.omega_b, r.average_raw, r.average_corrected, r.success_total, r.success_patterns
        );
    }
    let written = write_study(&out, &cfg, &results)?;
    println!("wrote {} files to {}", written.len(), out.display());
    Ok(())
}

fn sweep(args: &ScenarioArgs) -> Result<()> {
    let (cfg, out) = args.load()?;
    let Some(sweep) = &cfg.sweep else {
        bail!("config '{}' has no [sweep] section", cfg.name);
    };
    let result = sweep_deliberate(&cfg, &sweep.delta_b)?;
    for p in &result.points {
        println!(
            "delta_b={:.6} f_raw={:.6} f_corr={:.6} success_total={:.6}",
            p.delta_b, p.average_raw, p.average_corrected, p.success_total
        );
    }
    let written = write_sweep(&out, &cfg, &result)?;
    println!("wrote {} files to {}", written.len(), out.display());
    Ok(())
}

fn tradeoff(args: &TradeoffArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.landscape)
        .with_context(|| format!("reading {}", args.landscape.display()))?;
    let landscape = parse_landscape_csv(&text, args.pattern)?;
    let raw = tradeoff_curve(std::slice::from_ref(&landscape), FidelityKind::Raw, &args.targets, TRADEOFF_SAMPLES)?;
    let corr = tradeoff_curve(
        std::slice::from_ref(&landscape),
        FidelityKind::Corrected,
        &args.targets,
        TRADEOFF_SAMPLES,
    )?;
    for curve in [&raw, &corr] {
        for m in &curve.marks {
            let min = m.min_fidelity.map_or("none".to_string(), |f| format!("{f:.6}"));
            println!(
                "{} target={} retained={:.6} of {:.6} min_fidelity={min}",
                curve.kind.label(),
                m.target_average,
                m.retained,
                curve.total
            );
        }
    }
    let out = args
        .out
        .clone()
        .or_else(|| args.landscape.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let stem = args
        .landscape
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("landscape");
    write_file(&out.join(format!("{stem}_tradeoff.csv")), &tradeoff_csv(&raw, &corr))?;
    write_file(&out.join(format!("{stem}_tradeoff.svg")), &tradeoff_svg(&raw, &corr))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Tradeoff(a) => tradeoff(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let solver = e
                .downcast_ref::<birefsim::Error>()
                .is_some_and(birefsim::Error::is_solver_failure);
            ExitCode::from(if solver { 3 } else { 1 })
        }
    }
}
