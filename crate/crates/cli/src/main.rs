use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use frugal_snn::encoder;
use frugal_snn::eval::{evaluate, render_metrics};
use frugal_snn::plasticity::SynapseMatrix;
use frugal_snn::raster::SpikeRaster;
use frugal_snn::signals::{lowpass_smooth, normalize, MultichannelSignal, NormalizeMode};
use frugal_snn::stp::{apply_mask, save_mask, stp_finalize, stp_run};
use frugal_snn_cli::config::{load_config, ConfigError, Overrides};
use frugal_snn_cli::pipeline::{load_manifest, run_pipeline};

/// Unsupervised temporal-pattern learning on spike trains: generate
/// datasets, encode signals, filter, train, and evaluate.
#[derive(Parser)]
#[command(name = "frugal-snn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with ground truth.
    Synth(SynthArgs),
    /// Encode a continuous signal CSV into spike trains.
    Encode(EncodeArgs),
    /// Run the short-term-plasticity pre-filter over a raster.
    Stp(StpArgs),
    /// Train the network on a raster and write outputs.
    Train(TrainArgs),
    /// Score an output raster against ground truth.
    Eval(EvalArgs),
    /// Run the configured pipeline end to end.
    Run(RunArgs),
    /// Summarize a weights, raster, or manifest file.
    Inspect { path: PathBuf },
}

#[derive(Args)]
struct SynthArgs {
    /// disjoint | nested | field | propagating
    #[arg(long)]
    generator: String,
    #[arg(long, default_value = "synth_out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    patterns: Option<usize>,
    #[arg(long)]
    trains: Option<usize>,
    #[arg(long)]
    duration_ms: Option<f64>,
    #[arg(long)]
    gap_ms: Option<f64>,
    #[arg(long)]
    lead_ms: Option<f64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Drop probability applied to generated spikes.
    #[arg(long)]
    drop_prob: Option<f64>,
    /// Gaussian timestep jitter applied to generated spikes.
    #[arg(long)]
    shift_sd: Option<f64>,
    /// Background-noise density on silent trains.
    #[arg(long)]
    noise_density: Option<f64>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "encode_out")]
    out: PathBuf,
    #[arg(long)]
    sample_period_ms: Option<f64>,
    /// none | per_channel | global
    #[arg(long, default_value = "per_channel")]
    normalize: String,
    #[arg(long, default_value_t = 0.0)]
    lowpass_hz: f64,
    #[arg(long, default_value_t = 2)]
    lowpass_order: usize,
    #[arg(long, default_value_t = 20)]
    fields: usize,
    #[arg(long, default_value_t = 2)]
    halo: usize,
}

#[derive(Args)]
struct StpArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "stp_out")]
    out: PathBuf,
    #[arg(long, default_value = "vowel")]
    preset: String,
    #[arg(long)]
    retain_threshold: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = "train_out")]
    out: PathBuf,
    #[arg(long, default_value = "artificial")]
    preset: String,
    #[arg(long, default_value_t = 10)]
    neurons: usize,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "eval_out")]
    out: PathBuf,
    #[arg(long, default_value_t = 400.0)]
    window_ms: f64,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// Re-run from a previously written manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    neurons: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // die quietly when piped into head & co.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter("FRUGAL_SNN_LOG"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Stp(args) => cmd_stp(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Run(args) => cmd_run(args),
        Command::Inspect { path } => cmd_inspect(&path),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    use frugal_snn::synth::*;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let corrupt = |raster: SpikeRaster| -> Result<SpikeRaster> {
        let mut out = raster;
        if args.drop_prob.unwrap_or(0.0) > 0.0 || args.shift_sd.unwrap_or(0.0) > 0.0 {
            out = add_jitter(
                &out,
                args.drop_prob.unwrap_or(0.0),
                args.shift_sd.unwrap_or(0.0),
                args.seed.wrapping_add(0x9e37_79b9),
            )?;
        }
        if args.noise_density.unwrap_or(0.0) > 0.0 {
            out = add_background_noise(
                &out,
                args.noise_density.unwrap(),
                args.seed.wrapping_add(0x7f4a_7c15),
            )?;
        }
        Ok(out)
    };
    let truth = match args.generator.as_str() {
        "disjoint" => {
            let mut p = DisjointParams {
                seed: args.seed,
                ..DisjointParams::default()
            };
            if let Some(v) = args.patterns {
                p.n_patterns = v;
            }
            if let Some(v) = args.trains {
                p.trains = v;
            }
            if let Some(v) = args.duration_ms {
                p.duration_ms = v;
            }
            if let Some(v) = args.gap_ms {
                p.gap_ms = v;
            }
            if let Some(v) = args.lead_ms {
                p.lead_ms = v;
            }
            if let Some(v) = args.repeats {
                p.repeats = v;
            }
            let (raster, truth) = make_disjoint_set(&p)?;
            corrupt(raster)?.save_csv(&args.out.join("raster.csv"))?;
            truth
        }
        "nested" => {
            let mut p = NestedParams {
                seed: args.seed,
                ..NestedParams::default()
            };
            if let Some(v) = args.trains {
                p.trains = v;
            }
            if let Some(v) = args.duration_ms {
                p.duration_ms = v;
            }
            if let Some(v) = args.gap_ms {
                p.gap_ms = v;
            }
            if let Some(v) = args.lead_ms {
                p.lead_ms = v;
            }
            if let Some(v) = args.repeats {
                p.repeats = v;
            }
            let (raster, truth) = make_nested_set(&p)?;
            corrupt(raster)?.save_csv(&args.out.join("raster.csv"))?;
            truth
        }
        "field" => {
            let mut p = FieldPatternParams {
                seed: args.seed,
                ..FieldPatternParams::default()
            };
            if let Some(v) = args.patterns {
                p.n_patterns = v;
            }
            if let Some(v) = args.duration_ms {
                p.duration_ms = v;
            }
            if let Some(v) = args.gap_ms {
                p.gap_ms = v;
            }
            if let Some(v) = args.lead_ms {
                p.lead_ms = v;
            }
            if let Some(v) = args.repeats {
                p.repeats = v;
            }
            let (raster, truth) = make_field_pattern_set(&p)?;
            corrupt(raster)?.save_csv(&args.out.join("raster.csv"))?;
            truth
        }
        "propagating" => {
            let p = PropagatingParams {
                seed: args.seed,
                ..PropagatingParams::default()
            };
            let (signal, truth) = make_propagating_set(&p)?;
            signal.save_csv(&args.out.join("signal.csv"))?;
            truth
        }
        other => bail!(ConfigError(format!(
            "unknown generator {other:?} (expected disjoint, nested, field, or propagating)"
        ))),
    };
    truth.raster.save_csv(&args.out.join("truth.csv"))?;
    let manifest = serde_json::json!({
        "generator": args.generator,
        "seed": args.seed,
        "truth_spikes": truth.raster.num_events(),
        "occurrences": truth.occurrences.len(),
    });
    std::fs::write(
        args.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn parse_normalize(s: &str) -> Result<Option<NormalizeMode>> {
    match s {
        "none" => Ok(None),
        "per_channel" => Ok(Some(NormalizeMode::PerChannel)),
        "global" => Ok(Some(NormalizeMode::Global)),
        other => bail!(ConfigError(format!(
            "normalize must be none, per_channel, or global; got {other:?}"
        ))),
    }
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let mut signal = MultichannelSignal::load_csv(&args.input, args.sample_period_ms)?;
    if let Some(mode) = parse_normalize(&args.normalize)? {
        signal = normalize(&signal, mode)?;
    }
    if args.lowpass_hz > 0.0 {
        signal = lowpass_smooth(&signal, args.lowpass_hz, args.lowpass_order)?;
        if let Some(mode) = parse_normalize(&args.normalize)? {
            signal = normalize(&signal, mode)?;
        }
    }
    let raster = encoder::encode(&signal, args.fields, args.halo)?;
    let path = args.out.join("encoded.csv");
    raster.save_csv(&path)?;
    println!(
        "encoded {} channels x {} samples -> {} trains, {} events: {}",
        signal.channels(),
        signal.samples_per_channel(),
        raster.trains(),
        raster.num_events(),
        path.display()
    );
    Ok(())
}

fn cmd_stp(args: StpArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let preset: frugal_snn::Preset = args.preset.parse().map_err(ConfigError)?;
    let mut params = preset.stp();
    if let Some(v) = args.retain_threshold {
        params.retain_threshold = v;
    }
    let raster = SpikeRaster::load_csv(&args.input)?;
    let state = stp_run(&raster, params);
    let mask = stp_finalize(&state, &raster, 24)?;
    save_mask(&mask, &args.out.join("stp_mask.csv"))?;
    let masked = apply_mask(&raster, &mask)?;
    masked.save_csv(&args.out.join("masked.csv"))?;
    println!(
        "stop at {:?}; retained {}/{} trains; {} -> {} events",
        state.stop_step,
        mask.iter().filter(|&&m| m).count(),
        mask.len(),
        raster.num_events(),
        masked.num_events()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut user = toml::map::Map::new();
    let mut input = toml::map::Map::new();
    input.insert("kind".into(), "raster".into());
    input.insert(
        "path".into(),
        args.input.display().to_string().into(),
    );
    if let Some(truth) = &args.truth {
        input.insert("truth_path".into(), truth.display().to_string().into());
    }
    user.insert("input".into(), toml::Value::Table(input));
    // this subcommand is the training stage alone; pre-filtering is the
    // `stp` subcommand's job
    let mut pipeline = toml::map::Map::new();
    pipeline.insert("stp".into(), toml::Value::Boolean(false));
    user.insert("pipeline".into(), toml::Value::Table(pipeline));
    let resolved = frugal_snn_cli::config::resolve(
        toml::Value::Table(user),
        &Overrides {
            preset: Some(args.preset.clone()),
            seed: Some(args.seed),
            epochs: Some(args.epochs),
            neurons: Some(args.neurons),
            out_dir: Some(args.out.clone()),
        },
    )?;
    let outcome = run_pipeline(&resolved, None)?;
    match outcome.final_f {
        Some(f) => println!("final-epoch global f = {f:.4}"),
        None => println!("trained without ground truth (no metrics)"),
    }
    println!("artifacts in {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let truth = SpikeRaster::load_csv(&args.truth)?;
    let output = SpikeRaster::load_csv(&args.output)?;
    // tolerate an output raster padded with an inter-epoch tail
    let output = if output.timesteps() > truth.timesteps() {
        output.slice_steps(0, truth.timesteps())
    } else {
        output
    };
    let truth = if truth.timesteps() > output.timesteps() {
        truth.slice_steps(0, output.timesteps())
    } else {
        truth
    };
    let report = evaluate(&truth, &output, args.window_ms)?;
    let path = args.out.join("metrics.txt");
    std::fs::write(&path, render_metrics(&report, &[]))?;
    println!("global f = {:.4} -> {}", report.f_global, path.display());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let overrides = Overrides {
        preset: args.preset.clone(),
        seed: args.seed,
        epochs: args.epochs,
        neurons: args.neurons,
        out_dir: args.out.clone(),
    };
    let (resolved, source) = if let Some(manifest_path) = &args.manifest {
        let manifest = load_manifest(manifest_path)?;
        let value: toml::Value = manifest
            .config_toml
            .parse()
            .map_err(|e| ConfigError(format!("manifest config: {e}")))?;
        (
            frugal_snn_cli::config::resolve(value, &overrides)?,
            Some(manifest_path.as_path()),
        )
    } else {
        (
            load_config(args.config.as_deref(), &overrides)?,
            args.config.as_deref(),
        )
    };
    let outcome = run_pipeline(&resolved, source)?;
    if let Some(f) = outcome.final_f {
        println!("final-epoch global f = {f:.4}");
    }
    println!("manifest: {}", outcome.manifest_path.display());
    Ok(())
}

fn cmd_inspect(path: &PathBuf) -> Result<()> {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    if name.ends_with(".json") {
        let manifest = load_manifest(path)?;
        println!("run manifest: preset={} seed={}", manifest.preset, manifest.seed);
        println!("inputs:");
        for i in &manifest.inputs {
            println!("  {} {}", &i.sha256[..12], i.path);
        }
        println!("artifacts: {}", manifest.artifacts.len());
        if let Some(f) = manifest.f_global_final {
            println!("final-epoch global f = {f:.4}");
        }
        return Ok(());
    }
    let text = std::fs::read_to_string(path)?;
    if text.starts_with("train,") || text.starts_with("train\n") || text.starts_with("train,0") {
        let w = SynapseMatrix::load_csv(path)?;
        println!("weight matrix: {} trains x {} neurons", w.inputs(), w.neurons());
        for j in 0..w.neurons() {
            let strong = (0..w.inputs()).filter(|&i| w.get(i, j).abs() > 0.5).count();
            let mass: f64 = (0..w.inputs()).map(|i| w.get(i, j).abs()).sum();
            println!("  neuron {j}: {strong} strong synapses, total |w| = {mass:.2}");
        }
    } else if text.starts_with("# timestep_ms") {
        let r = SpikeRaster::load_csv(path)?;
        println!(
            "raster: {} trains x {} steps @ {} ms, {} events",
            r.trains(),
            r.timesteps(),
            r.timestep_ms(),
            r.num_events()
        );
    } else {
        println!("{text}");
    }
    Ok(())
}
