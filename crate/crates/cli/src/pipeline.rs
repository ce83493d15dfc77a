//! End-to-end run assembly: obtain input (generated or loaded), encode,
//! filter, train, evaluate per epoch, and write every artifact plus a
//! manifest that reproduces the run.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use frugal_snn::encoder::encode;
use frugal_snn::eval::{evaluate, global_f, match_pairs, render_metrics};
use frugal_snn::network::{train, NetworkConfig, OutputRecord};
use frugal_snn::raster::SpikeRaster;
use frugal_snn::signals::{lowpass_smooth, normalize, MultichannelSignal};
use frugal_snn::stp::{apply_mask, save_mask, stp_finalize, stp_run};
use frugal_snn::synth::{
    add_background_noise, add_jitter, make_disjoint_set, make_field_pattern_set, make_nested_set,
    make_propagating_set, DisjointParams, FieldPatternParams, GroundTruth, NestedParams,
    PropagatingParams,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, Resolved};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestInput {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce and audit a run. The duration field is
/// informational; all other artifacts are byte-deterministic per seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub preset: String,
    pub config_toml: String,
    pub inputs: Vec<ManifestInput>,
    pub artifacts: Vec<String>,
    pub f_global_per_epoch: Vec<f64>,
    pub f_global_final: Option<f64>,
    pub duration_ms: u128,
}

pub struct RunOutcome {
    pub record: OutputRecord,
    pub f_per_epoch: Vec<f64>,
    pub final_f: Option<f64>,
    pub manifest_path: PathBuf,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("digest {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

enum PipelineInput {
    Raster(SpikeRaster),
    Signal(MultichannelSignal),
}

fn generate(resolved: &Resolved) -> Result<(PipelineInput, Option<GroundTruth>)> {
    let input = &resolved.raw.input;
    let generator = input.generator.as_deref().ok_or_else(|| {
        ConfigError("input.kind = \"synth\" requires input.generator".into())
    })?;
    let seed = input.gen_seed.unwrap_or(resolved.raw.seed);
    match generator {
        "disjoint" => {
            let mut p = DisjointParams {
                seed,
                ..DisjointParams::default()
            };
            if let Some(v) = input.patterns {
                p.n_patterns = v;
            }
            if let Some(v) = input.trains {
                p.trains = v;
            }
            if let Some(v) = input.duration_ms {
                p.duration_ms = v;
            }
            if let Some(v) = input.gap_ms {
                p.gap_ms = v;
            }
            if let Some(v) = input.lead_ms {
                p.lead_ms = v;
            }
            if let Some(v) = input.repeats {
                p.repeats = v;
            }
            let (raster, truth) = make_disjoint_set(&p)?;
            let raster = corrupt(raster, input, seed)?;
            Ok((PipelineInput::Raster(raster), Some(truth)))
        }
        "nested" => {
            let mut p = NestedParams {
                seed,
                ..NestedParams::default()
            };
            if let Some(v) = input.trains {
                p.trains = v;
            }
            if let Some(v) = input.duration_ms {
                p.duration_ms = v;
            }
            if let Some(v) = input.gap_ms {
                p.gap_ms = v;
            }
            if let Some(v) = input.lead_ms {
                p.lead_ms = v;
            }
            if let Some(v) = input.repeats {
                p.repeats = v;
            }
            let (raster, truth) = make_nested_set(&p)?;
            let raster = corrupt(raster, input, seed)?;
            Ok((PipelineInput::Raster(raster), Some(truth)))
        }
        "field" => {
            let mut p = FieldPatternParams {
                seed,
                ..FieldPatternParams::default()
            };
            if let Some(v) = input.patterns {
                p.n_patterns = v;
            }
            if let Some(v) = input.duration_ms {
                p.duration_ms = v;
            }
            if let Some(v) = input.gap_ms {
                p.gap_ms = v;
            }
            if let Some(v) = input.lead_ms {
                p.lead_ms = v;
            }
            if let Some(v) = input.repeats {
                p.repeats = v;
            }
            let (raster, truth) = make_field_pattern_set(&p)?;
            let raster = corrupt(raster, input, seed)?;
            Ok((PipelineInput::Raster(raster), Some(truth)))
        }
        "propagating" => {
            let p = PropagatingParams {
                seed,
                ..PropagatingParams::default()
            };
            let (signal, truth) = make_propagating_set(&p)?;
            Ok((PipelineInput::Signal(signal), Some(truth)))
        }
        other => bail!(ConfigError(format!(
            "unknown generator {other:?} (expected disjoint, nested, field, or propagating)"
        ))),
    }
}

fn corrupt(
    raster: SpikeRaster,
    input: &crate::config::InputSection,
    seed: u64,
) -> Result<SpikeRaster> {
    let mut out = raster;
    let drop = input.drop_prob.unwrap_or(0.0);
    let shift = input.shift_sd.unwrap_or(0.0);
    if drop > 0.0 || shift > 0.0 {
        out = add_jitter(&out, drop, shift, seed.wrapping_add(0x9e37_79b9))?;
    }
    if let Some(density) = input.noise_density {
        if density > 0.0 {
            out = add_background_noise(&out, density, seed.wrapping_add(0x7f4a_7c15))?;
        }
    }
    Ok(out)
}

/// Runs the configured pipeline and writes all artifacts under
/// `resolved.raw.out_dir`.
pub fn run_pipeline(resolved: &Resolved, config_source: Option<&Path>) -> Result<RunOutcome> {
    let started = Instant::now();
    let out_dir = &resolved.raw.out_dir;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let mut artifacts: Vec<PathBuf> = Vec::new();
    let mut inputs: Vec<ManifestInput> = Vec::new();
    if let Some(p) = config_source {
        inputs.push(ManifestInput {
            path: p.display().to_string(),
            sha256: sha256_file(p)?,
        });
    }

    // --- input stage ---
    let input_cfg = &resolved.raw.input;
    let (pipeline_input, mut truth) = match input_cfg.kind.as_str() {
        "synth" => {
            let (pi, truth) = generate(resolved)?;
            (pi, truth)
        }
        "raster" => {
            let path = input_cfg
                .path
                .as_ref()
                .ok_or_else(|| ConfigError("input.path is required".into()))?;
            inputs.push(ManifestInput {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            });
            (PipelineInput::Raster(SpikeRaster::load_csv(path)?), None)
        }
        "signal" => {
            let path = input_cfg
                .path
                .as_ref()
                .ok_or_else(|| ConfigError("input.path is required".into()))?;
            inputs.push(ManifestInput {
                path: path.display().to_string(),
                sha256: sha256_file(path)?,
            });
            (
                PipelineInput::Signal(MultichannelSignal::load_csv(
                    path,
                    input_cfg.sample_period_ms,
                )?),
                None,
            )
        }
        other => bail!(ConfigError(format!(
            "input.kind must be synth, raster, or signal; got {other:?}"
        ))),
    };
    if let Some(path) = &input_cfg.truth_path {
        inputs.push(ManifestInput {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        truth = Some(GroundTruth {
            raster: SpikeRaster::load_csv(path)?,
            occurrences: Vec::new(),
        });
    }
    if let Some(t) = &truth {
        let p = out_dir.join("truth.csv");
        t.raster.save_csv(&p)?;
        artifacts.push(p);
    }

    // --- encode stage ---
    let raster = match pipeline_input {
        PipelineInput::Raster(r) => {
            let p = out_dir.join("input_raster.csv");
            r.save_csv(&p)?;
            artifacts.push(p);
            r
        }
        PipelineInput::Signal(s) => {
            let p = out_dir.join("input_signal.csv");
            s.save_csv(&p)?;
            artifacts.push(p);
            let mut s = s;
            if let Some(mode) = resolved.normalize {
                s = normalize(&s, mode)?;
            }
            if resolved.raw.pipeline.lowpass_hz > 0.0 {
                s = lowpass_smooth(
                    &s,
                    resolved.raw.pipeline.lowpass_hz,
                    resolved.raw.pipeline.lowpass_order,
                )?;
                // smoothing can overshoot the unit interval slightly
                if let Some(mode) = resolved.normalize {
                    s = normalize(&s, mode)?;
                }
            }
            let encoded = encode(
                &s,
                resolved.raw.pipeline.encode_fields,
                resolved.raw.pipeline.encode_halo,
            )?;
            let p = out_dir.join("encoded.csv");
            encoded.save_csv(&p)?;
            artifacts.push(p);
            encoded
        }
    };

    // --- STP stage ---
    let masked = if resolved.stp_enabled {
        let state = stp_run(&raster, resolved.stp);
        let mask = stp_finalize(&state, &raster, 24)?;
        let p = out_dir.join("stp_mask.csv");
        save_mask(&mask, &p)?;
        artifacts.push(p);
        let masked = apply_mask(&raster, &mask)?;
        let p = out_dir.join("masked.csv");
        masked.save_csv(&p)?;
        artifacts.push(p);
        log::info!(
            "STP: stop at {:?}, {} of {} trains retained",
            state.stop_step,
            mask.iter().filter(|&&m| m).count(),
            mask.len()
        );
        masked
    } else {
        if resolved.preset.stp_enabled_by_default() {
            log::warn!(
                "STP stage skipped; the {} preset normally pre-filters raw encodings, \
                 so the input raster should already be filtered",
                resolved.preset
            );
        }
        raster
    };

    // --- training stage ---
    let cfg = NetworkConfig {
        n_neurons: resolved.raw.neurons,
        lts: resolved.lts,
        stdp: resolved.stdp,
        ip: resolved.ip,
        epochs: resolved.raw.epochs,
        rng_seed: resolved.raw.seed,
        preset: resolved.preset,
    };
    let record = train(&masked, &cfg)?;
    let p = out_dir.join("output.csv");
    record.output.save_csv(&p)?;
    artifacts.push(p);
    // the last epoch rebased to epoch-local time, for standalone scoring
    let p = out_dir.join("output_final_epoch.csv");
    record.epoch_output(cfg.epochs - 1).save_csv(&p)?;
    artifacts.push(p);
    let p = out_dir.join("final_weights.csv");
    record.weight_snapshots.last().unwrap().save_csv(&p)?;
    artifacts.push(p);
    if resolved.raw.pipeline.epoch_snapshots {
        for (e, snapshot) in record.weight_snapshots.iter().enumerate() {
            let p = out_dir.join(format!("weights_epoch_{e:03}.csv"));
            snapshot.save_csv(&p)?;
            artifacts.push(p);
        }
    }
    let p = out_dir.join("thresholds.csv");
    let mut th_text = String::from("t,neuron,th\n");
    for (t, neuron, th) in &record.threshold_log {
        th_text.push_str(&format!("{t},{neuron},{th}\n"));
    }
    std::fs::write(&p, th_text)?;
    artifacts.push(p);

    // --- evaluation stage ---
    let mut f_per_epoch = Vec::new();
    let mut final_f = None;
    if let Some(truth) = &truth {
        let epoch_len = record.epoch_len();
        let padded = SpikeRaster::from_events(
            truth.raster.trains(),
            epoch_len,
            truth.raster.timestep_ms(),
            truth.raster.events(),
        )?;
        let window = resolved.coincidence_window_ms;
        let mut per_epoch_rows = Vec::new();
        for e in 0..cfg.epochs {
            let out = record.epoch_output(e);
            let pairs = match_pairs(&padded, &out, window)?;
            let f = global_f(&padded, &out, &pairs, window);
            f_per_epoch.push(f);
            per_epoch_rows.push((
                e,
                f,
                out.num_events(),
                record.distinct_firing_neurons(e),
            ));
        }
        let report = evaluate(&padded, &record.epoch_output(cfg.epochs - 1), window)?;
        final_f = Some(report.f_global);
        let p = out_dir.join("metrics.txt");
        std::fs::write(&p, render_metrics(&report, &per_epoch_rows))?;
        artifacts.push(p);
        log::info!("final-epoch global f = {:.4}", report.f_global);
    }

    // --- manifest ---
    let manifest = Manifest {
        seed: resolved.raw.seed,
        preset: resolved.preset.name().to_string(),
        config_toml: resolved.resolved_toml.clone(),
        inputs,
        artifacts: artifacts
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        f_global_per_epoch: f_per_epoch.clone(),
        f_global_final: final_f,
        duration_ms: started.elapsed().as_millis(),
    };
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;

    Ok(RunOutcome {
        record,
        f_per_epoch,
        final_f,
        manifest_path,
    })
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}
