//! Run configuration: sectioned TOML with three bundled presets.
//!
//! Resolution order: the named preset file is the base, the user's config
//! overlays it key by key, and command-line flags overlay last. The resolved
//! configuration is a complete TOML document that reproduces the run.

use std::fmt;
use std::path::{Path, PathBuf};

use frugal_snn::lts::LtsParams;
use frugal_snn::plasticity::{IpParams, StdpParams};
use frugal_snn::preset::Preset;
use frugal_snn::signals::NormalizeMode;
use frugal_snn::stp::StpParams;
use serde::{Deserialize, Serialize};

pub const PRESET_ARTIFICIAL: &str = include_str!("../presets/artificial.toml");
pub const PRESET_VOWEL: &str = include_str!("../presets/vowel.toml");
pub const PRESET_NEURAL: &str = include_str!("../presets/neural.toml");

/// Configuration problems are reported separately from runtime failures so
/// the binary can exit with a distinct code.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    match name {
        "artificial" => Ok(PRESET_ARTIFICIAL),
        "vowel" => Ok(PRESET_VOWEL),
        "neural" => Ok(PRESET_NEURAL),
        other => Err(ConfigError(format!(
            "unknown preset {other:?} (expected artificial, vowel, or neural)"
        ))),
    }
}

/// Recursively overlays `over` onto `base`; tables merge, scalars replace.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub preset: String,
    pub seed: u64,
    pub epochs: usize,
    pub neurons: usize,
    pub out_dir: PathBuf,
    pub input: InputSection,
    pub pipeline: PipelineSection,
    pub lts: LtsSection,
    pub stdp: StdpSection,
    pub ip: IpSection,
    pub stp_params: StpSection,
    pub eval: EvalSection,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            preset: "artificial".into(),
            seed: 0,
            epochs: 1,
            neurons: 10,
            out_dir: PathBuf::from("run_out"),
            input: InputSection::default(),
            pipeline: PipelineSection::default(),
            lts: LtsSection::default(),
            stdp: StdpSection::default(),
            ip: IpSection::default(),
            stp_params: StpSection::default(),
            eval: EvalSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputSection {
    /// "raster", "signal", or "synth".
    pub kind: String,
    pub path: Option<PathBuf>,
    pub truth_path: Option<PathBuf>,
    pub sample_period_ms: Option<f64>,
    /// synth: "disjoint", "nested", "field", or "propagating".
    pub generator: Option<String>,
    pub gen_seed: Option<u64>,
    pub patterns: Option<usize>,
    pub trains: Option<usize>,
    pub duration_ms: Option<f64>,
    pub gap_ms: Option<f64>,
    pub lead_ms: Option<f64>,
    pub repeats: Option<usize>,
    pub drop_prob: Option<f64>,
    pub shift_sd: Option<f64>,
    pub noise_density: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    /// "none", "per_channel", or "global".
    pub normalize: String,
    pub lowpass_hz: f64,
    pub lowpass_order: usize,
    /// None means: follow the preset's stp_params.enabled.
    pub stp: Option<bool>,
    pub encode_fields: usize,
    pub encode_halo: usize,
    /// Write a weight snapshot CSV after every epoch.
    pub epoch_snapshots: bool,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            normalize: "per_channel".into(),
            lowpass_hz: 0.0,
            lowpass_order: 2,
            stp: None,
            encode_fields: 20,
            encode_halo: 2,
            epoch_snapshots: false,
        }
    }
}

macro_rules! params_section {
    ($name:ident { $($field:ident: $ty:ty),+ $(,)? }) => {
        #[derive(Debug, Clone, Default, Deserialize, Serialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            $(pub $field: Option<$ty>,)+
        }
    };
}

params_section!(LtsSection {
    tau_m_ms: f64,
    epsilon: f64,
    alpha_n: f64,
    alpha_p: f64,
    g: f64,
    dt_ms: f64,
});

params_section!(StdpSection {
    w_ltp: f64,
    w_ltd: f64,
    w_lateral_potentiation: f64,
    w_lateral_inhibition: f64,
    t_stdp_ms: f64,
});

params_section!(IpSection {
    f_th_post: f64,
    dth_pair: f64,
    th_min: f64,
    th_max: f64,
});

params_section!(StpSection {
    enabled: bool,
    tau_stp_ms: f64,
    f_d: f64,
    stop_level: f64,
    retain_threshold: f64,
    group_fraction: f64,
});

params_section!(EvalSection {
    coincidence_window_ms: f64,
});

/// Fully resolved run parameters plus the complete TOML that reproduces
/// them.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: RawConfig,
    pub preset: Preset,
    pub lts: LtsParams,
    pub stdp: StdpParams,
    pub ip: IpParams,
    pub stp: StpParams,
    pub stp_enabled: bool,
    pub normalize: Option<NormalizeMode>,
    pub coincidence_window_ms: f64,
    pub resolved_toml: String,
}

/// CLI flag overrides applied after the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub neurons: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

/// Parses a user config file (or none) plus overrides into a merged value.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<Resolved, ConfigError> {
    let user: toml::Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            text.parse()
                .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => toml::Value::Table(Default::default()),
    };
    resolve(user, overrides)
}

pub fn resolve(user: toml::Value, overrides: &Overrides) -> Result<Resolved, ConfigError> {
    let preset_name = overrides
        .preset
        .clone()
        .or_else(|| {
            user.get("preset")
                .and_then(|v| v.as_str())
                .map(str::to_string)
        })
        .unwrap_or_else(|| "artificial".to_string());
    let mut value: toml::Value = preset_text(&preset_name)?
        .parse()
        .expect("bundled presets parse");
    merge(&mut value, user);
    if let toml::Value::Table(t) = &mut value {
        t.insert("preset".into(), toml::Value::String(preset_name.clone()));
        if let Some(seed) = overrides.seed {
            t.insert("seed".into(), toml::Value::Integer(seed as i64));
        }
        if let Some(epochs) = overrides.epochs {
            t.insert("epochs".into(), toml::Value::Integer(epochs as i64));
        }
        if let Some(neurons) = overrides.neurons {
            t.insert("neurons".into(), toml::Value::Integer(neurons as i64));
        }
        if let Some(out) = &overrides.out_dir {
            t.insert(
                "out_dir".into(),
                toml::Value::String(out.display().to_string()),
            );
        }
    }
    let raw: RawConfig = value
        .try_into()
        .map_err(|e| ConfigError(e.to_string()))?;
    finish(raw, &preset_name)
}

fn finish(raw: RawConfig, preset_name: &str) -> Result<Resolved, ConfigError> {
    let preset: Preset = preset_name.parse().map_err(ConfigError)?;
    if raw.neurons == 0 || raw.epochs == 0 {
        return Err(ConfigError("neurons and epochs must be at least 1".into()));
    }
    let base_lts = preset.lts();
    let lts = LtsParams {
        tau_m_ms: raw.lts.tau_m_ms.unwrap_or(base_lts.tau_m_ms),
        epsilon: raw.lts.epsilon.unwrap_or(base_lts.epsilon),
        alpha_n: raw.lts.alpha_n.unwrap_or(base_lts.alpha_n),
        alpha_p: raw.lts.alpha_p.unwrap_or(base_lts.alpha_p),
        g: raw.lts.g.unwrap_or(base_lts.g),
        dt_ms: raw.lts.dt_ms.unwrap_or(base_lts.dt_ms),
    };
    let base_stdp = preset.stdp();
    let stdp = StdpParams {
        w_ltp: raw.stdp.w_ltp.unwrap_or(base_stdp.w_ltp),
        w_ltd: raw.stdp.w_ltd.unwrap_or(base_stdp.w_ltd),
        w_lateral_potentiation: raw
            .stdp
            .w_lateral_potentiation
            .unwrap_or(base_stdp.w_lateral_potentiation),
        w_lateral_inhibition: raw
            .stdp
            .w_lateral_inhibition
            .unwrap_or(base_stdp.w_lateral_inhibition),
        t_stdp_ms: raw.stdp.t_stdp_ms.unwrap_or(base_stdp.t_stdp_ms),
    };
    let base_ip = preset.ip();
    let ip = IpParams {
        f_th_post: raw.ip.f_th_post.unwrap_or(base_ip.f_th_post),
        dth_pair: raw.ip.dth_pair.unwrap_or(base_ip.dth_pair),
        th_min: raw.ip.th_min.unwrap_or(base_ip.th_min),
        th_max: raw.ip.th_max.unwrap_or(base_ip.th_max),
    };
    let base_stp = preset.stp();
    let stp = StpParams {
        tau_stp_ms: raw.stp_params.tau_stp_ms.unwrap_or(base_stp.tau_stp_ms),
        f_d: raw.stp_params.f_d.unwrap_or(base_stp.f_d),
        stop_level: raw.stp_params.stop_level.unwrap_or(base_stp.stop_level),
        retain_threshold: raw
            .stp_params
            .retain_threshold
            .unwrap_or(base_stp.retain_threshold),
        group_fraction: raw
            .stp_params
            .group_fraction
            .unwrap_or(base_stp.group_fraction),
    };
    let stp_enabled = raw
        .pipeline
        .stp
        .or(raw.stp_params.enabled)
        .unwrap_or_else(|| preset.stp_enabled_by_default());
    let normalize = match raw.pipeline.normalize.as_str() {
        "none" => None,
        "per_channel" => Some(NormalizeMode::PerChannel),
        "global" => Some(NormalizeMode::Global),
        other => {
            return Err(ConfigError(format!(
                "pipeline.normalize must be none, per_channel, or global; got {other:?}"
            )))
        }
    };
    let coincidence_window_ms = raw
        .eval
        .coincidence_window_ms
        .unwrap_or_else(|| preset.coincidence_window_ms());
    let resolved_toml =
        toml::to_string_pretty(&raw).map_err(|e| ConfigError(e.to_string()))?;
    Ok(Resolved {
        raw,
        preset,
        lts,
        stdp,
        ip,
        stp,
        stp_enabled,
        normalize,
        coincidence_window_ms,
        resolved_toml,
    })
}
