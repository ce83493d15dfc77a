//! The three learning rules, applied in a fixed order at every postsynaptic
//! spike: classical STDP, lateral STDP, then intrinsic plasticity.
//!
//! Weights are negative (inhibitory drive) and clipped to [-1, 0] after
//! every update; potentiation therefore means moving toward -1. Thresholds
//! are clipped to [20, 3500].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Result, SnnError};
use crate::lts::{LtsNeuronState, TH_MAX, TH_MIN};
use crate::raster::SpikeRaster;

pub const W_MIN: f64 = -1.0;
pub const W_MAX: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    pub w_ltp: f64,
    pub w_ltd: f64,
    pub w_lateral_potentiation: f64,
    pub w_lateral_inhibition: f64,
    pub t_stdp_ms: f64,
}

impl StdpParams {
    pub fn artificial() -> Self {
        Self {
            w_ltp: -0.1,
            w_ltd: 0.06,
            w_lateral_potentiation: -0.001,
            w_lateral_inhibition: 0.0002,
            t_stdp_ms: 500.0,
        }
    }

    pub fn vowel() -> Self {
        Self::artificial()
    }

    pub fn neural() -> Self {
        Self {
            t_stdp_ms: 8000.0,
            ..Self::artificial()
        }
    }
}

/// Threshold update constants. `dth_pair` is the per presynaptic-spike
/// increment coefficient; `f_th_post` the multiplicative decrease per
/// postsynaptic spike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpParams {
    pub f_th_post: f64,
    pub dth_pair: f64,
    pub th_min: f64,
    pub th_max: f64,
}

impl IpParams {
    pub fn artificial() -> Self {
        Self {
            f_th_post: 0.01,
            dth_pair: 0.1 * 0.01,
            th_min: TH_MIN,
            th_max: TH_MAX,
        }
    }

    pub fn vowel() -> Self {
        Self {
            dth_pair: 0.6 * 0.01,
            ..Self::artificial()
        }
    }

    pub fn neural() -> Self {
        Self {
            f_th_post: 0.5,
            dth_pair: 0.1 * 0.5,
            th_min: TH_MIN,
            th_max: TH_MAX,
        }
    }
}

/// Weights from input trains to neurons, train-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseMatrix {
    inputs: usize,
    neurons: usize,
    w: Vec<f64>,
}

impl SynapseMatrix {
    /// Uniform-random initialization in (-1, 0), row by row.
    pub fn random(inputs: usize, neurons: usize, rng: &mut impl Rng) -> Self {
        let w = (0..inputs * neurons)
            .map(|_| -rng.gen_range(f64::EPSILON..1.0))
            .collect();
        Self {
            inputs,
            neurons,
            w,
        }
    }

    pub fn from_fn(inputs: usize, neurons: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut w = Vec::with_capacity(inputs * neurons);
        for i in 0..inputs {
            for j in 0..neurons {
                w.push(f(i, j));
            }
        }
        Self {
            inputs,
            neurons,
            w,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn get(&self, input: usize, neuron: usize) -> f64 {
        self.w[input * self.neurons + neuron]
    }

    pub fn set(&mut self, input: usize, neuron: usize, v: f64) {
        self.w[input * self.neurons + neuron] = v;
    }

    pub fn row(&self, input: usize) -> &[f64] {
        &self.w[input * self.neurons..(input + 1) * self.neurons]
    }

    fn add_clipped(&mut self, input: usize, neuron: usize, delta: f64) {
        let slot = &mut self.w[input * self.neurons + neuron];
        *slot = (*slot + delta).clamp(W_MIN, W_MAX);
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("train");
        for j in 0..self.neurons {
            let _ = write!(out, ",{j}");
        }
        out.push('\n');
        for i in 0..self.inputs {
            let _ = write!(out, "{i}");
            for j in 0..self.neurons {
                let _ = write!(out, ",{}", self.get(i, j));
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|source| SnnError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| SnnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("train") || line.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            let mut row = Vec::with_capacity(cells.len().saturating_sub(1));
            for (col, cell) in cells.iter().enumerate().skip(1) {
                let v: f64 = cell.trim().parse().map_err(|_| SnnError::BadCell {
                    path: path.to_path_buf(),
                    row: lineno,
                    col,
                    value: cell.to_string(),
                })?;
                row.push(v);
            }
            rows.push(row);
        }
        let neurons = rows.first().map(Vec::len).unwrap_or(0);
        if neurons == 0 || rows.iter().any(|r| r.len() != neurons) {
            return Err(SnnError::BadFormat {
                path: path.to_path_buf(),
                msg: "weight matrix rows are empty or ragged".into(),
            });
        }
        Ok(Self {
            inputs: rows.len(),
            neurons,
            w: rows.into_iter().flatten().collect(),
        })
    }
}

/// Converts the STDP lookback to whole timesteps.
pub fn window_steps(t_stdp_ms: f64, timestep_ms: f64) -> i64 {
    (t_stdp_ms / timestep_ms).round().max(1.0) as i64
}

/// Per-train flags: true iff the train spiked in the half-open window
/// (t_post - T_STDP, t_post].
pub fn recent_activity(raster: &SpikeRaster, t_post: i64, t_stdp_ms: f64) -> Vec<bool> {
    let w = window_steps(t_stdp_ms, raster.timestep_ms());
    (0..raster.trains())
        .map(|i| raster.any_in_window(i, t_post - w, t_post))
        .collect()
}

/// Classical STDP on the winner's column: potentiate flagged trains,
/// depress the rest, clip.
pub fn apply_classical_stdp(
    w: &mut SynapseMatrix,
    winner: usize,
    flags: &[bool],
    p: &StdpParams,
) {
    debug_assert_eq!(flags.len(), w.inputs());
    for (i, &flagged) in flags.iter().enumerate() {
        let delta = if flagged { p.w_ltp } else { p.w_ltd };
        w.add_clipped(i, winner, delta);
    }
}

/// Lateral STDP on flagged trains only: a small extra potentiation for the
/// winner, a small depression for every other neuron.
pub fn apply_lateral_stdp(w: &mut SynapseMatrix, winner: usize, flags: &[bool], p: &StdpParams) {
    debug_assert_eq!(flags.len(), w.inputs());
    for (i, &flagged) in flags.iter().enumerate() {
        if !flagged {
            continue;
        }
        for j in 0..w.neurons() {
            let delta = if j == winner {
                p.w_lateral_potentiation
            } else {
                p.w_lateral_inhibition
            };
            w.add_clipped(i, j, delta);
        }
    }
}

/// Intrinsic plasticity on the winner's threshold: multiplicative decrease,
/// then one increment of `dth_pair * |w|` per presynaptic spike inside the
/// lookback window, clipped to [th_min, th_max].
pub fn apply_ip(
    state: &mut LtsNeuronState,
    w: &SynapseMatrix,
    winner: usize,
    raster: &SpikeRaster,
    t_post: i64,
    p: &IpParams,
    t_stdp_ms: f64,
) {
    let win = window_steps(t_stdp_ms, raster.timestep_ms());
    let mut th = state.th - p.f_th_post * state.th;
    for i in 0..raster.trains() {
        let spikes = raster.count_in_window(i, t_post - win, t_post);
        if spikes > 0 {
            th += spikes as f64 * p.dth_pair * w.get(i, winner).abs();
        }
    }
    state.th = th.clamp(p.th_min, p.th_max);
}
