//! The simulation loop: stimulus currents, neuron stepping, threshold
//! crossing, winner-take-all, plasticity dispatch, and the global reset.
//!
//! Time advances one raster timestep at a time; the LTS integration step is
//! therefore the raster's timestep. Between epochs the runner inserts a
//! silent gap of ten membrane time constants so an epoch boundary cannot
//! manufacture a rebound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SnnError};
use crate::lts::{lts_reset, lts_step, LtsNeuronState, LtsParams};
use crate::plasticity::{
    apply_classical_stdp, apply_ip, apply_lateral_stdp, recent_activity, IpParams, StdpParams,
    SynapseMatrix,
};
use crate::preset::Preset;
use crate::raster::SpikeRaster;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub n_neurons: usize,
    pub lts: LtsParams,
    pub stdp: StdpParams,
    pub ip: IpParams,
    pub epochs: usize,
    pub rng_seed: u64,
    pub preset: Preset,
}

impl NetworkConfig {
    pub fn from_preset(preset: Preset, n_neurons: usize, epochs: usize, rng_seed: u64) -> Self {
        Self {
            n_neurons,
            lts: preset.lts(),
            stdp: preset.stdp(),
            ip: preset.ip(),
            epochs,
            rng_seed,
            preset,
        }
    }
}

/// Everything a training run produces: the output spikes over the full
/// timeline (epochs x (data + gap)), per-epoch weight snapshots, and the
/// threshold changes as they happened.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    pub output: SpikeRaster,
    /// Raster timesteps in one epoch, excluding the inter-epoch gap.
    pub data_len: usize,
    /// Silent steps appended after each epoch's data.
    pub gap_steps: usize,
    pub initial_weights: SynapseMatrix,
    /// Weights after each epoch.
    pub weight_snapshots: Vec<SynapseMatrix>,
    /// (absolute step, neuron, threshold after update), one entry per
    /// postsynaptic spike.
    pub threshold_log: Vec<(u64, usize, f64)>,
}

impl OutputRecord {
    pub fn epoch_len(&self) -> usize {
        self.data_len + self.gap_steps
    }

    /// Output spikes of one epoch, rebased to epoch-local time.
    pub fn epoch_output(&self, epoch: usize) -> SpikeRaster {
        self.output
            .slice_steps(epoch * self.epoch_len(), self.epoch_len())
    }

    pub fn distinct_firing_neurons(&self, epoch: usize) -> usize {
        let slice = self.epoch_output(epoch);
        (0..slice.trains()).filter(|&i| !slice.train(i).is_empty()).count()
    }
}

/// Stimulus current per neuron: the weighted sum of this timestep's spikes.
/// Always non-positive since weights are non-positive.
pub fn stimulus_current(w: &SynapseMatrix, spikes_now: &[bool]) -> Result<Vec<f64>> {
    if spikes_now.len() != w.inputs() {
        return Err(SnnError::DimensionMismatch {
            msg: format!(
                "{} spike flags for {} input trains",
                spikes_now.len(),
                w.inputs()
            ),
        });
    }
    let mut acc = vec![0.0; w.neurons()];
    for (i, &spiking) in spikes_now.iter().enumerate() {
        if spiking {
            for (a, &wij) in acc.iter_mut().zip(w.row(i)) {
                *a += wij;
            }
        }
    }
    Ok(acc)
}

/// Among neurons at or above their threshold, the one with the steepest
/// rebound (largest last voltage step). Ties go to the lowest index.
pub fn wta_select(states: &[LtsNeuronState]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, s) in states.iter().enumerate() {
        if s.v >= s.th {
            match best {
                Some((_, dv)) if s.last_dv <= dv => {}
                _ => best = Some((j, s.last_dv)),
            }
        }
    }
    best.map(|(j, _)| j)
}

/// Output of one pass over a raster (plus an optional silent tail).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochResult {
    /// (local timestep, neuron) winner events, in time order.
    pub spikes: Vec<(u32, usize)>,
    /// (local timestep, neuron, threshold after IP), per winner event.
    pub threshold_changes: Vec<(u32, usize, f64)>,
    pub steps: usize,
}

fn run_pass(
    raster: &SpikeRaster,
    columns: &[Vec<u32>],
    tail_steps: usize,
    w: &mut SynapseMatrix,
    states: &mut [LtsNeuronState],
    cfg: &NetworkConfig,
    learning: bool,
) -> EpochResult {
    let params = LtsParams {
        dt_ms: raster.timestep_ms(),
        ..cfg.lts
    };
    let data_len = raster.timesteps();
    let total = data_len + tail_steps;
    let mut currents = vec![0.0; cfg.n_neurons];
    let mut spikes = Vec::new();
    let mut threshold_changes = Vec::new();
    static EMPTY: Vec<u32> = Vec::new();
    for t in 0..total {
        let col = if t < data_len { &columns[t] } else { &EMPTY };
        currents.iter_mut().for_each(|c| *c = 0.0);
        for &i in col {
            for (c, &wij) in currents.iter_mut().zip(w.row(i as usize)) {
                *c += wij;
            }
        }
        for (s, &i) in states.iter_mut().zip(&currents) {
            *s = lts_step(s, i, &params);
        }
        if let Some(winner) = wta_select(states) {
            spikes.push((t as u32, winner));
            if learning {
                let t_post = t as i64;
                let flags = recent_activity(raster, t_post, cfg.stdp.t_stdp_ms);
                apply_classical_stdp(w, winner, &flags, &cfg.stdp);
                apply_lateral_stdp(w, winner, &flags, &cfg.stdp);
                apply_ip(
                    &mut states[winner],
                    w,
                    winner,
                    raster,
                    t_post,
                    &cfg.ip,
                    cfg.stdp.t_stdp_ms,
                );
                threshold_changes.push((t as u32, winner, states[winner].th));
            }
            for s in states.iter_mut() {
                *s = lts_reset(s);
            }
        }
    }
    EpochResult {
        spikes,
        threshold_changes,
        steps: total,
    }
}

/// One pass over the raster. With `learning` off, weights and thresholds
/// are left bitwise untouched (inference mode).
pub fn run_epoch(
    raster: &SpikeRaster,
    w: &mut SynapseMatrix,
    states: &mut [LtsNeuronState],
    cfg: &NetworkConfig,
    learning: bool,
) -> EpochResult {
    let columns = raster.columns();
    run_pass(raster, &columns, 0, w, states, cfg, learning)
}

/// Number of silent steps inserted between epochs.
pub fn inter_epoch_gap_steps(lts: &LtsParams, timestep_ms: f64) -> usize {
    (10.0 * lts.tau_m_ms / timestep_ms).ceil() as usize
}

/// Full training run: seeded weight initialization, `cfg.epochs` passes with
/// learning on, neuron state carried across epochs.
pub fn train(raster: &SpikeRaster, cfg: &NetworkConfig) -> Result<OutputRecord> {
    if raster.trains() == 0 {
        return Err(SnnError::EmptyRaster);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut w = SynapseMatrix::random(raster.trains(), cfg.n_neurons, &mut rng);
    let initial_weights = w.clone();
    let mut states = vec![LtsNeuronState::new(); cfg.n_neurons];
    let gap_steps = inter_epoch_gap_steps(&cfg.lts, raster.timestep_ms());
    let data_len = raster.timesteps();
    let epoch_len = data_len + gap_steps;
    let columns = raster.columns();

    let mut output = SpikeRaster::new(
        cfg.n_neurons,
        cfg.epochs * epoch_len,
        raster.timestep_ms(),
    );
    let mut weight_snapshots = Vec::with_capacity(cfg.epochs);
    let mut threshold_log = Vec::new();
    for e in 0..cfg.epochs {
        let offset = (e * epoch_len) as u64;
        let result = run_pass(raster, &columns, gap_steps, &mut w, &mut states, cfg, true);
        for (t, neuron) in result.spikes {
            output.push_spike(neuron, offset as u32 + t);
        }
        for (t, neuron, th) in result.threshold_changes {
            threshold_log.push((offset + t as u64, neuron, th));
        }
        weight_snapshots.push(w.clone());
    }
    Ok(OutputRecord {
        output,
        data_len,
        gap_steps,
        initial_weights,
        weight_snapshots,
        threshold_log,
    })
}
