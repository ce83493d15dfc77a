//! Short-term plasticity pre-filter.
//!
//! Every input train carries a depression weight starting at 1. Trains that
//! spike relentlessly (noise, silence coding) depress fast; the pass stops
//! the moment any weight falls below the stop level, the weights freeze, and
//! a binary retain mask is derived from the frozen weights. A per-channel
//! group rule then drops whole 24-train blocks that lost most of their
//! spikes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SnnError};
use crate::raster::SpikeRaster;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StpParams {
    pub tau_stp_ms: f64,
    pub f_d: f64,
    pub stop_level: f64,
    pub retain_threshold: f64,
    pub group_fraction: f64,
}

impl Default for StpParams {
    fn default() -> Self {
        Self {
            tau_stp_ms: 2000.0,
            f_d: 0.003,
            stop_level: 0.75,
            retain_threshold: 0.92,
            group_fraction: 0.60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StpState {
    pub params: StpParams,
    pub w: Vec<f64>,
    pub stopped: bool,
    /// Set once a full pass over the data has completed without stopping.
    pub data_ended: bool,
    /// Timestep at which the stop triggered, if it did.
    pub stop_step: Option<u32>,
}

impl StpState {
    pub fn new(trains: usize, params: StpParams) -> Self {
        Self {
            params,
            w: vec![1.0; trains],
            stopped: false,
            data_ended: false,
            stop_step: None,
        }
    }

    /// One Euler step. Recovery toward 1 scales with dt; the depression
    /// decrement applies once per spiking timestep.
    pub fn step(&mut self, spikes_now: &[bool], dt_ms: f64) {
        debug_assert!(!self.stopped, "STP weights are frozen after the stop");
        let tau = self.params.tau_stp_ms;
        let f_d = self.params.f_d;
        for (w, &spiking) in self.w.iter_mut().zip(spikes_now) {
            let mut dw = dt_ms * (1.0 - *w) / tau;
            if spiking {
                dw -= *w * f_d;
            }
            *w += dw;
        }
        if self.w.iter().any(|&w| w < self.params.stop_level) {
            self.stopped = true;
        }
    }
}

/// Runs the STP pass over a raster, stopping at the first weight below the
/// stop level; remaining data is left untouched.
pub fn stp_run(raster: &SpikeRaster, params: StpParams) -> StpState {
    let mut state = StpState::new(raster.trains(), params);
    let dt = raster.timestep_ms();
    let cols = raster.columns();
    let mut spikes_now = vec![false; raster.trains()];
    for (t, col) in cols.iter().enumerate() {
        for &i in col {
            spikes_now[i as usize] = true;
        }
        state.step(&spikes_now, dt);
        for &i in col {
            spikes_now[i as usize] = false;
        }
        if state.stopped {
            state.stop_step = Some(t as u32);
            return state;
        }
    }
    state.data_ended = true;
    state
}

/// Thresholds the frozen weights into a binary mask, then zeroes any
/// `per_channel_trains` block that would retain less than the group
/// fraction of its original spikes.
pub fn stp_finalize(
    state: &StpState,
    raster: &SpikeRaster,
    per_channel_trains: usize,
) -> Result<Vec<bool>> {
    if !state.stopped && !state.data_ended {
        return Err(SnnError::StpNotStopped);
    }
    if state.w.len() != raster.trains() {
        return Err(SnnError::DimensionMismatch {
            msg: format!(
                "STP state tracks {} trains, raster has {}",
                state.w.len(),
                raster.trains()
            ),
        });
    }
    // Tolerance so a retain threshold of exactly 1.0 keeps never-depressed
    // trains despite float recovery roundoff.
    let cut = state.params.retain_threshold - 1e-9;
    let mut mask: Vec<bool> = state.w.iter().map(|&w| w >= cut).collect();
    let n = raster.trains();
    let mut block_start = 0;
    while block_start < n {
        let block_end = (block_start + per_channel_trains).min(n);
        let mut total = 0usize;
        let mut retained = 0usize;
        for i in block_start..block_end {
            let count = raster.train(i).len();
            total += count;
            if mask[i] {
                retained += count;
            }
        }
        if total > 0 && (retained as f64) < state.params.group_fraction * total as f64 {
            for m in &mut mask[block_start..block_end] {
                *m = false;
            }
        }
        block_start = block_end;
    }
    Ok(mask)
}

/// Removes every event on masked-out trains; everything else is preserved.
pub fn apply_mask(raster: &SpikeRaster, mask: &[bool]) -> Result<SpikeRaster> {
    if mask.len() != raster.trains() {
        return Err(SnnError::MaskLengthMismatch {
            mask: mask.len(),
            trains: raster.trains(),
        });
    }
    SpikeRaster::from_events(
        raster.trains(),
        raster.timesteps(),
        raster.timestep_ms(),
        raster.events().filter(|&(train, _)| mask[train]),
    )
}

pub fn save_mask(mask: &[bool], path: &Path) -> Result<()> {
    let mut out = String::from("train,mask\n");
    for (i, &m) in mask.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i, u8::from(m));
    }
    fs::write(path, out).map_err(|source| SnnError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_mask(path: &Path) -> Result<Vec<bool>> {
    let text = fs::read_to_string(path).map_err(|source| SnnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut mask = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line == "train,mask" || line.starts_with('#') {
            continue;
        }
        let bit = line.rsplit(',').next().unwrap_or("");
        match bit {
            "0" => mask.push(false),
            "1" => mask.push(true),
            other => {
                return Err(SnnError::BadCell {
                    path: path.to_path_buf(),
                    row: lineno,
                    col: 1,
                    value: other.to_string(),
                })
            }
        }
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weight_one_without_spikes_is_fixed() {
        let mut state = StpState::new(1, StpParams::default());
        for _ in 0..100 {
            state.step(&[false], 1.0);
        }
        assert_eq!(state.w[0], 1.0);
    }

    #[test]
    fn single_spike_step_from_one() {
        // w = 1, spike, dt = 1, tau = 2000, f_d = 0.003:
        // dw = 1*(1-1)/2000 - 1*0.003 = -0.003
        let mut state = StpState::new(1, StpParams::default());
        state.step(&[true], 1.0);
        assert!((state.w[0] - 0.997).abs() < 1e-12);
    }

    #[test]
    fn constant_spiking_converges_to_one_seventh() {
        // Fixed point of (1-w)/tau = f_d * w at dt = 1:
        // w* = 1 / (1 + tau * f_d) = 1/7
        let params = StpParams {
            stop_level: 0.0, // keep updating through the transient
            ..StpParams::default()
        };
        let mut state = StpState::new(1, params);
        for _ in 0..20_000 {
            state.step(&[true], 1.0);
        }
        assert!((state.w[0] - 1.0 / 7.0).abs() < 1e-3, "w = {}", state.w[0]);
    }

    #[test]
    fn recovery_is_monotone_and_bounded() {
        let params = StpParams {
            stop_level: 0.0,
            ..StpParams::default()
        };
        let mut state = StpState::new(1, params);
        for _ in 0..500 {
            state.step(&[true], 1.0);
        }
        let mut prev = state.w[0];
        for _ in 0..100_000 {
            state.step(&[false], 1.0);
            assert!(state.w[0] >= prev);
            prev = state.w[0];
        }
        assert!(state.w[0] <= 1.0 + 1e-12);
        assert!(state.w[0] > 0.9999);
    }

    #[test]
    fn weights_stay_in_unit_interval_for_any_spike_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = StpParams {
            stop_level: 0.0,
            ..StpParams::default()
        };
        let mut state = StpState::new(4, params);
        for _ in 0..50_000 {
            let spikes: Vec<bool> = (0..4).map(|_| rng.gen_bool(0.5)).collect();
            state.step(&spikes, 1.0);
            for &w in &state.w {
                assert!(w > 0.0 && w <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn run_stops_at_first_crossing_and_freezes() {
        // train 0 spikes every step; crossing 0.75 takes ceil(log(0.75)/log(...))
        // steps, well under the raster length. train 1 never spikes.
        let events: Vec<(usize, u32)> = (0..500).map(|t| (0, t)).collect();
        let raster = SpikeRaster::from_events(2, 500, 1.0, events).unwrap();
        let state = stp_run(&raster, StpParams::default());
        assert!(state.stopped);
        let stop = state.stop_step.unwrap();
        assert!(stop < 150, "stop at {stop}");
        assert!(state.w[0] < 0.75);
        assert!(state.w[0] > 0.74, "one step past the level: {}", state.w[0]);
        assert_eq!(state.w[1], 1.0);
    }

    #[test]
    fn run_without_stop_marks_data_ended() {
        let raster = SpikeRaster::from_events(2, 100, 1.0, vec![(0, 3), (1, 7)]).unwrap();
        let state = stp_run(&raster, StpParams::default());
        assert!(!state.stopped);
        assert!(state.data_ended);
        assert!(stp_finalize(&state, &raster, 24).is_ok());
    }

    #[test]
    fn finalize_before_stop_is_an_error() {
        let raster = SpikeRaster::new(2, 10, 1.0);
        let state = StpState::new(2, StpParams::default());
        assert!(matches!(
            stp_finalize(&state, &raster, 24),
            Err(SnnError::StpNotStopped)
        ));
    }

    #[test]
    fn all_unit_weights_give_all_ones_mask() {
        let raster = SpikeRaster::from_events(3, 10, 1.0, vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut state = StpState::new(3, StpParams::default());
        state.data_ended = true;
        let mask = stp_finalize(&state, &raster, 24).unwrap();
        assert_eq!(mask, vec![true, true, true]);
    }

    #[test]
    fn single_depressed_train_is_masked_when_block_keeps_enough() {
        // 24-train block: train 0 depressed to 0.5 and carrying few spikes,
        // the rest at 1.0 carrying many.
        let mut events = vec![(0usize, 0u32)];
        for i in 1..24 {
            for t in 0..10 {
                events.push((i, t));
            }
        }
        let raster = SpikeRaster::from_events(24, 10, 1.0, events).unwrap();
        let mut state = StpState::new(24, StpParams::default());
        state.w[0] = 0.5;
        state.stopped = true;
        let mask = stp_finalize(&state, &raster, 24).unwrap();
        assert!(!mask[0]);
        assert!(mask[1..].iter().all(|&m| m));
    }

    #[test]
    fn block_losing_too_many_spikes_is_fully_masked() {
        // Masked trains carry 50% of the block's spikes: below the 60%
        // retention requirement, so the whole block drops.
        let mut events = Vec::new();
        for t in 0..50 {
            events.push((0usize, t as u32)); // depressed train, 50 spikes
            events.push((1usize, t as u32)); // healthy train, 50 spikes
        }
        let raster = SpikeRaster::from_events(24, 50, 1.0, events).unwrap();
        let mut state = StpState::new(24, StpParams::default());
        state.w[0] = 0.5;
        state.stopped = true;
        let mask = stp_finalize(&state, &raster, 24).unwrap();
        assert!(mask.iter().all(|&m| !m), "whole block must be masked");
    }

    #[test]
    fn exact_retain_threshold_of_one_keeps_untouched_trains() {
        // train 0 carries most of the block's spikes so the group rule does
        // not kick in; train 1 has the faintest depression and drops.
        let raster =
            SpikeRaster::from_events(2, 10, 1.0, vec![(0, 2), (0, 5), (0, 8), (1, 5)]).unwrap();
        let params = StpParams {
            retain_threshold: 1.0,
            ..StpParams::default()
        };
        let mut state = StpState::new(2, params);
        state.w[1] = 0.9999; // any depression at all drops the train
        state.stopped = true;
        let mask = stp_finalize(&state, &raster, 24).unwrap();
        assert_eq!(mask, vec![true, false]);
    }

    #[test]
    fn apply_mask_identity_and_annihilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let events: Vec<(usize, u32)> = (0..300)
            .map(|_| (rng.gen_range(0..10), rng.gen_range(0..100)))
            .collect();
        let raster = SpikeRaster::from_events(10, 100, 1.0, events).unwrap();
        let all = apply_mask(&raster, &vec![true; 10]).unwrap();
        assert_eq!(all, raster);
        let none = apply_mask(&raster, &vec![false; 10]).unwrap();
        assert_eq!(none.num_events(), 0);
    }

    #[test]
    fn apply_mask_keeps_exactly_retained_events() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let events: Vec<(usize, u32)> = (0..500)
            .map(|_| (rng.gen_range(0..16), rng.gen_range(0..200)))
            .collect();
        let raster = SpikeRaster::from_events(16, 200, 1.0, events).unwrap();
        let mask: Vec<bool> = (0..16).map(|_| rng.gen_bool(0.5)).collect();
        let masked = apply_mask(&raster, &mask).unwrap();
        let expected: usize = (0..16)
            .filter(|&i| mask[i])
            .map(|i| raster.train(i).len())
            .sum();
        assert_eq!(masked.num_events(), expected);
        // idempotent under re-application
        let again = apply_mask(&masked, &mask).unwrap();
        assert_eq!(again, masked);
    }

    #[test]
    fn mask_file_round_trip() {
        let mask = vec![true, false, true, true, false];
        let dir = std::env::temp_dir().join("frugal_snn_stp");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mask.csv");
        save_mask(&mask, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), mask);
    }
}
