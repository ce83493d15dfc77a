//! Matching output neurons to ground-truth patterns and scoring them.
//!
//! Both rasters are smoothed with a short Gaussian, each truth train is
//! paired with the output train of highest cross-correlation (lags bounded
//! by the coincidence window, duplicates allowed), and hits are counted by
//! greedy time-ordered one-to-one matching inside the window:
//! F = 2H / (T + O).

use std::fmt::Write as _;

use crate::error::{Result, SnnError};
use crate::raster::SpikeRaster;
use crate::signals::{convolve_same, gaussian_kernel};

/// Evaluation result: the truth -> output pairing, per-pair and global
/// f-scores, and the confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub pairs: Vec<usize>,
    pub f_per_pair: Vec<f64>,
    pub f_global: f64,
    /// confusion[truth][output] = one-to-one hit count
    pub confusion: Vec<Vec<usize>>,
    pub coincidence_window_ms: f64,
}

/// Convolves every train with a unit-sum Gaussian (same-length output,
/// zero-padded edges).
pub fn smooth_raster(raster: &SpikeRaster, n: usize, sigma: f64) -> Result<Vec<Vec<f64>>> {
    if n % 2 == 0 {
        return Err(SnnError::EvenKernel(n));
    }
    let kernel = gaussian_kernel(n, sigma);
    let mut out = Vec::with_capacity(raster.trains());
    for i in 0..raster.trains() {
        let mut dense = vec![0.0; raster.timesteps()];
        for &t in raster.train(i) {
            dense[t as usize] = 1.0;
        }
        out.push(convolve_same(&dense, &kernel));
    }
    Ok(out)
}

fn cross_correlation_max(a: &[f64], b: &[f64], max_lag: i64) -> f64 {
    let n = a.len() as i64;
    // smoothed spike trains are sparse; only a's nonzero support contributes
    let nz: Vec<i64> = (0..n).filter(|&t| a[t as usize] != 0.0).collect();
    let mut best = f64::NEG_INFINITY;
    for lag in -max_lag..=max_lag {
        let mut acc = 0.0;
        for &t in &nz {
            let u = t + lag;
            if u >= 0 && u < n {
                acc += a[t as usize] * b[u as usize];
            }
        }
        if acc > best {
            best = acc;
        }
    }
    best
}

pub fn window_steps(window_ms: f64, timestep_ms: f64) -> i64 {
    (window_ms / timestep_ms).round().max(0.0) as i64
}

/// For each truth train, the output train with the highest lag-bounded
/// cross-correlation of the smoothed trains. Duplicates are permitted; ties
/// go to the lowest output index.
pub fn match_pairs(
    truth: &SpikeRaster,
    output: &SpikeRaster,
    window_ms: f64,
) -> Result<Vec<usize>> {
    if truth.timesteps() != output.timesteps() {
        return Err(SnnError::TimestepMismatch {
            a: truth.timesteps(),
            b: output.timesteps(),
        });
    }
    let truth_smooth = smooth_raster(truth, 31, 3.0)?;
    let output_smooth = smooth_raster(output, 31, 3.0)?;
    let max_lag = window_steps(window_ms, truth.timestep_ms());
    let mut pairs = Vec::with_capacity(truth.trains());
    for ts in &truth_smooth {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (j, os) in output_smooth.iter().enumerate() {
            let corr = cross_correlation_max(ts, os, max_lag);
            if corr > best.1 {
                best = (j, corr);
            }
        }
        pairs.push(best.0);
    }
    Ok(pairs)
}

/// Greedy time-ordered one-to-one matching: hits are pairs within
/// `window_steps` of each other, each spike used at most once.
pub fn greedy_hits(truth: &[u32], output: &[u32], window_steps: i64) -> usize {
    let mut hits = 0;
    let (mut i, mut j) = (0, 0);
    while i < truth.len() && j < output.len() {
        let dt = truth[i] as i64 - output[j] as i64;
        if dt.abs() <= window_steps {
            hits += 1;
            i += 1;
            j += 1;
        } else if dt > 0 {
            j += 1;
        } else {
            i += 1;
        }
    }
    hits
}

/// F = 2H / (T + O); 1 when both trains are empty.
pub fn f_score(truth: &[u32], output: &[u32], window_steps: i64) -> f64 {
    if truth.is_empty() && output.is_empty() {
        return 1.0;
    }
    let h = greedy_hits(truth, output, window_steps);
    2.0 * h as f64 / (truth.len() + output.len()) as f64
}

/// Global F over the pairing: H sums per-pair hits, T all truth spikes,
/// O all output spikes of every output train (paired or not).
pub fn global_f(
    truth: &SpikeRaster,
    output: &SpikeRaster,
    pairs: &[usize],
    window_ms: f64,
) -> f64 {
    let w = window_steps(window_ms, truth.timestep_ms());
    let h: usize = pairs
        .iter()
        .enumerate()
        .map(|(i, &j)| greedy_hits(truth.train(i), output.train(j), w))
        .sum();
    let t = truth.num_events();
    let o = output.num_events();
    if t + o == 0 {
        return 1.0;
    }
    2.0 * h as f64 / (t + o) as f64
}

/// Hit counts for every truth/output train combination.
pub fn confusion_matrix(
    truth: &SpikeRaster,
    output: &SpikeRaster,
    window_ms: f64,
) -> Vec<Vec<usize>> {
    let w = window_steps(window_ms, truth.timestep_ms());
    (0..truth.trains())
        .map(|i| {
            (0..output.trains())
                .map(|j| greedy_hits(truth.train(i), output.train(j), w))
                .collect()
        })
        .collect()
}

/// Full evaluation of one output raster against the truth.
pub fn evaluate(truth: &SpikeRaster, output: &SpikeRaster, window_ms: f64) -> Result<MatchReport> {
    let pairs = match_pairs(truth, output, window_ms)?;
    let w = window_steps(window_ms, truth.timestep_ms());
    let f_per_pair: Vec<f64> = pairs
        .iter()
        .enumerate()
        .map(|(i, &j)| f_score(truth.train(i), output.train(j), w))
        .collect();
    let f_global = global_f(truth, output, &pairs, window_ms);
    let confusion = confusion_matrix(truth, output, window_ms);
    Ok(MatchReport {
        pairs,
        f_per_pair,
        f_global,
        confusion,
        coincidence_window_ms: window_ms,
    })
}

/// Renders the machine-readable metrics text: global score, optional
/// per-epoch series, the pairing, and the confusion matrix.
pub fn render_metrics(report: &MatchReport, per_epoch: &[(usize, f64, usize, usize)]) -> String {
    let mut out = String::from("# metrics v1\n");
    let _ = writeln!(out, "coincidence_window_ms={}", report.coincidence_window_ms);
    let _ = writeln!(out, "f_global={}", report.f_global);
    if !per_epoch.is_empty() {
        out.push_str("[per_epoch]\n");
        out.push_str("epoch,f_global,output_spikes,distinct_neurons\n");
        for (e, f, spikes, distinct) in per_epoch {
            let _ = writeln!(out, "{e},{f},{spikes},{distinct}");
        }
    }
    out.push_str("[pairs]\n");
    out.push_str("truth,output,f\n");
    for (i, (&j, f)) in report.pairs.iter().zip(&report.f_per_pair).enumerate() {
        let _ = writeln!(out, "{i},{j},{f}");
    }
    out.push_str("[confusion]\n");
    for row in &report.confusion {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
