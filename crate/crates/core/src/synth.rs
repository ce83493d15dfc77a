//! Generators for the benchmark datasets: disjoint and nested train-band
//! patterns, receptive-field signature patterns (the speech-like case),
//! propagating-wave envelope signals (the neural-like case), plus jitter
//! and background-noise corruption.
//!
//! Every generator is a pure function of its parameters and seed, and every
//! pattern occurrence plants one ground-truth spike at its final active
//! timestep.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, SnnError};
use crate::raster::SpikeRaster;
use crate::signals::MultichannelSignal;

/// One pattern occurrence: [start, end] inclusive, in timesteps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occurrence {
    pub pattern: usize,
    pub start: u32,
    pub end: u32,
}

/// Truth raster (one train per pattern, a spike at each occurrence end)
/// plus the occurrence table it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub raster: SpikeRaster,
    pub occurrences: Vec<Occurrence>,
}

fn steps(ms: f64, timestep_ms: f64) -> usize {
    (ms / timestep_ms).round().max(1.0) as usize
}

/// Shared layout machinery: repeats rounds of all patterns in shuffled
/// order, each preceded by a silent gap, with a trailing gap at the end.
/// Returns (total timesteps, occurrences).
fn lay_out(
    n_patterns: usize,
    duration_steps: usize,
    gap_steps: usize,
    lead_steps: usize,
    repeats: usize,
    rng: &mut ChaCha8Rng,
) -> (usize, Vec<Occurrence>) {
    let mut occurrences = Vec::with_capacity(n_patterns * repeats);
    let mut t = lead_steps;
    for _ in 0..repeats {
        let mut order: Vec<usize> = (0..n_patterns).collect();
        order.shuffle(rng);
        for p in order {
            t += gap_steps;
            occurrences.push(Occurrence {
                pattern: p,
                start: t as u32,
                end: (t + duration_steps - 1) as u32,
            });
            t += duration_steps;
        }
    }
    t += gap_steps;
    (t, occurrences)
}

fn truth_from(occurrences: &[Occurrence], n_patterns: usize, timesteps: usize, timestep_ms: f64) -> GroundTruth {
    let raster = SpikeRaster::from_events(
        n_patterns,
        timesteps,
        timestep_ms,
        occurrences.iter().map(|o| (o.pattern, o.end)),
    )
    .expect("occurrences are in bounds by construction");
    GroundTruth {
        raster,
        occurrences: occurrences.to_vec(),
    }
}

#[derive(Debug, Clone)]
pub struct DisjointParams {
    pub n_patterns: usize,
    pub trains: usize,
    pub duration_ms: f64,
    pub gap_ms: f64,
    /// Extra silence before the first occurrence, on top of the per-pattern gap.
    pub lead_ms: f64,
    pub repeats: usize,
    pub timestep_ms: f64,
    /// Per train-timestep spike probability inside a band; None = solid.
    pub density: Option<f64>,
    pub seed: u64,
}

impl Default for DisjointParams {
    fn default() -> Self {
        Self {
            n_patterns: 4,
            trains: 240,
            duration_ms: 500.0,
            gap_ms: 500.0,
            lead_ms: 0.0,
            repeats: 1,
            timestep_ms: 1.0,
            density: None,
            seed: 0,
        }
    }
}

/// Patterns on disjoint train bands (an equal partition of the trains).
pub fn make_disjoint_set(p: &DisjointParams) -> Result<(SpikeRaster, GroundTruth)> {
    let band = p.trains / p.n_patterns;
    if band == 0 {
        return Err(SnnError::InvalidParameter(format!(
            "{} patterns do not fit in {} trains",
            p.n_patterns, p.trains
        )));
    }
    let bands: Vec<(usize, usize)> = (0..p.n_patterns)
        .map(|i| (i * band, (i + 1) * band))
        .collect();
    make_band_set(p, &bands)
}

#[derive(Debug, Clone)]
pub struct NestedParams {
    pub trains: usize,
    /// Width of the two enclosing bands.
    pub big_band: usize,
    /// Width of the two enclosed bands (strict subsets of the big ones).
    pub small_band: usize,
    pub duration_ms: f64,
    pub gap_ms: f64,
    pub lead_ms: f64,
    pub repeats: usize,
    pub timestep_ms: f64,
    pub seed: u64,
}

impl Default for NestedParams {
    fn default() -> Self {
        Self {
            trains: 240,
            big_band: 60,
            small_band: 10,
            duration_ms: 500.0,
            gap_ms: 500.0,
            lead_ms: 0.0,
            repeats: 2,
            timestep_ms: 1.0,
            seed: 0,
        }
    }
}

/// Four patterns where pattern 1 sits strictly inside pattern 0 and
/// pattern 3 strictly inside pattern 2, all with equal durations.
pub fn make_nested_set(p: &NestedParams) -> Result<(SpikeRaster, GroundTruth)> {
    if p.small_band >= p.big_band || 2 * p.big_band > p.trains {
        return Err(SnnError::InvalidParameter(
            "nested bands do not fit: need small < big and 2*big <= trains".into(),
        ));
    }
    let inset = (p.big_band - p.small_band) / 2;
    let second = p.trains / 2;
    let bands = vec![
        (0, p.big_band),
        (inset, inset + p.small_band),
        (second, second + p.big_band),
        (second + inset, second + inset + p.small_band),
    ];
    let dp = DisjointParams {
        n_patterns: 4,
        trains: p.trains,
        duration_ms: p.duration_ms,
        gap_ms: p.gap_ms,
        lead_ms: p.lead_ms,
        repeats: p.repeats,
        timestep_ms: p.timestep_ms,
        density: None,
        seed: p.seed,
    };
    make_band_set(&dp, &bands)
}

fn make_band_set(
    p: &DisjointParams,
    bands: &[(usize, usize)],
) -> Result<(SpikeRaster, GroundTruth)> {
    if bands.iter().any(|&(_, hi)| hi > p.trains) {
        return Err(SnnError::InvalidParameter(
            "pattern bands exceed the train count".into(),
        ));
    }
    let duration = steps(p.duration_ms, p.timestep_ms);
    let gap = steps(p.gap_ms, p.timestep_ms);
    let lead = if p.lead_ms > 0.0 {
        steps(p.lead_ms, p.timestep_ms)
    } else {
        0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (timesteps, occurrences) = lay_out(bands.len(), duration, gap, lead, p.repeats, &mut rng);
    let mut events = Vec::new();
    for occ in &occurrences {
        let (lo, hi) = bands[occ.pattern];
        for train in lo..hi {
            for t in occ.start..=occ.end {
                match p.density {
                    None => events.push((train, t)),
                    Some(d) => {
                        if rng.gen_bool(d) {
                            events.push((train, t));
                        }
                    }
                }
            }
        }
    }
    let raster = SpikeRaster::from_events(p.trains, timesteps, p.timestep_ms, events)?;
    let truth = truth_from(&occurrences, bands.len(), timesteps, p.timestep_ms);
    Ok((raster, truth))
}

/// Parameters for receptive-field signature patterns: each pattern assigns
/// every channel one field, and an occurrence drives that field's five-train
/// neighbourhood at full density, mimicking encoded quasi-stationary
/// signals such as held vowels.
#[derive(Debug, Clone)]
pub struct FieldPatternParams {
    pub channels: usize,
    pub trains_per_channel: usize,
    pub n_patterns: usize,
    /// Field indices are drawn from this inclusive range (kept above the
    /// silence floor).
    pub field_range: (usize, usize),
    pub spikes_per_step: usize,
    pub duration_ms: f64,
    pub gap_ms: f64,
    pub lead_ms: f64,
    pub repeats: usize,
    pub timestep_ms: f64,
    pub seed: u64,
}

impl Default for FieldPatternParams {
    fn default() -> Self {
        Self {
            channels: 24,
            trains_per_channel: 24,
            n_patterns: 11,
            field_range: (3, 19),
            spikes_per_step: 5,
            duration_ms: 500.0,
            gap_ms: 500.0,
            lead_ms: 7000.0,
            repeats: 1,
            timestep_ms: 1.0,
            seed: 0,
        }
    }
}

pub fn make_field_pattern_set(p: &FieldPatternParams) -> Result<(SpikeRaster, GroundTruth)> {
    let trains = p.channels * p.trains_per_channel;
    if p.field_range.1 + p.spikes_per_step > p.trains_per_channel {
        return Err(SnnError::InvalidParameter(
            "field range plus neighbourhood exceeds the channel block".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    // Per pattern, per channel: the base field of its five-train signature.
    let signatures: Vec<Vec<usize>> = (0..p.n_patterns)
        .map(|_| {
            (0..p.channels)
                .map(|_| rng.gen_range(p.field_range.0..=p.field_range.1))
                .collect()
        })
        .collect();
    let duration = steps(p.duration_ms, p.timestep_ms);
    let gap = steps(p.gap_ms, p.timestep_ms);
    let lead = steps(p.lead_ms, p.timestep_ms);
    let (timesteps, occurrences) = lay_out(p.n_patterns, duration, gap, lead, p.repeats, &mut rng);
    let mut events = Vec::new();
    for occ in &occurrences {
        for (c, &field) in signatures[occ.pattern].iter().enumerate() {
            let base = c * p.trains_per_channel + field;
            for k in 0..p.spikes_per_step {
                for t in occ.start..=occ.end {
                    events.push((base + k, t));
                }
            }
        }
    }
    let raster = SpikeRaster::from_events(trains, timesteps, p.timestep_ms, events)?;
    let truth = truth_from(&occurrences, p.n_patterns, timesteps, p.timestep_ms);
    Ok((raster, truth))
}

/// Drops each spike with `drop_prob` and shifts the survivors by a rounded
/// Gaussian number of steps, clamped in bounds. Deterministic per seed.
pub fn add_jitter(
    raster: &SpikeRaster,
    drop_prob: f64,
    shift_sd: f64,
    seed: u64,
) -> Result<SpikeRaster> {
    if !(0.0..1.0).contains(&drop_prob) {
        return Err(SnnError::InvalidParameter(format!(
            "drop_prob must be in [0, 1), got {drop_prob}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = if shift_sd > 0.0 {
        Some(Normal::new(0.0, shift_sd).map_err(|e| SnnError::InvalidParameter(e.to_string()))?)
    } else {
        None
    };
    let max_t = raster.timesteps() as i64 - 1;
    let mut events = Vec::with_capacity(raster.num_events());
    for (train, t) in raster.events() {
        if drop_prob > 0.0 && rng.gen_bool(drop_prob) {
            continue;
        }
        let shifted = match &normal {
            Some(n) => (t as i64 + n.sample(&mut rng).round() as i64).clamp(0, max_t),
            None => t as i64,
        };
        events.push((train, shifted as u32));
    }
    SpikeRaster::from_events(
        raster.trains(),
        raster.timesteps(),
        raster.timestep_ms(),
        events,
    )
}

/// Adds uniform background-noise spikes at the given per-cell density on the
/// trains that carry no signal (trains with zero spikes), across the whole
/// recording.
pub fn add_background_noise(raster: &SpikeRaster, density: f64, seed: u64) -> Result<SpikeRaster> {
    if !(0.0..1.0).contains(&density) {
        return Err(SnnError::InvalidParameter(format!(
            "noise density must be in [0, 1), got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events: Vec<(usize, u32)> = raster.events().collect();
    for train in 0..raster.trains() {
        if !raster.train(train).is_empty() {
            continue;
        }
        for t in 0..raster.timesteps() {
            if rng.gen_bool(density) {
                events.push((train, t as u32));
            }
        }
    }
    SpikeRaster::from_events(
        raster.trains(),
        raster.timesteps(),
        raster.timestep_ms(),
        events,
    )
}

/// Parameters for the propagating-wave envelope generator. The short
/// pattern sweeps caudo-rostrally across the lower channel span; the long
/// one sweeps rostro-caudally across all channels. Channel activity is a
/// plateau with Gaussian rise and fall flanks, onset-staggered along the
/// sweep direction.
#[derive(Debug, Clone)]
pub struct PropagatingParams {
    pub channels: usize,
    /// [lo, hi) channel range of the short pattern (the caudal block).
    pub short_span: (usize, usize),
    /// [lo, hi) channel range of the long pattern.
    pub long_span: (usize, usize),
    pub n_short: usize,
    pub n_long: usize,
    pub sample_period_ms: f64,
    /// Standard deviation of the Gaussian rise/fall flanks.
    pub flank_sigma_ms: f64,
    pub short_plateau_ms: f64,
    pub long_plateau_ms: f64,
    /// Onset spread across the sweep.
    pub short_stagger_ms: f64,
    pub long_stagger_ms: f64,
    pub gap_before_short_ms: f64,
    pub gap_before_long_ms: f64,
    pub lead_ms: f64,
    pub tail_ms: f64,
    pub short_amplitude: f64,
    pub long_amplitude: f64,
    pub seed: u64,
}

impl Default for PropagatingParams {
    fn default() -> Self {
        Self {
            channels: 30,
            short_span: (12, 30),
            long_span: (0, 30),
            n_short: 3,
            n_long: 9,
            sample_period_ms: 10.0,
            flank_sigma_ms: 300.0,
            short_plateau_ms: 4800.0,
            long_plateau_ms: 9000.0,
            short_stagger_ms: 600.0,
            long_stagger_ms: 1000.0,
            gap_before_short_ms: 2500.0,
            gap_before_long_ms: 1000.0,
            lead_ms: 1500.0,
            tail_ms: 800.0,
            short_amplitude: 1.0,
            long_amplitude: 0.55,
            seed: 0,
        }
    }
}

pub const SHORT_PATTERN: usize = 0;
pub const LONG_PATTERN: usize = 1;

/// Bump profile: Gaussian rise over 3 sigma starting at `dt = 0`, then a
/// plateau that holds until `end`. The burst recruits channels one by one
/// but collapses together, so `end` is shared by the whole occurrence.
fn bump_value(dt: f64, sigma: f64, end: f64) -> f64 {
    let flank = 3.0 * sigma;
    if dt < 0.0 || dt > end {
        0.0
    } else if dt < flank {
        let d = dt - flank;
        (-(d * d) / (2.0 * sigma * sigma)).exp()
    } else {
        1.0
    }
}

pub fn make_propagating_set(p: &PropagatingParams) -> Result<(MultichannelSignal, GroundTruth)> {
    if p.short_span.1 > p.channels
        || p.long_span.1 > p.channels
        || p.short_span.0 >= p.short_span.1
        || p.long_span.0 >= p.long_span.1
    {
        return Err(SnnError::InvalidParameter(
            "pattern spans must be non-empty and inside the channel range".into(),
        ));
    }
    let dt = p.sample_period_ms;
    let sigma = p.flank_sigma_ms / dt;
    let flank = 3.0 * sigma;
    let stagger_s = p.short_stagger_ms / dt;
    let stagger_l = p.long_stagger_ms / dt;
    // the last-recruited channel still gets its full rise and minimum plateau
    let d_short = (stagger_s + flank + p.short_plateau_ms / dt).ceil() as usize;
    let d_long = (stagger_l + flank + p.long_plateau_ms / dt).ceil() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut kinds = vec![SHORT_PATTERN; p.n_short];
    kinds.extend(vec![LONG_PATTERN; p.n_long]);
    kinds.shuffle(&mut rng);

    let mut occurrences = Vec::with_capacity(kinds.len());
    let mut t = steps(p.lead_ms, dt);
    for &kind in &kinds {
        let (gap_ms, dur) = if kind == SHORT_PATTERN {
            (p.gap_before_short_ms, d_short)
        } else {
            (p.gap_before_long_ms, d_long)
        };
        t += steps(gap_ms, dt);
        occurrences.push(Occurrence {
            pattern: kind,
            start: t as u32,
            end: (t + dur - 1) as u32,
        });
        t += dur;
    }
    let timesteps = t + steps(p.tail_ms, dt);

    let mut data = vec![vec![0.0f64; timesteps]; p.channels];
    for occ in &occurrences {
        let (span, stagger, amp, caudo_rostral) = if occ.pattern == SHORT_PATTERN {
            (p.short_span, stagger_s, p.short_amplitude, true)
        } else {
            (p.long_span, stagger_l, p.long_amplitude, false)
        };
        let n_span = span.1 - span.0;
        let occ_end = occ.end as f64;
        for (idx, c) in (span.0..span.1).enumerate() {
            // sweep position: 0 at the leading edge of the wave
            let pos = if n_span == 1 {
                0.0
            } else if caudo_rostral {
                // starts at the highest (most caudal) channel
                (n_span - 1 - idx) as f64 / (n_span - 1) as f64
            } else {
                // rostro-caudal: starts at the lowest channel index
                idx as f64 / (n_span - 1) as f64
            };
            let onset = occ.start as f64 + pos * stagger;
            let lo = onset.floor().max(0.0) as usize;
            let hi = (occ_end as usize).min(timesteps - 1);
            for step in lo..=hi {
                let raw = bump_value(step as f64 - onset, sigma, occ_end - onset);
                // suppress the sub-field fringe so support is clean
                let v = if raw < 0.045 { 0.0 } else { amp * raw };
                if v > data[c][step] {
                    data[c][step] = v;
                }
            }
        }
    }

    let signal = MultichannelSignal::new(data, dt)?;
    let truth = truth_from(&occurrences, 2, timesteps, dt);
    Ok((signal, truth))
}

/// First timestep with nonzero energy on each channel during an occurrence;
/// None for silent channels. Used to check sweep direction.
pub fn channel_onsets(signal: &MultichannelSignal, occ: &Occurrence) -> Vec<Option<u32>> {
    (0..signal.channels())
        .map(|c| {
            (occ.start..=occ.end).find(|&t| signal.channel(c)[t as usize] > 0.0)
        })
        .collect()
}
