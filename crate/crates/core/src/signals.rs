//! Continuous multichannel input and the transforms applied before encoding:
//! min-max normalization, Butterworth low-pass smoothing, and multiunit
//! envelope extraction (threshold crossings, binning, Gaussian smoothing).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SnnError};

/// Time-indexed matrix of real-valued channels with a common sample period.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    sample_period_ms: f64,
    /// Channel-major data; all channels have equal length.
    data: Vec<Vec<f64>>,
    names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeMode {
    PerChannel,
    Global,
}

impl MultichannelSignal {
    pub fn new(data: Vec<Vec<f64>>, sample_period_ms: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(SnnError::EmptySignal);
        }
        if sample_period_ms <= 0.0 || !sample_period_ms.is_finite() {
            return Err(SnnError::InvalidParameter(format!(
                "sample period must be positive, got {sample_period_ms}"
            )));
        }
        let len = data[0].len();
        if data.iter().any(|ch| ch.len() != len) {
            return Err(SnnError::DimensionMismatch {
                msg: "channels have unequal lengths".into(),
            });
        }
        let names = (0..data.len()).map(|i| format!("ch{i}")).collect();
        Ok(Self {
            sample_period_ms,
            data,
            names,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.data.len());
        self.names = names;
        self
    }

    pub fn channels(&self) -> usize {
        self.data.len()
    }

    pub fn samples_per_channel(&self) -> usize {
        self.data[0].len()
    }

    pub fn sample_period_ms(&self) -> f64 {
        self.sample_period_ms
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.data[i]
    }

    pub fn channel_names(&self) -> &[String] {
        &self.names
    }

    /// Loads the signal CSV format: optional `# sample_period_ms=` comment,
    /// a header row naming the channels (`t` first if a time column is
    /// present), then one row per timestep.
    ///
    /// The sample period is taken from, in order of precedence: the comment,
    /// the time column, the `default_period_ms` argument.
    pub fn load_csv(path: &Path, default_period_ms: Option<f64>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| SnnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut comment_period = None;
        let mut header: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("sample_period_ms=") {
                    let p: f64 = v.trim().parse().map_err(|_| SnnError::BadCell {
                        path: path.to_path_buf(),
                        row: lineno,
                        col: 0,
                        value: v.to_string(),
                    })?;
                    comment_period = Some(p);
                }
                continue;
            }
            match &header {
                None => {
                    header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
                }
                Some(h) => {
                    let cells: Vec<&str> = line.split(',').collect();
                    if cells.len() != h.len() {
                        return Err(SnnError::RaggedRow {
                            path: path.to_path_buf(),
                            row: lineno,
                            got: cells.len(),
                            expected: h.len(),
                        });
                    }
                    let mut row = Vec::with_capacity(cells.len());
                    for (col, cell) in cells.iter().enumerate() {
                        let v: f64 = cell.trim().parse().map_err(|_| SnnError::BadCell {
                            path: path.to_path_buf(),
                            row: lineno,
                            col,
                            value: cell.to_string(),
                        })?;
                        if !v.is_finite() {
                            return Err(SnnError::BadCell {
                                path: path.to_path_buf(),
                                row: lineno,
                                col,
                                value: cell.to_string(),
                            });
                        }
                        row.push(v);
                    }
                    rows.push(row);
                }
            }
        }
        let header = header.ok_or_else(|| SnnError::BadFormat {
            path: path.to_path_buf(),
            msg: "missing header row".into(),
        })?;
        let has_time = header.first().map(String::as_str) == Some("t");
        let first_data_col = usize::from(has_time);
        let channels = header.len() - first_data_col;
        if channels == 0 {
            return Err(SnnError::BadFormat {
                path: path.to_path_buf(),
                msg: "header names zero channels".into(),
            });
        }
        let period = comment_period
            .or_else(|| {
                if has_time && rows.len() >= 2 {
                    Some(rows[1][0] - rows[0][0])
                } else {
                    None
                }
            })
            .or(default_period_ms)
            .ok_or_else(|| SnnError::BadFormat {
                path: path.to_path_buf(),
                msg: "no sample period: add a '# sample_period_ms=' comment, a 't' column, \
                      or pass one explicitly"
                    .into(),
            })?;
        let mut data = vec![Vec::with_capacity(rows.len()); channels];
        for row in &rows {
            for (c, slot) in data.iter_mut().enumerate() {
                slot.push(row[first_data_col + c]);
            }
        }
        let names = header[first_data_col..].to_vec();
        Ok(Self::new(data, period)?.with_names(names))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "# sample_period_ms={}", self.sample_period_ms);
        out.push_str(&self.names.join(","));
        out.push('\n');
        for t in 0..self.samples_per_channel() {
            for (c, ch) in self.data.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", ch[t]);
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|source| SnnError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Affine rescale so min maps to 0 and max to 1, per channel or globally.
/// Constant channels map to all-zeros.
pub fn normalize(signal: &MultichannelSignal, mode: NormalizeMode) -> Result<MultichannelSignal> {
    if signal.samples_per_channel() == 0 {
        return Err(SnnError::EmptySignal);
    }
    let rescale = |ch: &[f64], min: f64, max: f64| -> Vec<f64> {
        let span = max - min;
        if span == 0.0 {
            vec![0.0; ch.len()]
        } else {
            ch.iter().map(|&v| (v - min) / span).collect()
        }
    };
    let data = match mode {
        NormalizeMode::PerChannel => signal
            .data
            .iter()
            .map(|ch| {
                let min = ch.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = ch.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                rescale(ch, min, max)
            })
            .collect(),
        NormalizeMode::Global => {
            let min = signal
                .data
                .iter()
                .flatten()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let max = signal
                .data
                .iter()
                .flatten()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            signal.data.iter().map(|ch| rescale(ch, min, max)).collect()
        }
    };
    Ok(MultichannelSignal {
        sample_period_ms: signal.sample_period_ms,
        data,
        names: signal.names.clone(),
    })
}

/// Forward-pass 2nd-order Butterworth low-pass (bilinear transform, causal).
pub fn lowpass_smooth(
    signal: &MultichannelSignal,
    cutoff_hz: f64,
    order: usize,
) -> Result<MultichannelSignal> {
    let fs_hz = 1000.0 / signal.sample_period_ms;
    let nyquist = fs_hz / 2.0;
    if cutoff_hz <= 0.0 || cutoff_hz >= nyquist {
        return Err(SnnError::CutoffAboveNyquist {
            cutoff_hz,
            nyquist_hz: nyquist,
        });
    }
    if order == 0 || order % 2 != 0 {
        return Err(SnnError::InvalidParameter(format!(
            "filter order must be a positive multiple of 2, got {order}"
        )));
    }
    // Biquad coefficients for one 2nd-order section; higher even orders
    // cascade the same section (adequate for the smoothing role here).
    let omega = (std::f64::consts::PI * cutoff_hz / fs_hz).tan();
    let sqrt2 = std::f64::consts::SQRT_2;
    let d = omega * omega + sqrt2 * omega + 1.0;
    let b0 = omega * omega / d;
    let b1 = 2.0 * b0;
    let b2 = b0;
    let a1 = 2.0 * (omega * omega - 1.0) / d;
    let a2 = (omega * omega - sqrt2 * omega + 1.0) / d;
    let sections = order / 2;

    let data = signal
        .data
        .iter()
        .map(|ch| {
            let mut y = ch.clone();
            for _ in 0..sections {
                let x = y;
                y = vec![0.0; x.len()];
                let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
                for (n, &xn) in x.iter().enumerate() {
                    let yn = b0 * xn + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
                    y[n] = yn;
                    x2 = x1;
                    x1 = xn;
                    y2 = y1;
                    y1 = yn;
                }
            }
            y
        })
        .collect();
    Ok(MultichannelSignal {
        sample_period_ms: signal.sample_period_ms,
        data,
        names: signal.names.clone(),
    })
}

/// Unit-sum Gaussian kernel of odd length `n` and standard deviation `sigma`
/// (in samples).
pub(crate) fn gaussian_kernel(n: usize, sigma: f64) -> Vec<f64> {
    assert!(n % 2 == 1);
    let half = (n / 2) as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Same-length convolution with zero-padded edges.
pub(crate) fn convolve_same(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let half = kernel.len() / 2;
    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &k) in kernel.iter().enumerate() {
            let idx = i as isize + j as isize - half as isize;
            if idx >= 0 && (idx as usize) < n {
                acc += k * x[idx as usize];
            }
        }
        *slot = acc;
    }
    out
}

/// Multiunit activity envelope: threshold at mean +/- `sd_mult` standard
/// deviations, bin the crossing counts, and smooth with a unit-sum Gaussian.
/// The output sample period is the input period times `bin`.
pub fn multiunit_envelope(
    samples: &MultichannelSignal,
    sd_mult: f64,
    bin: usize,
    kernel_n: usize,
    kernel_sigma: f64,
) -> Result<MultichannelSignal> {
    if bin == 0 || bin > samples.samples_per_channel() {
        return Err(SnnError::BinTooLarge {
            bin,
            len: samples.samples_per_channel(),
        });
    }
    if kernel_n % 2 == 0 {
        return Err(SnnError::EvenKernel(kernel_n));
    }
    let kernel = gaussian_kernel(kernel_n, kernel_sigma);
    let data = samples
        .data
        .iter()
        .map(|ch| {
            let n = ch.len() as f64;
            let mean = ch.iter().sum::<f64>() / n;
            let var = ch.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            let thresh = sd_mult * sd;
            let n_bins = ch.len() / bin;
            let mut counts = vec![0.0; n_bins];
            // A zero-variance channel has no crossings by definition.
            if sd > 0.0 {
                for (b, slot) in counts.iter_mut().enumerate() {
                    let mut c = 0usize;
                    for &v in &ch[b * bin..(b + 1) * bin] {
                        if (v - mean).abs() >= thresh {
                            c += 1;
                        }
                    }
                    *slot = c as f64;
                }
            }
            convolve_same(&counts, &kernel)
        })
        .collect();
    Ok(MultichannelSignal {
        sample_period_ms: samples.sample_period_ms * bin as f64,
        data,
        names: samples.names.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(data: Vec<Vec<f64>>) -> MultichannelSignal {
        MultichannelSignal::new(data, 1.0).unwrap()
    }

    #[test]
    fn load_identity_case() {
        let dir = std::env::temp_dir().join("frugal_snn_signals");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("zeros.csv");
        std::fs::write(&path, "# sample_period_ms=1\na,b\n0,0\n0,0\n0,0\n").unwrap();
        let s = MultichannelSignal::load_csv(&path, None).unwrap();
        assert_eq!(s.channels(), 2);
        assert_eq!(s.samples_per_channel(), 3);
        assert!(s.data.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn load_reports_bad_cell_with_position() {
        let dir = std::env::temp_dir().join("frugal_snn_signals");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n3,oops\n").unwrap();
        match MultichannelSignal::load_csv(&path, Some(1.0)) {
            Err(SnnError::BadCell { row, col, value, .. }) => {
                assert_eq!((row, col), (2, 1));
                assert_eq!(value, "oops");
            }
            other => panic!("expected BadCell, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_ragged_row() {
        let dir = std::env::temp_dir().join("frugal_snn_signals");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ragged.csv");
        std::fs::write(&path, "a,b\n1,2\n3\n").unwrap();
        assert!(matches!(
            MultichannelSignal::load_csv(&path, Some(1.0)),
            Err(SnnError::RaggedRow { row: 2, got: 1, expected: 2, .. })
        ));
    }

    #[test]
    fn load_time_column_infers_period() {
        let dir = std::env::temp_dir().join("frugal_snn_signals");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("timed.csv");
        std::fs::write(&path, "t,a\n0,1\n2.5,2\n5,3\n").unwrap();
        let s = MultichannelSignal::load_csv(&path, None).unwrap();
        assert_eq!(s.sample_period_ms(), 2.5);
        assert_eq!(s.channels(), 1);
        assert_eq!(s.channel(0), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn save_load_round_trip_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let channels = rng.gen_range(1..5);
            let len = rng.gen_range(1..40);
            let data: Vec<Vec<f64>> = (0..channels)
                .map(|_| (0..len).map(|_| rng.gen_range(-10.0..10.0)).collect())
                .collect();
            let s = MultichannelSignal::new(data, 0.75).unwrap();
            let dir = std::env::temp_dir().join("frugal_snn_signals");
            std::fs::create_dir_all(&dir).unwrap();
            let path = dir.join("rt.csv");
            s.save_csv(&path).unwrap();
            let back = MultichannelSignal::load_csv(&path, None).unwrap();
            assert_eq!(s, back);
        }
    }

    #[test]
    fn normalize_affine_example() {
        let s = sig(vec![vec![2.0, 4.0, 6.0]]);
        let n = normalize(&s, NormalizeMode::PerChannel).unwrap();
        assert_eq!(n.channel(0), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_channel_maps_to_zero() {
        let s = sig(vec![vec![5.0, 5.0]]);
        let n = normalize(&s, NormalizeMode::PerChannel).unwrap();
        assert_eq!(n.channel(0), &[0.0, 0.0]);
    }

    #[test]
    fn normalize_identity_when_already_unit() {
        let s = sig(vec![vec![0.0, 0.25, 1.0]]);
        let n = normalize(&s, NormalizeMode::PerChannel).unwrap();
        assert_eq!(n.channel(0), s.channel(0));
    }

    #[test]
    fn normalize_global_uses_one_range() {
        let s = sig(vec![vec![0.0, 1.0], vec![1.0, 2.0]]);
        let n = normalize(&s, NormalizeMode::Global).unwrap();
        assert_eq!(n.channel(0), &[0.0, 0.5]);
        assert_eq!(n.channel(1), &[0.5, 1.0]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..50).map(|_| rng.gen_range(-4.0..9.0)).collect())
            .collect();
        let s = sig(data);
        for mode in [NormalizeMode::PerChannel, NormalizeMode::Global] {
            let once = normalize(&s, mode).unwrap();
            let twice = normalize(&once, mode).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn lowpass_dc_gain_is_one() {
        let s = sig(vec![vec![3.5; 4000]]);
        let f = lowpass_smooth(&s, 5.0, 2).unwrap();
        // After the start-up transient the constant passes through unchanged.
        let tail = &f.channel(0)[3000..];
        for &v in tail {
            assert!((v - 3.5).abs() < 1e-6, "steady state {v}");
        }
    }

    #[test]
    fn lowpass_attenuates_above_cutoff() {
        // Analytic 2nd-order Butterworth magnitude at 10x cutoff is
        // 1/sqrt(1 + 10^4) ~ 0.01, so anything under 0.05 passes.
        let fs = 1000.0;
        let fc = 5.0;
        let f_in = 10.0 * fc;
        let n = 20000;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * f_in * i as f64 / fs).sin())
            .collect();
        let s = sig(vec![x]);
        let f = lowpass_smooth(&s, fc, 2).unwrap();
        let steady = &f.channel(0)[n / 2..];
        let amp = steady.iter().cloned().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(amp < 0.05, "steady-state amplitude {amp}");
    }

    #[test]
    fn lowpass_impulse_response_sums_to_dc_gain() {
        let mut x = vec![0.0; 30000];
        x[0] = 1.0;
        let s = sig(vec![x]);
        let f = lowpass_smooth(&s, 5.0, 2).unwrap();
        let sum: f64 = f.channel(0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-3, "impulse response sum {sum}");
    }

    #[test]
    fn lowpass_rejects_cutoff_at_nyquist() {
        let s = sig(vec![vec![0.0; 10]]);
        assert!(lowpass_smooth(&s, 500.0, 2).is_err());
    }

    #[test]
    fn lowpass_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (1.7, -0.6);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(&xi, &yi)| a * xi + b * yi).collect();
        let fx = lowpass_smooth(&sig(vec![x]), 20.0, 2).unwrap();
        let fy = lowpass_smooth(&sig(vec![y]), 20.0, 2).unwrap();
        let fc = lowpass_smooth(&sig(vec![combo]), 20.0, 2).unwrap();
        for t in 0..500 {
            let want = a * fx.channel(0)[t] + b * fy.channel(0)[t];
            assert!((fc.channel(0)[t] - want).abs() < 1e-9);
        }
    }

    #[test]
    fn envelope_all_zero_channel() {
        let s = sig(vec![vec![0.0; 1000]]);
        let e = multiunit_envelope(&s, 3.0, 100, 31, 3.0).unwrap();
        assert_eq!(e.samples_per_channel(), 10);
        assert_eq!(e.sample_period_ms(), 100.0);
        assert!(e.channel(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn envelope_detects_single_outlier() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut ch: Vec<f64> = (0..2000)
            .map(|_| {
                // mild uniform noise, bounded well inside 3 SD
                rng.gen_range(-1.0..1.0)
            })
            .collect();
        ch[1234] = 40.0; // ~10 SD outlier
        let s = sig(vec![ch.clone()]);
        let e = multiunit_envelope(&s, 3.0, 100, 1, 1.0).unwrap();
        // kernel_n = 1 means no smoothing: counts directly visible
        let counts = e.channel(0);
        // independently count crossings
        let n = ch.len() as f64;
        let mean = ch.iter().sum::<f64>() / n;
        let sd = (ch.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let expected: usize = ch.iter().filter(|&&v| (v - mean).abs() >= 3.0 * sd).count();
        assert_eq!(expected, 1, "constructed channel must have one crossing");
        let nonzero: Vec<usize> = counts
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(nonzero, vec![12]);
        assert!(counts[12] >= 1.0);
    }

    #[test]
    fn envelope_conserves_spike_mass() {
        // one crossing far from the edges; a unit-sum kernel keeps the total
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut ch: Vec<f64> = (0..4000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        ch[2000] = 50.0;
        let s = sig(vec![ch]);
        let e = multiunit_envelope(&s, 3.0, 100, 11, 2.0).unwrap();
        let total: f64 = e.channel(0).iter().sum();
        assert!((total - 1.0).abs() < 1e-6, "envelope sum {total}");
    }

    #[test]
    fn envelope_length_is_floor_division() {
        let s = sig(vec![vec![0.0; 257]]);
        let e = multiunit_envelope(&s, 3.0, 10, 5, 1.0).unwrap();
        assert_eq!(e.samples_per_channel(), 25);
    }

    #[test]
    fn envelope_rejects_oversized_bin() {
        let s = sig(vec![vec![0.0; 5]]);
        assert!(matches!(
            multiunit_envelope(&s, 3.0, 6, 5, 1.0),
            Err(SnnError::BinTooLarge { .. })
        ));
    }

    #[test]
    fn transforms_do_not_mutate_input() {
        let s = sig(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let copy = s.clone();
        let _ = normalize(&s, NormalizeMode::PerChannel).unwrap();
        let _ = lowpass_smooth(&s, 10.0, 2).unwrap();
        let _ = multiunit_envelope(&s, 3.0, 2, 1, 1.0).unwrap();
        assert_eq!(s, copy);
    }
}
