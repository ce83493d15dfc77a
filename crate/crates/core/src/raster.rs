//! Binary spike trains over discrete timesteps.
//!
//! Spikes are stored sparsely, one sorted timestep list per train. This keeps
//! long mostly-silent recordings cheap while still answering the two queries
//! the simulation needs: "which trains spike at step t" and "how many spikes
//! does train i have in a window".

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Result, SnnError};

/// A set of binary spike trains sampled on a common clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeRaster {
    trains: usize,
    timesteps: usize,
    timestep_ms: f64,
    /// Per-train sorted, deduplicated spike timesteps.
    spikes: Vec<Vec<u32>>,
}

impl SpikeRaster {
    pub fn new(trains: usize, timesteps: usize, timestep_ms: f64) -> Self {
        assert!(timestep_ms > 0.0, "timestep_ms must be positive");
        Self {
            trains,
            timesteps,
            timestep_ms,
            spikes: vec![Vec::new(); trains],
        }
    }

    /// Builds a raster from (train, timestep) events. Events are sorted and
    /// deduplicated; out-of-bounds events are rejected.
    pub fn from_events(
        trains: usize,
        timesteps: usize,
        timestep_ms: f64,
        events: impl IntoIterator<Item = (usize, u32)>,
    ) -> Result<Self> {
        let mut raster = Self::new(trains, timesteps, timestep_ms);
        for (train, t) in events {
            raster.insert(train, t)?;
        }
        for list in &mut raster.spikes {
            list.sort_unstable();
            list.dedup();
        }
        Ok(raster)
    }

    fn insert(&mut self, train: usize, t: u32) -> Result<()> {
        if train >= self.trains || t as usize >= self.timesteps {
            return Err(SnnError::DimensionMismatch {
                msg: format!(
                    "event ({train}, {t}) outside raster {}x{}",
                    self.trains, self.timesteps
                ),
            });
        }
        self.spikes[train].push(t);
        Ok(())
    }

    /// Appends a spike; caller must push timesteps in non-decreasing order
    /// per train (the simulation loop does).
    pub fn push_spike(&mut self, train: usize, t: u32) {
        debug_assert!(train < self.trains && (t as usize) < self.timesteps);
        if let Some(&last) = self.spikes[train].last() {
            debug_assert!(last <= t);
            if last == t {
                return;
            }
        }
        self.spikes[train].push(t);
    }

    pub fn trains(&self) -> usize {
        self.trains
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn timestep_ms(&self) -> f64 {
        self.timestep_ms
    }

    pub fn train(&self, i: usize) -> &[u32] {
        &self.spikes[i]
    }

    pub fn num_events(&self) -> usize {
        self.spikes.iter().map(Vec::len).sum()
    }

    pub fn is_set(&self, train: usize, t: u32) -> bool {
        self.spikes[train].binary_search(&t).is_ok()
    }

    /// Iterates all events in (train, timestep) order.
    pub fn events(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.spikes
            .iter()
            .enumerate()
            .flat_map(|(i, ts)| ts.iter().map(move |&t| (i, t)))
    }

    /// Number of spikes of `train` with timestep in (lo, hi], where `lo` may
    /// be negative (window reaching before the start of the data).
    pub fn count_in_window(&self, train: usize, lo: i64, hi: i64) -> usize {
        if hi < 0 {
            return 0;
        }
        let ts = &self.spikes[train];
        let lo_idx = ts.partition_point(|&t| (t as i64) <= lo);
        let hi_idx = ts.partition_point(|&t| (t as i64) <= hi);
        hi_idx - lo_idx
    }

    pub fn any_in_window(&self, train: usize, lo: i64, hi: i64) -> bool {
        self.count_in_window(train, lo, hi) > 0
    }

    /// Transposed view: for each timestep, the sorted list of spiking trains.
    pub fn columns(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::new(); self.timesteps];
        for (train, ts) in self.spikes.iter().enumerate() {
            for &t in ts {
                cols[t as usize].push(train as u32);
            }
        }
        cols
    }

    /// Dense matrix view, train-major. Intended for tests and small rasters.
    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        let mut dense = vec![vec![false; self.timesteps]; self.trains];
        for (train, t) in self.events() {
            dense[train][t as usize] = true;
        }
        dense
    }

    /// Extracts the slice [start, start+len) of every train, rebased to
    /// timestep 0.
    pub fn slice_steps(&self, start: usize, len: usize) -> SpikeRaster {
        let mut out = SpikeRaster::new(self.trains, len, self.timestep_ms);
        let lo = start as u32;
        let hi = (start + len) as u32;
        for (train, ts) in self.spikes.iter().enumerate() {
            let a = ts.partition_point(|&t| t < lo);
            let b = ts.partition_point(|&t| t < hi);
            out.spikes[train] = ts[a..b].iter().map(|&t| t - lo).collect();
        }
        out
    }

    /// Writes the event CSV format: dimension comments, a `t,train` header,
    /// then one row per event sorted by time then train.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "# timestep_ms={}", self.timestep_ms);
        let _ = writeln!(out, "# trains={}", self.trains);
        let _ = writeln!(out, "# timesteps={}", self.timesteps);
        out.push_str("t,train\n");
        let mut events: Vec<(u32, usize)> = self.events().map(|(i, t)| (t, i)).collect();
        events.sort_unstable();
        for (t, train) in events {
            let _ = writeln!(out, "{t},{train}");
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
        let mut timestep_ms = None;
        let mut trains = None;
        let mut timesteps = None;
        let mut events = Vec::new();
        let mut saw_header = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("timestep_ms=") {
                    timestep_ms = Some(parse_cell(v, path, lineno, 0)?);
                } else if let Some(v) = rest.strip_prefix("trains=") {
                    trains = Some(parse_cell(v, path, lineno, 0)? as usize);
                } else if let Some(v) = rest.strip_prefix("timesteps=") {
                    timesteps = Some(parse_cell(v, path, lineno, 0)? as usize);
                }
                continue;
            }
            if !saw_header {
                if line != "t,train" {
                    return Err(SnnError::BadFormat {
                        path: path.to_path_buf(),
                        msg: format!("expected header 't,train', got {line:?}"),
                    });
                }
                saw_header = true;
                continue;
            }
            let mut parts = line.split(',');
            let t = parse_cell(parts.next().unwrap_or(""), path, lineno, 0)? as u32;
            let train = parse_cell(parts.next().unwrap_or(""), path, lineno, 1)? as usize;
            if parts.next().is_some() {
                return Err(SnnError::BadFormat {
                    path: path.to_path_buf(),
                    msg: format!("row {lineno}: expected two columns"),
                });
            }
            events.push((train, t));
        }
        let (Some(timestep_ms), Some(trains), Some(timesteps)) = (timestep_ms, trains, timesteps)
        else {
            return Err(SnnError::BadFormat {
                path: path.to_path_buf(),
                msg: "missing one of the # timestep_ms/trains/timesteps comments".into(),
            });
        };
        Self::from_events(trains, timesteps, timestep_ms, events)
    }
}

fn parse_cell(s: &str, path: &Path, row: usize, col: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| SnnError::BadCell {
        path: path.to_path_buf(),
        row,
        col,
        value: s.to_string(),
    })?;
    if !v.is_finite() {
        return Err(SnnError::BadCell {
            path: path.to_path_buf(),
            row,
            col,
            value: s.to_string(),
        });
    }
    Ok(v)
}
