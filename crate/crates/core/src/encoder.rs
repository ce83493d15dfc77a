//! Receptive-field spike encoding.
//!
//! Each channel value in [0, 1] selects one of `fields` quantization bins;
//! the bin's train plus `halo` neighbours on each side fire, giving a fixed
//! five-spike code per channel per timestep (with the defaults). Field
//! centers sit `halo` trains into the block so the neighbourhood never
//! truncates: a channel occupies `fields + 2 * halo` trains.

use crate::error::{Result, SnnError};
use crate::raster::SpikeRaster;
use crate::signals::MultichannelSignal;

pub const DEFAULT_FIELDS: usize = 20;
pub const DEFAULT_HALO: usize = 2;

/// Trains per channel for a given geometry.
pub fn block_size(fields: usize, halo: usize) -> usize {
    fields + 2 * halo
}

/// Field index for a value in [0, 1]: half-open bins with the top value
/// clamped into the last field.
pub fn field_index(value: f64, fields: usize) -> usize {
    ((value * fields as f64).floor() as usize).min(fields - 1)
}

/// Encodes every channel into `fields + 2*halo` spike trains, channel blocks
/// concatenated in channel order. One raster timestep per input sample.
pub fn encode(signal: &MultichannelSignal, fields: usize, halo: usize) -> Result<SpikeRaster> {
    let block = block_size(fields, halo);
    let trains = signal.channels() * block;
    let steps = signal.samples_per_channel();
    let mut raster = SpikeRaster::new(trains, steps, signal.sample_period_ms());
    for c in 0..signal.channels() {
        let base = c * block;
        for (t, &v) in signal.channel(c).iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(SnnError::ValueOutOfRange {
                    value: v,
                    channel: c,
                    sample: t,
                });
            }
            let k = field_index(v, fields);
            for offset in 0..=2 * halo {
                raster.push_spike(base + k + offset, t as u32);
            }
        }
    }
    Ok(raster)
}
