//! The three published parameter regimes bundled as named presets.

use std::fmt;
use std::str::FromStr;

use crate::lts::LtsParams;
use crate::plasticity::{IpParams, StdpParams};
use crate::stp::StpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Artificial,
    Vowel,
    Neural,
}

impl Preset {
    pub fn lts(&self) -> LtsParams {
        match self {
            Preset::Artificial => LtsParams::artificial(),
            Preset::Vowel => LtsParams::vowel(),
            Preset::Neural => LtsParams::neural(),
        }
    }

    pub fn stdp(&self) -> StdpParams {
        match self {
            Preset::Artificial => StdpParams::artificial(),
            Preset::Vowel => StdpParams::vowel(),
            Preset::Neural => StdpParams::neural(),
        }
    }

    pub fn ip(&self) -> IpParams {
        match self {
            Preset::Artificial => IpParams::artificial(),
            Preset::Vowel => IpParams::vowel(),
            Preset::Neural => IpParams::neural(),
        }
    }

    /// STP constants; only the retain threshold differs between regimes.
    pub fn stp(&self) -> StpParams {
        let retain_threshold = match self {
            Preset::Artificial | Preset::Vowel => 0.92,
            Preset::Neural => 1.0,
        };
        StpParams {
            retain_threshold,
            ..StpParams::default()
        }
    }

    /// Artificial inputs arrive as clean rasters; the STP pre-filter is only
    /// on by default for encoded real-signal regimes.
    pub fn stp_enabled_by_default(&self) -> bool {
        !matches!(self, Preset::Artificial)
    }

    /// Coincidence window for spike-train matching.
    pub fn coincidence_window_ms(&self) -> f64 {
        match self {
            Preset::Artificial | Preset::Vowel => 400.0,
            Preset::Neural => 2500.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Artificial => "artificial",
            Preset::Vowel => "vowel",
            Preset::Neural => "neural",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "artificial" => Ok(Preset::Artificial),
            "vowel" => Ok(Preset::Vowel),
            "neural" => Ok(Preset::Neural),
            other => Err(format!(
                "unknown preset {other:?} (expected artificial, vowel, or neural)"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values_are_pinned() {
        let a = Preset::Artificial;
        assert_eq!(a.lts().tau_m_ms, 15.0);
        assert_eq!(a.lts().epsilon, 0.001);
        assert_eq!(a.lts().alpha_n, -200.0);
        assert_eq!(a.lts().alpha_p, -10.0);
        assert_eq!(a.lts().g, 100.0);
        assert_eq!(a.stdp().t_stdp_ms, 500.0);
        assert_eq!(a.ip().f_th_post, 0.01);
        assert_eq!(a.ip().dth_pair, 0.001);
        assert_eq!(a.coincidence_window_ms(), 400.0);

        let v = Preset::Vowel;
        assert_eq!(v.lts().epsilon, 0.01);
        assert_eq!(v.lts().tau_m_ms, 15.0);
        assert_eq!(v.stdp().t_stdp_ms, 500.0);
        assert_eq!(v.ip().dth_pair, 0.006);
        assert_eq!(v.stp().retain_threshold, 0.92);

        let n = Preset::Neural;
        assert_eq!(n.lts().tau_m_ms, 50.0);
        assert_eq!(n.lts().epsilon, 0.001);
        assert_eq!(n.stdp().t_stdp_ms, 8000.0);
        assert_eq!(n.ip().f_th_post, 0.5);
        assert_eq!(n.ip().dth_pair, 0.05);
        assert_eq!(n.stp().retain_threshold, 1.0);
        assert_eq!(n.coincidence_window_ms(), 2500.0);
    }

    #[test]
    fn names_round_trip() {
        for p in [Preset::Artificial, Preset::Vowel, Preset::Neural] {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("bogus".parse::<Preset>().is_err());
    }
}
