//! Physical-layer model: path loss, Rayleigh fading and the SINR-threshold
//! success probability for a link in the presence of concurrent
//! transmitters.
//!
//! All powers are linear milliwatts and all thresholds linear ratios. The
//! dB helpers exist for configuration loading only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest secondary population accepted by [`TopologySpec::validate`].
pub const MAX_SECONDARY: usize = 10_000;

/// Converts a value in dB (or dBm) to a linear ratio (or mW).
pub fn db_to_linear(value_db: f64) -> f64 {
    10f64.powf(value_db / 10.0)
}

/// Inverse of [`db_to_linear`]; `0` maps to negative infinity.
pub fn linear_to_db(value: f64) -> f64 {
    10.0 * value.log10()
}

/// One transmitter as seen from one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Transmit power in mW.
    pub tx_power: f64,
    /// Transmitter to receiver distance in meters.
    pub distance: f64,
    pub path_loss_exponent: f64,
    /// Rayleigh fading parameter `v`; `1` for unit-mean exponential power gain.
    pub fading_param: f64,
}

impl LinkGeometry {
    pub fn new(tx_power: f64, distance: f64, path_loss_exponent: f64) -> Result<Self> {
        let link = Self {
            tx_power,
            distance,
            path_loss_exponent,
            fading_param: 1.0,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn with_fading(mut self, fading_param: f64) -> Result<Self> {
        self.fading_param = fading_param;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        positive("tx_power", self.tx_power)?;
        positive("distance", self.distance)?;
        positive("fading_param", self.fading_param)?;
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent >= 2.0) {
            return Err(Error::InvalidParameter {
                name: "path_loss_exponent",
                value: self.path_loss_exponent,
                reason: "must be >= 2",
            });
        }
        Ok(())
    }

    /// `P_tx * r^-alpha`, the mean received power before fading.
    pub fn received_power_factor(&self) -> f64 {
        self.tx_power * self.distance.powf(-self.path_loss_exponent)
    }

    /// Mean received power including the fading parameter, `v * h`.
    pub fn mean_received_power(&self) -> f64 {
        self.fading_param * self.received_power_factor()
    }
}

/// Free-function form of [`LinkGeometry::received_power_factor`].
pub fn received_power_factor(link: &LinkGeometry) -> f64 {
    link.received_power_factor()
}

/// Per-receiver-class decoding parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Linear SINR threshold `gamma`.
    pub sinr_threshold: f64,
    /// Receiver noise power in mW.
    pub noise_power: f64,
}

impl ChannelParams {
    pub fn new(sinr_threshold: f64, noise_power: f64) -> Result<Self> {
        let params = Self {
            sinr_threshold,
            noise_power,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_db(sinr_threshold_db: f64, noise_dbm: f64) -> Result<Self> {
        Self::new(db_to_linear(sinr_threshold_db), db_to_linear(noise_dbm))
    }

    pub fn validate(&self) -> Result<()> {
        positive("sinr_threshold", self.sinr_threshold)?;
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_power",
                value: self.noise_power,
                reason: "must be finite and >= 0",
            });
        }
        Ok(())
    }
}

/// Symmetric network geometry: every secondary pair looks the same, so five
/// link classes describe all transmitter/receiver combinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub n_secondary: usize,
    /// Primary transmitter to primary receiver.
    pub primary_link: LinkGeometry,
    /// Secondary transmitter to its own receiver.
    pub secondary_link: LinkGeometry,
    /// A secondary transmitter as seen at the primary receiver.
    pub secondary_to_primary_rx: LinkGeometry,
    /// The primary transmitter as seen at a secondary receiver.
    pub primary_to_secondary_rx: LinkGeometry,
    /// A foreign secondary transmitter as seen at a secondary receiver.
    pub secondary_cross: LinkGeometry,
    pub primary_channel: ChannelParams,
    pub secondary_channel: ChannelParams,
}

/// Reference deployment values.
pub mod reference {
    pub const PRIMARY_TX_POWER_MW: f64 = 10.0;
    pub const SECONDARY_TX_POWER_MW: f64 = 0.1;
    pub const PRIMARY_DISTANCE_M: f64 = 150.0;
    pub const SECONDARY_DISTANCE_M: f64 = 40.0;
    /// Distance from a secondary transmitter to the primary receiver. Not
    /// part of the measured deployment; chosen so that secondary activity
    /// visibly loads the primary link without destabilising it.
    pub const SECONDARY_TO_PRIMARY_RX_M: f64 = 60.0;
    pub const PATH_LOSS_EXPONENT: f64 = 4.0;
    pub const NOISE_DBM: f64 = -121.0;
}

impl TopologySpec {
    /// Reference deployment with `n_secondary` pairs and the same SINR
    /// threshold (in dB) at every receiver.
    ///
    /// The primary transmitter sits at 150 m from every receiver, secondary
    /// pairs at 40 m, secondary interferers reach foreign secondary receivers
    /// at the intended-link power and reach the primary receiver from
    /// [`reference::SECONDARY_TO_PRIMARY_RX_M`].
    pub fn reference(n_secondary: usize, sinr_threshold_db: f64) -> Self {
        use reference::*;
        let link = |p, d| LinkGeometry {
            tx_power: p,
            distance: d,
            path_loss_exponent: PATH_LOSS_EXPONENT,
            fading_param: 1.0,
        };
        let channel = ChannelParams {
            sinr_threshold: db_to_linear(sinr_threshold_db),
            noise_power: db_to_linear(NOISE_DBM),
        };
        Self {
            n_secondary,
            primary_link: link(PRIMARY_TX_POWER_MW, PRIMARY_DISTANCE_M),
            secondary_link: link(SECONDARY_TX_POWER_MW, SECONDARY_DISTANCE_M),
            secondary_to_primary_rx: link(SECONDARY_TX_POWER_MW, SECONDARY_TO_PRIMARY_RX_M),
            primary_to_secondary_rx: link(PRIMARY_TX_POWER_MW, PRIMARY_DISTANCE_M),
            secondary_cross: link(SECONDARY_TX_POWER_MW, SECONDARY_DISTANCE_M),
            primary_channel: channel,
            secondary_channel: channel,
        }
    }

    pub fn with_secondaries(mut self, n_secondary: usize) -> Self {
        self.n_secondary = n_secondary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_secondary > MAX_SECONDARY {
            return Err(Error::CountOutOfRange {
                what: "n_secondary",
                k: self.n_secondary,
                min: 0,
                max: MAX_SECONDARY,
            });
        }
        for link in [
            &self.primary_link,
            &self.secondary_link,
            &self.secondary_to_primary_rx,
            &self.primary_to_secondary_rx,
            &self.secondary_cross,
        ] {
            link.validate()?;
        }
        self.primary_channel.validate()?;
        self.secondary_channel.validate()
    }

    /// Success probability of the primary link while `k` secondaries transmit.
    pub fn primary_success_given_k(&self, k: usize) -> Result<f64> {
        success_prob_primary_given_k(self, k)
    }

    /// Success probability of a secondary link while `k` secondaries
    /// (including itself) transmit.
    pub fn secondary_success_given_k(&self, k: usize, primary_active: bool) -> Result<f64> {
        success_prob_secondary_given_k(self, k, primary_active)
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn noise_term(target: &LinkGeometry, channel: &ChannelParams) -> f64 {
    (-channel.sinr_threshold * channel.noise_power / target.mean_received_power()).exp()
}

fn interference_factor(target: &LinkGeometry, interferer: &LinkGeometry, gamma: f64) -> f64 {
    1.0 / (1.0 + gamma * interferer.mean_received_power() / target.mean_received_power())
}

/// Probability that `target` clears the SINR threshold when every link in
/// `interferers` transmits concurrently, under independent Rayleigh fading.
pub fn success_prob_general(
    target: &LinkGeometry,
    interferers: &[LinkGeometry],
    channel: &ChannelParams,
) -> f64 {
    interferers
        .iter()
        .map(|i| interference_factor(target, i, channel.sinr_threshold))
        .product::<f64>()
        * noise_term(target, channel)
}

/// Success probability when `k_transmitters` statistically identical links
/// are active, the target included.
pub fn success_prob_symmetric(
    target: &LinkGeometry,
    k_transmitters: usize,
    channel: &ChannelParams,
) -> Result<f64> {
    if k_transmitters == 0 {
        return Err(Error::CountOutOfRange {
            what: "k_transmitters",
            k: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let collision = 1.0 / (1.0 + channel.sinr_threshold);
    Ok(noise_term(target, channel) * collision.powi((k_transmitters - 1) as i32))
}

/// Primary-link success probability with `k` secondary interferers.
pub fn success_prob_primary_given_k(topology: &TopologySpec, k: usize) -> Result<f64> {
    if k > topology.n_secondary {
        return Err(Error::CountOutOfRange {
            what: "k",
            k,
            min: 0,
            max: topology.n_secondary,
        });
    }
    let channel = &topology.primary_channel;
    let factor = interference_factor(
        &topology.primary_link,
        &topology.secondary_to_primary_rx,
        channel.sinr_threshold,
    );
    Ok(noise_term(&topology.primary_link, channel) * factor.powi(k as i32))
}

/// Secondary-link success probability with `k` active secondaries (the
/// tagged one included) and the primary either silent or transmitting.
///
/// The `k - 1` foreign secondaries interfere through `secondary_cross`; with
/// the default geometry this is the symmetric closed form.
pub fn success_prob_secondary_given_k(
    topology: &TopologySpec,
    k: usize,
    primary_active: bool,
) -> Result<f64> {
    if k == 0 || k > topology.n_secondary {
        return Err(Error::CountOutOfRange {
            what: "k",
            k,
            min: 1,
            max: topology.n_secondary,
        });
    }
    let channel = &topology.secondary_channel;
    let target = &topology.secondary_link;
    let cross = interference_factor(target, &topology.secondary_cross, channel.sinr_threshold);
    let mut p = noise_term(target, channel) * cross.powi((k - 1) as i32);
    if primary_active {
        p *= interference_factor(
            target,
            &topology.primary_to_secondary_rx,
            channel.sinr_threshold,
        );
    }
    Ok(p)
}
