//! Slot-level Monte Carlo simulator.
//!
//! Every slot runs, in order:
//!
//! 1. a Bernoulli(`lambda`) arrival stamped with the slot index joins the
//!    primary FIFO (early arrival: it may be served in the same slot);
//! 2. a backlogged primary transmits its head-of-line packet with
//!    probability `q_pr`, each secondary with probability `q_s`;
//! 3. each receiver with an active intended transmitter draws independent
//!    unit-mean exponential fades for every active link it hears and
//!    decodes iff the SINR clears its threshold;
//! 4. a decoded primary packet departs at the end of the slot with system
//!    time `T = departure - generation + 1`, and the age drops to `T`.
//!
//! The age sampled in a slot is the age carried into that slot plus one,
//! i.e. the value just before a delivery in that slot takes effect. The
//! per-slot time average of this sample is what the closed-form age
//! describes.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::AccessConfig;
use crate::phy::{ChannelParams, TopologySpec};

/// Generator used for every replication, seeded with `seed_from_u64`.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Total slots simulated, warmup included.
    pub horizon: u64,
    /// Leading slots excluded from every metric.
    pub warmup: u64,
    pub replications: usize,
    pub seed: u64,
    /// Keep per-packet `(Y, W, T)` records in the report.
    #[serde(default)]
    pub record_packets: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 1_000_000,
            warmup: 10_000,
            replications: 1,
            seed: 1,
            record_packets: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon <= self.warmup {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: self.horizon as f64,
                reason: "must exceed warmup",
            });
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter {
                name: "replications",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    pub fn measured_slots(&self) -> u64 {
        self.horizon - self.warmup
    }
}

/// One delivered primary packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub slot_generated: u64,
    pub slot_delivered: u64,
    /// Interarrival time `Y` to the previous packet.
    pub interarrival: u64,
    /// Waiting time `W` before reaching the head of the line.
    pub wait: u64,
    /// System time `T`.
    pub system_time: u64,
}

impl PacketRecord {
    pub fn service_time(&self) -> u64 {
        self.system_time - self.wait
    }
}

/// Age process of the primary at its receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgeTracker {
    age: u64,
}

impl AgeTracker {
    /// Starts from a post-delivery age of `initial`.
    pub fn new(initial: u64) -> Self {
        Self { age: initial }
    }

    /// Advances one slot and returns the age sampled for it. `delivered`
    /// carries the system time of a packet decoded in this slot.
    pub fn step(&mut self, delivered: Option<u64>) -> u64 {
        let sampled = self.age + 1;
        self.age = delivered.unwrap_or(sampled);
        sampled
    }

    pub fn current(&self) -> u64 {
        self.age
    }
}

impl Default for AgeTracker {
    fn default() -> Self {
        Self::new(1)
    }
}

/// Streaming sums behind the two age estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AgeSummary {
    pub age_sum: f64,
    pub slots: u64,
    pub packets: u64,
    pub sum_interarrival: f64,
    pub sum_interarrival_sq: f64,
    pub sum_interarrival_system: f64,
}

impl AgeSummary {
    pub fn add_slot(&mut self, sampled_age: u64) {
        self.age_sum += sampled_age as f64;
        self.slots += 1;
    }

    pub fn add_packet(&mut self, interarrival: u64, system_time: u64) {
        let y = interarrival as f64;
        self.packets += 1;
        self.sum_interarrival += y;
        self.sum_interarrival_sq += y * y;
        self.sum_interarrival_system += y * system_time as f64;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeEstimates {
    /// `sum(Delta_t) / T` over the measured slots.
    pub time_average: f64,
    /// `lambda_hat (avg(Y T) + avg(Y^2)/2 + avg(Y)/2)`; `None` without packets.
    pub reassembled: Option<f64>,
}

/// Both age estimators from one trace summary.
pub fn empirical_average_age(summary: &AgeSummary) -> Result<AgeEstimates> {
    if summary.slots == 0 {
        return Err(Error::EmptyTrace);
    }
    let reassembled = (summary.packets > 0).then(|| {
        let n = summary.packets as f64;
        let rate = n / summary.slots as f64;
        rate * (summary.sum_interarrival_system / n
            + summary.sum_interarrival_sq / (2.0 * n)
            + summary.sum_interarrival / (2.0 * n))
    });
    Ok(AgeEstimates {
        time_average: summary.age_sum / summary.slots as f64,
        reassembled,
    })
}

/// Batch-means standard errors within one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub age: f64,
    pub service_rate: f64,
    pub secondary_throughput: f64,
    pub prob_empty: f64,
    pub mean_system_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub slots_measured: u64,
    /// Time average of the sampled age.
    pub empirical_age: f64,
    /// Age reassembled from per-packet moments.
    pub reassembled_age: Option<f64>,
    /// No primary packet was delivered in the measured window.
    pub no_updates: bool,
    /// Deliveries per slot in which the primary queue was backlogged.
    pub empirical_service_rate: f64,
    /// Per-node secondary deliveries per slot.
    pub empirical_secondary_throughput: f64,
    /// Primary deliveries per slot.
    pub delivered_rate: f64,
    pub prob_empty: f64,
    pub mean_system_time: f64,
    /// Queue length at the transmission epoch, index = packets in queue.
    pub occupancy_histogram: Vec<f64>,
    /// System time distribution, index = slots (index 0 is always empty).
    pub system_time_histogram: Vec<f64>,
    pub age_summary: AgeSummary,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub per_packet_records: Vec<PacketRecord>,
    pub std_errors: StdErrors,
}

#[derive(Debug, Clone, Copy, Default)]
struct Batch {
    age_sum: f64,
    slots: u64,
    busy: u64,
    empty: u64,
    primary_successes: u64,
    secondary_successes: u64,
    system_time_sum: f64,
    packets: u64,
}

struct Link {
    mean_power: f64,
}

struct Receiver {
    gamma: f64,
    noise: f64,
    signal: f64,
}

impl Receiver {
    fn new(channel: &ChannelParams, signal: &Link) -> Self {
        Self {
            gamma: channel.sinr_threshold,
            noise: channel.noise_power,
            signal: signal.mean_power,
        }
    }

    fn decodes(&self, rng: &mut ChaCha8Rng, interferers: impl Iterator<Item = f64>) -> bool {
        let signal = self.signal * rng.sample::<f64, _>(Exp1);
        let interference: f64 = interferers.map(|p| p * rng.sample::<f64, _>(Exp1)).sum();
        signal >= self.gamma * (self.noise + interference)
    }
}

fn histogram(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Vec::new();
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

fn bump(counts: &mut Vec<u64>, index: usize) {
    if counts.len() <= index {
        counts.resize(index + 1, 0);
    }
    counts[index] += 1;
}

fn batch_std_error(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

/// Runs one replication with seed `sim.seed`.
pub fn simulate(topology: &TopologySpec, access: &AccessConfig, sim: &SimConfig) -> Result<SimReport> {
    topology.validate()?;
    access.validate()?;
    sim.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let n = topology.n_secondary;
    let lambda = access.arrival_rate;
    let (q_pr, q_s) = (access.primary_access_prob, access.secondary_access_prob);

    let power = |l: &crate::phy::LinkGeometry| Link {
        mean_power: l.mean_received_power(),
    };
    let primary_rx = Receiver::new(&topology.primary_channel, &power(&topology.primary_link));
    let secondary_rx = Receiver::new(&topology.secondary_channel, &power(&topology.secondary_link));
    let sec_at_primary = power(&topology.secondary_to_primary_rx).mean_power;
    let primary_at_sec = power(&topology.primary_to_secondary_rx).mean_power;
    let sec_cross = power(&topology.secondary_cross).mean_power;

    let mut queue: VecDeque<u64> = VecDeque::new();
    let mut age = AgeTracker::default();
    let mut summary = AgeSummary::default();
    let mut occupancy: Vec<u64> = Vec::new();
    let mut system_times: Vec<u64> = Vec::new();
    let mut records = Vec::new();
    let mut batches = vec![Batch::default(); BATCHES];
    let batch_len = sim.measured_slots().div_ceil(BATCHES as u64);

    let mut active = Vec::with_capacity(n);
    let mut last_generated: Option<u64> = None;
    let mut last_departure: Option<u64> = None;

    for slot in 0..sim.horizon {
        let measured = slot >= sim.warmup;
        if rng.random_bool(lambda) {
            queue.push_back(slot);
        }
        let backlog = queue.len();

        let primary_tx = backlog > 0 && rng.random_bool(q_pr);
        active.clear();
        active.extend((0..n).filter(|_| rng.random_bool(q_s)));

        let primary_ok = primary_tx
            && primary_rx.decodes(&mut rng, std::iter::repeat_n(sec_at_primary, active.len()));
        let mut secondary_ok = 0u64;
        for _ in 0..active.len() {
            let others = std::iter::repeat_n(sec_cross, active.len() - 1)
                .chain(primary_tx.then_some(primary_at_sec));
            if secondary_rx.decodes(&mut rng, others) {
                secondary_ok += 1;
            }
        }

        let delivered = if primary_ok {
            let generated = queue.pop_front().expect("transmitting queue is nonempty");
            let system_time = slot - generated + 1;
            let head_of_line = last_departure.map_or(generated, |d| generated.max(d + 1));
            if let Some(prev) = last_generated {
                if generated >= sim.warmup {
                    let record = PacketRecord {
                        slot_generated: generated,
                        slot_delivered: slot,
                        interarrival: generated - prev,
                        wait: head_of_line - generated,
                        system_time,
                    };
                    summary.add_packet(record.interarrival, system_time);
                    bump(&mut system_times, system_time as usize);
                    if sim.record_packets {
                        records.push(record);
                    }
                }
            }
            last_generated = Some(generated);
            last_departure = Some(slot);
            Some(system_time)
        } else {
            None
        };

        let sampled = age.step(delivered);
        if measured {
            summary.add_slot(sampled);
            bump(&mut occupancy, backlog);
            let b = &mut batches[((slot - sim.warmup) / batch_len) as usize];
            b.age_sum += sampled as f64;
            b.slots += 1;
            b.busy += u64::from(backlog > 0);
            b.empty += u64::from(backlog == 0);
            b.primary_successes += u64::from(primary_ok);
            b.secondary_successes += secondary_ok;
            if let Some(t) = delivered {
                b.system_time_sum += t as f64;
                b.packets += 1;
            }
        }
    }

    let estimates = empirical_average_age(&summary)?;
    let total = batches.iter().fold(Batch::default(), |mut acc, b| {
        acc.slots += b.slots;
        acc.busy += b.busy;
        acc.empty += b.empty;
        acc.primary_successes += b.primary_successes;
        acc.secondary_successes += b.secondary_successes;
        acc.system_time_sum += b.system_time_sum;
        acc.packets += b.packets;
        acc
    });
    let slots = total.slots as f64;
    let per_node = |b: &Batch| {
        if n == 0 {
            0.0
        } else {
            b.secondary_successes as f64 / (n as f64 * b.slots as f64)
        }
    };
    let std_errors = StdErrors {
        age: batch_std_error(batches.iter().map(|b| b.age_sum / b.slots as f64)),
        service_rate: batch_std_error(
            batches.iter().map(|b| ratio(b.primary_successes as f64, b.busy as f64)),
        ),
        secondary_throughput: batch_std_error(batches.iter().map(per_node)),
        prob_empty: batch_std_error(batches.iter().map(|b| b.empty as f64 / b.slots as f64)),
        mean_system_time: batch_std_error(
            batches.iter().map(|b| ratio(b.system_time_sum, b.packets as f64)),
        ),
    };

    Ok(SimReport {
        seed: sim.seed,
        slots_measured: total.slots,
        empirical_age: estimates.time_average,
        reassembled_age: estimates.reassembled,
        no_updates: total.primary_successes == 0,
        empirical_service_rate: ratio(total.primary_successes as f64, total.busy as f64),
        empirical_secondary_throughput: per_node(&total),
        delivered_rate: total.primary_successes as f64 / slots,
        prob_empty: total.empty as f64 / slots,
        mean_system_time: ratio(total.system_time_sum, total.packets as f64),
        occupancy_histogram: histogram(&occupancy),
        system_time_histogram: histogram(&system_times),
        age_summary: summary,
        per_packet_records: records,
        std_errors,
    })
}

/// Mean, spread and normal 95% interval of one metric across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// `None` with a single replication.
    pub std_dev: Option<f64>,
    pub std_error: Option<f64>,
    pub ci95: Option<(f64, f64)>,
}

impl MetricSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self {
                mean,
                std_dev: None,
                std_error: None,
                ci95: None,
            };
        }
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std_dev = var.sqrt();
        let std_error = std_dev / (n as f64).sqrt();
        Self {
            mean,
            std_dev: Some(std_dev),
            std_error: Some(std_error),
            ci95: Some((mean - 1.96 * std_error, mean + 1.96 * std_error)),
        }
    }

    pub fn ci_width(&self) -> Option<f64> {
        self.ci95.map(|(lo, hi)| hi - lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub replications: usize,
    pub age: MetricSummary,
    pub reassembled_age: MetricSummary,
    pub service_rate: MetricSummary,
    pub secondary_throughput: MetricSummary,
    pub delivered_rate: MetricSummary,
    pub prob_empty: MetricSummary,
    pub mean_system_time: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicated {
    pub summary: ReplicationSummary,
    pub reports: Vec<SimReport>,
}

/// Runs `sim.replications` independent replications with seeds
/// `seed, seed + 1, ...` in parallel and summarises them. Output does not
/// depend on thread scheduling.
pub fn replicate(topology: &TopologySpec, access: &AccessConfig, sim: &SimConfig) -> Result<Replicated> {
    sim.validate()?;
    let reports = (0..sim.replications)
        .into_par_iter()
        .map(|i| {
            let config = SimConfig {
                seed: sim.seed.wrapping_add(i as u64),
                ..*sim
            };
            simulate(topology, access, &config)
        })
        .collect::<Result<Vec<_>>>()?;
    let metric = |f: &dyn Fn(&SimReport) -> f64| {
        MetricSummary::from_samples(&reports.iter().map(f).collect::<Vec<_>>())
    };
    let summary = ReplicationSummary {
        replications: reports.len(),
        age: metric(&|r| r.empirical_age),
        reassembled_age: metric(&|r| r.reassembled_age.unwrap_or(f64::NAN)),
        service_rate: metric(&|r| r.empirical_service_rate),
        secondary_throughput: metric(&|r| r.empirical_secondary_throughput),
        delivered_rate: metric(&|r| r.delivered_rate),
        prob_empty: metric(&|r| r.prob_empty),
        mean_system_time: metric(&|r| r.mean_system_time),
    };
    Ok(Replicated { summary, reports })
}

/// Total-variation distance between two distributions on `0, 1, 2, ...`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    0.5 * (0..len)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
