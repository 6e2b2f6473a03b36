//! Closed-form queueing and age analytics.
//!
//! The primary queue is a discrete-time Geo/Geo/1 system with early
//! arrivals: a packet generated at the start of a slot can be served in that
//! slot, departures happen at the end of a slot, and the system time of a
//! packet is at least one slot. The service rate depends on the secondary
//! population through the SINR success probabilities in [`crate::phy`].

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::phy::TopologySpec;

/// Arrival rate and access probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessConfig {
    /// Bernoulli arrival probability per slot at the primary (`lambda`).
    pub arrival_rate: f64,
    /// Probability that a backlogged primary transmits in a slot (`q_pr`).
    pub primary_access_prob: f64,
    /// Probability that each secondary transmits in a slot (`q_s`).
    pub secondary_access_prob: f64,
}

impl AccessConfig {
    pub fn new(arrival_rate: f64, primary_access_prob: f64, secondary_access_prob: f64) -> Result<Self> {
        let access = Self {
            arrival_rate,
            primary_access_prob,
            secondary_access_prob,
        };
        access.validate()?;
        Ok(access)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("lambda", self.arrival_rate)?;
        check_probability("q_pr", self.primary_access_prob)?;
        check_probability("q_s", self.secondary_access_prob)
    }
}

/// Stationary law of the primary queue as seen by the transmitter at the
/// start of a slot (after the arrival, before the departure).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    pub service_rate: f64,
    /// `rho = lambda (1 - mu) / (mu (1 - lambda))`, ratio of the geometric tail.
    pub utilization_ratio: f64,
    pub prob_empty: f64,
    pub prob_one: f64,
}

impl QueueStats {
    /// `P[Q = n]`.
    pub fn prob(&self, n: usize) -> f64 {
        match n {
            0 => self.prob_empty,
            n => self.utilization_ratio.powi(n as i32 - 1) * self.prob_one,
        }
    }

    /// Closed-form total mass, `pi_0 + pi_1 / (1 - rho)`.
    pub fn total_mass(&self) -> f64 {
        self.prob_empty + self.prob_one / (1.0 - self.utilization_ratio)
    }

    /// Mean occupancy at the transmission epoch.
    pub fn mean_occupancy(&self) -> f64 {
        self.prob_one / (1.0 - self.utilization_ratio).powi(2)
    }
}

/// Average age and the moments it is assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeResult {
    /// Time-average age in slots. Infinite when no updates are generated.
    pub average_age: f64,
    pub mean_interarrival: f64,
    pub second_moment_interarrival: f64,
    pub mean_service: f64,
    /// `E[W Y]`, waiting time times interarrival time.
    pub corr_wait: f64,
    /// `E[Y T]`, interarrival time times system time.
    pub corr_system: f64,
}

impl AgeResult {
    fn no_updates(mu: f64) -> Self {
        Self {
            average_age: f64::INFINITY,
            mean_interarrival: f64::INFINITY,
            second_moment_interarrival: f64::INFINITY,
            mean_service: 1.0 / mu,
            corr_wait: 0.0,
            corr_system: f64::INFINITY,
        }
    }

    /// The `lambda = 0` condition: the receiver never gets an update.
    pub fn is_infinite(&self) -> bool {
        self.average_age.is_infinite()
    }

    /// Age reassembled from its moments, `lambda (E[YT] + E[Y^2]/2 + E[Y]/2)`.
    pub fn reassembled(&self) -> f64 {
        (self.corr_system + self.second_moment_interarrival / 2.0 + self.mean_interarrival / 2.0)
            / self.mean_interarrival
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    /// Per-node secondary throughput `mu_s`.
    pub secondary_per_node: f64,
    /// Per-node throughput while the primary is silent.
    pub silent_component: f64,
    /// Per-node throughput while the primary transmits.
    pub active_component: f64,
    /// `N * mu_s`.
    pub aggregate: f64,
}

/// Precomputed per-`k` success probabilities for one topology.
///
/// Service rates for many access probabilities reuse the same tables, which
/// is what the optimizers and sweeps do.
#[derive(Debug, Clone)]
pub struct RateTables {
    n_secondary: usize,
    /// `primary[k]`, k = 0..=N secondaries active.
    primary: Vec<f64>,
    /// `secondary_silent[k]`, k = 1..=N active secondaries, stored at k - 1.
    secondary_silent: Vec<f64>,
    secondary_active: Vec<f64>,
}

impl RateTables {
    pub fn new(topology: &TopologySpec) -> Result<Self> {
        topology.validate()?;
        let n = topology.n_secondary;
        let primary = (0..=n)
            .map(|k| topology.primary_success_given_k(k))
            .collect::<Result<Vec<_>>>()?;
        let secondary_silent = (1..=n)
            .map(|k| topology.secondary_success_given_k(k, false))
            .collect::<Result<Vec<_>>>()?;
        let secondary_active = (1..=n)
            .map(|k| topology.secondary_success_given_k(k, true))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_secondary: n,
            primary,
            secondary_silent,
            secondary_active,
        })
    }

    pub fn n_secondary(&self) -> usize {
        self.n_secondary
    }

    /// Primary success probability averaged over the number of active
    /// secondaries; the service rate is `q_pr` times this.
    pub fn primary_success(&self, q_s: f64) -> f64 {
        binomial_weights(self.n_secondary, q_s)
            .iter()
            .zip(&self.primary)
            .map(|(w, p)| w * p)
            .sum()
    }

    pub fn service_rate(&self, q_pr: f64, q_s: f64) -> f64 {
        q_pr * self.primary_success(q_s)
    }

    /// `(mu_{s,0}, mu_{s,1})`: per-node secondary throughput with the
    /// primary silent and transmitting.
    pub fn secondary_components(&self, q_s: f64) -> (f64, f64) {
        if self.n_secondary == 0 {
            return (0.0, 0.0);
        }
        let weights = binomial_weights(self.n_secondary - 1, q_s);
        let mut silent = 0.0;
        let mut active = 0.0;
        for (k, w) in weights.iter().enumerate() {
            silent += w * self.secondary_silent[k];
            active += w * self.secondary_active[k];
        }
        (q_s * silent, q_s * active)
    }
}

/// Binomial(n, q) probability mass, computed in the log domain with a
/// running-sum recurrence for `ln C(n, k)` so that large `n` neither
/// overflows the coefficient nor underflows `(1 - q)^n` prematurely.
pub fn binomial_weights(n: usize, q: f64) -> Vec<f64> {
    let mut weights = vec![0.0; n + 1];
    if q <= 0.0 {
        weights[0] = 1.0;
        return weights;
    }
    if q >= 1.0 {
        weights[n] = 1.0;
        return weights;
    }
    let (ln_q, ln_1q) = (q.ln(), (-q).ln_1p());
    let mut ln_choose = 0.0;
    for (k, w) in weights.iter_mut().enumerate() {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        *w = (ln_choose + k as f64 * ln_q + (n - k) as f64 * ln_1q).exp();
    }
    weights
}

/// Service rate of the primary, `mu`.
pub fn primary_service_rate(topology: &TopologySpec, access: &AccessConfig) -> Result<f64> {
    access.validate()?;
    Ok(RateTables::new(topology)?
        .service_rate(access.primary_access_prob, access.secondary_access_prob))
}

/// Strict stability, `lambda < mu`.
pub fn is_stable(lambda: f64, mu: f64) -> bool {
    lambda < mu
}

fn check_rates(lambda: f64, mu: f64) -> Result<()> {
    check_probability("lambda", lambda)?;
    check_probability("mu", mu)?;
    if !is_stable(lambda, mu) {
        return Err(Error::Unstable { lambda, mu });
    }
    Ok(())
}

fn rho(lambda: f64, mu: f64) -> f64 {
    lambda * (1.0 - mu) / (mu * (1.0 - lambda))
}

pub fn stationary_distribution(lambda: f64, mu: f64) -> Result<QueueStats> {
    check_rates(lambda, mu)?;
    if lambda == 0.0 {
        return Err(Error::Unstable { lambda, mu });
    }
    let rho = rho(lambda, mu);
    let prob_one = lambda * (1.0 - rho) / mu;
    Ok(QueueStats {
        service_rate: mu,
        utilization_ratio: rho,
        prob_empty: mu * (1.0 - lambda) / lambda * prob_one,
        prob_one,
    })
}

/// Probability that a packet spends exactly `t` slots in the system.
pub fn system_time_pmf(lambda: f64, mu: f64, t: u64) -> Result<f64> {
    check_rates(lambda, mu)?;
    if t < 1 {
        return Err(Error::CountOutOfRange {
            what: "t",
            k: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let rho = rho(lambda, mu);
    let success = mu * (1.0 - rho);
    Ok(success * (1.0 - success).powf((t - 1) as f64))
}

/// Mean system time, `1 / (mu (1 - rho))`.
pub fn mean_system_time(lambda: f64, mu: f64) -> Result<f64> {
    check_rates(lambda, mu)?;
    Ok(1.0 / (mu * (1.0 - rho(lambda, mu))))
}

/// `E[W Y]` in simplified form.
pub fn corr_wait_interarrival(lambda: f64, mu: f64) -> Result<f64> {
    check_rates(lambda, mu)?;
    Ok(lambda * (1.0 - mu) / ((mu - lambda) * mu * mu))
}

/// `E[W Y]` expressed through `rho`, before simplification. Kept as an
/// algebraic cross-check of [`corr_wait_interarrival`].
pub fn corr_wait_interarrival_via_rho(lambda: f64, mu: f64) -> Result<f64> {
    check_rates(lambda, mu)?;
    let rho = rho(lambda, mu);
    let tail = 1.0 - mu + mu * rho;
    let denom = lambda + mu - lambda * mu - mu * rho + lambda * mu * rho;
    Ok(lambda * tail / (mu * (1.0 - rho) * denom * denom))
}

/// Time-average age of the primary for arrival rate `lambda` and service
/// rate `mu`. `lambda = 0` yields the infinite-age result.
pub fn average_aoi(lambda: f64, mu: f64) -> Result<AgeResult> {
    check_rates(lambda, mu)?;
    if lambda == 0.0 {
        return Ok(AgeResult::no_updates(mu));
    }
    let mean_interarrival = 1.0 / lambda;
    let mean_service = 1.0 / mu;
    let corr_wait = corr_wait_interarrival(lambda, mu)?;
    Ok(AgeResult {
        average_age: age_closed_form(lambda, mu),
        mean_interarrival,
        second_moment_interarrival: (2.0 - lambda) / (lambda * lambda),
        mean_service,
        corr_wait,
        corr_system: corr_wait + mean_interarrival * mean_service,
    })
}

fn age_closed_form(lambda: f64, mu: f64) -> f64 {
    1.0 / lambda + (1.0 - lambda) / (mu - lambda) - lambda / (mu * mu) + lambda / mu
}

/// `d Delta / d lambda` at fixed `mu`.
pub fn age_derivative(lambda: f64, mu: f64) -> f64 {
    -1.0 / (lambda * lambda) + (1.0 - mu) / ((mu - lambda) * (mu - lambda)) + (mu - 1.0) / (mu * mu)
}

/// Quartic whose root in `(0, mu)` is the age-minimising arrival rate.
pub fn optimal_rate_quartic(lambda: f64, mu: f64) -> f64 {
    let l2 = lambda * lambda;
    l2 * l2 * (mu - 1.0) - 2.0 * l2 * lambda * (mu - 1.0) * mu - l2 * mu * mu
        + 2.0 * lambda * mu.powi(3)
        - mu.powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalRate {
    pub lambda: f64,
    /// Set when the age keeps decreasing up to `lambda = mu` (only for
    /// `mu = 1`); `lambda` is then clamped to `mu`.
    pub at_boundary: bool,
}

/// Arrival rate minimising the average age for a fixed service rate.
///
/// The age is convex in `lambda` on `(0, mu)`, so its derivative changes
/// sign once and bisection on that sign finds the stationary point.
pub fn optimal_arrival_rate(mu: f64) -> Result<OptimalRate> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: mu,
            reason: "must lie in (0, 1]",
        });
    }
    let eps = 1e-12 * mu;
    let (mut lo, mut hi) = (eps, mu - eps);
    if age_derivative(hi, mu) <= 0.0 {
        return Ok(OptimalRate {
            lambda: mu,
            at_boundary: true,
        });
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if age_derivative(mid, mu) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(OptimalRate {
        lambda: 0.5 * (lo + hi),
        at_boundary: false,
    })
}

/// Secondary throughput for a stable configuration.
pub fn secondary_throughput(topology: &TopologySpec, access: &AccessConfig) -> Result<ThroughputReport> {
    access.validate()?;
    let tables = RateTables::new(topology)?;
    throughput_from_tables(&tables, access)
}

pub(crate) fn throughput_from_tables(tables: &RateTables, access: &AccessConfig) -> Result<ThroughputReport> {
    let q_pr = access.primary_access_prob;
    let q_s = access.secondary_access_prob;
    let lambda = access.arrival_rate;
    let mu = tables.service_rate(q_pr, q_s);
    if !is_stable(lambda, mu) {
        return Err(Error::Unstable { lambda, mu });
    }
    let (silent, active) = tables.secondary_components(q_s);
    let busy = lambda / mu;
    let per_node = silent * (1.0 - busy) + (1.0 - q_pr) * silent * busy + q_pr * active * busy;
    Ok(ThroughputReport {
        secondary_per_node: per_node,
        silent_component: silent,
        active_component: active,
        aggregate: tables.n_secondary as f64 * per_node,
    })
}

/// Everything the closed forms say about one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub access: AccessConfig,
    pub n_secondary: usize,
    pub service_rate: f64,
    /// Absent when `lambda = 0`.
    pub queue: Option<QueueStats>,
    /// `P[Q = 0] = 1 - lambda / mu`.
    pub prob_empty: f64,
    pub mean_system_time: f64,
    pub throughput: ThroughputReport,
    pub age: AgeResult,
}

/// Assembles the full analytic report; fails with [`Error::Unstable`] when
/// `lambda >= mu`.
pub fn analyze(topology: &TopologySpec, access: &AccessConfig) -> Result<AnalyticReport> {
    access.validate()?;
    let tables = RateTables::new(topology)?;
    analyze_with_tables(&tables, access)
}

pub fn analyze_with_tables(tables: &RateTables, access: &AccessConfig) -> Result<AnalyticReport> {
    let lambda = access.arrival_rate;
    let mu = tables.service_rate(access.primary_access_prob, access.secondary_access_prob);
    let throughput = throughput_from_tables(tables, access)?;
    let age = average_aoi(lambda, mu)?;
    let queue = if lambda > 0.0 {
        Some(stationary_distribution(lambda, mu)?)
    } else {
        None
    };
    Ok(AnalyticReport {
        access: *access,
        n_secondary: tables.n_secondary,
        service_rate: mu,
        queue,
        prob_empty: 1.0 - lambda / mu,
        mean_system_time: mean_system_time(lambda, mu)?,
        throughput,
        age,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::ChannelParams;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn quiet_topology(n: usize, gamma: f64) -> TopologySpec {
        let mut topo = TopologySpec::reference(n, 0.0);
        let quiet = ChannelParams::new(gamma, 0.0).unwrap();
        topo.primary_channel = quiet;
        topo.secondary_channel = quiet;
        topo.secondary_to_primary_rx = topo.primary_link;
        topo
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        for &(n, q) in &[(0, 0.3), (1, 0.5), (7, 0.2), (60, 0.9), (10_000, 0.37), (5, 0.0), (5, 1.0)] {
            let w = binomial_weights(n, q);
            let total: f64 = w.iter().sum();
            assert!(close(total, 1.0, 1e-10), "n={n} q={q} total={total}");
        }
        let w = binomial_weights(4, 0.5);
        for (k, expected) in [1.0, 4.0, 6.0, 4.0, 1.0].iter().enumerate() {
            assert!(close(w[k], expected / 16.0, 1e-15));
        }
    }

    #[test]
    fn service_rate_examples() {
        let topo = quiet_topology(0, 1.0);
        let access = AccessConfig::new(0.1, 0.7, 0.4).unwrap();
        assert!(close(primary_service_rate(&topo, &access).unwrap(), 0.7, 1e-15));

        let access = AccessConfig::new(0.1, 0.0, 0.4).unwrap();
        assert_eq!(primary_service_rate(&quiet_topology(3, 1.0), &access).unwrap(), 0.0);

        // Per-k successes 1, 1/2, 1/4 with binomial weights 1/4, 1/2, 1/4.
        let access = AccessConfig::new(0.1, 1.0, 0.5).unwrap();
        let mu = primary_service_rate(&quiet_topology(2, 1.0), &access).unwrap();
        assert!(close(mu, 0.5625, 1e-15), "{mu}");
    }

    #[test]
    fn stability_boundary() {
        assert!(is_stable(0.2, 0.5));
        assert!(!is_stable(0.5, 0.5));
        assert!(!is_stable(0.0, 0.0));
        assert!(matches!(average_aoi(0.5, 0.5), Err(Error::Unstable { .. })));
        assert!(stationary_distribution(0.0, 0.5).is_err());
    }

    #[test]
    fn stationary_example() {
        let q = stationary_distribution(0.2, 0.5).unwrap();
        assert!(close(q.utilization_ratio, 0.25, 1e-15));
        assert!(close(q.prob_one, 0.3, 1e-15));
        assert!(close(q.prob_empty, 0.6, 1e-15));
        assert!(close(q.total_mass(), 1.0, 1e-15));
        let tail: f64 = (0..200).map(|n| q.prob(n)).sum();
        assert!(close(tail, 1.0, 1e-12));
    }

    #[test]
    fn system_time_examples() {
        assert!(close(system_time_pmf(0.2, 0.5, 1).unwrap(), 0.375, 1e-15));
        assert!(system_time_pmf(0.2, 0.5, 0).is_err());
        let (lambda, mu) = (0.35, 0.6);
        let mass: f64 = (1..2000).map(|t| system_time_pmf(lambda, mu, t).unwrap()).sum();
        let mean: f64 = (1..2000)
            .map(|t| t as f64 * system_time_pmf(lambda, mu, t).unwrap())
            .sum();
        assert!(close(mass, 1.0, 1e-12));
        assert!(close(mean, mean_system_time(lambda, mu).unwrap(), 1e-9));
    }

    #[test]
    fn wait_correlation_examples() {
        assert!(close(corr_wait_interarrival(0.2, 0.5).unwrap(), 4.0 / 3.0, 1e-12));
        assert_eq!(corr_wait_interarrival(0.4, 1.0).unwrap(), 0.0);
        for &(l, m) in &[(0.2, 0.5), (0.05, 0.9), (0.6, 0.61), (0.3, 0.35)] {
            let a = corr_wait_interarrival(l, m).unwrap();
            let b = corr_wait_interarrival_via_rho(l, m).unwrap();
            assert!(close(a, b, 1e-12 * a.max(1.0)), "{l} {m}: {a} vs {b}");
        }
    }

    /// Brute-force `E[W Y]` by summing the joint law: `W = (T' - Y)^+` with
    /// `T'` an independent copy of the system time and `Y` geometric.
    #[test]
    fn wait_correlation_matches_direct_summation() {
        for &(lambda, mu) in &[(0.2f64, 0.5f64), (0.1, 0.3), (0.45, 0.7)] {
            let mut total = 0.0;
            for y in 1..3000u64 {
                let fy = lambda * (1.0 - lambda).powf((y - 1) as f64);
                let mut excess = 0.0;
                for t in (y + 1)..(y + 3000) {
                    excess += (t - y) as f64 * system_time_pmf(lambda, mu, t).unwrap();
                }
                total += y as f64 * excess * fy;
            }
            let closed = corr_wait_interarrival(lambda, mu).unwrap();
            assert!(close(total, closed, 1e-8 * closed), "{total} vs {closed}");
        }
    }

    #[test]
    fn age_examples() {
        let age = average_aoi(0.2, 0.5).unwrap();
        assert!(close(age.average_age, 7.266_666_666_666_667, 1e-12), "{}", age.average_age);
        assert!(close(age.reassembled(), age.average_age, 1e-10));
        assert!(close(average_aoi(0.5, 1.0).unwrap().average_age, 3.0, 1e-12));
        let none = average_aoi(0.0, 0.5).unwrap();
        assert!(none.is_infinite());
    }

    #[test]
    fn optimal_rate_examples() {
        let boundary = optimal_arrival_rate(1.0).unwrap();
        assert!(boundary.at_boundary);
        assert_eq!(boundary.lambda, 1.0);
        assert!(optimal_arrival_rate(0.0).is_err());

        let opt = optimal_arrival_rate(0.5).unwrap();
        assert!(!opt.at_boundary);
        assert!(close(opt.lambda, 0.303, 5e-4), "{}", opt.lambda);
        assert!(optimal_rate_quartic(opt.lambda, 0.5).abs() < 1e-9);
        let best = average_aoi(opt.lambda, 0.5).unwrap().average_age;
        for eps in [1e-3, -1e-3] {
            assert!(average_aoi(opt.lambda + eps, 0.5).unwrap().average_age >= best);
        }
    }

    #[test]
    fn optimal_rate_matches_grid_argmin() {
        for mu in [0.3, 0.5, 0.8] {
            let root = optimal_arrival_rate(mu).unwrap().lambda;
            let mut best = (f64::INFINITY, 0.0);
            let mut k = 1;
            while (k as f64) * 1e-4 < mu {
                let lambda = k as f64 * 1e-4;
                let age = average_aoi(lambda, mu).unwrap().average_age;
                if age < best.0 {
                    best = (age, lambda);
                }
                k += 1;
            }
            assert!((root - best.1).abs() <= 2e-4, "mu={mu}: {root} vs {}", best.1);
        }
    }

    #[test]
    fn throughput_examples() {
        let topo = TopologySpec::reference(3, 5.0);
        let access = AccessConfig::new(0.2, 0.8, 0.0).unwrap();
        assert_eq!(secondary_throughput(&topo, &access).unwrap().secondary_per_node, 0.0);

        let access = AccessConfig::new(0.0, 0.8, 0.3).unwrap();
        let t = secondary_throughput(&topo, &access).unwrap();
        assert_eq!(t.secondary_per_node, t.silent_component);
        assert!(close(t.aggregate, 3.0 * t.secondary_per_node, 1e-15));

        let a = AccessConfig::new(0.2, 0.6, 0.3).unwrap();
        let b = AccessConfig::new(0.2, 1.0, 0.3).unwrap();
        let ta = secondary_throughput(&topo, &a).unwrap();
        let tb = secondary_throughput(&topo, &b).unwrap();
        assert!(close(ta.secondary_per_node, tb.secondary_per_node, 1e-12));
        assert!(ta.active_component <= ta.secondary_per_node);
        assert!(ta.secondary_per_node <= ta.silent_component);

        let unstable = AccessConfig::new(0.9, 0.5, 0.3).unwrap();
        assert!(secondary_throughput(&topo, &unstable).unwrap_err().is_infeasible());
    }

    #[test]
    fn aggregate_throughput_has_interior_optimum_in_n() {
        let access = AccessConfig::new(0.3, 1.0, 0.1).unwrap();
        let totals: Vec<f64> = (1..=60)
            .map(|n| {
                secondary_throughput(&TopologySpec::reference(n, -3.0), &access)
                    .unwrap()
                    .aggregate
            })
            .collect();
        let (arg, best) = totals
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert!(best > totals[0] && best > totals[59], "argmax N = {}", arg + 1);
    }

    #[test]
    fn service_rate_monotonicity() {
        let topo = TopologySpec::reference(5, 5.0);
        let tables = RateTables::new(&topo).unwrap();
        let mut prev = f64::MAX;
        for i in 0..=20 {
            let q_s = i as f64 / 20.0;
            let mu = tables.service_rate(0.7, q_s);
            assert!(mu <= prev + 1e-15);
            prev = mu;
        }
        let mut prev = -1.0;
        for i in 0..=20 {
            let mu = tables.service_rate(i as f64 / 20.0, 0.3);
            assert!(mu >= prev);
            prev = mu;
        }
        let mut prev = f64::MAX;
        for n in 0..30 {
            let mu = RateTables::new(&topo.with_secondaries(n)).unwrap().service_rate(0.7, 0.3);
            assert!(mu <= prev + 1e-15);
            prev = mu;
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn stable_pair() -> impl Strategy<Value = (f64, f64)> {
            (0.001f64..1.0, 0.001f64..0.999).prop_map(|(mu, frac)| (frac * mu, mu))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn reassembly_identity((lambda, mu) in stable_pair()) {
                let age = average_aoi(lambda, mu).unwrap();
                let scale = age.average_age.max(1.0);
                prop_assert!((age.reassembled() - age.average_age).abs() <= 1e-10 * scale);
                prop_assert!(age.average_age >= 1.0);
            }

            #[test]
            fn stationary_mass((lambda, mu) in stable_pair()) {
                let q = stationary_distribution(lambda, mu).unwrap();
                prop_assert!((q.prob_empty - (1.0 - lambda / mu)).abs() < 1e-12);
                prop_assert!((q.total_mass() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn throughput_independent_of_primary_access(
                n in 1usize..12,
                q_s in 0.0f64..1.0,
                qa in 0.05f64..1.0,
                qb in 0.05f64..1.0,
                frac in 0.0f64..0.99,
            ) {
                let topo = TopologySpec::reference(n, 5.0);
                let tables = RateTables::new(&topo).unwrap();
                let lambda = frac * tables.service_rate(qa.min(qb), q_s);
                let a = throughput_from_tables(&tables, &AccessConfig::new(lambda, qa, q_s).unwrap()).unwrap();
                let b = throughput_from_tables(&tables, &AccessConfig::new(lambda, qb, q_s).unwrap()).unwrap();
                prop_assert!((a.secondary_per_node - b.secondary_per_node).abs() <= 1e-12);
            }
        }

        #[test]
        fn age_is_convex_in_lambda() {
            let h = 1e-3;
            for mu in [0.3, 0.5, 0.8] {
                let mut lambda = h;
                while lambda + h < mu {
                    let f = |l: f64| average_aoi(l, mu).unwrap().average_age;
                    let second = f(lambda + h) - 2.0 * f(lambda) + f(lambda - h);
                    if lambda - h > 0.0 {
                        assert!(second >= -1e-6, "mu={mu} lambda={lambda}: {second}");
                    }
                    lambda += h;
                }
            }
        }
    }
}
