//! Constrained optimization over the access probabilities `(q_pr, q_s)` and
//! full-factorial parameter sweeps.
//!
//! Both problems are solved by exhaustive evaluation of the closed forms on
//! a coarse grid followed by `refine_rounds` zooms around the incumbent.
//! Each zoom covers one previous step on either side at a step
//! `refine_factor` times finer. Evaluation is parallel over `q_s` rows and
//! merged in index order, so results do not depend on thread count.
//!
//! Ties are broken towards the smallest `q_s`, then the smallest `q_pr`.
//! For throughput maximization, where `mu_s` does not depend on `q_pr`
//! over the stable region, equal throughputs are first separated by the
//! smaller age.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{average_aoi, is_stable, RateTables};
use crate::phy::TopologySpec;

/// Relative tolerance under which two objective values count as equal.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub coarse_step: f64,
    pub refine_factor: u32,
    pub refine_rounds: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            coarse_step: 0.01,
            refine_factor: 10,
            refine_rounds: 2,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.coarse_step > 0.0 && self.coarse_step <= 0.1) {
            return Err(Error::InvalidParameter {
                name: "coarse_step",
                value: self.coarse_step,
                reason: "must lie in (0, 0.1]",
            });
        }
        if self.refine_factor < 2 {
            return Err(Error::InvalidParameter {
                name: "refine_factor",
                value: self.refine_factor as f64,
                reason: "must be >= 2",
            });
        }
        Ok(())
    }

    /// Coarse grid points on `[0, 1]`, always including both ends.
    pub fn coarse_points(&self) -> Vec<f64> {
        let n = (1.0 / self.coarse_step + 1e-9).floor() as usize;
        let mut points: Vec<f64> = (0..=n).map(|i| (i as f64 * self.coarse_step).min(1.0)).collect();
        if points.last().is_some_and(|&p| p < 1.0 - 1e-12) {
            points.push(1.0);
        }
        points
    }

    /// Final resolution after all refinement rounds.
    pub fn resolution(&self) -> f64 {
        self.coarse_step / (self.refine_factor as f64).powi(self.refine_rounds as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `lambda < mu`.
    Stability,
    /// `mu_total >= mu_min`.
    Throughput,
    /// `Delta <= Delta_max`.
    Age,
    /// `Delta >= 0`; implied by `Delta >= 1`, never binding.
    AgeNonNegative,
}

impl Constraint {
    pub fn as_str(&self) -> &'static str {
        match self {
            Constraint::Stability => "stability",
            Constraint::Throughput => "throughput",
            Constraint::Age => "age",
            Constraint::AgeNonNegative => "age_nonnegative",
        }
    }
}

/// The closed-form metrics at one `(q_pr, q_s)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub q_pr: f64,
    pub q_s: f64,
    pub mu: f64,
    /// `None` when the primary queue is unstable.
    pub mu_s: Option<f64>,
    pub mu_total: Option<f64>,
    pub delta: Option<f64>,
}

impl Evaluation {
    pub fn is_stable(&self) -> bool {
        self.delta.is_some()
    }
}

/// Closed-form evaluator for one topology and arrival rate.
#[derive(Debug, Clone)]
pub struct Evaluator {
    tables: RateTables,
    lambda: f64,
}

struct Row {
    q_s: f64,
    primary_success: f64,
    silent: f64,
    active: f64,
}

impl Evaluator {
    pub fn new(topology: &TopologySpec, lambda: f64) -> Result<Self> {
        Ok(Self {
            tables: RateTables::new(topology)?,
            lambda,
        })
    }

    pub fn from_tables(tables: RateTables, lambda: f64) -> Self {
        Self { tables, lambda }
    }

    fn row(&self, q_s: f64) -> Row {
        let (silent, active) = self.tables.secondary_components(q_s);
        Row {
            q_s,
            primary_success: self.tables.primary_success(q_s),
            silent,
            active,
        }
    }

    fn eval_row(&self, row: &Row, q_pr: f64) -> Evaluation {
        let mu = q_pr * row.primary_success;
        let lambda = self.lambda;
        let mut eval = Evaluation {
            q_pr,
            q_s: row.q_s,
            mu,
            mu_s: None,
            mu_total: None,
            delta: None,
        };
        if is_stable(lambda, mu) {
            let busy = lambda / mu;
            let mu_s = row.silent * (1.0 - busy) + (1.0 - q_pr) * row.silent * busy + q_pr * row.active * busy;
            eval.mu_s = Some(mu_s);
            eval.mu_total = Some(self.tables.n_secondary() as f64 * mu_s);
            eval.delta = average_aoi(lambda, mu).ok().map(|a| a.average_age);
        }
        eval
    }

    pub fn evaluate(&self, q_pr: f64, q_s: f64) -> Evaluation {
        self.eval_row(&self.row(q_s), q_pr)
    }
}

/// Which of the two problems to solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "problem")]
pub enum Problem {
    /// Minimize the age subject to `mu_total >= mu_min`.
    MinAge { mu_min: f64 },
    /// Maximize `mu_total` subject to `Delta <= delta_max`.
    MaxThroughput { delta_max: f64 },
}

impl Problem {
    fn violated(&self, e: &Evaluation) -> Option<Constraint> {
        let (Some(delta), Some(mu_total)) = (e.delta, e.mu_total) else {
            return Some(Constraint::Stability);
        };
        match *self {
            Problem::MinAge { mu_min } if mu_total < mu_min => Some(Constraint::Throughput),
            Problem::MaxThroughput { delta_max } if delta > delta_max => Some(Constraint::Age),
            _ => None,
        }
    }

    fn objective(&self, e: &Evaluation) -> f64 {
        match self {
            Problem::MinAge { .. } => e.delta.unwrap_or(f64::INFINITY),
            Problem::MaxThroughput { .. } => e.mu_total.unwrap_or(f64::NEG_INFINITY),
        }
    }

    /// True when `a` strictly beats `b`.
    fn better(&self, a: &Evaluation, b: &Evaluation) -> bool {
        let (oa, ob) = (self.objective(a), self.objective(b));
        let tol = TIE_TOLERANCE * ob.abs().max(1.0);
        match self {
            Problem::MinAge { .. } => oa < ob - tol,
            Problem::MaxThroughput { .. } => {
                if oa > ob + tol {
                    return true;
                }
                let (da, db) = (a.delta.unwrap_or(f64::INFINITY), b.delta.unwrap_or(f64::INFINITY));
                oa >= ob - tol && da < db - TIE_TOLERANCE * db.abs().max(1.0)
            }
        }
    }

    fn relaxed(&self) -> Problem {
        match self {
            Problem::MinAge { .. } => Problem::MinAge { mu_min: 0.0 },
            Problem::MaxThroughput { .. } => Problem::MaxThroughput {
                delta_max: f64::INFINITY,
            },
        }
    }

    fn own_constraint(&self) -> Constraint {
        match self {
            Problem::MinAge { .. } => Constraint::Throughput,
            Problem::MaxThroughput { .. } => Constraint::Age,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub problem: Problem,
    pub lambda: f64,
    pub n_secondary: usize,
    pub feasible: bool,
    pub q_pr_opt: Option<f64>,
    pub q_s_opt: Option<f64>,
    /// Age in slots (min-age) or aggregate throughput (max-throughput).
    pub objective: Option<f64>,
    /// Metrics at the optimum.
    pub at_optimum: Option<Evaluation>,
    /// For feasible solutions, constraints whose removal would improve the
    /// objective. For infeasible ones, the constraint that rules out every
    /// grid point: stability when no point is stable, otherwise the
    /// problem's own constraint.
    pub binding_constraints: Vec<Constraint>,
    /// Constraints checked and found slack.
    pub slack_constraints: Vec<Constraint>,
    pub evaluations: usize,
}

struct Search {
    best: Option<Evaluation>,
    any_stable: bool,
    evaluations: usize,
}

fn scan(evaluator: &Evaluator, problem: &Problem, q_prs: &[f64], q_ss: &[f64]) -> Search {
    let rows: Vec<(Option<Evaluation>, bool)> = q_ss
        .par_iter()
        .map(|&q_s| {
            let row = evaluator.row(q_s);
            let mut best: Option<Evaluation> = None;
            let mut any_stable = false;
            for &q_pr in q_prs {
                let e = evaluator.eval_row(&row, q_pr);
                any_stable |= e.is_stable();
                if problem.violated(&e).is_none() && best.as_ref().is_none_or(|b| problem.better(&e, b)) {
                    best = Some(e);
                }
            }
            (best, any_stable)
        })
        .collect();
    let mut search = Search {
        best: None,
        any_stable: false,
        evaluations: q_prs.len() * q_ss.len(),
    };
    for (row_best, any_stable) in rows {
        search.any_stable |= any_stable;
        if let Some(e) = row_best {
            if search.best.as_ref().is_none_or(|b| problem.better(&e, b)) {
                search.best = Some(e);
            }
        }
    }
    search
}

fn window(center: f64, step: f64, factor: u32) -> Vec<f64> {
    let fine = step / factor as f64;
    let f = factor as i64;
    (-f..=f)
        .map(|j| center + j as f64 * fine)
        .filter(|&q| (-1e-12..=1.0 + 1e-12).contains(&q))
        .map(|q| q.clamp(0.0, 1.0))
        .collect()
}

fn search(evaluator: &Evaluator, problem: &Problem, grid: &GridSpec) -> Search {
    let coarse = grid.coarse_points();
    let mut result = scan(evaluator, problem, &coarse, &coarse);
    let mut step = grid.coarse_step;
    for _ in 0..grid.refine_rounds {
        let Some(incumbent) = result.best else { break };
        let q_prs = window(incumbent.q_pr, step, grid.refine_factor);
        let q_ss = window(incumbent.q_s, step, grid.refine_factor);
        let local = scan(evaluator, problem, &q_prs, &q_ss);
        result.evaluations += local.evaluations;
        if let Some(candidate) = local.best {
            if problem.better(&candidate, &incumbent) {
                result.best = Some(candidate);
            }
        }
        step /= grid.refine_factor as f64;
    }
    result
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "must lie in (0, 1)",
        })
    }
}

/// Solves `problem` for one topology and arrival rate.
pub fn solve(topology: &TopologySpec, lambda: f64, problem: Problem, grid: &GridSpec) -> Result<Solution> {
    check_lambda(lambda)?;
    grid.validate()?;
    match problem {
        Problem::MinAge { mu_min } if !(mu_min >= 0.0) => {
            return Err(Error::InvalidParameter {
                name: "mu_min",
                value: mu_min,
                reason: "must be >= 0",
            })
        }
        Problem::MaxThroughput { delta_max } if !(delta_max >= 1.0) => {
            return Err(Error::InvalidParameter {
                name: "delta_max",
                value: delta_max,
                reason: "must be >= 1",
            })
        }
        _ => {}
    }
    let evaluator = Evaluator::new(topology, lambda)?;
    Ok(solve_with(&evaluator, problem, grid))
}

pub fn solve_with(evaluator: &Evaluator, problem: Problem, grid: &GridSpec) -> Solution {
    let found = search(evaluator, &problem, grid);
    let mut solution = Solution {
        problem,
        lambda: evaluator.lambda,
        n_secondary: evaluator.tables.n_secondary(),
        feasible: found.best.is_some(),
        q_pr_opt: None,
        q_s_opt: None,
        objective: None,
        at_optimum: None,
        binding_constraints: Vec::new(),
        slack_constraints: Vec::new(),
        evaluations: found.evaluations,
    };
    let Some(best) = found.best else {
        solution.binding_constraints.push(if found.any_stable {
            problem.own_constraint()
        } else {
            Constraint::Stability
        });
        return solution;
    };
    solution.q_pr_opt = Some(best.q_pr);
    solution.q_s_opt = Some(best.q_s);
    solution.objective = Some(problem.objective(&best));
    solution.at_optimum = Some(best);

    let relaxed = problem.relaxed();
    let unconstrained = search(evaluator, &relaxed, grid);
    solution.evaluations += unconstrained.evaluations;
    let own = problem.own_constraint();
    let improves = unconstrained.best.is_some_and(|u| {
        let (ou, ob) = (problem.objective(&u), problem.objective(&best));
        let tol = TIE_TOLERANCE * ob.abs().max(1.0);
        match problem {
            Problem::MinAge { .. } => ou < ob - tol,
            Problem::MaxThroughput { .. } => ou > ob + tol,
        }
    });
    if improves {
        solution.binding_constraints.push(own);
    } else {
        solution.slack_constraints.push(own);
    }
    solution.slack_constraints.push(Constraint::AgeNonNegative);
    solution
}

pub fn min_age_subject_to_throughput(
    topology: &TopologySpec,
    lambda: f64,
    mu_min: f64,
    grid: &GridSpec,
) -> Result<Solution> {
    solve(topology, lambda, Problem::MinAge { mu_min }, grid)
}

pub fn max_throughput_subject_to_age(
    topology: &TopologySpec,
    lambda: f64,
    delta_max: f64,
    grid: &GridSpec,
) -> Result<Solution> {
    solve(topology, lambda, Problem::MaxThroughput { delta_max }, grid)
}

/// Explicit list of values along one sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis(pub Vec<f64>);

impl Axis {
    pub fn fixed(value: f64) -> Self {
        Axis(vec![value])
    }

    /// `start, start + step, ...` up to and including `stop` (within 1e-9).
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::InvalidParameter {
                name: "step",
                value: step,
                reason: "axis needs step > 0 and stop >= start",
            });
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok(Axis((0..=n).map(|i| start + i as f64 * step).collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub lambda: Axis,
    pub q_pr: Axis,
    pub q_s: Axis,
    pub n_secondary: Vec<usize>,
    pub mu_min: Option<f64>,
    pub delta_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub q_pr: f64,
    pub q_s: f64,
    pub n_secondary: usize,
    pub mu: f64,
    pub mu_s: Option<f64>,
    pub mu_total: Option<f64>,
    pub delta: Option<f64>,
    pub feasible: bool,
    /// Why an infeasible point fails.
    pub binding: Option<Constraint>,
}

/// Full-factorial evaluation, ordered by `N`, then `lambda`, `q_pr`, `q_s`.
/// Infeasible points are kept and marked.
pub fn sweep(topology: &TopologySpec, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    for axis in [&spec.lambda, &spec.q_pr, &spec.q_s] {
        for &v in &axis.0 {
            crate::error::check_probability("axis value", v)?;
        }
    }
    let blocks = spec
        .n_secondary
        .par_iter()
        .map(|&n| -> Result<Vec<SweepRow>> {
            let tables = RateTables::new(&topology.with_secondaries(n))?;
            let mut rows = Vec::new();
            for &lambda in &spec.lambda.0 {
                let evaluator = Evaluator::from_tables(tables.clone(), lambda);
                let rows_by_qs: Vec<Row> = spec.q_s.0.iter().map(|&q_s| evaluator.row(q_s)).collect();
                for &q_pr in &spec.q_pr.0 {
                    for row in &rows_by_qs {
                        let e = evaluator.eval_row(row, q_pr);
                        let binding = sweep_violation(&e, spec);
                        rows.push(SweepRow {
                            lambda,
                            q_pr,
                            q_s: row.q_s,
                            n_secondary: n,
                            mu: e.mu,
                            mu_s: e.mu_s,
                            mu_total: e.mu_total,
                            delta: e.delta,
                            feasible: binding.is_none(),
                            binding,
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

fn sweep_violation(e: &Evaluation, spec: &SweepSpec) -> Option<Constraint> {
    let (Some(delta), Some(mu_total)) = (e.delta, e.mu_total) else {
        return Some(Constraint::Stability);
    };
    if spec.mu_min.is_some_and(|m| mu_total < m) {
        return Some(Constraint::Throughput);
    }
    if spec.delta_max.is_some_and(|d| delta > d) {
        return Some(Constraint::Age);
    }
    None
}

/// Solves `problem` for every `(N, lambda)` combination, ordered by `N`
/// then `lambda`.
pub fn solve_sweep(
    topology: &TopologySpec,
    problem: Problem,
    n_secondary: &[usize],
    lambdas: &[f64],
    grid: &GridSpec,
) -> Result<Vec<Solution>> {
    let mut out = Vec::with_capacity(n_secondary.len() * lambdas.len());
    for &n in n_secondary {
        let topo = topology.with_secondaries(n);
        for &lambda in lambdas {
            out.push(solve(&topo, lambda, problem, grid)?);
        }
    }
    Ok(out)
}


#[cfg(test)]
mod sweep_claims {
    use super::*;

    /// Change in the age across one final-resolution step in `q_s` at the
    /// optimum: the amount by which a grid solution can sit off the exact
    /// constraint boundary.
    fn grid_slack(topo: &TopologySpec, s: &Solution, grid: &GridSpec) -> f64 {
        let eval = Evaluator::new(topo, s.lambda).unwrap();
        let (q_pr, q_s) = (s.q_pr_opt.unwrap(), s.q_s_opt.unwrap());
        let here = eval.evaluate(q_pr, q_s).delta.unwrap();
        let below = eval.evaluate(q_pr, (q_s - grid.resolution()).max(0.0)).delta.unwrap();
        (here - below).abs()
    }

    /// Exact minimum age at `q_pr = 1`: the smallest `q_s` meeting the
    /// throughput floor, found by bisection below the throughput peak.
    fn exact_min_age(topo: &TopologySpec, lambda: f64, mu_min: f64) -> f64 {
        let eval = Evaluator::new(topo, lambda).unwrap();
        let total = |q: f64| eval.evaluate(1.0, q).mu_total.unwrap_or(0.0);
        let mut hi = (0..=1000).map(|i| i as f64 / 1000.0).fold(0.0, |a: f64, q| if total(q) > total(a) { q } else { a });
        assert!(total(hi) >= mu_min);
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total(mid) >= mu_min {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        eval.evaluate(1.0, hi).delta.unwrap()
    }

    #[test]
    fn min_age_grows_with_secondaries() {
        let grid = GridSpec::default();
        let base = TopologySpec::reference(1, 5.0);
        let ns: Vec<usize> = (1..=12).collect();
        let sols = solve_sweep(&base, Problem::MinAge { mu_min: 0.1 }, &ns, &[0.2], &grid).unwrap();
        let mut prev: Option<(f64, f64)> = None;
        let mut exact_prev = 0.0;
        for s in &sols {
            let topo = base.with_secondaries(s.n_secondary);
            let o = s.objective.expect("feasible");
            let slack = grid_slack(&topo, s, &grid);
            if let Some((p, p_slack)) = prev {
                assert!(o >= p - slack - p_slack, "N={}: {o} < {p}", s.n_secondary);
            }
            prev = Some((o, slack));

            let exact = exact_min_age(&topo, 0.2, 0.1);
            assert!(exact > exact_prev, "N={}: exact {exact} <= {exact_prev}", s.n_secondary);
            assert!(o >= exact - 1e-12 && o <= exact + slack + 1e-12);
            exact_prev = exact;
        }
    }

    #[test]
    fn min_age_falls_with_arrival_rate_where_feasible() {
        let grid = GridSpec::default();
        let base = TopologySpec::reference(3, 5.0);
        let lambdas: Vec<f64> = (1..=9).map(|i| i as f64 * 0.05).collect();
        let sols = solve_sweep(&base, Problem::MinAge { mu_min: 0.1 }, &[3], &lambdas, &grid).unwrap();
        let feasible: Vec<f64> = sols.iter().filter_map(|s| s.objective).collect();
        assert!(feasible.len() >= 5);
        assert!(feasible.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn throughput_optimum_uses_full_primary_access() {
        let grid = GridSpec::default();
        for gamma in [5.0, -3.0] {
            let base = TopologySpec::reference(1, gamma);
            let ns: Vec<usize> = (1..=10).collect();
            for delta_max in [5.0, 8.0, 20.0] {
                let sols = solve_sweep(&base, Problem::MaxThroughput { delta_max }, &ns, &[0.2], &grid).unwrap();
                for s in sols.iter().filter(|s| s.feasible) {
                    assert_eq!(s.q_pr_opt, Some(1.0), "{gamma} {delta_max} N={}", s.n_secondary);
                }
            }
        }
    }
}
