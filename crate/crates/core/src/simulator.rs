//! Monte Carlo validation of the analytic cost model.
//!
//! Detection cycles form a renewal-reward process: each cycle draws its
//! interval from the schedule policy, deadlocks arrive within the cycle as a
//! Poisson process, and the cycle's cost is one detection run plus the
//! resolution cost of every deadlock at its accumulated persistence time.
//! Cycles are independent, so the long-run mean average cost is the ratio of
//! expected cycle cost to expected cycle length, estimated here with
//! per-cycle random substreams.
//!
//! # Determinism
//!
//! Every cycle derives its own ChaCha substream from `(seed, cycle_index)`,
//! cycles are aggregated per fixed-size batch in cycle order, and batches are
//! merged in batch order. The estimate is therefore a pure function of
//! `(model, policy, cycles, seed)` — byte-identical no matter how many
//! threads the enclosing rayon pool uses.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Poisson, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost_model::{CostModel, IntervalDistribution};
use crate::error::{Error, Result};

/// Cycles aggregated per work item; part of the deterministic reduction
/// contract, so changing it changes results for the same seed.
pub const CYCLES_PER_BATCH: u64 = 8192;

/// Minimum cycle count for an estimate.
pub const MIN_CYCLES: u64 = 100;

/// Relative slack allowed before an analytic ordering violation is flagged.
pub const ORDER_REL_TOL: f64 = 1e-9;

/// Relative tolerance for matching a distribution's mean to the fixed interval.
pub const MEAN_MATCH_REL_TOL: f64 = 1e-12;

/// How detection runs are scheduled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum SchedulePolicy {
    /// Coordinated scheduling: one detection every `interval` seconds.
    Fixed { interval: f64 },
    /// Uncoordinated scheduling: iid interarrival times drawn from `dist`.
    Renewal { dist: IntervalDistribution },
}

impl SchedulePolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Fixed { interval } => {
                if !(interval.is_finite() && *interval > 0.0) {
                    return Err(Error::InvalidInterval { t: *interval });
                }
                Ok(())
            }
            Self::Renewal { dist } => dist.validate(),
        }
    }

    /// A renewal policy with a degenerate distribution is the fixed policy;
    /// both normalize to the same code path so they agree bit for bit.
    fn as_fixed(&self) -> Option<f64> {
        match self {
            Self::Fixed { interval } => Some(*interval),
            Self::Renewal {
                dist: IntervalDistribution::Deterministic { value },
            } => Some(*value),
            Self::Renewal { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Fixed { interval } => format!("fixed({interval})"),
            Self::Renewal { dist } => dist.label(),
        }
    }
}

/// One simulated detection cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleOutcome {
    /// Realized detection interval.
    pub length: f64,
    /// Deadlocks formed within the cycle.
    pub arrivals: u64,
    /// `C_D` plus the resolution cost of each deadlock at its persistence time.
    pub cost: f64,
}

/// Monte Carlo estimate of the long-run mean average cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean_cost_rate: f64,
    pub std_error: f64,
    pub cycles: u64,
    pub seed: u64,
    /// Total simulated seconds across all cycles.
    pub total_sim_time: f64,
}

/// Independent ChaCha substream for one cycle.
fn substream(seed: u64, cycle: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cycle);
    rng
}

/// Accrue one cycle's cost.
///
/// Given the Poisson count, arrival instants are iid uniform on the cycle by
/// the order-statistics property, so each persistence time `length − Sᵢ` is
/// itself uniform on `[0, length)` and is drawn directly.
#[inline]
fn accrue_cycle<R: Rng>(
    model: &CostModel,
    poisson: Option<&Poisson<f64>>,
    interval: f64,
    rng: &mut R,
) -> CycleOutcome {
    let mut cost = model.detection_cost;
    let mut arrivals = 0u64;
    if let Some(p) = poisson {
        let count = p.sample(rng) as u64;
        arrivals = count;
        for _ in 0..count {
            let persistence = rng.random_range(0.0..interval);
            cost += model.resolution.eval_unchecked(persistence);
        }
    }
    CycleOutcome {
        length: interval,
        arrivals,
        cost,
    }
}

/// Simulate a single detection cycle of the given length.
pub fn simulate_cycle<R: Rng>(
    model: &CostModel,
    interval: f64,
    rng: &mut R,
) -> Result<CycleOutcome> {
    model.validate()?;
    if !(interval.is_finite() && interval > 0.0) {
        return Err(Error::InvalidInterval { t: interval });
    }
    let mean = model.lambda * interval;
    let poisson = if mean > 0.0 {
        Some(Poisson::new(mean).expect("positive finite mean"))
    } else {
        None
    };
    Ok(accrue_cycle(model, poisson.as_ref(), interval, rng))
}

// ---------------------------------------------------------------------------
// Streaming moments
// ---------------------------------------------------------------------------

/// Bivariate streaming moments of (cost, length), Welford updates with
/// pairwise merging. Exact zeros for constant streams, which keeps the
/// zero-rate fixed policy's standard error at literal 0.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean_cost: f64,
    mean_len: f64,
    m2_cost: f64,
    m2_len: f64,
    co_cl: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, cost: f64, len: f64) {
        self.count += 1;
        let k = self.count as f64;
        let dc = cost - self.mean_cost;
        let dl = len - self.mean_len;
        self.mean_cost += dc / k;
        self.mean_len += dl / k;
        let dc2 = cost - self.mean_cost;
        let dl2 = len - self.mean_len;
        self.m2_cost += dc * dc2;
        self.m2_len += dl * dl2;
        self.co_cl += dc * dl2;
    }

    fn merge(a: Self, b: Self) -> Self {
        if a.count == 0 {
            return b;
        }
        if b.count == 0 {
            return a;
        }
        let na = a.count as f64;
        let nb = b.count as f64;
        let n = na + nb;
        let dc = b.mean_cost - a.mean_cost;
        let dl = b.mean_len - a.mean_len;
        Self {
            count: a.count + b.count,
            mean_cost: a.mean_cost + dc * nb / n,
            mean_len: a.mean_len + dl * nb / n,
            m2_cost: a.m2_cost + b.m2_cost + dc * dc * na * nb / n,
            m2_len: a.m2_len + b.m2_len + dl * dl * na * nb / n,
            co_cl: a.co_cl + b.co_cl + dc * dl * na * nb / n,
        }
    }
}

/// Map cycle indices to per-batch moments in parallel, then merge the batch
/// results in batch order. The reduction tree is fixed by cycle index, never
/// by thread timing.
fn batched_moments<F>(cycles: u64, per_cycle: F) -> Moments
where
    F: Fn(u64, &mut Moments) + Sync,
{
    let batches = cycles.div_ceil(CYCLES_PER_BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * CYCLES_PER_BATCH;
            let end = ((b + 1) * CYCLES_PER_BATCH).min(cycles);
            let mut m = Moments::default();
            for i in start..end {
                per_cycle(i, &mut m);
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge)
}

enum IntervalSampler {
    Exponential(Exp<f64>),
    Uniform(Uniform<f64>),
    Gamma(Gamma<f64>),
}

impl IntervalSampler {
    fn new(dist: &IntervalDistribution) -> Result<Self> {
        dist.validate()?;
        Ok(match dist {
            IntervalDistribution::Exponential { mean } => {
                Self::Exponential(Exp::new(1.0 / mean).expect("positive rate"))
            }
            IntervalDistribution::Uniform { lo, hi } => {
                Self::Uniform(Uniform::new(*lo, *hi).expect("valid bounds"))
            }
            IntervalDistribution::Gamma { shape, scale } => {
                Self::Gamma(Gamma::new(*shape, *scale).expect("valid gamma"))
            }
            IntervalDistribution::Deterministic { .. } => {
                unreachable!("deterministic policies run on the fixed path")
            }
        })
    }

    #[inline]
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Exponential(d) => d.sample(rng),
            Self::Uniform(d) => d.sample(rng),
            Self::Gamma(d) => d.sample(rng),
        }
    }
}

/// Estimate the long-run mean average cost of a schedule policy.
///
/// Fixed policy: the estimate is the mean of `cost/interval` with its CLT
/// standard error; the cycle length is a known constant, not estimated.
/// Renewal policy: the renewal-reward ratio estimator `Σcost / Σlength`
/// with a delta-method standard error.
pub fn estimate_cost_rate(
    model: &CostModel,
    policy: &SchedulePolicy,
    cycles: u64,
    seed: u64,
) -> Result<SimEstimate> {
    model.validate()?;
    policy.validate()?;
    if cycles < MIN_CYCLES {
        return Err(Error::TooFewCycles {
            min: MIN_CYCLES,
            got: cycles,
        });
    }

    if let Some(interval) = policy.as_fixed() {
        let mean = model.lambda * interval;
        let poisson = if mean > 0.0 {
            Some(Poisson::new(mean).expect("positive finite mean"))
        } else {
            None
        };
        let m = batched_moments(cycles, |i, acc| {
            let mut rng = substream(seed, i);
            let outcome = accrue_cycle(model, poisson.as_ref(), interval, &mut rng);
            acc.push(outcome.cost, outcome.length);
        });
        let n = m.count as f64;
        let var_cost = if m.count > 1 {
            (m.m2_cost / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        return Ok(SimEstimate {
            mean_cost_rate: m.mean_cost / interval,
            std_error: (var_cost / n).sqrt() / interval,
            cycles,
            seed,
            total_sim_time: interval * n,
        });
    }

    let SchedulePolicy::Renewal { dist } = policy else {
        unreachable!("fixed handled above")
    };
    let sampler = IntervalSampler::new(dist)?;
    let lambda = model.lambda;
    let m = batched_moments(cycles, |i, acc| {
        let mut rng = substream(seed, i);
        let interval = sampler.sample(&mut rng);
        let mean = lambda * interval;
        let poisson = if mean > 0.0 { Poisson::new(mean).ok() } else { None };
        let outcome = accrue_cycle(model, poisson.as_ref(), interval, &mut rng);
        acc.push(outcome.cost, outcome.length);
    });
    let n = m.count as f64;
    let ratio = m.mean_cost / m.mean_len;
    // Var(C̄/Ȳ) ≈ (σ_C² − 2R·σ_CY + R²·σ_Y²) / (n·Ȳ²)
    let (s_cc, s_yy, s_cy) = if m.count > 1 {
        (
            m.m2_cost / (n - 1.0),
            m.m2_len / (n - 1.0),
            m.co_cl / (n - 1.0),
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    let var_ratio = ((s_cc - 2.0 * ratio * s_cy + ratio * ratio * s_yy) / n
        / (m.mean_len * m.mean_len))
        .max(0.0);
    Ok(SimEstimate {
        mean_cost_rate: ratio,
        std_error: var_ratio.sqrt(),
        cycles,
        seed,
        total_sim_time: m.mean_len * n,
    })
}

// ---------------------------------------------------------------------------
// Policy comparison
// ---------------------------------------------------------------------------

/// One row of a fixed-vs-random comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub policy: String,
    /// Closed-form / quadrature value of the policy's long-run cost.
    pub analytic: f64,
    pub estimate: SimEstimate,
    /// `analytic − analytic_fixed`.
    pub analytic_delta: f64,
    /// The simulated estimate undercuts the simulated fixed policy by more
    /// than three combined standard errors.
    pub simulated_violation: bool,
    /// The analytic value undercuts the fixed policy beyond [`ORDER_REL_TOL`] —
    /// an ordering violation that indicates a bug, not noise.
    pub analytic_violation: bool,
}

/// Fixed policy versus matched-mean random policies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyComparison {
    pub fixed_interval: f64,
    /// Row 0 is the fixed policy, followed by one row per distribution in
    /// input order.
    pub rows: Vec<ComparisonRow>,
}

impl PolicyComparison {
    pub fn any_analytic_violation(&self) -> bool {
        self.rows.iter().any(|r| r.analytic_violation)
    }

    pub fn any_simulated_violation(&self) -> bool {
        self.rows.iter().any(|r| r.simulated_violation)
    }
}

/// Compare the fixed policy at `fixed_interval` against random policies with
/// the same mean. Every distribution's mean must match the fixed interval to
/// [`MEAN_MATCH_REL_TOL`]. All rows share the same seed, so the degenerate
/// distribution reproduces the fixed row exactly.
pub fn compare_policies(
    model: &CostModel,
    fixed_interval: f64,
    dists: &[IntervalDistribution],
    cycles: u64,
    seed: u64,
) -> Result<PolicyComparison> {
    model.validate()?;
    for dist in dists {
        dist.validate()?;
        let mean = dist.mean();
        let rel = (mean - fixed_interval).abs() / fixed_interval;
        if rel > MEAN_MATCH_REL_TOL {
            return Err(Error::MeanMismatch {
                mean,
                expected: fixed_interval,
                rel,
            });
        }
    }

    let fixed_policy = SchedulePolicy::Fixed {
        interval: fixed_interval,
    };
    let fixed_analytic = model.mean_cost_rate(fixed_interval)?;
    let fixed_estimate = estimate_cost_rate(model, &fixed_policy, cycles, seed)?;
    let mut rows = vec![ComparisonRow {
        policy: fixed_policy.label(),
        analytic: fixed_analytic,
        estimate: fixed_estimate.clone(),
        analytic_delta: 0.0,
        simulated_violation: false,
        analytic_violation: false,
    }];

    for dist in dists {
        let analytic = model.random_schedule_cost(dist)?;
        let policy = SchedulePolicy::Renewal { dist: dist.clone() };
        let estimate = estimate_cost_rate(model, &policy, cycles, seed)?;
        let combined_se = (estimate.std_error.powi(2) + fixed_estimate.std_error.powi(2)).sqrt();
        let simulated_violation = estimate.mean_cost_rate
            < fixed_estimate.mean_cost_rate - 3.0 * combined_se;
        let analytic_violation = analytic < fixed_analytic * (1.0 - ORDER_REL_TOL);
        rows.push(ComparisonRow {
            policy: policy.label(),
            analytic,
            analytic_delta: analytic - fixed_analytic,
            estimate,
            simulated_violation,
            analytic_violation,
        });
    }

    Ok(PolicyComparison {
        fixed_interval,
        rows,
    })
}
