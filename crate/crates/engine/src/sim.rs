//! Statistical model checking: seeded Monte-Carlo estimation of probability
//! and reward properties on the explicit model. Discrete-time models step
//! through the uniform-choice semantics, CTMCs sample exponential sojourns,
//! and MDP nondeterminism is resolved uniformly at random (reported as such
//! in the result).

use admc_prism::ast::ModelType;
use admc_prism::props::{PathForm, PropAst, ProbBound, RewardGoal, SForm, TimeBound};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::build::ExplicitModel;
use crate::check::{CheckError, Checker};

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub runs: u64,
    pub seed: u64,
    /// Cap on simulated steps per run; runs that hit it are counted in
    /// `horizon_hits` rather than silently dropped.
    pub horizon: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { runs: 10_000, seed: 0, horizon: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub mean: f64,
    /// Half-width of the 95% confidence interval (1.96·s/√n).
    pub half_width: f64,
    pub runs: u64,
    /// Runs stopped by the step horizon before the formula was decided; they
    /// contribute their value-so-far (0 for undecided reachability).
    pub horizon_hits: u64,
    /// Set when MDP nondeterminism was resolved by the uniform scheduler.
    pub uniform_scheduler: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("cannot simulate this property: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Check(#[from] CheckError),
}

struct SimChoice {
    branches: Vec<(usize, f64)>,
    total: f64,
    reward: f64,
}

enum Task {
    /// Probability of a path formula: φ U ψ with an optional bound.
    Reach { phi: Vec<bool>, psi: Vec<bool>, bound: Option<f64>, exact: bool },
    /// Reward accumulated until the bound.
    Cumulative { bound: f64 },
    /// Reward accumulated until ψ is reached.
    ReachReward { psi: Vec<bool> },
}

/// Estimates a property by simulation. Results are deterministic for a given
/// seed, run count, and horizon.
pub fn simulate(
    em: &ExplicitModel,
    labels: &[(String, SForm)],
    prop: &PropAst,
    opts: SimOptions,
) -> Result<SimResult, SimError> {
    let checker = Checker::new(em, labels)?;
    let continuous = em.model_type == ModelType::Ctmc;

    let (task, reward_index) = match prop {
        PropAst::Prob { bound, path } => {
            match (em.model_type, bound) {
                (ModelType::Mdp, ProbBound::Query) => {
                    return Err(SimError::Check(CheckError::TypeMismatch(
                        "P=? is ambiguous on an mdp; use Pmax=? or Pmin=?".to_string(),
                    )))
                }
                (ModelType::Dtmc | ModelType::Ctmc, ProbBound::Max | ProbBound::Min) => {
                    return Err(SimError::Check(CheckError::TypeMismatch(
                        "Pmax/Pmin apply to mdp models; use P=? here".to_string(),
                    )))
                }
                _ => {}
            }
            let (phi, psi, tb) = match path {
                PathForm::Eventually(sf, tb) => (None, sf, tb),
                PathForm::Until(phi, psi, tb) => (Some(phi), psi, tb),
            };
            let psi = checker.sat_states(psi)?;
            let phi = match phi {
                None => vec![true; em.state_count()],
                Some(sf) => checker.sat_states(sf)?,
            };
            let (bound, exact) = match tb {
                None => (None, false),
                Some(TimeBound::Le(r)) => (Some(bound_value(r, continuous)?), false),
                Some(TimeBound::Eq(r)) => (Some(bound_value(r, continuous)?), true),
            };
            (Task::Reach { phi, psi, bound, exact }, None)
        }
        PropAst::Reward { name, goal } => {
            let ri = match name.as_deref() {
                Some(n) => checker
                    .model()
                    .reward_index(n)
                    .ok_or_else(|| CheckError::UnknownReward(n.to_string()))?,
                None => match em.reward_names.len() {
                    1 => 0,
                    0 => return Err(SimError::Check(CheckError::UnknownReward(
                        "<default>".to_string(),
                    ))),
                    k => return Err(SimError::Check(CheckError::AmbiguousReward(k))),
                },
            };
            let task = match goal {
                RewardGoal::Cumulative(r) => {
                    Task::Cumulative { bound: bound_value(r, continuous)? }
                }
                RewardGoal::Reach(sf) => Task::ReachReward { psi: checker.sat_states(sf)? },
            };
            (task, Some(ri))
        }
        other => {
            return Err(SimError::Unsupported(format!(
                "only P and R properties can be simulated, not {}",
                admc_prism::props::render_property(other)
            )))
        }
    };

    // Flatten choices to f64 once; simulation never touches the rationals.
    let ri = reward_index.unwrap_or(0);
    let table: Vec<Vec<SimChoice>> = em
        .choices
        .iter()
        .map(|cs| {
            cs.iter()
                .map(|c| {
                    let branches: Vec<(usize, f64)> = c
                        .branches
                        .iter()
                        .map(|(t, w)| (*t, w.to_f64().unwrap_or(0.0)))
                        .collect();
                    let total = branches.iter().map(|&(_, w)| w).sum();
                    let reward = c
                        .rewards
                        .get(ri)
                        .and_then(|r| r.to_f64())
                        .unwrap_or(0.0);
                    SimChoice { branches, total, reward }
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut horizon_hits = 0u64;
    for _ in 0..opts.runs {
        let (value, hit) = run_once(em, &table, &task, continuous, opts.horizon, &mut rng);
        if hit {
            horizon_hits += 1;
        }
        sum += value;
        sum_sq += value * value;
    }
    let n = opts.runs as f64;
    let mean = sum / n;
    let variance = if opts.runs > 1 {
        ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SimResult {
        mean,
        half_width: 1.96 * (variance / n).sqrt(),
        runs: opts.runs,
        horizon_hits,
        uniform_scheduler: em.model_type == ModelType::Mdp,
    })
}

/// Simulates one path; returns its value and whether the horizon cut it off.
fn run_once(
    em: &ExplicitModel,
    table: &[Vec<SimChoice>],
    task: &Task,
    continuous: bool,
    horizon: u64,
    rng: &mut ChaCha8Rng,
) -> (f64, bool) {
    let mut state = em.initial;
    let mut clock = 0.0f64; // steps for discrete models, time for ctmc
    let mut acc = 0.0f64; // accumulated reward

    // Check the current state before the first step, per path semantics.
    if let Task::Reach { phi, psi, bound, exact } = task {
        if !exact && psi[state] && bound.map_or(true, |b| b >= 0.0) {
            return (1.0, false);
        }
        if !exact && !phi[state] {
            return (0.0, false);
        }
    }
    if let Task::ReachReward { psi } = task {
        if psi[state] {
            return (0.0, false);
        }
    }

    for _ in 0..horizon {
        let choices = &table[state];
        let absorbing = choices.is_empty() || choices.iter().all(|c| c.total == 0.0);

        // Absorbing states decide every task immediately.
        if absorbing {
            return match task {
                Task::Reach { psi, exact, .. } => {
                    if *exact {
                        (if psi[state] { 1.0 } else { 0.0 }, false)
                    } else {
                        (0.0, false) // ψ would already have returned above
                    }
                }
                Task::Cumulative { .. } => (acc, false),
                // The target is no longer reachable: the true expectation
                // diverges; report the run as undecided.
                Task::ReachReward { .. } => (acc, true),
            };
        }

        // Sample the next jump.
        let (next, dt, impulse) = if continuous {
            let total_rate: f64 = choices.iter().map(|c| c.total).sum();
            // 1-u keeps the argument strictly positive.
            let dt = -(1.0 - rng.gen::<f64>()).ln() / total_rate;
            let mut pick = rng.gen::<f64>() * total_rate;
            let mut sel = (state, 0.0);
            'outer: for c in choices {
                for &(t, w) in &c.branches {
                    if pick < w {
                        sel = (t, c.reward);
                        break 'outer;
                    }
                    pick -= w;
                }
            }
            (sel.0, dt, sel.1)
        } else {
            let c = &choices[rng.gen_range(0..choices.len())];
            let mut pick = rng.gen::<f64>() * c.total;
            let mut target = state;
            for &(t, w) in &c.branches {
                if pick < w {
                    target = t;
                    break;
                }
                pick -= w;
            }
            (target, 1.0, c.reward)
        };

        // The jump happens at clock + dt; bounded tasks may expire first.
        match task {
            Task::Reach { phi, psi, bound, exact } => {
                if let Some(b) = bound {
                    if clock + dt > *b {
                        // Bound expires during the sojourn (ctmc) or the
                        // step budget is spent (discrete).
                        return if *exact {
                            (if psi[state] { 1.0 } else { 0.0 }, false)
                        } else {
                            (0.0, false)
                        };
                    }
                }
                clock += dt;
                state = next;
                if !exact {
                    if psi[state] {
                        return (1.0, false);
                    }
                    if !phi[state] {
                        return (0.0, false);
                    }
                }
            }
            Task::Cumulative { bound } => {
                if clock + dt > *bound {
                    return (acc, false);
                }
                clock += dt;
                acc += impulse;
                state = next;
            }
            Task::ReachReward { psi } => {
                clock += dt;
                acc += impulse;
                state = next;
                if psi[state] {
                    return (acc, false);
                }
            }
        }
    }

    // Horizon exhausted before the formula was decided.
    let value = match task {
        Task::Reach { psi, exact, .. } => {
            if *exact && psi[state] {
                1.0
            } else {
                0.0
            }
        }
        Task::Cumulative { .. } | Task::ReachReward { .. } => acc,
    };
    (value, true)
}

fn bound_value(r: &admc_core::BigRational, continuous: bool) -> Result<f64, SimError> {
    use num_traits::Signed;
    if r.is_negative() {
        return Err(SimError::Check(CheckError::NegativeBound));
    }
    if !continuous && !r.is_integer() {
        return Err(SimError::Check(CheckError::TypeMismatch(
            "a step bound on a discrete-time model must be an integer".to_string(),
        )));
    }
    r.to_f64()
        .ok_or_else(|| SimError::Check(CheckError::Eval("bound overflows a double".to_string())))
}
