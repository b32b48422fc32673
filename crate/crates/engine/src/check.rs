//! Property checking against an explicit model: dispatches each property to
//! the right numeric routine for the model type, evaluates state formulas,
//! and combines arithmetic property expressions. Every numeric answer comes
//! with the tolerance the computation can actually promise.

use std::collections::BTreeMap;

use admc_core::Value;
use admc_prism::ast::ModelType;
use admc_prism::props::{
    render_sform, Atom, FilterOp, PathForm, PropAst, ProbBound, RewardGoal, SForm, TimeBound,
};
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::build::ExplicitModel;
use crate::ctmc::{self, CtmcNum};
use crate::graph;
use crate::linear::{solve_fixpoint, SolveError};
use crate::mdp::{vi_bounded, vi_unbounded, MdpRows};

/// Convergence target for value iteration.
const VI_EPS: f64 = 1e-10;
const VI_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("label \"{0}\" is not defined")]
    UnknownLabel(String),
    #[error("label \"{0}\" is defined in terms of itself")]
    LabelCycle(String),
    #[error("property atom `{0}` must be resolved against an activity before checking")]
    UnresolvedAtom(String),
    #[error("{0}")]
    TypeMismatch(String),
    #[error("reward structure \"{0}\" is not defined")]
    UnknownReward(String),
    #[error("the model defines {0} reward structures; name one as R{{\"name\"}}=?")]
    AmbiguousReward(usize),
    #[error("time bound is negative")]
    NegativeBound,
    #[error("filter condition selects no states")]
    EmptyFilter,
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// The result of checking one property.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Bool(bool),
    Value {
        value: f64,
        /// Absolute tolerance the computation guarantees for `value`.
        tol: f64,
    },
    Infinite,
}

pub struct Checker<'a> {
    em: &'a ExplicitModel,
    /// Label environment with label-in-label references already expanded.
    labels: BTreeMap<String, SForm>,
}

impl<'a> Checker<'a> {
    pub fn new(em: &'a ExplicitModel, labels: &[(String, SForm)]) -> Result<Self, CheckError> {
        let raw: BTreeMap<String, SForm> =
            labels.iter().map(|(n, sf)| (n.clone(), sf.clone())).collect();
        let mut expanded = BTreeMap::new();
        for name in raw.keys() {
            let mut trail = vec![name.clone()];
            let sf = expand_labels(&raw, &raw[name], &mut trail)?;
            expanded.insert(name.clone(), sf);
        }
        Ok(Checker { em, labels: expanded })
    }

    pub fn model(&self) -> &ExplicitModel {
        self.em
    }

    /// Checks a property from the initial state.
    pub fn check(&self, prop: &PropAst) -> Result<CheckOutcome, CheckError> {
        match prop {
            PropAst::ForAll(sf) => {
                let target = self.sat_states(sf)?;
                let certain = match self.em.model_type {
                    ModelType::Dtmc => {
                        let rows = self.dtmc_rows();
                        let (_, prob1) = graph::prob01_mc(&succ_of(&rows), &target);
                        prob1
                    }
                    ModelType::Ctmc => {
                        let ct = self.ctmc_num();
                        let rows = ct.embedded_rows();
                        let (_, prob1) = graph::prob01_mc(&succ_of(&rows), &target);
                        prob1
                    }
                    ModelType::Mdp => {
                        let rows = self.mdp_rows();
                        graph::prob1_min(&mdp_succ_of(&rows), &target)
                    }
                };
                Ok(CheckOutcome::Bool(certain[self.em.initial]))
            }
            _ => {
                let (vec, tol) = self.eval_vector(prop)?;
                let v = vec[self.em.initial];
                if v.is_nan() {
                    return Err(CheckError::Eval(
                        "property arithmetic is undefined (infinite or 0/0 operands)".to_string(),
                    ));
                }
                if v.is_infinite() {
                    Ok(CheckOutcome::Infinite)
                } else {
                    Ok(CheckOutcome::Value { value: v, tol })
                }
            }
        }
    }

    /// Evaluates the states satisfying a state formula.
    pub fn sat_states(&self, sf: &SForm) -> Result<Vec<bool>, CheckError> {
        let n = self.em.state_count();
        match sf {
            SForm::Bool(b) => Ok(vec![*b; n]),
            SForm::Not(x) => Ok(self.sat_states(x)?.into_iter().map(|b| !b).collect()),
            SForm::And(a, b) => {
                let (x, y) = (self.sat_states(a)?, self.sat_states(b)?);
                Ok(x.into_iter().zip(y).map(|(p, q)| p && q).collect())
            }
            SForm::Or(a, b) => {
                let (x, y) = (self.sat_states(a)?, self.sat_states(b)?);
                Ok(x.into_iter().zip(y).map(|(p, q)| p || q).collect())
            }
            SForm::Atom(Atom::Label(name)) => {
                let body = self
                    .labels
                    .get(name)
                    .ok_or_else(|| CheckError::UnknownLabel(name.clone()))?;
                self.sat_states(body)
            }
            SForm::Atom(Atom::Raw(e)) => (0..n)
                .map(|s| self.em.state_sat(s, e).map_err(CheckError::Eval))
                .collect(),
            SForm::Atom(other) => Err(CheckError::UnresolvedAtom(render_sform(&SForm::Atom(
                other.clone(),
            )))),
        }
    }

    /// Per-state numeric evaluation of a property (the workhorse behind both
    /// top-level checks and filters).
    fn eval_vector(&self, prop: &PropAst) -> Result<(Vec<f64>, f64), CheckError> {
        let n = self.em.state_count();
        match prop {
            PropAst::Prob { bound, path } => self.eval_prob(*bound, path),
            PropAst::Reward { name, goal } => self.eval_reward(name.as_deref(), goal),
            PropAst::ForAll(_) => Err(CheckError::TypeMismatch(
                "`A [...]` is a boolean property; it cannot be used as a number".to_string(),
            )),
            PropAst::Filter { op, inner, cond } => {
                let (vec, tol) = self.eval_vector(inner)?;
                let sat = self.sat_states(cond)?;
                let mut best: Option<f64> = None;
                for s in 0..n {
                    if !sat[s] {
                        continue;
                    }
                    let v = vec[s];
                    best = Some(match (best, op) {
                        (None, _) => v,
                        (Some(b), FilterOp::Max) => b.max(v),
                        (Some(b), FilterOp::Min) => b.min(v),
                    });
                }
                match best {
                    Some(v) => Ok((vec![v; n], tol)),
                    None => Err(CheckError::EmptyFilter),
                }
            }
            PropAst::Num(r) => {
                let v = r.to_f64().ok_or_else(|| {
                    CheckError::Eval("numeric literal overflows a double".to_string())
                })?;
                Ok((vec![v; n], 0.0))
            }
            PropAst::ConstRef(name) => match self.em.constants.get(name) {
                Some(Value::Num(r)) => {
                    let v = r.to_f64().ok_or_else(|| {
                        CheckError::Eval(format!("constant `{name}` overflows a double"))
                    })?;
                    Ok((vec![v; n], 0.0))
                }
                Some(Value::Bool(_)) => Err(CheckError::TypeMismatch(format!(
                    "constant `{name}` is boolean, expected a number"
                ))),
                None => Err(CheckError::Eval(format!("unknown constant `{name}` in property"))),
            },
            PropAst::Neg(x) => {
                let (v, t) = self.eval_vector(x)?;
                Ok((v.into_iter().map(|a| -a).collect(), t))
            }
            PropAst::Add(a, b) => self.eval_arith(a, b, |x, y| x + y, ArithTol::Linear),
            PropAst::Sub(a, b) => self.eval_arith(a, b, |x, y| x - y, ArithTol::Linear),
            PropAst::Mul(a, b) => self.eval_arith(a, b, |x, y| x * y, ArithTol::Product),
            PropAst::Div(a, b) => self.eval_arith(a, b, |x, y| x / y, ArithTol::Quotient),
        }
    }

    fn eval_arith(
        &self,
        a: &PropAst,
        b: &PropAst,
        f: impl Fn(f64, f64) -> f64,
        kind: ArithTol,
    ) -> Result<(Vec<f64>, f64), CheckError> {
        let (va, ta) = self.eval_vector(a)?;
        let (vb, tb) = self.eval_vector(b)?;
        let amax = va.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
        let bmax = vb.iter().copied().filter(|v| v.is_finite()).fold(0.0f64, f64::max);
        let bmin_abs = vb
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .map(f64::abs)
            .fold(f64::INFINITY, f64::min);
        let tol = match kind {
            ArithTol::Linear => ta + tb,
            ArithTol::Product => ta * bmax.abs() + tb * amax.abs() + ta * tb,
            ArithTol::Quotient => {
                if bmin_abs <= tb {
                    f64::INFINITY
                } else {
                    (ta + (amax.abs() / bmin_abs) * tb) / (bmin_abs - tb)
                }
            }
        };
        let out = va.into_iter().zip(vb).map(|(x, y)| f(x, y)).collect();
        Ok((out, tol))
    }

    fn eval_prob(
        &self,
        bound: ProbBound,
        path: &PathForm,
    ) -> Result<(Vec<f64>, f64), CheckError> {
        let mt = self.em.model_type;
        match (mt, bound) {
            (ModelType::Mdp, ProbBound::Query) => {
                return Err(CheckError::TypeMismatch(
                    "P=? is ambiguous on an mdp; use Pmax=? or Pmin=?".to_string(),
                ))
            }
            (ModelType::Dtmc | ModelType::Ctmc, ProbBound::Max | ProbBound::Min) => {
                return Err(CheckError::TypeMismatch(
                    "Pmax/Pmin apply to mdp models; use P=? here".to_string(),
                ))
            }
            _ => {}
        }
        let maximize = bound == ProbBound::Max;

        // Treat F φ as true U φ.
        let (phi, psi, tb) = match path {
            PathForm::Eventually(sf, tb) => (None, sf, tb),
            PathForm::Until(phi, psi, tb) => (Some(phi), psi, tb),
        };
        let psi_sat = self.sat_states(psi)?;
        let phi_sat = match phi {
            None => vec![true; self.em.state_count()],
            Some(sf) => self.sat_states(sf)?,
        };
        // States allowed to take another step; the rest are absorbing for
        // the purpose of this path formula.
        let cont: Vec<bool> = phi_sat
            .iter()
            .zip(&psi_sat)
            .map(|(&f, &s)| f && !s)
            .collect();

        match (mt, tb) {
            (ModelType::Dtmc, None) => {
                let rows = self.dtmc_rows();
                self.reach_unbounded_mc(&rows, &psi_sat, &cont)
            }
            (ModelType::Ctmc, None) => {
                let rows = self.ctmc_num().embedded_rows();
                self.reach_unbounded_mc(&rows, &psi_sat, &cont)
            }
            (ModelType::Mdp, None) => {
                let rows = self.mdp_rows();
                self.reach_unbounded_mdp(&rows, &psi_sat, &cont, maximize)
            }
            (ModelType::Dtmc, Some(TimeBound::Le(k))) => {
                let k = as_steps(k)?;
                let rows = self.dtmc_rows();
                Ok((mc_bounded(&rows, &psi_sat, &cont, k), 1e-12))
            }
            (ModelType::Mdp, Some(TimeBound::Le(k))) => {
                let k = as_steps(k)?;
                let rows = self.mdp_rows();
                Ok((vi_bounded(&rows, &psi_sat, &cont, k, maximize), 1e-12))
            }
            (ModelType::Ctmc, Some(TimeBound::Le(t))) => {
                let t = as_time(t)?;
                let ct = self.ctmc_num();
                // Absorb: ψ states are wins, non-continuing states are losses.
                let absorbed = absorb(&ct, &cont);
                let base: Vec<f64> =
                    psi_sat.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                self.ctmc_backward(&absorbed, &base, t)
            }
            (ModelType::Dtmc, Some(TimeBound::Eq(k))) => {
                let k = as_steps(k)?;
                let rows = self.dtmc_rows();
                let base: Vec<f64> =
                    psi_sat.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                if phi.is_some() {
                    return Err(CheckError::TypeMismatch(
                        "an exact-step bound applies to F only".to_string(),
                    ));
                }
                Ok((mc_power(&rows, base, k), 1e-12))
            }
            (ModelType::Ctmc, Some(TimeBound::Eq(t))) => {
                let t = as_time(t)?;
                if phi.is_some() {
                    return Err(CheckError::TypeMismatch(
                        "an exact-time bound applies to F only".to_string(),
                    ));
                }
                let ct = self.ctmc_num();
                let base: Vec<f64> =
                    psi_sat.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                self.ctmc_backward(&ct, &base, t)
            }
            (ModelType::Mdp, Some(TimeBound::Eq(_))) => Err(CheckError::TypeMismatch(
                "an exact-step bound is not supported on mdp models".to_string(),
            )),
        }
    }

    fn eval_reward(
        &self,
        name: Option<&str>,
        goal: &RewardGoal,
    ) -> Result<(Vec<f64>, f64), CheckError> {
        if self.em.model_type == ModelType::Mdp {
            return Err(CheckError::TypeMismatch(
                "expected rewards are not supported on mdp models".to_string(),
            ));
        }
        let ri = match name {
            Some(n) => self
                .em
                .reward_index(n)
                .ok_or_else(|| CheckError::UnknownReward(n.to_string()))?,
            None => match self.em.reward_names.len() {
                1 => 0,
                0 => return Err(CheckError::UnknownReward("<default>".to_string())),
                k => return Err(CheckError::AmbiguousReward(k)),
            },
        };
        match (self.em.model_type, goal) {
            (ModelType::Dtmc, RewardGoal::Reach(sf)) => {
                let target = self.sat_states(sf)?;
                let rows = self.dtmc_rows();
                let imm = self.dtmc_imm(ri);
                self.reward_reach_mc(&rows, &imm, &target)
            }
            (ModelType::Ctmc, RewardGoal::Reach(sf)) => {
                let target = self.sat_states(sf)?;
                let ct = self.ctmc_num();
                let rows = ct.embedded_rows();
                // Expected impulse per visit: reward rate times mean sojourn.
                let wr = self.ctmc_wr(ri);
                let imm: Vec<f64> = wr
                    .iter()
                    .zip(&ct.exit)
                    .map(|(&w, &e)| if e > 0.0 { w / e } else { 0.0 })
                    .collect();
                self.reward_reach_mc(&rows, &imm, &target)
            }
            (ModelType::Dtmc, RewardGoal::Cumulative(k)) => {
                let k = as_steps(k)?;
                let rows = self.dtmc_rows();
                let imm = self.dtmc_imm(ri);
                let n = self.em.state_count();
                let mut x = vec![0.0f64; n];
                let mut next = vec![0.0f64; n];
                for _ in 0..k {
                    for s in 0..n {
                        let mut acc = imm[s];
                        for &(t, p) in &rows[s] {
                            acc += p * x[t];
                        }
                        next[s] = acc;
                    }
                    std::mem::swap(&mut x, &mut next);
                }
                Ok((x, 1e-12 * (1.0 + k as f64)))
            }
            (ModelType::Ctmc, RewardGoal::Cumulative(t)) => {
                let t = as_time(t)?;
                let ct = self.ctmc_num();
                let wr = self.ctmc_wr(ri);
                match ctmc::fast_states(&ct, t) {
                    None => {
                        let x = ctmc::cumulative(&ct, &wr, t);
                        let scale = x.iter().copied().fold(1.0f64, f64::max);
                        Ok((x, 1e-9 * scale))
                    }
                    Some(fast) => {
                        let red = ctmc::eliminate(&ct, &wr, &fast)?;
                        let x_red = ctmc::cumulative(&red.ct, &red.wr, t);
                        let x = red.backfill(&x_red, true);
                        let scale = x.iter().copied().fold(1.0f64, f64::max);
                        Ok((x, 2e-3 * scale))
                    }
                }
            }
            (ModelType::Mdp, _) => unreachable!("rejected above"),
        }
    }

    /// Time-bounded backward computation `E_s[base(X_t)]`, reducing stiff
    /// chains first.
    fn ctmc_backward(
        &self,
        ct: &CtmcNum,
        base: &[f64],
        t: f64,
    ) -> Result<(Vec<f64>, f64), CheckError> {
        match ctmc::fast_states(ct, t) {
            None => Ok((ctmc::backward_mix(ct, t, base), 1e-9)),
            Some(fast) => {
                let zeros = vec![0.0f64; ct.len()];
                let red = ctmc::eliminate(ct, &zeros, &fast)?;
                let base_red: Vec<f64> = red.keep.iter().map(|&s| base[s]).collect();
                let x_red = ctmc::backward_mix(&red.ct, t, &base_red);
                Ok((red.backfill(&x_red, false), 2e-3))
            }
        }
    }

    fn reach_unbounded_mc(
        &self,
        rows: &[Vec<(usize, f64)>],
        target: &[bool],
        cont: &[bool],
    ) -> Result<(Vec<f64>, f64), CheckError> {
        let cut = cut_rows(rows, cont, target);
        let (prob0, prob1) = graph::prob01_mc(&succ_of(&cut), target);
        let known: Vec<Option<f64>> = (0..rows.len())
            .map(|s| {
                if prob1[s] {
                    Some(1.0)
                } else if prob0[s] {
                    Some(0.0)
                } else {
                    None
                }
            })
            .collect();
        let b = vec![0.0f64; rows.len()];
        let x = solve_fixpoint(&cut, &b, &known)?;
        Ok((x, 1e-9))
    }

    fn reach_unbounded_mdp(
        &self,
        rows: &MdpRows,
        target: &[bool],
        cont: &[bool],
        maximize: bool,
    ) -> Result<(Vec<f64>, f64), CheckError> {
        let cut = cut_mdp(rows, cont, target);
        let succ = mdp_succ_of(&cut);
        let (zero, one) = if maximize {
            (graph::prob0_max(&succ, target), graph::prob1_max(&succ, target))
        } else {
            (graph::prob0_min(&succ, target), graph::prob1_min(&succ, target))
        };
        let fixed: Vec<Option<f64>> = (0..rows.len())
            .map(|s| {
                if one[s] {
                    Some(1.0)
                } else if zero[s] {
                    Some(0.0)
                } else {
                    None
                }
            })
            .collect();
        let (x, delta) = vi_unbounded(&cut, &fixed, maximize, VI_EPS, VI_MAX_ITERS);
        Ok((x, (delta * 10.0).max(1e-8)))
    }

    fn reward_reach_mc(
        &self,
        rows: &[Vec<(usize, f64)>],
        imm: &[f64],
        target: &[bool],
    ) -> Result<(Vec<f64>, f64), CheckError> {
        let n = rows.len();
        let all = vec![true; n];
        let cut = cut_rows(rows, &all, target);
        let (_, prob1) = graph::prob01_mc(&succ_of(&cut), target);
        // Expected rewards diverge wherever the target is not almost surely
        // reached; those states are solved around and patched to ∞ after.
        let known: Vec<Option<f64>> = (0..n)
            .map(|s| {
                if target[s] || !prob1[s] {
                    Some(0.0)
                } else {
                    None
                }
            })
            .collect();
        let x = solve_fixpoint(&cut, imm, &known)?;
        let scale = x
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(1.0f64, f64::max);
        let x = (0..n)
            .map(|s| if prob1[s] { x[s] } else { f64::INFINITY })
            .collect();
        Ok((x, 1e-9 * scale))
    }

    // ---- numeric views of the explicit model ----

    /// Collapsed stochastic rows: each enabled choice fires uniformly.
    fn dtmc_rows(&self) -> Vec<Vec<(usize, f64)>> {
        self.em
            .choices
            .iter()
            .map(|cs| {
                let share = 1.0 / cs.len() as f64;
                let mut row: BTreeMap<usize, f64> = BTreeMap::new();
                for c in cs {
                    for (t, w) in &c.branches {
                        *row.entry(*t).or_insert(0.0) += share * rat_f64(w);
                    }
                }
                row.into_iter().collect()
            })
            .collect()
    }

    /// Expected transition reward of one step under the uniform-choice rule.
    fn dtmc_imm(&self, ri: usize) -> Vec<f64> {
        self.em
            .choices
            .iter()
            .map(|cs| {
                let share = 1.0 / cs.len() as f64;
                cs.iter().map(|c| share * rat_f64(&c.rewards[ri])).sum()
            })
            .collect()
    }

    /// Rate matrix without self-loops (they are dynamically null; their
    /// rewards are captured by `ctmc_wr`).
    fn ctmc_num(&self) -> CtmcNum {
        let mut rows = Vec::with_capacity(self.em.state_count());
        let mut exit = Vec::with_capacity(self.em.state_count());
        for (s, cs) in self.em.choices.iter().enumerate() {
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for c in cs {
                for (t, w) in &c.branches {
                    if *t != s {
                        *row.entry(*t).or_insert(0.0) += rat_f64(w);
                    }
                }
            }
            let row: Vec<(usize, f64)> = row.into_iter().collect();
            exit.push(row.iter().map(|&(_, r)| r).sum());
            rows.push(row);
        }
        CtmcNum { rows, exit }
    }

    /// Reward rate per state: Σ rate·impulse over all branches, self-loops
    /// included (a self-loop at rate λ with impulse r earns λ·r per unit
    /// time).
    fn ctmc_wr(&self, ri: usize) -> Vec<f64> {
        self.em
            .choices
            .iter()
            .map(|cs| {
                cs.iter()
                    .map(|c| {
                        let total_rate: f64 =
                            c.branches.iter().map(|(_, w)| rat_f64(w)).sum();
                        total_rate * rat_f64(&c.rewards[ri])
                    })
                    .sum()
            })
            .collect()
    }

    fn mdp_rows(&self) -> MdpRows {
        self.em
            .choices
            .iter()
            .map(|cs| {
                cs.iter()
                    .map(|c| {
                        c.branches
                            .iter()
                            .map(|(t, w)| (*t, rat_f64(w)))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

enum ArithTol {
    Linear,
    Product,
    Quotient,
}

fn expand_labels(
    raw: &BTreeMap<String, SForm>,
    sf: &SForm,
    trail: &mut Vec<String>,
) -> Result<SForm, CheckError> {
    Ok(match sf {
        SForm::Bool(_) => sf.clone(),
        SForm::Not(x) => SForm::Not(Box::new(expand_labels(raw, x, trail)?)),
        SForm::And(a, b) => SForm::And(
            Box::new(expand_labels(raw, a, trail)?),
            Box::new(expand_labels(raw, b, trail)?),
        ),
        SForm::Or(a, b) => SForm::Or(
            Box::new(expand_labels(raw, a, trail)?),
            Box::new(expand_labels(raw, b, trail)?),
        ),
        SForm::Atom(Atom::Label(n)) => match raw.get(n) {
            None => return Err(CheckError::UnknownLabel(n.clone())),
            Some(body) => {
                if trail.iter().any(|t| t == n) {
                    return Err(CheckError::LabelCycle(n.clone()));
                }
                trail.push(n.clone());
                let out = expand_labels(raw, body, trail)?;
                trail.pop();
                out
            }
        },
        SForm::Atom(_) => sf.clone(),
    })
}

fn rat_f64(r: &admc_core::BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn as_steps(r: &admc_core::BigRational) -> Result<u64, CheckError> {
    if r.is_negative() {
        return Err(CheckError::NegativeBound);
    }
    if !r.is_integer() {
        return Err(CheckError::TypeMismatch(
            "a step bound on a discrete-time model must be an integer".to_string(),
        ));
    }
    r.to_integer()
        .to_u64()
        .ok_or_else(|| CheckError::Eval("step bound overflows".to_string()))
}

fn as_time(r: &admc_core::BigRational) -> Result<f64, CheckError> {
    if r.is_negative() {
        return Err(CheckError::NegativeBound);
    }
    r.to_f64()
        .ok_or_else(|| CheckError::Eval("time bound overflows a double".to_string()))
}

fn succ_of(rows: &[Vec<(usize, f64)>]) -> Vec<Vec<usize>> {
    rows.iter()
        .map(|row| row.iter().filter(|&&(_, p)| p > 0.0).map(|&(t, _)| t).collect())
        .collect()
}

fn mdp_succ_of(rows: &MdpRows) -> graph::MdpSucc {
    rows.iter()
        .map(|cs| {
            cs.iter()
                .map(|br| br.iter().filter(|&&(_, p)| p > 0.0).map(|&(t, _)| t).collect())
                .collect()
        })
        .collect()
}

/// Drops the out-edges of states that may not take another step (and of
/// target states, which are absorbing for reachability purposes).
fn cut_rows(
    rows: &[Vec<(usize, f64)>],
    cont: &[bool],
    target: &[bool],
) -> Vec<Vec<(usize, f64)>> {
    rows.iter()
        .enumerate()
        .map(|(s, row)| {
            if cont[s] && !target[s] {
                row.clone()
            } else {
                Vec::new()
            }
        })
        .collect()
}

fn cut_mdp(rows: &MdpRows, cont: &[bool], target: &[bool]) -> MdpRows {
    rows.iter()
        .enumerate()
        .map(|(s, cs)| {
            if cont[s] && !target[s] {
                cs.clone()
            } else {
                Vec::new()
            }
        })
        .collect()
}

/// Makes every non-continuing state absorbing in a CTMC.
fn absorb(ct: &CtmcNum, cont: &[bool]) -> CtmcNum {
    let rows: Vec<Vec<(usize, f64)>> = ct
        .rows
        .iter()
        .enumerate()
        .map(|(s, row)| if cont[s] { row.clone() } else { Vec::new() })
        .collect();
    let exit: Vec<f64> = rows
        .iter()
        .map(|row| row.iter().map(|&(_, r)| r).sum())
        .collect();
    CtmcNum { rows, exit }
}

/// Bounded until on a Markov chain: k backward steps of
/// `x'(s) = 1 if ψ, else Σ p·x if the state may continue, else 0`.
fn mc_bounded(rows: &[Vec<(usize, f64)>], psi: &[bool], cont: &[bool], k: u64) -> Vec<f64> {
    let n = rows.len();
    let mut x: Vec<f64> = psi.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut next = vec![0.0f64; n];
    for _ in 0..k {
        for s in 0..n {
            next[s] = if psi[s] {
                1.0
            } else if cont[s] {
                rows[s].iter().map(|&(t, p)| p * x[t]).sum()
            } else {
                0.0
            };
        }
        std::mem::swap(&mut x, &mut next);
    }
    x
}

/// `x = Pᵏ·base`: the probability of satisfying the base predicate exactly
/// k steps from now.
fn mc_power(rows: &[Vec<(usize, f64)>], base: Vec<f64>, k: u64) -> Vec<f64> {
    let n = rows.len();
    let mut x = base;
    let mut next = vec![0.0f64; n];
    for _ in 0..k {
        for s in 0..n {
            next[s] = rows[s].iter().map(|&(t, p)| p * x[t]).sum();
        }
        std::mem::swap(&mut x, &mut next);
    }
    x
}
