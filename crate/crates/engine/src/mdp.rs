//! Value iteration for MDP reachability. Qualitative precomputation pins the
//! probability-0/1 states exactly; iteration then runs on the remaining
//! states only, from below, converging to the least fixpoint — which the
//! pinned sets make the correct answer for both maximizing and minimizing
//! schedulers.

/// Per-state nondeterministic choices with probabilistic branches.
pub type MdpRows = Vec<Vec<Vec<(usize, f64)>>>;

/// Iterates `x'(s) = opt_choice Σ p·x(t)` on states with `fixed[s] == None`
/// until the sup-norm change drops to `eps` (or `max_iters` passes). Returns
/// the values and the last observed change.
pub fn vi_unbounded(
    rows: &MdpRows,
    fixed: &[Option<f64>],
    maximize: bool,
    eps: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let n = rows.len();
    let mut x: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let mut delta = 0.0f64;
    for _ in 0..max_iters {
        delta = 0.0;
        for s in 0..n {
            if fixed[s].is_some() {
                continue;
            }
            let v = opt_step(&rows[s], &x, maximize);
            let d = (v - x[s]).abs();
            if d > delta {
                delta = d;
            }
            x[s] = v;
        }
        if delta <= eps {
            break;
        }
    }
    (x, delta)
}

/// Step-bounded optimal reachability: k backward iterations of
/// `x'(s) = 1 if ψ(s), else opt Σ p·x(t) if the state may continue, else 0`.
pub fn vi_bounded(rows: &MdpRows, psi: &[bool], cont: &[bool], k: u64, maximize: bool) -> Vec<f64> {
    let n = rows.len();
    let mut x: Vec<f64> = psi.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut next = vec![0.0f64; n];
    for _ in 0..k {
        for s in 0..n {
            next[s] = if psi[s] {
                1.0
            } else if cont[s] {
                opt_step(&rows[s], &x, maximize)
            } else {
                0.0
            };
        }
        std::mem::swap(&mut x, &mut next);
    }
    x
}

fn opt_step(choices: &[Vec<(usize, f64)>], x: &[f64], maximize: bool) -> f64 {
    let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    for branch in choices {
        let v: f64 = branch.iter().map(|&(t, p)| p * x[t]).sum();
        if (maximize && v > best) || (!maximize && v < best) {
            best = v;
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0 // no choices: vanishing value outside the fixed sets
    }
}
