//! Continuous-time numerics: uniformization for time-bounded reachability,
//! transient distributions and cumulative rewards, plus a stiffness
//! reduction that eliminates very fast states when the uniformization rate
//! times the horizon would otherwise demand tens of millions of terms.

use crate::linear::SolveError;

/// Trigger stiffness handling above this uniformization-rate × horizon
/// product; below it plain uniformization is cheap enough.
const STIFF_QT: f64 = 1e6;
/// A state is "fast" (eligible for elimination) when its expected sojourn is
/// at most `t / FAST_SOJOURNS`.
const FAST_SOJOURNS: f64 = 1e4;
/// Relative cutoff for Poisson term truncation; the normalized neglected
/// mass stays far below the 1e-10 the checker promises.
const POISSON_CUTOFF: f64 = 1e-18;

/// A CTMC in numeric form: off-diagonal rate rows and total exit rates.
/// Self-loop rates are dropped — they do not affect the process — but their
/// rewards are folded into per-state reward rates by the caller.
#[derive(Debug, Clone)]
pub struct CtmcNum {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub exit: Vec<f64>,
}

impl CtmcNum {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn max_exit(&self) -> f64 {
        self.exit.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Jump-chain rows: `P(i,j) = rate(i,j) / exit(i)`; absorbing states get
    /// empty rows.
    pub fn embedded_rows(&self) -> Vec<Vec<(usize, f64)>> {
        self.rows
            .iter()
            .zip(&self.exit)
            .map(|(row, &e)| {
                if e == 0.0 {
                    Vec::new()
                } else {
                    row.iter().map(|&(t, r)| (t, r / e)).collect()
                }
            })
            .collect()
    }
}

/// Normalized Poisson(qt) weights for the index window `[lo, lo + len)`,
/// computed outward from the distribution's mode so no intermediate term
/// underflows even at qt around 1e6.
pub fn poisson_terms(qt: f64) -> (usize, Vec<f64>) {
    assert!(qt.is_finite() && qt >= 0.0);
    if qt == 0.0 {
        return (0, vec![1.0]);
    }
    let mode = qt.floor() as usize;
    // Unnormalized weights relative to the mode term.
    let mut right: Vec<f64> = vec![1.0];
    let mut k = mode;
    let mut w = 1.0f64;
    loop {
        k += 1;
        w *= qt / k as f64;
        if w < POISSON_CUTOFF && k as f64 > qt {
            break;
        }
        right.push(w);
    }
    let mut left: Vec<f64> = Vec::new();
    let mut k = mode;
    let mut w = 1.0f64;
    while k > 0 {
        w *= k as f64 / qt;
        k -= 1;
        if w < POISSON_CUTOFF {
            break;
        }
        left.push(w);
    }
    let lo = mode - left.len();
    let mut weights: Vec<f64> = left.into_iter().rev().chain(right).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (lo, weights)
}

/// Applies the uniformized matrix: `y'(i) = (1 - exit(i)/q)·y(i) + Σ rate(i,j)/q·y(j)`.
fn apply_backward(ct: &CtmcNum, q: f64, y: &[f64], out: &mut [f64]) {
    for i in 0..ct.len() {
        let mut acc = (1.0 - ct.exit[i] / q) * y[i];
        for &(j, r) in &ct.rows[i] {
            acc += r / q * y[j];
        }
        out[i] = acc;
    }
}

/// Applies the transpose (distribution step): `π'(j) = Σ π(i)·P(i,j)`.
fn apply_forward(ct: &CtmcNum, q: f64, pi: &[f64], out: &mut [f64]) {
    for o in out.iter_mut() {
        *o = 0.0;
    }
    for i in 0..ct.len() {
        let m = pi[i];
        if m == 0.0 {
            continue;
        }
        out[i] += (1.0 - ct.exit[i] / q) * m;
        for &(j, r) in &ct.rows[i] {
            out[j] += r / q * m;
        }
    }
}

/// `x(s) = E_s[ base(X_t) ]` — expectation of a state function at time `t`
/// for every start state, by backward uniformization.
pub fn backward_mix(ct: &CtmcNum, t: f64, base: &[f64]) -> Vec<f64> {
    let q = ct.max_exit();
    if q == 0.0 || t == 0.0 {
        return base.to_vec();
    }
    let (lo, weights) = poisson_terms(q * t);
    let mut y = base.to_vec();
    let mut next = vec![0.0f64; ct.len()];
    let mut acc = vec![0.0f64; ct.len()];
    for k in 0..lo + weights.len() {
        if k >= lo {
            let w = weights[k - lo];
            for (a, &v) in acc.iter_mut().zip(&y) {
                *a += w * v;
            }
        }
        if k + 1 < lo + weights.len() {
            apply_backward(ct, q, &y, &mut next);
            std::mem::swap(&mut y, &mut next);
        }
    }
    acc
}

/// State distribution at time `t` starting from `init` (a distribution), by
/// forward uniformization.
pub fn forward_transient(ct: &CtmcNum, init: &[f64], t: f64) -> Vec<f64> {
    let q = ct.max_exit();
    if q == 0.0 || t == 0.0 {
        return init.to_vec();
    }
    let (lo, weights) = poisson_terms(q * t);
    let mut pi = init.to_vec();
    let mut next = vec![0.0f64; ct.len()];
    let mut acc = vec![0.0f64; ct.len()];
    for k in 0..lo + weights.len() {
        if k >= lo {
            let w = weights[k - lo];
            for (a, &v) in acc.iter_mut().zip(&pi) {
                *a += w * v;
            }
        }
        if k + 1 < lo + weights.len() {
            apply_forward(ct, q, &pi, &mut next);
            std::mem::swap(&mut pi, &mut next);
        }
    }
    acc
}

/// `x(s) = E_s[ ∫₀ᵗ wr(X_u) du ]` — expected reward accumulated over `[0, t]`
/// when `wr` gives each state's reward rate. Uses the identity
/// `E = Σ_k (1/q)·P(Pois(qt) > k)·(Pᵏ wr)` and the same safe Poisson window.
pub fn cumulative(ct: &CtmcNum, wr: &[f64], t: f64) -> Vec<f64> {
    let q = ct.max_exit();
    if t == 0.0 {
        return vec![0.0; ct.len()];
    }
    if q == 0.0 {
        // Fully absorbing: rewards accrue linearly.
        return wr.iter().map(|&r| r * t).collect();
    }
    let (lo, weights) = poisson_terms(q * t);
    // tail(k) = P(Pois(qt) > k); below the window it is 1.
    let mut y = wr.to_vec();
    let mut next = vec![0.0f64; ct.len()];
    let mut acc = vec![0.0f64; ct.len()];
    let mut prefix = 0.0f64;
    for k in 0..lo + weights.len() {
        let tail = if k < lo {
            1.0
        } else {
            prefix += weights[k - lo];
            (1.0 - prefix).max(0.0)
        };
        if tail > 0.0 {
            for (a, &v) in acc.iter_mut().zip(&y) {
                *a += tail / q * v;
            }
        }
        if k + 1 < lo + weights.len() {
            apply_backward(ct, q, &y, &mut next);
            std::mem::swap(&mut y, &mut next);
        }
    }
    acc
}

/// Picks the states to eliminate before a time-bounded analysis, or `None`
/// when plain uniformization is affordable.
pub fn fast_states(ct: &CtmcNum, t: f64) -> Option<Vec<bool>> {
    let q = ct.max_exit();
    if !(q * t > STIFF_QT) {
        return None;
    }
    let threshold = FAST_SOJOURNS / t;
    Some(ct.exit.iter().map(|&e| e >= threshold).collect())
}

/// A stiffness-reduced chain. Fast states are replaced by their exit
/// behaviour: entering one immediately redistributes onto the slow states it
/// eventually reaches (`hop`), carrying the reward it would have collected
/// on the way (`carry`). The time spent inside fast states is dropped; the
/// induced error is bounded by their total sojourn mass, which the fast
/// threshold keeps around 1e-4 of the horizon — inside the tolerances the
/// bounded operators promise.
#[derive(Debug, Clone)]
pub struct Reduced {
    /// Original indices of the kept (slow) states, in original order.
    pub keep: Vec<usize>,
    /// Original index → reduced index for kept states.
    pub kept_of: Vec<Option<usize>>,
    pub ct: CtmcNum,
    /// Reduced reward rates, including rewards carried out of fast states.
    pub wr: Vec<f64>,
    /// For each fast state: distribution over reduced states at block exit.
    hop: Vec<Option<Vec<f64>>>,
    /// For each fast state: expected reward collected before block exit.
    carry: Vec<f64>,
}

impl Reduced {
    /// Redistributes an original-index initial distribution onto the reduced
    /// chain; returns the reduced distribution and the reward already
    /// collected by initial mass placed on fast states.
    pub fn push_init(&self, init: &[f64]) -> (Vec<f64>, f64) {
        let mut red = vec![0.0f64; self.keep.len()];
        let mut offset = 0.0f64;
        for (orig, &mass) in init.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            match self.kept_of[orig] {
                Some(r) => red[r] += mass,
                None => {
                    let hop = self.hop[orig].as_ref().expect("fast state has hop row");
                    for (r, &h) in hop.iter().enumerate() {
                        red[r] += mass * h;
                    }
                    offset += mass * self.carry[orig];
                }
            }
        }
        (red, offset)
    }

    /// Expands reduced per-state values back to original indexing; fast
    /// states take the hop-weighted value of their exit states plus, when
    /// `with_carry` is set (reward semantics), the carried reward.
    pub fn backfill(&self, x_red: &[f64], with_carry: bool) -> Vec<f64> {
        let mut out = vec![0.0f64; self.kept_of.len()];
        for (orig, k) in self.kept_of.iter().enumerate() {
            match k {
                Some(r) => out[orig] = x_red[*r],
                None => {
                    let hop = self.hop[orig].as_ref().expect("fast state has hop row");
                    let mut v: f64 = hop.iter().enumerate().map(|(r, &h)| h * x_red[r]).sum();
                    if with_carry {
                        v += self.carry[orig];
                    }
                    out[orig] = v;
                }
            }
        }
        out
    }
}

/// Eliminates the `fast` states from `ct`, redirecting their inflow to the
/// slow states reached when the fast block is left and carrying `wr` rewards
/// collected inside the block.
pub fn eliminate(ct: &CtmcNum, wr: &[f64], fast: &[bool]) -> Result<Reduced, SolveError> {
    let n = ct.len();
    let fast_idx: Vec<usize> = (0..n).filter(|&s| fast[s]).collect();
    let keep: Vec<usize> = (0..n).filter(|&s| !fast[s]).collect();
    if keep.is_empty() {
        return Err(SolveError::Singular(0));
    }
    let nf = fast_idx.len();
    let ns = keep.len();
    let mut fast_of = vec![usize::MAX; n];
    for (i, &f) in fast_idx.iter().enumerate() {
        fast_of[f] = i;
    }
    let mut kept_of: Vec<Option<usize>> = vec![None; n];
    for (i, &s) in keep.iter().enumerate() {
        kept_of[s] = Some(i);
    }

    // Dense (I - P_FF) over the fast block's embedded jump probabilities.
    let mut a = vec![0.0f64; nf * nf];
    for i in 0..nf {
        a[i * nf + i] = 1.0;
    }
    // Exit-jump targets: columns over slow states, plus the reward column.
    let mut hop_cols = vec![0.0f64; nf * ns];
    let mut carry_col = vec![0.0f64; nf];
    for (i, &f) in fast_idx.iter().enumerate() {
        let e = ct.exit[f];
        if e == 0.0 {
            // Absorbing states are never fast (their sojourn is infinite).
            return Err(SolveError::Singular(f));
        }
        for &(t, r) in &ct.rows[f] {
            let p = r / e;
            if fast[t] {
                a[i * nf + fast_of[t]] -= p;
            } else {
                hop_cols[i * ns + kept_of[t].unwrap()] += p;
            }
        }
        carry_col[i] = wr[f] / e; // expected reward during one sojourn
    }
    let lu = DenseLu::factor(a, nf).map_err(|i| SolveError::Singular(fast_idx[i]))?;
    let mut col = vec![0.0f64; nf];
    for s in 0..ns {
        for i in 0..nf {
            col[i] = hop_cols[i * ns + s];
        }
        lu.solve(&mut col);
        for i in 0..nf {
            hop_cols[i * ns + s] = col[i];
        }
    }
    lu.solve(&mut carry_col);

    // Reduced rates: direct slow→slow plus slow→fast-block→slow, dropping
    // the resulting self-loops (their carried rewards are already in wr').
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(ns);
    let mut exit = vec![0.0f64; ns];
    let mut wr_red = vec![0.0f64; ns];
    for (ri, &u) in keep.iter().enumerate() {
        let mut dense = vec![0.0f64; ns];
        let mut w = wr[u];
        for &(t, r) in &ct.rows[u] {
            match kept_of[t] {
                Some(v) => dense[v] += r,
                None => {
                    let fi = fast_of[t];
                    for v in 0..ns {
                        dense[v] += r * hop_cols[fi * ns + v];
                    }
                    w += r * carry_col[fi];
                }
            }
        }
        dense[ri] = 0.0;
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut e = 0.0f64;
        for (v, &r) in dense.iter().enumerate() {
            if r > 0.0 {
                row.push((v, r));
                e += r;
            }
        }
        rows.push(row);
        exit[ri] = e;
        wr_red[ri] = w;
    }

    let mut hop: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut carry = vec![0.0f64; n];
    for (i, &f) in fast_idx.iter().enumerate() {
        hop[f] = Some(hop_cols[i * ns..(i + 1) * ns].to_vec());
        carry[f] = carry_col[i];
    }

    Ok(Reduced {
        keep,
        kept_of,
        ct: CtmcNum { rows, exit },
        wr: wr_red,
        hop,
        carry,
    })
}

/// Dense LU factorization reused across multiple right-hand sides.
struct DenseLu {
    a: Vec<f64>,
    perm: Vec<usize>,
    n: usize,
}

impl DenseLu {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<DenseLu, usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for row in col + 1..n {
                let v = a[row * n + col].abs();
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            if best < 1e-300 {
                return Err(col);
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                perm.swap(col, piv);
            }
            let d = a[col * n + col];
            for row in col + 1..n {
                let f = a[row * n + col] / d;
                a[row * n + col] = f;
                if f == 0.0 {
                    continue;
                }
                for k in col + 1..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
            }
        }
        Ok(DenseLu { a, perm, n })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let permuted: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for row in 1..n {
            for k in 0..row {
                let f = self.a[row * n + k];
                if f != 0.0 {
                    b[row] -= f * b[k];
                }
            }
        }
        for row in (0..n).rev() {
            for k in row + 1..n {
                b[row] -= self.a[row * n + k] * b[k];
            }
            b[row] /= self.a[row * n + row];
        }
    }
}
