//! Sparse-to-dense linear solving for Markov-chain fixpoint equations
//! `x = P·x + b`. The system is decomposed into strongly connected
//! components, solved bottom-up; each component becomes a dense LU solve.
//! This is exact (up to floating point) and comfortably fast at the tool's
//! desk scale; oversized dense blocks abort rather than thrash.

use thiserror::Error;

use crate::graph::sccs;

/// Largest dense block the solver will materialize.
const MAX_DENSE: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("dense linear block of {0} states exceeds the {MAX_DENSE}-state limit")]
    TooLarge(usize),
    #[error("singular linear system (state {0})")]
    Singular(usize),
}

/// Solves `x[s] = b[s] + Σ_t P[s][t]·x[t]` for every state with
/// `known[s] == None`; fixed states keep their given value. `rows` holds the
/// sparse P entries per state.
pub fn solve_fixpoint(
    rows: &[Vec<(usize, f64)>],
    b: &[f64],
    known: &[Option<f64>],
) -> Result<Vec<f64>, SolveError> {
    let n = rows.len();
    let mut x: Vec<f64> = known.iter().map(|k| k.unwrap_or(0.0)).collect();
    let unknown: Vec<usize> = (0..n).filter(|&s| known[s].is_none()).collect();
    if unknown.is_empty() {
        return Ok(x);
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        pos[s] = i;
    }
    // Subgraph restricted to unknown states.
    let succ: Vec<Vec<usize>> = unknown
        .iter()
        .map(|&s| {
            rows[s]
                .iter()
                .filter(|&&(t, p)| p != 0.0 && pos[t] != usize::MAX)
                .map(|&(t, _)| pos[t])
                .collect()
        })
        .collect();

    // Tarjan emits components after their successors, so by the time a
    // component is solved every x[t] it depends on outside itself is final.
    for comp in sccs(&succ) {
        let m = comp.len();
        if m > MAX_DENSE {
            return Err(SolveError::TooLarge(m));
        }
        let mut local = vec![usize::MAX; unknown.len()];
        for (i, &u) in comp.iter().enumerate() {
            local[u] = i;
        }
        let mut a = vec![0.0f64; m * m];
        let mut rhs = vec![0.0f64; m];
        for (i, &u) in comp.iter().enumerate() {
            let s = unknown[u];
            a[i * m + i] = 1.0;
            rhs[i] = b[s];
            for &(t, p) in &rows[s] {
                let ut = pos[t];
                if ut != usize::MAX && local[ut] != usize::MAX {
                    a[i * m + local[ut]] -= p;
                } else {
                    rhs[i] += p * x[t];
                }
            }
        }
        let sol = lu_solve(&mut a, &mut rhs, m).map_err(|i| SolveError::Singular(unknown[comp[i]]))?;
        for (i, &u) in comp.iter().enumerate() {
            x[unknown[u]] = sol[i];
        }
    }
    Ok(x)
}

/// In-place dense LU with partial pivoting; returns the solution or the
/// index of a singular pivot row.
fn lu_solve(a: &mut [f64], rhs: &mut [f64], n: usize) -> Result<Vec<f64>, usize> {
    for col in 0..n {
        // Pivot selection.
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
            rhs.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_gamblers_ruin() {
        // Fair coin, absorb at 0 and 3; from i, P(hit 3) = i/3.
        let rows = vec![
            vec![],
            vec![(0, 0.5), (2, 0.5)],
            vec![(1, 0.5), (3, 0.5)],
            vec![],
        ];
        let b = vec![0.0; 4];
        let known = vec![Some(0.0), None, None, Some(1.0)];
        let x = solve_fixpoint(&rows, &b, &known).unwrap();
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-14);
        assert!((x[2] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn solves_expected_steps() {
        // Same chain, expected steps to absorption: E1 = E2 = 2 at p=1/2
        // gives E1 = 1 + 0.5·E2, E2 = 1 + 0.5·E1 → E = 2.
        let rows = vec![
            vec![],
            vec![(0, 0.5), (2, 0.5)],
            vec![(1, 0.5), (3, 0.5)],
            vec![],
        ];
        let b = vec![0.0, 1.0, 1.0, 0.0];
        let known = vec![Some(0.0), None, None, Some(0.0)];
        let x = solve_fixpoint(&rows, &b, &known).unwrap();
        assert!((x[1] - 2.0).abs() < 1e-14);
        assert!((x[2] - 2.0).abs() < 1e-14);
    }
}
