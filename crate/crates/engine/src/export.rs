//! Plain-text exports of the explored state space for external inspection:
//! one state or transition per line, tab-separated.

use std::fmt::Write;

use num_traits::ToPrimitive;

use crate::build::ExplicitModel;

/// `state<TAB>var=value,...` per line, in exploration order.
pub fn export_states(em: &ExplicitModel) -> String {
    let mut out = String::new();
    for s in 0..em.state_count() {
        let _ = writeln!(out, "{}\t{}", s, em.render_state(s));
    }
    out
}

/// `src<TAB>dst<TAB>weight[<TAB>action]` per line. Weights are transition
/// probabilities (dtmc/mdp) or rates (ctmc).
pub fn export_trans(em: &ExplicitModel) -> String {
    let mut out = String::new();
    for (s, cs) in em.choices.iter().enumerate() {
        for c in cs {
            for (t, w) in &c.branches {
                let w = w.to_f64().unwrap_or(f64::NAN);
                match &c.action {
                    Some(a) => {
                        let _ = writeln!(out, "{s}\t{t}\t{w}\t{a}");
                    }
                    None => {
                        let _ = writeln!(out, "{s}\t{t}\t{w}");
                    }
                }
            }
        }
    }
    out
}
