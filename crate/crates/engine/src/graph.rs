//! Graph preprocessing for the numeric solvers: reachability closures,
//! Tarjan's strongly connected components (emitted bottom-up, so dependent
//! components can be solved in order), and the qualitative probability-0/1
//! state sets that let the quantitative solvers work on a reduced system.

/// Forward reachability over an adjacency list.
pub fn forward_reach(succ: &[Vec<usize>], seeds: &[usize]) -> Vec<bool> {
    let mut seen = vec![false; succ.len()];
    let mut stack: Vec<usize> = Vec::new();
    for &s in seeds {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for &v in &succ[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Backward reachability: states with some path into `targets`. Targets are
/// treated as absorbing when `absorb_targets` is set — paths may end in a
/// target but not pass through one.
pub fn backward_reach(succ: &[Vec<usize>], targets: &[bool], absorb_targets: bool) -> Vec<bool> {
    let n = succ.len();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, vs) in succ.iter().enumerate() {
        if absorb_targets && targets[u] {
            continue;
        }
        for &v in vs {
            pred[v].push(u);
        }
    }
    let seeds: Vec<usize> = (0..n).filter(|&s| targets[s]).collect();
    forward_reach(&pred, &seeds)
}

/// Tarjan's algorithm, iterative. Components are emitted in reverse
/// topological order (a component's successors appear before it), which is
/// exactly the order the linear solver wants.
pub fn sccs(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut out: Vec<Vec<usize>> = Vec::new();

    // Explicit DFS frames: (node, next child position).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (u, ref mut ci)) = frames.last_mut() {
            if *ci < succ[u].len() {
                let v = succ[u][*ci];
                *ci += 1;
                if index[v] == usize::MAX {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    frames.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                frames.pop();
                if let Some(&(p, _)) = frames.last() {
                    low[p] = low[p].min(low[u]);
                }
                if low[u] == index[u] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == u {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Probability-0 and probability-1 sets for reaching `target` in a Markov
/// chain given its positive-probability successor lists.
///
/// prob0 = states with no path to the target; prob1 = states that cannot
/// reach prob0 in the graph where targets are made absorbing.
pub fn prob01_mc(succ: &[Vec<usize>], target: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let can_reach = backward_reach(succ, target, true);
    let prob0: Vec<bool> = can_reach.iter().map(|&b| !b).collect();
    // prob1 over the target-absorbed graph: cut target out-edges, then take
    // the complement of pre*(prob0).
    let n = succ.len();
    let mut cut: Vec<Vec<usize>> = vec![Vec::new(); n];
    for u in 0..n {
        if !target[u] {
            cut[u] = succ[u].clone();
        }
    }
    let tainted = backward_reach(&cut, &prob0, false);
    let prob1 = (0..n).map(|s| !tainted[s]).collect();
    (prob0, prob1)
}

/// Per-state choice successor structure of an MDP: `choices[s]` lists, per
/// nondeterministic choice, the positive-probability successors.
pub type MdpSucc = Vec<Vec<Vec<usize>>>;

/// States where the maximal probability of reaching `target` is 0: no
/// resolution of nondeterminism gives a path to the target.
pub fn prob0_max(choices: &MdpSucc, target: &[bool]) -> Vec<bool> {
    let succ: Vec<Vec<usize>> = choices
        .iter()
        .map(|cs| cs.iter().flatten().copied().collect())
        .collect();
    let (prob0, _) = prob01_mc(&succ, target);
    prob0
}

/// States where some scheduler reaches `target` with probability 1
/// (the standard greatest/least fixpoint characterization).
pub fn prob1_max(choices: &MdpSucc, target: &[bool]) -> Vec<bool> {
    let n = choices.len();
    let mut x = vec![true; n];
    loop {
        // y = least fixpoint: from s, some choice stays in x and makes
        // progress toward (target ∪ already-in-y).
        let mut y = target.to_vec();
        loop {
            let mut changed = false;
            for s in 0..n {
                if y[s] {
                    continue;
                }
                let ok = choices[s].iter().any(|branch| {
                    branch.iter().all(|&t| x[t]) && branch.iter().any(|&t| y[t])
                });
                if ok {
                    y[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if y == x {
            return x;
        }
        x = y;
    }
}

/// States where the minimal reachability probability is 0: some scheduler
/// avoids the target forever. Largest X ⊆ ¬target closed under "some choice
/// stays inside X".
pub fn prob0_min(choices: &MdpSucc, target: &[bool]) -> Vec<bool> {
    let n = choices.len();
    let mut x: Vec<bool> = (0..n).map(|s| !target[s]).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !x[s] {
                continue;
            }
            let ok = choices[s]
                .iter()
                .any(|branch| branch.iter().all(|&t| x[t]));
            if !ok {
                x[s] = false;
                changed = true;
            }
        }
        if !changed {
            return x;
        }
    }
}

/// States where every scheduler reaches `target` with probability 1:
/// complement of "can reach a prob0-min state without passing the target".
pub fn prob1_min(choices: &MdpSucc, target: &[bool]) -> Vec<bool> {
    let n = choices.len();
    let bad = prob0_min(choices, target);
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        if target[s] {
            continue; // reaching the target first is a win under min too
        }
        succ[s] = choices[s].iter().flatten().copied().collect();
    }
    let tainted = backward_reach(&succ, &bad, false);
    (0..n).map(|s| !tainted[s]).collect()
}
