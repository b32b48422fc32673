//! Allocation of concurrent activity flows to PRISM modules.
//!
//! Starting from each initial node, the diagram is traversed breadth-first.
//! Every edge is assigned to exactly one module — the module whose program
//! counter walks that edge — recorded as a `(target-node, edge) -> module`
//! entry; initial nodes additionally record the `(initial, out-edge)` entry
//! that anchors the module they start. Forks open one fresh module per extra
//! outgoing edge, joins hand the continuation to the first incoming flow
//! whose module is already known, and merges fall into one of four cases:
//! several distinct in-flow modules (a fresh module owns the continuation),
//! a single known module with all feeders traversed (reuse it), or loops
//! that cannot be decided yet, which are parked on *provisional* modules and
//! reconciled once the whole graph has been walked.
//!
//! The per-module entry lists — including the order in which provisional
//! entries are folded back — define the numbering of the generated
//! program-counter constants, so insertion order is preserved religiously.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use admc_core::activity::{Activity, NodeKind};

/// One flow-to-module assignment table for an activity.
#[derive(Debug, Clone)]
pub struct ModMaps {
    /// All modules in creation order, provisional ones included.
    pub modules: Vec<AllocModule>,
    /// Node names in the order they were first traversed (initials first).
    pub visit_order: Vec<String>,
    /// Module index that first defined each node, by insertion time.
    first_owner: BTreeMap<String, usize>,
    /// Module index owning each `(node, edge)` entry.
    entry_owner: BTreeMap<(String, String), usize>,
}

#[derive(Debug, Clone)]
pub struct AllocModule {
    /// Qualified module name: `activity::node::edge` of the defining call.
    pub name: String,
    /// The merge node this module was provisionally created for, if any.
    pub provisional_for: Option<String>,
    /// Set when a provisional module was folded into a surviving module.
    pub resolved_into: Option<usize>,
    /// `(node, edge)` entries in insertion order, including entries appended
    /// when provisional modules are folded in.
    pub entries: Vec<(String, String)>,
}

impl AllocModule {
    /// A module that survives into the generated PRISM model.
    pub fn is_live(&self) -> bool {
        self.resolved_into.is_none()
    }
}

impl ModMaps {
    /// Follows provisional-resolution links to the surviving module index.
    pub fn canonical(&self, mut idx: usize) -> usize {
        while let Some(next) = self.modules[idx].resolved_into {
            idx = next;
        }
        idx
    }

    /// The module that first defined `node`, after resolution.
    pub fn module_of(&self, node: &str) -> Option<usize> {
        self.first_owner.get(node).map(|&i| self.canonical(i))
    }

    /// The module owning the `(node, edge)` entry, after resolution.
    pub fn owner_of_entry(&self, node: &str, edge: &str) -> Option<usize> {
        self.entry_owner
            .get(&(node.to_string(), edge.to_string()))
            .map(|&i| self.canonical(i))
    }

    /// Indices of live modules, in creation order.
    pub fn live_modules(&self) -> Vec<usize> {
        (0..self.modules.len())
            .filter(|&i| self.modules[i].is_live())
            .collect()
    }

    /// Live modules owning at least one entry for `node`, in creation order.
    pub fn modules_defining(&self, node: &str) -> Vec<usize> {
        self.live_modules()
            .into_iter()
            .filter(|&i| self.modules[i].entries.iter().any(|(n, _)| n == node))
            .collect()
    }

    /// Per-module node list in first-occurrence order; this is the numbering
    /// of the generated program-counter constants.
    pub fn module_nodes(&self, idx: usize) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (node, _) in &self.modules[idx].entries {
            if seen.insert(node.clone()) {
                out.push(node.clone());
            }
        }
        out
    }

    /// Total number of `(node, edge)` entries across all modules.
    pub fn entry_count(&self) -> usize {
        self.entry_owner.len()
    }

    /// All entries sorted lexicographically by `(node, edge)`, with the
    /// surviving module name — the layout used by diagnostic dumps.
    pub fn sorted_entries(&self) -> Vec<(String, String, String)> {
        let mut rows: Vec<_> = self
            .entry_owner
            .iter()
            .map(|((node, edge), &idx)| {
                let m = self.canonical(idx);
                (node.clone(), edge.clone(), self.modules[m].name.clone())
            })
            .collect();
        rows.sort();
        rows
    }

    /// Renders the sorted entry table, one `(node, edge) -> module` per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (node, edge, module) in self.sorted_entries() {
            out.push_str(&format!("({node}, {edge}) -> {module}\n"));
        }
        out
    }
}

struct Alloc<'a> {
    act: &'a Activity,
    mm: ModMaps,
    queue: VecDeque<String>,
    visited: BTreeSet<String>,
}

/// Runs the flow allocation for one activity. Assumes the activity passed
/// validation (single out-edges where required, no dangling names).
pub fn preprocess(act: &Activity) -> ModMaps {
    let mut a = Alloc {
        act,
        mm: ModMaps {
            modules: Vec::new(),
            visit_order: Vec::new(),
            first_owner: BTreeMap::new(),
            entry_owner: BTreeMap::new(),
        },
        queue: VecDeque::new(),
        visited: BTreeSet::new(),
    };
    a.pre_process();
    a.traverse();
    a.resolve_provisional();
    a.mm
}

impl<'a> Alloc<'a> {
    fn kind(&self, node: &str) -> NodeKind {
        self.act.node(node).map(|n| n.kind).unwrap_or(NodeKind::OpaqueAction)
    }

    fn mk_module(&mut self, node: &str, edge: &str, provisional_for: Option<String>) -> usize {
        let name = format!("{}::{}::{}", self.act.name, node, edge);
        self.mm.modules.push(AllocModule {
            name,
            provisional_for,
            resolved_into: None,
            entries: Vec::new(),
        });
        self.mm.modules.len() - 1
    }

    fn insert_entry(&mut self, module: usize, node: &str, edge: &str) {
        self.mm.modules[module]
            .entries
            .push((node.to_string(), edge.to_string()));
        self.mm
            .first_owner
            .entry(node.to_string())
            .or_insert(module);
        self.mm
            .entry_owner
            .insert((node.to_string(), edge.to_string()), module);
    }

    /// Assigns the edge's target to `module` and schedules the target.
    fn add_target(&mut self, edge_name: &str, module: usize) {
        let edge = self.act.edge(edge_name).expect("validated edge");
        let target = edge.target.clone();
        self.insert_entry(module, &target, edge_name);
        self.queue.push_back(target);
    }

    fn mark_visited(&mut self, node: &str) {
        if self.visited.insert(node.to_string()) {
            self.mm.visit_order.push(node.to_string());
        }
    }

    fn pre_process(&mut self) {
        let initials: Vec<String> = self
            .act
            .initial_nodes()
            .iter()
            .map(|n| n.name.clone())
            .collect();
        for ini in initials {
            self.mark_visited(&ini);
            let outs: Vec<String> = self
                .act
                .out_edges(&ini)
                .iter()
                .map(|e| e.name.clone())
                .collect();
            for oe in outs {
                let m = self.mk_module(&ini, &oe, None);
                self.insert_entry(m, &ini, &oe);
                self.add_target(&oe, m);
            }
        }
    }

    fn traverse(&mut self) {
        while let Some(nd) = self.queue.pop_front() {
            if self.visited.contains(&nd) {
                continue;
            }
            match self.kind(&nd) {
                NodeKind::Initial => {
                    // Initials are handled in pre-processing and never queued.
                    self.mark_visited(&nd);
                }
                NodeKind::OpaqueAction => {
                    self.mark_visited(&nd);
                    let m = self.mm.module_of(&nd).expect("action already mapped");
                    let outs: Vec<String> =
                        self.act.out_edges(&nd).iter().map(|e| e.name.clone()).collect();
                    for oe in outs {
                        self.add_target(&oe, m);
                    }
                }
                NodeKind::Fork => {
                    self.mark_visited(&nd);
                    let m = self.mm.module_of(&nd).expect("fork already mapped");
                    let outs: Vec<String> =
                        self.act.out_edges(&nd).iter().map(|e| e.name.clone()).collect();
                    for (i, oe) in outs.iter().enumerate() {
                        if i == 0 {
                            self.add_target(oe, m);
                        } else {
                            let fresh = self.mk_module(&nd, oe, None);
                            self.add_target(oe, fresh);
                        }
                    }
                }
                NodeKind::Decision => {
                    self.mark_visited(&nd);
                    let m = self.mm.module_of(&nd).expect("decision already mapped");
                    let outs: Vec<String> =
                        self.act.out_edges(&nd).iter().map(|e| e.name.clone()).collect();
                    for oe in outs {
                        self.add_target(&oe, m);
                    }
                }
                NodeKind::Join => {
                    // The first incoming flow (declaration order) whose module
                    // is known carries the continuation; if none is known yet
                    // the join waits at the back of the queue.
                    let feeder = self
                        .act
                        .in_edges(&nd)
                        .iter()
                        .find_map(|ie| self.mm.module_of(&ie.source));
                    match feeder {
                        Some(m) => {
                            self.mark_visited(&nd);
                            let outs: Vec<String> = self
                                .act
                                .out_edges(&nd)
                                .iter()
                                .map(|e| e.name.clone())
                                .collect();
                            for oe in outs {
                                self.add_target(&oe, m);
                            }
                        }
                        None => self.queue.push_back(nd),
                    }
                }
                NodeKind::Merge => self.merge_proc(&nd),
                NodeKind::FlowFinal | NodeKind::ActivityFinal => {
                    self.mark_visited(&nd);
                }
            }
        }
    }

    /// Modules currently assigned to the merge's incoming edges.
    fn merge_in_modules(&self, nd: &str) -> BTreeSet<usize> {
        self.act
            .in_edges(nd)
            .iter()
            .filter_map(|ie| self.mm.owner_of_entry(nd, &ie.name))
            .collect()
    }

    fn merge_sources_visited(&self, nd: &str) -> bool {
        self.act
            .in_edges(nd)
            .iter()
            .all(|ie| self.visited.contains(&ie.source))
    }

    fn merge_proc(&mut self, nd: &str) {
        let in_mods = self.merge_in_modules(nd);
        let oe = self
            .act
            .out_edges(nd)
            .first()
            .map(|e| e.name.clone())
            .expect("merge has an out-edge");
        if in_mods.len() > 1 {
            // Incoming flows live in different modules: the continuation is a
            // fresh flow of its own.
            self.mark_visited(nd);
            let fresh = self.mk_module(nd, &oe, None);
            self.add_target(&oe, fresh);
        } else if in_mods.len() == 1 && self.merge_sources_visited(nd) {
            self.mark_visited(nd);
            let m = *in_mods.iter().next().unwrap();
            self.add_target(&oe, m);
        } else if self.queue.is_empty() {
            // Nothing else can make progress: park the loop on a provisional
            // module and keep walking.
            self.mark_visited(nd);
            let fresh = self.mk_module(nd, &oe, Some(nd.to_string()));
            self.add_target(&oe, fresh);
        } else {
            self.multi_loops_proc(nd);
        }
    }

    /// Handles mutually-waiting merges: requeue this one, and if the whole
    /// queue consists of undecidable merges, break the tie by parking the
    /// front one on a provisional module.
    fn multi_loops_proc(&mut self, nd: &str) {
        self.queue.push_back(nd.to_string());
        let pending: Vec<String> = self
            .queue
            .iter()
            .filter(|n| !self.visited.contains(*n))
            .cloned()
            .collect();
        if pending
            .iter()
            .any(|n| self.kind(n) != NodeKind::Merge)
        {
            return;
        }
        for n in &pending {
            let mods = self.merge_in_modules(n);
            if mods.len() > 1 || (mods.len() == 1 && self.merge_sources_visited(n)) {
                return;
            }
        }
        if let Some(front) = pending.first().cloned() {
            let pos = self
                .queue
                .iter()
                .position(|n| *n == front)
                .expect("front merge is queued");
            self.queue.remove(pos);
            self.mark_visited(&front);
            let oe = self
                .act
                .out_edges(&front)
                .first()
                .map(|e| e.name.clone())
                .expect("merge has an out-edge");
            let fresh = self.mk_module(&front, &oe, Some(front.clone()));
            self.add_target(&oe, fresh);
        }
    }

    /// Folds provisional modules into surviving ones: a provisional module is
    /// resolvable once the modules feeding its merge (other than itself)
    /// collapse to exactly one non-provisional module; its entries are then
    /// appended to that module. Provisional modules that survive the fixpoint
    /// are promoted to ordinary modules.
    fn resolve_provisional(&mut self) {
        loop {
            let mut changed = false;
            for idx in 0..self.mm.modules.len() {
                if !self.mm.modules[idx].is_live() {
                    continue;
                }
                let merge = match &self.mm.modules[idx].provisional_for {
                    Some(m) => m.clone(),
                    None => continue,
                };
                let mut feeders: BTreeSet<usize> = self
                    .act
                    .in_edges(&merge)
                    .iter()
                    .filter_map(|ie| self.mm.owner_of_entry(&merge, &ie.name))
                    .collect();
                feeders.remove(&idx);
                if feeders.len() != 1 {
                    continue;
                }
                let target = *feeders.iter().next().unwrap();
                if self.mm.modules[target].provisional_for.is_some() {
                    continue;
                }
                let entries = std::mem::take(&mut self.mm.modules[idx].entries);
                self.mm.modules[target].entries.extend(entries);
                self.mm.modules[idx].resolved_into = Some(target);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        // Whatever is still provisional becomes a real module.
        for m in &mut self.mm.modules {
            if m.is_live() {
                m.provisional_for = None;
            }
        }
    }
}
