//! Builds a [`PrismModel`] from a validated activity and its flow
//! allocation.
//!
//! Every module gets a program counter ranging over the nodes it owns
//! (numbered in entry order, `-1` = inactive), plus boolean flags for "this
//! flow wants to terminate" and "this flow failed" when the flow can reach an
//! activity-final or run a reliability-annotated action. One module — the one
//! anchored at the initial node — additionally owns the activity-wide
//! `terminated` flag, the synchronized `terminate` command's bookkeeping, and
//! the absorbing self-loop that keeps the final state live.
//!
//! Model types share one structure: for `dtmc`/`mdp` the updates carry plain
//! probability weights (omitted when there is a single update), while `ctmc`
//! attaches an explicit rate to every update — `1/duration` or the `rate`
//! annotation on actions, and the configurable `default_rate` on all control
//! transitions ("instantaneous" steps made very fast instead).

use std::collections::BTreeSet;

use admc_core::activity::{Activity, Edge, Guard, ModelType, Node, NodeKind, ParamType};
use admc_core::expr::BigRational;
use num_bigint::BigInt;
use thiserror::Error;

use crate::alloc::ModMaps;
use crate::ast::{
    Command, ConstType, ConstantDecl, Formula, PBinOp, PExpr, PrismModel, PrismModule,
    RewardItem, RewardStruct, Update, VarDecl, VarType,
};

/// Name of the distinguished "flow inactive" program-counter value.
pub const INACTIVE: &str = "INACTIVE";
/// Name of the mean-duration constant backing `default_rate` (ctmc only).
pub const MEAN_DURATION: &str = "mean_duration";
/// Name of the rate formula used by control transitions (ctmc only).
pub const DEFAULT_RATE: &str = "default_rate";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("action `{0}` needs a duration or rate annotation for a ctmc model")]
    MissingTiming(String),
    #[error("parameter `{0}` clashes with a reserved model name")]
    ReservedName(String),
}

/// Tuning knobs for the transformation.
#[derive(Debug, Clone)]
pub struct GenOptions {
    /// Mean sojourn time of control transitions in ctmc models;
    /// `default_rate` is its reciprocal.
    pub mean_duration: BigRational,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            mean_duration: BigRational::new(BigInt::from(1), BigInt::from(1000)),
        }
    }
}

/// Transforms one activity into a PRISM model of the given type.
pub fn transform(
    act: &Activity,
    mm: &ModMaps,
    model_type: ModelType,
    opts: &GenOptions,
) -> Result<PrismModel, GenError> {
    Generator::new(act, mm, model_type, opts).run()
}

struct Generator<'a> {
    act: &'a Activity,
    mm: &'a ModMaps,
    model_type: ModelType,
    opts: &'a GenOptions,
    /// Live module indices in creation order.
    live: Vec<usize>,
    /// Node lists per live module (parallel to `live`).
    nodes: Vec<Vec<String>>,
    /// Commands per live module (parallel to `live`).
    commands: Vec<Vec<Command>>,
    needs_tbt: Vec<bool>,
    needs_tbf: Vec<bool>,
    main: usize,
}

impl<'a> Generator<'a> {
    fn new(
        act: &'a Activity,
        mm: &'a ModMaps,
        model_type: ModelType,
        opts: &'a GenOptions,
    ) -> Generator<'a> {
        let live = mm.live_modules();
        let nodes: Vec<Vec<String>> = live.iter().map(|&i| mm.module_nodes(i)).collect();
        let n = live.len();
        let main_module = act
            .initial_nodes()
            .first()
            .and_then(|ini| mm.module_of(&ini.name))
            .unwrap_or_else(|| live.first().copied().unwrap_or(0));
        let main = live.iter().position(|&i| i == main_module).unwrap_or(0);
        Generator {
            act,
            mm,
            model_type,
            opts,
            live,
            nodes,
            commands: vec![Vec::new(); n],
            needs_tbt: vec![false; n],
            needs_tbf: vec![false; n],
            main,
        }
    }

    // ---- naming -----------------------------------------------------------

    fn module_name(&self, slot: usize) -> &str {
        &self.mm.modules[self.live[slot]].name
    }

    /// Live-module slot for a global module index.
    fn slot_of(&self, module_idx: usize) -> usize {
        self.live
            .iter()
            .position(|&i| i == module_idx)
            .expect("live module")
    }

    fn pc_name(&self, slot: usize) -> String {
        format!("{}::pc", self.module_name(slot))
    }

    fn const_name(&self, slot: usize, node: &str) -> String {
        format!("{}::{}", self.module_name(slot), node)
    }

    fn local_tbt(&self, slot: usize) -> String {
        format!("{}::to_be_terminated", self.module_name(slot))
    }

    fn local_tbf(&self, slot: usize) -> String {
        format!("{}::to_be_failed", self.module_name(slot))
    }

    fn act_tbt(&self) -> String {
        format!("{}::to_be_terminated", self.act.name)
    }

    fn act_tbf(&self) -> String {
        format!("{}::to_be_failed", self.act.name)
    }

    fn act_terminated(&self) -> String {
        format!("{}::terminated", self.act.name)
    }

    fn terminate_label(&self) -> String {
        format!("{}::terminate", self.act.name)
    }

    fn node_label(&self, slot: usize, node: &str) -> String {
        format!("{}::{}", self.module_name(slot), node)
    }

    fn shared_label(&self, node: &str) -> String {
        format!("{}::{}", self.act.name, node)
    }

    fn merge_edge_label(&self, merge: &str, in_edge: &str) -> String {
        format!("{}::{}::{}", self.act.name, merge, in_edge)
    }

    // ---- guard / update building blocks -----------------------------------

    fn node(&self, name: &str) -> &Node {
        self.act.node(name).expect("validated node")
    }

    fn guard_at(&self, slot: usize, node: &str) -> PExpr {
        PExpr::eq(
            PExpr::ident(self.pc_name(slot)),
            PExpr::ident(self.const_name(slot, node)),
        )
    }

    fn guard_inactive(&self, slot: usize) -> PExpr {
        PExpr::eq(PExpr::ident(self.pc_name(slot)), PExpr::ident(INACTIVE))
    }

    fn guard_not_tbt(&self) -> PExpr {
        PExpr::not(PExpr::ident(self.act_tbt()))
    }

    /// Assignments moving `slot`'s flow onto `target`, raising the local
    /// termination flag when the target is an activity-final.
    fn assigns_to(&mut self, slot: usize, target: &str) -> Vec<(String, PExpr)> {
        let mut assigns = vec![(
            self.pc_name(slot),
            PExpr::ident(self.const_name(slot, target)),
        )];
        if self.node(target).kind == NodeKind::ActivityFinal {
            assigns.push((self.local_tbt(slot), PExpr::Bool(true)));
            self.needs_tbt[slot] = true;
        }
        assigns
    }

    fn assigns_inactive(&self, slot: usize) -> Vec<(String, PExpr)> {
        vec![(self.pc_name(slot), PExpr::ident(INACTIVE))]
    }

    /// Rate carried by control transitions: `default_rate` for ctmc, omitted
    /// weight for dtmc/mdp.
    fn control_weight(&self) -> Option<PExpr> {
        match self.model_type {
            ModelType::Ctmc => Some(PExpr::ident(DEFAULT_RATE)),
            _ => None,
        }
    }

    fn real_one() -> PExpr {
        PExpr::Real(BigRational::from_integer(BigInt::from(1)))
    }

    /// The exit rate of an action in a ctmc: its `rate` annotation, or the
    /// reciprocal of its `duration`.
    fn action_rate(&self, node: &Node) -> Result<PExpr, GenError> {
        if let Some(rate) = &node.rate {
            return Ok(PExpr::from_expr(rate));
        }
        if let Some(duration) = &node.duration {
            return Ok(PExpr::bin(
                PBinOp::Div,
                Self::real_one(),
                PExpr::from_expr(duration),
            ));
        }
        Err(GenError::MissingTiming(node.name.clone()))
    }

    fn push_command(&mut self, slot: usize, command: Command) {
        self.commands[slot].push(command);
    }

    // ---- merge classification ----------------------------------------------

    fn merge_out_edge(&self, merge: &str) -> &Edge {
        self.act
            .out_edges(merge)
            .first()
            .copied()
            .expect("merge has an out-edge")
    }

    /// A merge whose incoming flows and continuation do not all live in one
    /// module; it synchronizes per in-edge instead of advancing in place.
    fn merge_is_cross(&self, merge: &str) -> bool {
        let oe = self.merge_out_edge(merge);
        let out_owner = self.mm.owner_of_entry(&oe.target, &oe.name);
        let in_owners: BTreeSet<Option<usize>> = self
            .act
            .in_edges(merge)
            .iter()
            .map(|ie| self.mm.owner_of_entry(merge, &ie.name))
            .collect();
        in_owners.len() != 1 || !in_owners.contains(&out_owner)
    }

    // ---- main pass ----------------------------------------------------------

    fn run(mut self) -> Result<PrismModel, GenError> {
        self.check_reserved()?;
        self.generate_commands()?;
        self.append_termination();
        let mut model = PrismModel::empty(self.model_type);
        model.constants = self.build_constants();
        model.formulas = self.build_formulas();
        model.reward_structs = self.build_rewards();
        model.modules = self.build_modules();
        Ok(model)
    }

    fn check_reserved(&self) -> Result<(), GenError> {
        for p in &self.act.parameters {
            if p.name == INACTIVE || p.name == MEAN_DURATION || p.name == DEFAULT_RATE {
                return Err(GenError::ReservedName(p.name.clone()));
            }
        }
        Ok(())
    }

    fn generate_commands(&mut self) -> Result<(), GenError> {
        let mut emitted: BTreeSet<(usize, String)> = BTreeSet::new();
        let mut activated: BTreeSet<(usize, String)> = BTreeSet::new();
        for slot in 0..self.live.len() {
            let entries = self.mm.modules[self.live[slot]].entries.clone();
            for (node_name, edge_name) in entries {
                let edge = self.act.edge(&edge_name).expect("validated edge").clone();
                // A flow can be activated from outside: by a fork branch or by
                // the continuation of a cross-module merge.
                if edge.source != node_name {
                    let src_kind = self.node(&edge.source).kind;
                    match src_kind {
                        NodeKind::Fork => {
                            let owner = self.mm.module_of(&edge.source).map(|i| self.slot_of(i));
                            if owner != Some(slot)
                                && activated.insert((slot, edge.source.clone()))
                            {
                                self.gen_fork_activation(slot, &edge);
                            }
                        }
                        NodeKind::Merge => {
                            if self.merge_is_cross(&edge.source)
                                && activated.insert((slot, edge.source.clone()))
                            {
                                self.gen_merge_activation(slot, &edge);
                            }
                        }
                        _ => {}
                    }
                }
                self.gen_node_commands(slot, &node_name, &edge_name, &mut emitted)?;
            }
        }
        Ok(())
    }

    fn gen_fork_activation(&mut self, slot: usize, branch_edge: &Edge) {
        let label = self.shared_label(&branch_edge.source);
        let guard = vec![self.guard_inactive(slot), self.guard_not_tbt()];
        let assigns = self.assigns_to(slot, &branch_edge.target);
        self.push_command(
            slot,
            Command {
                action: Some(label),
                guard,
                updates: vec![Update {
                    weight: self.control_weight(),
                    assigns,
                }],
            },
        );
    }

    /// The continuation module of a cross-module merge: one activation
    /// command per incoming edge, synchronizing with that edge's feeder. An
    /// in-edge whose feeder already lives in this module is skipped here —
    /// its feeder command advances directly instead of handing over.
    fn gen_merge_activation(&mut self, slot: usize, out_edge: &Edge) {
        let merge = out_edge.source.clone();
        let in_edges: Vec<String> = self
            .act
            .in_edges(&merge)
            .iter()
            .map(|ie| ie.name.clone())
            .collect();
        for ie in in_edges {
            if self.entry_slot(&merge, &ie) == Some(slot) {
                continue;
            }
            let guard = vec![self.guard_inactive(slot), self.guard_not_tbt()];
            let assigns = self.assigns_to(slot, &out_edge.target);
            self.push_command(
                slot,
                Command {
                    action: Some(self.merge_edge_label(&merge, &ie)),
                    guard,
                    updates: vec![Update {
                        weight: self.control_weight(),
                        assigns,
                    }],
                },
            );
        }
    }

    /// Live-module slot owning the (node, edge) entry, if any.
    fn entry_slot(&self, node: &str, edge: &str) -> Option<usize> {
        self.mm.owner_of_entry(node, edge).map(|i| self.slot_of(i))
    }

    fn gen_node_commands(
        &mut self,
        slot: usize,
        node_name: &str,
        edge_name: &str,
        emitted: &mut BTreeSet<(usize, String)>,
    ) -> Result<(), GenError> {
        let node = self.node(node_name).clone();
        let owner = self
            .mm
            .module_of(node_name)
            .map(|i| self.slot_of(i))
            .unwrap_or(slot);
        match node.kind {
            NodeKind::Initial => {
                // The anchoring entry carries the initial's own out-edge.
                let edge = self.act.edge(edge_name).expect("validated edge").clone();
                if edge.source == node_name && emitted.insert((slot, node_name.to_string())) {
                    let guard = vec![self.guard_at(slot, node_name), self.guard_not_tbt()];
                    let assigns = self.assigns_to(slot, &edge.target);
                    self.push_command(
                        slot,
                        Command {
                            action: Some(self.node_label(slot, node_name)),
                            guard,
                            updates: vec![Update {
                                weight: self.control_weight(),
                                assigns,
                            }],
                        },
                    );
                }
            }
            NodeKind::OpaqueAction => {
                if owner == slot && emitted.insert((slot, node_name.to_string())) {
                    self.gen_opaque_action(slot, &node)?;
                }
            }
            NodeKind::Decision => {
                if owner == slot && emitted.insert((slot, node_name.to_string())) {
                    self.gen_decision(slot, &node)?;
                }
            }
            NodeKind::Fork => {
                if owner == slot && emitted.insert((slot, node_name.to_string())) {
                    let first_out = self
                        .act
                        .out_edges(node_name)
                        .first()
                        .copied()
                        .expect("fork has out-edges")
                        .clone();
                    let guard = vec![self.guard_at(slot, node_name), self.guard_not_tbt()];
                    let assigns = self.assigns_to(slot, &first_out.target);
                    self.push_command(
                        slot,
                        Command {
                            action: Some(self.shared_label(node_name)),
                            guard,
                            updates: vec![Update {
                                weight: self.control_weight(),
                                assigns,
                            }],
                        },
                    );
                }
            }
            NodeKind::Join => {
                if emitted.insert((slot, node_name.to_string())) {
                    let out_edge = self
                        .act
                        .out_edges(node_name)
                        .first()
                        .copied()
                        .expect("join has an out-edge")
                        .clone();
                    let advancing = self
                        .mm
                        .owner_of_entry(&out_edge.target, &out_edge.name)
                        .map(|i| self.slot_of(i));
                    let guard = vec![self.guard_at(slot, node_name), self.guard_not_tbt()];
                    let assigns = if advancing == Some(slot) {
                        self.assigns_to(slot, &out_edge.target)
                    } else {
                        self.assigns_inactive(slot)
                    };
                    self.push_command(
                        slot,
                        Command {
                            action: Some(self.shared_label(node_name)),
                            guard,
                            updates: vec![Update {
                                weight: self.control_weight(),
                                assigns,
                            }],
                        },
                    );
                }
            }
            NodeKind::Merge => {
                if self.merge_is_cross(node_name) {
                    // Feeder side: the in-edge hands the flow over to the
                    // continuation module, or advances directly when the
                    // continuation lives here too.
                    let out_edge = self.merge_out_edge(node_name).clone();
                    let continuation = self.entry_slot(&out_edge.target, &out_edge.name);
                    let guard = vec![self.guard_at(slot, node_name), self.guard_not_tbt()];
                    let assigns = if continuation == Some(slot) {
                        self.assigns_to(slot, &out_edge.target)
                    } else {
                        self.assigns_inactive(slot)
                    };
                    self.push_command(
                        slot,
                        Command {
                            action: Some(self.merge_edge_label(node_name, edge_name)),
                            guard,
                            updates: vec![Update {
                                weight: self.control_weight(),
                                assigns,
                            }],
                        },
                    );
                } else if emitted.insert((slot, node_name.to_string())) {
                    let out_edge = self.merge_out_edge(node_name).clone();
                    let guard = vec![self.guard_at(slot, node_name), self.guard_not_tbt()];
                    let assigns = self.assigns_to(slot, &out_edge.target);
                    self.push_command(
                        slot,
                        Command {
                            action: Some(self.node_label(slot, node_name)),
                            guard,
                            updates: vec![Update {
                                weight: self.control_weight(),
                                assigns,
                            }],
                        },
                    );
                }
            }
            NodeKind::FlowFinal => {
                if emitted.insert((slot, node_name.to_string())) {
                    let guard = vec![self.guard_at(slot, node_name), self.guard_not_tbt()];
                    let assigns = self.assigns_inactive(slot);
                    self.push_command(
                        slot,
                        Command {
                            action: Some(self.node_label(slot, node_name)),
                            guard,
                            updates: vec![Update {
                                weight: self.control_weight(),
                                assigns,
                            }],
                        },
                    );
                }
            }
            NodeKind::ActivityFinal => {
                // Reached flows raise their termination flag on arrival; the
                // node itself has no command.
            }
        }
        Ok(())
    }

    fn gen_opaque_action(&mut self, slot: usize, node: &Node) -> Result<(), GenError> {
        let out_edge = self
            .act
            .out_edges(&node.name)
            .first()
            .copied()
            .expect("action has an out-edge")
            .clone();
        let guard = vec![self.guard_at(slot, &node.name), self.guard_not_tbt()];
        let updates = match &node.reliability {
            None => {
                let weight = match self.model_type {
                    ModelType::Ctmc => Some(self.action_rate(node)?),
                    _ => None,
                };
                vec![Update {
                    weight,
                    assigns: self.assigns_to(slot, &out_edge.target),
                }]
            }
            Some(rel) => {
                // Failure branch first: the flow stops, the failure is
                // recorded, and the whole activity is asked to terminate.
                let r = PExpr::from_expr(rel);
                let one_minus_r = PExpr::bin(PBinOp::Sub, Self::real_one(), r.clone());
                let (fail_weight, ok_weight) = match self.model_type {
                    ModelType::Ctmc => {
                        let rate = self.action_rate(node)?;
                        (
                            Some(PExpr::bin(PBinOp::Mul, rate.clone(), one_minus_r)),
                            Some(PExpr::bin(PBinOp::Mul, rate, r)),
                        )
                    }
                    _ => (Some(one_minus_r), Some(r)),
                };
                self.needs_tbt[slot] = true;
                self.needs_tbf[slot] = true;
                let mut fail_assigns = self.assigns_inactive(slot);
                fail_assigns.push((self.local_tbf(slot), PExpr::Bool(true)));
                fail_assigns.push((self.local_tbt(slot), PExpr::Bool(true)));
                vec![
                    Update {
                        weight: fail_weight,
                        assigns: fail_assigns,
                    },
                    Update {
                        weight: ok_weight,
                        assigns: self.assigns_to(slot, &out_edge.target),
                    },
                ]
            }
        };
        self.push_command(
            slot,
            Command {
                action: Some(self.node_label(slot, &node.name)),
                guard,
                updates,
            },
        );
        Ok(())
    }

    fn gen_decision(&mut self, slot: usize, node: &Node) -> Result<(), GenError> {
        let outs: Vec<Edge> = self
            .act
            .out_edges(&node.name)
            .into_iter()
            .cloned()
            .collect();
        let guarded = outs.iter().any(|e| e.guard.is_some());
        if guarded {
            // One command per branch; `else` covers the complement of the
            // explicit guards.
            let explicit: Vec<PExpr> = outs
                .iter()
                .filter_map(|e| match &e.guard {
                    Some(Guard::Expr(g)) => Some(PExpr::from_expr(g)),
                    _ => None,
                })
                .collect();
            for e in &outs {
                let branch_guard = match &e.guard {
                    Some(Guard::Expr(g)) => PExpr::from_expr(g),
                    Some(Guard::Else) | None => {
                        PExpr::not(PExpr::disjunction(explicit.clone()))
                    }
                };
                let guard = vec![
                    self.guard_at(slot, &node.name),
                    self.guard_not_tbt(),
                    branch_guard,
                ];
                let assigns = self.assigns_to(slot, &e.target);
                self.push_command(
                    slot,
                    Command {
                        action: Some(format!(
                            "{}::{}",
                            self.node_label(slot, &node.name),
                            e.name
                        )),
                        guard,
                        updates: vec![Update {
                            weight: self.control_weight(),
                            assigns,
                        }],
                    },
                );
            }
        } else if outs.len() == 1 {
            let guard = vec![self.guard_at(slot, &node.name), self.guard_not_tbt()];
            let assigns = self.assigns_to(slot, &outs[0].target);
            self.push_command(
                slot,
                Command {
                    action: Some(self.node_label(slot, &node.name)),
                    guard,
                    updates: vec![Update {
                        weight: self.control_weight(),
                        assigns,
                    }],
                },
            );
        } else {
            // Probabilistic branching: one command, one update per edge.
            let guard = vec![self.guard_at(slot, &node.name), self.guard_not_tbt()];
            let mut updates = Vec::new();
            for e in &outs {
                let prob = e.prob.as_ref().expect("validated decision probability");
                let weight = match self.model_type {
                    ModelType::Ctmc => PExpr::bin(
                        PBinOp::Mul,
                        PExpr::ident(DEFAULT_RATE),
                        PExpr::from_expr(prob),
                    ),
                    _ => PExpr::from_expr(prob),
                };
                updates.push(Update {
                    weight: Some(weight),
                    assigns: self.assigns_to(slot, &e.target),
                });
            }
            self.push_command(
                slot,
                Command {
                    action: Some(self.node_label(slot, &node.name)),
                    guard,
                    updates,
                },
            );
        }
        Ok(())
    }

    /// The synchronized `terminate` command in every module, plus the
    /// absorbing self-loop in the main module.
    fn append_termination(&mut self) {
        for slot in 0..self.live.len() {
            let mut assigns = self.assigns_inactive(slot);
            let guard;
            if slot == self.main {
                guard = vec![
                    PExpr::ident(self.act_tbt()),
                    PExpr::not(PExpr::ident(self.act_terminated())),
                ];
                assigns.push((self.act_terminated(), PExpr::Bool(true)));
            } else {
                guard = vec![PExpr::ident(self.act_tbt())];
            }
            if self.needs_tbt[slot] {
                assigns.push((self.local_tbt(slot), PExpr::Bool(false)));
            }
            self.push_command(
                slot,
                Command {
                    action: Some(self.terminate_label()),
                    guard,
                    updates: vec![Update {
                        weight: self.control_weight(),
                        assigns,
                    }],
                },
            );
        }
        let absorbing = Command {
            action: None,
            guard: vec![
                self.guard_inactive(self.main),
                PExpr::and(
                    PExpr::ident(self.act_terminated()),
                    PExpr::not(PExpr::ident(self.act_tbt())),
                ),
            ],
            updates: vec![Update {
                weight: self.control_weight(),
                assigns: Vec::new(),
            }],
        };
        self.push_command(self.main, absorbing);
    }

    // ---- sections -----------------------------------------------------------

    fn build_constants(&self) -> Vec<ConstantDecl> {
        let mut constants = vec![ConstantDecl {
            name: INACTIVE.to_string(),
            ctype: ConstType::Int,
            value: Some(PExpr::int(-1)),
        }];
        if self.model_type == ModelType::Ctmc {
            constants.push(ConstantDecl {
                name: MEAN_DURATION.to_string(),
                ctype: ConstType::Double,
                value: Some(PExpr::Real(self.opts.mean_duration.clone())),
            });
        }
        for (slot, nodes) in self.nodes.iter().enumerate() {
            for (value, node) in nodes.iter().enumerate() {
                constants.push(ConstantDecl {
                    name: self.const_name(slot, node),
                    ctype: ConstType::Int,
                    value: Some(PExpr::int(value as i64)),
                });
            }
        }
        for p in &self.act.parameters {
            let ctype = match p.ptype {
                ParamType::Real => ConstType::Double,
                ParamType::Int => ConstType::Int,
                ParamType::Bool => ConstType::Bool,
            };
            constants.push(ConstantDecl {
                name: p.name.clone(),
                ctype,
                value: p.default_value.as_ref().map(PExpr::from_expr),
            });
        }
        constants
    }

    fn build_formulas(&self) -> Vec<Formula> {
        let mut formulas = vec![
            Formula {
                name: self.act_tbt(),
                disjuncts: (0..self.live.len())
                    .filter(|&s| self.needs_tbt[s])
                    .map(|s| PExpr::ident(self.local_tbt(s)))
                    .collect(),
            },
            Formula {
                name: self.act_tbf(),
                disjuncts: (0..self.live.len())
                    .filter(|&s| self.needs_tbf[s])
                    .map(|s| PExpr::ident(self.local_tbf(s)))
                    .collect(),
            },
        ];
        if self.model_type == ModelType::Ctmc {
            formulas.push(Formula {
                name: DEFAULT_RATE.to_string(),
                disjuncts: vec![PExpr::bin(
                    PBinOp::Div,
                    Self::real_one(),
                    PExpr::ident(MEAN_DURATION),
                )],
            });
        }
        formulas
    }

    fn build_modules(&self) -> Vec<PrismModule> {
        let mut modules = Vec::new();
        for slot in 0..self.live.len() {
            let starts_active = self.mm.modules[self.live[slot]]
                .entries
                .first()
                .map(|(node, _)| self.node(node).kind == NodeKind::Initial)
                .unwrap_or(false);
            let mut vars = vec![VarDecl {
                name: self.pc_name(slot),
                vtype: VarType::IntRange {
                    lo: PExpr::int(-1),
                    hi: PExpr::int(self.nodes[slot].len() as i64 - 1),
                },
                init: if starts_active {
                    PExpr::int(0)
                } else {
                    PExpr::ident(INACTIVE)
                },
            }];
            if self.needs_tbt[slot] {
                vars.push(VarDecl {
                    name: self.local_tbt(slot),
                    vtype: VarType::Bool,
                    init: PExpr::Bool(false),
                });
            }
            if self.needs_tbf[slot] {
                vars.push(VarDecl {
                    name: self.local_tbf(slot),
                    vtype: VarType::Bool,
                    init: PExpr::Bool(false),
                });
            }
            if slot == self.main {
                vars.push(VarDecl {
                    name: self.act_terminated(),
                    vtype: VarType::Bool,
                    init: PExpr::Bool(false),
                });
            }
            modules.push(PrismModule {
                name: self.module_name(slot).to_string(),
                vars,
                commands: self.commands[slot].clone(),
            });
        }
        modules
    }

    /// Transition rewards: a node reward pays on the action's own command, an
    /// edge reward pays on the command that walks the edge. Same-named
    /// rewards merge into one structure.
    fn build_rewards(&self) -> Vec<RewardStruct> {
        let mut structs: Vec<RewardStruct> = Vec::new();
        let mut push = |name: &str, item: RewardItem| {
            match structs.iter_mut().find(|s| s.name == name) {
                Some(s) => s.items.push(item),
                None => structs.push(RewardStruct {
                    name: name.to_string(),
                    items: vec![item],
                }),
            }
        };
        for (slot, nodes) in self.nodes.iter().enumerate() {
            for node_name in nodes {
                let node = self.node(node_name);
                let owner = self
                    .mm
                    .module_of(node_name)
                    .map(|i| self.slot_of(i))
                    .unwrap_or(slot);
                if owner != slot {
                    continue;
                }
                if node.kind == NodeKind::OpaqueAction {
                    for (rname, value) in &node.rewards {
                        push(
                            rname,
                            RewardItem {
                                action: self.node_label(slot, node_name),
                                guard: vec![self.guard_at(slot, node_name)],
                                value: PExpr::from_expr(value),
                            },
                        );
                    }
                }
                for edge in self.act.out_edges(node_name) {
                    if edge.rewards.is_empty() {
                        continue;
                    }
                    for (label, guard) in self.edge_walk_items(slot, node, edge) {
                        for (rname, value) in &edge.rewards {
                            push(
                                rname,
                                RewardItem {
                                    action: label.clone(),
                                    guard: vec![guard.clone()],
                                    value: PExpr::from_expr(value),
                                },
                            );
                        }
                    }
                }
            }
        }
        structs
    }

    /// The command label(s) that fire exactly when `edge` is walked, with the
    /// state guard identifying the source node.
    fn edge_walk_items(&self, slot: usize, source: &Node, edge: &Edge) -> Vec<(String, PExpr)> {
        match source.kind {
            NodeKind::OpaqueAction | NodeKind::Initial | NodeKind::FlowFinal => vec![(
                self.node_label(slot, &source.name),
                self.guard_at(slot, &source.name),
            )],
            NodeKind::Fork => vec![(
                self.shared_label(&source.name),
                self.guard_at(slot, &source.name),
            )],
            NodeKind::Join => {
                let advancing = self
                    .mm
                    .owner_of_entry(&edge.target, &edge.name)
                    .map(|i| self.slot_of(i))
                    .unwrap_or(slot);
                vec![(
                    self.shared_label(&source.name),
                    self.guard_at(advancing, &source.name),
                )]
            }
            NodeKind::Decision => {
                let guarded = self
                    .act
                    .out_edges(&source.name)
                    .iter()
                    .any(|e| e.guard.is_some());
                let label = if guarded {
                    format!("{}::{}", self.node_label(slot, &source.name), edge.name)
                } else {
                    self.node_label(slot, &source.name)
                };
                vec![(label, self.guard_at(slot, &source.name))]
            }
            NodeKind::Merge => {
                if self.merge_is_cross(&source.name) {
                    // The out-edge is walked by whichever in-edge handover
                    // fires; one item per synchronization label. Fused
                    // feeders (continuation in the same module) fire from the
                    // merge's own counter value rather than from inactive.
                    let continuation = self
                        .mm
                        .owner_of_entry(&edge.target, &edge.name)
                        .map(|i| self.slot_of(i))
                        .unwrap_or(slot);
                    self.act
                        .in_edges(&source.name)
                        .iter()
                        .map(|ie| {
                            let guard = if self.entry_slot(&source.name, &ie.name)
                                == Some(continuation)
                            {
                                self.guard_at(continuation, &source.name)
                            } else {
                                self.guard_inactive(continuation)
                            };
                            (self.merge_edge_label(&source.name, &ie.name), guard)
                        })
                        .collect()
                } else {
                    vec![(
                        self.node_label(slot, &source.name),
                        self.guard_at(slot, &source.name),
                    )]
                }
            }
            NodeKind::ActivityFinal => Vec::new(),
        }
    }
}
