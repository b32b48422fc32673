//! Activity-diagram domain types and the graph accessors shared by the
//! allocator, generator, and property resolver.
//!
//! Declaration order of nodes and edges is preserved everywhere and is the
//! canonical iteration order, which keeps every downstream artifact (module
//! allocation, generated models, golden files) deterministic.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{Expr, Value};

/// A parsed `.adl` file: one or more activities.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityFile {
    pub activities: Vec<Activity>,
}

impl ActivityFile {
    pub fn activity(&self, name: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Activity {
    pub name: String,
    pub parameters: Vec<Parameter>,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub property_groups: Vec<PropertyGroup>,
    /// Name of the property group selected by a `verify` declaration.
    pub to_be_verified: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Real,
    Int,
    Bool,
}

impl ParamType {
    pub fn keyword(self) -> &'static str {
        match self {
            ParamType::Real => "real",
            ParamType::Int => "int",
            ParamType::Bool => "bool",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub ptype: ParamType,
    pub default_value: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Initial,
    ActivityFinal,
    FlowFinal,
    Fork,
    Join,
    Merge,
    Decision,
    OpaqueAction,
}

impl NodeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Initial => "initial",
            NodeKind::ActivityFinal => "final",
            NodeKind::FlowFinal => "flowfinal",
            NodeKind::Fork => "fork",
            NodeKind::Join => "join",
            NodeKind::Merge => "merge",
            NodeKind::Decision => "decision",
            NodeKind::OpaqueAction => "action",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub reliability: Option<Expr>,
    pub duration: Option<Expr>,
    pub rate: Option<Expr>,
    pub rewards: Vec<(String, Expr)>,
}

impl Node {
    pub fn plain(name: &str, kind: NodeKind) -> Node {
        Node {
            name: name.to_string(),
            kind,
            reliability: None,
            duration: None,
            rate: None,
            rewards: Vec::new(),
        }
    }
}

/// A decision out-edge guard: either a boolean expression or the `else`
/// alternative covering the complement of its siblings.
#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    Expr(Expr),
    Else,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub name: String,
    pub source: String,
    pub target: String,
    pub prob: Option<Expr>,
    pub guard: Option<Guard>,
    pub rewards: Vec<(String, Expr)>,
}

impl Edge {
    pub fn plain(name: &str, source: &str, target: &str) -> Edge {
        Edge {
            name: name.to_string(),
            source: source.to_string(),
            target: target.to_string(),
            prob: None,
            guard: None,
            rewards: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelType {
    Dtmc,
    Mdp,
    Ctmc,
}

impl ModelType {
    pub fn keyword(self) -> &'static str {
        match self {
            ModelType::Dtmc => "dtmc",
            ModelType::Mdp => "mdp",
            ModelType::Ctmc => "ctmc",
        }
    }
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A named group of properties checked against one model type, with label
/// definitions shared by its property texts. Label and property bodies stay
/// opaque strings here; the property resolver parses them later.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyGroup {
    pub name: String,
    pub model_type: ModelType,
    pub labels: Vec<(String, String)>,
    pub properties: Vec<(String, String)>,
}

impl PropertyGroup {
    pub fn label(&self, name: &str) -> Option<&str> {
        self.labels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.as_str())
    }

    pub fn property(&self, name: &str) -> Option<&str> {
        self.properties
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.as_str())
    }
}

impl Activity {
    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn edge(&self, name: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.name == name)
    }

    pub fn parameter(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn property_group(&self, name: &str) -> Option<&PropertyGroup> {
        self.property_groups.iter().find(|g| g.name == name)
    }

    /// All `Initial` nodes, in declaration order.
    pub fn initial_nodes(&self) -> Vec<&Node> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Initial)
            .collect()
    }

    /// All edges with the given source node, in declaration order.
    pub fn out_edges(&self, node: &str) -> Vec<&Edge> {
        self.edges.iter().filter(|e| e.source == node).collect()
    }

    /// All edges with the given target node, in declaration order.
    pub fn in_edges(&self, node: &str) -> Vec<&Edge> {
        self.edges.iter().filter(|e| e.target == node).collect()
    }

    /// Evaluation environment built from parameter defaults only; parameters
    /// without a default are absent.
    pub fn default_env(&self) -> BTreeMap<String, Value> {
        let mut env = BTreeMap::new();
        for p in &self.parameters {
            if let Some(d) = &p.default_value {
                if let Ok(v) = d.eval(&BTreeMap::new()) {
                    env.insert(p.name.clone(), v);
                }
            }
        }
        env
    }
}
