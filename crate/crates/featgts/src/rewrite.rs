//! Graph transformation rules and their application.
//!
//! A [`Rule`] rewrites an instance graph: elements only in the left-hand side
//! are deleted, elements only in the right-hand side are created, shared
//! elements are preserved (their attributes may change). Attribute positions
//! hold [`AttrTerm`]s, so one rule can require two agents to carry the same
//! value, or move a grid coordinate with a built-in.
//!
//! Application follows the double-pushout discipline: deleting a node is only
//! allowed when every incident host edge is deleted by the same match.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::graph::{
    check_typing, AttrDomain, AttrValue, EdgeId, EdgeInst, GraphError, GraphMorphism,
    InstanceGraph, NodeId, TypeGraph,
};
use crate::matching::{AttrConstraint, CompiledPattern, HostIndex, MatchView, PatternSpec};

/// Grid-coordinate built-ins usable on right-hand sides. All act modulo the
/// grid size of the attribute's domain, so the grid wraps around as a torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Builtin {
    IncX,
    DecX,
    IncY,
    DecY,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::IncX => "incX",
            Builtin::DecX => "decX",
            Builtin::IncY => "incY",
            Builtin::DecY => "decY",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "incX" => Some(Builtin::IncX),
            "decX" => Some(Builtin::DecX),
            "incY" => Some(Builtin::IncY),
            "decY" => Some(Builtin::DecY),
            _ => None,
        }
    }

    pub fn apply(self, value: &AttrValue, size: u32) -> Option<AttrValue> {
        let (x, y) = match value {
            AttrValue::Coord { x, y } => (*x, *y),
            _ => return None,
        };
        if size == 0 {
            return None;
        }
        let step = |v: u32, up: bool| -> u32 {
            if up {
                (v + 1) % size
            } else {
                (v + size - 1) % size
            }
        };
        let (x, y) = match self {
            Builtin::IncX => (step(x, true), y),
            Builtin::DecX => (step(x, false), y),
            Builtin::IncY => (x, step(y, true)),
            Builtin::DecY => (x, step(y, false)),
        };
        Some(AttrValue::Coord { x, y })
    }
}

/// A term at an attribute position of a rule pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrTerm {
    Constant(AttrValue),
    Variable(String),
    /// Built-in applied to a variable bound on the left-hand side. Only valid
    /// on right-hand sides.
    BuiltinApp(Builtin, String),
}

impl AttrTerm {
    pub fn symbol(s: impl Into<String>) -> Self {
        AttrTerm::Constant(AttrValue::Symbol(s.into()))
    }

    pub fn int(i: i64) -> Self {
        AttrTerm::Constant(AttrValue::Int(i))
    }

    pub fn coord(x: u32, y: u32) -> Self {
        AttrTerm::Constant(AttrValue::Coord { x, y })
    }

    pub fn var(name: impl Into<String>) -> Self {
        AttrTerm::Variable(name.into())
    }

    pub fn builtin(b: Builtin, var: impl Into<String>) -> Self {
        AttrTerm::BuiltinApp(b, var.into())
    }

    fn variable_name(&self) -> Option<&str> {
        match self {
            AttrTerm::Constant(_) => None,
            AttrTerm::Variable(v) | AttrTerm::BuiltinApp(_, v) => Some(v),
        }
    }
}

impl fmt::Display for AttrTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrTerm::Constant(v) => write!(f, "{v}"),
            AttrTerm::Variable(v) => write!(f, "?{v}"),
            AttrTerm::BuiltinApp(b, v) => write!(f, "{}(?{v})", b.name()),
        }
    }
}

/// One side of a rule: a typed pattern whose attribute positions hold terms.
/// The valuation may be partial; an absent entry constrains nothing on the
/// left and leaves the value unchanged on the right.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RulePattern {
    nodes: BTreeMap<NodeId, String>,
    edges: BTreeMap<EdgeId, EdgeInst>,
    terms: BTreeMap<(NodeId, String), AttrTerm>,
}

impl RulePattern {
    pub fn builder() -> RulePatternBuilder {
        RulePatternBuilder::default()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, &str)> {
        self.nodes.iter().map(|(id, ty)| (id, ty.as_str()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_type(&self, id: &NodeId) -> Option<&str> {
        self.nodes.get(id).map(String::as_str)
    }

    pub fn has_node(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&EdgeId, &EdgeInst)> {
        self.edges.iter()
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&EdgeInst> {
        self.edges.get(id)
    }

    pub fn has_edge(&self, id: &EdgeId) -> bool {
        self.edges.contains_key(id)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NodeId, &str, &AttrTerm)> {
        self.terms.iter().map(|((n, a), t)| (n, a.as_str(), t))
    }

    pub fn term(&self, node: &NodeId, attr: &str) -> Option<&AttrTerm> {
        self.terms.get(&(node.clone(), attr.to_string()))
    }

    /// Term entries of one node, in attribute-name order.
    pub fn terms_of<'a>(&'a self, node: &'a NodeId) -> impl Iterator<Item = (&'a str, &'a AttrTerm)> {
        self.terms
            .range((node.clone(), String::new())..)
            .take_while(move |((n, _), _)| n == node)
            .map(|((_, a), t)| (a.as_str(), t))
    }

    fn variables(&self) -> BTreeSet<String> {
        self.terms
            .values()
            .filter_map(|t| t.variable_name().map(str::to_string))
            .collect()
    }

    /// Restriction to a sub-type-graph: keeps nodes whose type is in `sub`,
    /// edges whose type is in `sub` with surviving endpoints, and terms on
    /// attributes declared in `sub`.
    pub(crate) fn restrict(&self, sub: &TypeGraph) -> RulePattern {
        let mut out = RulePattern::default();
        for (id, ty) in &self.nodes {
            if sub.has_node_type(ty) {
                out.nodes.insert(id.clone(), ty.clone());
            }
        }
        for (id, e) in &self.edges {
            if sub.edge_signature(&e.edge_type).is_some()
                && out.nodes.contains_key(&e.source)
                && out.nodes.contains_key(&e.target)
            {
                out.edges.insert(id.clone(), e.clone());
            }
        }
        for ((n, a), t) in &self.terms {
            if let Some(ty) = out.nodes.get(n) {
                if sub.domain(ty, a).is_some() {
                    out.terms.insert((n.clone(), a.clone()), t.clone());
                }
            }
        }
        out
    }
}

#[derive(Debug, Default, Clone)]
pub struct RulePatternBuilder {
    pattern: RulePattern,
}

impl RulePatternBuilder {
    pub fn node(mut self, id: impl Into<NodeId>, node_type: impl Into<String>) -> Self {
        self.pattern.nodes.insert(id.into(), node_type.into());
        self
    }

    pub fn term(
        mut self,
        node: impl Into<NodeId>,
        attr: impl Into<String>,
        term: AttrTerm,
    ) -> Self {
        self.pattern.terms.insert((node.into(), attr.into()), term);
        self
    }

    pub fn edge(
        mut self,
        id: impl Into<EdgeId>,
        edge_type: impl Into<String>,
        source: impl Into<NodeId>,
        target: impl Into<NodeId>,
    ) -> Self {
        self.pattern.edges.insert(
            id.into(),
            EdgeInst {
                edge_type: edge_type.into(),
                source: source.into(),
                target: target.into(),
            },
        );
        self
    }

    pub fn build(self) -> RulePattern {
        self.pattern
    }
}

/// One agent action: left-hand side, right-hand side, and a stochastic rate
/// used as the per-match propensity coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    name: String,
    lhs: RulePattern,
    rhs: RulePattern,
    rate: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleError {
    #[error("rule `{rule}`: unknown node type `{node_type}`")]
    UnknownNodeType { rule: String, node_type: String },
    #[error("rule `{rule}`: unknown edge type `{edge_type}`")]
    UnknownEdgeType { rule: String, edge_type: String },
    #[error("rule `{rule}`: edge `{edge}` refers to node `{node}` absent from the pattern")]
    EdgeEndpointMissing {
        rule: String,
        edge: EdgeId,
        node: NodeId,
    },
    #[error(
        "rule `{rule}`: edge `{edge}` endpoint `{node}` has type `{actual}`, expected `{expected}`"
    )]
    EndpointTypeMismatch {
        rule: String,
        edge: EdgeId,
        node: NodeId,
        expected: String,
        actual: String,
    },
    #[error("rule `{rule}`: attribute `{node_type}.{attr}` is not declared")]
    UndeclaredAttr {
        rule: String,
        node_type: String,
        attr: String,
    },
    #[error("rule `{rule}`: constant `{value}` lies outside the domain of `{node_type}.{attr}`")]
    ConstantOutsideDomain {
        rule: String,
        node_type: String,
        attr: String,
        value: AttrValue,
    },
    #[error("rule `{rule}`: built-in on `{node_type}.{attr}`, whose domain is not a grid")]
    BuiltinOnNonGrid {
        rule: String,
        node_type: String,
        attr: String,
    },
    #[error("rule `{rule}`: built-in terms may only appear on the right-hand side")]
    BuiltinInLhs { rule: String },
    #[error("rule `{rule}`: right-hand side variable `?{var}` does not occur on the left")]
    UnboundRhsVariable { rule: String, var: String },
    #[error("rule `{rule}`: preserved node `{id}` changes type")]
    PreservedNodeChangesType { rule: String, id: NodeId },
    #[error("rule `{rule}`: preserved edge `{id}` changes type or endpoints")]
    PreservedEdgeChanges { rule: String, id: EdgeId },
    #[error("rule `{rule}`: created node `{id}` has no term for attribute `{attr}`")]
    CreatedNodeMissingAttr {
        rule: String,
        id: NodeId,
        attr: String,
    },
    #[error("rule `{rule}`: rate must be positive and finite")]
    NonPositiveRate { rule: String },
    #[error("rule `{rule}`: match is stale for this host")]
    StaleMatch { rule: String },
    #[error("rule `{rule}`: dangling condition violated at node `{node}`")]
    DanglingCondition { rule: String, node: NodeId },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("duplicate rule name `{0}`")]
    DuplicateRuleName(String),
}

impl Rule {
    /// Validate and construct a rule over `tg`.
    pub fn new(
        tg: &TypeGraph,
        name: impl Into<String>,
        lhs: RulePattern,
        rhs: RulePattern,
        rate: f64,
    ) -> Result<Rule, RuleError> {
        let name = name.into();
        if !(rate.is_finite() && rate > 0.0) {
            return Err(RuleError::NonPositiveRate { rule: name });
        }
        check_pattern(tg, &name, &lhs)?;
        check_pattern(tg, &name, &rhs)?;
        if lhs
            .terms
            .values()
            .any(|t| matches!(t, AttrTerm::BuiltinApp(..)))
        {
            return Err(RuleError::BuiltinInLhs { rule: name });
        }
        let lhs_vars = lhs.variables();
        for var in rhs.variables() {
            if !lhs_vars.contains(&var) {
                return Err(RuleError::UnboundRhsVariable { rule: name, var });
            }
        }
        for (id, ty) in &lhs.nodes {
            if let Some(rhs_ty) = rhs.nodes.get(id) {
                if rhs_ty != ty {
                    return Err(RuleError::PreservedNodeChangesType {
                        rule: name,
                        id: id.clone(),
                    });
                }
            }
        }
        for (id, e) in &lhs.edges {
            if let Some(rhs_e) = rhs.edges.get(id) {
                if rhs_e != e {
                    return Err(RuleError::PreservedEdgeChanges {
                        rule: name,
                        id: id.clone(),
                    });
                }
            }
        }
        for (id, ty) in &rhs.nodes {
            if !lhs.nodes.contains_key(id) {
                for (attr, _) in tg.attrs_of(ty) {
                    if rhs.term(id, attr).is_none() {
                        return Err(RuleError::CreatedNodeMissingAttr {
                            rule: name,
                            id: id.clone(),
                            attr: attr.to_string(),
                        });
                    }
                }
            }
        }
        Ok(Rule {
            name,
            lhs,
            rhs,
            rate,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lhs(&self) -> &RulePattern {
        &self.lhs
    }

    pub fn rhs(&self) -> &RulePattern {
        &self.rhs
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Same rule under a different rate.
    pub fn with_rate(&self, rate: f64) -> Result<Rule, RuleError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(RuleError::NonPositiveRate {
                rule: self.name.clone(),
            });
        }
        Ok(Rule {
            rate,
            ..self.clone()
        })
    }

    /// Node ids deleted by this rule (present on the left only).
    pub fn deleted_nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.lhs
            .nodes
            .keys()
            .filter(move |id| !self.rhs.nodes.contains_key(*id))
    }

    /// Edge ids deleted by this rule.
    pub fn deleted_edges(&self) -> impl Iterator<Item = &EdgeId> {
        self.lhs
            .edges
            .keys()
            .filter(move |id| !self.rhs.edges.contains_key(*id))
    }
}

fn check_pattern(tg: &TypeGraph, rule: &str, pattern: &RulePattern) -> Result<(), RuleError> {
    for ty in pattern.nodes.values() {
        if !tg.has_node_type(ty) {
            return Err(RuleError::UnknownNodeType {
                rule: rule.to_string(),
                node_type: ty.clone(),
            });
        }
    }
    for (id, e) in &pattern.edges {
        let sig = tg
            .edge_signature(&e.edge_type)
            .ok_or_else(|| RuleError::UnknownEdgeType {
                rule: rule.to_string(),
                edge_type: e.edge_type.clone(),
            })?;
        for (node, expected) in [(&e.source, &sig.source), (&e.target, &sig.target)] {
            match pattern.nodes.get(node) {
                None => {
                    return Err(RuleError::EdgeEndpointMissing {
                        rule: rule.to_string(),
                        edge: id.clone(),
                        node: node.clone(),
                    })
                }
                Some(actual) if actual != expected => {
                    return Err(RuleError::EndpointTypeMismatch {
                        rule: rule.to_string(),
                        edge: id.clone(),
                        node: node.clone(),
                        expected: expected.clone(),
                        actual: actual.clone(),
                    })
                }
                Some(_) => {}
            }
        }
    }
    for ((node, attr), term) in &pattern.terms {
        let ty = match pattern.nodes.get(node) {
            // Terms can only be attached to declared nodes through the
            // builder, but tolerate stray entries defensively.
            None => continue,
            Some(ty) => ty,
        };
        let domain = tg
            .domain(ty, attr)
            .ok_or_else(|| RuleError::UndeclaredAttr {
                rule: rule.to_string(),
                node_type: ty.clone(),
                attr: attr.clone(),
            })?;
        match term {
            AttrTerm::Constant(v) => {
                if !domain.contains(v) {
                    return Err(RuleError::ConstantOutsideDomain {
                        rule: rule.to_string(),
                        node_type: ty.clone(),
                        attr: attr.clone(),
                        value: v.clone(),
                    });
                }
            }
            AttrTerm::Variable(_) => {}
            AttrTerm::BuiltinApp(..) => {
                if !matches!(domain, AttrDomain::Grid { .. }) {
                    return Err(RuleError::BuiltinOnNonGrid {
                        rule: rule.to_string(),
                        node_type: ty.clone(),
                        attr: attr.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// A morphism from a rule's left-hand side into a host graph, together with
/// the variable binding it induces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Match {
    pub morphism: GraphMorphism,
    pub binding: BTreeMap<String, AttrValue>,
}

impl Match {
    /// Host node ids in order of the pattern node ids they are matched from.
    pub fn matched_nodes(&self) -> Vec<&NodeId> {
        self.morphism.node_map.values().collect()
    }
}

pub(crate) fn lhs_pattern_spec(rule: &Rule) -> (PatternSpec, Vec<String>) {
    let var_names: Vec<String> = rule.lhs.variables().into_iter().collect();
    let var_index = |name: &str| var_names.iter().position(|v| v == name).unwrap();
    let nodes = rule
        .lhs
        .nodes
        .iter()
        .map(|(id, ty)| {
            let constraints = rule
                .lhs
                .terms_of(id)
                .map(|(attr, term)| {
                    let c = match term {
                        AttrTerm::Constant(v) => AttrConstraint::Const(v.clone()),
                        AttrTerm::Variable(v) => AttrConstraint::Var(var_index(v)),
                        AttrTerm::BuiltinApp(..) => unreachable!("no built-ins on lhs"),
                    };
                    (attr.to_string(), c)
                })
                .collect();
            (id.clone(), ty.clone(), constraints)
        })
        .collect();
    let edges = rule
        .lhs
        .edges
        .iter()
        .map(|(id, e)| {
            (
                id.clone(),
                e.edge_type.clone(),
                e.source.clone(),
                e.target.clone(),
            )
        })
        .collect();
    (
        PatternSpec {
            nodes,
            edges,
            n_vars: var_names.len(),
        },
        var_names,
    )
}

pub(crate) fn view_to_match(
    view: &MatchView<'_, '_>,
    compiled: &CompiledPattern,
    index: &HostIndex<'_>,
    var_names: &[String],
) -> Match {
    let morphism = view.to_morphism(compiled, index);
    let binding = var_names
        .iter()
        .zip(view.bindings)
        .filter_map(|(name, v)| v.map(|v| (name.clone(), v.clone())))
        .collect();
    Match { morphism, binding }
}

/// All matches of `rule`'s left-hand side in `host`, deterministically ordered.
///
/// A match is an injective, type- and structure-compatible morphism together
/// with a consistent binding of the left-hand side's variables; a variable
/// shared by two positions must bind to a single host value.
pub fn find_matches(tg: &TypeGraph, rule: &Rule, host: &InstanceGraph) -> Vec<Match> {
    let (spec, var_names) = lhs_pattern_spec(rule);
    let compiled = CompiledPattern::compile(tg, &spec);
    let index = HostIndex::build(tg, host);
    let mut out = Vec::new();
    compiled.for_each(&index, &mut |view| {
        out.push(view_to_match(view, &compiled, &index, &var_names));
        ControlFlow::Continue(())
    });
    out.sort();
    out
}

/// Check that `m` is a valid match of `rule` in `host` and return the variable
/// binding it induces. Written as a direct transcription of the match
/// conditions, independent of the search in [`find_matches`].
pub fn validate_match(
    rule: &Rule,
    host: &InstanceGraph,
    m: &Match,
) -> Result<BTreeMap<String, AttrValue>, RuleError> {
    let stale = || RuleError::StaleMatch {
        rule: rule.name.clone(),
    };
    let lhs = &rule.lhs;
    if m.morphism.node_map.len() != lhs.nodes.len() || m.morphism.edge_map.len() != lhs.edges.len()
    {
        return Err(stale());
    }
    let mut used_nodes = BTreeSet::new();
    for (p, h) in &m.morphism.node_map {
        let p_ty = lhs.nodes.get(p).ok_or_else(stale)?;
        let h_ty = host.node_type(h).ok_or_else(stale)?;
        if p_ty != h_ty || !used_nodes.insert(h) {
            return Err(stale());
        }
    }
    let mut used_edges = BTreeSet::new();
    for (p, h) in &m.morphism.edge_map {
        let p_edge = lhs.edges.get(p).ok_or_else(stale)?;
        let h_edge = host.edge(h).ok_or_else(stale)?;
        if p_edge.edge_type != h_edge.edge_type || !used_edges.insert(h) {
            return Err(stale());
        }
        if m.morphism.node_map.get(&p_edge.source) != Some(&h_edge.source)
            || m.morphism.node_map.get(&p_edge.target) != Some(&h_edge.target)
        {
            return Err(stale());
        }
    }
    let mut binding: BTreeMap<String, AttrValue> = BTreeMap::new();
    for ((node, attr), term) in &lhs.terms {
        let image = m.morphism.node_map.get(node).ok_or_else(stale)?;
        let host_value = host.attr(image, attr);
        match term {
            AttrTerm::Constant(v) => {
                if let Some(hv) = host_value {
                    if hv != v {
                        return Err(stale());
                    }
                }
            }
            AttrTerm::Variable(var) => {
                let hv = host_value.ok_or_else(stale)?;
                match binding.get(var) {
                    Some(bound) if bound != hv => return Err(stale()),
                    Some(_) => {}
                    None => {
                        binding.insert(var.clone(), hv.clone());
                    }
                }
            }
            AttrTerm::BuiltinApp(..) => unreachable!("no built-ins on lhs"),
        }
    }
    if !m.binding.is_empty() && m.binding != binding {
        return Err(stale());
    }
    Ok(binding)
}

fn eval_term(
    tg: &TypeGraph,
    rule: &str,
    node_type: &str,
    attr: &str,
    term: &AttrTerm,
    binding: &BTreeMap<String, AttrValue>,
) -> Result<AttrValue, RuleError> {
    let stale = || RuleError::StaleMatch {
        rule: rule.to_string(),
    };
    match term {
        AttrTerm::Constant(v) => Ok(v.clone()),
        AttrTerm::Variable(var) => binding.get(var).cloned().ok_or_else(stale),
        AttrTerm::BuiltinApp(b, var) => {
            let value = binding.get(var).ok_or_else(stale)?;
            let size = match tg.domain(node_type, attr) {
                Some(AttrDomain::Grid { size }) => *size,
                _ => {
                    return Err(RuleError::BuiltinOnNonGrid {
                        rule: rule.to_string(),
                        node_type: node_type.to_string(),
                        attr: attr.to_string(),
                    })
                }
            };
            b.apply(value, size).ok_or_else(stale)
        }
    }
}

fn numeric_suffix(id: &str, prefix: char) -> Option<u64> {
    let rest = id.strip_prefix(prefix)?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok()
}

/// Apply `rule` at `m`, returning the rewritten graph.
///
/// Deleted elements are removed, created elements are added under fresh ids
/// from a deterministic counter, preserved elements are kept, and right-hand
/// side terms are evaluated under the match's binding. Errors when the match
/// is stale or the dangling condition fails.
pub fn apply(
    tg: &TypeGraph,
    rule: &Rule,
    host: &InstanceGraph,
    m: &Match,
) -> Result<InstanceGraph, RuleError> {
    let mut out = host.clone();
    apply_mut(tg, rule, &mut out, m)?;
    debug_assert!(
        check_typing(&out, tg).is_ok(),
        "apply produced an ill-typed graph"
    );
    Ok(out)
}

/// In-place variant of [`apply`] for owned states on hot paths (simulation
/// and replay). Validation and term evaluation happen before any mutation, so
/// the state is untouched on error.
pub(crate) fn apply_mut(
    tg: &TypeGraph,
    rule: &Rule,
    state: &mut InstanceGraph,
    m: &Match,
) -> Result<(), RuleError> {
    let binding = validate_match(rule, state, m)?;

    let deleted_node_images: BTreeSet<NodeId> = rule
        .deleted_nodes()
        .map(|id| m.morphism.node_map.get(id).expect("match is total").clone())
        .collect();
    let deleted_edge_images: BTreeSet<EdgeId> = rule
        .deleted_edges()
        .map(|id| m.morphism.edge_map.get(id).expect("match is total").clone())
        .collect();

    // Dangling condition: every host edge at a deleted node must itself be
    // deleted by the match.
    if !deleted_node_images.is_empty() {
        for (edge_id, edge) in state.edges() {
            let touches_deleted = deleted_node_images.contains(&edge.source)
                || deleted_node_images.contains(&edge.target);
            if touches_deleted && !deleted_edge_images.contains(edge_id) {
                let node = if deleted_node_images.contains(&edge.source) {
                    edge.source.clone()
                } else {
                    edge.target.clone()
                };
                return Err(RuleError::DanglingCondition {
                    rule: rule.name.clone(),
                    node,
                });
            }
        }
    }

    let creates_nodes = rule.rhs.nodes.keys().any(|id| !rule.lhs.nodes.contains_key(id));
    let creates_edges = rule.rhs.edges.keys().any(|id| !rule.lhs.edges.contains_key(id));

    // Fresh ids continue after the largest numeric suffix currently in use.
    let mut next_node = if creates_nodes {
        state
            .nodes()
            .filter_map(|(id, _)| numeric_suffix(id.as_str(), 'n'))
            .max()
            .map_or(0, |m| m + 1)
    } else {
        0
    };
    let mut next_edge = if creates_edges {
        state
            .edges()
            .filter_map(|(id, _)| numeric_suffix(id.as_str(), 'e'))
            .max()
            .map_or(0, |m| m + 1)
    } else {
        0
    };

    let mut created_node_ids: BTreeMap<&NodeId, NodeId> = BTreeMap::new();
    if creates_nodes {
        for id in rule.rhs.nodes.keys() {
            if !rule.lhs.nodes.contains_key(id) {
                created_node_ids.insert(id, NodeId(format!("n{next_node}")));
                next_node += 1;
            }
        }
    }
    let image_of = |id: &NodeId| -> Option<NodeId> {
        m.morphism
            .node_map
            .get(id)
            .cloned()
            .or_else(|| created_node_ids.get(id).cloned())
    };

    // Evaluate every right-hand side term before mutating anything.
    let mut attr_updates: Vec<(NodeId, String, AttrValue)> = Vec::new();
    for ((node, attr), term) in &rule.rhs.terms {
        let ty = rule.rhs.nodes.get(node).expect("validated at construction");
        let value = eval_term(tg, &rule.name, ty, attr, term, &binding)?;
        let image = image_of(node).ok_or_else(|| RuleError::StaleMatch {
            rule: rule.name.clone(),
        })?;
        attr_updates.push((image, attr.clone(), value));
    }
    let mut created_edges: Vec<(EdgeId, EdgeInst)> = Vec::new();
    if creates_edges {
        for (id, e) in &rule.rhs.edges {
            if !rule.lhs.edges.contains_key(id) {
                let stale = || RuleError::StaleMatch {
                    rule: rule.name.clone(),
                };
                created_edges.push((
                    EdgeId(format!("e{next_edge}")),
                    EdgeInst {
                        edge_type: e.edge_type.clone(),
                        source: image_of(&e.source).ok_or_else(stale)?,
                        target: image_of(&e.target).ok_or_else(stale)?,
                    },
                ));
                next_edge += 1;
            }
        }
    }

    for id in &deleted_edge_images {
        state.remove_edge(id);
    }
    for id in &deleted_node_images {
        state.remove_node(id);
    }
    for (rhs_id, fresh) in &created_node_ids {
        let ty = rule.rhs.nodes.get(*rhs_id).expect("created from rhs");
        state.insert_node(fresh.clone(), ty.clone());
    }
    for (id, inst) in created_edges {
        state.insert_edge(id, inst);
    }
    for (node, attr, value) in attr_updates {
        state.set_attr(node, attr, value);
    }
    Ok(())
}

/// One attribute rewrite at the type level, with variable names canonicalised
/// so effects of independently written rules compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AttrChange {
    pub node_type: String,
    pub attr: String,
    pub lhs: Option<AttrTerm>,
    pub rhs: AttrTerm,
}

/// What a rule does, expressed over type names only. An empty effect means the
/// rule is an identity up to matching.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effect {
    pub deleted_node_types: BTreeMap<String, usize>,
    pub created_node_types: BTreeMap<String, usize>,
    pub deleted_edge_types: BTreeMap<String, usize>,
    pub created_edge_types: BTreeMap<String, usize>,
    pub attr_changes: BTreeSet<AttrChange>,
}

impl Effect {
    pub fn is_empty(&self) -> bool {
        self.deleted_node_types.is_empty()
            && self.created_node_types.is_empty()
            && self.deleted_edge_types.is_empty()
            && self.created_edge_types.is_empty()
            && self.attr_changes.is_empty()
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("no effect");
        }
        let mut parts = Vec::new();
        let mut push_counted = |verb: &str, map: &BTreeMap<String, usize>| {
            for (ty, count) in map {
                if *count == 1 {
                    parts.push(format!("{verb} {ty}"));
            } else {
                    parts.push(format!("{verb} {ty} x{count}"));
                }
            }
        };
        push_counted("deletes", &self.deleted_node_types);
        push_counted("deletes", &self.deleted_edge_types);
        push_counted("creates", &self.created_node_types);
        push_counted("creates", &self.created_edge_types);
        for c in &self.attr_changes {
            let lhs = c
                .lhs
                .as_ref()
                .map_or_else(|| "*".to_string(), |t| t.to_string());
            parts.push(format!(
                "changes {}.{}: {} -> {}",
                c.node_type, c.attr, lhs, c.rhs
            ));
        }
        f.write_str(&parts.join(", "))
    }
}

fn canonicalise_change(lhs: Option<&AttrTerm>, rhs: &AttrTerm) -> (Option<AttrTerm>, AttrTerm) {
    let mut renames: BTreeMap<String, String> = BTreeMap::new();
    let mut rename = |term: &AttrTerm| -> AttrTerm {
        match term {
            AttrTerm::Constant(v) => AttrTerm::Constant(v.clone()),
            AttrTerm::Variable(v) => {
                let next = format!("v{}", renames.len());
                AttrTerm::Variable(renames.entry(v.clone()).or_insert(next).clone())
            }
            AttrTerm::BuiltinApp(b, v) => {
                let next = format!("v{}", renames.len());
                AttrTerm::BuiltinApp(*b, renames.entry(v.clone()).or_insert(next).clone())
            }
        }
    };
    let lhs = lhs.map(&mut rename);
    let rhs = rename(rhs);
    (lhs, rhs)
}

fn count_types<'a>(types: impl Iterator<Item = &'a String>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for ty in types {
        *out.entry(ty.clone()).or_insert(0) += 1;
    }
    out
}

/// The type-level effect of a rule, computed from the lhs/rhs delta.
pub fn effect_of(rule: &Rule) -> Effect {
    effect_of_patterns(&rule.lhs, &rule.rhs)
}

/// Effect of a raw pattern pair. Total: never needs the enclosing rule to be
/// well-formed, so restricted pattern pairs can be classified directly.
pub(crate) fn effect_of_patterns(lhs: &RulePattern, rhs: &RulePattern) -> Effect {
    let deleted_node_types = count_types(
        lhs.nodes
            .iter()
            .filter(|(id, _)| !rhs.nodes.contains_key(*id))
            .map(|(_, ty)| ty),
    );
    let created_node_types = count_types(
        rhs.nodes
            .iter()
            .filter(|(id, _)| !lhs.nodes.contains_key(*id))
            .map(|(_, ty)| ty),
    );
    let deleted_edge_types = count_types(
        lhs.edges
            .iter()
            .filter(|(id, _)| !rhs.edges.contains_key(*id))
            .map(|(_, e)| &e.edge_type),
    );
    let created_edge_types = count_types(
        rhs.edges
            .iter()
            .filter(|(id, _)| !lhs.edges.contains_key(*id))
            .map(|(_, e)| &e.edge_type),
    );

    let mut attr_changes = BTreeSet::new();
    for (node, ty) in &rhs.nodes {
        if !lhs.nodes.contains_key(node) {
            continue;
        }
        for (attr, rhs_term) in rhs.terms_of(node) {
            let lhs_term = lhs.term(node, attr);
            if lhs_term != Some(rhs_term) {
                let (change_lhs, change_rhs) = canonicalise_change(lhs_term, rhs_term);
                attr_changes.insert(AttrChange {
                    node_type: ty.clone(),
                    attr: attr.to_string(),
                    lhs: change_lhs,
                    rhs: change_rhs,
                });
            }
        }
    }

    Effect {
        deleted_node_types,
        created_node_types,
        deleted_edge_types,
        created_edge_types,
        attr_changes,
    }
}

/// Effect of a rule after restriction to `base`, without requiring the
/// restricted pair to form a valid rule on its own.
pub fn projected_effect(rule: &Rule, base: &TypeGraph) -> Effect {
    effect_of_patterns(&rule.lhs.restrict(base), &rule.rhs.restrict(base))
}

/// Project a rule onto a base type graph: both sides are restricted to the
/// base, dropping terms on removed attribute declarations. Name and rate are
/// preserved. `full` is the type graph the rule lives over; `base` must be
/// included in it.
pub fn project_rule(rule: &Rule, full: &TypeGraph, base: &TypeGraph) -> Result<Rule, RuleError> {
    crate::graph::TypeGraphInclusion::check(base, full)?;
    Rule::new(
        base,
        rule.name.clone(),
        rule.lhs.restrict(base),
        rule.rhs.restrict(base),
        rule.rate,
    )
}

/// A named graph transformation system: a type graph plus rules with unique
/// names, each well-typed over the type graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Gts {
    name: String,
    type_graph: TypeGraph,
    rules: BTreeMap<String, Rule>,
}

impl Gts {
    pub fn new(
        name: impl Into<String>,
        type_graph: TypeGraph,
        rules: Vec<Rule>,
    ) -> Result<Gts, RuleError> {
        let name = name.into();
        let mut map = BTreeMap::new();
        for rule in rules {
            Rule::new(
                &type_graph,
                rule.name.clone(),
                rule.lhs.clone(),
                rule.rhs.clone(),
                rule.rate,
            )?;
            let rule_name = rule.name.clone();
            if map.insert(rule_name.clone(), rule).is_some() {
                return Err(RuleError::DuplicateRuleName(rule_name));
            }
        }
        Ok(Gts {
            name,
            type_graph,
            rules: map,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn type_graph(&self) -> &TypeGraph {
        &self.type_graph
    }

    /// Rules in name order.
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values()
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.get(name)
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }
}

/// Bijective correspondence between the elements of two rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleIso {
    pub node_map: BTreeMap<NodeId, NodeId>,
    pub edge_map: BTreeMap<EdgeId, EdgeId>,
    pub var_map: BTreeMap<String, String>,
}

fn unify_terms(
    ta: &AttrTerm,
    tb: &AttrTerm,
    var_map: &mut BTreeMap<String, String>,
    var_rev: &mut BTreeMap<String, String>,
) -> bool {
    let mut unify_vars = |va: &str, vb: &str| match (var_map.get(va), var_rev.get(vb)) {
        (Some(mapped), _) if mapped != vb => false,
        (_, Some(rev)) if rev != va => false,
        _ => {
            var_map.insert(va.to_string(), vb.to_string());
            var_rev.insert(vb.to_string(), va.to_string());
            true
        }
    };
    match (ta, tb) {
        (AttrTerm::Constant(x), AttrTerm::Constant(y)) => x == y,
        (AttrTerm::Variable(x), AttrTerm::Variable(y)) => unify_vars(x, y),
        (AttrTerm::BuiltinApp(fa, x), AttrTerm::BuiltinApp(fb, y)) => {
            fa == fb && unify_vars(x, y)
        }
        _ => false,
    }
}

fn rule_element_ids(rule: &Rule) -> (Vec<NodeId>, Vec<EdgeId>) {
    let mut nodes: BTreeSet<NodeId> = rule.lhs.nodes.keys().cloned().collect();
    nodes.extend(rule.rhs.nodes.keys().cloned());
    let mut edges: BTreeSet<EdgeId> = rule.lhs.edges.keys().cloned().collect();
    edges.extend(rule.rhs.edges.keys().cloned());
    (nodes.into_iter().collect(), edges.into_iter().collect())
}

fn node_signature(rule: &Rule, id: &NodeId) -> (bool, bool, String) {
    (
        rule.lhs.nodes.contains_key(id),
        rule.rhs.nodes.contains_key(id),
        rule.lhs
            .nodes
            .get(id)
            .or_else(|| rule.rhs.nodes.get(id))
            .cloned()
            .unwrap_or_default(),
    )
}

fn edge_fits(
    a: &Rule,
    b: &Rule,
    node_map: &BTreeMap<NodeId, NodeId>,
    ea: &EdgeId,
    eb: &EdgeId,
) -> bool {
    for (side_a, side_b) in [(&a.lhs, &b.lhs), (&a.rhs, &b.rhs)] {
        match (side_a.edges.get(ea), side_b.edges.get(eb)) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                if x.edge_type != y.edge_type
                    || node_map.get(&x.source) != Some(&y.source)
                    || node_map.get(&x.target) != Some(&y.target)
                {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

struct EdgeIsoSearch<'a> {
    a: &'a Rule,
    b: &'a Rule,
    node_map: &'a BTreeMap<NodeId, NodeId>,
    a_edges: &'a [EdgeId],
    b_edges: &'a [EdgeId],
}

impl EdgeIsoSearch<'_> {
    fn assign(&self, pos: usize, used: &mut [bool], edge_map: &mut BTreeMap<EdgeId, EdgeId>) -> bool {
        if pos == self.a_edges.len() {
            return true;
        }
        let ea = &self.a_edges[pos];
        // Identity candidate first, for stable and natural correspondences.
        let mut order: Vec<usize> = (0..self.b_edges.len()).collect();
        if let Some(same) = self.b_edges.iter().position(|eb| eb == ea) {
            order.retain(|&i| i != same);
            order.insert(0, same);
        }
        for i in order {
            if used[i] || !edge_fits(self.a, self.b, self.node_map, ea, &self.b_edges[i]) {
                continue;
            }
            used[i] = true;
            edge_map.insert(ea.clone(), self.b_edges[i].clone());
            if self.assign(pos + 1, used, edge_map) {
                return true;
            }
            used[i] = false;
            edge_map.remove(ea);
        }
        false
    }
}

fn complete_iso(a: &Rule, b: &Rule, node_map: &BTreeMap<NodeId, NodeId>) -> Option<RuleIso> {
    let mut var_map = BTreeMap::new();
    let mut var_rev = BTreeMap::new();
    for (side_a, side_b) in [(&a.lhs, &b.lhs), (&a.rhs, &b.rhs)] {
        if side_a.terms.len() != side_b.terms.len() {
            return None;
        }
        for ((n, attr), ta) in &side_a.terms {
            let nb = node_map.get(n)?;
            let tb = side_b.terms.get(&(nb.clone(), attr.clone()))?;
            if !unify_terms(ta, tb, &mut var_map, &mut var_rev) {
                return None;
            }
        }
    }
    let (_, a_edges) = rule_element_ids(a);
    let (_, b_edges) = rule_element_ids(b);
    if a_edges.len() != b_edges.len() {
        return None;
    }
    let mut used = vec![false; b_edges.len()];
    let mut edge_map = BTreeMap::new();
    let search = EdgeIsoSearch {
        a,
        b,
        node_map,
        a_edges: &a_edges,
        b_edges: &b_edges,
    };
    if search.assign(0, &mut used, &mut edge_map) {
        Some(RuleIso {
            node_map: node_map.clone(),
            edge_map,
            var_map,
        })
    } else {
        None
    }
}

fn assign_iso_nodes(
    a: &Rule,
    b: &Rule,
    a_nodes: &[NodeId],
    b_nodes: &[NodeId],
    pos: usize,
    used: &mut [bool],
    node_map: &mut BTreeMap<NodeId, NodeId>,
) -> Option<RuleIso> {
    if pos == a_nodes.len() {
        return complete_iso(a, b, node_map);
    }
    let na = &a_nodes[pos];
    let sig = node_signature(a, na);
    let mut order: Vec<usize> = (0..b_nodes.len()).collect();
    if let Some(same) = b_nodes.iter().position(|nb| nb == na) {
        order.retain(|&i| i != same);
        order.insert(0, same);
    }
    for i in order {
        if used[i] || node_signature(b, &b_nodes[i]) != sig {
            continue;
        }
        used[i] = true;
        node_map.insert(na.clone(), b_nodes[i].clone());
        if let Some(iso) = assign_iso_nodes(a, b, a_nodes, b_nodes, pos + 1, used, node_map) {
            return Some(iso);
        }
        used[i] = false;
        node_map.remove(na);
    }
    None
}

/// Search for an isomorphism between two rules as lhs/rhs pattern pairs: a
/// bijection on node and edge ids preserving sides, types, structure, and
/// attribute terms up to a consistent renaming of variables. Rates are not
/// compared. Prefers the identity correspondence wherever ids coincide.
pub fn rule_isomorphic(a: &Rule, b: &Rule) -> Option<RuleIso> {
    let (a_nodes, a_edges) = rule_element_ids(a);
    let (b_nodes, b_edges) = rule_element_ids(b);
    if a_nodes.len() != b_nodes.len() || a_edges.len() != b_edges.len() {
        return None;
    }
    assign_iso_nodes(
        a,
        b,
        &a_nodes,
        &b_nodes,
        0,
        &mut vec![false; b_nodes.len()],
        &mut BTreeMap::new(),
    )
}
