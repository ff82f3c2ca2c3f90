//! Typed attributed graphs: the substrate every other module builds on.
//!
//! A [`TypeGraph`] declares the vocabulary of a model (node types, edge types,
//! attribute declarations); an [`InstanceGraph`] is one concrete world state
//! typed over it. Graphs are immutable values: every operation returns a new
//! graph, so they can be shared freely across threads.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::matching;

/// Identifier of a node inside one instance graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub String);

/// Identifier of an edge inside one instance graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl EdgeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl From<&str> for EdgeId {
    fn from(s: &str) -> Self {
        EdgeId(s.to_string())
    }
}

impl From<String> for EdgeId {
    fn from(s: String) -> Self {
        EdgeId(s)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A concrete attribute value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrValue {
    /// Member of a finite symbol set, e.g. `S`, `I`, `R`.
    Symbol(String),
    /// Member of a bounded integer range.
    Int(i64),
    /// Point on a square grid with wrap-around; both components lie in
    /// `[0, size)` of the declaring [`AttrDomain::Grid`].
    Coord { x: u32, y: u32 },
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Symbol(s) => f.write_str(s),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Coord { x, y } => write!(f, "({x}, {y})"),
        }
    }
}

/// The set of values an attribute may take.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrDomain {
    /// A finite set of symbolic constants.
    Symbols(BTreeSet<String>),
    /// Integers from `min` to `max`, both inclusive.
    IntRange { min: i64, max: i64 },
    /// Pairs `(x, y)` with `0 <= x, y < size`, treated as a torus by the
    /// movement built-ins.
    Grid { size: u32 },
}

impl AttrDomain {
    pub fn symbols<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AttrDomain::Symbols(values.into_iter().map(Into::into).collect())
    }

    pub fn is_empty(&self) -> bool {
        match self {
            AttrDomain::Symbols(s) => s.is_empty(),
            AttrDomain::IntRange { min, max } => min > max,
            AttrDomain::Grid { size } => *size == 0,
        }
    }

    pub fn contains(&self, value: &AttrValue) -> bool {
        match (self, value) {
            (AttrDomain::Symbols(set), AttrValue::Symbol(s)) => set.contains(s),
            (AttrDomain::IntRange { min, max }, AttrValue::Int(i)) => min <= i && i <= max,
            (AttrDomain::Grid { size }, AttrValue::Coord { x, y }) => x < size && y < size,
            _ => false,
        }
    }
}

/// Declared signature of an edge type: source and target node types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSignature {
    pub source: String,
    pub target: String,
}

/// The vocabulary of a model: node types, edge types and attribute
/// declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeGraph {
    node_types: BTreeSet<String>,
    edge_types: BTreeMap<String, EdgeSignature>,
    attr_decls: BTreeMap<(String, String), AttrDomain>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node type `{0}`")]
    DuplicateNodeType(String),
    #[error("duplicate edge type `{0}`")]
    DuplicateEdgeType(String),
    #[error("duplicate attribute declaration `{0}.{1}`")]
    DuplicateAttrDecl(String, String),
    #[error("edge type `{edge_type}` refers to unknown node type `{node_type}`")]
    UnknownEndpointType { edge_type: String, node_type: String },
    #[error("attribute `{node_type}.{attr}` declared on unknown node type")]
    AttrOnUnknownType { node_type: String, attr: String },
    #[error("attribute `{node_type}.{attr}` has an empty domain")]
    EmptyDomain { node_type: String, attr: String },
    #[error("node type `{0}` is missing from the extension")]
    MissingNodeType(String),
    #[error("edge type `{0}` is missing from the extension")]
    MissingEdgeType(String),
    #[error("edge type `{edge_type}` changes signature between base and extension")]
    EdgeSignatureMismatch { edge_type: String },
    #[error("attribute `{node_type}.{attr}` is missing from the extension")]
    MissingAttrDecl { node_type: String, attr: String },
    #[error("attribute `{node_type}.{attr}` changes domain between base and extension")]
    AttrDomainMismatch { node_type: String, attr: String },
    #[error("duplicate node id `{0}` in instance graph")]
    DuplicateNode(NodeId),
    #[error("duplicate edge id `{0}` in instance graph")]
    DuplicateEdge(EdgeId),
}

impl TypeGraph {
    pub fn builder() -> TypeGraphBuilder {
        TypeGraphBuilder::default()
    }

    pub fn node_types(&self) -> impl Iterator<Item = &str> {
        self.node_types.iter().map(String::as_str)
    }

    pub fn has_node_type(&self, name: &str) -> bool {
        self.node_types.contains(name)
    }

    pub fn edge_types(&self) -> impl Iterator<Item = (&str, &EdgeSignature)> {
        self.edge_types.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn edge_signature(&self, name: &str) -> Option<&EdgeSignature> {
        self.edge_types.get(name)
    }

    pub fn attr_decls(&self) -> impl Iterator<Item = (&str, &str, &AttrDomain)> {
        self.attr_decls
            .iter()
            .map(|((nt, a), d)| (nt.as_str(), a.as_str(), d))
    }

    /// Declared attributes of one node type, in name order.
    pub fn attrs_of<'a>(&'a self, node_type: &'a str) -> impl Iterator<Item = (&'a str, &'a AttrDomain)> {
        self.attr_decls
            .range((node_type.to_string(), String::new())..)
            .take_while(move |((nt, _), _)| nt == node_type)
            .map(|((_, a), d)| (a.as_str(), d))
    }

    pub fn domain(&self, node_type: &str, attr: &str) -> Option<&AttrDomain> {
        self.attr_decls
            .get(&(node_type.to_string(), attr.to_string()))
    }

    /// True when every element of `base` occurs in `self` with an identical
    /// signature. Inclusion is by name identity.
    pub fn includes(&self, base: &TypeGraph) -> bool {
        TypeGraphInclusion::check(base, self).is_ok()
    }
}

/// Incremental construction of a [`TypeGraph`]; `build` validates the result.
#[derive(Debug, Default, Clone)]
pub struct TypeGraphBuilder {
    node_types: Vec<String>,
    edge_types: Vec<(String, String, String)>,
    attr_decls: Vec<(String, String, AttrDomain)>,
}

impl TypeGraphBuilder {
    pub fn node(mut self, name: impl Into<String>) -> Self {
        self.node_types.push(name.into());
        self
    }

    pub fn edge(
        mut self,
        name: impl Into<String>,
        source: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        self.edge_types.push((name.into(), source.into(), target.into()));
        self
    }

    pub fn attr(
        mut self,
        node_type: impl Into<String>,
        attr: impl Into<String>,
        domain: AttrDomain,
    ) -> Self {
        self.attr_decls.push((node_type.into(), attr.into(), domain));
        self
    }

    pub fn build(self) -> Result<TypeGraph, GraphError> {
        let mut node_types = BTreeSet::new();
        for n in self.node_types {
            if !node_types.insert(n.clone()) {
                return Err(GraphError::DuplicateNodeType(n));
            }
        }
        let mut edge_types = BTreeMap::new();
        for (name, source, target) in self.edge_types {
            for endpoint in [&source, &target] {
                if !node_types.contains(endpoint) {
                    return Err(GraphError::UnknownEndpointType {
                        edge_type: name,
                        node_type: endpoint.clone(),
                    });
                }
            }
            if edge_types
                .insert(name.clone(), EdgeSignature { source, target })
                .is_some()
            {
                return Err(GraphError::DuplicateEdgeType(name));
            }
        }
        let mut attr_decls = BTreeMap::new();
        for (nt, attr, domain) in self.attr_decls {
            if !node_types.contains(&nt) {
                return Err(GraphError::AttrOnUnknownType { node_type: nt, attr });
            }
            if domain.is_empty() {
                return Err(GraphError::EmptyDomain { node_type: nt, attr });
            }
            if attr_decls.insert((nt.clone(), attr.clone()), domain).is_some() {
                return Err(GraphError::DuplicateAttrDecl(nt, attr));
            }
        }
        Ok(TypeGraph {
            node_types,
            edge_types,
            attr_decls,
        })
    }
}

/// Witness that `base` occurs inside `extension` under name identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeGraphInclusion {
    base: TypeGraph,
    extension: TypeGraph,
}

impl TypeGraphInclusion {
    pub fn check(base: &TypeGraph, extension: &TypeGraph) -> Result<Self, GraphError> {
        for nt in &base.node_types {
            if !extension.node_types.contains(nt) {
                return Err(GraphError::MissingNodeType(nt.clone()));
            }
        }
        for (name, sig) in &base.edge_types {
            match extension.edge_types.get(name) {
                None => return Err(GraphError::MissingEdgeType(name.clone())),
                Some(ext_sig) if ext_sig != sig => {
                    return Err(GraphError::EdgeSignatureMismatch {
                        edge_type: name.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        for ((nt, attr), domain) in &base.attr_decls {
            match extension.attr_decls.get(&(nt.clone(), attr.clone())) {
                None => {
                    return Err(GraphError::MissingAttrDecl {
                        node_type: nt.clone(),
                        attr: attr.clone(),
                    })
                }
                Some(ext_domain) if ext_domain != domain => {
                    return Err(GraphError::AttrDomainMismatch {
                        node_type: nt.clone(),
                        attr: attr.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(TypeGraphInclusion {
            base: base.clone(),
            extension: extension.clone(),
        })
    }

    pub fn base(&self) -> &TypeGraph {
        &self.base
    }

    pub fn extension(&self) -> &TypeGraph {
        &self.extension
    }
}

/// One edge of an instance graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeInst {
    pub edge_type: String,
    pub source: NodeId,
    pub target: NodeId,
}

/// A concrete world state: typed nodes, typed edges, attribute valuations.
///
/// Parallel edges of the same type between the same endpoints are permitted.
/// Attribute valuations are total on well-typed instances; rule patterns reuse
/// this structure with partial valuations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceGraph {
    nodes: BTreeMap<NodeId, String>,
    edges: BTreeMap<EdgeId, EdgeInst>,
    attrs: BTreeMap<(NodeId, String), AttrValue>,
}

impl InstanceGraph {
    pub fn builder() -> InstanceGraphBuilder {
        InstanceGraphBuilder::default()
    }

    pub fn empty() -> Self {
        Self::default()
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

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&EdgeInst> {
        self.edges.get(id)
    }

    pub fn attr(&self, node: &NodeId, attr: &str) -> Option<&AttrValue> {
        self.attrs.get(&(node.clone(), attr.to_string()))
    }

    pub fn attrs(&self) -> impl Iterator<Item = (&NodeId, &str, &AttrValue)> {
        self.attrs.iter().map(|((n, a), v)| (n, a.as_str(), v))
    }

    /// Attribute entries of one node, in attribute-name order.
    pub fn attrs_of<'a>(&'a self, node: &'a NodeId) -> impl Iterator<Item = (&'a str, &'a AttrValue)> {
        self.attrs
            .range((node.clone(), String::new())..)
            .take_while(move |((n, _), _)| n == node)
            .map(|((_, a), v)| (a.as_str(), v))
    }

    /// Number of nodes of `node_type` whose attribute `attr` equals `value`.
    pub fn count_where(&self, node_type: &str, attr: &str, value: &AttrValue) -> usize {
        self.nodes
            .iter()
            .filter(|(id, ty)| ty.as_str() == node_type && self.attr(id, attr) == Some(value))
            .count()
    }

    pub(crate) fn remove_node(&mut self, id: &NodeId) {
        self.nodes.remove(id);
        let keys: Vec<_> = self
            .attrs
            .range((id.clone(), String::new())..)
            .take_while(|((n, _), _)| n == id)
            .map(|(k, _)| k.clone())
            .collect();
        for k in keys {
            self.attrs.remove(&k);
        }
    }

    pub(crate) fn remove_edge(&mut self, id: &EdgeId) {
        self.edges.remove(id);
    }

    pub(crate) fn insert_node(&mut self, id: NodeId, node_type: String) {
        self.nodes.insert(id, node_type);
    }

    pub(crate) fn insert_edge(&mut self, id: EdgeId, inst: EdgeInst) {
        self.edges.insert(id, inst);
    }

    pub(crate) fn set_attr(&mut self, node: NodeId, attr: String, value: AttrValue) {
        self.attrs.insert((node, attr), value);
    }
}

/// Incremental construction of an [`InstanceGraph`].
#[derive(Debug, Default, Clone)]
pub struct InstanceGraphBuilder {
    graph: InstanceGraph,
    error: Option<GraphError>,
}

impl InstanceGraphBuilder {
    pub fn node(mut self, id: impl Into<NodeId>, node_type: impl Into<String>) -> Self {
        let id = id.into();
        if self.error.is_none() && self.graph.nodes.contains_key(&id) {
            self.error = Some(GraphError::DuplicateNode(id));
            return self;
        }
        self.graph.nodes.insert(id, node_type.into());
        self
    }

    pub fn attr(
        mut self,
        node: impl Into<NodeId>,
        attr: impl Into<String>,
        value: AttrValue,
    ) -> Self {
        self.graph.attrs.insert((node.into(), attr.into()), value);
        self
    }

    pub fn edge(
        mut self,
        id: impl Into<EdgeId>,
        edge_type: impl Into<String>,
        source: impl Into<NodeId>,
        target: impl Into<NodeId>,
    ) -> Self {
        let id = id.into();
        if self.error.is_none() && self.graph.edges.contains_key(&id) {
            self.error = Some(GraphError::DuplicateEdge(id));
            return self;
        }
        self.graph.edges.insert(
            id,
            EdgeInst {
                edge_type: edge_type.into(),
                source: source.into(),
                target: target.into(),
            },
        );
        self
    }

    pub fn build(self) -> Result<InstanceGraph, GraphError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.graph),
        }
    }
}

/// One broken typing constraint, naming the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypingViolation {
    UnknownNodeType { node: NodeId, node_type: String },
    UnknownEdgeType { edge: EdgeId, edge_type: String },
    DanglingEdge { edge: EdgeId, endpoint: NodeId },
    EndpointTypeMismatch {
        edge: EdgeId,
        endpoint: NodeId,
        expected: String,
        actual: String,
    },
    MissingAttr { node: NodeId, attr: String },
    UndeclaredAttr { node: NodeId, attr: String },
    AttrOnUnknownNode { node: NodeId, attr: String },
    ValueOutsideDomain { node: NodeId, attr: String, value: AttrValue },
}

impl fmt::Display for TypingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypingViolation::UnknownNodeType { node, node_type } => {
                write!(f, "node `{node}` has unknown type `{node_type}`")
            }
            TypingViolation::UnknownEdgeType { edge, edge_type } => {
                write!(f, "edge `{edge}` has unknown type `{edge_type}`")
            }
            TypingViolation::DanglingEdge { edge, endpoint } => {
                write!(f, "dangling edge: `{edge}` refers to missing node `{endpoint}`")
            }
            TypingViolation::EndpointTypeMismatch {
                edge,
                endpoint,
                expected,
                actual,
            } => write!(
                f,
                "edge `{edge}` endpoint `{endpoint}` has type `{actual}`, expected `{expected}`"
            ),
            TypingViolation::MissingAttr { node, attr } => {
                write!(f, "node `{node}` is missing a value for attribute `{attr}`")
            }
            TypingViolation::UndeclaredAttr { node, attr } => {
                write!(f, "node `{node}` carries undeclared attribute `{attr}`")
            }
            TypingViolation::AttrOnUnknownNode { node, attr } => {
                write!(f, "attribute `{attr}` valuates missing node `{node}`")
            }
            TypingViolation::ValueOutsideDomain { node, attr, value } => {
                write!(f, "node `{node}` attribute `{attr}` value `{value}` is outside its domain")
            }
        }
    }
}

/// Outcome of a typing check. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypingReport {
    pub violations: Vec<TypingViolation>,
}

impl TypingReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for TypingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            f.write_str("ok")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    f.write_str("; ")?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Check every instance-graph invariant of `g` against `tg`.
pub fn check_typing(g: &InstanceGraph, tg: &TypeGraph) -> TypingReport {
    let mut violations = Vec::new();

    for (id, ty) in g.nodes() {
        if !tg.has_node_type(ty) {
            violations.push(TypingViolation::UnknownNodeType {
                node: id.clone(),
                node_type: ty.to_string(),
            });
            continue;
        }
        for (attr, domain) in tg.attrs_of(ty) {
            match g.attr(id, attr) {
                None => violations.push(TypingViolation::MissingAttr {
                    node: id.clone(),
                    attr: attr.to_string(),
                }),
                Some(v) if !domain.contains(v) => {
                    violations.push(TypingViolation::ValueOutsideDomain {
                        node: id.clone(),
                        attr: attr.to_string(),
                        value: v.clone(),
                    })
                }
                Some(_) => {}
            }
        }
    }

    for (node, attr, _) in g.attrs() {
        match g.node_type(node) {
            None => violations.push(TypingViolation::AttrOnUnknownNode {
                node: node.clone(),
                attr: attr.to_string(),
            }),
            Some(ty) => {
                if tg.has_node_type(ty) && tg.domain(ty, attr).is_none() {
                    violations.push(TypingViolation::UndeclaredAttr {
                        node: node.clone(),
                        attr: attr.to_string(),
                    });
                }
            }
        }
    }

    for (id, inst) in g.edges() {
        let sig = match tg.edge_signature(&inst.edge_type) {
            None => {
                violations.push(TypingViolation::UnknownEdgeType {
                    edge: id.clone(),
                    edge_type: inst.edge_type.clone(),
                });
                continue;
            }
            Some(sig) => sig,
        };
        for (endpoint, expected) in [(&inst.source, &sig.source), (&inst.target, &sig.target)] {
            match g.node_type(endpoint) {
                None => violations.push(TypingViolation::DanglingEdge {
                    edge: id.clone(),
                    endpoint: endpoint.clone(),
                }),
                Some(actual) if actual != expected => {
                    violations.push(TypingViolation::EndpointTypeMismatch {
                        edge: id.clone(),
                        endpoint: endpoint.clone(),
                        expected: expected.clone(),
                        actual: actual.to_string(),
                    })
                }
                Some(_) => {}
            }
        }
    }

    TypingReport { violations }
}

/// Restrict `g` to the sub-type-graph `sub`.
///
/// Keeps exactly the nodes whose type is in `sub`, the edges whose type is in
/// `sub` and whose endpoints survive, and the attribute entries declared in
/// `sub`. `full` is the type graph governing `g`; `sub` must be included in it.
pub fn restrict(
    g: &InstanceGraph,
    full: &TypeGraph,
    sub: &TypeGraph,
) -> Result<InstanceGraph, GraphError> {
    TypeGraphInclusion::check(sub, full)?;
    let mut out = InstanceGraph::default();
    for (id, ty) in g.nodes() {
        if sub.has_node_type(ty) {
            out.nodes.insert(id.clone(), ty.to_string());
        }
    }
    for (id, inst) in g.edges() {
        if sub.edge_signature(&inst.edge_type).is_some()
            && out.nodes.contains_key(&inst.source)
            && out.nodes.contains_key(&inst.target)
        {
            out.edges.insert(id.clone(), inst.clone());
        }
    }
    for (node, attr, value) in g.attrs() {
        if let Some(ty) = out.nodes.get(node) {
            if sub.domain(ty, attr).is_some() {
                out.attrs
                    .insert((node.clone(), attr.to_string()), value.clone());
            }
        }
    }
    Ok(out)
}

/// A structure-, type- and attribute-preserving injective map between two
/// instance graphs.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct GraphMorphism {
    pub node_map: BTreeMap<NodeId, NodeId>,
    pub edge_map: BTreeMap<EdgeId, EdgeId>,
}

impl GraphMorphism {
    /// Independent validity check: total on `pattern`, injective,
    /// type-preserving, commuting with source/target, and attribute-preserving
    /// on all attributes present in both graphs.
    ///
    /// This is a direct transcription of the morphism conditions; it does not
    /// share code with the match search.
    pub fn is_valid(&self, pattern: &InstanceGraph, host: &InstanceGraph) -> bool {
        if self.node_map.len() != pattern.node_count()
            || self.edge_map.len() != pattern.edge_count()
        {
            return false;
        }
        let mut seen_nodes = BTreeSet::new();
        for (p, h) in &self.node_map {
            let (p_ty, h_ty) = match (pattern.node_type(p), host.node_type(h)) {
                (Some(a), Some(b)) => (a, b),
                _ => return false,
            };
            if p_ty != h_ty || !seen_nodes.insert(h.clone()) {
                return false;
            }
            for (attr, value) in pattern.attrs_of(p) {
                if let Some(host_value) = host.attr(h, attr) {
                    if host_value != value {
                        return false;
                    }
                }
            }
        }
        let mut seen_edges = BTreeSet::new();
        for (p, h) in &self.edge_map {
            let (p_edge, h_edge) = match (pattern.edge(p), host.edge(h)) {
                (Some(a), Some(b)) => (a, b),
                _ => return false,
            };
            if p_edge.edge_type != h_edge.edge_type || !seen_edges.insert(h.clone()) {
                return false;
            }
            if self.node_map.get(&p_edge.source) != Some(&h_edge.source)
                || self.node_map.get(&p_edge.target) != Some(&h_edge.target)
            {
                return false;
            }
        }
        true
    }
}

/// All injective morphisms `pattern -> host`, in a deterministic order sorted
/// by the mapped node and edge ids.
///
/// Both graphs must be typed over `tg`. The pattern's attribute valuation may
/// be partial; absent entries constrain nothing.
pub fn find_morphisms(
    tg: &TypeGraph,
    pattern: &InstanceGraph,
    host: &InstanceGraph,
) -> Vec<GraphMorphism> {
    let compiled = matching::CompiledPattern::from_instance(tg, pattern);
    let index = matching::HostIndex::build(tg, host);
    let mut out = Vec::new();
    compiled.for_each(&index, &mut |m| {
        out.push(m.to_morphism(&compiled, &index));
        std::ops::ControlFlow::Continue(())
    });
    out.sort();
    out
}

/// True iff a bijective morphism `a -> b` exists.
///
/// Both graphs must be typed over `tg`. Attribute valuations must correspond
/// exactly, entry for entry.
pub fn isomorphic(tg: &TypeGraph, a: &InstanceGraph, b: &InstanceGraph) -> bool {
    if a.node_count() != b.node_count()
        || a.edge_count() != b.edge_count()
        || a.attrs().count() != b.attrs().count()
    {
        return false;
    }
    let compiled = matching::CompiledPattern::from_instance(tg, a);
    let index = matching::HostIndex::build(tg, b);
    let mut found = false;
    compiled.for_each(&index, &mut |m| {
        let morphism = m.to_morphism(&compiled, &index);
        // Injective with equal counts means bijective; still require exact
        // attribute correspondence, which the "present in both" morphism
        // condition alone does not give for partial valuations.
        let attrs_exact = a.attrs().all(|(n, attr, v)| {
            b.attr(morphism.node_map.get(n).expect("total on nodes"), attr) == Some(v)
        });
        if attrs_exact {
            found = true;
            std::ops::ControlFlow::Break(())
        } else {
            std::ops::ControlFlow::Continue(())
        }
    });
    found
}
