//! Feature diagrams, configurations, and variant derivation.
//!
//! A [`FeatureDiagram`] is a tree of named features with per-child
//! variability; a [`Configuration`] is a feature subset, valid when it is
//! parent-closed, mandatory-closed and picks exactly one member of each active
//! alternative group. A [`FeatureModel`] couples a diagram with one
//! over-complete system (the 150% model) and a mapping that assigns every
//! element of that system to a feature, so that each valid configuration
//! induces a variant by filtering.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::graph::{EdgeId, GraphError, NodeId, TypeGraph};
use crate::rewrite::{Gts, Rule, RuleError, RulePattern};

/// Variability of a non-root feature with respect to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variability {
    Mandatory,
    Optional,
    /// Member of the alternative group with this index: exactly one member of
    /// the group is chosen whenever the parent is present.
    Alternative(usize),
}

/// A tree of features describing which configurations are valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDiagram {
    root: String,
    features: BTreeSet<String>,
    parent: BTreeMap<String, String>,
    variability: BTreeMap<String, Variability>,
    alt_groups: Vec<BTreeSet<String>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("duplicate feature `{0}`")]
    DuplicateFeature(String),
    #[error("feature `{feature}` refers to unknown parent `{parent}`")]
    UnknownParent { feature: String, parent: String },
    #[error("feature `{0}` is not reachable from the root")]
    UnreachableFeature(String),
    #[error("alternative group needs at least two members, got {0}")]
    AltGroupTooSmall(usize),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown model element `{0}`")]
    UnknownElement(ElementRef),
    #[error("{features} features exceed the enumeration bound of {bound}")]
    BoundExceeded { features: usize, bound: usize },
    #[error("invalid configuration `{0}`")]
    InvalidConfiguration(Configuration),
    #[error("feature model is inconsistent: {0}")]
    InconsistentModel(ConsistencyReport),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl FeatureDiagram {
    pub fn builder(root: impl Into<String>) -> FeatureDiagramBuilder {
        FeatureDiagramBuilder {
            root: root.into(),
            children: Vec::new(),
            alt_groups: Vec::new(),
        }
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(String::as_str)
    }

    pub fn feature_count(&self) -> usize {
        self.features.len()
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.features.contains(feature)
    }

    pub fn parent(&self, feature: &str) -> Option<&str> {
        self.parent.get(feature).map(String::as_str)
    }

    pub fn variability(&self, feature: &str) -> Option<Variability> {
        self.variability.get(feature).copied()
    }

    /// Alternative groups, each a set of sibling features.
    pub fn alt_groups(&self) -> impl Iterator<Item = &BTreeSet<String>> {
        self.alt_groups.iter()
    }

    /// Children of a feature, in name order.
    pub fn children(&self, feature: &str) -> Vec<&str> {
        self.parent
            .iter()
            .filter(|(_, p)| p.as_str() == feature)
            .map(|(c, _)| c.as_str())
            .collect()
    }

    /// Path from the root down to `feature`, inclusive.
    pub fn root_path<'a>(&'a self, feature: &'a str) -> Vec<&'a str> {
        let mut path = Vec::new();
        let mut current = feature;
        loop {
            path.push(current);
            match self.parent(current) {
                Some(p) => current = p,
                None => break,
            }
        }
        path.reverse();
        path
    }

    /// True when `ancestor` lies on the root-path of `feature`.
    pub fn is_ancestor_or_self(&self, ancestor: &str, feature: &str) -> bool {
        self.root_path(feature).contains(&ancestor)
    }
}

/// Declarative construction: add children under existing features, then
/// `build` validates the tree shape.
#[derive(Debug, Clone)]
pub struct FeatureDiagramBuilder {
    root: String,
    children: Vec<(String, String, bool)>,
    alt_groups: Vec<(String, Vec<String>)>,
}

impl FeatureDiagramBuilder {
    pub fn mandatory(mut self, feature: impl Into<String>, parent: impl Into<String>) -> Self {
        self.children.push((feature.into(), parent.into(), true));
        self
    }

    pub fn optional(mut self, feature: impl Into<String>, parent: impl Into<String>) -> Self {
        self.children.push((feature.into(), parent.into(), false));
        self
    }

    pub fn alternative<I, S>(mut self, parent: impl Into<String>, members: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.alt_groups
            .push((parent.into(), members.into_iter().map(Into::into).collect()));
        self
    }

    pub fn build(self) -> Result<FeatureDiagram, FeatureError> {
        let mut features = BTreeSet::new();
        features.insert(self.root.clone());
        let mut parent = BTreeMap::new();
        let mut variability = BTreeMap::new();
        for (feature, p, mandatory) in &self.children {
            if !features.insert(feature.clone()) {
                return Err(FeatureError::DuplicateFeature(feature.clone()));
            }
            parent.insert(feature.clone(), p.clone());
            variability.insert(
                feature.clone(),
                if *mandatory {
                    Variability::Mandatory
                } else {
                    Variability::Optional
                },
            );
        }
        let mut alt_groups = Vec::new();
        for (p, members) in &self.alt_groups {
            if members.len() < 2 {
                return Err(FeatureError::AltGroupTooSmall(members.len()));
            }
            let idx = alt_groups.len();
            let mut group = BTreeSet::new();
            for m in members {
                if !features.insert(m.clone()) {
                    return Err(FeatureError::DuplicateFeature(m.clone()));
                }
                parent.insert(m.clone(), p.clone());
                variability.insert(m.clone(), Variability::Alternative(idx));
                group.insert(m.clone());
            }
            alt_groups.push(group);
        }
        for (feature, p) in &parent {
            if !features.contains(p) {
                return Err(FeatureError::UnknownParent {
                    feature: feature.clone(),
                    parent: p.clone(),
                });
            }
        }
        // Every feature must reach the root without cycles.
        for feature in &features {
            let mut seen = BTreeSet::new();
            let mut current = feature.as_str();
            while let Some(p) = parent.get(current) {
                if !seen.insert(current) {
                    return Err(FeatureError::UnreachableFeature(feature.clone()));
                }
                current = p;
            }
            if current != self.root {
                return Err(FeatureError::UnreachableFeature(feature.clone()));
            }
        }
        Ok(FeatureDiagram {
            root: self.root,
            features,
            parent,
            variability,
            alt_groups,
        })
    }
}

/// A subset of a diagram's features.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Configuration(BTreeSet<String>);

impl Configuration {
    pub fn new<I, S>(features: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Configuration(features.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.0.contains(feature)
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &Configuration) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &Configuration) -> Configuration {
        Configuration(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &Configuration) -> Configuration {
        Configuration(self.0.intersection(&other.0).cloned().collect())
    }
}

impl fmt::Display for Configuration {
    /// Features joined by commas, in name order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for feature in &self.0 {
            if !first {
                f.write_str(",")?;
            }
            f.write_str(feature)?;
            first = false;
        }
        Ok(())
    }
}

/// True iff `c` is a valid configuration of `fd`: the root is present, the set
/// is parent-closed and mandatory-closed, and each alternative group with its
/// parent present contributes exactly one member.
pub fn is_valid(fd: &FeatureDiagram, c: &Configuration) -> bool {
    if !c.contains(&fd.root) {
        return false;
    }
    for f in c.features() {
        if !fd.contains(f) {
            return false;
        }
        if let Some(p) = fd.parent(f) {
            if !c.contains(p) {
                return false;
            }
        }
    }
    for (feature, variability) in &fd.variability {
        if matches!(variability, Variability::Mandatory) {
            let p = fd.parent(feature).expect("non-root has a parent");
            if c.contains(p) && !c.contains(feature) {
                return false;
            }
        }
    }
    for group in &fd.alt_groups {
        let p = fd
            .parent(group.iter().next().expect("groups are non-empty"))
            .expect("non-root has a parent");
        if c.contains(p) {
            let chosen = group.iter().filter(|m| c.contains(m)).count();
            if chosen != 1 {
                return false;
            }
        }
    }
    true
}

/// Largest feature count accepted by [`valid_configurations`].
pub const ENUMERATION_BOUND: usize = 24;

/// Exactly the valid configurations of `fd`, deterministically ordered.
pub fn valid_configurations(fd: &FeatureDiagram) -> Result<Vec<Configuration>, FeatureError> {
    valid_configurations_bounded(fd, ENUMERATION_BOUND)
}

pub fn valid_configurations_bounded(
    fd: &FeatureDiagram,
    bound: usize,
) -> Result<Vec<Configuration>, FeatureError> {
    if fd.feature_count() > bound {
        return Err(FeatureError::BoundExceeded {
            features: fd.feature_count(),
            bound,
        });
    }
    let mut configs: Vec<Configuration> = subtree_choices(fd, &fd.root)
        .into_iter()
        .map(Configuration)
        .collect();
    configs.sort();
    configs
        .iter()
        .for_each(|c| debug_assert!(is_valid(fd, c), "enumeration produced invalid {c}"));
    Ok(configs)
}

/// All valid choices within the subtree rooted at `feature`, each including
/// `feature` itself.
fn subtree_choices(fd: &FeatureDiagram, feature: &str) -> Vec<BTreeSet<String>> {
    let mut partial: Vec<BTreeSet<String>> = vec![[feature.to_string()].into_iter().collect()];
    let mut grouped: BTreeSet<&str> = BTreeSet::new();

    fn extend_with(
        partial: Vec<BTreeSet<String>>,
        options: &[BTreeSet<String>],
    ) -> Vec<BTreeSet<String>> {
        let mut next = Vec::with_capacity(partial.len() * options.len());
        for p in &partial {
            for o in options {
                let mut merged = p.clone();
                merged.extend(o.iter().cloned());
                next.push(merged);
            }
        }
        next
    }

    for group in &fd.alt_groups {
        let group_parent = fd
            .parent(group.iter().next().expect("groups are non-empty"))
            .expect("non-root has a parent");
        if group_parent != feature {
            continue;
        }
        let mut options = Vec::new();
        for member in group {
            grouped.insert(member);
            options.extend(subtree_choices(fd, member));
        }
        partial = extend_with(partial, &options);
    }

    for child in fd.children(feature) {
        if grouped.contains(child) {
            continue;
        }
        let choices = subtree_choices(fd, child);
        let options = match fd.variability.get(child) {
            Some(Variability::Mandatory) => choices,
            Some(Variability::Optional) => {
                let mut with_empty = vec![BTreeSet::new()];
                with_empty.extend(choices);
                with_empty
            }
            _ => choices,
        };
        partial = extend_with(partial, &options);
    }

    partial
}

/// Identifies one element of a 150% model: a type-level declaration, a rule,
/// or an element inside a rule's patterns.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ElementRef {
    NodeType(String),
    EdgeType(String),
    AttrDecl(String, String),
    Rule(String),
    RuleNode(String, NodeId),
    RuleEdge(String, EdgeId),
    RuleAttr(String, NodeId, String),
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementRef::NodeType(t) => write!(f, "node type `{t}`"),
            ElementRef::EdgeType(t) => write!(f, "edge type `{t}`"),
            ElementRef::AttrDecl(t, a) => write!(f, "attribute `{t}.{a}`"),
            ElementRef::Rule(r) => write!(f, "rule `{r}`"),
            ElementRef::RuleNode(r, n) => write!(f, "node `{n}` of rule `{r}`"),
            ElementRef::RuleEdge(r, e) => write!(f, "edge `{e}` of rule `{r}`"),
            ElementRef::RuleAttr(r, n, a) => write!(f, "attribute `{n}.{a}` of rule `{r}`"),
        }
    }
}

/// A feature diagram, a 150% model, and a total mapping of model elements to
/// features.
///
/// Explicit annotations cover part of the model; the rest is defaulted. A
/// top-level element (type, attribute declaration, rule) defaults to the root
/// feature; an element inside a rule defaults to the rule's own feature, which
/// keeps whole-rule annotations self-contained.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    fd: FeatureDiagram,
    m150: Gts,
    mapping: BTreeMap<ElementRef, String>,
}

/// One broken dependency: an element whose required element is mapped off the
/// root-path of its own feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyViolation {
    pub element: ElementRef,
    pub element_feature: String,
    pub requires: ElementRef,
    pub required_feature: String,
}

impl fmt::Display for DependencyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (feature `{}`) requires {} (feature `{}`), which is not an ancestor",
            self.element, self.element_feature, self.requires, self.required_feature
        )
    }
}

/// Outcome of a feature-model consistency check.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub violations: Vec<DependencyViolation>,
}

impl ConsistencyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ConsistencyReport {
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

impl FeatureModel {
    /// Build a feature model from explicit annotations, defaulting the rest.
    pub fn new(
        fd: FeatureDiagram,
        m150: Gts,
        annotations: BTreeMap<ElementRef, String>,
    ) -> Result<FeatureModel, FeatureError> {
        for (element, feature) in &annotations {
            if !fd.contains(feature) {
                return Err(FeatureError::UnknownFeature(feature.clone()));
            }
            if !element_exists(&m150, element) {
                return Err(FeatureError::UnknownElement(element.clone()));
            }
        }
        let mut mapping = BTreeMap::new();
        let root = fd.root().to_string();
        let mut assign = |element: ElementRef, default: &str| {
            let feature = annotations
                .get(&element)
                .cloned()
                .unwrap_or_else(|| default.to_string());
            mapping.insert(element, feature);
        };
        let tg = m150.type_graph();
        for nt in tg.node_types() {
            assign(ElementRef::NodeType(nt.to_string()), &root);
        }
        for (et, _) in tg.edge_types() {
            assign(ElementRef::EdgeType(et.to_string()), &root);
        }
        for (nt, attr, _) in tg.attr_decls() {
            assign(
                ElementRef::AttrDecl(nt.to_string(), attr.to_string()),
                &root,
            );
        }
        for rule in m150.rules() {
            let rule_ref = ElementRef::Rule(rule.name().to_string());
            let rule_feature = annotations
                .get(&rule_ref)
                .cloned()
                .unwrap_or_else(|| root.clone());
            assign(rule_ref, &root);
            let mut nodes: BTreeSet<&NodeId> = rule.lhs().nodes().map(|(id, _)| id).collect();
            nodes.extend(rule.rhs().nodes().map(|(id, _)| id));
            for node in nodes {
                assign(
                    ElementRef::RuleNode(rule.name().to_string(), node.clone()),
                    &rule_feature,
                );
            }
            let mut edges: BTreeSet<&EdgeId> = rule.lhs().edges().map(|(id, _)| id).collect();
            edges.extend(rule.rhs().edges().map(|(id, _)| id));
            for edge in edges {
                assign(
                    ElementRef::RuleEdge(rule.name().to_string(), edge.clone()),
                    &rule_feature,
                );
            }
            let mut attr_positions: BTreeSet<(NodeId, String)> = rule
                .lhs()
                .terms()
                .map(|(n, a, _)| (n.clone(), a.to_string()))
                .collect();
            attr_positions.extend(
                rule.rhs()
                    .terms()
                    .map(|(n, a, _)| (n.clone(), a.to_string())),
            );
            for (node, attr) in attr_positions {
                assign(
                    ElementRef::RuleAttr(rule.name().to_string(), node, attr),
                    &rule_feature,
                );
            }
        }
        Ok(FeatureModel { fd, m150, mapping })
    }

    pub fn diagram(&self) -> &FeatureDiagram {
        &self.fd
    }

    pub fn m150(&self) -> &Gts {
        &self.m150
    }

    /// The feature of one element; total over the model's elements.
    pub fn feature_of(&self, element: &ElementRef) -> Option<&str> {
        self.mapping.get(element).map(String::as_str)
    }

    pub fn mapping(&self) -> impl Iterator<Item = (&ElementRef, &str)> {
        self.mapping.iter().map(|(e, f)| (e, f.as_str()))
    }
}

fn element_exists(gts: &Gts, element: &ElementRef) -> bool {
    let tg = gts.type_graph();
    match element {
        ElementRef::NodeType(t) => tg.has_node_type(t),
        ElementRef::EdgeType(t) => tg.edge_signature(t).is_some(),
        ElementRef::AttrDecl(t, a) => tg.domain(t, a).is_some(),
        ElementRef::Rule(r) => gts.rule(r).is_some(),
        ElementRef::RuleNode(r, n) => gts
            .rule(r)
            .is_some_and(|rule| rule.lhs().has_node(n) || rule.rhs().has_node(n)),
        ElementRef::RuleEdge(r, e) => gts
            .rule(r)
            .is_some_and(|rule| rule.lhs().has_edge(e) || rule.rhs().has_edge(e)),
        ElementRef::RuleAttr(r, n, a) => gts
            .rule(r)
            .is_some_and(|rule| rule.lhs().term(n, a).is_some() || rule.rhs().term(n, a).is_some()),
    }
}

/// Structural requirements of one element: pairs `(element, required)` whose
/// features must satisfy the root-path condition.
fn requirements(fm: &FeatureModel) -> Vec<(ElementRef, ElementRef)> {
    let mut out = Vec::new();
    let tg = fm.m150.type_graph();
    for (et, sig) in tg.edge_types() {
        out.push((
            ElementRef::EdgeType(et.to_string()),
            ElementRef::NodeType(sig.source.clone()),
        ));
        out.push((
            ElementRef::EdgeType(et.to_string()),
            ElementRef::NodeType(sig.target.clone()),
        ));
    }
    for (nt, attr, _) in tg.attr_decls() {
        out.push((
            ElementRef::AttrDecl(nt.to_string(), attr.to_string()),
            ElementRef::NodeType(nt.to_string()),
        ));
    }
    for rule in fm.m150.rules() {
        let r = rule.name().to_string();
        let rule_ref = ElementRef::Rule(r.clone());
        let mut nodes: BTreeMap<&NodeId, &str> = rule.lhs().nodes().collect();
        nodes.extend(rule.rhs().nodes());
        for (node, ty) in &nodes {
            let node_ref = ElementRef::RuleNode(r.clone(), (*node).clone());
            out.push((node_ref.clone(), ElementRef::NodeType(ty.to_string())));
            out.push((node_ref, rule_ref.clone()));
        }
        let mut edges: BTreeMap<&EdgeId, &crate::graph::EdgeInst> = rule.lhs().edges().collect();
        edges.extend(rule.rhs().edges());
        for (edge, inst) in edges {
            let edge_ref = ElementRef::RuleEdge(r.clone(), edge.clone());
            out.push((
                edge_ref.clone(),
                ElementRef::EdgeType(inst.edge_type.clone()),
            ));
            out.push((
                edge_ref.clone(),
                ElementRef::RuleNode(r.clone(), inst.source.clone()),
            ));
            out.push((
                edge_ref.clone(),
                ElementRef::RuleNode(r.clone(), inst.target.clone()),
            ));
            out.push((edge_ref, rule_ref.clone()));
        }
        let mut attr_positions: BTreeSet<(NodeId, String)> = rule
            .lhs()
            .terms()
            .map(|(n, a, _)| (n.clone(), a.to_string()))
            .collect();
        attr_positions.extend(
            rule.rhs()
                .terms()
                .map(|(n, a, _)| (n.clone(), a.to_string())),
        );
        for (node, attr) in attr_positions {
            let ty = nodes.get(&node).copied().unwrap_or_default();
            let attr_ref = ElementRef::RuleAttr(r.clone(), node.clone(), attr.clone());
            out.push((
                attr_ref.clone(),
                ElementRef::AttrDecl(ty.to_string(), attr.clone()),
            ));
            out.push((attr_ref.clone(), ElementRef::RuleNode(r.clone(), node)));
            out.push((attr_ref, rule_ref.clone()));
        }
    }
    out
}

/// Verify mapping totality and dependency consistency of a feature model,
/// listing every violation.
pub fn check_feature_model(fm: &FeatureModel) -> ConsistencyReport {
    let mut violations = Vec::new();
    for (element, required) in requirements(fm) {
        let element_feature = match fm.feature_of(&element) {
            Some(f) => f.to_string(),
            None => continue,
        };
        let required_feature = match fm.feature_of(&required) {
            Some(f) => f.to_string(),
            None => continue,
        };
        if !fm.fd.is_ancestor_or_self(&required_feature, &element_feature) {
            violations.push(DependencyViolation {
                element,
                element_feature,
                requires: required,
                required_feature,
            });
        }
    }
    ConsistencyReport { violations }
}

fn filter_pattern(
    fm: &FeatureModel,
    rule_name: &str,
    pattern: &RulePattern,
    c: &Configuration,
) -> RulePattern {
    let keep = |element: ElementRef| -> bool {
        fm.feature_of(&element)
            .map(|f| c.contains(f))
            .unwrap_or(false)
    };
    let mut builder = RulePattern::builder();
    for (id, ty) in pattern.nodes() {
        if keep(ElementRef::RuleNode(rule_name.to_string(), id.clone())) {
            builder = builder.node(id.clone(), ty);
        }
    }
    for (id, inst) in pattern.edges() {
        if keep(ElementRef::RuleEdge(rule_name.to_string(), id.clone()))
            && keep(ElementRef::RuleNode(
                rule_name.to_string(),
                inst.source.clone(),
            ))
            && keep(ElementRef::RuleNode(
                rule_name.to_string(),
                inst.target.clone(),
            ))
        {
            builder = builder.edge(
                id.clone(),
                inst.edge_type.clone(),
                inst.source.clone(),
                inst.target.clone(),
            );
        }
    }
    for (node, attr, term) in pattern.terms() {
        if keep(ElementRef::RuleAttr(
            rule_name.to_string(),
            node.clone(),
            attr.to_string(),
        )) && keep(ElementRef::RuleNode(rule_name.to_string(), node.clone()))
        {
            builder = builder.term(node.clone(), attr, term.clone());
        }
    }
    builder.build()
}

/// Derive the variant of `fm` for configuration `c`: the system containing
/// exactly the elements mapped to features in `c`. Rules are filtered
/// element-wise; a whole rule is dropped iff its own feature is not chosen.
pub fn derive_variant(fm: &FeatureModel, c: &Configuration) -> Result<Gts, FeatureError> {
    if !is_valid(&fm.fd, c) {
        return Err(FeatureError::InvalidConfiguration(c.clone()));
    }
    let report = check_feature_model(fm);
    if !report.is_ok() {
        return Err(FeatureError::InconsistentModel(report));
    }

    let keep = |element: ElementRef| -> bool {
        fm.feature_of(&element)
            .map(|f| c.contains(f))
            .unwrap_or(false)
    };
    let tg = fm.m150.type_graph();
    let mut builder = TypeGraph::builder();
    for nt in tg.node_types() {
        if keep(ElementRef::NodeType(nt.to_string())) {
            builder = builder.node(nt);
        }
    }
    for (et, sig) in tg.edge_types() {
        if keep(ElementRef::EdgeType(et.to_string())) {
            builder = builder.edge(et, sig.source.clone(), sig.target.clone());
        }
    }
    for (nt, attr, domain) in tg.attr_decls() {
        if keep(ElementRef::AttrDecl(nt.to_string(), attr.to_string())) {
            builder = builder.attr(nt, attr, domain.clone());
        }
    }
    let variant_tg = builder.build()?;

    let mut rules = Vec::new();
    for rule in fm.m150.rules() {
        if !keep(ElementRef::Rule(rule.name().to_string())) {
            continue;
        }
        let lhs = filter_pattern(fm, rule.name(), rule.lhs(), c);
        let rhs = filter_pattern(fm, rule.name(), rule.rhs(), c);
        rules.push(Rule::new(&variant_tg, rule.name(), lhs, rhs, rule.rate())?);
    }
    Ok(Gts::new(c.to_string(), variant_tg, rules)?)
}
