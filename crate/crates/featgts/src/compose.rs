//! Extension relations between systems, conservativity, and merging.
//!
//! One system extends another when its type graph includes the base's and
//! every base rule reappears, up to projection, under the same name. The
//! extension is conservative when it adds no new effects on old types; only
//! then can extended behaviour be projected onto the base.
//!
//! Two extensions of a shared base merge into one system covering both:
//! type graphs are united over the base, rules descending from the same base
//! rule are amalgamated into one rule carrying both extensions' conditions,
//! and rules new in exactly one extension are copied.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::{EdgeInst, GraphError, TypeGraph, TypeGraphInclusion};
use crate::rewrite::{
    effect_of, project_rule, projected_effect, rule_isomorphic, AttrTerm, Effect, Gts, Rule,
    RuleError, RuleIso, RulePattern,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComposeError {
    #[error("extension is missing base rule `{0}`")]
    MissingRule(String),
    #[error("rule `{0}` does not project back onto its base rule")]
    RuleMismatch(String),
    #[error("extensions both introduce {kind} `{name}`")]
    NameClash { kind: &'static str, name: String },
    #[error("rule `{rule}`: extensions disagree on the term at `{node}.{attr}`")]
    ConflictingTerm {
        rule: String,
        node: String,
        attr: String,
    },
    #[error("rule `{0}`: extensions changed the rate in conflicting ways")]
    RateConflict(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

/// Witness that `ext` extends `base`: a type-graph inclusion plus a
/// correspondence sending each base rule to the extension rule that projects
/// back onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionWitness {
    base: Gts,
    ext: Gts,
    type_inclusion: TypeGraphInclusion,
    rule_correspondence: BTreeMap<String, String>,
    rule_embeddings: BTreeMap<String, RuleIso>,
}

impl ExtensionWitness {
    pub fn base(&self) -> &Gts {
        &self.base
    }

    pub fn ext(&self) -> &Gts {
        &self.ext
    }

    pub fn type_inclusion(&self) -> &TypeGraphInclusion {
        &self.type_inclusion
    }

    /// Base rule name to extension rule name, total on base rules, injective.
    pub fn rule_correspondence(&self) -> &BTreeMap<String, String> {
        &self.rule_correspondence
    }

    /// Element-level embedding of a base rule into its extension rule.
    pub fn embedding(&self, base_rule: &str) -> Option<&RuleIso> {
        self.rule_embeddings.get(base_rule)
    }

    /// The base rule an extension rule corresponds to, if any.
    pub fn base_rule_of(&self, ext_rule: &str) -> Option<&str> {
        self.rule_correspondence
            .iter()
            .find(|(_, e)| e.as_str() == ext_rule)
            .map(|(b, _)| b.as_str())
    }
}

/// Construct the extension witness for `base` into `ext` by name identity,
/// verifying the inclusion and that each base rule's namesake projects back
/// onto it. Fails on the first broken condition.
pub fn check_extension(base: &Gts, ext: &Gts) -> Result<ExtensionWitness, ComposeError> {
    let type_inclusion = TypeGraphInclusion::check(base.type_graph(), ext.type_graph())?;
    let mut rule_correspondence = BTreeMap::new();
    let mut rule_embeddings = BTreeMap::new();
    for base_rule in base.rules() {
        let ext_rule = ext
            .rule(base_rule.name())
            .ok_or_else(|| ComposeError::MissingRule(base_rule.name().to_string()))?;
        let projected = project_rule(ext_rule, ext.type_graph(), base.type_graph())?;
        let iso = rule_isomorphic(base_rule, &projected)
            .ok_or_else(|| ComposeError::RuleMismatch(base_rule.name().to_string()))?;
        rule_correspondence.insert(base_rule.name().to_string(), ext_rule.name().to_string());
        rule_embeddings.insert(base_rule.name().to_string(), iso);
    }
    Ok(ExtensionWitness {
        base: base.clone(),
        ext: ext.clone(),
        type_inclusion,
        rule_correspondence,
        rule_embeddings,
    })
}

/// Verdict of a conservativity check, with the offending rules and their
/// projected effects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservativityReport {
    pub conservative: bool,
    pub offending_rules: Vec<(String, Effect)>,
}

impl std::fmt::Display for ConservativityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.conservative {
            f.write_str("conservative")
        } else {
            f.write_str("NOT conservative: ")?;
            for (i, (rule, effect)) in self.offending_rules.iter().enumerate() {
                if i > 0 {
                    f.write_str("; ")?;
                }
                write!(f, "{rule} ({effect})")?;
            }
            Ok(())
        }
    }
}

/// Decide whether the witnessed extension is conservative: every extension
/// rule corresponding to a base rule must keep that rule's effect under
/// projection, and every new rule must project to an empty effect.
pub fn is_conservative(w: &ExtensionWitness) -> ConservativityReport {
    let base_tg = w.base.type_graph();
    let mut offending_rules = Vec::new();
    for ext_rule in w.ext.rules() {
        let projected = projected_effect(ext_rule, base_tg);
        match w.base_rule_of(ext_rule.name()) {
            Some(base_name) => {
                let base_effect = effect_of(w.base.rule(base_name).expect("correspondence"));
                if projected != base_effect {
                    offending_rules.push((ext_rule.name().to_string(), projected));
                }
            }
            None => {
                if !projected.is_empty() {
                    offending_rules.push((ext_rule.name().to_string(), projected));
                }
            }
        }
    }
    ConservativityReport {
        conservative: offending_rules.is_empty(),
        offending_rules,
    }
}

fn extension_only_names(base: &TypeGraph, ext: &TypeGraph) -> (BTreeSet<String>, BTreeSet<String>, BTreeSet<(String, String)>) {
    let nodes = ext
        .node_types()
        .filter(|t| !base.has_node_type(t))
        .map(str::to_string)
        .collect();
    let edges = ext
        .edge_types()
        .filter(|(t, _)| base.edge_signature(t).is_none())
        .map(|(t, _)| t.to_string())
        .collect();
    let attrs = ext
        .attr_decls()
        .filter(|(nt, a, _)| base.domain(nt, a).is_none())
        .map(|(nt, a, _)| (nt.to_string(), a.to_string()))
        .collect();
    (nodes, edges, attrs)
}

fn union_type_graph(base: &TypeGraph, ext1: &TypeGraph, ext2: &TypeGraph) -> Result<TypeGraph, GraphError> {
    let mut nodes: BTreeSet<&str> = base.node_types().collect();
    nodes.extend(ext1.node_types());
    nodes.extend(ext2.node_types());
    let mut builder = TypeGraph::builder();
    for n in nodes {
        builder = builder.node(n);
    }
    let mut edges: BTreeMap<&str, &crate::graph::EdgeSignature> = base.edge_types().collect();
    edges.extend(ext1.edge_types());
    edges.extend(ext2.edge_types());
    for (name, sig) in edges {
        builder = builder.edge(name, sig.source.clone(), sig.target.clone());
    }
    let mut attrs: BTreeMap<(&str, &str), &crate::graph::AttrDomain> = base
        .attr_decls()
        .map(|(nt, a, d)| ((nt, a), d))
        .collect();
    attrs.extend(ext1.attr_decls().map(|(nt, a, d)| ((nt, a), d)));
    attrs.extend(ext2.attr_decls().map(|(nt, a, d)| ((nt, a), d)));
    for ((nt, a), d) in attrs {
        builder = builder.attr(nt, a, d.clone());
    }
    builder.build()
}

/// Translation of one extension rule's elements into the amalgamated rule.
struct Side<'a> {
    rule: &'a Rule,
    /// base element id -> this extension rule's element id
    embedding: &'a RuleIso,
}

/// Amalgamate the two extended versions of one base rule over that base rule:
/// the result carries the union of both extensions' elements, glued along the
/// base. Element ids follow `r1`; `r2`-only elements keep their ids unless
/// they collide.
fn amalgamate_rule(
    merged_tg: &TypeGraph,
    base_rule: &Rule,
    side1: &Side<'_>,
    side2: &Side<'_>,
) -> Result<Rule, ComposeError> {
    let r1 = side1.rule;
    let r2 = side2.rule;
    let name = base_rule.name().to_string();

    // r2 element id -> base element id (inverse of the embedding)
    let base_of_node2: BTreeMap<_, _> = side2
        .embedding
        .node_map
        .iter()
        .map(|(b, e)| (e.clone(), b.clone()))
        .collect();
    let base_of_edge2: BTreeMap<_, _> = side2
        .embedding
        .edge_map
        .iter()
        .map(|(b, e)| (e.clone(), b.clone()))
        .collect();
    let base_of_var2: BTreeMap<_, _> = side2
        .embedding
        .var_map
        .iter()
        .map(|(b, e)| (e.clone(), b.clone()))
        .collect();

    // Existing names on side 1, to keep r2-only additions collision-free.
    let mut used_node_ids: BTreeSet<String> = r1
        .lhs()
        .nodes()
        .chain(r1.rhs().nodes())
        .map(|(id, _)| id.0.clone())
        .collect();
    let mut used_edge_ids: BTreeSet<String> = r1
        .lhs()
        .edges()
        .chain(r1.rhs().edges())
        .map(|(id, _)| id.0.clone())
        .collect();
    let mut used_vars: BTreeSet<String> = r1
        .lhs()
        .terms()
        .chain(r1.rhs().terms())
        .filter_map(|(_, _, t)| match t {
            AttrTerm::Variable(v) | AttrTerm::BuiltinApp(_, v) => Some(v.clone()),
            AttrTerm::Constant(_) => None,
        })
        .collect();

    let fresh = |used: &mut BTreeSet<String>, wanted: &str| -> String {
        if used.insert(wanted.to_string()) {
            return wanted.to_string();
        }
        let mut n = 2;
        loop {
            let candidate = format!("{wanted}_{n}");
            if used.insert(candidate.clone()) {
                return candidate;
            }
            n += 1;
        }
    };

    // r2 id -> merged id, for everything r2 mentions.
    let mut node2_to_merged: BTreeMap<String, String> = BTreeMap::new();
    let mut nodes2: BTreeSet<&crate::graph::NodeId> = r2.lhs().nodes().map(|(id, _)| id).collect();
    nodes2.extend(r2.rhs().nodes().map(|(id, _)| id));
    for id2 in nodes2 {
        let merged = match base_of_node2.get(id2) {
            Some(b) => side1.embedding.node_map[b].0.clone(),
            None => fresh(&mut used_node_ids, &id2.0),
        };
        node2_to_merged.insert(id2.0.clone(), merged);
    }
    let mut edge2_to_merged: BTreeMap<String, String> = BTreeMap::new();
    let mut edges2: BTreeSet<&crate::graph::EdgeId> = r2.lhs().edges().map(|(id, _)| id).collect();
    edges2.extend(r2.rhs().edges().map(|(id, _)| id));
    for id2 in edges2 {
        let merged = match base_of_edge2.get(id2) {
            Some(b) => side1.embedding.edge_map[b].0.clone(),
            None => fresh(&mut used_edge_ids, &id2.0),
        };
        edge2_to_merged.insert(id2.0.clone(), merged);
    }
    let mut var2_to_merged: BTreeMap<String, String> = BTreeMap::new();
    let mut vars2: BTreeSet<String> = BTreeSet::new();
    for (_, _, t) in r2.lhs().terms().chain(r2.rhs().terms()) {
        if let AttrTerm::Variable(v) | AttrTerm::BuiltinApp(_, v) = t {
            vars2.insert(v.clone());
        }
    }
    for v2 in vars2 {
        let merged = match base_of_var2.get(&v2) {
            Some(b) => side1.embedding.var_map[b].clone(),
            None => fresh(&mut used_vars, &v2),
        };
        var2_to_merged.insert(v2, merged);
    }

    let translate_term = |t: &AttrTerm| -> AttrTerm {
        match t {
            AttrTerm::Constant(v) => AttrTerm::Constant(v.clone()),
            AttrTerm::Variable(v) => AttrTerm::Variable(var2_to_merged[v].clone()),
            AttrTerm::BuiltinApp(b, v) => AttrTerm::BuiltinApp(*b, var2_to_merged[v].clone()),
        }
    };

    let merge_side = |side1_pattern: &RulePattern,
                      side2_pattern: &RulePattern|
     -> Result<RulePattern, ComposeError> {
        let mut builder = RulePattern::builder();
        let mut nodes: BTreeMap<String, String> = side1_pattern
            .nodes()
            .map(|(id, ty)| (id.0.clone(), ty.to_string()))
            .collect();
        for (id2, ty) in side2_pattern.nodes() {
            nodes
                .entry(node2_to_merged[&id2.0].clone())
                .or_insert_with(|| ty.to_string());
        }
        for (id, ty) in &nodes {
            builder = builder.node(id.clone(), ty.clone());
        }
        let mut edges: BTreeMap<String, EdgeInst> = side1_pattern
            .edges()
            .map(|(id, e)| (id.0.clone(), e.clone()))
            .collect();
        for (id2, e) in side2_pattern.edges() {
            edges
                .entry(edge2_to_merged[&id2.0].clone())
                .or_insert_with(|| EdgeInst {
                    edge_type: e.edge_type.clone(),
                    source: node2_to_merged[&e.source.0].clone().into(),
                    target: node2_to_merged[&e.target.0].clone().into(),
                });
        }
        for (id, e) in &edges {
            builder = builder.edge(
                id.clone(),
                e.edge_type.clone(),
                e.source.clone(),
                e.target.clone(),
            );
        }
        let mut terms: BTreeMap<(String, String), AttrTerm> = side1_pattern
            .terms()
            .map(|(n, a, t)| ((n.0.clone(), a.to_string()), t.clone()))
            .collect();
        for (n2, attr, t2) in side2_pattern.terms() {
            let key = (node2_to_merged[&n2.0].clone(), attr.to_string());
            let translated = translate_term(t2);
            match terms.get(&key) {
                Some(existing) if *existing != translated => {
                    return Err(ComposeError::ConflictingTerm {
                        rule: name.clone(),
                        node: key.0,
                        attr: key.1,
                    });
                }
                Some(_) => {}
                None => {
                    terms.insert(key, translated);
                }
            }
        }
        for ((n, a), t) in terms {
            builder = builder.term(n, a, t);
        }
        Ok(builder.build())
    };

    let lhs = merge_side(r1.lhs(), r2.lhs())?;
    let rhs = merge_side(r1.rhs(), r2.rhs())?;

    let rate = if r1.rate() == r2.rate() {
        r1.rate()
    } else if r1.rate() == base_rule.rate() {
        r2.rate()
    } else if r2.rate() == base_rule.rate() {
        r1.rate()
    } else {
        return Err(ComposeError::RateConflict(name));
    };

    Ok(Rule::new(merged_tg, name, lhs, rhs, rate)?)
}

/// Merge two extensions of a shared base into one system combining both.
///
/// Preconditions: both are extensions of `base`, and the extension-only type
/// names are disjoint. Rules descending from the same base rule are
/// amalgamated; rules new in exactly one extension are copied.
pub fn merge(base: &Gts, ext1: &Gts, ext2: &Gts) -> Result<Gts, ComposeError> {
    let w1 = check_extension(base, ext1)?;
    let w2 = check_extension(base, ext2)?;

    let (n1, e1, a1) = extension_only_names(base.type_graph(), ext1.type_graph());
    let (n2, e2, a2) = extension_only_names(base.type_graph(), ext2.type_graph());
    if let Some(n) = n1.intersection(&n2).next() {
        return Err(ComposeError::NameClash {
            kind: "node type",
            name: n.clone(),
        });
    }
    if let Some(e) = e1.intersection(&e2).next() {
        return Err(ComposeError::NameClash {
            kind: "edge type",
            name: e.clone(),
        });
    }
    if let Some((nt, a)) = a1.intersection(&a2).next() {
        return Err(ComposeError::NameClash {
            kind: "attribute",
            name: format!("{nt}.{a}"),
        });
    }

    let merged_tg = union_type_graph(base.type_graph(), ext1.type_graph(), ext2.type_graph())?;

    let mut rules = Vec::new();
    for base_rule in base.rules() {
        let name1 = &w1.rule_correspondence()[base_rule.name()];
        let name2 = &w2.rule_correspondence()[base_rule.name()];
        let side1 = Side {
            rule: ext1.rule(name1).expect("correspondence"),
            embedding: w1.embedding(base_rule.name()).expect("correspondence"),
        };
        let side2 = Side {
            rule: ext2.rule(name2).expect("correspondence"),
            embedding: w2.embedding(base_rule.name()).expect("correspondence"),
        };
        rules.push(amalgamate_rule(&merged_tg, base_rule, &side1, &side2)?);
    }

    let corresponding1: BTreeSet<&String> = w1.rule_correspondence().values().collect();
    let corresponding2: BTreeSet<&String> = w2.rule_correspondence().values().collect();
    let new1: Vec<&Rule> = ext1
        .rules()
        .filter(|r| !corresponding1.contains(&r.name().to_string()))
        .collect();
    let new2: Vec<&Rule> = ext2
        .rules()
        .filter(|r| !corresponding2.contains(&r.name().to_string()))
        .collect();
    for r in &new1 {
        if new2.iter().any(|r2| r2.name() == r.name()) {
            return Err(ComposeError::NameClash {
                kind: "rule",
                name: r.name().to_string(),
            });
        }
    }
    for r in new1.into_iter().chain(new2) {
        rules.push(Rule::new(
            &merged_tg,
            r.name(),
            r.lhs().clone(),
            r.rhs().clone(),
            r.rate(),
        )?);
    }

    let merged_name = format!("{}+{}", ext1.name(), ext2.name());
    Ok(Gts::new(merged_name, merged_tg, rules)?)
}

/// True when the two systems agree up to renaming of rule-internal elements:
/// identical type graphs, identical rule names, pairwise rule isomorphism and
/// equal rates. Names of the systems themselves are not compared.
pub fn gts_isomorphic(a: &Gts, b: &Gts) -> bool {
    if a.type_graph() != b.type_graph() || a.rule_count() != b.rule_count() {
        return false;
    }
    a.rules().all(|rule_a| match b.rule(rule_a.name()) {
        Some(rule_b) => {
            rule_a.rate() == rule_b.rate() && rule_isomorphic(rule_a, rule_b).is_some()
        }
        None => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::derive_variant;
    use crate::models;

    fn variant(config: &crate::feature::Configuration) -> Gts {
        derive_variant(&models::sir_feature_model(), config).unwrap()
    }

    #[test]
    fn network_extends_the_basic_model() {
        let base = variant(&models::basic_config());
        let ext = variant(&models::network_config());
        let w = check_extension(&base, &ext).unwrap();
        assert_eq!(w.rule_correspondence().len(), 2);
        assert_eq!(w.rule_correspondence()["infect"], "infect");
        assert_eq!(w.rule_correspondence()["recover"], "recover");
    }

    #[test]
    fn every_system_extends_itself() {
        let g = variant(&models::basic_config());
        let w = check_extension(&g, &g).unwrap();
        assert_eq!(w.rule_correspondence().len(), g.rule_count());
        assert!(is_conservative(&w).conservative);
    }

    #[test]
    fn location_does_not_extend_network() {
        let base = variant(&models::network_config());
        let ext = variant(&models::location_config());
        let err = check_extension(&base, &ext).unwrap_err();
        assert_eq!(
            err,
            ComposeError::Graph(GraphError::MissingEdgeType("link".into()))
        );
    }

    #[test]
    fn location_extension_is_conservative() {
        let base = variant(&models::basic_config());
        let ext = variant(&models::location_config());
        let report = is_conservative(&check_extension(&base, &ext).unwrap());
        assert!(report.conservative, "{report}");
    }

    #[test]
    fn network_extension_is_conservative() {
        let base = variant(&models::basic_config());
        let ext = variant(&models::network_config());
        let report = is_conservative(&check_extension(&base, &ext).unwrap());
        assert!(report.conservative, "{report}");
    }

    #[test]
    fn dynamics_over_network_is_not_conservative() {
        let base = variant(&models::network_config());
        let ext = variant(&models::dynamics_config());
        let report = is_conservative(&check_extension(&base, &ext).unwrap());
        assert!(!report.conservative);
        assert_eq!(report.offending_rules.len(), 1);
        let (rule, effect) = &report.offending_rules[0];
        assert_eq!(rule, "desert");
        assert_eq!(effect.deleted_edge_types.get("link"), Some(&1));
        assert_eq!(effect.created_edge_types.get("link"), Some(&1));
        assert_eq!(
            report.to_string(),
            "NOT conservative: desert (deletes link, creates link)"
        );
    }

    #[test]
    fn dynamics_over_the_basic_model_is_conservative() {
        let base = variant(&models::basic_config());
        let ext = variant(&models::dynamics_config());
        let report = is_conservative(&check_extension(&base, &ext).unwrap());
        assert!(report.conservative, "{report}");
    }

    #[test]
    fn merging_location_and_network_combines_the_infection_conditions() {
        let base = variant(&models::basic_config());
        let loc = variant(&models::location_config());
        let net = variant(&models::network_config());
        let merged = merge(&base, &loc, &net).unwrap();

        let tg = merged.type_graph();
        assert!(tg.domain("Agent", "l").is_some());
        assert!(tg.edge_signature("link").is_some());

        let infect = merged.rule("infect").unwrap();
        assert_eq!(infect.lhs().edges().count(), 1);
        let l1 = infect.lhs().term(&"n1".into(), "l").unwrap();
        let l2 = infect.lhs().term(&"n2".into(), "l").unwrap();
        assert_eq!(l1, l2);
        assert!(matches!(l1, AttrTerm::Variable(_)));

        for mv in ["north", "south", "east", "west"] {
            assert!(merged.rule(mv).is_some(), "movement rule {mv} not copied");
        }
        assert!(merged.rule("recover").is_some());
        assert_eq!(merged.rule_count(), 6);

        let derived = variant(&crate::feature::Configuration::new([
            "SIR", "location", "network",
        ]));
        assert!(gts_isomorphic(&merged, &derived));
    }

    #[test]
    fn merge_of_a_system_with_itself_over_itself_is_identity() {
        let base = variant(&models::basic_config());
        let merged = merge(&base, &base, &base).unwrap();
        assert!(gts_isomorphic(&merged, &base));
    }

    #[test]
    fn merging_network_and_dynamics_reproduces_the_dynamics_variant() {
        // Both variants contain the link type, so their shared base is the
        // network variant; the dynamics delta adds only the desert rule.
        let net = variant(&models::network_config());
        let dynamics = variant(&models::dynamics_config());
        let merged = merge(&net, &net, &dynamics).unwrap();
        assert!(gts_isomorphic(&merged, &dynamics));
        assert!(merged.rule("desert").is_some());
        assert_eq!(merged.rule("infect").unwrap().lhs().edges().count(), 1);
    }

    #[test]
    fn merge_commutes_up_to_isomorphism() {
        let base = variant(&models::basic_config());
        let loc = variant(&models::location_config());
        let net = variant(&models::network_config());
        let ab = merge(&base, &loc, &net).unwrap();
        let ba = merge(&base, &net, &loc).unwrap();
        assert!(gts_isomorphic(&ab, &ba));
    }

    #[test]
    fn merge_is_a_cocone_over_both_extensions() {
        let base = variant(&models::basic_config());
        let loc = variant(&models::location_config());
        let net = variant(&models::network_config());
        let merged = merge(&base, &loc, &net).unwrap();
        assert!(check_extension(&loc, &merged).is_ok());
        assert!(check_extension(&net, &merged).is_ok());
        let w = check_extension(&base, &merged).unwrap();
        assert!(is_conservative(&w).conservative);
    }

    #[test]
    fn base_rule_edits_fail_the_extension_check_before_merging() {
        // An "extension" over the same type graph that rewrites a base rule's
        // own terms no longer projects back onto that rule, so the witness
        // check rejects it before amalgamation could ever see a term
        // conflict. (The ConflictingTerm error stays as an internal guard.)
        use crate::graph::AttrDomain;
        use crate::rewrite::RulePattern;
        let tg = TypeGraph::builder()
            .node("Agent")
            .attr("Agent", "s", AttrDomain::symbols(["S", "I", "R"]))
            .build()
            .unwrap();
        let rule = |to: &str| {
            Rule::new(
                &tg,
                "flip",
                RulePattern::builder()
                    .node("a", "Agent")
                    .term("a", "s", AttrTerm::symbol("S"))
                    .build(),
                RulePattern::builder()
                    .node("a", "Agent")
                    .term("a", "s", AttrTerm::symbol(to))
                    .build(),
                1.0,
            )
            .unwrap()
        };
        let base = Gts::new("base", tg.clone(), vec![rule("I")]).unwrap();
        let edited = Gts::new("edited", tg.clone(), vec![rule("R")]).unwrap();
        let err = merge(&base, &edited, &base).unwrap_err();
        assert_eq!(err, ComposeError::RuleMismatch("flip".into()));
    }

    #[test]
    fn conflicting_rate_edits_are_rejected() {
        let base = variant(&models::basic_config());
        let with_rate = |gts: &Gts, rate: f64| {
            let rules = gts
                .rules()
                .map(|r| {
                    if r.name() == "recover" {
                        r.with_rate(rate).unwrap()
                    } else {
                        r.clone()
                    }
                })
                .collect();
            Gts::new(gts.name(), gts.type_graph().clone(), rules).unwrap()
        };
        let fast = with_rate(&base, 3.0);
        let slow = with_rate(&base, 0.5);
        let err = merge(&base, &fast, &slow).unwrap_err();
        assert_eq!(err, ComposeError::RateConflict("recover".into()));
        // exactly one side changing the rate wins
        let merged = merge(&base, &base, &fast).unwrap();
        assert_eq!(merged.rule("recover").unwrap().rate(), 3.0);
    }

    #[test]
    fn clashing_extension_types_are_rejected() {
        let base_tg = TypeGraph::builder().node("Agent").build().unwrap();
        let ext_tg = TypeGraph::builder()
            .node("Agent")
            .node("Extra")
            .build()
            .unwrap();
        let base = Gts::new("base", base_tg, vec![]).unwrap();
        let ext_a = Gts::new("a", ext_tg.clone(), vec![]).unwrap();
        let ext_b = Gts::new("b", ext_tg, vec![]).unwrap();
        let err = merge(&base, &ext_a, &ext_b).unwrap_err();
        assert_eq!(
            err,
            ComposeError::NameClash {
                kind: "node type",
                name: "Extra".into()
            }
        );
    }
}
