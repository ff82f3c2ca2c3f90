//! Shared helpers for the integration suites: brute-force oracles that stay
//! independent of the production match search, seeded random instance
//! generation, and the iterated merge along a feature tree.
//!
//! Each test target links its own copy, so not every helper is used
//! everywhere.
#![allow(dead_code)]

use featgts::feature::{derive_variant, Configuration, FeatureModel};
use featgts::graph::{
    AttrValue, EdgeId, GraphMorphism, InstanceGraph, NodeId, TypeGraph,
};
use featgts::compose::merge;
use featgts::rewrite::{AttrTerm, Gts, Match, Rule};
use featgts::rng::SplitMix64;

/// Brute force: enumerate every injective node map and every edge map on top
/// of it, keep the ones that pass the independent morphism validity check.
pub fn oracle_find_morphisms(pattern: &InstanceGraph, host: &InstanceGraph) -> Vec<GraphMorphism> {
    let pattern_nodes: Vec<&NodeId> = pattern.nodes().map(|(id, _)| id).collect();
    let host_nodes: Vec<&NodeId> = host.nodes().map(|(id, _)| id).collect();
    let pattern_edges: Vec<&EdgeId> = pattern.edges().map(|(id, _)| id).collect();
    let host_edges: Vec<&EdgeId> = host.edges().map(|(id, _)| id).collect();

    let mut results = Vec::new();
    let mut node_choice = vec![0usize; pattern_nodes.len()];
    enumerate_injective(host_nodes.len(), &mut node_choice, 0, &mut |node_choice| {
        let mut edge_choice = vec![0usize; pattern_edges.len()];
        enumerate_injective(host_edges.len(), &mut edge_choice, 0, &mut |edge_choice| {
            let morphism = GraphMorphism {
                node_map: pattern_nodes
                    .iter()
                    .zip(node_choice)
                    .map(|(p, &h)| ((*p).clone(), host_nodes[h].clone()))
                    .collect(),
                edge_map: pattern_edges
                    .iter()
                    .zip(edge_choice)
                    .map(|(p, &h)| ((*p).clone(), host_edges[h].clone()))
                    .collect(),
            };
            if morphism.is_valid(pattern, host) {
                results.push(morphism);
            }
        });
    });
    results.sort();
    results.dedup();
    results
}

/// Visit every injective assignment of `slots.len()` choices out of `n`.
fn enumerate_injective(
    n: usize,
    slots: &mut Vec<usize>,
    depth: usize,
    visit: &mut dyn FnMut(&Vec<usize>),
) {
    if depth == slots.len() {
        visit(slots);
        return;
    }
    for candidate in 0..n {
        if slots[..depth].contains(&candidate) {
            continue;
        }
        slots[depth] = candidate;
        enumerate_injective(n, slots, depth + 1, visit);
    }
}

/// Brute force over a rule's left-hand side, with its own unification of
/// attribute variables.
pub fn oracle_find_matches(rule: &Rule, host: &InstanceGraph) -> Vec<Match> {
    let lhs = rule.lhs();
    let lhs_nodes: Vec<&NodeId> = lhs.nodes().map(|(id, _)| id).collect();
    let host_nodes: Vec<&NodeId> = host.nodes().map(|(id, _)| id).collect();
    let lhs_edges: Vec<&EdgeId> = lhs.edges().map(|(id, _)| id).collect();
    let host_edges: Vec<&EdgeId> = host.edges().map(|(id, _)| id).collect();

    let mut results = Vec::new();
    let mut node_choice = vec![0usize; lhs_nodes.len()];
    enumerate_injective(host_nodes.len(), &mut node_choice, 0, &mut |node_choice| {
        // types
        for (p, &h) in lhs_nodes.iter().zip(node_choice.iter()) {
            if lhs.node_type(p) != host.node_type(host_nodes[h]) {
                return;
            }
        }
        // terms with unification
        let mut binding: std::collections::BTreeMap<String, AttrValue> = Default::default();
        for (node, attr, term) in lhs.terms() {
            let pos = lhs_nodes.iter().position(|n| *n == node).expect("lhs node");
            let image = host_nodes[node_choice[pos]];
            let value = host.attr(image, attr);
            match term {
                AttrTerm::Constant(c) => {
                    if let Some(v) = value {
                        if v != c {
                            return;
                        }
                    }
                }
                AttrTerm::Variable(var) => {
                    let v = match value {
                        Some(v) => v,
                        None => return,
                    };
                    match binding.get(var) {
                        Some(bound) if bound != v => return,
                        Some(_) => {}
                        None => {
                            binding.insert(var.clone(), v.clone());
                        }
                    }
                }
                AttrTerm::BuiltinApp(..) => unreachable!("no built-ins on lhs"),
            }
        }
        // edges
        let mut edge_choice = vec![0usize; lhs_edges.len()];
        enumerate_injective(host_edges.len(), &mut edge_choice, 0, &mut |edge_choice| {
            for (p, &h) in lhs_edges.iter().zip(edge_choice.iter()) {
                let p_edge = lhs.edge(p).expect("lhs edge");
                let h_edge = host.edge(host_edges[h]).expect("host edge");
                if p_edge.edge_type != h_edge.edge_type {
                    return;
                }
                let src_pos = lhs_nodes
                    .iter()
                    .position(|n| **n == p_edge.source)
                    .expect("endpoint");
                let tgt_pos = lhs_nodes
                    .iter()
                    .position(|n| **n == p_edge.target)
                    .expect("endpoint");
                if *host_nodes[node_choice[src_pos]] != h_edge.source
                    || *host_nodes[node_choice[tgt_pos]] != h_edge.target
                {
                    return;
                }
            }
            results.push(Match {
                morphism: GraphMorphism {
                    node_map: lhs_nodes
                        .iter()
                        .zip(node_choice.iter())
                        .map(|(p, &h)| ((*p).clone(), host_nodes[h].clone()))
                        .collect(),
                    edge_map: lhs_edges
                        .iter()
                        .zip(edge_choice.iter())
                        .map(|(p, &h)| ((*p).clone(), host_edges[h].clone()))
                        .collect(),
                },
                binding: binding.clone(),
            });
        });
    });
    results.sort();
    results.dedup();
    results
}

/// Seeded random instance over the bundled 150% vocabulary: up to
/// `max_nodes` agents with random states and positions, up to `max_edges`
/// random links (self-loops and parallels included).
pub fn random_instance(
    rng: &mut SplitMix64,
    tg: &TypeGraph,
    max_nodes: usize,
    max_edges: usize,
) -> InstanceGraph {
    let n = rng.next_below(max_nodes as u64 + 1) as usize;
    let states = ["S", "I", "R"];
    let mut builder = InstanceGraph::builder();
    for i in 0..n {
        let id = format!("h{i}");
        builder = builder.node(id.clone(), "Agent");
        let state = states[rng.next_below(3) as usize];
        builder = builder.attr(id.clone(), "s", AttrValue::Symbol(state.into()));
        if let Some(featgts::graph::AttrDomain::Grid { size }) = tg.domain("Agent", "l") {
            builder = builder.attr(
                id,
                "l",
                AttrValue::Coord {
                    x: rng.next_below(*size as u64) as u32,
                    y: rng.next_below(*size as u64) as u32,
                },
            );
        }
    }
    if n > 0 && tg.edge_signature("link").is_some() {
        let m = rng.next_below(max_edges as u64 + 1) as usize;
        for j in 0..m {
            let src = rng.next_below(n as u64);
            let tgt = rng.next_below(n as u64);
            builder = builder.edge(format!("k{j}"), "link", format!("h{src}"), format!("h{tgt}"));
        }
    }
    builder.build().expect("generated ids are unique")
}

/// Configuration made of the root paths of `features`, assuming a diagram
/// without mandatory children or alternative groups on those paths.
pub fn root_path_config(fm: &FeatureModel, feature: &str) -> Configuration {
    Configuration::new(fm.diagram().root_path(feature).iter().map(|f| f.to_string()))
}

/// Merge the per-feature extensions along the feature tree, in
/// parent-before-child order, and return the accumulated system.
pub fn iterated_merge(fm: &FeatureModel, config: &Configuration) -> Gts {
    let fd = fm.diagram();
    let mut acc_config = Configuration::new([fd.root()]);
    let mut acc = derive_variant(fm, &acc_config).expect("root variant derives");

    let mut features: Vec<&str> = config.features().filter(|f| *f != fd.root()).collect();
    features.sort_by_key(|f| (fd.root_path(f).len(), f.to_string()));

    for feature in features {
        let ext_config = root_path_config(fm, feature);
        let base_config = acc_config.intersection(&ext_config);
        let base = derive_variant(fm, &base_config).expect("base variant derives");
        let ext = derive_variant(fm, &ext_config).expect("extension variant derives");
        acc = merge(&base, &acc, &ext).expect("merge along the tree succeeds");
        acc_config = acc_config.union(&ext_config);
    }
    acc
}
