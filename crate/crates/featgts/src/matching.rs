//! Internal subgraph-matching engine.
//!
//! One backtracking search serves both [`crate::graph::find_morphisms`]
//! (constant attribute constraints) and rule matching in [`crate::rewrite`]
//! (constraints with shared variables). Patterns are compiled once against a
//! type graph; hosts are indexed per call. The search assigns pattern nodes in
//! id order, generates candidates from host adjacency whenever a pattern edge
//! connects the current node to an already-assigned one, and enumerates host
//! edges explicitly so that parallel edges yield distinct matches.
//!
//! Enumeration order is deterministic: candidates are visited in ascending
//! host order. Callers that expose match lists sort them into the documented
//! order; callers that count or pick the n-th match rely only on determinism.
//!
//! Candidate narrowing by constant attribute values assumes hosts are
//! well-typed (total attribute valuations), which every caller guarantees;
//! a host node missing a declared value would not be reached through a value
//! bucket.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use crate::graph::{AttrValue, EdgeId, GraphMorphism, InstanceGraph, NodeId, TypeGraph};

/// Constraint on one attribute position of a pattern node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum AttrConstraint {
    /// Host value must equal the constant.
    Const(AttrValue),
    /// Host value must agree with the variable's binding; binds it when free.
    Var(usize),
}

/// One unresolved pattern node: id, type name, attribute constraints.
pub(crate) type NodeSpec = (NodeId, String, Vec<(String, AttrConstraint)>);

/// One unresolved pattern edge: id, type name, source id, target id.
pub(crate) type EdgeSpec = (EdgeId, String, NodeId, NodeId);

/// Pattern input to compilation, with names still unresolved.
#[derive(Debug, Clone)]
pub(crate) struct PatternSpec {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    pub n_vars: usize,
}

#[derive(Debug, Clone)]
struct PatternNode {
    type_idx: usize,
    constraints: Vec<(usize, AttrConstraint)>,
    /// First constant constraint, used to narrow the candidate set to a
    /// value bucket of the host index.
    const_hint: Option<(usize, AttrValue)>,
}

#[derive(Debug, Clone)]
struct PatternEdge {
    type_idx: usize,
    src: usize,
    tgt: usize,
}

/// A pattern resolved against a type graph, ready to match repeatedly.
#[derive(Debug, Clone)]
pub(crate) struct CompiledPattern {
    pub node_ids: Vec<NodeId>,
    pub edge_ids: Vec<EdgeId>,
    nodes: Vec<PatternNode>,
    edges: Vec<PatternEdge>,
    /// Per node position: pattern edges whose endpoints are all assigned once
    /// that position is assigned.
    schedule: Vec<Vec<usize>>,
    n_vars: usize,
    /// Set when the pattern refers to names outside the type graph; such a
    /// pattern matches nothing.
    impossible: bool,
}

fn node_type_index(tg: &TypeGraph, name: &str) -> Option<usize> {
    tg.node_types().position(|t| t == name)
}

fn edge_type_index(tg: &TypeGraph, name: &str) -> Option<usize> {
    tg.edge_types().position(|(t, _)| t == name)
}

fn attr_name_index(attr_names: &[String], name: &str) -> Option<usize> {
    attr_names.binary_search_by(|a| a.as_str().cmp(name)).ok()
}

fn collect_attr_names(tg: &TypeGraph) -> Vec<String> {
    let mut names: Vec<String> = tg.attr_decls().map(|(_, a, _)| a.to_string()).collect();
    names.sort();
    names.dedup();
    names
}

impl CompiledPattern {
    pub fn compile(tg: &TypeGraph, spec: &PatternSpec) -> Self {
        let attr_names = collect_attr_names(tg);
        let mut impossible = false;

        let mut order: Vec<usize> = (0..spec.nodes.len()).collect();
        order.sort_by(|&a, &b| spec.nodes[a].0.cmp(&spec.nodes[b].0));
        let mut pos_of = BTreeMap::new();
        let mut node_ids = Vec::with_capacity(order.len());
        let mut nodes = Vec::with_capacity(order.len());
        for (pos, &i) in order.iter().enumerate() {
            let (id, ty, constraints) = &spec.nodes[i];
            pos_of.insert(id.clone(), pos);
            node_ids.push(id.clone());
            let type_idx = match node_type_index(tg, ty) {
                Some(t) => t,
                None => {
                    impossible = true;
                    0
                }
            };
            let mut resolved = Vec::with_capacity(constraints.len());
            for (attr, c) in constraints {
                match attr_name_index(&attr_names, attr) {
                    Some(a) => resolved.push((a, c.clone())),
                    None => impossible = true,
                }
            }
            resolved.sort_by_key(|(a, _)| *a);
            let const_hint = resolved.iter().find_map(|(a, c)| match c {
                AttrConstraint::Const(v) => Some((*a, v.clone())),
                AttrConstraint::Var(_) => None,
            });
            nodes.push(PatternNode {
                type_idx,
                constraints: resolved,
                const_hint,
            });
        }

        let mut edge_order: Vec<usize> = (0..spec.edges.len()).collect();
        edge_order.sort_by(|&a, &b| spec.edges[a].0.cmp(&spec.edges[b].0));
        let mut edge_ids = Vec::with_capacity(edge_order.len());
        let mut edges = Vec::with_capacity(edge_order.len());
        for &i in &edge_order {
            let (id, ty, src, tgt) = &spec.edges[i];
            edge_ids.push(id.clone());
            let type_idx = match edge_type_index(tg, ty) {
                Some(t) => t,
                None => {
                    impossible = true;
                    0
                }
            };
            let (src, tgt) = match (pos_of.get(src), pos_of.get(tgt)) {
                (Some(&s), Some(&t)) => (s, t),
                _ => {
                    impossible = true;
                    (0, 0)
                }
            };
            edges.push(PatternEdge { type_idx, src, tgt });
        }

        let mut schedule = vec![Vec::new(); nodes.len()];
        if !impossible {
            for (i, e) in edges.iter().enumerate() {
                schedule[e.src.max(e.tgt)].push(i);
            }
        }

        CompiledPattern {
            node_ids,
            edge_ids,
            nodes,
            edges,
            schedule,
            n_vars: spec.n_vars,
            impossible,
        }
    }

    pub fn from_instance(tg: &TypeGraph, pattern: &InstanceGraph) -> Self {
        let spec = PatternSpec {
            nodes: pattern
                .nodes()
                .map(|(id, ty)| {
                    let constraints = pattern
                        .attrs_of(id)
                        .map(|(a, v)| (a.to_string(), AttrConstraint::Const(v.clone())))
                        .collect();
                    (id.clone(), ty.to_string(), constraints)
                })
                .collect(),
            edges: pattern
                .edges()
                .map(|(id, e)| {
                    (
                        id.clone(),
                        e.edge_type.clone(),
                        e.source.clone(),
                        e.target.clone(),
                    )
                })
                .collect(),
            n_vars: 0,
        };
        Self::compile(tg, &spec)
    }

    /// Visit every match of `self` in `host`. The visitor may stop the search
    /// early by returning `ControlFlow::Break`.
    pub fn for_each<'g>(
        &self,
        host: &HostIndex<'g>,
        visit: &mut dyn FnMut(&MatchView<'_, 'g>) -> ControlFlow<()>,
    ) {
        if self.impossible {
            return;
        }
        let mut search = Search {
            pattern: self,
            host,
            node_assignment: vec![usize::MAX; self.nodes.len()],
            used_nodes: vec![false; host.node_ids.len()],
            edge_assignment: vec![usize::MAX; self.edges.len()],
            used_edges: vec![false; host.edge_ids.len()],
            bindings: vec![None; self.n_vars],
        };
        let _ = search.assign_node(0, visit);
    }
}

/// Read-only view of one found match, valid only inside the visitor call.
pub(crate) struct MatchView<'a, 'g> {
    pub node_assignment: &'a [usize],
    pub edge_assignment: &'a [usize],
    pub bindings: &'a [Option<&'g AttrValue>],
}

impl MatchView<'_, '_> {
    pub fn to_morphism(&self, pattern: &CompiledPattern, host: &HostIndex<'_>) -> GraphMorphism {
        let node_map = pattern
            .node_ids
            .iter()
            .zip(self.node_assignment)
            .map(|(p, &h)| (p.clone(), host.node_ids[h].clone()))
            .collect();
        let edge_map = pattern
            .edge_ids
            .iter()
            .zip(self.edge_assignment)
            .map(|(p, &h)| (p.clone(), host.edge_ids[h].clone()))
            .collect();
        GraphMorphism { node_map, edge_map }
    }
}

/// Host graph indexed for matching: nodes bucketed by type, adjacency sorted
/// for deterministic candidate generation.
pub(crate) struct HostIndex<'g> {
    pub node_ids: Vec<&'g NodeId>,
    pub edge_ids: Vec<&'g EdgeId>,
    node_type: Vec<usize>,
    node_attrs: Vec<Vec<(usize, &'g AttrValue)>>,
    nodes_by_type: Vec<Vec<usize>>,
    /// `(type, attr) -> value -> nodes carrying that value`, ascending.
    value_buckets: BTreeMap<(usize, usize), BTreeMap<&'g AttrValue, Vec<usize>>>,
    edge_info: Vec<(usize, usize, usize)>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl<'g> HostIndex<'g> {
    pub fn build(tg: &TypeGraph, host: &'g InstanceGraph) -> Self {
        let attr_names = collect_attr_names(tg);
        let n_node_types = tg.node_types().count();
        let n_edge_types = tg.edge_types().count();

        let mut node_ids = Vec::with_capacity(host.node_count());
        let mut node_type = Vec::with_capacity(host.node_count());
        let mut node_attrs = Vec::with_capacity(host.node_count());
        let mut nodes_by_type = vec![Vec::new(); n_node_types];
        let mut value_buckets: BTreeMap<(usize, usize), BTreeMap<&'g AttrValue, Vec<usize>>> =
            BTreeMap::new();
        let mut pos_of: BTreeMap<&'g NodeId, usize> = BTreeMap::new();
        for (id, ty) in host.nodes() {
            let pos = node_ids.len();
            node_ids.push(id);
            pos_of.insert(id, pos);
            let t = node_type_index(tg, ty).unwrap_or(usize::MAX);
            node_type.push(t);
            if t != usize::MAX {
                nodes_by_type[t].push(pos);
            }
            let attrs: Vec<(usize, &'g AttrValue)> = host
                .attrs_of(id)
                .filter_map(|(a, v)| attr_name_index(&attr_names, a).map(|i| (i, v)))
                .collect();
            if t != usize::MAX {
                for (attr_idx, value) in &attrs {
                    value_buckets
                        .entry((t, *attr_idx))
                        .or_default()
                        .entry(value)
                        .or_default()
                        .push(pos);
                }
            }
            node_attrs.push(attrs);
        }

        let mut edge_ids = Vec::new();
        let mut edge_info = Vec::new();
        let mut out_adj = vec![Vec::new(); node_ids.len()];
        let mut in_adj = vec![Vec::new(); node_ids.len()];
        for (id, inst) in host.edges() {
            let t = match edge_type_index(tg, &inst.edge_type) {
                Some(t) if t < n_edge_types => t,
                _ => continue,
            };
            let (src, tgt) = match (pos_of.get(&inst.source), pos_of.get(&inst.target)) {
                (Some(&s), Some(&t)) => (s, t),
                _ => continue,
            };
            let e = edge_ids.len();
            edge_ids.push(id);
            edge_info.push((t, src, tgt));
            out_adj[src].push(e);
            in_adj[tgt].push(e);
        }
        // Edge ids come out of the BTreeMap sorted, so adjacency lists are
        // already in ascending edge order.

        HostIndex {
            node_ids,
            edge_ids,
            node_type,
            node_attrs,
            nodes_by_type,
            value_buckets,
            edge_info,
            out_adj,
            in_adj,
        }
    }

    fn value_bucket(&self, type_idx: usize, attr_idx: usize, value: &AttrValue) -> &[usize] {
        self.value_buckets
            .get(&(type_idx, attr_idx))
            .and_then(|by_value| by_value.get(value))
            .map_or(&[], Vec::as_slice)
    }

    fn attr_value(&self, node: usize, attr_idx: usize) -> Option<&'g AttrValue> {
        self.node_attrs[node]
            .iter()
            .find(|(a, _)| *a == attr_idx)
            .map(|(_, v)| *v)
    }
}

struct Search<'p, 'g> {
    pattern: &'p CompiledPattern,
    host: &'p HostIndex<'g>,
    node_assignment: Vec<usize>,
    used_nodes: Vec<bool>,
    edge_assignment: Vec<usize>,
    used_edges: Vec<bool>,
    bindings: Vec<Option<&'g AttrValue>>,
}

impl<'g> Search<'_, 'g> {
    fn assign_node(
        &mut self,
        pos: usize,
        visit: &mut dyn FnMut(&MatchView<'_, 'g>) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if pos == self.pattern.nodes.len() {
            return visit(&MatchView {
                node_assignment: &self.node_assignment,
                edge_assignment: &self.edge_assignment,
                bindings: &self.bindings,
            });
        }

        let pat_node = &self.pattern.nodes[pos];
        // Prefer candidates reachable over an edge to an assigned node; fall
        // back to the full type bucket.
        let narrowed: Option<Vec<usize>> = self.pattern.schedule[pos]
            .iter()
            .map(|&e| &self.pattern.edges[e])
            .find(|e| e.src != e.tgt)
            .map(|e| {
                let mut cands: Vec<usize> = if e.tgt == pos {
                    let hs = self.node_assignment[e.src];
                    self.host.out_adj[hs]
                        .iter()
                        .filter(|&&he| self.host.edge_info[he].0 == e.type_idx)
                        .map(|&he| self.host.edge_info[he].2)
                        .collect()
                } else {
                    let ht = self.node_assignment[e.tgt];
                    self.host.in_adj[ht]
                        .iter()
                        .filter(|&&he| self.host.edge_info[he].0 == e.type_idx)
                        .map(|&he| self.host.edge_info[he].1)
                        .collect()
                };
                cands.sort_unstable();
                cands.dedup();
                cands
            });
        let candidates: &[usize] = match &narrowed {
            Some(v) => v,
            None => match &pat_node.const_hint {
                Some((attr_idx, value)) => {
                    self.host.value_bucket(pat_node.type_idx, *attr_idx, value)
                }
                None => &self.host.nodes_by_type[pat_node.type_idx],
            },
        };

        for &cand in candidates {
            if self.used_nodes[cand] || self.host.node_type[cand] != pat_node.type_idx {
                continue;
            }
            let mut newly_bound: [usize; 8] = [0; 8];
            let mut n_newly = 0;
            let mut ok = true;
            for (attr_idx, constraint) in &self.pattern.nodes[pos].constraints {
                let host_value = self.host.attr_value(cand, *attr_idx);
                match constraint {
                    AttrConstraint::Const(c) => {
                        // Absent host entries constrain nothing; values present
                        // in both must agree.
                        if let Some(v) = host_value {
                            if v != c {
                                ok = false;
                                break;
                            }
                        }
                    }
                    AttrConstraint::Var(i) => match (host_value, self.bindings[*i]) {
                        (Some(v), Some(b)) => {
                            if v != b {
                                ok = false;
                                break;
                            }
                        }
                        (Some(v), None) => {
                            self.bindings[*i] = Some(v);
                            if n_newly < newly_bound.len() {
                                newly_bound[n_newly] = *i;
                                n_newly += 1;
                            } else {
                                // Patterns with more than 8 variables on one
                                // node are not produced anywhere; fail closed.
                                ok = false;
                                self.bindings[*i] = None;
                                break;
                            }
                        }
                        (None, _) => {
                            ok = false;
                            break;
                        }
                    },
                }
            }
            if ok {
                self.node_assignment[pos] = cand;
                self.used_nodes[cand] = true;
                let flow = self.assign_edges(pos, 0, visit);
                self.used_nodes[cand] = false;
                self.node_assignment[pos] = usize::MAX;
                if flow.is_break() {
                    for &i in &newly_bound[..n_newly] {
                        self.bindings[i] = None;
                    }
                    return ControlFlow::Break(());
                }
            }
            for &i in &newly_bound[..n_newly] {
                self.bindings[i] = None;
            }
        }
        ControlFlow::Continue(())
    }

    fn assign_edges(
        &mut self,
        pos: usize,
        k: usize,
        visit: &mut dyn FnMut(&MatchView<'_, 'g>) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let scheduled = &self.pattern.schedule[pos];
        if k == scheduled.len() {
            return self.assign_node(pos + 1, visit);
        }
        let pe_idx = scheduled[k];
        let pe = &self.pattern.edges[pe_idx];
        let hs = self.node_assignment[pe.src];
        let ht = self.node_assignment[pe.tgt];
        for i in 0..self.host.out_adj[hs].len() {
            let he = self.host.out_adj[hs][i];
            let (t, _, tgt) = self.host.edge_info[he];
            if t != pe.type_idx || tgt != ht || self.used_edges[he] {
                continue;
            }
            self.used_edges[he] = true;
            self.edge_assignment[pe_idx] = he;
            let flow = self.assign_edges(pos, k + 1, visit);
            self.used_edges[he] = false;
            self.edge_assignment[pe_idx] = usize::MAX;
            flow?;
        }
        ControlFlow::Continue(())
    }
}
