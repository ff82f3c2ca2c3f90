//! Stochastic simulation, trajectory projection, and variant comparison.
//!
//! A system is simulated in continuous time: each rule's propensity is its
//! rate times its current match count, the waiting time to the next event is
//! exponential in the total propensity, and the firing rule and match are
//! chosen proportionally and uniformly. Identical seeds give bit-identical
//! trajectories. Matches are recomputed from scratch at every step;
//! incremental match maintenance would slot in behind [`simulate`] without
//! changing its contract, but desk-scale populations do not need it.
//!
//! Trajectories over a conservative extension project onto the base system:
//! events of rules that correspond to base rules are kept (renamed), events
//! whose projected rule has no effect are dropped, and the result replays as
//! a valid base trajectory. Projected behaviour is what variant comparison
//! works on: the final values of an observable, compared across two variants
//! with a two-sample Kolmogorov-Smirnov test, decide whether the features
//! separating the variants are relevant.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::compose::{is_conservative, ConservativityReport, ExtensionWitness};
use crate::graph::{
    check_typing, restrict, AttrValue, GraphError, GraphMorphism, InstanceGraph, TypingReport,
};
use crate::matching::{CompiledPattern, HostIndex};
use crate::rewrite::{apply_mut, lhs_pattern_spec, view_to_match, Gts, Match, Rule, RuleError};
use crate::rng::SplitMix64;

/// Parameters of one simulation request.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub max_events: usize,
    pub seed: u64,
    pub runs: usize,
}

impl SimConfig {
    pub fn new(horizon: f64, max_events: usize, seed: u64, runs: usize) -> Result<Self, SimError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(SimError::InvalidConfig("horizon must be positive"));
        }
        if runs == 0 {
            return Err(SimError::InvalidConfig("runs must be at least 1"));
        }
        Ok(SimConfig {
            horizon,
            max_events,
            seed,
            runs,
        })
    }
}

/// One fired rule application: when, which rule, and the full match, so the
/// trajectory replays exactly even in the presence of parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub rule: String,
    pub matched: Match,
}

/// The timed event sequence of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: InstanceGraph,
    pub events: Vec<Event>,
    pub final_state: InstanceGraph,
}

/// Sampled counts of one observable along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub observable: String,
    pub samples: Vec<(f64, u64)>,
}

/// Attribute-count observable: number of nodes of `node_type` whose `attr`
/// equals `value`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub node_type: String,
    pub attr: String,
    pub value: AttrValue,
}

impl Predicate {
    pub fn new(node_type: impl Into<String>, attr: impl Into<String>, value: AttrValue) -> Self {
        Predicate {
            node_type: node_type.into(),
            attr: attr.into(),
            value,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}={}", self.node_type, self.attr, self.value)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("initial state is ill-typed: {0}")]
    IllTypedInit(TypingReport),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("trajectory event times are not strictly increasing")]
    NonMonotoneTime,
    #[error("trajectory names unknown rule `{0}`")]
    UnknownRule(String),
    #[error("replayed final state differs from the recorded one")]
    FinalStateMismatch,
    #[error("extension is not conservative, behaviour cannot be projected: {0}")]
    NotConservative(ConservativityReport),
    #[error("projected trajectory does not replay onto the restricted final state")]
    ProjectionReplayMismatch,
    #[error("witnesses do not share a common base system")]
    BaseMismatch,
    #[error("need at least {required} runs per side, got {got}")]
    TooFewRuns { required: usize, got: usize },
    #[error("significance level must lie strictly between 0 and 1")]
    InvalidAlpha,
    #[error("predicate refers to `{node_type}.{attr}`, which the type graph does not declare")]
    UnknownPredicate { node_type: String, attr: String },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

struct CompiledRule<'g> {
    rule: &'g Rule,
    pattern: CompiledPattern,
    var_names: Vec<String>,
}

fn compile_rules(gts: &Gts) -> Vec<CompiledRule<'_>> {
    gts.rules()
        .map(|rule| {
            let (spec, var_names) = lhs_pattern_spec(rule);
            CompiledRule {
                rule,
                pattern: CompiledPattern::compile(gts.type_graph(), &spec),
                var_names,
            }
        })
        .collect()
}

fn count_matches(pattern: &CompiledPattern, index: &HostIndex<'_>) -> usize {
    let mut n = 0;
    pattern.for_each(index, &mut |_| {
        n += 1;
        ControlFlow::Continue(())
    });
    n
}

fn nth_match(compiled: &CompiledRule<'_>, index: &HostIndex<'_>, pick: usize) -> Option<Match> {
    let mut seen = 0;
    let mut found = None;
    compiled.pattern.for_each(index, &mut |view| {
        if seen == pick {
            found = Some(view_to_match(
                view,
                &compiled.pattern,
                index,
                &compiled.var_names,
            ));
            ControlFlow::Break(())
        } else {
            seen += 1;
            ControlFlow::Continue(())
        }
    });
    found
}

/// Run `cfg.runs` independent stochastic simulations of `gts` from `init`.
///
/// Per run: the propensity of rule `r` is `r.rate x |matches of r|`; the next
/// event time is exponentially distributed with the total propensity; the
/// rule is chosen proportionally to its propensity and the match uniformly
/// among the rule's matches. A run stops at the horizon, at `max_events`, or
/// when the total propensity reaches zero. Run `i` uses seed `cfg.seed + i`,
/// so independent runs may also be executed concurrently by callers that
/// split the run range.
pub fn simulate(
    gts: &Gts,
    init: &InstanceGraph,
    cfg: &SimConfig,
) -> Result<Vec<Trajectory>, SimError> {
    let report = check_typing(init, gts.type_graph());
    if !report.is_ok() {
        return Err(SimError::IllTypedInit(report));
    }
    let compiled = compile_rules(gts);
    let mut trajectories = Vec::with_capacity(cfg.runs);
    for run in 0..cfg.runs {
        let seed = cfg.seed.wrapping_add(run as u64);
        trajectories.push(simulate_run(gts, &compiled, init, cfg, seed)?);
    }
    Ok(trajectories)
}

fn simulate_run(
    gts: &Gts,
    compiled: &[CompiledRule<'_>],
    init: &InstanceGraph,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Trajectory, SimError> {
    let tg = gts.type_graph();
    let mut rng = SplitMix64::new(seed);
    let mut state = init.clone();
    let mut time = 0.0_f64;
    let mut events = Vec::new();
    let mut counts = vec![0usize; compiled.len()];

    while events.len() < cfg.max_events {
        let index = HostIndex::build(tg, &state);
        let mut total = 0.0_f64;
        for (i, c) in compiled.iter().enumerate() {
            counts[i] = count_matches(&c.pattern, &index);
            total += c.rule.rate() * counts[i] as f64;
        }
        if total <= 0.0 {
            break;
        }

        // Event times are strictly increasing; redraw on a degenerate step.
        let next_time = loop {
            let candidate = time + rng.next_exp(total);
            if candidate > time {
                break candidate;
            }
        };
        if next_time > cfg.horizon {
            break;
        }
        time = next_time;

        let mut chosen = None;
        let mut u = rng.next_f64() * total;
        for (i, c) in compiled.iter().enumerate() {
            if counts[i] == 0 {
                continue;
            }
            let propensity = c.rule.rate() * counts[i] as f64;
            if u < propensity {
                chosen = Some(i);
                break;
            }
            u -= propensity;
        }
        // Floating-point rounding can push u past the last band; fall back to
        // the last rule that has matches.
        let chosen = match chosen.or_else(|| (0..compiled.len()).rev().find(|&i| counts[i] > 0)) {
            Some(i) => i,
            None => break,
        };

        let pick = rng.next_below(counts[chosen] as u64) as usize;
        let m = nth_match(&compiled[chosen], &index, pick)
            .expect("count and enumeration agree on the same state");
        drop(index);
        apply_mut(tg, compiled[chosen].rule, &mut state, &m)?;
        events.push(Event {
            time,
            rule: compiled[chosen].rule.name().to_string(),
            matched: m,
        });
    }

    Ok(Trajectory {
        initial: init.clone(),
        events,
        final_state: state,
    })
}

/// Replay a trajectory's events from its initial state, validating every
/// match, and return the resulting state.
pub fn replay(gts: &Gts, trajectory: &Trajectory) -> Result<InstanceGraph, SimError> {
    let tg = gts.type_graph();
    let mut state = trajectory.initial.clone();
    let mut last_time = 0.0_f64;
    for event in &trajectory.events {
        if event.time <= last_time {
            return Err(SimError::NonMonotoneTime);
        }
        last_time = event.time;
        let rule = gts
            .rule(&event.rule)
            .ok_or_else(|| SimError::UnknownRule(event.rule.clone()))?;
        apply_mut(tg, rule, &mut state, &event.matched)?;
    }
    Ok(state)
}

/// Full trajectory validation: events replay with valid matches, times are
/// strictly increasing, and the replayed final state equals the recorded one.
pub fn validate_trajectory(gts: &Gts, trajectory: &Trajectory) -> Result<(), SimError> {
    let replayed = replay(gts, trajectory)?;
    if replayed != trajectory.final_state {
        return Err(SimError::FinalStateMismatch);
    }
    Ok(())
}

/// Project a trajectory produced over `w.ext()` onto the base system.
///
/// The initial and final states are restricted to base types. Events whose
/// rule corresponds to a base rule are kept, renamed to the base rule, and
/// their matches restricted along the witnessed embedding; events of new
/// rules project away (conservativity guarantees their projected effect is
/// empty). Errors when the witness is not conservative or the projection does
/// not replay onto the restricted final state.
pub fn project_trajectory(
    trajectory: &Trajectory,
    w: &ExtensionWitness,
) -> Result<Trajectory, SimError> {
    let report = is_conservative(w);
    if !report.conservative {
        return Err(SimError::NotConservative(report));
    }
    let ext_tg = w.ext().type_graph();
    let base_tg = w.base().type_graph();
    let initial = restrict(&trajectory.initial, ext_tg, base_tg)?;
    let final_state = restrict(&trajectory.final_state, ext_tg, base_tg)?;

    let mut events = Vec::new();
    for event in &trajectory.events {
        let base_name = match w.base_rule_of(&event.rule) {
            Some(name) => name.to_string(),
            None => continue,
        };
        let embedding = w.embedding(&base_name).expect("witnessed correspondence");
        let base_rule = w.base().rule(&base_name).expect("witnessed correspondence");
        let mut node_map = BTreeMap::new();
        for (base_node, _) in base_rule.lhs().nodes() {
            let ext_node = &embedding.node_map[base_node];
            node_map.insert(
                base_node.clone(),
                event.matched.morphism.node_map[ext_node].clone(),
            );
        }
        let mut edge_map = BTreeMap::new();
        for (base_edge, _) in base_rule.lhs().edges() {
            let ext_edge = &embedding.edge_map[base_edge];
            edge_map.insert(
                base_edge.clone(),
                event.matched.morphism.edge_map[ext_edge].clone(),
            );
        }
        let mut binding = BTreeMap::new();
        for (base_var, ext_var) in &embedding.var_map {
            if let Some(value) = event.matched.binding.get(ext_var) {
                binding.insert(base_var.clone(), value.clone());
            }
        }
        events.push(Event {
            time: event.time,
            rule: base_name,
            matched: Match {
                morphism: GraphMorphism { node_map, edge_map },
                binding,
            },
        });
    }

    let projected = Trajectory {
        initial,
        events,
        final_state,
    };
    let replayed = replay(w.base(), &projected)?;
    if replayed != projected.final_state {
        return Err(SimError::ProjectionReplayMismatch);
    }
    Ok(projected)
}

/// Sample the predicate count at time zero and after every event.
pub fn observe(
    gts: &Gts,
    trajectory: &Trajectory,
    predicate: &Predicate,
) -> Result<TimeSeries, SimError> {
    let tg = gts.type_graph();
    if tg.domain(&predicate.node_type, &predicate.attr).is_none() {
        return Err(SimError::UnknownPredicate {
            node_type: predicate.node_type.clone(),
            attr: predicate.attr.clone(),
        });
    }
    let count = |state: &InstanceGraph| -> u64 {
        state.count_where(&predicate.node_type, &predicate.attr, &predicate.value) as u64
    };
    let mut samples = vec![(0.0, count(&trajectory.initial))];
    let mut state = trajectory.initial.clone();
    let mut last_time = 0.0_f64;
    for event in &trajectory.events {
        if event.time <= last_time {
            return Err(SimError::NonMonotoneTime);
        }
        last_time = event.time;
        let rule = gts
            .rule(&event.rule)
            .ok_or_else(|| SimError::UnknownRule(event.rule.clone()))?;
        apply_mut(tg, rule, &mut state, &event.matched)?;
        samples.push((event.time, count(&state)));
    }
    Ok(TimeSeries {
        observable: predicate.to_string(),
        samples,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic: the largest absolute difference
/// between the two empirical distribution functions.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(
        !xs.is_empty() && !ys.is_empty(),
        "samples must be non-empty"
    );
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic two-sample rejection threshold at significance `alpha`:
/// `c(alpha) * sqrt((n + m) / (n * m))` with
/// `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn ks_threshold(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Location and spread of one side's final values.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub runs: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

fn summarise(values: &[f64]) -> VariantSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    VariantSummary {
        runs: values.len(),
        mean,
        std_dev: variance.sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Outcome of comparing two variants over a shared base.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub observable: String,
    pub side_a: VariantSummary,
    pub side_b: VariantSummary,
    pub d_statistic: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub relevant: bool,
}

impl ComparisonReport {
    pub fn decision(&self) -> &'static str {
        if self.relevant {
            "relevant"
        } else {
            "not-relevant"
        }
    }

    /// Single-line machine-readable summary.
    pub fn summary_line(&self) -> String {
        format!(
            "observable={} D={:.6} threshold={:.6} alpha={:.6} decision={}",
            self.observable,
            self.d_statistic,
            self.threshold,
            self.alpha,
            self.decision()
        )
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &VariantSummary| {
            format!(
                "runs={} mean={:.6} std={:.6} min={} max={}",
                s.runs, s.mean, s.std_dev, s.min, s.max
            )
        };
        writeln!(f, "comparison report")?;
        writeln!(f, "  observable: {}", self.observable)?;
        writeln!(f, "  variant a: {}", side(&self.side_a))?;
        writeln!(f, "  variant b: {}", side(&self.side_b))?;
        writeln!(
            f,
            "  ks: D={:.6} threshold={:.6} alpha={:.6}",
            self.d_statistic, self.threshold, self.alpha
        )?;
        write!(f, "  decision: {}", self.decision())
    }
}

/// Compare two variants through the lens of their shared base: project all
/// trajectories, take the final values of the predicate observable, and run a
/// two-sample Kolmogorov-Smirnov test at significance `alpha`. The feature
/// split between the variants is flagged relevant iff the statistic exceeds
/// the asymptotic threshold.
pub fn compare_variants(
    a: &[Trajectory],
    b: &[Trajectory],
    w_a: &ExtensionWitness,
    w_b: &ExtensionWitness,
    predicate: &Predicate,
    alpha: f64,
) -> Result<ComparisonReport, SimError> {
    if w_a.base() != w_b.base() {
        return Err(SimError::BaseMismatch);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SimError::InvalidAlpha);
    }
    for side in [a, b] {
        if side.len() < 2 {
            return Err(SimError::TooFewRuns {
                required: 2,
                got: side.len(),
            });
        }
    }
    let finals = |trajectories: &[Trajectory], w: &ExtensionWitness| -> Result<Vec<f64>, SimError> {
        trajectories
            .iter()
            .map(|t| {
                let projected = project_trajectory(t, w)?;
                Ok(projected.final_state.count_where(
                    &predicate.node_type,
                    &predicate.attr,
                    &predicate.value,
                ) as f64)
            })
            .collect()
    };
    let values_a = finals(a, w_a)?;
    let values_b = finals(b, w_b)?;
    let d_statistic = ks_statistic(&values_a, &values_b);
    let threshold = ks_threshold(values_a.len(), values_b.len(), alpha);
    Ok(ComparisonReport {
        observable: predicate.to_string(),
        side_a: summarise(&values_a),
        side_b: summarise(&values_b),
        d_statistic,
        threshold,
        alpha,
        relevant: d_statistic > threshold,
    })
}
