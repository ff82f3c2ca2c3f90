//! The bundled epidemic model family.
//!
//! One 150% model over a feature diagram with root `SIR` and optional
//! features `location`, `network` and `dynamics` (the latter under
//! `network`):
//!
//! - `SIR` — agents with a state attribute `s` in `{S, I, R}`; rules
//!   `infect` (an S agent next to an I agent becomes I) and `recover`.
//! - `location` — a grid position `l` per agent; `infect` additionally
//!   requires both agents at the same position; movement rules `north`,
//!   `south`, `east`, `west` step one cell on the torus.
//! - `network` — a directed `link` edge type; `infect` additionally requires
//!   a link from the susceptible agent to the infected one, so an agent's
//!   outgoing links are its exposure contacts.
//! - `dynamics` — rule `desert`: a susceptible agent drops its link to an
//!   infected contact and links to some other agent instead.
//!
//! The same model ships as a text fixture (`fixtures/sir.fgts`); a test keeps
//! the two in sync.

use std::collections::BTreeMap;

use crate::feature::{Configuration, ElementRef, FeatureDiagram, FeatureModel};
use crate::graph::{AttrDomain, TypeGraph};
use crate::rewrite::{AttrTerm, Builtin, Gts, Rule, RulePattern};

/// Default grid size of the bundled model.
pub const DEFAULT_GRID: u32 = 10;

/// The bundled feature diagram: `SIR` with optional `location` and `network`,
/// and `dynamics` optional under `network`.
pub fn sir_diagram() -> FeatureDiagram {
    FeatureDiagram::builder("SIR")
        .optional("location", "SIR")
        .optional("network", "SIR")
        .optional("dynamics", "network")
        .build()
        .expect("bundled diagram is well-formed")
}

/// The bundled 150% feature model with the default grid size.
pub fn sir_feature_model() -> FeatureModel {
    sir_feature_model_with_grid(DEFAULT_GRID)
}

/// The bundled 150% feature model over a `grid x grid` torus.
pub fn sir_feature_model_with_grid(grid: u32) -> FeatureModel {
    let tg = TypeGraph::builder()
        .node("Agent")
        .attr("Agent", "s", AttrDomain::symbols(["S", "I", "R"]))
        .attr("Agent", "l", AttrDomain::Grid { size: grid })
        .edge("link", "Agent", "Agent")
        .build()
        .expect("bundled type graph is well-formed");

    let infect = Rule::new(
        &tg,
        "infect",
        RulePattern::builder()
            .node("n1", "Agent")
            .term("n1", "s", AttrTerm::symbol("S"))
            .term("n1", "l", AttrTerm::var("x"))
            .node("n2", "Agent")
            .term("n2", "s", AttrTerm::symbol("I"))
            .term("n2", "l", AttrTerm::var("x"))
            .edge("e1", "link", "n1", "n2")
            .build(),
        RulePattern::builder()
            .node("n1", "Agent")
            .term("n1", "s", AttrTerm::symbol("I"))
            .node("n2", "Agent")
            .edge("e1", "link", "n1", "n2")
            .build(),
        1.0,
    )
    .expect("bundled infect rule is well-typed");

    let recover = Rule::new(
        &tg,
        "recover",
        RulePattern::builder()
            .node("n1", "Agent")
            .term("n1", "s", AttrTerm::symbol("I"))
            .build(),
        RulePattern::builder()
            .node("n1", "Agent")
            .term("n1", "s", AttrTerm::symbol("R"))
            .build(),
        1.0,
    )
    .expect("bundled recover rule is well-typed");

    let movement = |name: &str, builtin: Builtin| {
        Rule::new(
            &tg,
            name,
            RulePattern::builder()
                .node("a", "Agent")
                .term("a", "l", AttrTerm::var("p"))
                .build(),
            RulePattern::builder()
                .node("a", "Agent")
                .term("a", "l", AttrTerm::builtin(builtin, "p"))
                .build(),
            1.0,
        )
        .expect("bundled movement rule is well-typed")
    };

    let desert = Rule::new(
        &tg,
        "desert",
        RulePattern::builder()
            .node("a1", "Agent")
            .term("a1", "s", AttrTerm::symbol("S"))
            .node("a2", "Agent")
            .term("a2", "s", AttrTerm::symbol("I"))
            .node("a3", "Agent")
            .edge("e1", "link", "a1", "a2")
            .build(),
        RulePattern::builder()
            .node("a1", "Agent")
            .node("a2", "Agent")
            .node("a3", "Agent")
            .edge("e2", "link", "a1", "a3")
            .build(),
        1.0,
    )
    .expect("bundled desert rule is well-typed");

    let north = movement("north", Builtin::IncY);
    let south = movement("south", Builtin::DecY);
    let east = movement("east", Builtin::IncX);
    let west = movement("west", Builtin::DecX);
    let m150 = Gts::new(
        "sir",
        tg,
        vec![infect, recover, north, south, east, west, desert],
    )
    .expect("bundled 150% model is well-typed");

    let mut annotations: BTreeMap<ElementRef, String> = BTreeMap::new();
    let mut note = |e: ElementRef, f: &str| {
        annotations.insert(e, f.to_string());
    };
    note(ElementRef::AttrDecl("Agent".into(), "l".into()), "location");
    note(ElementRef::EdgeType("link".into()), "network");
    note(
        ElementRef::RuleAttr("infect".into(), "n1".into(), "l".into()),
        "location",
    );
    note(
        ElementRef::RuleAttr("infect".into(), "n2".into(), "l".into()),
        "location",
    );
    note(
        ElementRef::RuleEdge("infect".into(), "e1".into()),
        "network",
    );
    for mv in ["north", "south", "east", "west"] {
        note(ElementRef::Rule(mv.into()), "location");
    }
    note(ElementRef::Rule("desert".into()), "dynamics");

    FeatureModel::new(sir_diagram(), m150, annotations)
        .expect("bundled feature model is consistent")
}

pub fn basic_config() -> Configuration {
    Configuration::new(["SIR"])
}

pub fn location_config() -> Configuration {
    Configuration::new(["SIR", "location"])
}

pub fn network_config() -> Configuration {
    Configuration::new(["SIR", "network"])
}

pub fn dynamics_config() -> Configuration {
    Configuration::new(["SIR", "network", "dynamics"])
}

pub fn full_config() -> Configuration {
    Configuration::new(["SIR", "location", "network", "dynamics"])
}
