//! Property tests: restriction laws on random instances, configuration
//! enumeration against brute force on random diagrams, and print/parse
//! round-tripping on random documents.

use proptest::prelude::*;

use featgts::dsl::{
    parse_model, print_model, AttrBind, ChildDecl, Defaults, DomainDecl, EdgeDecl, FeatureDecl,
    ModelDocument, NodeDecl, PatternDecl, RuleDecl, TermDecl, TypeDecl,
};
use featgts::feature::{is_valid, valid_configurations, Configuration, FeatureDiagram};
use featgts::graph::{restrict, AttrValue, InstanceGraph, TypeGraph};
use featgts::graph::AttrDomain;

fn full_tg() -> TypeGraph {
    TypeGraph::builder()
        .node("Agent")
        .attr("Agent", "s", AttrDomain::symbols(["S", "I", "R"]))
        .attr("Agent", "l", AttrDomain::Grid { size: 10 })
        .edge("link", "Agent", "Agent")
        .build()
        .unwrap()
}

fn basic_tg() -> TypeGraph {
    TypeGraph::builder()
        .node("Agent")
        .attr("Agent", "s", AttrDomain::symbols(["S", "I", "R"]))
        .build()
        .unwrap()
}

fn instance_strategy() -> impl Strategy<Value = InstanceGraph> {
    (0usize..=6).prop_flat_map(|n| {
        let nodes = proptest::collection::vec((0u8..3, 0u32..10, 0u32..10), n..=n);
        let edges = if n == 0 {
            proptest::collection::vec((0usize..1, 0usize..1), 0..=0)
        } else {
            proptest::collection::vec((0usize..n, 0usize..n), 0..=6)
        };
        (nodes, edges).prop_map(|(nodes, edges)| {
            let states = ["S", "I", "R"];
            let mut builder = InstanceGraph::builder();
            for (i, (state, x, y)) in nodes.iter().enumerate() {
                let id = format!("a{i}");
                builder = builder
                    .node(id.clone(), "Agent")
                    .attr(
                        id.clone(),
                        "s",
                        AttrValue::Symbol(states[*state as usize].into()),
                    )
                    .attr(id, "l", AttrValue::Coord { x: *x, y: *y });
            }
            for (j, (src, tgt)) in edges.iter().enumerate() {
                builder = builder.edge(format!("e{j}"), "link", format!("a{src}"), format!("a{tgt}"));
            }
            builder.build().unwrap()
        })
    })
}

proptest! {
    #[test]
    fn restriction_is_idempotent_and_identity_on_the_full_graph(g in instance_strategy()) {
        let full = full_tg();
        let sub = basic_tg();
        let once = restrict(&g, &full, &sub).unwrap();
        let twice = restrict(&once, &sub, &sub).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(&restrict(&g, &full, &full).unwrap(), &g);
        // the restriction keeps exactly the nodes (all Agents) and drops l
        prop_assert_eq!(once.node_count(), g.node_count());
        prop_assert!(once.attrs().all(|(_, attr, _)| attr == "s"));
        prop_assert_eq!(once.edge_count(), 0);
    }
}

#[derive(Debug, Clone)]
struct DiagramSpec {
    children: Vec<(u8, bool)>,
    alt: Option<(u8, u8)>,
}

fn diagram_from_spec(spec: &DiagramSpec) -> FeatureDiagram {
    let mut builder = FeatureDiagram::builder("f0");
    let mut names = vec!["f0".to_string()];
    for (i, (parent, mandatory)) in spec.children.iter().enumerate() {
        let name = format!("f{}", i + 1);
        let parent = names[(*parent as usize) % names.len()].clone();
        builder = if *mandatory {
            builder.mandatory(name.clone(), parent)
        } else {
            builder.optional(name.clone(), parent)
        };
        names.push(name);
    }
    if let Some((parent, extra)) = spec.alt {
        let parent = names[(parent as usize) % names.len()].clone();
        let members: Vec<String> = (0..(2 + extra % 2)).map(|i| format!("g{i}")).collect();
        builder = builder.alternative(parent, members);
    }
    builder.build().expect("spec builds a tree by construction")
}

fn diagram_spec_strategy() -> impl Strategy<Value = DiagramSpec> {
    (
        proptest::collection::vec((any::<u8>(), any::<bool>()), 0..=5),
        proptest::option::of((any::<u8>(), any::<u8>())),
    )
        .prop_map(|(children, alt)| DiagramSpec { children, alt })
}

proptest! {
    #[test]
    fn configuration_enumeration_matches_brute_force(spec in diagram_spec_strategy()) {
        let fd = diagram_from_spec(&spec);
        let features: Vec<String> = fd.features().map(str::to_string).collect();
        prop_assert!(features.len() <= 10);
        let mut brute = Vec::new();
        for mask in 0u32..(1 << features.len()) {
            let subset = Configuration::new(
                features
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, f)| f.clone()),
            );
            if is_valid(&fd, &subset) {
                brute.push(subset);
            }
        }
        brute.sort();
        prop_assert_eq!(valid_configurations(&fd).unwrap(), brute);
    }
}

fn ident_strategy() -> impl Strategy<Value = String> {
    proptest::sample::select(vec![
        "alpha".to_string(),
        "beta".to_string(),
        "gamma".to_string(),
        "delta".to_string(),
    ])
}

fn term_strategy() -> impl Strategy<Value = TermDecl> {
    prop_oneof![
        ident_strategy().prop_map(TermDecl::Symbol),
        (-9i64..9).prop_map(TermDecl::Int),
        (0i64..9, 0i64..9).prop_map(|(x, y)| TermDecl::Coord(x, y)),
        ident_strategy().prop_map(TermDecl::Var),
        ident_strategy().prop_map(|v| TermDecl::Builtin("incX".into(), v)),
    ]
}

fn domain_strategy() -> impl Strategy<Value = DomainDecl> {
    prop_oneof![
        proptest::collection::vec(ident_strategy(), 1..=3).prop_map(DomainDecl::Symbols),
        (-5i64..5, 0i64..5).prop_map(|(min, len)| DomainDecl::IntRange { min, max: min + len }),
        Just(DomainDecl::Grid),
    ]
}

fn feature_option() -> impl Strategy<Value = Option<String>> {
    proptest::option::of(proptest::sample::select(vec![
        "fa".to_string(),
        "fb".to_string(),
    ]))
}

fn pattern_strategy() -> impl Strategy<Value = PatternDecl> {
    (
        proptest::collection::vec(
            (
                ident_strategy(),
                proptest::collection::vec((ident_strategy(), term_strategy(), feature_option()), 0..=2),
                feature_option(),
            ),
            0..=2,
        ),
        proptest::collection::vec((ident_strategy(), ident_strategy(), feature_option()), 0..=1),
    )
        .prop_map(|(nodes, edges)| PatternDecl {
            nodes: nodes
                .into_iter()
                .enumerate()
                .map(|(i, (node_type, attrs, feature))| NodeDecl {
                    id: format!("n{i}"),
                    node_type,
                    attrs: attrs
                        .into_iter()
                        .map(|(attr, term, feature)| AttrBind {
                            attr,
                            term,
                            feature,
                        })
                        .collect(),
                    feature,
                })
                .collect(),
            edges: edges
                .into_iter()
                .enumerate()
                .map(|(i, (edge_type, target, feature))| EdgeDecl {
                    id: format!("e{i}"),
                    edge_type,
                    source: "n0".into(),
                    target,
                    feature,
                })
                .collect(),
        })
}

fn document_strategy() -> impl Strategy<Value = ModelDocument> {
    let features = proptest::collection::vec((any::<bool>(), any::<bool>()), 0..=2).prop_map(
        |children| FeatureDecl {
            name: "root".into(),
            children: children
                .into_iter()
                .enumerate()
                .map(|(i, (mandatory, grouped))| {
                    let decl = FeatureDecl {
                        name: if i == 0 { "fa".into() } else { "fb".into() },
                        children: vec![],
                    };
                    if grouped {
                        ChildDecl::Alternative(vec![
                            decl,
                            FeatureDecl {
                                name: format!("alt{i}"),
                                children: vec![],
                            },
                        ])
                    } else if mandatory {
                        ChildDecl::Mandatory(decl)
                    } else {
                        ChildDecl::Optional(decl)
                    }
                })
                .collect(),
        },
    );
    let types = proptest::collection::vec(
        prop_oneof![
            (ident_strategy(), feature_option())
                .prop_map(|(name, feature)| TypeDecl::Node { name, feature }),
            (ident_strategy(), ident_strategy(), ident_strategy(), feature_option()).prop_map(
                |(name, source, target, feature)| TypeDecl::Edge {
                    name,
                    source,
                    target,
                    feature,
                }
            ),
            (ident_strategy(), ident_strategy(), domain_strategy(), feature_option()).prop_map(
                |(node_type, attr, domain, feature)| TypeDecl::Attr {
                    node_type,
                    attr,
                    domain,
                    feature,
                }
            ),
        ],
        0..=4,
    );
    let rules = proptest::collection::vec(
        (
            feature_option(),
            proptest::option::of(0.25f64..8.0),
            pattern_strategy(),
            pattern_strategy(),
        ),
        0..=2,
    )
    .prop_map(|rules| {
        rules
            .into_iter()
            .enumerate()
            .map(|(i, (feature, rate, lhs, rhs))| RuleDecl {
                name: format!("rule{i}"),
                feature,
                rate,
                lhs,
                rhs,
            })
            .collect::<Vec<_>>()
    });
    let defaults = (
        proptest::option::of(1u32..20),
        proptest::collection::vec((ident_strategy(), 0.25f64..8.0), 0..=2),
    )
        .prop_map(|(grid, rates)| Defaults { grid, rates });

    (features, types, rules, defaults).prop_map(|(features, types, rules, defaults)| {
        ModelDocument {
            name: "generated".into(),
            features,
            types,
            rules,
            defaults,
        }
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(doc in document_strategy()) {
        let printed = print_model(&doc);
        let reparsed = parse_model(&printed)
            .unwrap_or_else(|d| panic!("printed document failed to parse: {d}\n{printed}"));
        prop_assert_eq!(doc, reparsed);
    }
}
