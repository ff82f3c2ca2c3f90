//! The textual model format: parser, printer, and conversion to feature
//! models.
//!
//! A model document declares a feature tree, a type graph, rules, and
//! defaults in one file (extension `.fgts`). Any element can carry an
//! `@feature` annotation; unannotated top-level elements belong to the root
//! feature and unannotated rule-internal elements to their rule's feature.
//!
//! ```text
//! model sir {
//!   features {
//!     SIR {
//!       optional location
//!       optional network { optional dynamics }
//!     }
//!   }
//!   types {
//!     node Agent
//!     attr Agent.s : { S, I, R }
//!     attr Agent.l : grid @location
//!     edge link : Agent -> Agent @network
//!   }
//!   rules {
//!     rule recover rate 1 {
//!       lhs { node n1 : Agent { s = I } }
//!       rhs { node n1 : Agent { s = R } }
//!     }
//!   }
//!   defaults { grid 10 }
//! }
//! ```
//!
//! Parsing is syntax-only and total; [`ModelDocument::to_feature_model`]
//! performs the semantic checks (typing, feature references), and
//! [`analyze`] additionally enforces feature-model consistency.

mod lexer;
mod parser;
mod printer;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::feature::{
    check_feature_model, ConsistencyReport, ElementRef, FeatureDiagram, FeatureError, FeatureModel,
};
use crate::graph::{AttrDomain, GraphError, TypeGraph};
use crate::rewrite::{AttrTerm, Builtin, Gts, Rule, RuleError, RulePattern};

/// Grid size used when a document declares a `grid` domain without a
/// `defaults { grid N }` entry.
pub const DEFAULT_GRID_SIZE: u32 = 10;

/// Parse error with position and the expected-token set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, ", expected {}", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostic {}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("{0}")]
    Parse(Diagnostic),
    #[error("rule `{rule}`: unknown built-in `{name}`")]
    UnknownBuiltin { rule: String, name: String },
    #[error("rule `{rule}`: grid coordinates must be non-negative")]
    NegativeCoordinate { rule: String },
    #[error("conflicting annotations on {element}: `@{first}` and `@{second}`")]
    ConflictingAnnotation {
        element: String,
        first: String,
        second: String,
    },
    #[error("feature model is inconsistent: {0}")]
    Inconsistent(ConsistencyReport),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parsed model file: feature block, type declarations, rules, defaults.
/// Declaration order is preserved, so printing and re-parsing round-trips.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub name: String,
    pub features: FeatureDecl,
    pub types: Vec<TypeDecl>,
    pub rules: Vec<RuleDecl>,
    pub defaults: Defaults,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDecl {
    pub name: String,
    pub children: Vec<ChildDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChildDecl {
    Mandatory(FeatureDecl),
    Optional(FeatureDecl),
    Alternative(Vec<FeatureDecl>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeDecl {
    Node {
        name: String,
        feature: Option<String>,
    },
    Edge {
        name: String,
        source: String,
        target: String,
        feature: Option<String>,
    },
    Attr {
        node_type: String,
        attr: String,
        domain: DomainDecl,
        feature: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainDecl {
    Symbols(Vec<String>),
    IntRange { min: i64, max: i64 },
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDecl {
    pub name: String,
    pub feature: Option<String>,
    pub rate: Option<f64>,
    pub lhs: PatternDecl,
    pub rhs: PatternDecl,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PatternDecl {
    pub nodes: Vec<NodeDecl>,
    pub edges: Vec<EdgeDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecl {
    pub id: String,
    pub node_type: String,
    pub attrs: Vec<AttrBind>,
    pub feature: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttrBind {
    pub attr: String,
    pub term: TermDecl,
    pub feature: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermDecl {
    Symbol(String),
    Int(i64),
    Coord(i64, i64),
    Var(String),
    Builtin(String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeDecl {
    pub id: String,
    pub edge_type: String,
    pub source: String,
    pub target: String,
    pub feature: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Defaults {
    pub grid: Option<u32>,
    pub rates: Vec<(String, f64)>,
}

/// Parse a model document. Never panics or aborts; syntax problems come back
/// as a [`Diagnostic`].
pub fn parse_model(text: &str) -> Result<ModelDocument, Diagnostic> {
    parser::parse(text)
}

/// Render a document in the canonical format. `parse_model(print_model(d))`
/// returns a document structurally equal to `d`.
pub fn print_model(doc: &ModelDocument) -> String {
    printer::print(doc)
}

/// Parse and fully validate: syntax, typing, and feature-model consistency.
pub fn analyze(text: &str) -> Result<FeatureModel, DslError> {
    let doc = parse_model(text).map_err(DslError::Parse)?;
    let fm = doc.to_feature_model()?;
    let report = check_feature_model(&fm);
    if !report.is_ok() {
        return Err(DslError::Inconsistent(report));
    }
    Ok(fm)
}

impl ModelDocument {
    /// Semantic conversion: build the feature diagram, the 150% system and
    /// the element-to-feature mapping. Fails on unknown names, ill-typed
    /// rules, or conflicting annotations; feature-model consistency is a
    /// separate check ([`analyze`] runs both).
    pub fn to_feature_model(&self) -> Result<FeatureModel, DslError> {
        let diagram = self.build_diagram()?;
        let grid_size = self.defaults.grid.unwrap_or(DEFAULT_GRID_SIZE);

        let mut tg_builder = TypeGraph::builder();
        for decl in &self.types {
            tg_builder = match decl {
                TypeDecl::Node { name, .. } => tg_builder.node(name.clone()),
                TypeDecl::Edge {
                    name,
                    source,
                    target,
                    ..
                } => tg_builder.edge(name.clone(), source.clone(), target.clone()),
                TypeDecl::Attr {
                    node_type,
                    attr,
                    domain,
                    ..
                } => {
                    let domain = match domain {
                        DomainDecl::Symbols(symbols) => AttrDomain::symbols(symbols.clone()),
                        DomainDecl::IntRange { min, max } => AttrDomain::IntRange {
                            min: *min,
                            max: *max,
                        },
                        DomainDecl::Grid => AttrDomain::Grid { size: grid_size },
                    };
                    tg_builder.attr(node_type.clone(), attr.clone(), domain)
                }
            };
        }
        let tg = tg_builder.build()?;

        let default_rate = |name: &str| -> f64 {
            self.defaults
                .rates
                .iter()
                .rev()
                .find(|(rule, _)| rule == name)
                .map(|(_, rate)| *rate)
                .unwrap_or(1.0)
        };
        let mut rules = Vec::new();
        for decl in &self.rules {
            let rate = decl.rate.unwrap_or_else(|| default_rate(&decl.name));
            let lhs = build_pattern(&decl.name, &decl.lhs)?;
            let rhs = build_pattern(&decl.name, &decl.rhs)?;
            rules.push(Rule::new(&tg, decl.name.clone(), lhs, rhs, rate)?);
        }
        let gts = Gts::new(self.name.clone(), tg, rules)?;

        let mut annotations: BTreeMap<ElementRef, String> = BTreeMap::new();
        let mut add = |element: ElementRef, feature: &Option<String>| -> Result<(), DslError> {
            let feature = match feature {
                Some(f) => f,
                None => return Ok(()),
            };
            match annotations.get(&element) {
                Some(existing) if existing != feature => Err(DslError::ConflictingAnnotation {
                    element: element.to_string(),
                    first: existing.clone(),
                    second: feature.clone(),
                }),
                _ => {
                    annotations.insert(element, feature.clone());
                    Ok(())
                }
            }
        };
        for decl in &self.types {
            match decl {
                TypeDecl::Node { name, feature } => {
                    add(ElementRef::NodeType(name.clone()), feature)?
                }
                TypeDecl::Edge { name, feature, .. } => {
                    add(ElementRef::EdgeType(name.clone()), feature)?
                }
                TypeDecl::Attr {
                    node_type,
                    attr,
                    feature,
                    ..
                } => add(
                    ElementRef::AttrDecl(node_type.clone(), attr.clone()),
                    feature,
                )?,
            }
        }
        for decl in &self.rules {
            add(ElementRef::Rule(decl.name.clone()), &decl.feature)?;
            for pattern in [&decl.lhs, &decl.rhs] {
                for node in &pattern.nodes {
                    add(
                        ElementRef::RuleNode(decl.name.clone(), node.id.as_str().into()),
                        &node.feature,
                    )?;
                    for bind in &node.attrs {
                        add(
                            ElementRef::RuleAttr(
                                decl.name.clone(),
                                node.id.as_str().into(),
                                bind.attr.clone(),
                            ),
                            &bind.feature,
                        )?;
                    }
                }
                for edge in &pattern.edges {
                    add(
                        ElementRef::RuleEdge(decl.name.clone(), edge.id.as_str().into()),
                        &edge.feature,
                    )?;
                }
            }
        }

        Ok(FeatureModel::new(diagram, gts, annotations)?)
    }

    fn build_diagram(&self) -> Result<FeatureDiagram, DslError> {
        let mut builder = FeatureDiagram::builder(self.features.name.clone());
        fn walk(
            builder: crate::feature::FeatureDiagramBuilder,
            parent: &str,
            children: &[ChildDecl],
        ) -> crate::feature::FeatureDiagramBuilder {
            let mut builder = builder;
            for child in children {
                match child {
                    ChildDecl::Mandatory(f) => {
                        builder = builder.mandatory(f.name.clone(), parent);
                        builder = walk(builder, &f.name, &f.children);
                    }
                    ChildDecl::Optional(f) => {
                        builder = builder.optional(f.name.clone(), parent);
                        builder = walk(builder, &f.name, &f.children);
                    }
                    ChildDecl::Alternative(members) => {
                        builder = builder
                            .alternative(parent, members.iter().map(|m| m.name.clone()));
                        for m in members {
                            builder = walk(builder, &m.name, &m.children);
                        }
                    }
                }
            }
            builder
        }
        builder = walk(builder, &self.features.name, &self.features.children);
        Ok(builder.build()?)
    }
}

fn build_pattern(rule: &str, decl: &PatternDecl) -> Result<RulePattern, DslError> {
    let mut builder = RulePattern::builder();
    for node in &decl.nodes {
        builder = builder.node(node.id.clone(), node.node_type.clone());
        for bind in &node.attrs {
            let term = match &bind.term {
                TermDecl::Symbol(s) => AttrTerm::symbol(s.clone()),
                TermDecl::Int(i) => AttrTerm::int(*i),
                TermDecl::Coord(x, y) => {
                    if *x < 0 || *y < 0 || *x > u32::MAX as i64 || *y > u32::MAX as i64 {
                        return Err(DslError::NegativeCoordinate {
                            rule: rule.to_string(),
                        });
                    }
                    AttrTerm::coord(*x as u32, *y as u32)
                }
                TermDecl::Var(v) => AttrTerm::var(v.clone()),
                TermDecl::Builtin(function, var) => {
                    let builtin =
                        Builtin::from_name(function).ok_or_else(|| DslError::UnknownBuiltin {
                            rule: rule.to_string(),
                            name: function.clone(),
                        })?;
                    AttrTerm::builtin(builtin, var.clone())
                }
            };
            builder = builder.term(node.id.clone(), bind.attr.clone(), term);
        }
    }
    for edge in &decl.edges {
        builder = builder.edge(
            edge.id.clone(),
            edge.edge_type.clone(),
            edge.source.clone(),
            edge.target.clone(),
        );
    }
    Ok(builder.build())
}

/// Render a plain (feature-free) system as a document: one root feature, no
/// annotations, every element listed in name order. Grid domains share the
/// document-wide default size, so a system whose grid attributes disagree on
/// size cannot be exported faithfully; the first size wins.
pub fn document_from_gts(name: &str, gts: &Gts, root_feature: &str) -> ModelDocument {
    let tg = gts.type_graph();
    let mut types = Vec::new();
    let mut grid = None;
    for nt in tg.node_types() {
        types.push(TypeDecl::Node {
            name: nt.to_string(),
            feature: None,
        });
    }
    for (et, sig) in tg.edge_types() {
        types.push(TypeDecl::Edge {
            name: et.to_string(),
            source: sig.source.clone(),
            target: sig.target.clone(),
            feature: None,
        });
    }
    for (nt, attr, domain) in tg.attr_decls() {
        let domain = match domain {
            AttrDomain::Symbols(symbols) => {
                DomainDecl::Symbols(symbols.iter().cloned().collect())
            }
            AttrDomain::IntRange { min, max } => DomainDecl::IntRange {
                min: *min,
                max: *max,
            },
            AttrDomain::Grid { size } => {
                grid.get_or_insert(*size);
                DomainDecl::Grid
            }
        };
        types.push(TypeDecl::Attr {
            node_type: nt.to_string(),
            attr: attr.to_string(),
            domain,
            feature: None,
        });
    }

    let pattern_decl = |pattern: &RulePattern| -> PatternDecl {
        PatternDecl {
            nodes: pattern
                .nodes()
                .map(|(id, ty)| NodeDecl {
                    id: id.as_str().to_string(),
                    node_type: ty.to_string(),
                    attrs: pattern
                        .terms_of(id)
                        .map(|(attr, term)| AttrBind {
                            attr: attr.to_string(),
                            term: match term {
                                AttrTerm::Constant(crate::graph::AttrValue::Symbol(s)) => {
                                    TermDecl::Symbol(s.clone())
                                }
                                AttrTerm::Constant(crate::graph::AttrValue::Int(i)) => {
                                    TermDecl::Int(*i)
                                }
                                AttrTerm::Constant(crate::graph::AttrValue::Coord { x, y }) => {
                                    TermDecl::Coord(*x as i64, *y as i64)
                                }
                                AttrTerm::Variable(v) => TermDecl::Var(v.clone()),
                                AttrTerm::BuiltinApp(b, v) => {
                                    TermDecl::Builtin(b.name().to_string(), v.clone())
                                }
                            },
                            feature: None,
                        })
                        .collect(),
                    feature: None,
                })
                .collect(),
            edges: pattern
                .edges()
                .map(|(id, e)| EdgeDecl {
                    id: id.as_str().to_string(),
                    edge_type: e.edge_type.clone(),
                    source: e.source.as_str().to_string(),
                    target: e.target.as_str().to_string(),
                    feature: None,
                })
                .collect(),
        }
    };
    let rules = gts
        .rules()
        .map(|rule| RuleDecl {
            name: rule.name().to_string(),
            feature: None,
            rate: Some(rule.rate()),
            lhs: pattern_decl(rule.lhs()),
            rhs: pattern_decl(rule.rhs()),
        })
        .collect();

    ModelDocument {
        name: name.to_string(),
        features: FeatureDecl {
            name: root_feature.to_string(),
            children: vec![],
        },
        types,
        rules,
        defaults: Defaults {
            grid,
            rates: vec![],
        },
    }
}
