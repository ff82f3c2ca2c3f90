//! Canonical text rendering of a model document. The printer is faithful to
//! the AST, so printing and re-parsing yields a structurally identical
//! document.

use std::fmt::Write;

use super::{
    AttrBind, ChildDecl, Defaults, DomainDecl, FeatureDecl, ModelDocument, PatternDecl, RuleDecl,
    TermDecl, TypeDecl,
};

pub(crate) fn print(doc: &ModelDocument) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "model {} {{", doc.name);

    let _ = writeln!(w, "  features {{");
    print_feature(w, &doc.features, 2);
    let _ = writeln!(w, "  }}");

    let _ = writeln!(w);
    let _ = writeln!(w, "  types {{");
    for decl in &doc.types {
        print_type(w, decl);
    }
    let _ = writeln!(w, "  }}");

    let _ = writeln!(w);
    let _ = writeln!(w, "  rules {{");
    for (i, rule) in doc.rules.iter().enumerate() {
        if i > 0 {
            let _ = writeln!(w);
        }
        print_rule(w, rule);
    }
    let _ = writeln!(w, "  }}");

    print_defaults(w, &doc.defaults);

    let _ = writeln!(w, "}}");
    out
}

fn indent(w: &mut String, depth: usize) {
    for _ in 0..depth {
        w.push_str("  ");
    }
}

fn annot(feature: &Option<String>) -> String {
    match feature {
        Some(f) => format!(" @{f}"),
        None => String::new(),
    }
}

fn print_feature(w: &mut String, feature: &FeatureDecl, depth: usize) {
    indent(w, depth);
    print_feature_tail(w, feature, depth);
}

/// Prints a feature whose name continues the current line.
fn print_feature_tail(w: &mut String, feature: &FeatureDecl, depth: usize) {
    if feature.children.is_empty() {
        let _ = writeln!(w, "{}", feature.name);
        return;
    }
    let _ = writeln!(w, "{} {{", feature.name);
    for child in &feature.children {
        match child {
            ChildDecl::Mandatory(f) => {
                indent(w, depth + 1);
                w.push_str("mandatory ");
                print_feature_tail(w, f, depth + 1);
            }
            ChildDecl::Optional(f) => {
                indent(w, depth + 1);
                w.push_str("optional ");
                print_feature_tail(w, f, depth + 1);
            }
            ChildDecl::Alternative(members) => {
                indent(w, depth + 1);
                let _ = writeln!(w, "alt {{");
                for m in members {
                    print_feature(w, m, depth + 2);
                }
                indent(w, depth + 1);
                let _ = writeln!(w, "}}");
            }
        }
    }
    indent(w, depth);
    let _ = writeln!(w, "}}");
}

fn print_type(w: &mut String, decl: &TypeDecl) {
    match decl {
        TypeDecl::Node { name, feature } => {
            let _ = writeln!(w, "    node {name}{}", annot(feature));
        }
        TypeDecl::Edge {
            name,
            source,
            target,
            feature,
        } => {
            let _ = writeln!(w, "    edge {name} : {source} -> {target}{}", annot(feature));
        }
        TypeDecl::Attr {
            node_type,
            attr,
            domain,
            feature,
        } => {
            let domain = match domain {
                DomainDecl::Symbols(symbols) => format!("{{ {} }}", symbols.join(", ")),
                DomainDecl::IntRange { min, max } => format!("{min}..{max}"),
                DomainDecl::Grid => "grid".to_string(),
            };
            let _ = writeln!(w, "    attr {node_type}.{attr} : {domain}{}", annot(feature));
        }
    }
}

fn print_term(term: &TermDecl) -> String {
    match term {
        TermDecl::Symbol(s) => s.clone(),
        TermDecl::Int(i) => i.to_string(),
        TermDecl::Coord(x, y) => format!("({x}, {y})"),
        TermDecl::Var(v) => format!("?{v}"),
        TermDecl::Builtin(f, v) => format!("{f}(?{v})"),
    }
}

fn print_pattern(w: &mut String, pattern: &PatternDecl, depth: usize) {
    for node in &pattern.nodes {
        indent(w, depth);
        let _ = write!(w, "node {} : {}", node.id, node.node_type);
        if !node.attrs.is_empty() {
            let binds: Vec<String> = node
                .attrs
                .iter()
                .map(|AttrBind { attr, term, feature }| {
                    format!("{attr} = {}{}", print_term(term), annot(feature))
                })
                .collect();
            let _ = write!(w, " {{ {} }}", binds.join(", "));
        }
        let _ = writeln!(w, "{}", annot(&node.feature));
    }
    for edge in &pattern.edges {
        indent(w, depth);
        let _ = writeln!(
            w,
            "edge {} : {}({} -> {}){}",
            edge.id,
            edge.edge_type,
            edge.source,
            edge.target,
            annot(&edge.feature)
        );
    }
}

fn print_rule(w: &mut String, rule: &RuleDecl) {
    let rate = match rule.rate {
        Some(r) => format!(" rate {r}"),
        None => String::new(),
    };
    let _ = writeln!(w, "    rule {}{}{} {{", rule.name, annot(&rule.feature), rate);
    let _ = writeln!(w, "      lhs {{");
    print_pattern(w, &rule.lhs, 4);
    let _ = writeln!(w, "      }}");
    let _ = writeln!(w, "      rhs {{");
    print_pattern(w, &rule.rhs, 4);
    let _ = writeln!(w, "      }}");
    let _ = writeln!(w, "    }}");
}

fn print_defaults(w: &mut String, defaults: &Defaults) {
    if defaults.grid.is_none() && defaults.rates.is_empty() {
        return;
    }
    let _ = writeln!(w);
    let _ = writeln!(w, "  defaults {{");
    if let Some(g) = defaults.grid {
        let _ = writeln!(w, "    grid {g}");
    }
    for (rule, rate) in &defaults.rates {
        let _ = writeln!(w, "    rate {rule} = {rate}");
    }
    let _ = writeln!(w, "  }}");
}
