//! Recursive-descent parser for the model format.
//!
//! Parsing is total: any input yields either a document or a [`Diagnostic`]
//! with line, column and the expected-token set. Semantic validation (typing,
//! feature consistency) happens after parsing, in the conversion to a feature
//! model.

use super::lexer::{tokenize, Token, TokenKind};
use super::{
    AttrBind, ChildDecl, Defaults, Diagnostic, DomainDecl, EdgeDecl, FeatureDecl, ModelDocument,
    NodeDecl, PatternDecl, RuleDecl, TermDecl, TypeDecl,
};

pub(crate) fn parse(input: &str) -> Result<ModelDocument, Diagnostic> {
    let tokens = tokenize(input)?;
    let mut parser = Parser { tokens, pos: 0 };
    let doc = parser.document()?;
    parser.expect_kind(TokenKind::Eof)?;
    Ok(doc)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek2(&self) -> &Token {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let tok = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> Diagnostic {
        let tok = self.peek();
        let found = if tok.kind == TokenKind::Eof {
            "end of input".to_string()
        } else {
            format!("`{}`", tok.text)
        };
        Diagnostic {
            line: tok.line,
            column: tok.column,
            message: format!("unexpected {found}"),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.peek().kind == TokenKind::Ident && self.peek().text == kw
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), Diagnostic> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn expect_kind(&mut self, kind: TokenKind) -> Result<Token, Diagnostic> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            Err(self.error(&[kind.describe()]))
        }
    }

    fn ident(&mut self) -> Result<String, Diagnostic> {
        if self.peek().kind == TokenKind::Ident {
            Ok(self.advance().text)
        } else {
            Err(self.error(&["identifier"]))
        }
    }

    fn number(&mut self) -> Result<f64, Diagnostic> {
        match self.peek().kind {
            TokenKind::Int | TokenKind::Float => Ok(self.advance().float_value),
            _ => Err(self.error(&["number"])),
        }
    }

    fn annotation(&mut self) -> Result<Option<String>, Diagnostic> {
        if self.peek().kind == TokenKind::At {
            self.advance();
            Ok(Some(self.ident()?))
        } else {
            Ok(None)
        }
    }

    fn document(&mut self) -> Result<ModelDocument, Diagnostic> {
        self.expect_keyword("model")?;
        let name = self.ident()?;
        self.expect_kind(TokenKind::LBrace)?;

        self.expect_keyword("features")?;
        self.expect_kind(TokenKind::LBrace)?;
        let features = self.feature_decl()?;
        self.expect_kind(TokenKind::RBrace)?;

        self.expect_keyword("types")?;
        self.expect_kind(TokenKind::LBrace)?;
        let mut types = Vec::new();
        while !matches!(self.peek().kind, TokenKind::RBrace) {
            types.push(self.type_decl()?);
        }
        self.expect_kind(TokenKind::RBrace)?;

        self.expect_keyword("rules")?;
        self.expect_kind(TokenKind::LBrace)?;
        let mut rules = Vec::new();
        while self.at_keyword("rule") {
            rules.push(self.rule_decl()?);
        }
        self.expect_kind(TokenKind::RBrace)?;

        let mut defaults = Defaults::default();
        if self.at_keyword("defaults") {
            self.advance();
            self.expect_kind(TokenKind::LBrace)?;
            loop {
                if self.at_keyword("grid") {
                    self.advance();
                    let tok = self.expect_kind(TokenKind::Int)?;
                    if tok.int_value <= 0 || tok.int_value > u32::MAX as i64 {
                        return Err(Diagnostic {
                            line: tok.line,
                            column: tok.column,
                            message: format!("grid size `{}` is out of range", tok.text),
                            expected: vec!["positive integer".into()],
                        });
                    }
                    defaults.grid = Some(tok.int_value as u32);
                } else if self.at_keyword("rate") {
                    self.advance();
                    let rule = self.ident()?;
                    self.expect_kind(TokenKind::Eq)?;
                    let value = self.number()?;
                    defaults.rates.push((rule, value));
                } else {
                    break;
                }
            }
            self.expect_kind(TokenKind::RBrace)?;
        }

        self.expect_kind(TokenKind::RBrace)?;
        Ok(ModelDocument {
            name,
            features,
            types,
            rules,
            defaults,
        })
    }

    fn feature_decl(&mut self) -> Result<FeatureDecl, Diagnostic> {
        let name = self.ident()?;
        let mut children = Vec::new();
        if self.peek().kind == TokenKind::LBrace {
            self.advance();
            while !matches!(self.peek().kind, TokenKind::RBrace) {
                children.push(self.child_decl()?);
            }
            self.expect_kind(TokenKind::RBrace)?;
        }
        Ok(FeatureDecl { name, children })
    }

    fn child_decl(&mut self) -> Result<ChildDecl, Diagnostic> {
        if self.at_keyword("mandatory") {
            self.advance();
            Ok(ChildDecl::Mandatory(self.feature_decl()?))
        } else if self.at_keyword("optional") {
            self.advance();
            Ok(ChildDecl::Optional(self.feature_decl()?))
        } else if self.at_keyword("alt") {
            self.advance();
            self.expect_kind(TokenKind::LBrace)?;
            let mut members = Vec::new();
            while !matches!(self.peek().kind, TokenKind::RBrace) {
                members.push(self.feature_decl()?);
            }
            self.expect_kind(TokenKind::RBrace)?;
            Ok(ChildDecl::Alternative(members))
        } else {
            Err(self.error(&["mandatory", "optional", "alt"]))
        }
    }

    fn type_decl(&mut self) -> Result<TypeDecl, Diagnostic> {
        if self.at_keyword("node") {
            self.advance();
            let name = self.ident()?;
            let feature = self.annotation()?;
            Ok(TypeDecl::Node { name, feature })
        } else if self.at_keyword("edge") {
            self.advance();
            let name = self.ident()?;
            self.expect_kind(TokenKind::Colon)?;
            let source = self.ident()?;
            self.expect_kind(TokenKind::Arrow)?;
            let target = self.ident()?;
            let feature = self.annotation()?;
            Ok(TypeDecl::Edge {
                name,
                source,
                target,
                feature,
            })
        } else if self.at_keyword("attr") {
            self.advance();
            let node_type = self.ident()?;
            self.expect_kind(TokenKind::Dot)?;
            let attr = self.ident()?;
            self.expect_kind(TokenKind::Colon)?;
            let domain = self.domain_decl()?;
            let feature = self.annotation()?;
            Ok(TypeDecl::Attr {
                node_type,
                attr,
                domain,
                feature,
            })
        } else {
            Err(self.error(&["node", "edge", "attr"]))
        }
    }

    fn domain_decl(&mut self) -> Result<DomainDecl, Diagnostic> {
        match self.peek().kind {
            TokenKind::LBrace => {
                self.advance();
                let mut symbols = vec![self.ident()?];
                while self.peek().kind == TokenKind::Comma {
                    self.advance();
                    symbols.push(self.ident()?);
                }
                self.expect_kind(TokenKind::RBrace)?;
                Ok(DomainDecl::Symbols(symbols))
            }
            TokenKind::Int => {
                let min = self.advance().int_value;
                self.expect_kind(TokenKind::DotDot)?;
                let max = self.expect_kind(TokenKind::Int)?.int_value;
                Ok(DomainDecl::IntRange { min, max })
            }
            TokenKind::Ident if self.peek().text == "grid" => {
                self.advance();
                Ok(DomainDecl::Grid)
            }
            _ => Err(self.error(&["`{`", "integer", "grid"])),
        }
    }

    fn rule_decl(&mut self) -> Result<RuleDecl, Diagnostic> {
        self.expect_keyword("rule")?;
        let name = self.ident()?;
        let feature = self.annotation()?;
        let mut rate = None;
        if self.at_keyword("rate") {
            self.advance();
            rate = Some(self.number()?);
        }
        self.expect_kind(TokenKind::LBrace)?;
        self.expect_keyword("lhs")?;
        let lhs = self.pattern_decl()?;
        self.expect_keyword("rhs")?;
        let rhs = self.pattern_decl()?;
        self.expect_kind(TokenKind::RBrace)?;
        Ok(RuleDecl {
            name,
            feature,
            rate,
            lhs,
            rhs,
        })
    }

    fn pattern_decl(&mut self) -> Result<PatternDecl, Diagnostic> {
        self.expect_kind(TokenKind::LBrace)?;
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        loop {
            if self.at_keyword("node") {
                self.advance();
                let id = self.ident()?;
                self.expect_kind(TokenKind::Colon)?;
                let node_type = self.ident()?;
                let mut attrs = Vec::new();
                if self.peek().kind == TokenKind::LBrace {
                    self.advance();
                    attrs.push(self.attr_bind()?);
                    while self.peek().kind == TokenKind::Comma {
                        self.advance();
                        attrs.push(self.attr_bind()?);
                    }
                    self.expect_kind(TokenKind::RBrace)?;
                }
                let feature = self.annotation()?;
                nodes.push(NodeDecl {
                    id,
                    node_type,
                    attrs,
                    feature,
                });
            } else if self.at_keyword("edge") {
                self.advance();
                let id = self.ident()?;
                self.expect_kind(TokenKind::Colon)?;
                let edge_type = self.ident()?;
                self.expect_kind(TokenKind::LParen)?;
                let source = self.ident()?;
                self.expect_kind(TokenKind::Arrow)?;
                let target = self.ident()?;
                self.expect_kind(TokenKind::RParen)?;
                let feature = self.annotation()?;
                edges.push(EdgeDecl {
                    id,
                    edge_type,
                    source,
                    target,
                    feature,
                });
            } else if self.peek().kind == TokenKind::RBrace {
                self.advance();
                return Ok(PatternDecl { nodes, edges });
            } else {
                return Err(self.error(&["node", "edge", "`}`"]));
            }
        }
    }

    fn attr_bind(&mut self) -> Result<AttrBind, Diagnostic> {
        let attr = self.ident()?;
        self.expect_kind(TokenKind::Eq)?;
        let term = self.term_decl()?;
        let feature = self.annotation()?;
        Ok(AttrBind {
            attr,
            term,
            feature,
        })
    }

    fn term_decl(&mut self) -> Result<TermDecl, Diagnostic> {
        match self.peek().kind {
            TokenKind::Question => {
                self.advance();
                Ok(TermDecl::Var(self.ident()?))
            }
            TokenKind::Int => Ok(TermDecl::Int(self.advance().int_value)),
            TokenKind::LParen => {
                self.advance();
                let x = self.expect_kind(TokenKind::Int)?.int_value;
                self.expect_kind(TokenKind::Comma)?;
                let y = self.expect_kind(TokenKind::Int)?.int_value;
                self.expect_kind(TokenKind::RParen)?;
                Ok(TermDecl::Coord(x, y))
            }
            TokenKind::Ident if self.peek2().kind == TokenKind::LParen => {
                let function = self.advance().text;
                self.advance(); // (
                self.expect_kind(TokenKind::Question)?;
                let var = self.ident()?;
                self.expect_kind(TokenKind::RParen)?;
                Ok(TermDecl::Builtin(function, var))
            }
            TokenKind::Ident => Ok(TermDecl::Symbol(self.advance().text)),
            _ => Err(self.error(&["value", "`?`", "`(`"])),
        }
    }
}
