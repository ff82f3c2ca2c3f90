//! Tokeniser for the model format. Tracks line and column for diagnostics;
//! `#` starts a comment running to the end of the line.

use super::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Ident,
    Int,
    Float,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Dot,
    DotDot,
    Arrow,
    Eq,
    At,
    Question,
    Eof,
}

impl TokenKind {
    pub fn describe(self) -> &'static str {
        match self {
            TokenKind::Ident => "identifier",
            TokenKind::Int => "integer",
            TokenKind::Float => "number",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::Colon => "`:`",
            TokenKind::Comma => "`,`",
            TokenKind::Dot => "`.`",
            TokenKind::DotDot => "`..`",
            TokenKind::Arrow => "`->`",
            TokenKind::Eq => "`=`",
            TokenKind::At => "`@`",
            TokenKind::Question => "`?`",
            TokenKind::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub int_value: i64,
    pub float_value: f64,
    pub line: usize,
    pub column: usize,
}

impl Token {
    fn simple(kind: TokenKind, text: &str, line: usize, column: usize) -> Token {
        Token {
            kind,
            text: text.to_string(),
            int_value: 0,
            float_value: 0.0,
            line,
            column,
        }
    }
}

pub(crate) fn tokenize(input: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = input.chars().collect();
    let mut i = 0;
    let mut line = 1usize;
    let mut column = 1usize;

    let is_ident_start = |c: char| c.is_alphabetic() || c == '_';
    let is_ident_char = |c: char| c.is_alphanumeric() || c == '_';

    while i < chars.len() {
        let c = chars[i];
        let (tok_line, tok_col) = (line, column);
        let bump = |i: &mut usize, line: &mut usize, column: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
            *i += 1;
        };

        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump(&mut i, &mut line, &mut column);
            }
            continue;
        }
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut column);
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                bump(&mut i, &mut line, &mut column);
            }
            let text: String = chars[start..i].iter().collect();
            tokens.push(Token::simple(TokenKind::Ident, &text, tok_line, tok_col));
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit())
        {
            let start = i;
            if c == '-' {
                bump(&mut i, &mut line, &mut column);
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump(&mut i, &mut line, &mut column);
            }
            // A single dot followed by a digit continues a float; `..` is the
            // range operator and stays separate.
            let mut is_float = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_float = true;
                bump(&mut i, &mut line, &mut column);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump(&mut i, &mut line, &mut column);
                }
            }
            let text: String = chars[start..i].iter().collect();
            if is_float {
                let value: f64 = text.parse().map_err(|_| Diagnostic {
                    line: tok_line,
                    column: tok_col,
                    message: format!("malformed number `{text}`"),
                    expected: vec!["number".into()],
                })?;
                let mut tok = Token::simple(TokenKind::Float, &text, tok_line, tok_col);
                tok.float_value = value;
                tokens.push(tok);
            } else {
                let value: i64 = text.parse().map_err(|_| Diagnostic {
                    line: tok_line,
                    column: tok_col,
                    message: format!("integer `{text}` is out of range"),
                    expected: vec!["integer".into()],
                })?;
                let mut tok = Token::simple(TokenKind::Int, &text, tok_line, tok_col);
                tok.int_value = value;
                tok.float_value = value as f64;
                tokens.push(tok);
            }
            continue;
        }

        let two: Option<TokenKind> = if i + 1 < chars.len() {
            match (c, chars[i + 1]) {
                ('-', '>') => Some(TokenKind::Arrow),
                ('.', '.') => Some(TokenKind::DotDot),
                _ => None,
            }
        } else {
            None
        };
        if let Some(kind) = two {
            let text: String = chars[i..i + 2].iter().collect();
            bump(&mut i, &mut line, &mut column);
            bump(&mut i, &mut line, &mut column);
            tokens.push(Token::simple(kind, &text, tok_line, tok_col));
            continue;
        }

        let kind = match c {
            '{' => TokenKind::LBrace,
            '}' => TokenKind::RBrace,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ':' => TokenKind::Colon,
            ',' => TokenKind::Comma,
            '.' => TokenKind::Dot,
            '=' => TokenKind::Eq,
            '@' => TokenKind::At,
            '?' => TokenKind::Question,
            other => {
                return Err(Diagnostic {
                    line: tok_line,
                    column: tok_col,
                    message: format!("unexpected character `{other}`"),
                    expected: vec![],
                })
            }
        };
        tokens.push(Token::simple(kind, &c.to_string(), tok_line, tok_col));
        bump(&mut i, &mut line, &mut column);
    }

    tokens.push(Token::simple(TokenKind::Eof, "", line, column));
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_lines_and_columns() {
        let tokens = tokenize("model x {\n  node A\n}").unwrap();
        assert_eq!(tokens[0].text, "model");
        assert_eq!((tokens[0].line, tokens[0].column), (1, 1));
        assert_eq!(tokens[3].text, "node");
        assert_eq!((tokens[3].line, tokens[3].column), (2, 3));
    }

    #[test]
    fn distinguishes_floats_ranges_and_arrows() {
        let tokens = tokenize("1.5 0..9 a->b -3").unwrap();
        assert_eq!(tokens[0].kind, TokenKind::Float);
        assert_eq!(tokens[0].float_value, 1.5);
        assert_eq!(tokens[1].kind, TokenKind::Int);
        assert_eq!(tokens[2].kind, TokenKind::DotDot);
        assert_eq!(tokens[3].kind, TokenKind::Int);
        assert_eq!(tokens[3].int_value, 9);
        assert_eq!(tokens[5].kind, TokenKind::Arrow);
        assert_eq!(tokens[7].int_value, -3);
    }

    #[test]
    fn skips_comments() {
        let tokens = tokenize("a # comment\nb").unwrap();
        let idents: Vec<_> = tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Ident)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(idents, vec!["a", "b"]);
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("node $x").unwrap_err();
        assert_eq!((err.line, err.column), (1, 6));
    }
}
