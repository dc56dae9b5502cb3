use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// An identifier, with a trailing `'` recorded as `primed`.
    Ident { name: String, primed: bool },
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "==>", ":=", "..", "/\\", "\\/", "/=", "<=", ">=", "=", "<", ">", "+", "-", "*", "/", "!",
    "(", ")", "~", ";", ":", ".", "|", ",",
];

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut pos, mut line, mut line_start) = (0usize, 1usize, 0usize);
    let span = |start: usize, end: usize, line: usize, line_start: usize| SourceSpan {
        line,
        column: start - line_start + 1,
        start,
        end,
    };
    while pos < bytes.len() {
        let c = bytes[pos];
        if c == b'\n' {
            pos += 1;
            line += 1;
            line_start = pos;
            continue;
        }
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        if c == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        if c.is_ascii_alphabetic() || c == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            let name = text[start..pos].to_string();
            let primed = bytes.get(pos) == Some(&b'\'');
            if primed {
                pos += 1;
            }
            out.push(Token {
                tok: Tok::Ident { name, primed },
                span: span(start, pos, line, line_start),
            });
            continue;
        }
        if c.is_ascii_digit() {
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let sp = span(start, pos, line, line_start);
            let n = text[start..pos]
                .parse::<i64>()
                .map_err(|_| ParseError::syntax("integer literal too large", sp))?;
            out.push(Token { tok: Tok::Int(n), span: sp });
            continue;
        }
        let rest = &text[pos..];
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                pos += s.len();
                out.push(Token {
                    tok: Tok::Sym(s),
                    span: span(start, pos, line, line_start),
                });
            }
            None => {
                let ch = rest.chars().next().unwrap_or('?');
                let sp = span(start, start + ch.len_utf8(), line, line_start);
                return Err(ParseError::syntax(format!("unexpected character `{ch}`"), sp));
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span(pos, pos, line, line_start),
    });
    Ok(out)
}

/// A cursor over a token slice.
pub(crate) struct Cursor<'t> {
    toks: &'t [Token],
    pos: usize,
}

impl<'t> Cursor<'t> {
    pub fn new(toks: &'t [Token]) -> Cursor<'t> {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> &'t Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    pub fn peek_at(&self, k: usize) -> &'t Token {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)]
    }

    pub fn next(&mut self) -> &'t Token {
        let t = self.peek();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek().tok, Tok::Sym(x) if x == s)
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident { name, primed: false } if name == kw)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.next();
        }
        hit
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        let hit = self.is_keyword(kw);
        if hit {
            self.next();
        }
        hit
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<SourceSpan, ParseError> {
        if self.is_sym(s) {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<SourceSpan, ParseError> {
        if self.is_keyword(kw) {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn unexpected(&self, wanted: &str) -> ParseError {
        let t = self.peek();
        let found = match &t.tok {
            Tok::Ident { name, primed } => format!("`{name}{}`", if *primed { "'" } else { "" }),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        ParseError::syntax(format!("expected {wanted}, found {found}"), t.span)
    }
}
