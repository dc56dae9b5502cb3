//! Specification syntax. Parsing yields an untyped tree that is then
//! elaborated into predicates and terms; `=` becomes an equivalence when
//! either side is binary-valued.

use std::collections::BTreeMap;

use super::lexer::{lex, Cursor, Tok, Token};
use super::program::negative_literal;
use super::{is_keyword, ParseError, SourceSpan};
use crate::ast::Universe;
use crate::predicate::{ArithOp, CmpOp, Predicate, Range, Term, VarRef};

#[derive(Debug, Clone)]
enum Syn {
    Int(i64),
    Inf,
    Bool(bool),
    Time(bool),
    Name {
        name: String,
        primed: bool,
        need: bool,
        index: Option<Box<Node>>,
    },
    Neg(Box<Node>),
    Fact(Box<Node>),
    Arith(ArithOp, Box<Node>, Box<Node>),
    Cmp(CmpOp, Box<Node>, Box<Node>),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    If(Box<Node>, Box<Node>, Box<Node>),
    Quant {
        all: bool,
        var: String,
        range: SynRange,
        body: Box<Node>,
    },
    Max {
        var: String,
        range: SynRange,
        guard: Box<Node>,
        body: Box<Node>,
    },
    Seq(Vec<Node>),
}

#[derive(Debug, Clone, Default)]
struct SynRange {
    lo: Option<Box<Node>>,
    hi: Option<Box<Node>>,
}

#[derive(Debug, Clone)]
struct Node {
    syn: Syn,
    span: SourceSpan,
}

fn node(syn: Syn, span: SourceSpan) -> Node {
    Node { syn, span }
}

fn bx(n: Node) -> Box<Node> {
    Box::new(n)
}

struct P<'t> {
    c: Cursor<'t>,
}

impl<'t> P<'t> {
    fn span(&self) -> SourceSpan {
        self.c.peek().span
    }

    /// `implies (; implies)*`
    fn seq(&mut self) -> Result<Node, ParseError> {
        let first = self.implies()?;
        if !self.c.is_sym(";") {
            return Ok(first);
        }
        let span = first.span;
        let mut parts = vec![first];
        while self.c.eat_sym(";") {
            parts.push(self.implies()?);
        }
        let span = span.join(parts.last().unwrap().span);
        Ok(node(Syn::Seq(parts), span))
    }

    fn implies(&mut self) -> Result<Node, ParseError> {
        let l = self.or()?;
        if self.c.eat_sym("==>") {
            let r = self.implies()?;
            let span = l.span.join(r.span);
            return Ok(node(Syn::Implies(bx(l), bx(r)), span));
        }
        Ok(l)
    }

    fn or(&mut self) -> Result<Node, ParseError> {
        let first = self.and()?;
        if !self.c.is_sym("\\/") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.c.eat_sym("\\/") {
            parts.push(self.and()?);
        }
        let span = parts[0].span.join(parts.last().unwrap().span);
        Ok(node(Syn::Or(parts), span))
    }

    fn and(&mut self) -> Result<Node, ParseError> {
        let first = self.unary()?;
        if !self.c.is_sym("/\\") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.c.eat_sym("/\\") {
            parts.push(self.unary()?);
        }
        let span = parts[0].span.join(parts.last().unwrap().span);
        Ok(node(Syn::And(parts), span))
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        let start = self.span();
        if self.c.eat_sym("~") {
            let inner = self.unary()?;
            let span = start.join(inner.span);
            return Ok(node(Syn::Not(bx(inner)), span));
        }
        if self.c.is_keyword("forall") || self.c.is_keyword("exists") {
            let all = self.c.is_keyword("forall");
            self.c.next();
            let (var, range) = self.binder()?;
            self.c.expect_sym(".")?;
            let body = self.implies()?;
            let span = start.join(body.span);
            return Ok(node(
                Syn::Quant {
                    all,
                    var,
                    range,
                    body: bx(body),
                },
                span,
            ));
        }
        self.cmp()
    }

    /// `j [: lo..hi]`
    fn binder(&mut self) -> Result<(String, SynRange), ParseError> {
        let var = match &self.c.peek().tok {
            Tok::Ident { name, primed: false } if !is_keyword(name) => name.clone(),
            _ => return Err(self.c.unexpected("a bound variable")),
        };
        self.c.next();
        let mut range = SynRange::default();
        if self.c.eat_sym(":") {
            if !self.c.is_sym("..") {
                range.lo = Some(bx(self.arith()?));
            }
            self.c.expect_sym("..")?;
            if !self.c.is_sym(".") && !self.c.is_sym("|") {
                range.hi = Some(bx(self.arith()?));
            }
        }
        Ok((var, range))
    }

    fn cmp(&mut self) -> Result<Node, ParseError> {
        let l = self.arith()?;
        const OPS: &[(&str, CmpOp)] = &[
            ("=", CmpOp::Eq),
            ("/=", CmpOp::Ne),
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ];
        for (s, op) in OPS {
            if self.c.eat_sym(s) {
                let r = self.arith()?;
                let span = l.span.join(r.span);
                return Ok(node(Syn::Cmp(*op, bx(l), bx(r)), span));
            }
        }
        Ok(l)
    }

    fn arith(&mut self) -> Result<Node, ParseError> {
        let mut l = self.mul()?;
        loop {
            let op = if self.c.eat_sym("+") {
                ArithOp::Add
            } else if self.c.eat_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(l);
            };
            let r = self.mul()?;
            let span = l.span.join(r.span);
            l = node(Syn::Arith(op, bx(l), bx(r)), span);
        }
    }

    fn mul(&mut self) -> Result<Node, ParseError> {
        let mut l = self.neg()?;
        loop {
            let op = if self.c.eat_sym("*") {
                ArithOp::Mul
            } else if self.c.eat_sym("/") {
                ArithOp::Div
            } else {
                return Ok(l);
            };
            let r = self.neg()?;
            let span = l.span.join(r.span);
            l = node(Syn::Arith(op, bx(l), bx(r)), span);
        }
    }

    fn neg(&mut self) -> Result<Node, ParseError> {
        let start = self.span();
        if self.c.eat_sym("-") {
            let inner = self.neg()?;
            let span = start.join(inner.span);
            return Ok(node(Syn::Neg(bx(inner)), span));
        }
        let mut e = self.primary()?;
        while self.c.is_sym("!") {
            let end = self.c.next().span;
            let span = e.span.join(end);
            e = node(Syn::Fact(bx(e)), span);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let start = self.span();
        if let Some(n) = negative_literal(&mut self.c) {
            return Ok(node(Syn::Int(n), start.join(self.prev_end())));
        }
        let tok = self.c.peek().tok.clone();
        match tok {
            Tok::Int(n) => {
                self.c.next();
                Ok(node(Syn::Int(n), start))
            }
            Tok::Sym("(") => {
                self.c.next();
                let inner = self.seq()?;
                let end = self.c.expect_sym(")")?;
                Ok(Node {
                    span: start.join(end),
                    ..inner
                })
            }
            Tok::Ident { name, primed } => match (name.as_str(), primed) {
                ("true", false) | ("false", false) => {
                    self.c.next();
                    Ok(node(Syn::Bool(name == "true"), start))
                }
                ("inf", false) => {
                    self.c.next();
                    Ok(node(Syn::Inf, start))
                }
                ("t", p) => {
                    self.c.next();
                    Ok(node(Syn::Time(p), start))
                }
                ("need", false) => {
                    self.c.next();
                    let mut n = self.name_ref()?;
                    if let Syn::Name { need, .. } = &mut n.syn {
                        *need = true;
                    }
                    n.span = start.join(n.span);
                    Ok(n)
                }
                ("if", false) => {
                    self.c.next();
                    let c = self.seq()?;
                    self.c.expect_keyword("then")?;
                    let a = self.seq()?;
                    self.c.expect_keyword("else")?;
                    let b = self.seq()?;
                    let end = self.c.expect_keyword("fi")?;
                    Ok(node(Syn::If(bx(c), bx(a), bx(b)), start.join(end)))
                }
                ("max", false) => {
                    self.c.next();
                    let (var, range) = self.binder()?;
                    self.c.expect_sym("|")?;
                    let guard = self.implies()?;
                    self.c.expect_sym(".")?;
                    let body = self.arith()?;
                    let span = start.join(body.span);
                    Ok(node(
                        Syn::Max {
                            var,
                            range,
                            guard: bx(guard),
                            body: bx(body),
                        },
                        span,
                    ))
                }
                _ => self.name_ref(),
            },
            _ => Err(self.c.unexpected("an expression")),
        }
    }

    fn prev_end(&self) -> SourceSpan {
        // Only used right after consuming a token; the peeked token starts
        // after it, which is close enough for error reporting.
        self.c.peek().span
    }

    /// `name['][(term)]`
    fn name_ref(&mut self) -> Result<Node, ParseError> {
        let (name, primed, start) = match &self.c.peek().tok {
            Tok::Ident { name, primed } if !is_keyword(name) => {
                (name.clone(), *primed, self.c.peek().span)
            }
            _ => return Err(self.c.unexpected("a variable")),
        };
        self.c.next();
        let mut span = start;
        let index = if self.c.eat_sym("(") {
            let i = self.arith()?;
            span = span.join(self.c.expect_sym(")")?);
            Some(bx(i))
        } else {
            None
        };
        Ok(node(
            Syn::Name {
                name,
                primed,
                need: false,
                index,
            },
            span,
        ))
    }
}

/// Elaboration into predicates and terms.
struct Elab<'u> {
    universe: Option<&'u Universe>,
    bound: Vec<String>,
}

fn is_binary(n: &Node) -> bool {
    match &n.syn {
        Syn::Bool(_)
        | Syn::Cmp(..)
        | Syn::Not(_)
        | Syn::And(_)
        | Syn::Or(_)
        | Syn::Implies(..)
        | Syn::Quant { .. }
        | Syn::Seq(_) => true,
        Syn::Name { need, .. } => *need,
        Syn::If(_, a, _) => is_binary(a),
        _ => false,
    }
}

impl Elab<'_> {
    fn pred(&mut self, n: &Node) -> Result<Predicate, ParseError> {
        Ok(match &n.syn {
            Syn::Bool(b) => Predicate::Const(*b),
            Syn::Name { need: true, .. } => Predicate::Atom(self.term(n)?),
            Syn::Cmp(op, a, b) if is_binary(a) || is_binary(b) => {
                let eq = Predicate::equiv(self.pred(a)?, self.pred(b)?);
                match op {
                    CmpOp::Eq => eq,
                    CmpOp::Ne => Predicate::not(eq),
                    _ => return Err(ParseError::syntax("ordering on binary values", n.span)),
                }
            }
            Syn::Cmp(op, a, b) => Predicate::Cmp(*op, self.term(a)?, self.term(b)?),
            Syn::Not(a) => Predicate::not(self.pred(a)?),
            Syn::And(ps) => Predicate::And(self.preds(ps)?),
            Syn::Or(ps) => Predicate::Or(self.preds(ps)?),
            Syn::Seq(ps) => Predicate::Compose(self.preds(ps)?),
            Syn::Implies(a, b) => Predicate::implies(self.pred(a)?, self.pred(b)?),
            Syn::If(c, a, b) => Predicate::if_fi(self.pred(c)?, self.pred(a)?, self.pred(b)?),
            Syn::Quant {
                all,
                var,
                range,
                body,
            } => {
                let range = self.range(range)?;
                self.bound.push(var.clone());
                let body = self.pred(body);
                self.bound.pop();
                let body = Box::new(body?);
                if *all {
                    Predicate::Forall(var.clone(), range, body)
                } else {
                    Predicate::Exists(var.clone(), range, body)
                }
            }
            _ => return Err(ParseError::syntax("expected a binary expression", n.span)),
        })
    }

    fn preds(&mut self, ps: &[Node]) -> Result<Vec<Predicate>, ParseError> {
        ps.iter().map(|p| self.pred(p)).collect()
    }

    fn range(&mut self, r: &SynRange) -> Result<Range, ParseError> {
        Ok(Range {
            lo: match &r.lo {
                Some(t) => Some(Box::new(self.term(t)?)),
                None => None,
            },
            hi: match &r.hi {
                Some(t) => Some(Box::new(self.term(t)?)),
                None => None,
            },
        })
    }

    fn term(&mut self, n: &Node) -> Result<Term, ParseError> {
        Ok(match &n.syn {
            Syn::Int(v) => Term::Int(*v),
            Syn::Inf => Term::Inf,
            Syn::Time(p) => Term::Time { primed: *p },
            Syn::Name {
                name,
                primed,
                need,
                index,
            } => {
                let plain = !primed && !need && index.is_none();
                if plain && self.bound.iter().any(|b| b == name) {
                    return Ok(Term::Bound(name.clone()));
                }
                if let Some(u) = self.universe {
                    let known = if index.is_some() {
                        u.is_array(name)
                    } else {
                        u.is_scalar(name)
                    };
                    if !known {
                        return Err(ParseError::UnboundQuantifierVariable {
                            name: name.clone(),
                            span: n.span,
                        });
                    }
                }
                Term::Var(VarRef {
                    name: name.clone(),
                    primed: *primed,
                    need: *need,
                    index: match index {
                        Some(i) => Some(Box::new(self.term(i)?)),
                        None => None,
                    },
                })
            }
            Syn::Neg(a) => Term::Neg(Box::new(self.term(a)?)),
            Syn::Fact(a) => Term::Fact(Box::new(self.term(a)?)),
            Syn::Arith(op, a, b) => Term::arith(*op, self.term(a)?, self.term(b)?),
            Syn::If(c, a, b) => Term::if_fi(self.pred(c)?, self.term(a)?, self.term(b)?),
            Syn::Max {
                var,
                range,
                guard,
                body,
            } => {
                let range = self.range(range)?;
                self.bound.push(var.clone());
                let guard = self.pred(guard);
                let body = self.term(body);
                self.bound.pop();
                Term::Max {
                    var: var.clone(),
                    range,
                    guard: Box::new(guard?),
                    body: Box::new(body?),
                }
            }
            _ => return Err(ParseError::syntax("expected a number", n.span)),
        })
    }
}

fn parse_tokens(toks: &[Token], u: Option<&Universe>) -> Result<Predicate, ParseError> {
    let mut p = P { c: Cursor::new(toks) };
    let n = p.seq()?;
    if !matches!(p.c.peek().tok, Tok::Eof) {
        return Err(p.c.unexpected("end of definition"));
    }
    Elab {
        universe: u,
        bound: Vec::new(),
    }
    .pred(&n)
}

pub(crate) fn parse_single(text: &str, u: Option<&Universe>) -> Result<Predicate, ParseError> {
    parse_tokens(&lex(text)?, u)
}

pub(crate) fn parse_file(
    text: &str,
    u: Option<&Universe>,
) -> Result<BTreeMap<String, Predicate>, ParseError> {
    let toks = lex(text)?;
    let eof = toks.last().cloned().expect("lexer emits end of input");
    let is_header = |k: usize| {
        matches!(&toks[k].tok, Tok::Ident { primed: false, name } if !is_keyword(name))
            && toks[k].span.column == 1
            && matches!(toks.get(k + 1).map(|t| &t.tok), Some(Tok::Sym("=")))
    };
    let mut out = BTreeMap::new();
    let mut k = 0;
    if !matches!(toks[0].tok, Tok::Eof) && !is_header(0) {
        return Err(ParseError::syntax(
            "expected a definition `name = predicate` starting in column 1",
            toks[0].span,
        ));
    }
    while !matches!(toks[k].tok, Tok::Eof) {
        let Tok::Ident { name, .. } = &toks[k].tok else { unreachable!() };
        let head = toks[k].span;
        let body_start = k + 2;
        let mut end = body_start;
        while !matches!(toks[end].tok, Tok::Eof) && !is_header(end) {
            end += 1;
        }
        let mut body: Vec<Token> = toks[body_start..end].to_vec();
        body.push(Token {
            tok: Tok::Eof,
            span: toks[end].span,
        });
        if body.len() == 1 {
            return Err(ParseError::syntax("empty definition", head));
        }
        let pred = parse_tokens(&body, u)?;
        if out.insert(name.clone(), pred).is_some() {
            return Err(ParseError::DuplicateDefinition {
                name: name.clone(),
                span: head,
            });
        }
        k = end;
    }
    let _ = eof;
    Ok(out)
}
