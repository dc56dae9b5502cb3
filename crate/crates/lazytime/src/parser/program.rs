use super::lexer::{lex, Cursor, Tok};
use super::{is_keyword, ParseError, ParsedProgram, SourceSpan, Warning};
use crate::ast::{BinOp, Expr, Lvalue, Stmt, UnOp};

pub(crate) fn parse(text: &str) -> Result<ParsedProgram, ParseError> {
    let toks = lex(text)?;
    let mut c = Cursor::new(&toks);
    let (mut stmts, stops) = block(&mut c, &[])?;
    if !matches!(c.peek().tok, Tok::Eof) {
        return Err(c.unexpected("`;` or end of input"));
    }
    let mut warnings = Vec::new();
    let n = stmts.len();
    for (k, span) in stops {
        if k + 1 != n {
            return Err(ParseError::StopNotLast { span });
        }
    }
    if !matches!(stmts.last(), Some(Stmt::Stop)) {
        warnings.push(Warning {
            message: "program does not end with `stop`; appending one".to_string(),
            span: c.peek().span,
        });
        stmts.push(Stmt::Stop);
    }
    Ok(ParsedProgram {
        program: Stmt::seq_all(stmts),
        warnings,
    })
}

/// Parses `stmt (; stmt)*` up to one of the `enders` keywords (not
/// consumed). Also returns the positions of top-level `stop`s.
fn block(c: &mut Cursor<'_>, enders: &[&str]) -> Result<(Vec<Stmt>, Vec<(usize, SourceSpan)>), ParseError> {
    let mut stmts = Vec::new();
    let mut stops = Vec::new();
    loop {
        if c.is_keyword("stop") {
            let span = c.next().span;
            if !enders.is_empty() {
                return Err(ParseError::StopNotLast { span });
            }
            stops.push((stmts.len(), span));
            stmts.push(Stmt::Stop);
        } else {
            stmts.push(stmt(c)?);
        }
        if !c.eat_sym(";") {
            break;
        }
        // A trailing `;` before a closing keyword is allowed.
        if enders.iter().any(|e| c.is_keyword(e)) || matches!(c.peek().tok, Tok::Eof) {
            break;
        }
    }
    Ok((stmts, stops))
}

fn stmt(c: &mut Cursor<'_>) -> Result<Stmt, ParseError> {
    if c.eat_keyword("ok") {
        return Ok(Stmt::Ok);
    }
    if c.eat_keyword("print") {
        return Ok(Stmt::Print(expr(c)?));
    }
    if c.eat_keyword("if") {
        let cond = expr(c)?;
        c.expect_keyword("then")?;
        let (then, _) = block(c, &["else", "fi"])?;
        let els = if c.eat_keyword("else") {
            block(c, &["fi"])?.0
        } else {
            vec![Stmt::Ok]
        };
        c.expect_keyword("fi")?;
        return Ok(Stmt::If(
            cond,
            Box::new(Stmt::seq_all(then)),
            Box::new(Stmt::seq_all(els)),
        ));
    }
    if c.eat_keyword("while") {
        let cond = expr(c)?;
        c.expect_keyword("do")?;
        let (body, _) = block(c, &["od"])?;
        c.expect_keyword("od")?;
        let spec = if c.eat_keyword("spec") {
            Some(name(c)?.0)
        } else {
            None
        };
        return Ok(Stmt::While(cond, Box::new(Stmt::seq_all(body)), spec));
    }
    let (target, span) = name(c)?;
    let lv = if c.eat_sym("(") {
        let idx = expr(c)?;
        c.expect_sym(")")?;
        Lvalue::Cell(target, idx)
    } else {
        Lvalue::Scalar(target)
    };
    if !c.is_sym(":=") {
        return Err(ParseError::syntax("expected `:=` after assignment target", span));
    }
    c.next();
    Ok(Stmt::Assign(lv, expr(c)?))
}

/// An unprimed, non-keyword identifier.
fn name(c: &mut Cursor<'_>) -> Result<(String, SourceSpan), ParseError> {
    match &c.peek().tok {
        Tok::Ident { name, primed: false } if !is_keyword(name) => {
            let span = c.next().span;
            Ok((name.clone(), span))
        }
        _ => Err(c.unexpected("a variable name")),
    }
}

pub(crate) fn expr(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    let mut l = and(c)?;
    while c.eat_sym("\\/") {
        l = Expr::bin(BinOp::Or, l, and(c)?);
    }
    Ok(l)
}

fn and(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    let mut l = not(c)?;
    while c.eat_sym("/\\") {
        l = Expr::bin(BinOp::And, l, not(c)?);
    }
    Ok(l)
}

fn not(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    if c.eat_sym("~") {
        return Ok(Expr::un(UnOp::Not, not(c)?));
    }
    cmp(c)
}

const CMP: &[(&str, BinOp)] = &[
    ("=", BinOp::Eq),
    ("/=", BinOp::Ne),
    ("<=", BinOp::Le),
    (">=", BinOp::Ge),
    ("<", BinOp::Lt),
    (">", BinOp::Gt),
];

fn cmp(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    let l = add(c)?;
    for (s, op) in CMP {
        if c.eat_sym(s) {
            return Ok(Expr::bin(*op, l, add(c)?));
        }
    }
    Ok(l)
}

fn add(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    let mut l = mul(c)?;
    loop {
        if c.eat_sym("+") {
            l = Expr::bin(BinOp::Add, l, mul(c)?);
        } else if c.eat_sym("-") {
            l = Expr::bin(BinOp::Sub, l, mul(c)?);
        } else {
            return Ok(l);
        }
    }
}

fn mul(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    let mut l = neg(c)?;
    loop {
        if c.eat_sym("*") {
            l = Expr::bin(BinOp::Mul, l, neg(c)?);
        } else if c.eat_sym("/") {
            l = Expr::bin(BinOp::Div, l, neg(c)?);
        } else {
            return Ok(l);
        }
    }
}

fn neg(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    if c.eat_sym("-") {
        return Ok(Expr::un(UnOp::Neg, neg(c)?));
    }
    let mut e = primary(c)?;
    while c.eat_sym("!") {
        e = Expr::un(UnOp::Fact, e);
    }
    Ok(e)
}

/// `( - INT )`, the spelling of a negative literal.
pub(crate) fn negative_literal(c: &mut Cursor<'_>) -> Option<i64> {
    let is = matches!(c.peek().tok, Tok::Sym("("))
        && matches!(c.peek_at(1).tok, Tok::Sym("-"))
        && matches!(c.peek_at(2).tok, Tok::Int(_))
        && matches!(c.peek_at(3).tok, Tok::Sym(")"));
    if !is {
        return None;
    }
    c.next();
    c.next();
    let Tok::Int(n) = c.next().tok else { unreachable!() };
    c.next();
    Some(-n)
}

fn primary(c: &mut Cursor<'_>) -> Result<Expr, ParseError> {
    if let Some(n) = negative_literal(c) {
        return Ok(Expr::Int(n));
    }
    match &c.peek().tok {
        Tok::Int(n) => {
            c.next();
            Ok(Expr::Int(*n))
        }
        Tok::Ident { name, primed: false } if name == "true" || name == "false" => {
            c.next();
            Ok(Expr::Bool(name == "true"))
        }
        Tok::Sym("(") => {
            c.next();
            let e = expr(c)?;
            c.expect_sym(")")?;
            Ok(e)
        }
        _ => {
            let (n, _) = name(c)?;
            if c.eat_sym("(") {
                let idx = expr(c)?;
                c.expect_sym(")")?;
                Ok(Expr::index(&n, idx))
            } else {
                Ok(Expr::Var(n))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intro_program() {
        let p = parse("x:= 2; y:= 3; print y; stop").unwrap();
        let expected = Stmt::seq_all(vec![
            Stmt::Assign(Lvalue::Scalar("x".into()), Expr::Int(2)),
            Stmt::Assign(Lvalue::Scalar("y".into()), Expr::Int(3)),
            Stmt::Print(Expr::var("y")),
            Stmt::Stop,
        ]);
        assert_eq!(p.program, expected);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn stop_is_appended() {
        let p = parse("ok").unwrap();
        assert_eq!(p.program, Stmt::seq(Stmt::Ok, Stmt::Stop));
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn stop_must_be_last() {
        assert!(matches!(parse("stop; ok"), Err(ParseError::StopNotLast { .. })));
        assert!(matches!(
            parse("if true then stop fi"),
            Err(ParseError::StopNotLast { .. })
        ));
    }

    #[test]
    fn precedence() {
        let p = parse("x := -a + b * c!; stop").unwrap();
        let Stmt::Seq(a, _) = p.program else { panic!() };
        let rhs = Expr::bin(
            BinOp::Add,
            Expr::un(UnOp::Neg, Expr::var("a")),
            Expr::bin(BinOp::Mul, Expr::var("b"), Expr::un(UnOp::Fact, Expr::var("c"))),
        );
        assert_eq!(*a, Stmt::Assign(Lvalue::Scalar("x".into()), rhs));
    }

    #[test]
    fn errors_carry_spans() {
        let e = parse("x := ;").unwrap_err();
        assert_eq!(e.span().column, 6);
        let e = parse("x := 1;\ny = 2").unwrap_err();
        assert_eq!(e.span().line, 2);
    }
}
