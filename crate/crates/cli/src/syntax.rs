//! Formula DSL: lexer, AST with source spans, recursive-descent parser, and
//! canonical printer.
//!
//! Grammar (EBNF):
//!
//! ```text
//! fun      := or_expr
//! or_expr  := and_expr { 'or' and_expr }            (sets / boolean context)
//! and_expr := cmp_expr { 'and' cmp_expr }
//! cmp_expr := 'not' cmp_expr
//!           | add_expr [ ('<='|'>='|'<'|'>'|'=') add_expr [ 'mod' INT ] ]
//!           | add_expr 'on' cmp_expr                ('on' at comparison level)
//! add_expr := mul_expr { ('+'|'-') mul_expr }
//! mul_expr := unary { ('*'|'/') unary | juxtaposed-unary }
//! unary    := '-' unary | pow
//! pow      := atom [ '^' exponent ]
//! exponent := INT | '-' INT | IDENT | 'L' | '(' fun ')'
//! atom     := INT | 'L' | IDENT | '(' fun ')' | set
//! set      := '{' tuple 'in' 'Z' '^' INT ':' fun '}'
//! tuple    := IDENT | '(' IDENT { ',' IDENT } ')'
//! ```
//!
//! `on` binds lower than arithmetic, so `L^(x+1) - L*L^x on S` restricts the
//! whole difference to `S`. Multi-region sums use parentheses:
//! `(A on S1) + (B on S2)`. Juxtaposition such as `2x` or `-2x` denotes
//! multiplication. `L` is reserved; variables are single ASCII letters with an
//! optional numeric index (`x`, `y2`, `z10`).

use std::fmt;

/// A byte range in the source together with its 1-based line/column start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn join(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: if self.start <= other.start { self.line } else { other.line },
            col: if self.start <= other.start { self.col } else { other.col },
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Parse (or lowering) error with a source location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynError {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for SynError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error at {}: {}", self.span, self.message)
    }
}

impl std::error::Error for SynError {}

fn err<T>(span: Span, message: impl Into<String>) -> Result<T, SynError> {
    Err(SynError { span, message: message.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    And,
    Or,
    On,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Eq => "=",
        }
    }
}

/// Expression AST. Equality ignores spans so that `parse . print = id` holds
/// structurally.
#[derive(Debug, Clone)]
pub enum Ast {
    Int(i128, Span),
    /// The reserved Lefschetz symbol `L`.
    LSym(Span),
    Var(String, Span),
    Neg(Box<Ast>, Span),
    Not(Box<Ast>, Span),
    Bin(BinOp, Box<Ast>, Box<Ast>, Span),
    Cmp(CmpOp, Box<Ast>, Box<Ast>, Span),
    /// `lhs = rhs mod modulus`.
    Cong(Box<Ast>, Box<Ast>, i128, Span),
    Set { vars: Vec<String>, dim: usize, body: Box<Ast>, span: Span },
}

impl Ast {
    pub fn span(&self) -> Span {
        match self {
            Ast::Int(_, s)
            | Ast::LSym(s)
            | Ast::Var(_, s)
            | Ast::Neg(_, s)
            | Ast::Not(_, s)
            | Ast::Bin(_, _, _, s)
            | Ast::Cmp(_, _, _, s)
            | Ast::Cong(_, _, _, s) => *s,
            Ast::Set { span, .. } => *span,
        }
    }
}

impl PartialEq for Ast {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Ast::Int(a, _), Ast::Int(b, _)) => a == b,
            (Ast::LSym(_), Ast::LSym(_)) => true,
            (Ast::Var(a, _), Ast::Var(b, _)) => a == b,
            (Ast::Neg(a, _), Ast::Neg(b, _)) => a == b,
            (Ast::Not(a, _), Ast::Not(b, _)) => a == b,
            (Ast::Bin(o1, a1, b1, _), Ast::Bin(o2, a2, b2, _)) => {
                o1 == o2 && a1 == a2 && b1 == b2
            }
            (Ast::Cmp(o1, a1, b1, _), Ast::Cmp(o2, a2, b2, _)) => {
                o1 == o2 && a1 == a2 && b1 == b2
            }
            (Ast::Cong(a1, b1, m1, _), Ast::Cong(a2, b2, m2, _)) => {
                a1 == a2 && b1 == b2 && m1 == m2
            }
            (
                Ast::Set { vars: v1, dim: d1, body: b1, .. },
                Ast::Set { vars: v2, dim: d2, body: b2, .. },
            ) => v1 == v2 && d1 == d2 && b1 == b2,
            _ => false,
        }
    }
}

impl Eq for Ast {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(i128),
    Ident(String),
    LSym,
    KwIn,
    KwOn,
    KwAnd,
    KwOr,
    KwNot,
    KwMod,
    KwZ,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::LSym => "`L`".into(),
            Tok::KwIn => "`in`".into(),
            Tok::KwOn => "`on`".into(),
            Tok::KwAnd => "`and`".into(),
            Tok::KwOr => "`or`".into(),
            Tok::KwNot => "`not`".into(),
            Tok::KwMod => "`mod`".into(),
            Tok::KwZ => "`Z`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(input: &str) -> Result<Vec<(Tok, Span)>, SynError> {
    let bytes = input.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let here = Span { start: i, end: i + 1, line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if !c.is_ascii() {
            return err(here, format!("non-ASCII character `{c}`"));
        }
        if c.is_ascii_digit() {
            let start = i;
            let (sl, sc) = (line, col);
            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                i += 1;
                col += 1;
            }
            let text = &input[start..i];
            let span = Span { start, end: i, line: sl, col: sc };
            let n: i128 = text
                .parse()
                .map_err(|_| SynError { span, message: format!("integer `{text}` out of range") })?;
            toks.push((Tok::Int(n), span));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            let (sl, sc) = (line, col);
            while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                i += 1;
                col += 1;
            }
            let word = &input[start..i];
            let span = Span { start, end: i, line: sl, col: sc };
            let tok = match word {
                "in" => Tok::KwIn,
                "on" => Tok::KwOn,
                "and" => Tok::KwAnd,
                "or" => Tok::KwOr,
                "not" => Tok::KwNot,
                "mod" => Tok::KwMod,
                "Z" => Tok::KwZ,
                "L" => Tok::LSym,
                _ => {
                    let mut chars = word.chars();
                    let head = chars.next().unwrap();
                    if !head.is_ascii_alphabetic() || !chars.clone().all(|d| d.is_ascii_digit()) {
                        return err(
                            span,
                            format!(
                                "invalid identifier `{word}`: variables are a single letter \
                                 with an optional numeric index"
                            ),
                        );
                    }
                    Tok::Ident(word.to_owned())
                }
            };
            toks.push((tok, span));
            continue;
        }
        let two = if i + 1 < bytes.len() { &input[i..i + 2] } else { "" };
        let (tok, len) = match two {
            "<=" => (Tok::Le, 2),
            ">=" => (Tok::Ge, 2),
            _ => match c {
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                ':' => (Tok::Colon, 1),
                '+' => (Tok::Plus, 1),
                '-' => (Tok::Minus, 1),
                '*' => (Tok::Star, 1),
                '/' => (Tok::Slash, 1),
                '^' => (Tok::Caret, 1),
                '<' => (Tok::Lt, 1),
                '>' => (Tok::Gt, 1),
                '=' => (Tok::Eq, 1),
                _ => return err(here, format!("unexpected character `{c}`")),
            },
        };
        let span = Span { start: i, end: i + len, line, col };
        toks.push((tok, span));
        i += len;
        col += len as u32;
    }
    let end = Span { start: bytes.len(), end: bytes.len(), line, col };
    toks.push((Tok::End, end));
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Span, SynError> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            err(
                self.peek_span(),
                format!("expected {}, found {}", want.describe(), self.peek().describe()),
            )
        }
    }

    /// Lowest level: `or`.
    fn parse_expr(&mut self) -> Result<Ast, SynError> {
        let mut lhs = self.parse_and()?;
        while *self.peek() == Tok::KwOr {
            self.bump();
            let rhs = self.parse_and()?;
            let span = lhs.span().join(rhs.span());
            lhs = Ast::Bin(BinOp::Or, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Ast, SynError> {
        let mut lhs = self.parse_cmp()?;
        while *self.peek() == Tok::KwAnd {
            self.bump();
            let rhs = self.parse_cmp()?;
            let span = lhs.span().join(rhs.span());
            lhs = Ast::Bin(BinOp::And, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    /// Comparisons, congruences, `not`, and `on`.
    fn parse_cmp(&mut self) -> Result<Ast, SynError> {
        if *self.peek() == Tok::KwNot {
            let (_, s) = self.bump();
            let inner = self.parse_cmp()?;
            let span = s.join(inner.span());
            return Ok(Ast::Not(Box::new(inner), span));
        }
        let lhs = self.parse_add()?;
        let op = match self.peek() {
            Tok::Le => CmpOp::Le,
            Tok::Ge => CmpOp::Ge,
            Tok::Lt => CmpOp::Lt,
            Tok::Gt => CmpOp::Gt,
            Tok::Eq => CmpOp::Eq,
            Tok::KwOn => {
                self.bump();
                let set = self.parse_cmp()?;
                let span = lhs.span().join(set.span());
                return Ok(Ast::Bin(BinOp::On, Box::new(lhs), Box::new(set), span));
            }
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.parse_add()?;
        if op == CmpOp::Eq && *self.peek() == Tok::KwMod {
            self.bump();
            let neg = if *self.peek() == Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            let (tok, mspan) = self.bump();
            let m = match tok {
                Tok::Int(n) => {
                    if neg {
                        -n
                    } else {
                        n
                    }
                }
                other => {
                    return err(
                        mspan,
                        format!("expected integer modulus, found {}", other.describe()),
                    )
                }
            };
            if m < 2 {
                return err(mspan, format!("modulus must be >= 2, got {m}"));
            }
            let span = lhs.span().join(mspan);
            return Ok(Ast::Cong(Box::new(lhs), Box::new(rhs), m, span));
        }
        let span = lhs.span().join(rhs.span());
        Ok(Ast::Cmp(op, Box::new(lhs), Box::new(rhs), span))
    }

    fn parse_add(&mut self) -> Result<Ast, SynError> {
        let mut lhs = self.parse_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.parse_mul()?;
            let span = lhs.span().join(rhs.span());
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn parse_mul(&mut self) -> Result<Ast, SynError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                // Juxtaposition: `2x`, `3L^2`.
                Tok::Ident(_) | Tok::LSym | Tok::Int(_) => {
                    let rhs = self.parse_unary_nosign()?;
                    let span = lhs.span().join(rhs.span());
                    lhs = Ast::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs), span);
                    continue;
                }
                _ => break,
            };
            self.bump();
            let rhs = self.parse_unary()?;
            let span = lhs.span().join(rhs.span());
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Ast, SynError> {
        if *self.peek() == Tok::Minus {
            let (_, s) = self.bump();
            let inner = self.parse_unary()?;
            let span = s.join(inner.span());
            return Ok(Ast::Neg(Box::new(inner), span));
        }
        self.parse_pow()
    }

    /// Factor without a leading sign (used after juxtaposition).
    fn parse_unary_nosign(&mut self) -> Result<Ast, SynError> {
        self.parse_pow()
    }

    fn parse_pow(&mut self) -> Result<Ast, SynError> {
        let base = self.parse_atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.parse_exponent()?;
            let span = base.span().join(exp.span());
            return Ok(Ast::Bin(BinOp::Pow, Box::new(base), Box::new(exp), span));
        }
        Ok(base)
    }

    fn parse_exponent(&mut self) -> Result<Ast, SynError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                let (_, s) = self.bump();
                Ok(Ast::Int(n, s))
            }
            Tok::Minus => {
                let (_, s) = self.bump();
                let inner = self.parse_exponent()?;
                let span = s.join(inner.span());
                Ok(Ast::Neg(Box::new(inner), span))
            }
            Tok::Ident(name) => {
                let (_, s) = self.bump();
                Ok(Ast::Var(name, s))
            }
            Tok::LParen => {
                let s = self.bump().1;
                let inner = self.parse_expr()?;
                let e = self.expect(Tok::RParen)?;
                // Remember the grouping span but keep the inner node.
                let _ = s.join(e);
                Ok(inner)
            }
            other => err(
                self.peek_span(),
                format!(
                    "expected exponent (integer, variable, or parenthesized expression), \
                     found {}",
                    other.describe()
                ),
            ),
        }
    }

    fn parse_atom(&mut self) -> Result<Ast, SynError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                let (_, s) = self.bump();
                Ok(Ast::Int(n, s))
            }
            Tok::LSym => {
                let (_, s) = self.bump();
                Ok(Ast::LSym(s))
            }
            Tok::Ident(name) => {
                let (_, s) = self.bump();
                Ok(Ast::Var(name, s))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::LBrace => self.parse_set(),
            other => err(
                self.peek_span(),
                format!(
                    "expected expression (integer, `L`, variable, `(`, or `{{`), found {}",
                    other.describe()
                ),
            ),
        }
    }

    fn parse_set(&mut self) -> Result<Ast, SynError> {
        let open = self.expect(Tok::LBrace)?;
        let mut vars = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                vars.push(self.parse_var_name()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                    continue;
                }
                break;
            }
            self.expect(Tok::RParen)?;
        } else {
            vars.push(self.parse_var_name()?);
        }
        self.expect(Tok::KwIn)?;
        self.expect(Tok::KwZ)?;
        self.expect(Tok::Caret)?;
        let (dtok, dspan) = self.bump();
        let dim = match dtok {
            Tok::Int(n) if n >= 1 => n as usize,
            Tok::Int(n) => return err(dspan, format!("dimension must be >= 1, got {n}")),
            other => {
                return err(dspan, format!("expected dimension integer, found {}", other.describe()))
            }
        };
        if dim != vars.len() {
            return err(
                dspan,
                format!("dimension {dim} does not match {} bound variable(s)", vars.len()),
            );
        }
        for i in 0..vars.len() {
            for j in (i + 1)..vars.len() {
                if vars[i].0 == vars[j].0 {
                    return err(vars[j].1, format!("duplicate bound variable `{}`", vars[j].0));
                }
            }
        }
        self.expect(Tok::Colon)?;
        let body = self.parse_expr()?;
        let close = self.expect(Tok::RBrace)?;
        let span = open.join(close);
        Ok(Ast::Set {
            vars: vars.into_iter().map(|(n, _)| n).collect(),
            dim,
            body: Box::new(body),
            span,
        })
    }

    fn parse_var_name(&mut self) -> Result<(String, Span), SynError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let (_, s) = self.bump();
                Ok((name, s))
            }
            Tok::LSym => err(self.peek_span(), "`L` is reserved and cannot be a variable"),
            other => err(
                self.peek_span(),
                format!("expected variable name, found {}", other.describe()),
            ),
        }
    }
}

/// Parse a complete DSL expression.
pub fn parse(input: &str) -> Result<Ast, SynError> {
    let toks = lex(input)?;
    let mut p = Parser { toks, pos: 0 };
    let ast = p.parse_expr()?;
    if *p.peek() != Tok::End {
        return err(
            p.peek_span(),
            format!("unexpected trailing {}", p.peek().describe()),
        );
    }
    Ok(ast)
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

/// Binding strength used to decide parenthesization when printing.
fn level(ast: &Ast) -> u8 {
    match ast {
        Ast::Bin(BinOp::On, ..) => 1,
        Ast::Bin(BinOp::Or, ..) => 2,
        Ast::Bin(BinOp::And, ..) => 3,
        Ast::Not(..) | Ast::Cmp(..) | Ast::Cong(..) => 4,
        Ast::Bin(BinOp::Add | BinOp::Sub, ..) => 5,
        Ast::Bin(BinOp::Mul | BinOp::Div, ..) => 6,
        Ast::Neg(..) => 7,
        Ast::Bin(BinOp::Pow, ..) => 8,
        Ast::Int(..) | Ast::LSym(..) | Ast::Var(..) | Ast::Set { .. } => 9,
    }
}

fn print_prec(ast: &Ast, min: u8, out: &mut String) {
    let lv = level(ast);
    let need = lv < min;
    if need {
        out.push('(');
    }
    match ast {
        Ast::Int(n, _) => out.push_str(&n.to_string()),
        Ast::LSym(_) => out.push('L'),
        Ast::Var(v, _) => out.push_str(v),
        Ast::Neg(a, _) => {
            out.push('-');
            print_prec(a, 7, out);
        }
        Ast::Not(a, _) => {
            out.push_str("not ");
            print_prec(a, 4, out);
        }
        Ast::Bin(op, a, b, _) => match op {
            BinOp::On => {
                print_prec(a, 4, out);
                out.push_str(" on ");
                print_prec(b, 4, out);
            }
            BinOp::Or => {
                print_prec(a, 2, out);
                out.push_str(" or ");
                print_prec(b, 3, out);
            }
            BinOp::And => {
                print_prec(a, 3, out);
                out.push_str(" and ");
                print_prec(b, 4, out);
            }
            BinOp::Add => {
                print_prec(a, 5, out);
                out.push_str(" + ");
                print_prec(b, 6, out);
            }
            BinOp::Sub => {
                print_prec(a, 5, out);
                out.push_str(" - ");
                print_prec(b, 6, out);
            }
            BinOp::Mul => {
                print_prec(a, 6, out);
                out.push('*');
                print_prec(b, 7, out);
            }
            BinOp::Div => {
                print_prec(a, 6, out);
                out.push('/');
                print_prec(b, 7, out);
            }
            BinOp::Pow => {
                print_prec(a, 9, out);
                out.push('^');
                // Exponents accept INT, IDENT, or a parenthesized expression.
                match b.as_ref() {
                    Ast::Int(n, _) if *n >= 0 => out.push_str(&n.to_string()),
                    Ast::Var(v, _) => out.push_str(v),
                    other => {
                        out.push('(');
                        print_prec(other, 0, out);
                        out.push(')');
                    }
                }
            }
        },
        Ast::Cmp(op, a, b, _) => {
            print_prec(a, 5, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            print_prec(b, 5, out);
        }
        Ast::Cong(a, b, m, _) => {
            print_prec(a, 5, out);
            out.push_str(" = ");
            print_prec(b, 5, out);
            out.push_str(&format!(" mod {m}"));
        }
        Ast::Set { vars, dim, body, .. } => {
            out.push('{');
            if vars.len() == 1 {
                out.push_str(&vars[0]);
            } else {
                out.push('(');
                out.push_str(&vars.join(","));
                out.push(')');
            }
            out.push_str(&format!(" in Z^{dim} : "));
            print_prec(body, 0, out);
            out.push('}');
        }
    }
    if need {
        out.push(')');
    }
}

/// Canonical printer; `parse(print(ast)) == ast` (span-insensitively).
pub fn print(ast: &Ast) -> String {
    let mut out = String::new();
    print_prec(ast, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(src: &str) {
        let a = parse(src).unwrap_or_else(|e| panic!("parse `{src}`: {e}"));
        let printed = print(&a);
        let b = parse(&printed).unwrap_or_else(|e| panic!("reparse `{printed}`: {e}"));
        assert_eq!(a, b, "round-trip of `{src}` via `{printed}`");
    }

    #[test]
    fn parse_examples() {
        let a = parse("{ (x,y) in Z^2 : x >= 0 and x <= y }").unwrap();
        match &a {
            Ast::Set { vars, dim, body, .. } => {
                assert_eq!(vars, &["x", "y"]);
                assert_eq!(*dim, 2);
                assert!(matches!(body.as_ref(), Ast::Bin(BinOp::And, ..)));
            }
            other => panic!("expected set, got {other:?}"),
        }
        let f = parse("x^2 * L^(-x) on { x in Z^1 : x >= 0 }").unwrap();
        assert!(matches!(f, Ast::Bin(BinOp::On, ..)));
    }

    #[test]
    fn modulus_guard() {
        let e = parse("{ x in Z^1 : x = 1 mod 0 }").unwrap_err();
        assert!(e.message.contains("modulus must be >= 2"), "{e}");
        let e = parse("{ x in Z^1 : x = 1 mod 1 }").unwrap_err();
        assert!(e.message.contains("modulus must be >= 2"), "{e}");
        assert!(parse("{ x in Z^1 : x = 1 mod 2 }").is_ok());
    }

    #[test]
    fn on_binds_loosest() {
        let a = parse("L^(x+1) - L*L^x on {x in Z^1: x>=0}").unwrap();
        match a {
            Ast::Bin(BinOp::On, lhs, _, _) => {
                assert!(matches!(lhs.as_ref(), Ast::Bin(BinOp::Sub, ..)));
            }
            other => panic!("expected `on`, got {other:?}"),
        }
    }

    #[test]
    fn juxtaposition_multiplies() {
        let a = parse("-2x").unwrap();
        let b = parse("(-2)*x").unwrap();
        assert_eq!(a, b);
        let c = parse("x*L^(-2x)").unwrap();
        let d = parse("x * L^((-2)*x)").unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn print_roundtrips() {
        for src in [
            "{ (x,y) in Z^2 : x >= 0 and x <= y }",
            "x^2 * L^(-x) on { x in Z^1 : x >= 0 }",
            "L^(x+1) - L*L^x on {x in Z^1: x>=0}",
            "(1 on {x in Z^1: x>=0}) + (L^x on {x in Z^1: x<0})",
            "{ x in Z^1 : not (x = 1 mod 2) or x > 5 }",
            "{ (x,y,z) in Z^3 : x + 2y - 3z <= 7 and y = z mod 4 }",
            "3 - -2x^3*L^(-x) / (1 - L)",
            "{ x in Z^1 : x = 1 mod 2 and not x < 0 }",
        ] {
            roundtrip(src);
        }
    }

    #[test]
    fn errors_carry_spans() {
        let e = parse("x + ").unwrap_err();
        assert!(e.span.col >= 4, "{e:?}");
        let e = parse("{ x in Z^2 : x >= 0 }").unwrap_err();
        assert!(e.message.contains("does not match"), "{e}");
        let e = parse("λ").unwrap_err();
        assert!(e.message.contains("non-ASCII"), "{e}");
        let e = parse("{ L in Z^1 : L >= 0 }").unwrap_err();
        assert!(e.message.contains("reserved"), "{e}");
    }
}
