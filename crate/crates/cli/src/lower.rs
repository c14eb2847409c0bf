//! Lowering from the DSL AST to engine values: Presburger sets, coefficient
//! ring elements, and constructible functions. All kind and unit-division
//! checks happen here, with source spans on every error.

use std::collections::BTreeMap;

use presmot_core::{AffineForm, ConFun, Congruence, MotConst, PresCell, PresSet, Term};

use crate::syntax::{Ast, BinOp, CmpOp, Span, SynError};

type Int = i128;

fn err<T>(span: Span, message: impl Into<String>) -> Result<T, SynError> {
    Err(SynError { span, message: message.into() })
}

/// Integer-affine expression over named variables.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Affine {
    pub coeffs: BTreeMap<String, Int>,
    pub constant: Int,
}

impl Affine {
    fn constant_term(c: Int) -> Affine {
        Affine { coeffs: BTreeMap::new(), constant: c }
    }

    fn var(name: &str) -> Affine {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_owned(), 1);
        Affine { coeffs, constant: 0 }
    }

    fn neg(&self) -> Affine {
        Affine {
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), -v)).collect(),
            constant: -self.constant,
        }
    }

    fn add(&self, other: &Affine) -> Affine {
        let mut coeffs = self.coeffs.clone();
        for (k, v) in &other.coeffs {
            let slot = coeffs.entry(k.clone()).or_insert(0);
            *slot += v;
            if *slot == 0 {
                coeffs.remove(k);
            }
        }
        Affine { coeffs, constant: self.constant + other.constant }
    }

    fn scale(&self, s: Int) -> Affine {
        if s == 0 {
            return Affine::constant_term(0);
        }
        Affine {
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), v * s)).collect(),
            constant: self.constant * s,
        }
    }

    fn as_constant(&self) -> Option<Int> {
        if self.coeffs.is_empty() {
            Some(self.constant)
        } else {
            None
        }
    }

    /// Resolve names against an ordered variable list.
    fn to_form(&self, vars: &[String], span: Span) -> Result<AffineForm, SynError> {
        let mut coeffs = vec![0 as Int; vars.len()];
        for (name, c) in &self.coeffs {
            match vars.iter().position(|v| v == name) {
                Some(i) => coeffs[i] = *c,
                None => return err(span, format!("unbound variable `{name}`")),
            }
        }
        Ok(AffineForm::new(coeffs, self.constant))
    }
}

/// Lower an expression that must be integer-affine in the bound variables
/// (used for inequality sides, congruence sides, and `L`-exponents).
pub fn lower_affine(ast: &Ast) -> Result<Affine, SynError> {
    match ast {
        Ast::Int(n, _) => Ok(Affine::constant_term(*n)),
        Ast::Var(v, _) => Ok(Affine::var(v)),
        Ast::Neg(a, _) => Ok(lower_affine(a)?.neg()),
        Ast::Bin(BinOp::Add, a, b, _) => Ok(lower_affine(a)?.add(&lower_affine(b)?)),
        Ast::Bin(BinOp::Sub, a, b, _) => Ok(lower_affine(a)?.add(&lower_affine(b)?.neg())),
        Ast::Bin(BinOp::Mul, a, b, s) => {
            let fa = lower_affine(a)?;
            let fb = lower_affine(b)?;
            if let Some(c) = fa.as_constant() {
                Ok(fb.scale(c))
            } else if let Some(c) = fb.as_constant() {
                Ok(fa.scale(c))
            } else {
                err(*s, "product of two non-constant expressions is not affine")
            }
        }
        Ast::LSym(s) => err(*s, "`L` cannot appear in an affine (exponent or constraint) position"),
        other => err(
            other.span(),
            "expected an integer-affine expression in the bound variables",
        ),
    }
}

/// One term of a ring-valued function expression before `on`:
/// `coeff * prod v^powers[v] * L^(sum lexp[v] * v)`.
#[derive(Debug, Clone)]
pub struct SymTerm {
    pub coeff: MotConst,
    pub powers: BTreeMap<String, u32>,
    pub lexp: BTreeMap<String, Int>,
}

impl SymTerm {
    fn constant(c: MotConst) -> SymTerm {
        SymTerm { coeff: c, powers: BTreeMap::new(), lexp: BTreeMap::new() }
    }

    fn mul(&self, other: &SymTerm) -> SymTerm {
        let mut powers = self.powers.clone();
        for (k, v) in &other.powers {
            *powers.entry(k.clone()).or_insert(0) += v;
        }
        let mut lexp = self.lexp.clone();
        for (k, v) in &other.lexp {
            let slot = lexp.entry(k.clone()).or_insert(0);
            *slot += v;
            if *slot == 0 {
                lexp.remove(k);
            }
        }
        SymTerm { coeff: self.coeff.mul(&other.coeff), powers, lexp }
    }
}

/// A lowered value.
#[derive(Debug, Clone)]
pub enum Value {
    /// Ring-valued expression with free variables, not yet restricted by `on`.
    Free(Vec<SymTerm>),
    /// A function on a named Presburger set.
    Fun(FunVal),
    /// A Presburger set with named coordinates.
    Set(SetVal),
}

#[derive(Debug, Clone)]
pub struct SetVal {
    pub vars: Vec<String>,
    pub set: PresSet,
}

#[derive(Debug, Clone)]
pub struct FunVal {
    pub vars: Vec<String>,
    pub fun: ConFun,
}

fn free_vars(terms: &[SymTerm]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in terms {
        for v in t.powers.keys().chain(t.lexp.keys()) {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    out
}

/// Attach a support set to free terms, producing a ConFun over the set's
/// coordinate order.
fn attach(terms: &[SymTerm], sv: &SetVal, span: Span) -> Result<FunVal, SynError> {
    let dim = sv.vars.len();
    let mut fun = ConFun::zero(dim);
    for t in terms {
        let mut powers = vec![0u32; dim];
        let mut lexp = vec![0 as Int; dim];
        for (name, p) in &t.powers {
            match sv.vars.iter().position(|v| v == name) {
                Some(i) => powers[i] = *p,
                None => return err(span, format!("variable `{name}` is not bound by the set")),
            }
        }
        for (name, b) in &t.lexp {
            match sv.vars.iter().position(|v| v == name) {
                Some(i) => lexp[i] = *b,
                None => return err(span, format!("variable `{name}` is not bound by the set")),
            }
        }
        fun = fun.with_term(Term { support: sv.set.clone(), coeff: t.coeff.clone(), powers, lexp });
    }
    Ok(FunVal { vars: sv.vars.clone(), fun })
}

/// Promote a free expression onto the universe with the given coordinates.
fn promote(terms: &[SymTerm], vars: &[String], span: Span) -> Result<FunVal, SynError> {
    let sv = SetVal { vars: vars.to_vec(), set: PresSet::universe(vars.len()) };
    attach(terms, &sv, span)
}

fn collapse_ring(terms: &[SymTerm], span: Span) -> Result<MotConst, SynError> {
    let mut acc = MotConst::zero();
    for t in terms {
        if !t.powers.is_empty() || !t.lexp.is_empty() {
            let fv = free_vars(std::slice::from_ref(t));
            return err(
                span,
                format!("expected a constant ring element, but `{}` occurs free", fv.join("`, `")),
            );
        }
        acc = acc.add(&t.coeff);
    }
    Ok(acc)
}

fn fun_binop(
    op: BinOp,
    a: FunVal,
    b: FunVal,
    span: Span,
) -> Result<Value, SynError> {
    if a.vars.len() != b.vars.len() {
        return err(
            span,
            format!(
                "dimension mismatch: left side has {} coordinate(s), right side has {}",
                a.vars.len(),
                b.vars.len()
            ),
        );
    }
    if a.vars != b.vars {
        return err(
            span,
            format!(
                "coordinate names differ between operands: ({}) vs ({})",
                a.vars.join(","),
                b.vars.join(",")
            ),
        );
    }
    let fun = match op {
        BinOp::Add => a.fun.add(&b.fun),
        BinOp::Sub => a.fun.sub(&b.fun),
        BinOp::Mul => a.fun.mul(&b.fun),
        _ => unreachable!(),
    }
    .map_err(|e| SynError { span, message: format!("{e:?}") })?;
    Ok(Value::Fun(FunVal { vars: a.vars, fun }))
}

fn arith(op: BinOp, a: Value, b: Value, span: Span) -> Result<Value, SynError> {
    match (a, b) {
        (Value::Set(_), _) | (_, Value::Set(_)) => {
            err(span, "sets do not support arithmetic; use boolean operators inside `{...}`")
        }
        (Value::Free(ta), Value::Free(tb)) => match op {
            BinOp::Add => Ok(Value::Free(ta.into_iter().chain(tb).collect())),
            BinOp::Sub => {
                let mut out = ta;
                for t in tb {
                    out.push(SymTerm { coeff: t.coeff.neg(), ..t });
                }
                Ok(Value::Free(out))
            }
            BinOp::Mul => {
                let mut out = Vec::new();
                for x in &ta {
                    for y in &tb {
                        out.push(x.mul(y));
                    }
                }
                Ok(Value::Free(out))
            }
            _ => unreachable!(),
        },
        (Value::Fun(fa), Value::Fun(fb)) => fun_binop(op, fa, fb, span),
        (Value::Fun(fa), Value::Free(tb)) => {
            let fb = promote(&tb, &fa.vars, span)?;
            fun_binop(op, fa, fb, span)
        }
        (Value::Free(ta), Value::Fun(fb)) => {
            let fa = promote(&ta, &fb.vars, span)?;
            fun_binop(op, fa, fb, span)
        }
    }
}

const MAX_POW: i128 = 64;

fn lower_value(ast: &Ast) -> Result<Value, SynError> {
    match ast {
        Ast::Int(n, _) => Ok(Value::Free(vec![SymTerm::constant(MotConst::integer(*n))])),
        Ast::LSym(_) => Ok(Value::Free(vec![SymTerm::constant(MotConst::lpow(1))])),
        Ast::Var(v, _) => Ok(Value::Free(vec![SymTerm {
            coeff: MotConst::one(),
            powers: BTreeMap::from([(v.clone(), 1u32)]),
            lexp: BTreeMap::new(),
        }])),
        Ast::Neg(a, s) => {
            let minus_one = Value::Free(vec![SymTerm::constant(MotConst::integer(-1))]);
            arith(BinOp::Mul, minus_one, lower_value(a)?, *s)
        }
        Ast::Bin(BinOp::Add | BinOp::Sub | BinOp::Mul, ..) => {
            let (op, a, b, s) = match ast {
                Ast::Bin(op, a, b, s) => (*op, a, b, *s),
                _ => unreachable!(),
            };
            arith(op, lower_value(a)?, lower_value(b)?, s)
        }
        Ast::Bin(BinOp::Div, a, b, s) => {
            let num = lower_value(a)?;
            let den = match lower_value(b)? {
                Value::Free(t) => collapse_ring(&t, b.span())?,
                _ => return err(b.span(), "divisor must be a constant ring element"),
            };
            let inv = den.inverse_if_unit().ok_or_else(|| SynError {
                span: b.span(),
                message: "division is only permitted by unit-shaped ring elements \
                          (signed products of L^k and (L^i - 1))"
                    .into(),
            })?;
            arith(BinOp::Mul, num, Value::Free(vec![SymTerm::constant(inv)]), *s)
        }
        Ast::Bin(BinOp::Pow, base, exp, s) => lower_pow(base, exp, *s),
        Ast::Bin(BinOp::On, fexpr, sexpr, s) => {
            let terms = match lower_value(fexpr)? {
                Value::Free(t) => t,
                Value::Fun(_) => {
                    return err(
                        fexpr.span(),
                        "left side of `on` is already restricted; use parentheses and `+` \
                         to combine regions",
                    )
                }
                Value::Set(_) => return err(fexpr.span(), "left side of `on` must be a function"),
            };
            let sv = match lower_value(sexpr)? {
                Value::Set(sv) => sv,
                _ => return err(sexpr.span(), "right side of `on` must be a set"),
            };
            Ok(Value::Fun(attach(&terms, &sv, *s)?))
        }
        Ast::Set { vars, dim, body, span } => {
            let set = lower_bool(body, vars)?;
            debug_assert_eq!(*dim, vars.len());
            let _ = span;
            Ok(Value::Set(SetVal { vars: vars.clone(), set }))
        }
        Ast::Cmp(_, _, _, s) | Ast::Cong(_, _, _, s) => {
            err(*s, "comparisons are only valid inside a set builder `{...}`")
        }
        Ast::Bin(BinOp::And | BinOp::Or, _, _, s) | Ast::Not(_, s) => {
            err(*s, "boolean operators are only valid inside a set builder `{...}`")
        }
    }
}

fn lower_pow(base: &Ast, exp: &Ast, span: Span) -> Result<Value, SynError> {
    // `L^affine` is the exponential monomial.
    if matches!(base, Ast::LSym(_)) {
        let af = lower_affine(exp)?;
        let mut t = SymTerm::constant(MotConst::lpow(
            i64::try_from(af.constant)
                .map_err(|_| SynError { span, message: "L-exponent overflow".into() })?,
        ));
        t.lexp = af.coeffs.into_iter().filter(|(_, c)| *c != 0).collect();
        return Ok(Value::Free(vec![t]));
    }
    let e = match lower_affine(exp).ok().and_then(|a| a.as_constant()) {
        Some(e) => e,
        None => {
            return err(
                exp.span(),
                "only `L` may be raised to a variable exponent; other bases need a \
                 constant integer exponent",
            )
        }
    };
    if e.abs() > MAX_POW {
        return err(exp.span(), format!("exponent {e} exceeds the supported bound {MAX_POW}"));
    }
    let v = lower_value(base)?;
    if e < 0 {
        let ring = match v {
            Value::Free(t) => collapse_ring(&t, base.span())?,
            _ => return err(base.span(), "negative powers require a constant ring base"),
        };
        let inv = ring.inverse_if_unit().ok_or_else(|| SynError {
            span: base.span(),
            message: "negative powers are only permitted for unit-shaped ring elements".into(),
        })?;
        let mut acc = MotConst::one();
        for _ in 0..(-e) {
            acc = acc.mul(&inv);
        }
        return Ok(Value::Free(vec![SymTerm::constant(acc)]));
    }
    let mut acc = Value::Free(vec![SymTerm::constant(MotConst::one())]);
    for _ in 0..e {
        acc = arith(BinOp::Mul, acc, v.clone(), span)?;
    }
    Ok(acc)
}

fn lower_bool(ast: &Ast, vars: &[String]) -> Result<PresSet, SynError> {
    let dim = vars.len();
    match ast {
        Ast::Bin(BinOp::And, a, b, _) => {
            Ok(lower_bool(a, vars)?.intersect(&lower_bool(b, vars)?).expect("same dimension"))
        }
        Ast::Bin(BinOp::Or, a, b, _) => Ok(lower_bool(a, vars)?.union(&lower_bool(b, vars)?).expect("same dimension")),
        Ast::Not(a, _) => Ok(lower_bool(a, vars)?.complement()),
        Ast::Cmp(op, a, b, s) => {
            let fa = lower_affine(a)?;
            let fb = lower_affine(b)?;
            // Engine convention: an inequality form f means f(x) >= 0.
            let diff = fa.add(&fb.neg()); // a - b
            let form = match op {
                CmpOp::Ge => diff,
                CmpOp::Le => diff.neg(),
                CmpOp::Gt => diff.add(&Affine::constant_term(-1)),
                CmpOp::Lt => diff.neg().add(&Affine::constant_term(-1)),
                CmpOp::Eq => {
                    let f1 = diff.to_form(vars, *s)?;
                    let f2 = diff.neg().to_form(vars, *s)?;
                    let cell = PresCell::universe(dim).with_ineq(f1).with_ineq(f2);
                    return Ok(PresSet::from_cell(cell));
                }
            };
            let cell = PresCell::universe(dim).with_ineq(form.to_form(vars, *s)?);
            Ok(PresSet::from_cell(cell))
        }
        Ast::Cong(a, b, m, s) => {
            let fa = lower_affine(a)?;
            let fb = lower_affine(b)?;
            let diff = fa.add(&fb.neg());
            let form = diff.to_form(vars, *s)?;
            let (coeffs, constant) = (form.coeffs, form.constant);
            let m64 = *m as Int;
            let cong = Congruence {
                coeffs,
                residue: (-constant).rem_euclid(m64),
                modulus: m64,
            };
            Ok(PresSet::from_cell(PresCell::universe(dim).with_cong(cong)))
        }
        other => err(other.span(), "expected a boolean constraint inside the set builder"),
    }
}

/// Lower to a Presburger set.
pub fn lower_set(ast: &Ast) -> Result<SetVal, SynError> {
    match lower_value(ast)? {
        Value::Set(sv) => Ok(sv),
        _ => err(ast.span(), "expected a set expression `{ vars in Z^n : ... }`"),
    }
}

/// Lower to a constructible function. A constant expression becomes a
/// dimension-0 function.
pub fn lower_fun(ast: &Ast) -> Result<FunVal, SynError> {
    match lower_value(ast)? {
        Value::Fun(fv) => Ok(fv),
        Value::Free(terms) => {
            let fv = free_vars(&terms);
            if !fv.is_empty() {
                return err(
                    ast.span(),
                    format!(
                        "function has free variable(s) `{}` but no `on <set>` clause",
                        fv.join("`, `")
                    ),
                );
            }
            promote(&terms, &[], ast.span())
        }
        Value::Set(_) => err(ast.span(), "expected a function, found a set; use `1 on <set>`"),
    }
}

/// Lower to a constant coefficient-ring element.
pub fn lower_ring(ast: &Ast) -> Result<MotConst, SynError> {
    match lower_value(ast)? {
        Value::Free(terms) => collapse_ring(&terms, ast.span()),
        _ => err(ast.span(), "expected a constant ring expression"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;
    use presmot_core::Unit;

    fn fun(src: &str) -> FunVal {
        lower_fun(&parse(src).unwrap()).unwrap_or_else(|e| panic!("lower `{src}`: {e}"))
    }

    fn set(src: &str) -> SetVal {
        lower_set(&parse(src).unwrap()).unwrap_or_else(|e| panic!("lower `{src}`: {e}"))
    }

    #[test]
    fn set_membership() {
        let sv = set("{ (x,y) in Z^2 : x >= 0 and x <= y }");
        assert!(sv.set.contains(&[0, 0]).unwrap());
        assert!(sv.set.contains(&[2, 5]).unwrap());
        assert!(!sv.set.contains(&[3, 2]).unwrap());
        assert!(!sv.set.contains(&[-1, 4]).unwrap());
        let sv = set("{ x in Z^1 : x = 1 mod 2 and not x < 0 }");
        assert!(sv.set.contains(&[3]).unwrap());
        assert!(!sv.set.contains(&[4]).unwrap());
        assert!(!sv.set.contains(&[-3]).unwrap());
        let sv = set("{ x in Z^1 : x > 2 or x < -2 }");
        assert!(sv.set.contains(&[3]).unwrap() && sv.set.contains(&[-3]).unwrap() && !sv.set.contains(&[2]).unwrap());
    }

    #[test]
    fn fun_evaluation() {
        let fv = fun("x^2 * L^(-x) on { x in Z^1 : x >= 0 }");
        // At x = 3: 9 * L^-3.
        let v = fv.fun.eval(&[3]).unwrap();
        assert_eq!(v, MotConst::integer(9).mul(&MotConst::lpow(-3)));
        // Outside the support the value is 0.
        assert!(fv.fun.eval(&[-1]).unwrap().is_zero());
        // Multi-region sum.
        let g = fun("(1 on {x in Z^1: x>=0}) + (L^x on {x in Z^1: x<0})");
        assert_eq!(g.fun.eval(&[2]).unwrap(), MotConst::one());
        assert_eq!(g.fun.eval(&[-2]).unwrap(), MotConst::lpow(-2));
    }

    #[test]
    fn null_example_lowers() {
        let fv = fun("L^(x+1) - L*L^x on {x in Z^1: x>=0}");
        assert!(presmot_core::confun::is_null(&fv.fun).unwrap());
    }

    #[test]
    fn unit_division_checked() {
        let c = lower_ring(&parse("L / (L - 1) * (1 - L^(-1))").unwrap()).unwrap();
        // L/(L-1) * (L-1)/L = 1.
        assert!(c.is_one());
        let e = lower_ring(&parse("1 / (L + 2)").unwrap()).unwrap_err();
        assert!(e.message.contains("unit"), "{e}");
        let ok = lower_ring(&parse("1 / (1 - L^2)").unwrap()).unwrap();
        assert_eq!(ok, MotConst::one().div_unit(Unit::OneMinusLPow(2)).unwrap());
    }

    #[test]
    fn negative_powers_of_units() {
        let c = lower_ring(&parse("(1 - L)^(-2) * (1-L)^2").unwrap()).unwrap();
        assert!(c.is_one());
    }

    #[test]
    fn kind_errors_have_spans() {
        let e = lower_fun(&parse("x + 1").unwrap()).unwrap_err();
        assert!(e.message.contains("free variable"), "{e}");
        let e = lower_fun(&parse("{x in Z^1: x>=0}").unwrap()).unwrap_err();
        assert!(e.message.contains("expected a function"), "{e}");
        let e = lower_set(&parse("{x in Z^1: x*x >= 0}").unwrap()).unwrap_err();
        assert!(e.message.contains("not affine"), "{e}");
        let e = lower_fun(&parse("y on {x in Z^1: x>=0}").unwrap()).unwrap_err();
        assert!(e.message.contains("not bound"), "{e}");
    }
}
