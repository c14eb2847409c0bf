//! Text rendering of engine values. `MotConst`, `PresSet`, and `ConFun`
//! render to DSL text that re-parses to an equal value; `CanonicalForm` and
//! `SpecReport` render as human-readable reports (their lossless interchange
//! form is the structured record format in `records`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use presmot_core::{
    AffineForm, CanonicalForm, Congruence, PieceBase, PresCell, PresSet, RectPiece,
    SpecReport,
};

use crate::lower::{FunVal, SetVal};

type Int = i128;

/// Default coordinate names `x1..xn` (or `x` for n = 1).
pub fn default_vars(dim: usize) -> Vec<String> {
    if dim == 1 {
        vec!["x".to_owned()]
    } else {
        (1..=dim).map(|i| format!("x{i}")).collect()
    }
}

/// Render an affine form over named variables, e.g. `2x - y + 3`.
pub fn render_affine(coeffs: &[Int], constant: Int, vars: &[String]) -> String {
    let mut out = String::new();
    for (c, v) in coeffs.iter().zip(vars) {
        if *c == 0 {
            continue;
        }
        if out.is_empty() {
            match *c {
                1 => {}
                -1 => out.push('-'),
                c => out.push_str(&format!("{c}")),
            }
        } else if *c > 0 {
            out.push_str(" + ");
            if *c != 1 {
                out.push_str(&format!("{c}"));
            }
        } else {
            out.push_str(" - ");
            if *c != -1 {
                out.push_str(&format!("{}", -c));
            }
        }
        out.push_str(v);
    }
    if out.is_empty() {
        return format!("{constant}");
    }
    if constant > 0 {
        out.push_str(&format!(" + {constant}"));
    } else if constant < 0 {
        out.push_str(&format!(" - {}", -constant));
    }
    out
}

fn render_ineq(f: &AffineForm, vars: &[String]) -> String {
    format!("{} >= 0", render_affine(&f.coeffs, f.constant, vars))
}

fn render_cong(c: &Congruence, vars: &[String]) -> String {
    format!("{} = {} mod {}", render_affine(&c.coeffs, 0, vars), c.residue, c.modulus)
}

fn render_cell(cell: &PresCell, vars: &[String]) -> String {
    let mut atoms: Vec<String> = Vec::new();
    for f in &cell.ineqs {
        atoms.push(render_ineq(f, vars));
    }
    for c in &cell.congs {
        atoms.push(render_cong(c, vars));
    }
    if atoms.is_empty() {
        "0 >= 0".to_owned()
    } else {
        atoms.join(" and ")
    }
}

/// Render a Presburger set as DSL set-builder text.
pub fn render_set(sv: &SetVal) -> String {
    let dim = sv.vars.len();
    let head = if dim == 1 {
        sv.vars[0].clone()
    } else {
        format!("({})", sv.vars.join(","))
    };
    let cells: Vec<&PresCell> = sv.set.cells.iter().collect();
    let body = if cells.is_empty() {
        "1 <= 0".to_owned()
    } else {
        cells
            .iter()
            .map(|c| {
                let s = render_cell(c, &sv.vars);
                if cells.len() > 1 && s.contains(" and ") {
                    format!("({s})")
                } else {
                    s
                }
            })
            .collect::<Vec<_>>()
            .join(" or ")
    };
    format!("{{ {head} in Z^{dim} : {body} }}")
}

/// Render one ring-monomial-with-exponentials term body (without support).
fn render_term_body(
    coeff: &presmot_core::MotConst,
    powers: &[u32],
    lexp: &[Int],
    vars: &[String],
) -> String {
    let mut factors: Vec<String> = Vec::new();
    let coeff_str = format!("{coeff}");
    if coeff_str != "1" {
        if coeff_str.contains(" + ") || coeff_str.contains(" - ") {
            factors.push(format!("({coeff_str})"));
        } else {
            factors.push(coeff_str);
        }
    }
    for (p, v) in powers.iter().zip(vars) {
        match p {
            0 => {}
            1 => factors.push(v.clone()),
            p => factors.push(format!("{v}^{p}")),
        }
    }
    let lexp_str = render_affine(lexp, 0, vars);
    if lexp_str != "0" {
        if lexp_str.contains(' ') || lexp_str.starts_with('-') {
            factors.push(format!("L^({lexp_str})"));
        } else {
            factors.push(format!("L^{lexp_str}"));
        }
    }
    if factors.is_empty() {
        "1".to_owned()
    } else {
        factors.join("*")
    }
}

/// Render a constructible function as DSL text, one parenthesized
/// `(... on {...})` region per term.
pub fn render_fun(fv: &FunVal) -> String {
    if fv.vars.is_empty() {
        // Dimension-0 function: a single ring value.
        let v = fv.fun.eval(&[]).expect("dimension-0 evaluation");
        return format!("{v}");
    }
    let terms: Vec<String> = fv
        .fun
        .terms
        .iter()
        .map(|t| {
            let body = render_term_body(&t.coeff, &t.powers, &t.lexp, &fv.vars);
            let set = render_set(&SetVal { vars: fv.vars.clone(), set: t.support.clone() });
            format!("({body} on {set})")
        })
        .collect();
    if terms.is_empty() {
        let set = render_set(&SetVal { vars: fv.vars.clone(), set: PresSet::empty(fv.vars.len()) });
        format!("1 on {set}")
    } else {
        terms.join(" + ")
    }
}

/// Render one rectilinear piece: `theta(a) = M*a + d` with its base.
pub fn render_piece(p: &RectPiece, index: usize) -> String {
    let r = p.free_dims;
    let mut out = format!("piece {index}: r = {r}, theta(a) = M*a + d");
    out.push_str(&format!(", M = {:?}", p.matrix));
    match &p.base {
        PieceBase::Point(d) => out.push_str(&format!(", d = {d:?}")),
        PieceBase::Param { cell, offset } => {
            let zvars: Vec<String> = (1..=cell.dim).map(|i| format!("z{i}")).collect();
            let offs: Vec<String> =
                offset.iter().map(|f| render_affine(&f.coeffs, f.constant, &zvars)).collect();
            out.push_str(&format!(
                ", d(z) = ({}) for z in {}",
                offs.join(", "),
                render_set(&SetVal {
                    vars: zvars,
                    set: PresSet::from_cell(cell.clone()),
                })
            ));
        }
    }
    if p.checked_radius > 0 {
        out.push_str(&format!(" [validated to radius {}]", p.checked_radius));
    }
    out
}

/// Render a canonical form as a per-piece table report.
pub fn render_canonical(cf: &CanonicalForm) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "canonical form: dim {}, {} base parameter(s), {} piece(s)\n",
        cf.dim,
        cf.params,
        cf.pieces.len()
    ));
    for (i, piece) in cf.pieces.iter().enumerate() {
        out.push_str(&render_piece(&piece.piece, i));
        out.push('\n');
        if piece.table.is_empty() {
            out.push_str("  (empty table)\n");
            continue;
        }
        for ((powers, lexp), coeff) in &piece.table {
            let avars: Vec<String> = (1..=powers.len()).map(|i| format!("a{i}")).collect();
            let body = if cf.params == 0 {
                let mc = coeff.eval(&[]).expect("base-free coefficient");
                format!("{mc}")
            } else {
                render_fun(&FunVal {
                    vars: (1..=cf.params).map(|i| format!("z{i}")).collect(),
                    fun: coeff.clone(),
                })
            };
            let mono = render_term_body(
                &presmot_core::MotConst::one(),
                powers,
                lexp,
                &avars,
            );
            out.push_str(&format!("  (a,b)-key {mono}: coefficient {body}\n"));
        }
    }
    out
}

fn render_rat(r: &BigRational) -> String {
    if r.denom() == &BigInt::one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn render_opt_rat(r: &Option<BigRational>) -> String {
    match r {
        Some(v) => render_rat(v),
        None => "-".to_owned(),
    }
}

/// Render one cross-check row.
pub fn render_report(r: &SpecReport) -> String {
    format!(
        "id={} q={} symbolic={} partial={} truncation={} tail<={} verdict={}",
        r.id,
        render_rat(&r.q),
        render_opt_rat(&r.symbolic_value),
        render_opt_rat(&r.partial_sum),
        r.truncation.map(|n| n.to_string()).unwrap_or_else(|| "-".to_owned()),
        render_opt_rat(&r.tail_bound),
        r.verdict
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lower::{lower_fun, lower_set};
    use crate::syntax::parse;

    #[test]
    fn set_roundtrips_semantically() {
        for src in [
            "{ (x,y) in Z^2 : x >= 0 and x <= y }",
            "{ x in Z^1 : x = 1 mod 2 and not x < 0 }",
            "{ x in Z^1 : x > 2 or x < -2 }",
            "{ (x,y,z) in Z^3 : x + 2y - 3z <= 7 and y = z mod 4 }",
        ] {
            let sv = lower_set(&parse(src).unwrap()).unwrap();
            let text = render_set(&sv);
            let sv2 = lower_set(&parse(&text).unwrap())
                .unwrap_or_else(|e| panic!("reparse `{text}`: {e}"));
            assert!(
                sv.set.semantically_equal(&sv2.set).unwrap(),
                "set text `{text}` changed meaning"
            );
        }
    }

    #[test]
    fn fun_roundtrips_semantically() {
        for src in [
            "x^2 * L^(-x) on { x in Z^1 : x >= 0 }",
            "(1 on {x in Z^1: x>=0}) + (L^x on {x in Z^1: x<0})",
            "3*x*y^2*L^(-x - 2y) on { (x,y) in Z^2 : x >= 0 and y >= 0 }",
        ] {
            let fv = lower_fun(&parse(src).unwrap()).unwrap();
            let text = render_fun(&fv);
            let fv2 = lower_fun(&parse(&text).unwrap())
                .unwrap_or_else(|e| panic!("reparse `{text}`: {e}"));
            assert!(
                presmot_core::confun::equal(&fv.fun, &fv2.fun).unwrap(),
                "function text `{text}` changed meaning"
            );
        }
    }

    #[test]
    fn motconst_text_reparses() {
        let v = presmot_core::MotConst::lpow(1)
            .div_unit(presmot_core::Unit::OneMinusLPow(1))
            .unwrap()
            .neg();
        let text = format!("{v}");
        assert_eq!(text, "L/(L^1-1)");
        let back = crate::lower::lower_ring(&parse(&text).unwrap()).unwrap();
        assert_eq!(back, v);
    }
}
