//! Exact fiberwise summation of constructible functions: the integrability
//! criterion and closed-form evaluation of `sum_{a in N^r} a^p · L^(b·a)`
//! term by term over the canonical form.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::coeffring::{CoeffError, MotConst, Unit};
use crate::confun::{canonicalize, is_null, CfError, ConFun};
use crate::presburger::{Int, PresError};

/// A coordinate projection `Z^dim -> Z^params` forgetting the first
/// `dim - params` (fiber) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Projection {
    pub dim: usize,
    pub params: usize,
}

impl Projection {
    pub fn new(dim: usize, params: usize) -> Self {
        assert!(params <= dim);
        Projection { dim, params }
    }

    pub fn fiber(&self) -> usize {
        self.dim - self.params
    }
}

/// Diagnostic for a non-summable canonical term: on piece `piece_index`,
/// the key `a^powers · L^(lexp·a)` has some `lexp` component `>= 0` with a
/// nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonIntegrable {
    pub piece_index: usize,
    pub powers: Vec<u32>,
    pub lexp: Vec<Int>,
}

/// Errors from integration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntError {
    Cf(CfError),
    /// The fiberwise sum diverges; one diagnostic per offending term.
    NotIntegrable(Vec<NonIntegrable>),
    /// A univariate sum `sum n^a L^(b·n)` with `b >= 0` was requested.
    Divergent { power: u32, lexp: Int },
}

impl fmt::Display for IntError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntError::Cf(e) => write!(f, "{e}"),
            IntError::NotIntegrable(diags) => {
                write!(f, "fiberwise sum diverges; {} offending term(s)", diags.len())?;
                for d in diags {
                    write!(
                        f,
                        "; piece {} key a^{:?} L^({:?}·a)",
                        d.piece_index, d.powers, d.lexp
                    )?;
                }
                Ok(())
            }
            IntError::Divergent { power, lexp } => {
                write!(f, "sum of n^{power}·L^({lexp}n) diverges")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for IntError {}

impl From<CfError> for IntError {
    fn from(e: CfError) -> Self {
        IntError::Cf(e)
    }
}

impl From<PresError> for IntError {
    fn from(e: PresError) -> Self {
        IntError::Cf(CfError::Pres(e))
    }
}

impl From<CoeffError> for IntError {
    fn from(e: CoeffError) -> Self {
        IntError::Cf(CfError::Coeff(e))
    }
}

/// Closed form of `sum_{n >= 0} n^a · L^(b·n)` in the coefficient ring;
/// requires `b <= -1` for convergence.
pub fn sum_closed_univariate(a: u32, b: Int) -> Result<MotConst, IntError> {
    if b >= 0 {
        return Err(IntError::Divergent { power: a, lexp: b });
    }
    // Represent S_a(t) = N(t) / (1-t)^m starting from S_0 = 1/(1-t) and
    // applying S_a = t·(d/dt) S_{a-1}:
    //   t·d/dt (N/(1-t)^m) = (t·N'·(1-t) + m·t·N) / (1-t)^(m+1).
    let mut n: Vec<BigInt> = vec![BigInt::one()];
    let mut m: u32 = 1;
    for _ in 0..a {
        let deg = n.len();
        // t·N' has coefficient k·n[k] at degree k.
        let tnp: Vec<BigInt> = (0..deg).map(|k| &n[k] * BigInt::from(k as u64)).collect();
        let mut out = vec![BigInt::zero(); deg + 1];
        for (k, c) in tnp.iter().enumerate() {
            out[k] += c; // t·N'
            out[k + 1] -= c; // -t²·N' (the (1-t) factor)
        }
        for (k, c) in n.iter().enumerate() {
            out[k + 1] += c * BigInt::from(m as u64); // m·t·N
        }
        while out.last().is_some_and(|c| c.is_zero()) {
            out.pop();
        }
        n = out;
        m += 1;
    }
    // Substitute t = L^b and divide by the unit (1 - L^b)^m.
    let mut num = MotConst::zero();
    for (k, c) in n.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let e = i64::try_from(b * k as Int).expect("exponent fits i64");
        num = num.add(&MotConst::integer(c.clone()).mul(&MotConst::lpow(e)));
    }
    let unit = Unit::OneMinusLPow(i64::try_from(b).expect("exponent fits i64"));
    let mut out = num;
    for _ in 0..m {
        out = out.div_unit(unit)?;
    }
    Ok(out)
}

/// Check fiberwise summability of `f` along the projection: returns the
/// (possibly empty) list of offending canonical terms. The function is
/// integrable iff the list is empty.
pub fn integrability_diagnostics(
    f: &ConFun,
    proj: Projection,
) -> Result<Vec<NonIntegrable>, IntError> {
    let canon = canonicalize(f, proj.params)?;
    let mut out = Vec::new();
    for (idx, piece) in canon.pieces.iter().enumerate() {
        for ((powers, lexp), _) in &piece.table {
            if lexp.iter().any(|b| *b >= 0) {
                out.push(NonIntegrable {
                    piece_index: idx,
                    powers: powers.clone(),
                    lexp: lexp.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// True iff the fiberwise sums of `f` along the projection all converge.
pub fn is_integrable_fiberwise(f: &ConFun, proj: Projection) -> Result<bool, IntError> {
    Ok(integrability_diagnostics(f, proj)?.is_empty())
}

/// Fiberwise sum of `f` along the projection: the constructible function
/// `z -> sum_{x} f(x, z)` on `Z^params`. Errors with diagnostics when some
/// fiber sum diverges.
pub fn integrate_relative(f: &ConFun, proj: Projection) -> Result<ConFun, IntError> {
    let canon = canonicalize(f, proj.params)?;
    let mut diags = Vec::new();
    for (idx, piece) in canon.pieces.iter().enumerate() {
        for ((powers, lexp), _) in &piece.table {
            if lexp.iter().any(|b| *b >= 0) {
                diags.push(NonIntegrable {
                    piece_index: idx,
                    powers: powers.clone(),
                    lexp: lexp.clone(),
                });
            }
        }
    }
    if !diags.is_empty() {
        return Err(IntError::NotIntegrable(diags));
    }
    let mut acc = ConFun::zero(proj.params);
    for piece in &canon.pieces {
        for ((powers, lexp), coeff) in &piece.table {
            let mut factor = MotConst::one();
            for (a, b) in powers.iter().zip(lexp) {
                factor = factor.mul(&sum_closed_univariate(*a, *b)?);
            }
            acc = acc.add(&coeff.scale(&factor))?;
        }
    }
    Ok(acc)
}

/// Total sum of `f` over its whole domain, as a ring constant.
pub fn integrate_absolute(f: &ConFun) -> Result<MotConst, IntError> {
    let total = integrate_relative(f, Projection::new(f.dim, 0))?;
    Ok(total.eval(&[]).map_err(IntError::Cf)?)
}

/// Fubini-style helper: integrate out a single leading coordinate.
pub fn integrate_first_axis(f: &ConFun) -> Result<ConFun, IntError> {
    integrate_relative(f, Projection::new(f.dim, f.dim - 1))
}

/// Decide whether two integrable functions have equal fiberwise sums.
pub fn sums_equal(f: &ConFun, g: &ConFun, proj: Projection) -> Result<bool, IntError> {
    let sf = integrate_relative(f, proj)?;
    let sg = integrate_relative(g, proj)?;
    Ok(is_null(&sf.sub(&sg)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confun::{equal, Term};
    use crate::presburger::{AffineForm, PresCell, PresSet};
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn naturals(dim: usize) -> PresSet {
        let mut cell = PresCell::universe(dim);
        for i in 0..dim {
            cell = cell.with_ineq(AffineForm::coordinate(dim, i));
        }
        PresSet::from_cell(cell)
    }

    #[test]
    fn geometric_sums() {
        // sum L^{-n} = 1/(1 - L^{-1}) = L/(L-1)
        let s = sum_closed_univariate(0, -1).unwrap();
        let expected = MotConst::one().div_unit(Unit::OneMinusLPow(-1)).unwrap();
        assert_eq!(s, expected);
        assert_eq!(s.eval_q(&q(2, 1), &Default::default()).unwrap(), q(2, 1));
        // sum n·2^{-n} = 2, sum n²·2^{-n} = 6, sum n·4^{-n} = 4/9
        assert_eq!(
            sum_closed_univariate(1, -1)
                .unwrap()
                .eval_q(&q(2, 1), &Default::default())
                .unwrap(),
            q(2, 1)
        );
        assert_eq!(
            sum_closed_univariate(2, -1)
                .unwrap()
                .eval_q(&q(2, 1), &Default::default())
                .unwrap(),
            q(6, 1)
        );
        assert_eq!(
            sum_closed_univariate(1, -2)
                .unwrap()
                .eval_q(&q(2, 1), &Default::default())
                .unwrap(),
            q(4, 9)
        );
        // at q = 5/2: sum (5/2)^{-n} = 1/(1 - 2/5) = 5/3
        assert_eq!(
            sum_closed_univariate(0, -1)
                .unwrap()
                .eval_q(&q(5, 2), &Default::default())
                .unwrap(),
            q(5, 3)
        );
        assert!(matches!(
            sum_closed_univariate(1, 0),
            Err(IntError::Divergent { .. })
        ));
    }

    #[test]
    fn absolute_integral_on_plane() {
        // f = L^{-m-n} on N²: total = (L/(L-1))².
        let f = ConFun::zero(2).with_term(Term {
            support: naturals(2),
            coeff: MotConst::one(),
            powers: vec![0, 0],
            lexp: vec![-1, -1],
        });
        let geo = MotConst::one().div_unit(Unit::OneMinusLPow(-1)).unwrap();
        assert_eq!(integrate_absolute(&f).unwrap(), geo.mul(&geo));
        // Fubini in the other order via coordinate swap.
        let g = f.permute(&[1, 0]).unwrap();
        assert_eq!(integrate_absolute(&g).unwrap(), geo.mul(&geo));
        // Iterated: integrate out axis 0, then the rest.
        let partial = integrate_first_axis(&f).unwrap();
        assert_eq!(integrate_absolute(&partial).unwrap(), geo.mul(&geo));
    }

    #[test]
    fn relative_integral_halfline() {
        // sum_{x >= z} L^{-x} = L^{-z} · L/(L-1), for every z.
        let set = PresSet::from_cell(
            PresCell::universe(2).with_ineq(AffineForm::new(vec![1, -1], 0)),
        );
        let f = ConFun::zero(2).with_term(Term {
            support: set,
            coeff: MotConst::one(),
            powers: vec![0, 0],
            lexp: vec![-1, 0],
        });
        let total = integrate_relative(&f, Projection::new(2, 1)).unwrap();
        let geo = MotConst::one().div_unit(Unit::OneMinusLPow(-1)).unwrap();
        let expected = ConFun::zero(1).with_term(Term {
            support: PresSet::universe(1),
            coeff: geo,
            powers: vec![0],
            lexp: vec![-1],
        });
        assert!(equal(&total, &expected).unwrap());
    }

    #[test]
    fn divergence_detected() {
        // L^{+x} on N is not summable; neither is the constant 1.
        let f = ConFun::zero(1).with_term(Term {
            support: naturals(1),
            coeff: MotConst::one(),
            powers: vec![0],
            lexp: vec![1],
        });
        let diags = integrability_diagnostics(&f, Projection::new(1, 0)).unwrap();
        assert!(!diags.is_empty());
        assert!(matches!(
            integrate_absolute(&f),
            Err(IntError::NotIntegrable(_))
        ));
        let ind = ConFun::indicator(naturals(1));
        assert!(!is_integrable_fiberwise(&ind, Projection::new(1, 0)).unwrap());
        // But L^{-x} on N is summable.
        let g = ConFun::zero(1).with_term(Term {
            support: naturals(1),
            coeff: MotConst::one(),
            powers: vec![0],
            lexp: vec![-1],
        });
        assert!(is_integrable_fiberwise(&g, Projection::new(1, 0)).unwrap());
    }

    #[test]
    fn projection_formula() {
        // ∫ (g∘π · f) = g · ∫ f with g(z) = z·L^{-z} and f = L^{-x} on
        // {x >= 0} × Z.
        let fset = PresSet::from_cell(
            PresCell::universe(2).with_ineq(AffineForm::new(vec![1, 0], 0)),
        );
        let f = ConFun::zero(2).with_term(Term {
            support: fset,
            coeff: MotConst::one(),
            powers: vec![0, 0],
            lexp: vec![-1, 0],
        });
        let g_pulled = ConFun::zero(2).with_term(Term {
            support: PresSet::universe(2),
            coeff: MotConst::one(),
            powers: vec![0, 1],
            lexp: vec![0, -1],
        });
        let g = ConFun::zero(1).with_term(Term {
            support: PresSet::universe(1),
            coeff: MotConst::one(),
            powers: vec![1],
            lexp: vec![-1],
        });
        let proj = Projection::new(2, 1);
        let lhs = integrate_relative(&f.mul(&g_pulled).unwrap(), proj).unwrap();
        let rhs = g.mul(&integrate_relative(&f, proj).unwrap()).unwrap();
        assert!(equal(&lhs, &rhs).unwrap());
    }

    #[test]
    fn pointwise_contract_bounded_fibers() {
        // On a set with finite fibers the relative integral is the plain
        // finite sum: f = L^{x} on {0 <= x <= 2} × Z (finite fiber, no
        // convergence constraint applies since the canonical pieces are
        // bounded: encode as three shifted sections).
        let strip = PresSet::from_cell(
            PresCell::universe(2)
                .with_ineq(AffineForm::new(vec![1, 0], 0))
                .with_ineq(AffineForm::new(vec![-1, 0], 2)),
        );
        let f = ConFun::zero(2).with_term(Term {
            support: strip,
            coeff: MotConst::one(),
            powers: vec![1, 0],
            lexp: vec![-1, 0],
        });
        let total = integrate_relative(&f, Projection::new(2, 1)).unwrap();
        // sum_{x=0..2} x·L^{-x} = L^{-1} + 2·L^{-2}
        let expected = MotConst::lpow(-1).add(&MotConst::integer(2).mul(&MotConst::lpow(-2)));
        for z in -3..4 {
            assert_eq!(total.eval(&[z]).unwrap(), expected);
        }
    }
}
