//! Constructible functions on `Z^n` in the value-group fragment: finite sums
//! of terms `c · x^p · L^(b·x)` supported on Presburger sets, with exact
//! arithmetic, evaluation, canonicalization over rectilinear pieces, and the
//! decision procedures for nullity and equality.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::coeffring::{CoeffError, MotConst};
use crate::presburger::{
    rectilinearize, Int, PieceBase, Point, PresCell, PresError, PresSet, RectPiece,
};

/// Errors from constructible-function operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CfError {
    Pres(PresError),
    Coeff(CoeffError),
}

impl fmt::Display for CfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfError::Pres(e) => write!(f, "{e}"),
            CfError::Coeff(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CfError {}

impl From<PresError> for CfError {
    fn from(e: PresError) -> Self {
        CfError::Pres(e)
    }
}

impl From<CoeffError> for CfError {
    fn from(e: CoeffError) -> Self {
        CfError::Coeff(e)
    }
}

/// One summand `coeff · prod_i x_i^powers[i] · L^(lexp·x)` on `support`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Term {
    pub support: PresSet,
    pub coeff: MotConst,
    pub powers: Vec<u32>,
    pub lexp: Vec<Int>,
}

impl Term {
    pub fn dim(&self) -> usize {
        self.support.dim
    }
}

/// A constructible function: finite sum of [`Term`]s over `Z^dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConFun {
    pub dim: usize,
    pub terms: Vec<Term>,
}

impl ConFun {
    pub fn zero(dim: usize) -> Self {
        ConFun { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, value: MotConst) -> Self {
        ConFun::zero(dim).with_term(Term {
            support: PresSet::universe(dim),
            coeff: value,
            powers: vec![0; dim],
            lexp: vec![0; dim],
        })
    }

    /// Characteristic function of a set.
    pub fn indicator(set: PresSet) -> Self {
        let dim = set.dim;
        ConFun::zero(dim).with_term(Term {
            support: set,
            coeff: MotConst::one(),
            powers: vec![0; dim],
            lexp: vec![0; dim],
        })
    }

    pub fn with_term(mut self, term: Term) -> Self {
        assert_eq!(term.dim(), self.dim);
        assert_eq!(term.powers.len(), self.dim);
        assert_eq!(term.lexp.len(), self.dim);
        if !term.coeff.is_zero() {
            self.terms.push(term);
        }
        self
    }

    fn check_dim(&self, other: &ConFun) -> Result<(), CfError> {
        if self.dim != other.dim {
            return Err(CfError::Pres(PresError::DimMismatch {
                expected: self.dim,
                got: other.dim,
            }));
        }
        Ok(())
    }

    pub fn add(&self, other: &ConFun) -> Result<ConFun, CfError> {
        self.check_dim(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(ConFun { dim: self.dim, terms })
    }

    pub fn neg(&self) -> ConFun {
        ConFun {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: t.coeff.neg(), ..t.clone() })
                .collect(),
        }
    }

    pub fn sub(&self, other: &ConFun) -> Result<ConFun, CfError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ConFun) -> Result<ConFun, CfError> {
        self.check_dim(other)?;
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let support = a.support.intersect(&b.support)?;
                let coeff = a.coeff.mul(&b.coeff);
                if coeff.is_zero() {
                    continue;
                }
                terms.push(Term {
                    support,
                    coeff,
                    powers: a.powers.iter().zip(&b.powers).map(|(x, y)| x + y).collect(),
                    lexp: a.lexp.iter().zip(&b.lexp).map(|(x, y)| x + y).collect(),
                });
            }
        }
        Ok(ConFun { dim: self.dim, terms })
    }

    pub fn scale(&self, c: &MotConst) -> ConFun {
        ConFun {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| Term { coeff: t.coeff.mul(c), ..t.clone() })
                .collect(),
        }
    }

    /// Restrict the function to a set (multiply by its indicator).
    pub fn restrict(&self, set: &PresSet) -> Result<ConFun, CfError> {
        let mut terms = Vec::new();
        for t in &self.terms {
            terms.push(Term { support: t.support.intersect(set)?, ..t.clone() });
        }
        Ok(ConFun { dim: self.dim, terms })
    }

    /// Permute coordinates: `out(x) = self(x[perm[0]], .., x[perm[n-1]])`.
    pub fn permute(&self, perm: &[usize]) -> Result<ConFun, CfError> {
        if perm.len() != self.dim {
            return Err(CfError::Pres(PresError::DimMismatch {
                expected: self.dim,
                got: perm.len(),
            }));
        }
        let remap_vec = |v: &[Int]| -> Vec<Int> { perm.iter().map(|&i| v[i]).collect() };
        let mut terms = Vec::new();
        for t in &self.terms {
            let support = PresSet {
                dim: self.dim,
                cells: t
                    .support
                    .cells
                    .iter()
                    .map(|c| PresCell {
                        dim: self.dim,
                        ineqs: c
                            .ineqs
                            .iter()
                            .map(|f| crate::presburger::AffineForm {
                                coeffs: remap_vec(&f.coeffs),
                                constant: f.constant,
                            })
                            .collect(),
                        congs: c
                            .congs
                            .iter()
                            .map(|g| crate::presburger::Congruence {
                                coeffs: remap_vec(&g.coeffs),
                                residue: g.residue,
                                modulus: g.modulus,
                            })
                            .collect(),
                    })
                    .collect(),
            };
            terms.push(Term {
                support,
                coeff: t.coeff.clone(),
                powers: perm.iter().map(|&i| t.powers[i]).collect(),
                lexp: perm.iter().map(|&i| t.lexp[i]).collect(),
            });
        }
        Ok(ConFun { dim: self.dim, terms })
    }

    /// Exact pointwise evaluation in the coefficient ring.
    pub fn eval(&self, p: &[Int]) -> Result<MotConst, CfError> {
        if p.len() != self.dim {
            return Err(CfError::Pres(PresError::DimMismatch {
                expected: self.dim,
                got: p.len(),
            }));
        }
        let mut acc = MotConst::zero();
        for t in &self.terms {
            if !t.support.contains(p)? {
                continue;
            }
            let mut mono = BigInt::from(1);
            for (x, pw) in p.iter().zip(&t.powers) {
                mono *= BigInt::from(*x).pow(*pw);
            }
            if mono.is_zero() {
                continue;
            }
            let e: Int = t.lexp.iter().zip(p).map(|(b, x)| b * x).sum();
            let e = i64::try_from(e).expect("exponent fits i64");
            acc = acc.add(&MotConst::integer(mono).mul(&MotConst::lpow(e)).mul(&t.coeff));
        }
        Ok(acc)
    }
}

/// Key of a canonical-table entry: the monomial exponents of the free
/// orthant coordinates `a` and the `L`-exponent vector `b` with
/// `a^powers · L^(lexp·a)`.
pub type CanonKey = (Vec<u32>, Vec<Int>);

/// Canonical data attached to one rectilinear piece: for each key, a
/// coefficient that is itself a constructible function of the parameters
/// (a plain constant when there are none).
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CanonPiece {
    pub piece: RectPiece,
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_pairs"))]
    pub table: BTreeMap<CanonKey, ConFun>,
}

/// Canonical form of a constructible function relative to its last
/// `params` coordinates: a disjoint rectilinear cover of the support with,
/// on each piece, the expansion of the function in the orthant chart.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CanonicalForm {
    pub dim: usize,
    pub params: usize,
    pub pieces: Vec<CanonPiece>,
}

impl CanonicalForm {
    /// True iff every piece table is empty (the function is identically
    /// zero); meaningful because zero coefficients are pruned.
    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.table.is_empty())
    }

    /// Evaluate the canonical form at a full ambient point.
    pub fn eval(&self, p: &[Int]) -> Result<MotConst, CfError> {
        if p.len() != self.dim {
            return Err(CfError::Pres(PresError::DimMismatch {
                expected: self.dim,
                got: p.len(),
            }));
        }
        let fiber = self.dim - self.params;
        let (xf, z) = p.split_at(fiber);
        let mut acc = MotConst::zero();
        for cp in &self.pieces {
            let Some(a) = cp.piece.preimage(xf, z) else { continue };
            for ((powers, lexp), coeff) in &cp.table {
                let mut mono = BigInt::from(1);
                for (ai, pw) in a.iter().zip(powers) {
                    mono *= BigInt::from(*ai).pow(*pw);
                }
                if mono.is_zero() {
                    continue;
                }
                let e: Int = lexp.iter().zip(&a).map(|(b, ai)| b * ai).sum();
                let e = i64::try_from(e).expect("exponent fits i64");
                let c = coeff.eval(z)?;
                acc = acc.add(&MotConst::integer(mono).mul(&MotConst::lpow(e)).mul(&c));
            }
        }
        Ok(acc)
    }
}

/// Polynomial in `r + s` auxiliary variables with integer coefficients,
/// used for the multinomial expansion of `x^p` through the piece chart.
type ExpPoly = BTreeMap<Vec<u32>, BigInt>;

fn exp_poly_one(nvars: usize) -> ExpPoly {
    let mut m = BTreeMap::new();
    m.insert(vec![0; nvars], BigInt::from(1));
    m
}

/// Multiply an [`ExpPoly`] by the linear form `lin·v + konst`.
fn exp_poly_mul_linear(p: &ExpPoly, lin: &[Int], konst: Int) -> ExpPoly {
    let mut out: ExpPoly = BTreeMap::new();
    for (mono, c) in p {
        if konst != 0 {
            let e = out.entry(mono.clone()).or_insert_with(BigInt::zero);
            *e += c * BigInt::from(konst);
        }
        for (v, lv) in lin.iter().enumerate() {
            if *lv == 0 {
                continue;
            }
            let mut m2 = mono.clone();
            m2[v] += 1;
            let e = out.entry(m2).or_insert_with(BigInt::zero);
            *e += c * BigInt::from(*lv);
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// Compute the canonical form of `f` relative to its last `params`
/// coordinates. The support is covered by disjoint rectilinear pieces and
/// the function is expanded on each piece in the orthant chart
/// `x = M·a + d(z)`.
pub fn canonicalize(f: &ConFun, params: usize) -> Result<CanonicalForm, CfError> {
    if params > f.dim {
        return Err(CfError::Pres(PresError::DimMismatch { expected: f.dim, got: params }));
    }
    let fiber = f.dim - params;
    // Combine like terms first: equal (support, powers, lexp) triples add
    // coefficients, and zero coefficients drop out. This keeps the overlay
    // partition small for differences such as f - f.
    let mut merged: Vec<Term> = Vec::new();
    for t in &f.terms {
        if t.coeff.is_zero() {
            continue;
        }
        match merged
            .iter_mut()
            .find(|m| m.powers == t.powers && m.lexp == t.lexp && m.support == t.support)
        {
            Some(m) => m.coeff = m.coeff.add(&t.coeff),
            None => merged.push(t.clone()),
        }
    }
    merged.retain(|t| !t.coeff.is_zero());
    // Overlay partition of the ambient by the term supports: regions on
    // which a fixed subset of terms is active.
    let mut regions: Vec<(PresSet, Vec<usize>)> = vec![(PresSet::universe(f.dim), Vec::new())];
    for (idx, term) in merged.iter().enumerate() {
        let mut next = Vec::new();
        for (region, active) in regions {
            let inside = region.intersect(&term.support)?.prune_empty();
            if !inside.cells.is_empty() {
                let mut a2 = active.clone();
                a2.push(idx);
                next.push((inside, a2));
            }
            let outside = region.difference(&term.support)?.prune_empty();
            if !outside.cells.is_empty() {
                next.push((outside, active));
            }
        }
        regions = next;
    }
    let mut pieces = Vec::new();
    for (region, active) in regions {
        if active.is_empty() {
            continue;
        }
        for piece in rectilinearize(&region, params)? {
            let mut table: BTreeMap<CanonKey, ConFun> = BTreeMap::new();
            let r = piece.free_dims;
            // Chart data: x_i = M_i·a + D_i·z + d0_i for fiber coordinates.
            let (dcoeffs, dconst, base_cell): (Vec<Vec<Int>>, Vec<Int>, PresCell) =
                match &piece.base {
                    PieceBase::Point(d) => {
                        (vec![vec![]; fiber], d.clone(), PresCell::universe(0))
                    }
                    PieceBase::Param { cell, offset } => (
                        offset.iter().map(|o| o.coeffs.clone()).collect(),
                        offset.iter().map(|o| o.constant).collect(),
                        cell.clone(),
                    ),
                };
            for &idx in &active {
                let term = &merged[idx];
                // Monomial part: product over ambient coordinates of the
                // chart expression to the coordinate's power.
                let mut poly = exp_poly_one(r + params);
                for i in 0..f.dim {
                    let pw = term.powers[i];
                    if pw == 0 {
                        continue;
                    }
                    let mut lin = vec![0; r + params];
                    let konst;
                    if i < fiber {
                        for (j, col) in piece.matrix[i].iter().enumerate() {
                            lin[j] = *col;
                        }
                        for (k, dc) in dcoeffs[i].iter().enumerate() {
                            lin[r + k] = *dc;
                        }
                        konst = dconst[i];
                    } else {
                        lin[r + (i - fiber)] = 1;
                        konst = 0;
                    }
                    for _ in 0..pw {
                        poly = exp_poly_mul_linear(&poly, &lin, konst);
                    }
                }
                // Exponential part: b·x = (M^T b_f)·a + (D^T b_f + b_z)·z
                // + b_f·d0.
                let bf = &term.lexp[..fiber];
                let bz = &term.lexp[fiber..];
                let beta: Vec<Int> = (0..r)
                    .map(|j| (0..fiber).map(|i| bf[i] * piece.matrix[i][j]).sum())
                    .collect();
                let zleix: Vec<Int> = (0..params)
                    .map(|k| {
                        bz[k] + (0..fiber).map(|i| bf[i] * dcoeffs[i][k]).sum::<Int>()
                    })
                    .collect();
                let e0: Int = (0..fiber).map(|i| bf[i] * dconst[i]).sum();
                let e0 = i64::try_from(e0).expect("exponent fits i64");
                let base_factor = term.coeff.mul(&MotConst::lpow(e0));
                for (mono, c) in &poly {
                    let alpha = mono[..r].to_vec();
                    let gamma = mono[r..].to_vec();
                    let contrib = ConFun::zero(params).with_term(Term {
                        support: PresSet::from_cell(base_cell.clone()),
                        coeff: base_factor.mul(&MotConst::integer(c.clone())),
                        powers: gamma,
                        lexp: zleix.clone(),
                    });
                    let key = (alpha, beta.clone());
                    let entry = table
                        .entry(key)
                        .or_insert_with(|| ConFun::zero(params));
                    *entry = entry.add(&contrib)?;
                }
            }
            // Prune identically-zero coefficients so emptiness of the table
            // is equivalent to nullity on the piece.
            let mut pruned = BTreeMap::new();
            for (key, coeff) in table {
                let null = if params == 0 {
                    coeff.eval(&[])?.is_zero()
                } else {
                    is_null(&coeff)?
                };
                if !null {
                    pruned.insert(key, coeff);
                }
            }
            pieces.push(CanonPiece { piece, table: pruned });
        }
    }
    Ok(CanonicalForm { dim: f.dim, params, pieces })
}

/// Decide whether `f` is identically zero on `Z^dim`.
pub fn is_null(f: &ConFun) -> Result<bool, CfError> {
    Ok(canonicalize(f, 0)?.is_zero())
}

/// Decide pointwise equality of two functions.
pub fn equal(f: &ConFun, g: &ConFun) -> Result<bool, CfError> {
    is_null(&f.sub(g)?)
}

/// Search for a point where `f` is nonzero, guided by the canonical form:
/// scan the orthant charts of nonzero pieces. `bound` overrides the
/// per-piece default search radius `T·(A + B + 2)` derived from the table
/// size and exponents.
pub fn witness_nonnull(f: &ConFun, bound: Option<Int>) -> Result<Option<Point>, CfError> {
    let canon = canonicalize(f, 0)?;
    for cp in &canon.pieces {
        if cp.table.is_empty() {
            continue;
        }
        let t = cp.table.len() as Int;
        let a_max: Int = cp
            .table
            .keys()
            .map(|(pw, _)| pw.iter().map(|p| *p as Int).sum())
            .max()
            .unwrap_or(0);
        let b_max: Int = cp
            .table
            .keys()
            .map(|(_, b)| b.iter().map(|v| v.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        let radius = bound.unwrap_or(t * (a_max + b_max + 2));
        let r = cp.piece.free_dims;
        let mut a = vec![0; r];
        loop {
            let d = cp.piece.offset_at(&[]).expect("concrete base");
            let x: Vec<Int> = (0..d.len())
                .map(|i| {
                    d[i] + cp.piece.matrix[i].iter().zip(&a).map(|(m, ai)| m * ai).sum::<Int>()
                })
                .collect();
            if !f.eval(&x)?.is_zero() {
                return Ok(Some(x));
            }
            // advance odometer over [0, radius]^r
            let mut k = r;
            loop {
                if k == 0 {
                    a.clear();
                    break;
                }
                k -= 1;
                if a[k] < radius {
                    a[k] += 1;
                    for v in a.iter_mut().skip(k + 1) {
                        *v = 0;
                    }
                    break;
                }
            }
            if a.is_empty() {
                break;
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presburger::AffineForm;

    fn halfline() -> PresSet {
        // {x >= 0}
        PresSet::from_cell(PresCell::universe(1).with_ineq(AffineForm::new(vec![1], 0)))
    }

    #[test]
    fn eval_simple() {
        // f(x) = x · L^(-x) on x >= 0
        let f = ConFun::zero(1).with_term(Term {
            support: halfline(),
            coeff: MotConst::one(),
            powers: vec![1],
            lexp: vec![-1],
        });
        assert_eq!(f.eval(&[-3]).unwrap(), MotConst::zero());
        assert_eq!(f.eval(&[0]).unwrap(), MotConst::zero());
        assert_eq!(
            f.eval(&[2]).unwrap(),
            MotConst::integer(2).mul(&MotConst::lpow(-2))
        );
    }

    #[test]
    fn arithmetic_and_nullity() {
        let ind = ConFun::indicator(halfline());
        let two = ind.scale(&MotConst::integer(2));
        let sum = ind.add(&ind).unwrap();
        assert!(equal(&two, &sum).unwrap());
        assert!(is_null(&two.sub(&sum).unwrap()).unwrap());
        assert!(!is_null(&ind).unwrap());
    }

    #[test]
    fn identity_on_z_canonicalizes() {
        // f(x) = x on all of Z: canonical form needs two pieces; f is not
        // null, and f(x) - x = 0.
        let f = ConFun::zero(1).with_term(Term {
            support: PresSet::universe(1),
            coeff: MotConst::one(),
            powers: vec![1],
            lexp: vec![0],
        });
        assert!(!is_null(&f).unwrap());
        let canon = canonicalize(&f, 0).unwrap();
        for p in [-7, -1, 0, 3, 11] {
            assert_eq!(canon.eval(&[p]).unwrap(), MotConst::integer(p as i64));
        }
        // Indicator difference: x·1_{x>=0} + x·1_{x<0} - x = 0
        let pos = f.restrict(&halfline()).unwrap();
        let neg = f.restrict(&halfline().complement()).unwrap();
        let diff = pos.add(&neg).unwrap().sub(&f).unwrap();
        assert!(is_null(&diff).unwrap());
    }

    #[test]
    fn parity_cancellation() {
        // 1_{x ≡ 0 (2)} + 1_{x ≡ 1 (2)} - 1 = 0 on Z.
        let even = PresSet::from_cell(PresCell::universe(1).with_cong(
            crate::presburger::Congruence { coeffs: vec![1], residue: 0, modulus: 2 },
        ));
        let odd = PresSet::from_cell(PresCell::universe(1).with_cong(
            crate::presburger::Congruence { coeffs: vec![1], residue: 1, modulus: 2 },
        ));
        let f = ConFun::indicator(even)
            .add(&ConFun::indicator(odd))
            .unwrap()
            .sub(&ConFun::constant(1, MotConst::one()))
            .unwrap();
        assert!(is_null(&f).unwrap());
    }

    #[test]
    fn canonical_eval_matches_direct() {
        // f(x,y) = (x + y)·L^(x - y) on {0 <= x <= y} plus L^y on {y >= 2x}.
        let tri = PresSet::from_cell(
            PresCell::universe(2)
                .with_ineq(AffineForm::new(vec![1, 0], 0))
                .with_ineq(AffineForm::new(vec![-1, 1], 0)),
        );
        let upper = PresSet::from_cell(
            PresCell::universe(2).with_ineq(AffineForm::new(vec![-2, 1], 0)),
        );
        let f = ConFun::zero(2)
            .with_term(Term {
                support: tri,
                coeff: MotConst::one(),
                powers: vec![1, 1],
                lexp: vec![1, -1],
            })
            .with_term(Term {
                support: upper,
                coeff: MotConst::lpow(0),
                powers: vec![0, 0],
                lexp: vec![0, 1],
            });
        let canon = canonicalize(&f, 0).unwrap();
        for x in -4..5 {
            for y in -4..5 {
                assert_eq!(
                    canon.eval(&[x, y]).unwrap(),
                    f.eval(&[x, y]).unwrap(),
                    "at ({x},{y})"
                );
            }
        }
    }

    #[test]
    fn witness_search() {
        let ind = ConFun::indicator(halfline());
        let w = witness_nonnull(&ind, None).unwrap().unwrap();
        assert!(!ind.eval(&w).unwrap().is_zero());
        assert_eq!(witness_nonnull(&ConFun::zero(1), None).unwrap(), None);

        // Sparse nonnull: difference of shifted indicators is nonzero only
        // on a bounded strip.
        let a = PresSet::from_cell(PresCell::universe(1).with_ineq(AffineForm::new(vec![1], 0)));
        let b = PresSet::from_cell(PresCell::universe(1).with_ineq(AffineForm::new(vec![1], -5)));
        let f = ConFun::indicator(a).sub(&ConFun::indicator(b)).unwrap();
        let w = witness_nonnull(&f, None).unwrap().unwrap();
        assert!(!f.eval(&w).unwrap().is_zero());
    }

    #[test]
    fn relative_canonical_eval() {
        // f(x,z) = L^(-x) on {x >= z}, relative to z.
        let set = PresSet::from_cell(
            PresCell::universe(2).with_ineq(AffineForm::new(vec![1, -1], 0)),
        );
        let f = ConFun::zero(2).with_term(Term {
            support: set,
            coeff: MotConst::one(),
            powers: vec![0, 0],
            lexp: vec![-1, 0],
        });
        let canon = canonicalize(&f, 1).unwrap();
        for x in -5..5 {
            for z in -4..4 {
                assert_eq!(
                    canon.eval(&[x, z]).unwrap(),
                    f.eval(&[x, z]).unwrap(),
                    "at ({x},{z})"
                );
            }
        }
    }
}
