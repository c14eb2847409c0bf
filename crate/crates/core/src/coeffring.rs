//! Exact arithmetic in the motivic coefficient ring
//! `A = Z[L, L^-1, 1/(1-L^-i) : i > 0]`, optionally extended by free
//! commutative symbols standing for residue-field classes.
//!
//! Elements are kept as reduced fractions: the numerator is an integer
//! Laurent polynomial in `L` (coefficients may be polynomials in declared
//! class symbols), the denominator a multiset of cyclotomic polynomials
//! `Phi_d(L)`. Every `(L^i - 1)` factors as a product of `Phi_d` for `d | i`,
//! and the `Phi_d` are irreducible over `Q`, so a fraction whose numerator is
//! divisible by no denominator factor is a canonical representative:
//! equality is structural equality.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Errors from coefficient-ring operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoeffError {
    /// Division was requested by an element that is not a declared unit.
    NonUnit(String),
    /// Specialization point `q <= 1`, where denominators may vanish.
    QOutOfRange,
    /// A class symbol occurs in the value but has no assignment.
    UnassignedSymbol(String),
}

impl fmt::Display for CoeffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeffError::NonUnit(what) => write!(f, "division by non-unit: {what}"),
            CoeffError::QOutOfRange => write!(f, "specialization requires rational q > 1"),
            CoeffError::UnassignedSymbol(name) => {
                write!(f, "class symbol `{name}` has no assignment")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoeffError {}

/// A free commutative symbol standing for a residue-field class, with an
/// optional user-supplied counting specialization `q -> rational`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSymbol {
    pub name: String,
    pub count_spec: Vec<(BigRational, BigRational)>,
}

impl ClassSymbol {
    pub fn new(name: &str) -> Self {
        ClassSymbol { name: name.to_owned(), count_spec: Vec::new() }
    }

    pub fn count_at(&self, q: &BigRational) -> Option<&BigRational> {
        self.count_spec.iter().find(|(p, _)| p == q).map(|(_, v)| v)
    }
}

/// Monomial in class symbols: symbol name -> power (> 0).
pub type SymMonomial = BTreeMap<String, u32>;

/// Multivariate integer polynomial in class symbols. No relations are
/// imposed beyond commutativity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymPoly {
    #[cfg_attr(feature = "serde", serde(with = "crate::serde_pairs"))]
    terms: BTreeMap<SymMonomial, BigInt>,
}

impl SymPoly {
    pub fn zero() -> Self {
        SymPoly { terms: BTreeMap::new() }
    }

    pub fn from_int(n: BigInt) -> Self {
        let mut terms = BTreeMap::new();
        if !n.is_zero() {
            terms.insert(SymMonomial::new(), n);
        }
        SymPoly { terms }
    }

    pub fn symbol(name: &str) -> Self {
        let mut mono = SymMonomial::new();
        mono.insert(name.to_owned(), 1);
        let mut terms = BTreeMap::new();
        terms.insert(mono, BigInt::one());
        SymPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant term, if the polynomial is a pure integer.
    pub fn as_int(&self) -> Option<BigInt> {
        if self.terms.is_empty() {
            return Some(BigInt::zero());
        }
        if self.terms.len() == 1 {
            let (mono, c) = self.terms.iter().next().unwrap();
            if mono.is_empty() {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SymMonomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &SymPoly) -> SymPoly {
        let mut terms = self.terms.clone();
        for (mono, c) in &other.terms {
            let entry = terms.entry(mono.clone()).or_insert_with(BigInt::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(mono);
            }
        }
        SymPoly { terms }
    }

    pub fn neg(&self) -> SymPoly {
        SymPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &SymPoly) -> SymPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &SymPoly) -> SymPoly {
        let mut terms: BTreeMap<SymMonomial, BigInt> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut mono = m1.clone();
                for (name, pow) in m2 {
                    *mono.entry(name.clone()).or_insert(0) += pow;
                }
                let entry = terms.entry(mono).or_insert_with(BigInt::zero);
                *entry += c1 * c2;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        SymPoly { terms }
    }

    pub fn mul_int(&self, n: &BigInt) -> SymPoly {
        if n.is_zero() {
            return SymPoly::zero();
        }
        SymPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * n)).collect() }
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().flat_map(|m| m.keys()).map(|s| s.as_str())
    }

    pub fn eval(
        &self,
        assignments: &BTreeMap<String, BigRational>,
    ) -> Result<BigRational, CoeffError> {
        let mut total = BigRational::zero();
        for (mono, c) in &self.terms {
            let mut val = BigRational::from(c.clone());
            for (name, pow) in mono {
                let v = assignments
                    .get(name)
                    .ok_or_else(|| CoeffError::UnassignedSymbol(name.clone()))?;
                for _ in 0..*pow {
                    val *= v;
                }
            }
            total += val;
        }
        Ok(total)
    }
}

/// Laurent polynomial in `L`: exponent -> coefficient, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LaurentPoly {
    terms: BTreeMap<i64, SymPoly>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        LaurentPoly::monomial(0, SymPoly::from_int(BigInt::one()))
    }

    pub fn monomial(exp: i64, coeff: SymPoly) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(exp, coeff);
        }
        LaurentPoly { terms }
    }

    pub fn from_int_poly(coeffs: &[BigInt]) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                terms.insert(e as i64, SymPoly::from_int(c.clone()));
            }
        }
        LaurentPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&i64, &SymPoly)> + ExactSizeIterator {
        self.terms.iter()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let slot = terms.entry(*e).or_insert_with(SymPoly::zero);
            *slot = slot.add(c);
            if slot.is_zero() {
                terms.remove(e);
            }
        }
        LaurentPoly { terms }
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly { terms: self.terms.iter().map(|(e, c)| (*e, c.neg())).collect() }
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut terms: BTreeMap<i64, SymPoly> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let prod = c1.mul(c2);
                let slot = terms.entry(e1 + e2).or_insert_with(SymPoly::zero);
                *slot = slot.add(&prod);
            }
        }
        terms.retain(|_, c| !c.is_zero());
        LaurentPoly { terms }
    }

    pub fn shift(&self, k: i64) -> LaurentPoly {
        LaurentPoly { terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect() }
    }

    /// Exact division by a monic integer polynomial (given by ascending
    /// coefficients); `None` when the remainder is nonzero.
    pub fn div_exact_monic(&self, divisor: &[BigInt]) -> Option<LaurentPoly> {
        debug_assert!(divisor.last().map(|c| c.is_one()).unwrap_or(false));
        if self.is_zero() {
            return Some(LaurentPoly::zero());
        }
        let lo = self.min_exp().unwrap();
        let ddeg = (divisor.len() - 1) as i64;
        // Work on the shifted ordinary polynomial self * L^(-lo).
        let mut rem: BTreeMap<i64, SymPoly> = self.shift(-lo).terms;
        let mut quot: BTreeMap<i64, SymPoly> = BTreeMap::new();
        while let Some((&deg, _)) = rem.iter().next_back() {
            if deg < ddeg {
                return None;
            }
            let lead = rem.remove(&deg).unwrap();
            let qexp = deg - ddeg;
            // Subtract lead * L^qexp * divisor (skipping the leading term,
            // already cancelled).
            for (i, dc) in divisor.iter().enumerate().take(divisor.len() - 1) {
                if dc.is_zero() {
                    continue;
                }
                let e = qexp + i as i64;
                let sub = lead.mul_int(dc);
                let slot = rem.entry(e).or_insert_with(SymPoly::zero);
                *slot = slot.sub(&sub);
                if slot.is_zero() {
                    rem.remove(&e);
                }
            }
            quot.insert(qexp, lead);
            if rem.is_empty() {
                return Some(LaurentPoly { terms: quot }.shift(lo));
            }
        }
        // Remainder zero only if the loop drained everything above.
        if rem.is_empty() {
            Some(LaurentPoly { terms: quot }.shift(lo))
        } else {
            None
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.terms.values().flat_map(|c| c.symbols())
    }

    pub fn eval_q(
        &self,
        q: &BigRational,
        assignments: &BTreeMap<String, BigRational>,
    ) -> Result<BigRational, CoeffError> {
        let mut total = BigRational::zero();
        for (e, c) in &self.terms {
            total += c.eval(assignments)? * rat_pow(q, *e);
        }
        Ok(total)
    }
}

fn rat_pow(q: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        let mut acc = BigRational::one();
        for _ in 0..e {
            acc *= q;
        }
        acc
    } else {
        BigRational::one() / rat_pow(q, -e)
    }
}

/// `d`-th cyclotomic polynomial over `Z`, ascending coefficients.
pub fn cyclotomic(d: u32) -> Vec<BigInt> {
    assert!(d >= 1);
    // x^d - 1 divided by the product of Phi_e for proper divisors e of d.
    let mut poly: Vec<BigInt> = Vec::new();
    poly.resize(d as usize + 1, BigInt::zero());
    poly[0] = -BigInt::one();
    poly[d as usize] = BigInt::one();
    for e in 1..d {
        if d % e == 0 {
            poly = int_poly_div_exact(&poly, &cyclotomic(e));
        }
    }
    poly
}

/// Exact integer polynomial division by a monic divisor; panics on nonzero
/// remainder (callers divide known multiples).
fn int_poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem: Vec<BigInt> = num.to_vec();
    let ddeg = den.len() - 1;
    assert!(den[ddeg].is_one());
    let qdeg = rem.len() - 1 - ddeg;
    let mut quot = alloc::vec![BigInt::zero(); qdeg + 1];
    for i in (0..=qdeg).rev() {
        let lead = rem[i + ddeg].clone();
        if lead.is_zero() {
            continue;
        }
        for (j, dc) in den.iter().enumerate() {
            rem[i + j] -= &lead * dc;
        }
        quot[i] = lead;
    }
    assert!(rem.iter().all(|c| c.is_zero()), "non-exact cyclotomic division");
    quot
}

/// Multiply ascending integer polynomials.
fn int_poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = alloc::vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

/// An invertible element of `A`, the only legal divisors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// `L^k` for any integer `k`.
    LPow(i64),
    /// `1 - L^i` for nonzero integer `i`; note `(1 - L^i) = -L^i (1 - L^-i)`.
    OneMinusLPow(i64),
}

/// Element of the coefficient ring `A` (possibly extended by class
/// symbols), as a reduced fraction numerator / product of `Phi_d(L)`.
///
/// Values are immutable after construction and canonical: two construction
/// paths for the same ring element produce equal representations.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MotConst {
    num: LaurentPoly,
    /// Cyclotomic index `d` -> multiplicity of `Phi_d(L)` in the denominator.
    den: BTreeMap<u32, u32>,
}

impl MotConst {
    pub fn zero() -> Self {
        MotConst { num: LaurentPoly::zero(), den: BTreeMap::new() }
    }

    pub fn one() -> Self {
        MotConst { num: LaurentPoly::one(), den: BTreeMap::new() }
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        MotConst { num: LaurentPoly::monomial(0, SymPoly::from_int(n.into())), den: BTreeMap::new() }
    }

    pub fn symbol(name: &str) -> Self {
        MotConst { num: LaurentPoly::monomial(0, SymPoly::symbol(name)), den: BTreeMap::new() }
    }

    /// `L^k`.
    pub fn lpow(k: i64) -> Self {
        MotConst { num: LaurentPoly::monomial(k, SymPoly::from_int(BigInt::one())), den: BTreeMap::new() }
    }

    pub fn from_laurent(num: LaurentPoly) -> Self {
        MotConst { num, den: BTreeMap::new() }
    }

    pub(crate) fn from_parts(num: LaurentPoly, den: BTreeMap<u32, u32>) -> Self {
        let mut v = MotConst { num, den };
        v.reduce();
        v
    }

    pub fn numerator(&self) -> &LaurentPoly {
        &self.num
    }

    /// Denominator as (cyclotomic index, multiplicity) pairs.
    pub fn denominator(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.den.iter().map(|(d, m)| (*d, *m))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num == LaurentPoly::one()
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let ds: Vec<u32> = self.den.keys().copied().collect();
        for d in ds {
            let phi = cyclotomic(d);
            while *self.den.get(&d).unwrap_or(&0) > 0 {
                match self.num.div_exact_monic(&phi) {
                    Some(q) => {
                        self.num = q;
                        let m = self.den.get_mut(&d).unwrap();
                        *m -= 1;
                        if *m == 0 {
                            self.den.remove(&d);
                            break;
                        }
                    }
                    None => break,
                }
            }
        }
    }

    /// Numerator scaled into the common denominator `target` (which must
    /// dominate `self.den` componentwise).
    fn scaled_num(&self, target: &BTreeMap<u32, u32>) -> LaurentPoly {
        let mut num = self.num.clone();
        for (d, m) in target {
            let have = self.den.get(d).copied().unwrap_or(0);
            debug_assert!(*m >= have);
            if *m > have {
                let phi = cyclotomic(*d);
                let mut cof = alloc::vec![BigInt::one()];
                for _ in 0..(*m - have) {
                    cof = int_poly_mul(&cof, &phi);
                }
                num = num.mul(&LaurentPoly::from_int_poly(&cof));
            }
        }
        num
    }

    pub fn add(&self, other: &MotConst) -> MotConst {
        let mut den = self.den.clone();
        for (d, m) in &other.den {
            let slot = den.entry(*d).or_insert(0);
            *slot = (*slot).max(*m);
        }
        let num = self.scaled_num(&den).add(&other.scaled_num(&den));
        MotConst::from_parts(num, den)
    }

    pub fn neg(&self) -> MotConst {
        MotConst { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &MotConst) -> MotConst {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &MotConst) -> MotConst {
        let mut den = self.den.clone();
        for (d, m) in &other.den {
            *den.entry(*d).or_insert(0) += m;
        }
        MotConst::from_parts(self.num.mul(&other.num), den)
    }

    /// If `self` is a unit of `A` (of the form `s * L^k * prod (L^i - 1)^m`
    /// up to sign, possibly over a cyclotomic denominator), return its
    /// multiplicative inverse; otherwise `None`.
    pub fn inverse_if_unit(&self) -> Option<MotConst> {
        if self.num.is_zero() {
            return None;
        }
        let k = self.num.min_exp().unwrap();
        let mut poly = self.num.shift(-k);
        // Strip cyclotomic factors from the numerator.
        let mut facs: BTreeMap<u32, u32> = BTreeMap::new();
        // deg(Phi_d) = phi(d) >= sqrt(d/2), so any cyclotomic factor of a
        // degree-n polynomial has index d <= 2*n^2.
        let deg0 = poly.max_exp().unwrap();
        let limit = (2 * deg0 * deg0).max(1);
        let mut d: u32 = 1;
        while i64::from(d) <= limit {
            let deg = poly.max_exp().unwrap();
            if deg == 0 {
                break;
            }
            let phi = cyclotomic(d);
            if (phi.len() as i64 - 1) <= deg {
                while let Some(q) = poly.div_exact_monic(&phi) {
                    poly = q;
                    *facs.entry(d).or_insert(0) += 1;
                }
            }
            d += 1;
        }
        if poly.max_exp().unwrap() != 0 {
            // Leftover non-cyclotomic factor: not a unit.
            return None;
        }
        // `poly` is now a constant; it must be +/- 1 with no free symbols.
        let c = poly.terms().next().map(|(_, s)| s.as_int())??;
        let sign = if c == BigInt::one() {
            BigInt::one()
        } else if c == -BigInt::one() {
            -BigInt::one()
        } else {
            return None;
        };
        // Inverse numerator: sign * L^(-k) * prod over self.den of Phi_d^m.
        let mut inv_num = LaurentPoly::monomial(-k, SymPoly::from_int(sign));
        for (dd, m) in &self.den {
            let phi = cyclotomic(*dd);
            let mut cof = alloc::vec![BigInt::one()];
            for _ in 0..*m {
                cof = int_poly_mul(&cof, &phi);
            }
            inv_num = inv_num.mul(&LaurentPoly::from_int_poly(&cof));
        }
        Some(MotConst::from_parts(inv_num, facs))
    }

    /// Exact division by a declared unit of `A`.
    pub fn div_unit(&self, unit: Unit) -> Result<MotConst, CoeffError> {
        match unit {
            Unit::LPow(k) => Ok(MotConst { num: self.num.shift(-k), den: self.den.clone() }),
            Unit::OneMinusLPow(0) => {
                Err(CoeffError::NonUnit("(1 - L^0) = 0".to_owned()))
            }
            Unit::OneMinusLPow(i) => {
                // i > 0: 1/(1 - L^i) = -1/(L^i - 1).
                // i < 0: 1/(1 - L^i) = L^|i| / (L^|i| - 1).
                let j = i.unsigned_abs();
                let mut den = self.den.clone();
                for d in 1..=j {
                    if j % d == 0 {
                        *den.entry(d as u32).or_insert(0) += 1;
                    }
                }
                let num = if i > 0 { self.num.neg() } else { self.num.shift(i64::try_from(j).unwrap()) };
                Ok(MotConst::from_parts(num, den))
            }
        }
    }

    /// Multiplication by a unit (inverse of [`MotConst::div_unit`]).
    pub fn mul_unit(&self, unit: Unit) -> MotConst {
        match unit {
            Unit::LPow(k) => MotConst { num: self.num.shift(k), den: self.den.clone() },
            Unit::OneMinusLPow(i) => {
                let one_minus = MotConst::one().sub(&MotConst::lpow(i));
                self.mul(&one_minus)
            }
        }
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = self.num.symbols().map(|s| s.to_owned()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Ring homomorphism `L -> q` for rational `q > 1`; class symbols take
    /// the supplied values.
    pub fn eval_q(
        &self,
        q: &BigRational,
        assignments: &BTreeMap<String, BigRational>,
    ) -> Result<BigRational, CoeffError> {
        if *q <= BigRational::one() {
            return Err(CoeffError::QOutOfRange);
        }
        let num = self.num.eval_q(q, assignments)?;
        let mut den = BigRational::one();
        for (d, m) in &self.den {
            let phi = cyclotomic(*d);
            let mut v = BigRational::zero();
            for (e, c) in phi.iter().enumerate() {
                v += BigRational::from(c.clone()) * rat_pow(q, e as i64);
            }
            for _ in 0..*m {
                den *= &v;
            }
        }
        Ok(num / den)
    }

    /// Numerator and `(L^i - 1)`-shaped denominator factors for display: the
    /// internal cyclotomic factors `Phi_d^m` are regrouped as `(L^d - 1)^m`
    /// with the cofactor multiplied into the numerator, and any negative
    /// `L`-exponent becomes an explicit `L^v` denominator factor.
    pub fn display_parts(&self) -> (LaurentPoly, u64, Vec<(u32, u32)>) {
        let mut num = self.num.clone();
        let mut rem = self.den.clone();
        let mut factors = Vec::new();
        // Largest index first: (L^d - 1) = prod over e | d of Phi_e, so each
        // emitted factor consumes one copy of Phi_e for every divisor e of d.
        // Divisors missing from the denominator are compensated in the
        // numerator.
        while let Some((&d, &m)) = rem.iter().next_back() {
            if m == 0 {
                rem.remove(&d);
                continue;
            }
            factors.push((d, m));
            rem.remove(&d);
            for e in 1..d {
                if d % e != 0 {
                    continue;
                }
                let have = rem.get(&e).copied().unwrap_or(0);
                let used = have.min(m);
                if used > 0 {
                    let slot = rem.get_mut(&e).unwrap();
                    *slot -= used;
                    if *slot == 0 {
                        rem.remove(&e);
                    }
                }
                if used < m {
                    let phi = LaurentPoly::from_int_poly(&cyclotomic(e));
                    for _ in 0..(m - used) {
                        num = num.mul(&phi);
                    }
                }
            }
        }
        factors.reverse();
        let lpow = match num.min_exp() {
            Some(e) if e < 0 => {
                num = num.shift(-e);
                (-e) as u64
            }
            _ => 0,
        };
        (num, lpow, factors)
    }
}

impl fmt::Display for MotConst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (num, lpow, factors) = self.display_parts();
        let num_str = format_laurent(&num);
        if lpow == 0 && factors.is_empty() {
            return write!(f, "{num_str}");
        }
        let mut den_parts: Vec<String> = Vec::new();
        if lpow == 1 {
            den_parts.push("L".to_owned());
        } else if lpow > 1 {
            den_parts.push(alloc::format!("L^{lpow}"));
        }
        for (d, m) in factors {
            let base = alloc::format!("(L^{d}-1)");
            if m == 1 {
                den_parts.push(base);
            } else {
                den_parts.push(alloc::format!("{base}^{m}"));
            }
        }
        let den_str = den_parts.join("*");
        // A lone `(L^i-1)` is already parenthesized; everything else gets
        // one wrapping group.
        let den_wrapped = if den_parts.len() == 1
            && den_str.starts_with('(')
            && den_str.ends_with(')')
        {
            den_str
        } else {
            alloc::format!("({den_str})")
        };
        let num_wrapped = if num.terms().count() > 1 {
            alloc::format!("({num_str})")
        } else {
            num_str
        };
        write!(f, "{num_wrapped}/{den_wrapped}")
    }
}

/// Render a Laurent polynomial as `c_k*L^k + ...`, descending exponents,
/// explicit signs.
pub fn format_laurent(p: &LaurentPoly) -> String {
    if p.is_zero() {
        return "0".to_owned();
    }
    let mut out = String::new();
    for (i, (e, c)) in p.terms().rev().enumerate() {
        let (sign, mag) = format_sympoly_signed(c);
        if i == 0 {
            if sign < 0 {
                out.push('-');
            }
        } else if sign < 0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let lpart = match *e {
            0 => None,
            1 => Some("L".to_owned()),
            k => Some(alloc::format!("L^{}", fmt_exp(k))),
        };
        match (mag.as_str(), &lpart) {
            ("1", Some(lp)) => out.push_str(lp),
            (_, Some(lp)) => {
                out.push_str(&mag);
                out.push('*');
                out.push_str(lp);
            }
            (_, None) => out.push_str(&mag),
        }
    }
    out
}

fn fmt_exp(k: i64) -> String {
    if k < 0 {
        alloc::format!("({k})")
    } else {
        alloc::format!("{k}")
    }
}

/// Split a coefficient into a display sign and a magnitude string. A
/// multi-term symbol polynomial is parenthesized and keeps its own signs.
fn format_sympoly_signed(c: &SymPoly) -> (i32, String) {
    if let Some(n) = c.as_int() {
        let sign = if n.is_negative() { -1 } else { 1 };
        return (sign, n.abs().to_string());
    }
    let terms: Vec<(&SymMonomial, &BigInt)> = c.terms().collect();
    if terms.len() == 1 {
        let (mono, n) = terms[0];
        let sign = if n.is_negative() { -1 } else { 1 };
        let mut parts = Vec::new();
        let mag = n.abs();
        if !mag.is_one() {
            parts.push(mag.to_string());
        }
        for (name, pow) in mono {
            if *pow == 1 {
                parts.push(name.clone());
            } else {
                parts.push(alloc::format!("{name}^{pow}"));
            }
        }
        if parts.is_empty() {
            parts.push("1".to_owned());
        }
        return (sign, parts.join("*"));
    }
    // General polynomial coefficient: parenthesize.
    let mut out = String::from("(");
    for (i, (mono, n)) in terms.iter().enumerate() {
        let neg = n.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let mut parts = Vec::new();
        let mag = n.abs();
        if !mag.is_one() || mono.is_empty() {
            parts.push(mag.to_string());
        }
        for (name, pow) in mono.iter() {
            if *pow == 1 {
                parts.push(name.clone());
            } else {
                parts.push(alloc::format!("{name}^{pow}"));
            }
        }
        out.push_str(&parts.join("*"));
    }
    out.push(')');
    (1, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn l() -> MotConst {
        MotConst::lpow(1)
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn cyclotomic_basics() {
        assert_eq!(cyclotomic(1), vec![BigInt::from(-1), BigInt::from(1)]);
        assert_eq!(cyclotomic(2), vec![BigInt::from(1), BigInt::from(1)]);
        assert_eq!(
            cyclotomic(6),
            vec![BigInt::from(1), BigInt::from(-1), BigInt::from(1)]
        );
    }

    #[test]
    fn mul_difference_of_squares() {
        // (L+1)(L-1) = L^2 - 1
        let a = l().add(&MotConst::one());
        let b = l().sub(&MotConst::one());
        let expect = MotConst::lpow(2).sub(&MotConst::one());
        assert_eq!(a.mul(&b), expect);
    }

    #[test]
    fn add_common_denominator() {
        // L/(L-1) + (-1)/(L-1) = 1
        let lm1 = Unit::OneMinusLPow(1);
        let a = l().div_unit(lm1).unwrap().neg(); // L/(L-1)
        let b = MotConst::one().div_unit(lm1).unwrap(); // -1/(L-1)
        assert_eq!(a.add(&b), MotConst::one());
    }

    #[test]
    fn div_unit_examples() {
        // (L^2 - 1) / (1 - L^-2) = L^2
        let a = MotConst::lpow(2).sub(&MotConst::one());
        let r = a.div_unit(Unit::OneMinusLPow(-2)).unwrap();
        assert_eq!(r, MotConst::lpow(2));
        // 1 / (1 - L^-1) = L/(L-1)
        let r = MotConst::one().div_unit(Unit::OneMinusLPow(-1)).unwrap();
        let expect = MotConst::lpow(1).div_unit(Unit::OneMinusLPow(1)).unwrap().neg();
        assert_eq!(r, expect);
        // a / L^0 = a
        let a = l().add(&MotConst::integer(7));
        assert_eq!(a.div_unit(Unit::LPow(0)).unwrap(), a);
    }

    #[test]
    fn div_unit_roundtrip() {
        let a = MotConst::lpow(3).sub(&MotConst::integer(2));
        for unit in [Unit::LPow(2), Unit::LPow(-1), Unit::OneMinusLPow(2), Unit::OneMinusLPow(-3)] {
            let r = a.div_unit(unit).unwrap();
            assert_eq!(r.mul_unit(unit), a, "unit {unit:?}");
        }
    }

    #[test]
    fn inverse_if_unit_cases() {
        // Units: L^k, +/-(L^i - 1) products, and quotients of such.
        let units = [
            MotConst::lpow(5),
            MotConst::lpow(-2).neg(),
            MotConst::lpow(3).sub(&MotConst::one()),
            MotConst::one().sub(&MotConst::lpow(2)).mul(&MotConst::lpow(-1)),
            MotConst::lpow(4)
                .sub(&MotConst::one())
                .div_unit(Unit::OneMinusLPow(2))
                .unwrap(),
        ];
        for u in &units {
            let inv = u.inverse_if_unit().unwrap_or_else(|| panic!("unit expected: {u}"));
            assert!(u.mul(&inv).is_one(), "inverse of {u}");
            assert_eq!(inv.inverse_if_unit().unwrap(), *u);
        }
        // Non-units.
        let non_units = [
            MotConst::zero(),
            MotConst::integer(2),
            MotConst::lpow(1).add(&MotConst::integer(2)),
            MotConst::lpow(1).add(&MotConst::one()).add(&MotConst::symbol("T")),
        ];
        for v in &non_units {
            assert!(v.inverse_if_unit().is_none(), "non-unit {v}");
        }
    }

    #[test]
    fn canonical_equality() {
        // L/(L-1) = 1 + 1/(L-1)
        let lhs = l().div_unit(Unit::OneMinusLPow(1)).unwrap().neg();
        let rhs = MotConst::one().sub(&MotConst::one().div_unit(Unit::OneMinusLPow(1)).unwrap().neg().neg());
        // rhs = 1 - (-(1/(L-1))) = 1 + 1/(L-1) with 1/(L-1) = -(1/(1-L)).
        let one_over = MotConst::one().div_unit(Unit::OneMinusLPow(1)).unwrap().neg();
        let rhs2 = MotConst::one().add(&one_over);
        assert_eq!(lhs, rhs2);
        let _ = rhs;
    }

    #[test]
    fn distinct_factored_paths_reduce_identically() {
        // 1/((L^2-1)(L^3-1)) built two ways must agree bit-for-bit.
        let a = MotConst::one()
            .div_unit(Unit::OneMinusLPow(2))
            .unwrap()
            .div_unit(Unit::OneMinusLPow(3))
            .unwrap();
        // (L^2 - L + 1) / ((L-1)(L^6-1)) equals the same element.
        let num = MotConst::lpow(2).sub(&l()).add(&MotConst::one());
        let b = num
            .div_unit(Unit::OneMinusLPow(1))
            .unwrap()
            .div_unit(Unit::OneMinusLPow(6))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eval_q_geometric() {
        // L/(L-1) at q=2 -> 2, at q=3 -> 3/2
        let v = l().div_unit(Unit::OneMinusLPow(1)).unwrap().neg();
        let empty = BTreeMap::new();
        assert_eq!(v.eval_q(&q(2, 1), &empty).unwrap(), q(2, 1));
        assert_eq!(v.eval_q(&q(3, 1), &empty).unwrap(), q(3, 2));
    }

    #[test]
    fn eval_q_second_moment() {
        // L(L+1)/(L-1)^3 at q=2 equals 6 = sum n^2 2^-n.
        let num = l().mul(&l().add(&MotConst::one()));
        let v = num
            .div_unit(Unit::OneMinusLPow(1))
            .unwrap()
            .div_unit(Unit::OneMinusLPow(1))
            .unwrap()
            .div_unit(Unit::OneMinusLPow(1))
            .unwrap()
            .neg();
        let empty = BTreeMap::new();
        assert_eq!(v.eval_q(&q(2, 1), &empty).unwrap(), q(6, 1));
    }

    #[test]
    fn eval_q_rejects_bad_inputs() {
        let empty = BTreeMap::new();
        assert_eq!(l().eval_q(&q(1, 1), &empty), Err(CoeffError::QOutOfRange));
        let s = MotConst::symbol("Y");
        assert!(matches!(
            s.eval_q(&q(2, 1), &empty),
            Err(CoeffError::UnassignedSymbol(_))
        ));
    }

    #[test]
    fn reject_zero_unit() {
        assert!(MotConst::one().div_unit(Unit::OneMinusLPow(0)).is_err());
    }

    #[test]
    fn symbol_arithmetic() {
        let y = MotConst::symbol("Y");
        let expr = y.mul(&y).sub(&y.mul(&y));
        assert!(expr.is_zero());
        let mut assign = BTreeMap::new();
        assign.insert("Y".to_owned(), q(5, 1));
        let v = y.mul(&l()).eval_q(&q(2, 1), &assign).unwrap();
        assert_eq!(v, q(10, 1));
    }

    #[test]
    fn display_roundtrip_shapes() {
        let v = l().div_unit(Unit::OneMinusLPow(1)).unwrap().neg();
        assert_eq!(alloc::format!("{v}"), "L/(L^1-1)");
        let w = MotConst::lpow(-2);
        assert_eq!(alloc::format!("{w}"), "1/(L^2)");
        // Sum over n >= 0 of n*L^(-2n) = L^2/(L^2-1)^2.
        let s = MotConst::lpow(2)
            .div_unit(Unit::OneMinusLPow(2))
            .unwrap()
            .div_unit(Unit::OneMinusLPow(2))
            .unwrap();
        assert_eq!(alloc::format!("{s}"), "L^2/((L^2-1)^2)");
    }
}
