//! Certified numeric specialization `L -> q` (rational `q > 1`): pointwise
//! specialization of ring constants, brute-force partial sums with exact
//! rational tail bounds, and cross-checking of symbolic integrals against
//! the numeric oracle.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::coeffring::{CoeffError, MotConst};
use crate::confun::{canonicalize, CfError, ConFun};
use crate::integrate::{integrate_absolute, IntError, NonIntegrable};
use crate::presburger::Int;

/// Errors from numeric specialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecError {
    Coeff(CoeffError),
    Cf(CfError),
    NotIntegrable(Vec<NonIntegrable>),
    /// The requested specialization point is not in the admissible range
    /// `q > 1`.
    QOutOfRange,
    /// The tail bound failed to reach the requested tolerance within the
    /// iteration budget.
    NoConvergence,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Coeff(e) => write!(f, "{e}"),
            SpecError::Cf(e) => write!(f, "{e}"),
            SpecError::NotIntegrable(d) => {
                write!(f, "function is not summable ({} diagnostics)", d.len())
            }
            SpecError::QOutOfRange => write!(f, "specialization requires rational q > 1"),
            SpecError::NoConvergence => write!(f, "tail bound did not reach tolerance"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SpecError {}

impl From<CoeffError> for SpecError {
    fn from(e: CoeffError) -> Self {
        SpecError::Coeff(e)
    }
}

impl From<CfError> for SpecError {
    fn from(e: CfError) -> Self {
        SpecError::Cf(e)
    }
}

impl From<IntError> for SpecError {
    fn from(e: IntError) -> Self {
        match e {
            IntError::Cf(e) => SpecError::Cf(e),
            IntError::NotIntegrable(d) => SpecError::NotIntegrable(d),
            IntError::Divergent { power, lexp } => SpecError::NotIntegrable(vec![NonIntegrable {
                piece_index: 0,
                powers: vec![power],
                lexp: vec![lexp],
            }]),
        }
    }
}

/// Specialize a ring constant at `L = q` (requires `q > 1` and no free
/// class symbols).
pub fn spec_q(c: &MotConst, q: &BigRational) -> Result<BigRational, SpecError> {
    if *q <= BigRational::one() {
        return Err(SpecError::QOutOfRange);
    }
    Ok(c.eval_q(q, &BTreeMap::new())?)
}

/// Result of a certified brute-force summation: the exact partial sum over
/// the truncated charts, the per-axis truncation index, and an exact upper
/// bound on the absolute value of the omitted tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteSum {
    pub partial: BigRational,
    pub truncation: u64,
    pub tail_bound: BigRational,
}

/// `q^e` for integer `e` (possibly negative).
fn q_pow(q: &BigRational, e: Int) -> BigRational {
    let mut base = q.clone();
    let mut e = e;
    if e < 0 {
        base = base.recip();
        e = -e;
    }
    let mut acc = BigRational::one();
    let mut sq = base;
    let mut k = e as u64;
    while k > 0 {
        if k & 1 == 1 {
            acc *= &sq;
        }
        sq = &sq * &sq;
        k >>= 1;
    }
    acc
}

/// `n^a` as a rational.
fn n_pow(n: u64, a: u32) -> BigRational {
    BigRational::from(BigInt::from(n).pow(a))
}

/// An exact upper bound `K` with `n^a·t^n <= K·rho^n` for all `n >= 0`,
/// where `rho = (t+1)/2` and `0 <= t < 1`. Found by maximizing
/// `n^a·(t/rho)^n` via the (eventually decreasing) term ratio.
fn majorant_constant(a: u32, t: &BigRational) -> BigRational {
    let rho = (t + BigRational::one()) / BigRational::from(BigInt::from(2));
    let sigma = t / &rho;
    if a == 0 {
        return BigRational::one();
    }
    let mut best = BigRational::zero();
    let mut term = sigma.clone(); // n = 1
    let mut n: u64 = 1;
    loop {
        let value = n_pow(n, a) * &term;
        if value > best {
            best = value.clone();
        }
        // ratio g(n+1)/g(n) = ((n+1)/n)^a · sigma <= 2^a·sigma; once the
        // ratio is below 1 the sequence decreases forever.
        let ratio = n_pow(n + 1, a) / n_pow(n, a) * &sigma;
        if ratio < BigRational::one() {
            return best;
        }
        term *= &sigma;
        n += 1;
    }
}

/// Certified numeric value of the total sum of `f` at `L = q`: an exact
/// partial sum plus a rigorous tail bound `<= epsilon`.
pub fn brute_sum(
    f: &ConFun,
    q: &BigRational,
    epsilon: &BigRational,
) -> Result<BruteSum, SpecError> {
    if *q <= BigRational::one() {
        return Err(SpecError::QOutOfRange);
    }
    let canon = canonicalize(f, 0)?;
    // Collect (rational coefficient, per-axis (power, t = q^lexp)) per key,
    // verifying summability.
    struct Series {
        cq: BigRational,
        axes: Vec<(u32, BigRational)>,
    }
    let mut all: Vec<Series> = Vec::new();
    let mut diags = Vec::new();
    for (idx, piece) in canon.pieces.iter().enumerate() {
        for ((powers, lexp), coeff) in &piece.table {
            if lexp.iter().any(|b| *b >= 0) {
                diags.push(NonIntegrable {
                    piece_index: idx,
                    powers: powers.clone(),
                    lexp: lexp.clone(),
                });
                continue;
            }
            let cq = spec_q(&coeff.eval(&[])?, q)?;
            let axes = powers
                .iter()
                .zip(lexp)
                .map(|(a, b)| (*a, q_pow(q, *b)))
                .collect();
            all.push(Series { cq, axes });
        }
    }
    if !diags.is_empty() {
        return Err(SpecError::NotIntegrable(diags));
    }
    let two = BigRational::from(BigInt::from(2));
    let mut n: u64 = 16;
    while n <= (1 << 20) {
        let mut partial = BigRational::zero();
        let mut tail = BigRational::zero();
        for series in &all {
            let mut prod = BigRational::one();
            let mut fulls = Vec::new();
            let mut tails = Vec::new();
            for (a, t) in &series.axes {
                // exact partial sum over 0..=n
                let mut s = BigRational::zero();
                let mut tn = BigRational::one();
                for k in 0..=n {
                    if *a == 0 {
                        s += &tn;
                    } else {
                        s += n_pow(k, *a) * &tn;
                    }
                    tn *= t;
                }
                prod *= &s;
                let rho = (t + BigRational::one()) / &two;
                let kconst = majorant_constant(*a, t);
                // full series bound and tail bound from the majorant
                let geom = BigRational::one() / (BigRational::one() - &rho);
                fulls.push(&kconst * &geom);
                // sum_{k > n} K·rho^k = K·rho^(n+1)/(1-rho)
                let rho_n1 = {
                    let mut acc = BigRational::one();
                    for _ in 0..=n {
                        acc *= &rho;
                    }
                    acc
                };
                tails.push(kconst * rho_n1 * geom);
            }
            partial += &series.cq * prod;
            // complement of the box is covered by the union over axes of
            // {a_j > n}
            for j in 0..series.axes.len() {
                let mut bound = tails[j].clone();
                for (k, full) in fulls.iter().enumerate() {
                    if k != j {
                        bound *= full;
                    }
                }
                tail += series.cq.abs() * bound;
            }
        }
        if tail <= *epsilon {
            return Ok(BruteSum { partial, truncation: n, tail_bound: tail });
        }
        n *= 2;
    }
    Err(SpecError::NoConvergence)
}

/// Outcome of one cross-check run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Agree,
    Disagree,
    Error(String),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Agree => write!(f, "agree"),
            Verdict::Disagree => write!(f, "disagree"),
            Verdict::Error(msg) => write!(f, "error: {msg}"),
        }
    }
}

/// One row of a cross-check: symbolic integral specialized at `q` versus
/// the certified partial sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecReport {
    pub id: String,
    pub q: BigRational,
    pub symbolic_value: Option<BigRational>,
    pub partial_sum: Option<BigRational>,
    pub truncation: Option<u64>,
    pub tail_bound: Option<BigRational>,
    pub verdict: Verdict,
}

/// Cross-validate the symbolic total sum of `f` against the certified
/// numeric oracle at each `q`. Inadmissible `q` values yield an error row;
/// the run continues with the remaining entries.
pub fn crosscheck(
    id: &str,
    f: &ConFun,
    qs: &[BigRational],
    epsilon: &BigRational,
) -> Vec<SpecReport> {
    let symbolic = integrate_absolute(f);
    qs.iter()
        .map(|q| {
            let mut report = SpecReport {
                id: id.to_string(),
                q: q.clone(),
                symbolic_value: None,
                partial_sum: None,
                truncation: None,
                tail_bound: None,
                verdict: Verdict::Agree,
            };
            if *q <= BigRational::one() {
                report.verdict = Verdict::Error("q must be > 1".to_string());
                return report;
            }
            let sym = match &symbolic {
                Ok(c) => match spec_q(c, q) {
                    Ok(v) => v,
                    Err(e) => {
                        report.verdict = Verdict::Error(e.to_string());
                        return report;
                    }
                },
                Err(e) => {
                    report.verdict = Verdict::Error(e.to_string());
                    return report;
                }
            };
            report.symbolic_value = Some(sym.clone());
            match brute_sum(f, q, epsilon) {
                Ok(bs) => {
                    report.verdict = if (&sym - &bs.partial).abs() <= bs.tail_bound {
                        Verdict::Agree
                    } else {
                        Verdict::Disagree
                    };
                    report.partial_sum = Some(bs.partial);
                    report.truncation = Some(bs.truncation);
                    report.tail_bound = Some(bs.tail_bound);
                }
                Err(e) => {
                    report.verdict = Verdict::Error(e.to_string());
                }
            }
            report
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::confun::Term;
    use crate::presburger::{AffineForm, PresCell, PresSet};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn eps9() -> BigRational {
        BigRational::new(BigInt::from(1), BigInt::from(1_000_000_000u64))
    }

    fn naturals(dim: usize) -> PresSet {
        let mut cell = PresCell::universe(dim);
        for i in 0..dim {
            cell = cell.with_ineq(AffineForm::coordinate(dim, i));
        }
        PresSet::from_cell(cell)
    }

    fn geom_fun(a: u32, b: Int) -> ConFun {
        ConFun::zero(1).with_term(Term {
            support: naturals(1),
            coeff: MotConst::one(),
            powers: vec![a],
            lexp: vec![b],
        })
    }

    #[test]
    fn spec_q_guards() {
        assert_eq!(spec_q(&MotConst::lpow(3), &q(2, 1)).unwrap(), q(8, 1));
        assert!(matches!(spec_q(&MotConst::one(), &q(1, 1)), Err(SpecError::QOutOfRange)));
        assert!(matches!(spec_q(&MotConst::one(), &q(1, 2)), Err(SpecError::QOutOfRange)));
    }

    #[test]
    fn brute_sum_matches_known_values() {
        // sum 2^{-n} = 2 and sum n·2^{-n} = 2: the certified interval must
        // contain the true value.
        for (a, b, expected) in [(0u32, -1, q(2, 1)), (1, -1, q(2, 1)), (2, -1, q(6, 1)), (1, -2, q(4, 9))] {
            let f = geom_fun(a, b);
            let bs = brute_sum(&f, &q(2, 1), &eps9()).unwrap();
            assert!(bs.tail_bound <= eps9());
            assert!(
                (expected.clone() - &bs.partial).abs() <= bs.tail_bound,
                "a={a} b={b}: partial {} vs {}",
                bs.partial,
                expected
            );
        }
    }

    #[test]
    fn brute_sum_divergent_rejected() {
        let f = geom_fun(0, 0);
        assert!(matches!(brute_sum(&f, &q(2, 1), &eps9()), Err(SpecError::NotIntegrable(_))));
    }

    #[test]
    fn crosscheck_agrees() {
        let f = geom_fun(2, -1);
        let reports = crosscheck("t", &f, &[q(2, 1), q(3, 1), q(5, 2), q(1, 1)], &eps9());
        assert_eq!(reports.len(), 4);
        assert_eq!(reports[0].verdict, Verdict::Agree);
        assert_eq!(reports[1].verdict, Verdict::Agree);
        assert_eq!(reports[2].verdict, Verdict::Agree);
        assert!(matches!(reports[3].verdict, Verdict::Error(_)));
        // q = 2 symbolic value is 6
        assert_eq!(reports[0].symbolic_value, Some(q(6, 1)));
    }

    #[test]
    fn crosscheck_two_dim() {
        // L^{-m-n} on N²: total (L/(L-1))² = 4 at q = 2.
        let f = ConFun::zero(2).with_term(Term {
            support: naturals(2),
            coeff: MotConst::one(),
            powers: vec![0, 0],
            lexp: vec![-1, -1],
        });
        let reports = crosscheck("plane", &f, &[q(2, 1)], &eps9());
        assert_eq!(reports[0].verdict, Verdict::Agree);
        assert_eq!(reports[0].symbolic_value, Some(q(4, 1)));
    }
}
