//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing criteria as well.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;

use presmot_cli::corpus;
use presmot_cli::records::{self, Payload};
use presmot_cli::syntax::{parse, print};
use presmot_core::confun::{equal, is_null, witness_nonnull};
use presmot_core::integrate::{
    integrate_absolute, integrate_relative, is_integrable_fiberwise, sum_closed_univariate,
};
use presmot_core::presburger::rectilinearize_checked;
use presmot_core::specialize::{crosscheck, Verdict};
use presmot_core::{AffineForm, ConFun, MotConst, PresCell, PresSet, Projection, Term};

type Int = i128;

/// Prints the criterion's pass line on success, or a fail line if the test
/// body panics before `done()` is called.
struct Criterion {
    n: u32,
    label: &'static str,
    done: bool,
}

impl Criterion {
    fn start(n: u32, label: &'static str) -> Self {
        Criterion { n, label, done: false }
    }

    fn done(mut self) {
        self.done = true;
        println!("criterion {:2} ({}): pass", self.n, self.label);
    }
}

impl Drop for Criterion {
    fn drop(&mut self) {
        if !self.done {
            println!("criterion {:2} ({}): FAIL", self.n, self.label);
        }
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn no_symbols() -> BTreeMap<String, BigRational> {
    BTreeMap::new()
}

/// `x^a * L^(b*x)` on the standard orthant of `Z^1`.
fn monomial_on_nat(a: u32, b: Int) -> ConFun {
    let support = PresSet::from_cell(
        PresCell::universe(1).with_ineq(AffineForm::new(vec![1], 0)),
    );
    ConFun::zero(1).with_term(Term {
        support,
        coeff: MotConst::one(),
        powers: vec![a],
        lexp: vec![b],
    })
}

#[test]
fn criterion_01_nullity_soundness() {
    let c = Criterion::start(1, "nullity soundness");
    let t0 = Instant::now();
    for i in 0..200u64 {
        let dim = 1 + (i as usize % 3);
        let mut r = corpus::rng(1000 + i);
        let f = corpus::rand_confun(&mut r, dim, 6);
        let diff = f.sub(&f).unwrap();
        assert!(is_null(&diff).unwrap(), "f - f not null for seed {}", 1000 + i);
    }
    let elapsed = t0.elapsed();
    assert!(elapsed <= Duration::from_secs(60), "runtime {elapsed:?} exceeds 60s");
    c.done();
}

#[test]
fn criterion_02_nullity_completeness() {
    let c = Criterion::start(2, "nullity completeness vs evaluation");
    let mut nonnull = 0u32;
    for i in 0..120u64 {
        let dim = 1 + (i as usize % 3);
        let mut r = corpus::rng(3000 + i);
        let f = corpus::rand_confun(&mut r, dim, 5);
        if is_null(&f).unwrap() {
            assert_zero_on_box(&f, 12);
        } else {
            let p = witness_nonnull(&f, None)
                .unwrap()
                .unwrap_or_else(|| panic!("no witness for nonnull seed {}", 3000 + i));
            assert!(!f.eval(&p).unwrap().is_zero(), "witness evaluates to zero");
            nonnull += 1;
        }
    }
    assert!(nonnull >= 100, "only {nonnull} nonnull corpus functions");
    // Constructed null functions: c on S split as c on (S and T) + c on
    // (S minus T) and subtracted back, so nullity is not a syntactic merge.
    for i in 0..12u64 {
        let dim = 1 + (i as usize % 2);
        let mut r = corpus::rng(3500 + i);
        let s = PresSet::from_cell(corpus::rand_cell(&mut r, dim));
        let t = PresSet::from_cell(corpus::rand_cell(&mut r, dim));
        let coeff = corpus::rand_motconst(&mut r);
        let base = Term {
            support: s.clone(),
            coeff: coeff.clone(),
            powers: vec![1; dim],
            lexp: vec![0; dim],
        };
        let whole = ConFun::zero(dim).with_term(base.clone());
        let split = ConFun::zero(dim)
            .with_term(Term { support: s.intersect(&t).unwrap(), ..base.clone() })
            .with_term(Term { support: s.difference(&t).unwrap(), ..base });
        let diff = whole.sub(&split).unwrap();
        assert!(is_null(&diff).unwrap(), "split difference not null, seed {}", 3500 + i);
        assert_zero_on_box(&diff, 12);
    }
    c.done();
}

fn assert_zero_on_box(f: &ConFun, radius: Int) {
    let dim = f.dim;
    if dim == 0 {
        assert!(f.eval(&[]).unwrap().is_zero());
        return;
    }
    let mut p = vec![-radius; dim];
    loop {
        assert!(f.eval(&p).unwrap().is_zero(), "null function nonzero at {p:?}");
        let mut axis = dim;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if p[axis] < radius {
                p[axis] += 1;
                break;
            }
            p[axis] = -radius;
        }
    }
}

#[test]
fn criterion_03_rectilinearization() {
    let c = Criterion::start(3, "rectilinearization exactness");
    let t0 = Instant::now();
    for i in 0..20u64 {
        let dim = 1 + (i as usize % 3);
        let mut r = corpus::rng(4000 + i);
        let set = corpus::rand_set(&mut r, dim);
        // Box validation inside `rectilinearize_checked` enumerates
        // [-15,15]^R and checks exactly-one-piece coverage and injectivity.
        rectilinearize_checked(&set, 0, 15)
            .unwrap_or_else(|e| panic!("seed {}: {e}", 4000 + i));
    }
    let elapsed = t0.elapsed();
    assert!(elapsed <= Duration::from_secs(120), "runtime {elapsed:?} exceeds 120s");
    c.done();
}

#[test]
fn criterion_04_closed_form_sums() {
    let c = Criterion::start(4, "closed-form sums vs certified oracle");
    let qs = vec![rat(2, 1), rat(3, 1), rat(5, 2)];
    let eps = rat(1, 1_000_000_000);
    for a in 0..=6u32 {
        for b in [-1i128, -2, -3] {
            let f = monomial_on_nat(a, b);
            for report in crosscheck(&format!("a{a}b{b}"), &f, &qs, &eps) {
                assert_eq!(
                    report.verdict,
                    Verdict::Agree,
                    "a={a} b={b} q={}: {}",
                    report.q,
                    report.verdict
                );
            }
            // The closed form and the total integral must coincide.
            let closed = sum_closed_univariate(a, b).unwrap();
            let total = integrate_absolute(&f).unwrap();
            assert!(closed.sub(&total).is_zero());
        }
    }
    // Exact anchors.
    let anchors = [
        (0u32, -1i128, rat(2, 1), rat(2, 1)),  // sum 2^-n = 2
        (1, -1, rat(2, 1), rat(2, 1)),         // sum n*2^-n = 2
        (2, -1, rat(2, 1), rat(6, 1)),         // sum n^2*2^-n = 6
        (1, -1, rat(4, 1), rat(4, 9)),         // sum n*4^-n = 4/9
    ];
    for (a, b, q, expected) in anchors {
        let v = sum_closed_univariate(a, b)
            .unwrap()
            .eval_q(&q, &no_symbols())
            .unwrap();
        assert_eq!(v, expected, "anchor a={a} b={b} q={q}");
    }
    c.done();
}

#[test]
fn criterion_05_theorem2_equivalence() {
    let c = Criterion::start(5, "fiberwise integrability vs per-fiber decisions");
    let proj = Projection::new(2, 1);
    for i in 0..50u64 {
        let mut r = corpus::rng(5000 + i);
        let f = corpus::rand_fiber_base_fun(&mut r, 10, false);
        let global = is_integrable_fiberwise(&f, proj).unwrap();
        let mut per_fiber = true;
        for z in 0..=10i128 {
            let fz = corpus::fiber_restrict(&f, z);
            if !is_integrable_fiberwise(&fz, Projection::new(1, 0)).unwrap() {
                per_fiber = false;
            }
        }
        assert_eq!(global, per_fiber, "disagreement for seed {}", 5000 + i);
    }
    c.done();
}

#[test]
fn criterion_06_fubini() {
    let c = Criterion::start(6, "Fubini on the positive quadrant");
    let proj = Projection::new(2, 1);
    for i in 0..50u64 {
        let mut r = corpus::rng(6000 + i);
        let f = corpus::rand_integrable_plane_fun(&mut r);
        let first_x = integrate_absolute(&integrate_relative(&f, proj).unwrap()).unwrap();
        let swapped = f.permute(&[1, 0]).unwrap();
        let first_y = integrate_absolute(&integrate_relative(&swapped, proj).unwrap()).unwrap();
        assert!(
            first_x.sub(&first_y).is_zero(),
            "iterated sums differ for seed {}: {first_x} vs {first_y}",
            6000 + i
        );
    }
    c.done();
}

#[test]
fn criterion_07_pointwise_integral_contract() {
    let c = Criterion::start(7, "pointwise relative-integral contract");
    let proj = Projection::new(2, 1);
    let mut checked = 0u32;
    // The criterion-5 corpus (integrable members) plus forced-integrable
    // functions so the contract is exercised on at least 50 functions.
    let seeds = (0..50u64)
        .map(|i| (5000 + i, false))
        .chain((0..50u64).map(|i| (7000 + i, true)));
    for (seed, force) in seeds {
        let mut r = corpus::rng(seed);
        let f = corpus::rand_fiber_base_fun(&mut r, 10, force);
        if !is_integrable_fiberwise(&f, proj).unwrap() {
            continue;
        }
        let g = integrate_relative(&f, proj).unwrap();
        for z in 0..=10i128 {
            let lhs = g.eval(&[z]).unwrap();
            let rhs = integrate_absolute(&corpus::fiber_restrict(&f, z)).unwrap();
            assert!(
                lhs.sub(&rhs).is_zero(),
                "seed {seed} z={z}: relative integral gives {lhs}, fiber sum {rhs}"
            );
        }
        checked += 1;
    }
    assert!(checked >= 50, "only {checked} integrable functions exercised");
    c.done();
}

#[test]
fn criterion_08_projection_formula() {
    let c = Criterion::start(8, "projection formula under affine base maps");
    let proj = Projection::new(2, 1);
    let maps: [(Int, Int); 5] = [(1, 1), (1, -2), (2, 0), (2, 1), (3, -1)];
    for i in 0..20u64 {
        let mut r = corpus::rng(8000 + i);
        let f = corpus::rand_fiber_base_fun(&mut r, 10, true);
        let g = integrate_relative(&f, proj).unwrap();
        for (e, cst) in maps {
            let pulled = corpus::pullback_base(&f, e, cst);
            let lhs = integrate_relative(&pulled, proj).unwrap();
            let rhs = corpus::pullback_base(&g, e, cst);
            assert!(
                equal(&lhs, &rhs).unwrap(),
                "seed {} map z -> {e}z+{cst}: pullback and integration do not commute",
                8000 + i
            );
        }
    }
    c.done();
}

#[test]
fn criterion_09_coefficient_ring_suite() {
    let c = Criterion::start(9, "coefficient-ring axioms and eval_q homomorphism");
    let t0 = Instant::now();
    let q = rat(5, 2);
    let vars = no_symbols();
    let ev = |m: &MotConst| m.eval_q(&q, &vars).unwrap();
    for i in 0..1000u64 {
        let mut r = corpus::rng(9000 + i);
        let a = corpus::rand_motconst(&mut r);
        let b = corpus::rand_motconst(&mut r);
        let cc = corpus::rand_motconst(&mut r);
        // Ring axioms, checked through the canonical reduced representation.
        assert!(a.add(&b).sub(&b.add(&a)).is_zero());
        assert!(a.add(&b.add(&cc)).sub(&a.add(&b).add(&cc)).is_zero());
        assert!(a.mul(&b).sub(&b.mul(&a)).is_zero());
        assert!(a.mul(&b.mul(&cc)).sub(&a.mul(&b).mul(&cc)).is_zero());
        assert!(a.mul(&b.add(&cc)).sub(&a.mul(&b).add(&a.mul(&cc))).is_zero());
        assert!(a.sub(&a).is_zero());
        assert!(a.mul(&MotConst::one()).sub(&a).is_zero());
        // Canonical uniqueness: equal values have equal representations.
        assert_eq!(a.add(&b), b.add(&a));
        assert_eq!(format!("{}", a.add(&b)), format!("{}", b.add(&a)));
        // eval_q is a ring homomorphism.
        assert_eq!(ev(&a.add(&b)), ev(&a) + ev(&b));
        assert_eq!(ev(&a.mul(&b)), ev(&a) * ev(&b));
        // Units invert exactly.
        if let Some(inv) = a.inverse_if_unit() {
            assert!(a.mul(&inv).sub(&MotConst::one()).is_zero());
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed <= Duration::from_secs(10), "runtime {elapsed:?} exceeds 10s");
    c.done();
}

const GOLDEN_SOURCES: &[&str] = &[
    "{x in Z^1 : x >= 0}",
    "{(x,y) in Z^2 : x >= 0 and y >= 0 and x + y <= 7}",
    "{(x,y) in Z^2 : (x >= 1 or y >= 1) and not (x = y mod 2)}",
    "{(x,y,z1) in Z^3 : x - 2y + z1 >= -3 and z1 <= 4}",
    "x*L^(-2x) on {x in Z^1 : x >= 0}",
    "(x^2 + 3x)*L^(-x) on {x in Z^1 : x >= 1}",
    "(L^(-x-y) on {(x,y) in Z^2 : x >= 0 and y >= 0}) + (2*L^(-x) on {(x,y) in Z^2 : x >= y})",
    "L^2/((L^2-1)^2)",
    "1 - L^(-1)",
    "(L - 1)*(L + 1)",
];

#[test]
fn criterion_10_cli_round_trips() {
    let c = Criterion::start(10, "round-trips and deterministic reruns");
    // Parse/print identity on the golden corpus.
    for src in GOLDEN_SOURCES {
        let ast = parse(src).unwrap();
        let printed = print(&ast);
        let reparsed = parse(&printed).unwrap();
        assert_eq!(ast, reparsed, "parse/print not stable for {src}");
        assert_eq!(printed, print(&reparsed));
    }
    // Structured-record round-trips on lowered values.
    for (i, src) in GOLDEN_SOURCES.iter().enumerate() {
        let ast = parse(src).unwrap();
        let payload = if src.starts_with('{') {
            let sv = presmot_cli::lower::lower_set(&ast).unwrap();
            Payload::PresSet { vars: sv.vars, set: sv.set }
        } else if src.contains(" on ") {
            let fv = presmot_cli::lower::lower_fun(&ast).unwrap();
            Payload::ConFun { vars: fv.vars, fun: fv.fun }
        } else {
            Payload::MotConst(presmot_cli::lower::lower_ring(&ast).unwrap())
        };
        let line = records::to_line(&payload);
        let back = records::from_line(&line).unwrap();
        let line2 = records::to_line(&back);
        assert_eq!(line, line2, "record round-trip not byte-identical for source {i}");
    }
    // Deterministic byte-identical reruns of the binary.
    let bin = env!("CARGO_BIN_EXE_presmot");
    let cases: &[&[&str]] = &[
        &["canon", "x*L^(-2x) on {x in Z^1 : x >= 0}"],
        &["integrate", "x*L^(-2x) on {x in Z^1 : x >= 0}"],
        &[
            "null",
            "(L^(-x) on {x in Z^1 : x >= 0}) - (L^(-x) on {x in Z^1 : x >= 0})",
        ],
        &["--format", "structured", "canon", "L^(-x-y) on {(x,y) in Z^2 : x >= 0 and y >= 0}"],
        &["--format", "structured", "crosscheck", "x^2*L^(-x) on {x in Z^1 : x >= 0}"],
        &["rectilinearize", "{(x,y) in Z^2 : x >= 0 and y >= 0 and x + y <= 5}"],
    ];
    for args in cases {
        let run = |_: u32| {
            let out = std::process::Command::new(bin)
                .args(*args)
                .env("PRESMOT_THREADS", "1")
                .output()
                .expect("binary runs");
            (out.status.code(), out.stdout, out.stderr)
        };
        let first = run(0);
        let second = run(1);
        assert_eq!(first, second, "rerun of {args:?} not byte-identical");
        assert_ne!(first.0, Some(2), "{args:?} errored: {}", String::from_utf8_lossy(&first.2));
    }
    c.done();
}
