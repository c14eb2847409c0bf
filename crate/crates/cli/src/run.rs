//! Verb implementations shared by the binary and the test suite. Each verb
//! returns an exit code plus its full output: 0 = success / boolean true,
//! 1 = boolean false, 2 = error.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use presmot_core::confun::{canonicalize, equal, is_null, witness_nonnull};
use presmot_core::integrate::{
    integrability_diagnostics, integrate_absolute, integrate_relative,
};
use presmot_core::presburger::rectilinearize_checked;
use presmot_core::Projection;

use crate::lower::{lower_fun, lower_set, FunVal};
use crate::records::{self, Payload};
use crate::render;
use crate::syntax::{parse, print, SynError};

type Int = i128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone)]
pub struct Opts {
    /// Validation box radius for rectilinearization (`--box`).
    pub box_radius: Int,
    /// Specialization points (`--q`).
    pub qs: Vec<BigRational>,
    /// Certified tail tolerance (`--epsilon`).
    pub epsilon: BigRational,
    /// Search bound override for non-null witnesses (`--witness-bound`).
    pub witness_bound: Option<Int>,
    /// Fiber variable names (`--fibers`); everything else is base.
    pub fibers: Option<Vec<String>>,
    pub format: Format,
}

impl Default for Opts {
    fn default() -> Self {
        Opts {
            box_radius: 15,
            qs: vec![
                BigRational::from(BigInt::from(2)),
                BigRational::from(BigInt::from(3)),
                BigRational::new(5.into(), 2.into()),
            ],
            epsilon: BigRational::new(1.into(), 1_000_000_000.into()),
            witness_bound: None,
            fibers: None,
            format: Format::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit: i32,
    pub output: String,
}

fn ok(output: impl Into<String>) -> Outcome {
    Outcome { exit: 0, output: output.into() }
}

fn falsy(output: impl Into<String>) -> Outcome {
    Outcome { exit: 1, output: output.into() }
}

fn fail(output: impl Into<String>) -> Outcome {
    Outcome { exit: 2, output: output.into() }
}

fn fail_err(e: impl std::fmt::Display) -> Outcome {
    fail(format!("{e}"))
}

/// Parse worker-thread cap from `PRESMOT_THREADS` (default: available
/// parallelism, clamped to at least 1).
pub fn thread_cap() -> usize {
    std::env::var("PRESMOT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|n| *n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
}

/// Lower a function expression and move its fiber coordinates to the front.
/// Returns the reordered function, the reordered variable names, and the
/// number of base (parameter) coordinates.
fn prepare_fun(expr: &str, opts: &Opts) -> Result<(FunVal, usize), SynError> {
    let ast = parse(expr)?;
    let fv = lower_fun(&ast)?;
    let fibers: Vec<String> = match &opts.fibers {
        None => fv.vars.clone(),
        Some(list) => {
            for name in list {
                if !fv.vars.contains(name) {
                    return Err(SynError {
                        span: ast.span(),
                        message: format!("--fibers names unknown variable `{name}`"),
                    });
                }
            }
            list.clone()
        }
    };
    let mut order: Vec<usize> = Vec::new();
    for name in &fibers {
        order.push(fv.vars.iter().position(|v| v == name).unwrap());
    }
    for (i, v) in fv.vars.iter().enumerate() {
        if !fibers.contains(v) {
            order.push(i);
        }
    }
    let params = fv.vars.len() - fibers.len();
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return Ok((fv, params));
    }
    // order[new] = old; permute wants perm[old] = new.
    let mut perm = vec![0usize; order.len()];
    for (new, &old) in order.iter().enumerate() {
        perm[old] = new;
    }
    let fun = fv.fun.permute(&perm).map_err(|e| SynError {
        span: ast.span(),
        message: format!("{e:?}"),
    })?;
    let vars = order.iter().map(|&o| fv.vars[o].clone()).collect();
    Ok((FunVal { vars, fun }, params))
}

fn emit_fun(fv: &FunVal, opts: &Opts) -> String {
    match opts.format {
        Format::Text => render::render_fun(fv),
        Format::Structured => records::to_line(&Payload::ConFun {
            vars: fv.vars.clone(),
            fun: fv.fun.clone(),
        }),
    }
}

fn base_vars(fv: &FunVal, params: usize) -> Vec<String> {
    fv.vars[fv.vars.len() - params..].to_vec()
}

pub fn cmd_canon(expr: &str, opts: &Opts) -> Outcome {
    let (fv, params) = match prepare_fun(expr, opts) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    match canonicalize(&fv.fun, params) {
        Ok(c) => match opts.format {
            Format::Text => ok(render::render_canonical(&c)),
            Format::Structured => ok(records::to_line(&Payload::Canonical(c))),
        },
        Err(e) => fail(format!("{e:?}")),
    }
}

pub fn cmd_eval(expr: &str, at: &str, opts: &Opts) -> Outcome {
    let fv = match parse(expr).and_then(|a| lower_fun(&a)) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    let point: Result<Vec<Int>, _> =
        at.split(',').map(|s| s.trim().parse::<Int>()).collect();
    let point = match point {
        Ok(p) => p,
        Err(_) => return fail(format!("invalid point `{at}`: expected comma-separated integers")),
    };
    if point.len() != fv.vars.len() {
        return fail(format!(
            "point has {} coordinate(s), function has {}",
            point.len(),
            fv.vars.len()
        ));
    }
    match fv.fun.eval(&point) {
        Ok(v) => match opts.format {
            Format::Text => ok(format!("{v}")),
            Format::Structured => ok(records::to_line(&Payload::MotConst(v))),
        },
        Err(e) => fail(format!("{e:?}")),
    }
}

pub fn cmd_null(expr: &str, opts: &Opts) -> Outcome {
    let fv = match parse(expr).and_then(|a| lower_fun(&a)) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    match is_null(&fv.fun) {
        Ok(true) => ok("NULL"),
        Ok(false) => {
            let witness = witness_nonnull(&fv.fun, opts.witness_bound);
            match witness {
                Ok(Some(p)) => falsy(format!(
                    "NONNULL at ({})",
                    p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
                )),
                Ok(None) => falsy("NONNULL (no witness within bound)"),
                Err(e) => fail(format!("{e:?}")),
            }
        }
        Err(e) => fail(format!("{e:?}")),
    }
}

pub fn cmd_eq(expr1: &str, expr2: &str, _opts: &Opts) -> Outcome {
    let f = match parse(expr1).and_then(|a| lower_fun(&a)) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    let g = match parse(expr2).and_then(|a| lower_fun(&a)) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    if f.vars.len() != g.vars.len() {
        return fail(format!(
            "dimension mismatch: {} vs {} coordinate(s)",
            f.vars.len(),
            g.vars.len()
        ));
    }
    match equal(&f.fun, &g.fun) {
        Ok(true) => ok("EQUAL"),
        Ok(false) => falsy("NOT EQUAL"),
        Err(e) => fail(format!("{e:?}")),
    }
}

fn diag_line(powers: &[u32], lexp: &[Int]) -> String {
    let a = powers.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
    let b = lexp.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",");
    format!("(a,b)=({a},{b})")
}

pub fn cmd_integrable(expr: &str, opts: &Opts) -> Outcome {
    let (fv, params) = match prepare_fun(expr, opts) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    let proj = Projection::new(fv.fun.dim, params);
    match integrability_diagnostics(&fv.fun, proj) {
        Ok(diags) if diags.is_empty() => ok("INTEGRABLE"),
        Ok(diags) => {
            let mut lines = vec!["NOT INTEGRABLE".to_owned()];
            for d in diags {
                lines.push(format!(
                    "piece {}: {}",
                    d.piece_index,
                    diag_line(&d.powers, &d.lexp)
                ));
            }
            falsy(lines.join("\n"))
        }
        Err(e) => fail(format!("{e:?}")),
    }
}

pub fn cmd_integrate(expr: &str, opts: &Opts) -> Outcome {
    let (fv, params) = match prepare_fun(expr, opts) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    if params == 0 {
        match integrate_absolute(&fv.fun) {
            Ok(v) => match opts.format {
                Format::Text => ok(format!("{v}")),
                Format::Structured => ok(records::to_line(&Payload::MotConst(v))),
            },
            Err(e) => fail(format!("{e}")),
        }
    } else {
        let proj = Projection::new(fv.fun.dim, params);
        match integrate_relative(&fv.fun, proj) {
            Ok(g) => {
                let out = FunVal { vars: base_vars(&fv, params), fun: g };
                ok(emit_fun(&out, opts))
            }
            Err(e) => fail(format!("{e}")),
        }
    }
}

pub fn cmd_rectilinearize(expr: &str, opts: &Opts) -> Outcome {
    let sv = match parse(expr).and_then(|a| lower_set(&a)) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    match rectilinearize_checked(&sv.set, 0, opts.box_radius) {
        Ok(pieces) => match opts.format {
            Format::Text => {
                let mut lines = Vec::new();
                for (i, p) in pieces.iter().enumerate() {
                    lines.push(render::render_piece(p, i));
                }
                if lines.is_empty() {
                    lines.push("empty set: 0 pieces".to_owned());
                }
                ok(lines.join("\n"))
            }
            Format::Structured => {
                let lines: Vec<String> = pieces
                    .iter()
                    .enumerate()
                    .map(|(i, p)| records::to_line(&Payload::Text(render::render_piece(p, i))))
                    .collect();
                ok(lines.join("\n"))
            }
        },
        Err(e) => fail(format!("{e:?}")),
    }
}

pub fn cmd_specialize(expr: &str, opts: &Opts) -> Outcome {
    let (fv, params) = match prepare_fun(expr, opts) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    if params != 0 {
        return fail("specialize requires an absolute integral (no base variables)");
    }
    let total = match integrate_absolute(&fv.fun) {
        Ok(v) => v,
        Err(e) => return fail(format!("{e}")),
    };
    let mut lines = vec![format!("integral = {total}")];
    for q in &opts.qs {
        match total.eval_q(q, &BTreeMap::new()) {
            Ok(v) => {
                let vs = if v.denom() == &BigInt::one() {
                    format!("{}", v.numer())
                } else {
                    format!("{v}")
                };
                lines.push(format!("q={q}: {vs}"));
            }
            Err(e) => lines.push(format!("q={q}: error: {e:?}")),
        }
    }
    ok(lines.join("\n"))
}

pub fn cmd_crosscheck(expr: &str, opts: &Opts) -> Outcome {
    let (fv, params) = match prepare_fun(expr, opts) {
        Ok(v) => v,
        Err(e) => return fail_err(e),
    };
    if params != 0 {
        return fail("crosscheck requires an absolute integral (no base variables)");
    }
    let reports =
        presmot_core::specialize::crosscheck(expr, &fv.fun, &opts.qs, &opts.epsilon);
    let mut all_agree = true;
    let mut lines = Vec::new();
    for r in &reports {
        if !matches!(r.verdict, presmot_core::Verdict::Agree) {
            all_agree = false;
        }
        match opts.format {
            Format::Text => lines.push(render::render_report(r)),
            Format::Structured => lines.push(records::to_line(&Payload::SpecReport(
                records::SpecReportWire::from_report(r),
            ))),
        }
    }
    let out = lines.join("\n");
    if all_agree {
        ok(out)
    } else {
        falsy(out)
    }
}

/// Built-in smoke-test battery: grammar round-trips, serialization
/// round-trips, and numeric anchors.
pub fn cmd_selftest(opts: &Opts) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let check = |name: &str, result: bool, lines: &mut Vec<String>| {
        lines.push(format!("{} {name}", if result { "pass" } else { "FAIL" }));
        result
    };

    // Grammar round-trips.
    let mut all = true;
    for src in [
        "{ (x,y) in Z^2 : x >= 0 and x <= y }",
        "x^2 * L^(-x) on { x in Z^1 : x >= 0 }",
        "L^(x+1) - L*L^x on {x in Z^1: x>=0}",
        "(1 on {x in Z^1: x>=0}) + (L^x on {x in Z^1: x<0})",
    ] {
        let good = parse(src)
            .and_then(|a| parse(&print(&a)).map(|b| a == b))
            .unwrap_or(false);
        all &= good;
    }
    pass &= check("grammar round-trips", all, &mut lines);

    // Null example.
    let null_out = cmd_null("L^(x+1) - L*L^x on {x in Z^1: x>=0}", opts);
    pass &= check(
        "null example",
        null_out.exit == 0 && null_out.output == "NULL",
        &mut lines,
    );

    // Integrate anchor.
    let int_out = cmd_integrate("x*L^(-2x) on {x in Z^1: x>=0}", opts);
    pass &= check(
        "integrate anchor",
        int_out.exit == 0 && int_out.output == "L^2/((L^2-1)^2)",
        &mut lines,
    );

    // Non-integrable diagnostic.
    let ni = cmd_integrable("1 on {x in Z^1: x>=0}", opts);
    pass &= check(
        "integrability diagnostic",
        ni.exit == 1 && ni.output.contains("(a,b)=(0,0)"),
        &mut lines,
    );

    // Crosscheck anchor: sum of n^2 2^-n = 6.
    let cc = cmd_crosscheck("x^2 * L^(-x) on { x in Z^1 : x >= 0 }", opts);
    pass &= check("crosscheck agreement", cc.exit == 0, &mut lines);

    // Structured round-trip.
    let fv = lower_fun(&parse("x*L^(-2x) on {x in Z^1: x>=0}").unwrap()).unwrap();
    let line =
        records::to_line(&Payload::ConFun { vars: fv.vars.clone(), fun: fv.fun.clone() });
    let rt = records::from_line(&line)
        .map(|p| records::to_line(&p) == line)
        .unwrap_or(false);
    pass &= check("structured round-trip", rt, &mut lines);

    // Determinism: running a command twice yields identical bytes.
    let a = cmd_canon("x*L^(-2x) on {x in Z^1: x>=0}", opts);
    let b = cmd_canon("x*L^(-2x) on {x in Z^1: x>=0}", opts);
    pass &= check("deterministic output", a == b, &mut lines);

    if pass {
        ok(lines.join("\n"))
    } else {
        falsy(lines.join("\n"))
    }
}

/// Split a parallel workload of `n` items into at most `thread_cap()` chunks
/// and run `f` on every index, in worker threads. Used by box validation.
pub fn par_for_each(n: usize, f: impl Fn(usize) + Sync) {
    let workers = thread_cap().min(n.max(1));
    if workers <= 1 {
        for i in 0..n {
            f(i);
        }
        return;
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= n {
                    break;
                }
                f(i);
            });
        }
    });
}
