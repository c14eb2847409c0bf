//! Deterministic random corpora for the acceptance suite and `selftest`.
//! All generators are seeded ChaCha streams, so repeated runs are
//! byte-identical.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use presmot_core::{
    AffineForm, ConFun, Congruence, MotConst, PresCell, PresSet, Term, Unit,
};

type Int = i128;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random conjunction of up to 3 inequalities and up to 1 congruence with
/// small coefficients.
pub fn rand_cell(rng: &mut ChaCha8Rng, dim: usize) -> PresCell {
    // In dimension 3 and up the constraints are kept milder (unit
    // coefficients, at most 2 inequalities, mod-2 congruences) so the
    // cell-decomposition algorithms stay within the suite's time budgets.
    let tame = dim >= 3;
    let mut cell = PresCell::universe(dim);
    let n_ineq = rng.gen_range(0..=if tame { 2 } else { 3 });
    let (crange, krange) = if tame { (1, 2) } else { (2, 4) };
    for _ in 0..n_ineq {
        let coeffs: Vec<Int> = (0..dim).map(|_| rng.gen_range(-crange..=crange)).collect();
        let constant = rng.gen_range(-krange..=krange);
        cell = cell.with_ineq(AffineForm::new(coeffs, constant));
    }
    if rng.gen_bool(if tame { 0.2 } else { 0.4 }) {
        let modulus = if tame {
            2
        } else {
            *[2, 3, 4].iter().nth(rng.gen_range(0..3)).unwrap()
        };
        let coeffs: Vec<Int> = (0..dim)
            .map(|_| rng.gen_range(if tame { 0 } else { -1 }..=1))
            .collect();
        if coeffs.iter().any(|c| *c != 0) {
            let residue = rng.gen_range(0..modulus);
            cell = cell.with_cong(Congruence { coeffs, residue, modulus });
        }
    }
    cell
}

/// A random Presburger set: a small boolean combination of random cells.
pub fn rand_set(rng: &mut ChaCha8Rng, dim: usize) -> PresSet {
    let mut set = PresSet::from_cell(rand_cell(rng, dim));
    for _ in 0..rng.gen_range(0..=2) {
        let other = PresSet::from_cell(rand_cell(rng, dim));
        match rng.gen_range(0..3) {
            0 => set = set.union(&other).expect("same dimension"),
            1 => set = set.intersect(&other).expect("same dimension"),
            _ => set = set.difference(&other).expect("same dimension"),
        }
    }
    set
}

/// A random ring element with exponent degrees bounded by 4, optionally with
/// a cyclotomic-unit denominator.
pub fn rand_motconst(rng: &mut ChaCha8Rng) -> MotConst {
    let mut acc = MotConst::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let c = rng.gen_range(-5..=5);
        if c == 0 {
            continue;
        }
        let k = rng.gen_range(-4..=4);
        acc = acc.add(&MotConst::integer(c).mul(&MotConst::lpow(k)));
    }
    if acc.is_zero() {
        acc = MotConst::one();
    }
    if rng.gen_bool(0.3) {
        let i = rng.gen_range(1..=3);
        acc = acc.div_unit(Unit::OneMinusLPow(i)).expect("nonzero unit");
    }
    acc
}

/// A random constructible function over `Z^dim` with at most `max_terms`
/// terms.
pub fn rand_confun(rng: &mut ChaCha8Rng, dim: usize, max_terms: usize) -> ConFun {
    let mut f = ConFun::zero(dim);
    for _ in 0..rng.gen_range(1..=max_terms) {
        // Term supports are random cells (with an occasional two-cell
        // union); richer boolean combinations are exercised separately by
        // the set corpus.
        let mut support = PresSet::from_cell(rand_cell(rng, dim));
        if rng.gen_bool(0.2) {
            support = support
                .union(&PresSet::from_cell(rand_cell(rng, dim)))
                .expect("same dimension");
        }
        let coeff = rand_motconst(rng);
        let powers: Vec<u32> = (0..dim).map(|_| rng.gen_range(0..=2)).collect();
        let lexp: Vec<Int> = (0..dim).map(|_| rng.gen_range(-3..=3)).collect();
        f = f.with_term(Term { support, coeff, powers, lexp });
    }
    f
}

/// A random function on `Z x Z` (axis 0 = fiber `x`, axis 1 = base `z`) whose
/// support stays inside the engine's parametric-rectilinearization fragment:
/// fiber bounds are affine in `z` with matching slopes (constant fiber
/// width) or one-sided, and the base is clamped to `0 <= z <= z_max`.
pub fn rand_fiber_base_fun(rng: &mut ChaCha8Rng, z_max: Int, force_integrable: bool) -> ConFun {
    let mut f = ConFun::zero(2);
    for _ in 0..rng.gen_range(1..=3) {
        let mut cell = PresCell::universe(2)
            .with_ineq(AffineForm::new(vec![0, 1], 0))
            .with_ineq(AffineForm::new(vec![0, -1], z_max));
        let slope: Int = rng.gen_range(-2..=2);
        let lower: Int = rng.gen_range(-3..=3);
        // x >= slope*z + lower.
        cell = cell.with_ineq(AffineForm::new(vec![1, -slope], -lower));
        if rng.gen_bool(0.5) {
            // Bounded fiber: x <= slope*z + lower + width (same slope, so the
            // fiber cardinality is parameter-independent).
            let width: Int = rng.gen_range(0..=4);
            cell = cell.with_ineq(AffineForm::new(vec![-1, slope], lower + width));
        }
        if rng.gen_bool(0.35) {
            let modulus = if rng.gen_bool(0.5) { 2 } else { 3 };
            let zc: Int = rng.gen_range(-1..=1);
            cell = cell.with_cong(Congruence {
                coeffs: vec![1, zc],
                residue: rng.gen_range(0..modulus),
                modulus,
            });
        }
        let support = PresSet::from_cell(cell);
        let coeff = rand_motconst(rng);
        let powers = vec![rng.gen_range(0..=2), rng.gen_range(0..=1)];
        let lexp_x: Int = if force_integrable {
            rng.gen_range(-3..=-1)
        } else {
            rng.gen_range(-2..=1)
        };
        let lexp_z: Int = rng.gen_range(-2..=2);
        f = f.with_term(Term { support, coeff, powers, lexp: vec![lexp_x, lexp_z] });
    }
    f
}

/// A random integrable function on `N^2` (absolute: both axes are fibers).
pub fn rand_integrable_plane_fun(rng: &mut ChaCha8Rng) -> ConFun {
    let mut f = ConFun::zero(2);
    for _ in 0..rng.gen_range(1..=3) {
        let mut cell = PresCell::universe(2)
            .with_ineq(AffineForm::new(vec![1, 0], 0))
            .with_ineq(AffineForm::new(vec![0, 1], 0));
        if rng.gen_bool(0.4) {
            // Optional extra constraint coupling the axes. A lower bound
            // `x + y >= c` keeps every fiber an infinite ray in both
            // iteration orders; an upper coupling like `x <= y + c` would
            // create finite fibers of parameter-dependent size, which the
            // parametric decomposition deliberately rejects.
            let c = rng.gen_range(-4..=0);
            cell = cell.with_ineq(AffineForm::new(vec![1, 1], c));
        }
        if rng.gen_bool(0.3) {
            let modulus = if rng.gen_bool(0.5) { 2 } else { 3 };
            cell = cell.with_cong(Congruence {
                coeffs: vec![1, 1],
                residue: rng.gen_range(0..modulus),
                modulus,
            });
        }
        let support = PresSet::from_cell(cell);
        let coeff = rand_motconst(rng);
        let powers = vec![rng.gen_range(0..=2), rng.gen_range(0..=2)];
        let lexp = vec![rng.gen_range(-3..=-1), rng.gen_range(-3..=-1)];
        f = f.with_term(Term { support, coeff, powers, lexp });
    }
    f
}

/// Restrict `f` on `Z^dim` to the fiber over base value `z` (the base is the
/// last axis), producing a function on `Z^(dim-1)`.
pub fn fiber_restrict(f: &ConFun, z: Int) -> ConFun {
    let dim = f.dim;
    assert!(dim >= 1);
    let mut out = ConFun::zero(dim - 1);
    for t in &f.terms {
        // Substitute the base axis in every support atom.
        let mut cells = Vec::new();
        'cell: for cell in &t.support.cells {
            let mut ineqs = Vec::new();
            for fm in &cell.ineqs {
                let c = fm.coeffs[dim - 1];
                let coeffs = fm.coeffs[..dim - 1].to_vec();
                let constant = fm.constant + c * z;
                if coeffs.iter().all(|x| *x == 0) {
                    if constant < 0 {
                        continue 'cell;
                    }
                    continue;
                }
                ineqs.push(AffineForm::new(coeffs, constant));
            }
            let mut congs = Vec::new();
            for cg in &cell.congs {
                let c = cg.coeffs[dim - 1];
                let coeffs = cg.coeffs[..dim - 1].to_vec();
                let residue = (cg.residue - c * z).rem_euclid(cg.modulus);
                if coeffs.iter().all(|x| *x == 0) {
                    if residue != 0 {
                        continue 'cell;
                    }
                    continue;
                }
                congs.push(Congruence { coeffs, residue, modulus: cg.modulus });
            }
            let mut nc = PresCell::universe(dim - 1);
            for i in ineqs {
                nc = nc.with_ineq(i);
            }
            for c in congs {
                nc = nc.with_cong(c);
            }
            cells.push(nc);
        }
        if cells.is_empty() {
            continue;
        }
        let mut support = PresSet::empty(dim - 1);
        for c in cells {
            support = support.union(&PresSet::from_cell(c)).expect("same dimension");
        }
        // Monomial and exponential contribution of the pinned base axis.
        let mut coeff = t.coeff.clone();
        let zp = t.powers[dim - 1];
        if zp > 0 {
            coeff = coeff.mul(&MotConst::integer(z.pow(zp)));
            if z == 0 {
                continue;
            }
        }
        let bz = t.lexp[dim - 1];
        if bz != 0 {
            coeff = coeff.mul(&MotConst::lpow(
                i64::try_from(bz * z).expect("exponent fits in i64"),
            ));
        }
        out = out.with_term(Term {
            support,
            coeff,
            powers: t.powers[..dim - 1].to_vec(),
            lexp: t.lexp[..dim - 1].to_vec(),
        });
    }
    out
}

/// Pull back `f` (base = last axis `z`) along the affine base map
/// `z := e*z' + c`. Base monomials `z^a` expand binomially.
pub fn pullback_base(f: &ConFun, e: Int, c: Int) -> ConFun {
    let dim = f.dim;
    assert!(dim >= 1);
    let axis = dim - 1;
    let mut out = ConFun::zero(dim);
    for t in &f.terms {
        // Substitute in the support.
        let mut support = PresSet::empty(dim);
        for cell in &t.support.cells {
            let mut nc = PresCell::universe(dim);
            for fm in &cell.ineqs {
                let a = fm.coeffs[axis];
                let mut coeffs = fm.coeffs.clone();
                coeffs[axis] = a * e;
                nc = nc.with_ineq(AffineForm::new(coeffs, fm.constant + a * c));
            }
            for cg in &cell.congs {
                let a = cg.coeffs[axis];
                let mut coeffs = cg.coeffs.clone();
                coeffs[axis] = a * e;
                nc = nc.with_cong(Congruence {
                    coeffs,
                    residue: (cg.residue - a * c).rem_euclid(cg.modulus),
                    modulus: cg.modulus,
                });
            }
            support = support.union(&PresSet::from_cell(nc)).expect("same dimension");
        }
        // L^(b*z) becomes L^(b*e*z') * L^(b*c).
        let bz = t.lexp[axis];
        let mut base_coeff = t.coeff.clone();
        if bz != 0 && c != 0 {
            base_coeff = base_coeff.mul(&MotConst::lpow(
                i64::try_from(bz * c).expect("exponent fits in i64"),
            ));
        }
        let mut lexp = t.lexp.clone();
        lexp[axis] = bz * e;
        // z^a = (e*z' + c)^a = sum_j C(a,j) e^j c^(a-j) z'^j.
        let a = t.powers[axis];
        if a == 0 {
            out = out.with_term(Term {
                support,
                coeff: base_coeff,
                powers: t.powers.clone(),
                lexp,
            });
            continue;
        }
        let mut binom: Int = 1;
        for j in 0..=a {
            if j > 0 {
                binom = binom * Int::from(a - j + 1) / Int::from(j);
            }
            let scale = binom * e.pow(j) * c.pow(a - j);
            if scale == 0 {
                continue;
            }
            let mut powers = t.powers.clone();
            powers[axis] = j;
            out = out.with_term(Term {
                support: support.clone(),
                coeff: base_coeff.mul(&MotConst::integer(scale)),
                powers,
                lexp: lexp.clone(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = rand_confun(&mut rng(7), 2, 6);
        let b = rand_confun(&mut rng(7), 2, 6);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }

    #[test]
    fn fiber_restrict_matches_eval() {
        let mut r = rng(11);
        for _ in 0..20 {
            let f = rand_fiber_base_fun(&mut r, 10, false);
            for z in 0..=3 as Int {
                let g = fiber_restrict(&f, z);
                for x in -4..=4 as Int {
                    assert_eq!(
                        f.eval(&[x, z]).unwrap(),
                        g.eval(&[x]).unwrap(),
                        "fiber restriction mismatch at x={x}, z={z}"
                    );
                }
            }
        }
    }

    #[test]
    fn pullback_matches_eval() {
        let mut r = rng(13);
        for _ in 0..20 {
            let f = rand_confun(&mut r, 2, 4);
            let (e, c) = (r.gen_range(-2..=2), r.gen_range(-3..=3));
            let g = pullback_base(&f, e, c);
            for x in -3..=3 as Int {
                for z in -3..=3 as Int {
                    assert_eq!(
                        g.eval(&[x, z]).unwrap(),
                        f.eval(&[x, e * z + c]).unwrap(),
                        "pullback mismatch at x={x}, z={z}, e={e}, c={c}"
                    );
                }
            }
        }
    }
}
