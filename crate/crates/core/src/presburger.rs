//! Presburger-definable subsets of `Z^R` and piecewise-affine integer
//! functions: membership, Boolean algebra, Cooper quantifier elimination,
//! emptiness/finiteness decisions, bounded enumeration, and parametric
//! rectilinearization into affine images of orthants `N^r`.
//!
//! A set is a finite union of cells; a cell is a conjunction of affine
//! inequalities `coeffs·x + constant >= 0` and congruences
//! `coeffs·x ≡ residue (mod modulus)`. Coefficients are `i128`; inputs at
//! desk scale stay far from overflow.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Int = i128;
pub type Point = Vec<Int>;

/// Errors from set-level operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PresError {
    DimMismatch { expected: usize, got: usize },
    /// Input is outside the supported desk-scale envelope.
    Capability(String),
    /// Internal rectilinearization validation found a counterexample point.
    Validation { point: Point, detail: String },
    Internal(String),
}

impl fmt::Display for PresError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresError::DimMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            PresError::Capability(msg) => write!(f, "capability error: {msg}"),
            PresError::Validation { point, detail } => {
                write!(f, "rectilinearization validation failed at {point:?}: {detail}")
            }
            PresError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PresError {}

/// Integer affine form `coeffs·x + constant`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineForm {
    pub coeffs: Vec<Int>,
    pub constant: Int,
}

impl AffineForm {
    pub fn new(coeffs: Vec<Int>, constant: Int) -> Self {
        AffineForm { coeffs, constant }
    }

    pub fn constant_form(dim: usize, constant: Int) -> Self {
        AffineForm { coeffs: vec![0; dim], constant }
    }

    pub fn coordinate(dim: usize, axis: usize) -> Self {
        let mut coeffs = vec![0; dim];
        coeffs[axis] = 1;
        AffineForm { coeffs, constant: 0 }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, p: &[Int]) -> Int {
        debug_assert_eq!(p.len(), self.coeffs.len());
        self.coeffs.iter().zip(p).map(|(c, x)| c * x).sum::<Int>() + self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0)
    }

    pub fn neg(&self) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            constant: -self.constant,
        }
    }

    pub fn add(&self, other: &AffineForm) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            constant: self.constant + other.constant,
        }
    }

    pub fn scale(&self, k: Int) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            constant: self.constant * k,
        }
    }

    /// Compose with an affine map `x = M·y + d`: the result is a form over
    /// the `y` coordinates.
    pub fn compose(&self, matrix: &[Vec<Int>], offset: &[Int]) -> AffineForm {
        let ydim = matrix.first().map(|row| row.len()).unwrap_or(0);
        let mut coeffs = vec![0; ydim];
        let mut constant = self.constant;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            for (j, m) in matrix[i].iter().enumerate() {
                coeffs[j] += c * m;
            }
            constant += c * offset[i];
        }
        AffineForm { coeffs, constant }
    }
}

/// Congruence constraint `coeffs·x ≡ residue (mod modulus)`, modulus >= 2.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Congruence {
    pub coeffs: Vec<Int>,
    pub residue: Int,
    pub modulus: Int,
}

impl Congruence {
    pub fn holds(&self, p: &[Int]) -> bool {
        let v: Int = self.coeffs.iter().zip(p).map(|(c, x)| c * x).sum();
        (v - self.residue).rem_euclid(self.modulus) == 0
    }
}

/// Conjunction of inequalities and congruences over `Z^dim`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PresCell {
    pub dim: usize,
    pub ineqs: Vec<AffineForm>,
    pub congs: Vec<Congruence>,
}

/// Result of normalizing a cell in place.
enum NormalStatus {
    Ok,
    TriviallyEmpty,
}

impl PresCell {
    pub fn universe(dim: usize) -> Self {
        PresCell { dim, ineqs: Vec::new(), congs: Vec::new() }
    }

    pub fn with_ineq(mut self, form: AffineForm) -> Self {
        assert_eq!(form.dim(), self.dim);
        self.ineqs.push(form);
        self
    }

    pub fn with_cong(mut self, cong: Congruence) -> Self {
        assert_eq!(cong.coeffs.len(), self.dim);
        self.congs.push(cong);
        self
    }

    pub fn contains(&self, p: &[Int]) -> bool {
        self.ineqs.iter().all(|f| f.eval(p) >= 0) && self.congs.iter().all(|c| c.holds(p))
    }

    fn normalize(&mut self) -> NormalStatus {
        let mut ineqs = BTreeSet::new();
        for f in core::mem::take(&mut self.ineqs) {
            let g = f.coeffs.iter().fold(0 as Int, |acc, c| acc.gcd(c));
            if g == 0 {
                if f.constant < 0 {
                    return NormalStatus::TriviallyEmpty;
                }
                continue;
            }
            ineqs.insert(AffineForm {
                coeffs: f.coeffs.iter().map(|c| c / g).collect(),
                constant: Integer::div_floor(&f.constant, &g),
            });
        }
        self.ineqs = ineqs.into_iter().collect();
        let mut congs = BTreeSet::new();
        for c in core::mem::take(&mut self.congs) {
            debug_assert!(c.modulus >= 1);
            if c.modulus == 1 {
                continue;
            }
            let m = c.modulus;
            let coeffs: Vec<Int> = c.coeffs.iter().map(|x| x.rem_euclid(m)).collect();
            let residue = c.residue.rem_euclid(m);
            let g = coeffs.iter().fold(m, |acc, x| acc.gcd(x));
            if coeffs.iter().all(|x| *x == 0) {
                if residue != 0 {
                    return NormalStatus::TriviallyEmpty;
                }
                continue;
            }
            if g > 1 {
                if residue % g != 0 {
                    return NormalStatus::TriviallyEmpty;
                }
                let m2 = m / g;
                if m2 == 1 {
                    continue;
                }
                congs.insert(Congruence {
                    coeffs: coeffs.iter().map(|x| (x / g).rem_euclid(m2)).collect(),
                    residue: (residue / g).rem_euclid(m2),
                    modulus: m2,
                });
            } else {
                congs.insert(Congruence { coeffs, residue, modulus: m });
            }
        }
        self.congs = congs.into_iter().collect();
        NormalStatus::Ok
    }

    fn normalized(&self) -> Option<PresCell> {
        let mut c = self.clone();
        match c.normalize() {
            NormalStatus::Ok => Some(c),
            NormalStatus::TriviallyEmpty => None,
        }
    }

    /// Conjunction of two cells over the same dimension.
    fn intersect(&self, other: &PresCell) -> PresCell {
        let mut out = self.clone();
        out.ineqs.extend(other.ineqs.iter().cloned());
        out.congs.extend(other.congs.iter().cloned());
        out
    }

    /// Substitute `x_axis := form` (a form over the same ambient, with zero
    /// coefficient on `axis`), keeping the ambient dimension.
    fn substitute_axis(&self, axis: usize, form: &AffineForm) -> PresCell {
        debug_assert_eq!(form.coeffs[axis], 0);
        let sub_form = |f: &AffineForm| {
            let a = f.coeffs[axis];
            if a == 0 {
                return f.clone();
            }
            let mut out = f.add(&form.scale(a));
            out.coeffs[axis] = 0;
            out
        };
        PresCell {
            dim: self.dim,
            ineqs: self.ineqs.iter().map(sub_form).collect(),
            congs: self
                .congs
                .iter()
                .map(|c| {
                    let a = c.coeffs[axis];
                    if a == 0 {
                        return c.clone();
                    }
                    let mut coeffs = c.coeffs.clone();
                    coeffs[axis] = 0;
                    let mut residue = c.residue;
                    for (i, fc) in form.coeffs.iter().enumerate() {
                        coeffs[i] += a * fc;
                    }
                    residue -= a * form.constant;
                    Congruence { coeffs, residue, modulus: c.modulus }
                })
                .collect(),
        }
    }

    /// Drop a coordinate that no atom mentions.
    fn drop_axis(&self, axis: usize) -> PresCell {
        let strip = |v: &[Int]| {
            let mut out = Vec::with_capacity(v.len() - 1);
            for (i, c) in v.iter().enumerate() {
                if i != axis {
                    out.push(*c);
                }
            }
            out
        };
        PresCell {
            dim: self.dim - 1,
            ineqs: self
                .ineqs
                .iter()
                .map(|f| {
                    debug_assert_eq!(f.coeffs[axis], 0);
                    AffineForm { coeffs: strip(&f.coeffs), constant: f.constant }
                })
                .collect(),
            congs: self
                .congs
                .iter()
                .map(|c| {
                    debug_assert_eq!(c.coeffs[axis], 0);
                    Congruence { coeffs: strip(&c.coeffs), residue: c.residue, modulus: c.modulus }
                })
                .collect(),
        }
    }

    /// Complement as a union of pairwise-disjoint cells (first-violated-atom
    /// split).
    fn complement_cells(&self) -> Vec<PresCell> {
        let mut out = Vec::new();
        let mut prefix = PresCell::universe(self.dim);
        for f in &self.ineqs {
            // Branch: all earlier atoms hold, this inequality fails.
            let mut cell = prefix.clone();
            cell.ineqs.push(AffineForm {
                coeffs: f.coeffs.iter().map(|c| -c).collect(),
                constant: -f.constant - 1,
            });
            out.push(cell);
            prefix.ineqs.push(f.clone());
        }
        for c in &self.congs {
            for r in 0..c.modulus {
                if r == c.residue.rem_euclid(c.modulus) {
                    continue;
                }
                let mut cell = prefix.clone();
                cell.congs.push(Congruence {
                    coeffs: c.coeffs.clone(),
                    residue: r,
                    modulus: c.modulus,
                });
                out.push(cell);
            }
            prefix.congs.push(c.clone());
        }
        out
    }

    /// True iff the cell has no integer points (complete decision via
    /// quantifier elimination down to ground atoms).
    pub fn is_empty(&self) -> bool {
        let cell = match self.normalized() {
            Some(c) => c,
            None => return true,
        };
        if cell.dim == 0 {
            // normalized ground cell: all trivial atoms were discharged
            return false;
        }
        // Fast path 1: rational Fourier-Motzkin infeasibility certifies
        // emptiness without touching congruences.
        if cell.fm_infeasible() {
            return true;
        }
        // Fast path 2: a small sample box finds a witness point for most
        // nonempty cells, skipping the elimination entirely.
        if cell.dim <= 3 && cell.sample_nonempty(4) {
            return false;
        }
        let eliminated = eliminate_cell(&cell, cell.dim - 1);
        eliminated.iter().all(|c| c.is_empty())
    }

    /// True when the real relaxation of the inequalities alone is already
    /// infeasible (a sound but incomplete emptiness certificate), decided by
    /// Fourier-Motzkin elimination with 128-bit overflow checks.
    fn fm_infeasible(&self) -> bool {
        let mut rows: Vec<AffineForm> = self.ineqs.clone();
        for axis in (0..self.dim).rev() {
            let mut lower = Vec::new(); // coeff > 0
            let mut upper = Vec::new(); // coeff < 0
            let mut rest = Vec::new();
            for f in rows {
                match f.coeffs[axis].cmp(&0) {
                    core::cmp::Ordering::Greater => lower.push(f),
                    core::cmp::Ordering::Less => upper.push(f),
                    core::cmp::Ordering::Equal => rest.push(f),
                }
            }
            // Guard against quadratic blow-up; bail out (inconclusive).
            if lower.len() * upper.len() > 256 {
                return false;
            }
            for lo in &lower {
                for up in &upper {
                    let a = lo.coeffs[axis];
                    let b = -up.coeffs[axis];
                    let mut combined = AffineForm {
                        coeffs: alloc::vec![0; self.dim],
                        constant: 0,
                    };
                    let mut overflow = false;
                    for i in 0..self.dim {
                        let v = b
                            .checked_mul(lo.coeffs[i])
                            .and_then(|x| a.checked_mul(up.coeffs[i]).map(|y| (x, y)))
                            .and_then(|(x, y)| x.checked_add(y));
                        match v {
                            Some(v) => combined.coeffs[i] = v,
                            None => {
                                overflow = true;
                                break;
                            }
                        }
                    }
                    let c = b
                        .checked_mul(lo.constant)
                        .and_then(|x| a.checked_mul(up.constant).map(|y| (x, y)))
                        .and_then(|(x, y)| x.checked_add(y));
                    match (overflow, c) {
                        (false, Some(c)) => {
                            combined.constant = c;
                            combined.coeffs[axis] = 0;
                            rest.push(combined);
                        }
                        _ => return false,
                    }
                }
            }
            rows = rest;
        }
        rows.iter().any(|f| f.constant < 0)
    }

    /// Search the centered box of the given radius for a member point.
    fn sample_nonempty(&self, radius: Int) -> bool {
        let mut p = alloc::vec![-radius; self.dim];
        loop {
            if self.contains(&p) {
                return true;
            }
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    return false;
                }
                p[axis] += 1;
                if p[axis] <= radius {
                    break;
                }
                p[axis] = -radius;
                axis += 1;
            }
        }
    }
}

/// Finite union of cells over `Z^dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PresSet {
    pub dim: usize,
    pub cells: Vec<PresCell>,
}

/// Classification returned by [`PresSet::decide`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetSize {
    Empty,
    Finite(u64),
    Infinite,
}

impl PresSet {
    pub fn empty(dim: usize) -> Self {
        PresSet { dim, cells: Vec::new() }
    }

    pub fn universe(dim: usize) -> Self {
        PresSet { dim, cells: vec![PresCell::universe(dim)] }
    }

    pub fn from_cell(cell: PresCell) -> Self {
        PresSet { dim: cell.dim, cells: vec![cell] }
    }

    pub fn contains(&self, p: &[Int]) -> Result<bool, PresError> {
        if p.len() != self.dim {
            return Err(PresError::DimMismatch { expected: self.dim, got: p.len() });
        }
        Ok(self.cells.iter().any(|c| c.contains(p)))
    }

    fn check_dim(&self, other: &PresSet) -> Result<(), PresError> {
        if self.dim != other.dim {
            return Err(PresError::DimMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    pub fn union(&self, other: &PresSet) -> Result<PresSet, PresError> {
        self.check_dim(other)?;
        let mut cells = self.cells.clone();
        cells.extend(other.cells.iter().cloned());
        Ok(PresSet { dim: self.dim, cells })
    }

    pub fn intersect(&self, other: &PresSet) -> Result<PresSet, PresError> {
        self.check_dim(other)?;
        let mut cells = Vec::new();
        for a in &self.cells {
            for b in &other.cells {
                if let Some(c) = a.intersect(b).normalized() {
                    cells.push(c);
                }
            }
        }
        Ok(PresSet { dim: self.dim, cells })
    }

    pub fn complement(&self) -> PresSet {
        // Complement of a union = intersection of complements.
        let mut acc = PresSet::universe(self.dim);
        for cell in &self.cells {
            let comp = PresSet { dim: self.dim, cells: cell.complement_cells() };
            acc = acc.intersect(&comp).expect("same dim");
        }
        acc
    }

    pub fn difference(&self, other: &PresSet) -> Result<PresSet, PresError> {
        self.check_dim(other)?;
        Ok(self.intersect(&other.complement())?)
    }

    /// Existential projection along `axis` (Cooper elimination).
    pub fn eliminate(&self, axis: usize) -> Result<PresSet, PresError> {
        if axis >= self.dim {
            return Err(PresError::DimMismatch { expected: self.dim, got: axis });
        }
        let mut cells = Vec::new();
        for cell in &self.cells {
            if let Some(c) = cell.normalized() {
                cells.extend(eliminate_cell(&c, axis));
            }
        }
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for cell in cells {
            if let Some(c) = cell.normalized() {
                if seen.insert(c.clone()) {
                    out.push(c);
                }
            }
        }
        Ok(PresSet { dim: self.dim - 1, cells: out })
    }

    /// Drop cells with no integer points.
    pub fn prune_empty(&self) -> PresSet {
        PresSet {
            dim: self.dim,
            cells: self
                .cells
                .iter()
                .filter_map(|c| c.normalized())
                .filter(|c| !c.is_empty())
                .collect(),
        }
    }

    pub fn is_empty_set(&self) -> bool {
        self.cells.iter().all(|c| c.is_empty())
    }

    /// Semantic equality via emptiness of the symmetric difference.
    pub fn semantically_equal(&self, other: &PresSet) -> Result<bool, PresError> {
        Ok(self.difference(other)?.is_empty_set() && other.difference(self)?.is_empty_set())
    }

    /// Exact classification: empty, finite with cardinality, or infinite.
    pub fn decide(&self) -> SetSize {
        let pruned = self.prune_empty();
        if pruned.cells.is_empty() {
            return SetSize::Empty;
        }
        if pruned.dim == 0 {
            return SetSize::Finite(1);
        }
        for cell in &pruned.cells {
            let rows = ineq_rows(cell);
            if recession_ray(&rows, cell.dim).is_some() {
                return SetSize::Infinite;
            }
        }
        // All cells are bounded; enumerate and dedupe across cells.
        let mut points = BTreeSet::new();
        for cell in &pruned.cells {
            for p in enumerate_bounded_cell(cell) {
                points.insert(p);
            }
        }
        SetSize::Finite(points.len() as u64)
    }

    /// All points of the set inside the box, lexicographic order.
    pub fn enumerate_box(&self, bounds: &[(Int, Int)]) -> Result<Vec<Point>, PresError> {
        if bounds.len() != self.dim {
            return Err(PresError::DimMismatch { expected: self.dim, got: bounds.len() });
        }
        let mut out = Vec::new();
        let mut current = vec![0; self.dim];
        enumerate_rec(self, bounds, 0, &mut current, &mut out);
        Ok(out)
    }
}

fn enumerate_rec(
    set: &PresSet,
    bounds: &[(Int, Int)],
    axis: usize,
    current: &mut Point,
    out: &mut Vec<Point>,
) {
    if axis == set.dim {
        if set.cells.iter().any(|c| c.contains(current)) {
            out.push(current.clone());
        }
        return;
    }
    let (lo, hi) = bounds[axis];
    let mut x = lo;
    while x <= hi {
        current[axis] = x;
        enumerate_rec(set, bounds, axis + 1, current, out);
        x += 1;
    }
}

// ---------------------------------------------------------------------------
// Cooper quantifier elimination
// ---------------------------------------------------------------------------

/// Eliminate `exists x_axis` from a single (normalized) cell. Returns a
/// union of cells over `dim - 1` coordinates.
fn eliminate_cell(cell: &PresCell, axis: usize) -> Vec<PresCell> {
    let mentions = cell.ineqs.iter().any(|f| f.coeffs[axis] != 0)
        || cell.congs.iter().any(|c| c.coeffs[axis] != 0);
    if !mentions {
        return vec![cell.drop_axis(axis)];
    }
    // delta = lcm of |coefficients of the eliminated variable|.
    let mut delta: Int = 1;
    for f in &cell.ineqs {
        let a = f.coeffs[axis].abs();
        if a != 0 {
            delta = delta.lcm(&a);
        }
    }
    for c in &cell.congs {
        let a = c.coeffs[axis].abs();
        if a != 0 {
            delta = delta.lcm(&a);
        }
    }

    // Scaled atoms in y' = delta * x_axis. Bounds are forms over the other
    // coordinates (coefficient at `axis` is zero).
    let mut passthrough_ineqs: Vec<AffineForm> = Vec::new();
    let mut lowers: Vec<AffineForm> = Vec::new(); // y' >= L
    let mut uppers: Vec<AffineForm> = Vec::new(); // y' <= U
    for f in &cell.ineqs {
        let a = f.coeffs[axis];
        if a == 0 {
            passthrough_ineqs.push(f.clone());
        } else if a > 0 {
            // a·y + rest >= 0, scaled by delta/a: y' >= -(delta/a)·rest
            let mut rest = f.scale(delta / a);
            rest.coeffs[axis] = 0;
            lowers.push(rest.neg());
        } else {
            // a·y + rest >= 0 with a < 0: y' <= (delta/|a|)·rest
            let mut rest = f.scale(delta / (-a));
            rest.coeffs[axis] = 0;
            uppers.push(rest);
        }
    }
    // Congruences scaled to y' ≡ rho(x) (mod m).
    let mut passthrough_congs: Vec<Congruence> = Vec::new();
    let mut var_congs: Vec<(AffineForm, Int)> = Vec::new(); // (rho, modulus)
    for c in &cell.congs {
        let a = c.coeffs[axis];
        if a == 0 {
            passthrough_congs.push(c.clone());
            continue;
        }
        let s = delta / a.abs();
        let m = c.modulus * s;
        // s·a·y + s·(rest) ≡ s·r  (mod m); s·a = ±delta.
        let mut rest = AffineForm { coeffs: c.coeffs.clone(), constant: 0 }.scale(s);
        rest.coeffs[axis] = 0;
        let r = c.residue * s;
        // ±delta·y ≡ r - rest  =>  delta·y ≡ ±(r - rest)
        let rho = if a > 0 {
            AffineForm { coeffs: rest.coeffs.iter().map(|v| -v).collect(), constant: r }
        } else {
            AffineForm { coeffs: rest.coeffs.clone(), constant: -r }
        };
        var_congs.push((rho, m));
    }
    var_congs.push((AffineForm::constant_form(cell.dim, 0), delta));

    let mut period: Int = 1;
    for (_, m) in &var_congs {
        period = period.lcm(m);
    }

    let base = PresCell {
        dim: cell.dim,
        ineqs: passthrough_ineqs,
        congs: passthrough_congs,
    };

    let mut out = Vec::new();
    // Substitute y' := value into the scaled atoms.
    let mut push_subst = |value: &AffineForm, include_bounds: bool| {
        let mut c = base.clone();
        if include_bounds {
            for low in &lowers {
                c.ineqs.push(value.add(&low.neg()));
            }
            for up in &uppers {
                c.ineqs.push(up.add(&value.neg()));
            }
        } else {
            // -infinity branch: lower bounds absent, upper bounds true.
        }
        for (rho, m) in &var_congs {
            // value ≡ rho (mod m)
            let diff = value.add(&rho.neg());
            c.congs.push(Congruence {
                coeffs: diff.coeffs.clone(),
                residue: (-diff.constant).rem_euclid(*m),
                modulus: *m,
            });
        }
        out.push(c.drop_axis(axis));
    };

    if lowers.is_empty() {
        for j in 1..=period {
            push_subst(&AffineForm::constant_form(cell.dim, j), false);
        }
    } else {
        for low in &lowers {
            for j in 1..=period {
                // witness y' = (L - 1) + j
                let mut value = low.clone();
                value.constant += j - 1;
                push_subst(&value, true);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Rational linear algebra helpers
// ---------------------------------------------------------------------------

fn rat(n: Int) -> BigRational {
    BigRational::from(BigInt::from(n))
}

/// Nullspace basis of a rational matrix (rows are constraints d·row = 0).
fn nullspace(rows: &[Vec<BigRational>], dim: usize) -> Vec<Vec<BigRational>> {
    let mut mat: Vec<Vec<BigRational>> = rows.to_vec();
    let mut pivot_cols = Vec::new();
    let mut rank = 0usize;
    for col in 0..dim {
        let pivot = (rank..mat.len()).find(|&r| !mat[r][col].is_zero());
        let Some(p) = pivot else { continue };
        mat.swap(rank, p);
        let pv = mat[rank][col].clone();
        for v in mat[rank].iter_mut() {
            *v /= &pv;
        }
        for r in 0..mat.len() {
            if r != rank && !mat[r][col].is_zero() {
                let factor = mat[r][col].clone();
                for c2 in 0..dim {
                    let sub = &factor * &mat[rank][c2];
                    mat[r][c2] -= sub;
                }
            }
        }
        pivot_cols.push(col);
        rank += 1;
        if rank == mat.len() {
            break;
        }
    }
    let mut basis = Vec::new();
    let pivot_set: BTreeSet<usize> = pivot_cols.iter().copied().collect();
    for free in 0..dim {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![BigRational::zero(); dim];
        v[free] = BigRational::one();
        for (r, pc) in pivot_cols.iter().enumerate() {
            v[*pc] = -mat[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

/// Scale a rational direction to a primitive integer vector.
fn primitive_int(dir: &[BigRational]) -> Vec<Int> {
    let mut lcm = BigInt::one();
    for v in dir {
        lcm = lcm.lcm(v.denom());
    }
    let ints: Vec<BigInt> = dir.iter().map(|v| (v * BigRational::from(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for v in &ints {
        g = g.gcd(v);
    }
    if g.is_zero() {
        return vec![0; dir.len()];
    }
    ints.iter()
        .map(|v| {
            let q = v / &g;
            i128::try_from(&q).expect("primitive direction fits i128")
        })
        .collect()
}

fn ineq_rows(cell: &PresCell) -> Vec<Vec<Int>> {
    cell.ineqs.iter().map(|f| f.coeffs.clone()).collect()
}

/// A nonzero integer direction in the recession cone
/// `{d : row·d >= 0 for all rows}`, or `None` when the cone is trivial.
/// Directions are returned deterministically (smallest candidate in
/// lexicographic order among enumerated generators).
fn recession_ray(rows: &[Vec<Int>], dim: usize) -> Option<Vec<Int>> {
    lineality_ray(rows, dim).or_else(|| pointed_ray(rows, dim))
}

/// A nonzero integer direction of the lineality space `{d : rows·d = 0}`.
fn lineality_ray(rows: &[Vec<Int>], dim: usize) -> Option<Vec<Int>> {
    if dim == 0 {
        return None;
    }
    let rrows: Vec<Vec<BigRational>> =
        rows.iter().map(|r| r.iter().map(|c| rat(*c)).collect()).collect();
    let null = nullspace(&rrows, dim);
    if let Some(v) = null.first() {
        let d = primitive_int(v);
        if d.iter().any(|c| *c != 0) {
            return Some(d);
        }
    }
    None
}

/// A nonzero integer ray of the recession cone assuming trivial lineality.
fn pointed_ray(rows: &[Vec<Int>], dim: usize) -> Option<Vec<Int>> {
    if dim == 0 {
        return None;
    }
    let rrows: Vec<Vec<BigRational>> =
        rows.iter().map(|r| r.iter().map(|c| rat(*c)).collect()).collect();
    // Pointed cone: extreme rays lie on dim-1 linearly independent active
    // constraints. Enumerate subsets of that size.
    let k = dim - 1;
    let idxs: Vec<usize> = (0..rows.len()).collect();
    let mut candidates: Vec<Vec<Int>> = Vec::new();
    let satisfies = |d: &[Int]| rows.iter().all(|r| r.iter().zip(d).map(|(a, b)| a * b).sum::<Int>() >= 0);
    let visit = |subset: &[usize], candidates: &mut Vec<Vec<Int>>| {
        let sub: Vec<Vec<BigRational>> = subset.iter().map(|&i| rrows[i].clone()).collect();
        let null = nullspace(&sub, dim);
        if null.len() != 1 {
            return;
        }
        let d = primitive_int(&null[0]);
        if d.iter().all(|c| *c == 0) {
            return;
        }
        if satisfies(&d) {
            candidates.push(d);
        } else {
            let neg: Vec<Int> = d.iter().map(|c| -c).collect();
            if satisfies(&neg) {
                candidates.push(neg);
            }
        }
    };
    // Enumerate k-subsets.
    let mut stack: Vec<usize> = Vec::new();
    fn combos(
        idxs: &[usize],
        k: usize,
        start: usize,
        stack: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if stack.len() == k {
            f(stack);
            return;
        }
        for i in start..idxs.len() {
            stack.push(idxs[i]);
            combos(idxs, k, i + 1, stack, f);
            stack.pop();
        }
    }
    if k == 0 {
        // dim == 1: try ±1 directly.
        for d in [vec![1], vec![-1]] {
            if satisfies(&d) {
                candidates.push(d);
            }
        }
    } else {
        combos(&idxs, k, 0, &mut stack, &mut |s| visit(s, &mut candidates));
    }
    candidates.sort();
    candidates.dedup();
    candidates.into_iter().next()
}

/// Rational per-axis bounds of a cell's inequality polyhedron via
/// Fourier–Motzkin; `None` when the rational polyhedron is empty. Each axis
/// gets `(lower, upper)` with `None` denoting unbounded.
#[allow(clippy::type_complexity)]
fn rational_bounds(cell: &PresCell) -> Option<Vec<(Option<BigRational>, Option<BigRational>)>> {
    let dim = cell.dim;
    let mut out = Vec::with_capacity(dim);
    for axis in 0..dim {
        // rows: coeffs·x + const >= 0 as rational rows.
        let mut rows: Vec<(Vec<BigRational>, BigRational)> = cell
            .ineqs
            .iter()
            .map(|f| (f.coeffs.iter().map(|c| rat(*c)).collect(), rat(f.constant)))
            .collect();
        for elim in 0..dim {
            if elim == axis {
                continue;
            }
            let mut lows = Vec::new(); // coeff > 0
            let mut ups = Vec::new(); // coeff < 0
            let mut keep = Vec::new();
            for (c, k) in rows {
                if c[elim].is_zero() {
                    keep.push((c, k));
                } else if c[elim].is_positive() {
                    lows.push((c, k));
                } else {
                    ups.push((c, k));
                }
            }
            for (lc, lk) in &lows {
                for (uc, uk) in &ups {
                    // combine: |u_e|·low + l_e·up
                    let a = -uc[elim].clone(); // positive
                    let b = lc[elim].clone(); // positive
                    let coeffs: Vec<BigRational> = lc
                        .iter()
                        .zip(uc)
                        .map(|(x, y)| &a * x + &b * y)
                        .collect();
                    let k = &a * lk + &b * uk;
                    keep.push((coeffs, k));
                }
            }
            rows = keep;
        }
        let mut lo: Option<BigRational> = None;
        let mut hi: Option<BigRational> = None;
        for (c, k) in &rows {
            let a = &c[axis];
            if a.is_zero() {
                if k.is_negative() {
                    return None; // rationally infeasible
                }
            } else if a.is_positive() {
                let bound = -(k / a);
                lo = Some(match lo {
                    Some(cur) if cur >= bound => cur,
                    _ => bound,
                });
            } else {
                let bound = -(k / a);
                hi = Some(match hi {
                    Some(cur) if cur <= bound => cur,
                    _ => bound,
                });
            }
        }
        out.push((lo, hi));
    }
    Some(out)
}

/// Rational min/max of an affine form over a cell's inequality polyhedron
/// (via an auxiliary coordinate and Fourier–Motzkin).
fn form_range(cell: &PresCell, form: &AffineForm) -> (Option<BigRational>, Option<BigRational>) {
    let dim = cell.dim;
    let extend = |f: &AffineForm, t_coeff: Int| {
        let mut coeffs = f.coeffs.clone();
        coeffs.push(t_coeff);
        AffineForm { coeffs, constant: f.constant }
    };
    let mut aug = PresCell {
        dim: dim + 1,
        ineqs: cell.ineqs.iter().map(|f| extend(f, 0)).collect(),
        congs: Vec::new(),
    };
    // t = form(x)
    aug.ineqs.push(extend(&form.neg(), 1));
    aug.ineqs.push(extend(form, -1));
    match rational_bounds(&aug) {
        Some(bounds) => bounds[dim].clone(),
        None => (None, None),
    }
}

fn ceil_rat(r: &BigRational) -> Int {
    i128::try_from(&r.ceil().to_integer()).expect("bound fits i128")
}

fn floor_rat(r: &BigRational) -> Int {
    i128::try_from(&r.floor().to_integer()).expect("bound fits i128")
}

/// Enumerate all integer points of a cell known to be bounded.
fn enumerate_bounded_cell(cell: &PresCell) -> Vec<Point> {
    let Some(bounds) = rational_bounds(cell) else {
        return Vec::new();
    };
    let mut box_bounds = Vec::with_capacity(cell.dim);
    for (lo, hi) in bounds {
        let (Some(lo), Some(hi)) = (lo, hi) else {
            // Caller guarantees boundedness; an unbounded axis means the
            // rational relaxation is degenerate (empty of integer points).
            return Vec::new();
        };
        box_bounds.push((ceil_rat(&lo), floor_rat(&hi)));
    }
    let set = PresSet::from_cell(cell.clone());
    set.enumerate_box(&box_bounds).expect("dims match")
}

// ---------------------------------------------------------------------------
// Rectilinearization
// ---------------------------------------------------------------------------

/// Hard caps for the rectilinearization engine: fiber dimension and
/// parameter dimension.
pub const MAX_FIBER_DIM: usize = 3;
pub const MAX_PARAM_DIM: usize = 2;

/// Base data of a rectilinear piece: either a concrete offset point
/// (no parameters) or a parametric section `z -> d(z)` over a parameter
/// cell with finite fibers.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PieceBase {
    /// Concrete offset `d` in `Z^R`.
    Point(Vec<Int>),
    /// Parameter cell over `Z^s` with affine offsets `d_i(z)` for the `R`
    /// fiber coordinates.
    Param { cell: PresCell, offset: Vec<AffineForm> },
}

/// One piece of a rectilinearization: the affine injection
/// `theta(a, z) = M·a + d(z)` on `N^r` (fiber part), with base data
/// describing `d` and the parameter cell.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RectPiece {
    /// Number of free N-coordinates `r`.
    pub free_dims: usize,
    /// `R x r` integer matrix: fiber coordinates of theta.
    pub matrix: Vec<Vec<Int>>,
    pub base: PieceBase,
    /// Box radius up to which the partition/injectivity contract has been
    /// verified by enumeration (0 when unvalidated).
    pub checked_radius: Int,
}

impl RectPiece {
    pub fn fiber_dim(&self) -> usize {
        self.matrix.len()
    }

    /// Evaluate the offset at a base point (empty slice when concrete).
    pub fn offset_at(&self, z: &[Int]) -> Option<Vec<Int>> {
        match &self.base {
            PieceBase::Point(d) => Some(d.clone()),
            PieceBase::Param { cell, offset } => {
                if !cell.contains(z) {
                    return None;
                }
                Some(offset.iter().map(|f| f.eval(z)).collect())
            }
        }
    }

    /// Solve `theta(a, z) = p` for `a` in `N^r`; `p` is split into fiber
    /// part and base part by the caller.
    pub fn preimage(&self, fiber: &[Int], z: &[Int]) -> Option<Vec<Int>> {
        let d = self.offset_at(z)?;
        let rhs: Vec<Int> = fiber.iter().zip(&d).map(|(x, o)| x - o).collect();
        let a = solve_integer(&self.matrix, &rhs)?;
        if a.iter().all(|v| *v >= 0) {
            Some(a)
        } else {
            None
        }
    }
}

/// Solve `M·a = rhs` exactly; `None` when no solution or non-integer. The
/// matrix must have full column rank (guaranteed by construction).
pub fn solve_integer(matrix: &[Vec<Int>], rhs: &[Int]) -> Option<Vec<Int>> {
    let rows = matrix.len();
    let cols = matrix.first().map(|r| r.len()).unwrap_or(0);
    if cols == 0 {
        return if rhs.iter().all(|v| *v == 0) { Some(Vec::new()) } else { None };
    }
    let mut aug: Vec<Vec<BigRational>> = (0..rows)
        .map(|i| {
            let mut row: Vec<BigRational> = matrix[i].iter().map(|c| rat(*c)).collect();
            row.push(rat(rhs[i]));
            row
        })
        .collect();
    let mut rank = 0usize;
    let mut pivots = Vec::new();
    for col in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !aug[r][col].is_zero()) else {
            return None; // rank-deficient matrix: construction bug
        };
        aug.swap(rank, p);
        let pv = aug[rank][col].clone();
        for v in aug[rank].iter_mut() {
            *v /= &pv;
        }
        for r in 0..rows {
            if r != rank && !aug[r][col].is_zero() {
                let factor = aug[r][col].clone();
                for c2 in 0..=cols {
                    let sub = &factor * &aug[rank][c2];
                    aug[r][c2] -= sub;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    // Consistency of the remaining rows.
    for r in rank..rows {
        if !aug[r][cols].is_zero() {
            return None;
        }
    }
    let mut a = vec![BigRational::zero(); cols];
    for (r, col) in pivots.iter().enumerate() {
        a[*col] = aug[r][cols].clone();
    }
    let mut out = Vec::with_capacity(cols);
    for v in a {
        if !v.denom().is_one() {
            return None;
        }
        out.push(i128::try_from(&v.to_integer()).expect("solution fits i128"));
    }
    Some(out)
}

/// Partition `X ⊂ Z^R × Z^s` (last `params` coordinates are parameters)
/// into rectilinear pieces. See the module docs for the strategy: disjoint
/// cells, sign-orthant split, congruence substitution, then recursive
/// peeling of recession rays down to finite leaves.
pub fn rectilinearize(set: &PresSet, params: usize) -> Result<Vec<RectPiece>, PresError> {
    if params > set.dim {
        return Err(PresError::DimMismatch { expected: set.dim, got: params });
    }
    let fiber = set.dim - params;
    if fiber > MAX_FIBER_DIM || params > MAX_PARAM_DIM {
        return Err(PresError::Capability(alloc::format!(
            "rectilinearization supports fiber dim <= {MAX_FIBER_DIM} and parameter dim <= {MAX_PARAM_DIM}, got {fiber} + {params}"
        )));
    }
    let mut pieces = Vec::new();
    for cell in disjoint_cells(set) {
        rectilinearize_cell(&cell, fiber, params, &mut pieces)?;
    }
    Ok(pieces)
}

/// Rectilinearize and validate the partition/injectivity contract by
/// exhaustive enumeration on the centered box of the given radius.
pub fn rectilinearize_checked(
    set: &PresSet,
    params: usize,
    radius: Int,
) -> Result<Vec<RectPiece>, PresError> {
    let mut pieces = rectilinearize(set, params)?;
    validate_rectilinearization(set, &pieces, params, radius)?;
    for p in &mut pieces {
        p.checked_radius = radius;
    }
    Ok(pieces)
}

/// Make the union's cells pairwise disjoint by subtracting earlier cells in
/// list order.
fn disjoint_cells(set: &PresSet) -> Vec<PresCell> {
    let mut out: Vec<PresCell> = Vec::new();
    let mut earlier: Vec<PresCell> = Vec::new();
    for cell in &set.cells {
        let mut fragments = vec![cell.clone()];
        for prev in &earlier {
            let mut next = Vec::new();
            for frag in fragments {
                for comp in prev.complement_cells() {
                    if let Some(c) = frag.intersect(&comp).normalized() {
                        if !c.is_empty() {
                            next.push(c);
                        }
                    }
                }
            }
            fragments = next;
        }
        out.extend(fragments);
        earlier.push(cell.clone());
    }
    out
}

fn rectilinearize_cell(
    cell: &PresCell,
    fiber: usize,
    params: usize,
    pieces: &mut Vec<RectPiece>,
) -> Result<(), PresError> {
    if fiber == 0 {
        // Degenerate fiber: one piece with r = 0 per (nonempty) cell.
        if cell.is_empty() {
            return Ok(());
        }
        if params == 0 {
            pieces.push(RectPiece {
                free_dims: 0,
                matrix: Vec::new(),
                base: PieceBase::Point(Vec::new()),
                checked_radius: 0,
            });
        } else {
            pieces.push(RectPiece {
                free_dims: 0,
                matrix: Vec::new(),
                base: PieceBase::Param { cell: cell.clone(), offset: Vec::new() },
                checked_radius: 0,
            });
        }
        return Ok(());
    }
    let Some(cell) = cell.normalized() else { return Ok(()) };
    let mut leaves = Vec::new();
    peel(&cell, fiber, Vec::new(), &mut leaves)?;
    for (cols, leaf) in leaves {
        emit_leaf_pieces(&leaf, fiber, params, &cols, pieces)?;
    }
    Ok(())
}

/// Recursive peeling: split off recession-ray directions of the fiber part
/// until the remaining leaves have trivial fiber recession cone. Each leaf
/// is returned with the ordered list of peeled columns. Lineality directions
/// are first broken by a coordinate hyperplane split so that every peeled
/// ray has finite backward depth.
fn peel(
    cell: &PresCell,
    fiber: usize,
    cols: Vec<Vec<Int>>,
    out: &mut Vec<(Vec<Vec<Int>>, PresCell)>,
) -> Result<(), PresError> {
    let Some(cell) = cell.normalized() else { return Ok(()) };
    if cell.is_empty() {
        return Ok(());
    }
    let fiber_rows: Vec<Vec<Int>> = cell.ineqs.iter().map(|f| f.coeffs[..fiber].to_vec()).collect();
    if let Some(line) = lineality_ray(&fiber_rows, fiber) {
        // Split along a coordinate hyperplane transverse to the lineality
        // direction; each half's lineality space is strictly smaller.
        let axis = (0..fiber).find(|i| line[*i] != 0).expect("nonzero direction");
        let mut nonneg = cell.clone();
        nonneg.ineqs.push(AffineForm::coordinate(cell.dim, axis));
        let mut negative = cell.clone();
        negative.ineqs.push(AffineForm {
            coeffs: AffineForm::coordinate(cell.dim, axis).neg().coeffs,
            constant: -1,
        });
        peel(&nonneg, fiber, cols.clone(), out)?;
        peel(&negative, fiber, cols, out)?;
        return Ok(());
    }
    let Some(ray) = pointed_ray(&fiber_rows, fiber) else {
        out.push((cols, cell));
        return Ok(());
    };
    // Scale the ray so translation by it preserves every congruence.
    let mut scale: Int = 1;
    for cg in &cell.congs {
        let s: Int = cg.coeffs[..fiber].iter().zip(&ray).map(|(a, b)| a * b).sum();
        scale = scale.lcm(&(cg.modulus / cg.modulus.gcd(&s)));
    }
    let ray: Vec<Int> = ray.iter().map(|c| c * scale).collect();
    if cols.len() >= fiber {
        return Err(PresError::Internal(
            "peeled more directions than fiber dimensions".into(),
        ));
    }
    // P' = P \ (P + v): branch on the first inequality violated at u - v.
    let mut earlier: Vec<AffineForm> = Vec::new();
    for f in &cell.ineqs {
        let fdot: Int = f.coeffs[..fiber].iter().zip(&ray).map(|(a, b)| a * b).sum();
        if fdot <= 0 {
            continue;
        }
        let mut branch = cell.clone();
        // f(u - v) <= -1
        branch.ineqs.push(AffineForm {
            coeffs: f.coeffs.iter().map(|c| -c).collect(),
            constant: fdot - f.constant - 1,
        });
        // earlier shifted inequalities hold
        for e in &earlier {
            branch.ineqs.push(e.clone());
        }
        let mut next_cols = cols.clone();
        next_cols.push(ray.clone());
        peel(&branch, fiber, next_cols, out)?;
        // record f(u - v) >= 0 for later branches
        let mut shifted = f.clone();
        shifted.constant -= fdot;
        earlier.push(shifted);
    }
    Ok(())
}

/// Turn one peel leaf into rectilinear pieces in original coordinates.
fn emit_leaf_pieces(
    leaf: &PresCell,
    fiber: usize,
    params: usize,
    cols: &[Vec<Int>],
    pieces: &mut Vec<RectPiece>,
) -> Result<(), PresError> {
    let r = cols.len();
    // R x r matrix from columns.
    let matrix: Vec<Vec<Int>> = (0..fiber)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect();
    if params == 0 {
        for w in enumerate_bounded_cell(leaf) {
            pieces.push(RectPiece {
                free_dims: r,
                matrix: matrix.clone(),
                base: PieceBase::Point(w),
                checked_radius: 0,
            });
        }
    } else {
        for (zcell, forms) in leaf_sections(leaf, fiber, params)? {
            pieces.push(RectPiece {
                free_dims: r,
                matrix: matrix.clone(),
                base: PieceBase::Param { cell: zcell, offset: forms },
                checked_radius: 0,
            });
        }
    }
    Ok(())
}

/// Decompose a leaf with trivial fiber recession cone into affine sections
/// `w = G·z + h` over parameter cells. Supported when fiber variables can be
/// resolved one at a time against parameter-only bounds with constant width;
/// otherwise a capability error is raised.
#[allow(clippy::type_complexity)]
fn leaf_sections(
    leaf: &PresCell,
    fiber: usize,
    params: usize,
) -> Result<Vec<(PresCell, Vec<AffineForm>)>, PresError> {
    let mut out = Vec::new();
    let forms: Vec<Option<AffineForm>> = vec![None; fiber];
    sections_rec(leaf.clone(), fiber, params, forms, &mut out)?;
    Ok(out)
}

fn sections_rec(
    cell: PresCell,
    fiber: usize,
    params: usize,
    forms: Vec<Option<AffineForm>>,
    out: &mut Vec<(PresCell, Vec<AffineForm>)>,
) -> Result<(), PresError> {
    let Some(cell) = cell.normalized() else { return Ok(()) };
    if cell.is_empty() {
        return Ok(());
    }
    let unresolved: Vec<usize> = (0..fiber).filter(|i| forms[*i].is_none()).collect();
    if unresolved.is_empty() {
        // Project down to the parameter coordinates.
        let mut zcell = cell.clone();
        for i in (0..fiber).rev() {
            debug_assert!(zcell.ineqs.iter().all(|f| f.coeffs[i] == 0));
            zcell = zcell.drop_axis(i);
        }
        let zforms: Vec<AffineForm> = forms
            .into_iter()
            .map(|f| {
                let f = f.unwrap();
                AffineForm { coeffs: f.coeffs[fiber..].to_vec(), constant: f.constant }
            })
            .collect();
        debug_assert_eq!(zforms.len(), fiber);
        debug_assert!(zforms.iter().all(|f| f.dim() == params));
        out.push((zcell, zforms));
        return Ok(());
    }
    // Pick a fiber variable whose bounds and congruences involve no other
    // unresolved fiber variable.
    let pick = unresolved.iter().copied().find(|&i| {
        let free_of_others = |coeffs: &[Int]| {
            coeffs[i] == 0 || unresolved.iter().all(|&j| j == i || coeffs[j] == 0)
        };
        cell.ineqs.iter().all(|f| free_of_others(&f.coeffs))
            && cell.congs.iter().all(|c| free_of_others(&c.coeffs))
    });
    let Some(var) = pick else {
        return Err(PresError::Capability(
            "coupled bounded fiber variables in parametric rectilinearization".into(),
        ));
    };
    // Gather integer-affine lower/upper bounds for w_var over z.
    let mut lowers: Vec<AffineForm> = Vec::new();
    let mut uppers: Vec<AffineForm> = Vec::new();
    let mut rest_atoms: Vec<AffineForm> = Vec::new();
    for f in &cell.ineqs {
        let a = f.coeffs[var];
        if a == 0 {
            rest_atoms.push(f.clone());
            continue;
        }
        let mut rest = f.clone();
        rest.coeffs[var] = 0;
        let aa = a.abs();
        if aa > 1 {
            // ceil/floor of rest/aa must stay integer-affine.
            let divisible = rest.coeffs.iter().all(|c| c % aa == 0);
            if !divisible {
                return Err(PresError::Capability(
                    "non-unimodular parametric fiber bound".into(),
                ));
            }
        }
        if a > 0 {
            // a·w + rest >= 0  =>  w >= ceil(-rest/a)
            let mut b = AffineForm {
                coeffs: rest.coeffs.iter().map(|c| -c / aa).collect(),
                constant: 0,
            };
            // ceil(-k/a) = -floor(k/a)
            b.constant = -Integer::div_floor(&rest.constant, &aa);
            lowers.push(b);
        } else {
            // w <= floor(rest/|a|)
            let b = AffineForm {
                coeffs: rest.coeffs.iter().map(|c| c / aa).collect(),
                constant: Integer::div_floor(&rest.constant, &aa),
            };
            uppers.push(b);
        }
    }
    if lowers.is_empty() || uppers.is_empty() {
        return Err(PresError::Internal(
            "leaf fiber variable missing a bound despite trivial recession cone".into(),
        ));
    }
    // Congruences on the variable: cx·x ≡ g(z) (mod m).
    let var_congs: Vec<(Int, AffineForm, Int)> = cell
        .congs
        .iter()
        .filter(|c| c.coeffs[var] != 0)
        .map(|c| {
            let mut g = AffineForm {
                coeffs: c.coeffs.iter().map(|v| -v).collect(),
                constant: c.residue,
            };
            g.coeffs[var] = 0;
            (c.coeffs[var], g, c.modulus)
        })
        .collect();
    // Branch over which lower bound is maximal and which upper is minimal.
    for (li, low) in lowers.iter().enumerate() {
        for (ui, up) in uppers.iter().enumerate() {
            let mut tie_conds: Vec<AffineForm> = Vec::new();
            // tight-lower conditions (first-wins tie break)
            for (lj, other) in lowers.iter().enumerate() {
                if lj == li {
                    continue;
                }
                let mut cond = low.add(&other.neg());
                if lj < li {
                    cond.constant -= 1; // strict: low > other
                }
                tie_conds.push(cond);
            }
            for (uj, other) in uppers.iter().enumerate() {
                if uj == ui {
                    continue;
                }
                let mut cond = other.add(&up.neg());
                if uj < ui {
                    cond.constant -= 1;
                }
                tie_conds.push(cond);
            }
            // Skip branches that are empty once the variable's own bounds
            // are taken into account.
            let mut feasibility = cell.clone();
            feasibility.ineqs.extend(tie_conds.iter().cloned());
            if feasibility.is_empty() {
                continue;
            }
            let mut branch = cell.clone();
            branch.ineqs = rest_atoms.clone();
            branch.ineqs.extend(tie_conds);
            // The section count is the width `up - low`, which must be a
            // single constant per emitted section. When it varies over the
            // branch region, split on each value it attains; an unbounded
            // width is a genuinely parametric fiber cardinality.
            let width = up.add(&low.neg());
            let widths: Vec<Int> = if width.is_constant() {
                vec![width.constant]
            } else {
                let (lo, hi) = form_range(&feasibility, &width);
                let (Some(lo), Some(hi)) = (lo, hi) else {
                    return Err(PresError::Capability(
                        "fiber cardinality depends on parameters; enumerate the base instead"
                            .into(),
                    ));
                };
                (ceil_rat(&lo)..=floor_rat(&hi)).collect()
            };
            for w0 in widths {
                if w0 < 0 {
                    continue;
                }
                let mut wbranch = branch.clone();
                if !width.is_constant() {
                    // pin the width: width(z) = w0
                    let mut eq = width.clone();
                    eq.constant -= w0;
                    wbranch.ineqs.push(eq.clone());
                    wbranch.ineqs.push(eq.neg());
                }
                // Write x = low + j. Residue-split the base so each
                // congruence on x becomes a constant condition on j, then
                // CRT those into j ≡ j0 (mod step).
                let mut combos: Vec<Vec<Int>> = vec![Vec::new()];
                for (_, _, m) in &var_congs {
                    let mut next = Vec::new();
                    for combo in &combos {
                        for rho in 0..*m {
                            let mut c2 = combo.clone();
                            c2.push(rho);
                            next.push(c2);
                        }
                    }
                    combos = next;
                }
                for combo in combos {
                    let Some((j0, step)) = crt_offsets(&var_congs, &combo) else {
                        continue;
                    };
                    let mut cbranch = wbranch.clone();
                    for ((cx, g, m), rho) in var_congs.iter().zip(&combo) {
                        // region condition: (g - cx·low)(z) ≡ rho (mod m)
                        let expr = g.add(&low.scale(*cx).neg());
                        cbranch.congs.push(Congruence {
                            coeffs: expr.coeffs.clone(),
                            residue: (rho - expr.constant).rem_euclid(*m),
                            modulus: *m,
                        });
                    }
                    let mut j = j0;
                    while j <= w0 {
                        let mut value = low.clone();
                        value.constant += j;
                        debug_assert_eq!(value.coeffs[var], 0);
                        let sub = cbranch.substitute_axis(var, &value);
                        let mut next_forms = forms.clone();
                        next_forms[var] = Some(value);
                        sections_rec(sub, fiber, params, next_forms, out)?;
                        j += step;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Extended gcd: returns `(g, x, y)` with `a·x + b·y = g`.
fn egcd(a: Int, b: Int) -> (Int, Int, Int) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

/// Solve the constant congruence system `cx_i · j ≡ rho_i (mod m_i)`.
/// Returns the least nonnegative solution and the period, or `None` when
/// the system is unsolvable.
fn crt_offsets(var_congs: &[(Int, AffineForm, Int)], rhos: &[Int]) -> Option<(Int, Int)> {
    let mut j0: Int = 0;
    let mut step: Int = 1;
    for ((cx, _, m), rho) in var_congs.iter().zip(rhos) {
        let a = (cx * step).rem_euclid(*m);
        let b = (rho - cx * j0).rem_euclid(*m);
        let d = a.gcd(m);
        if b % d != 0 {
            return None;
        }
        let m2 = m / d;
        if m2 > 1 {
            let (g, inv, _) = egcd((a / d).rem_euclid(m2), m2);
            debug_assert_eq!(g, 1);
            let k0 = ((b / d) * inv).rem_euclid(m2);
            j0 += step * k0;
            step *= m2;
            j0 = j0.rem_euclid(step);
        }
    }
    Some((j0, step))
}

/// Exhaustive box validation of a rectilinearization: every point of the box
/// lies in `X` iff it lies in the image of exactly one piece.
pub fn validate_rectilinearization(
    set: &PresSet,
    pieces: &[RectPiece],
    params: usize,
    radius: Int,
) -> Result<(), PresError> {
    let dim = set.dim;
    let fiber = dim - params;
    let bounds: Vec<(Int, Int)> = vec![(-radius, radius); dim];
    let mut p = vec![-radius; dim];
    loop {
        let inx = set.cells.iter().any(|c| c.contains(&p));
        let mut hits = 0usize;
        for piece in pieces {
            if piece.preimage(&p[..fiber], &p[fiber..]).is_some() {
                hits += 1;
            }
        }
        if (inx && hits != 1) || (!inx && hits != 0) {
            return Err(PresError::Validation {
                point: p.clone(),
                detail: alloc::format!("in set: {inx}, covered by {hits} pieces"),
            });
        }
        // advance
        let mut axis = dim;
        loop {
            if axis == 0 {
                return Ok(());
            }
            axis -= 1;
            if p[axis] < bounds[axis].1 {
                p[axis] += 1;
                for q in p.iter_mut().skip(axis + 1) {
                    *q = -radius;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ineq(coeffs: &[Int], constant: Int) -> AffineForm {
        AffineForm::new(coeffs.to_vec(), constant)
    }

    fn cell1(ineqs: Vec<AffineForm>, congs: Vec<Congruence>) -> PresCell {
        let dim = ineqs
            .first()
            .map(|f| f.dim())
            .or_else(|| congs.first().map(|c| c.coeffs.len()))
            .unwrap_or(0);
        PresCell { dim, ineqs, congs }
    }

    #[test]
    fn contains_basic() {
        // {x >= 0, x ≡ 1 mod 2}
        let c = cell1(
            vec![ineq(&[1], 0)],
            vec![Congruence { coeffs: vec![1], residue: 1, modulus: 2 }],
        );
        let s = PresSet::from_cell(c);
        assert!(s.contains(&[3]).unwrap());
        assert!(!s.contains(&[4]).unwrap());
        assert!(!PresSet::empty(1).contains(&[7]).unwrap());
        assert!(s.contains(&[3, 4]).is_err());
    }

    #[test]
    fn bool_ops() {
        let nonneg = PresSet::from_cell(cell1(vec![ineq(&[1], 0)], vec![]));
        let le5 = PresSet::from_cell(cell1(vec![ineq(&[-1], 5)], vec![]));
        let inter = nonneg.intersect(&le5).unwrap();
        for x in -3..9 {
            assert_eq!(inter.contains(&[x]).unwrap(), (0..=5).contains(&x));
        }
        let comp = nonneg.complement();
        for x in -5..5 {
            assert_eq!(comp.contains(&[x]).unwrap(), x < 0);
        }
        let all = nonneg.union(&comp).unwrap();
        for x in -5..5 {
            assert!(all.contains(&[x]).unwrap());
        }
    }

    #[test]
    fn eliminate_even() {
        // exists y: x = 2y  ->  x ≡ 0 mod 2
        let c = cell1(
            vec![ineq(&[1, -2], 0), ineq(&[-1, 2], 0)],
            vec![],
        );
        let s = PresSet::from_cell(c).eliminate(1).unwrap();
        for x in -8..8 {
            assert_eq!(s.contains(&[x]).unwrap(), x % 2 == 0, "x={x}");
        }
    }

    #[test]
    fn eliminate_interval() {
        // exists y: 0 <= y <= x  ->  x >= 0
        let c = cell1(vec![ineq(&[0, 1], 0), ineq(&[1, -1], 0)], vec![]);
        let s = PresSet::from_cell(c).eliminate(1).unwrap();
        for x in -6..6 {
            assert_eq!(s.contains(&[x]).unwrap(), x >= 0, "x={x}");
        }
        // exists y: y >= 0 and y <= -1  ->  empty
        let c = cell1(vec![ineq(&[0, 1], 0), ineq(&[0, -1], -1)], vec![]);
        let s = PresSet::from_cell(c).eliminate(1).unwrap();
        assert!(s.is_empty_set());
    }

    #[test]
    fn decide_examples() {
        // {x >= 1, x <= 0} empty
        let c = cell1(vec![ineq(&[1], -1), ineq(&[-1], 0)], vec![]);
        assert_eq!(PresSet::from_cell(c).decide(), SetSize::Empty);
        // {0 <= x <= 2} finite(3)
        let c = cell1(vec![ineq(&[1], 0), ineq(&[-1], 2)], vec![]);
        assert_eq!(PresSet::from_cell(c).decide(), SetSize::Finite(3));
        // {x >= 0} infinite
        let c = cell1(vec![ineq(&[1], 0)], vec![]);
        assert_eq!(PresSet::from_cell(c).decide(), SetSize::Infinite);
    }

    #[test]
    fn enumerate_triangle() {
        // {0 <= x <= y <= 2} in box [0,2]^2
        let c = cell1(vec![ineq(&[1, 0], 0), ineq(&[-1, 1], 0), ineq(&[0, -1], 2)], vec![]);
        let s = PresSet::from_cell(c);
        let pts = s.enumerate_box(&[(0, 2), (0, 2)]).unwrap();
        assert_eq!(
            pts,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 1],
                vec![1, 2],
                vec![2, 2]
            ]
        );
        let congr = cell1(vec![], vec![Congruence { coeffs: vec![1], residue: 0, modulus: 3 }]);
        let pts = PresSet::from_cell(congr).enumerate_box(&[(0, 9)]).unwrap();
        assert_eq!(pts, vec![vec![0], vec![3], vec![6], vec![9]]);
    }

    #[test]
    fn rectilinearize_triangle() {
        // {(x,y): 0 <= x <= y}: one piece, theta(a,b) = (a, a+b).
        let c = cell1(vec![ineq(&[1, 0], 0), ineq(&[-1, 1], 0)], vec![]);
        let s = PresSet::from_cell(c);
        let pieces = rectilinearize_checked(&s, 0, 12).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].free_dims, 2);
    }

    #[test]
    fn rectilinearize_all_of_z() {
        // Z: two pieces a and -1-a.
        let s = PresSet::universe(1);
        let pieces = rectilinearize_checked(&s, 0, 20).unwrap();
        assert_eq!(pieces.len(), 2);
        for p in &pieces {
            assert_eq!(p.free_dims, 1);
        }
    }

    #[test]
    fn rectilinearize_odd_naturals() {
        // {x >= 0, x ≡ 1 mod 2}: one piece theta(a) = 2a + 1.
        let c = cell1(
            vec![ineq(&[1], 0)],
            vec![Congruence { coeffs: vec![1], residue: 1, modulus: 2 }],
        );
        let s = PresSet::from_cell(c);
        let pieces = rectilinearize_checked(&s, 0, 25).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].matrix, vec![vec![2]]);
        assert_eq!(pieces[0].base, PieceBase::Point(vec![1]));
    }

    #[test]
    fn rectilinearize_parametric_halfline() {
        // {(x, z): x >= z}: piece x = a + z over all z.
        let c = cell1(vec![ineq(&[1, -1], 0)], vec![]);
        let s = PresSet::from_cell(c);
        let pieces = rectilinearize_checked(&s, 1, 10).unwrap();
        // orthant split on x gives two regions; each contributes sections.
        for z in -5..5 {
            let member = |x: Int| {
                pieces
                    .iter()
                    .filter(|p| p.preimage(&[x], &[z]).is_some())
                    .count()
            };
            for x in -8..8 {
                assert_eq!(member(x), usize::from(x >= z), "x={x}, z={z}");
            }
        }
    }

    #[test]
    fn rectilinearize_dim_caps() {
        let s = PresSet::universe(6);
        assert!(matches!(rectilinearize(&s, 2), Err(PresError::Capability(_))));
    }

    #[test]
    fn rectilinearize_stress() {
        // Overlapping union with congruences in 2D.
        let a = cell1(
            vec![ineq(&[1, 0], 3), ineq(&[-1, 1], 2)],
            vec![Congruence { coeffs: vec![1, 1], residue: 1, modulus: 2 }],
        );
        let b = cell1(vec![ineq(&[0, 1], 0), ineq(&[1, 1], -1)], vec![]);
        let s = PresSet { dim: 2, cells: vec![a, b] };
        rectilinearize_checked(&s, 0, 9).unwrap();

        // Band with congruence: -3 <= x - 2z <= 4, x ≡ z mod 3, parametric in z.
        let c = cell1(
            vec![ineq(&[1, -2], 3), ineq(&[-1, 2], 4)],
            vec![Congruence { coeffs: vec![1, -1], residue: 0, modulus: 3 }],
        );
        rectilinearize_checked(&PresSet::from_cell(c), 1, 9).unwrap();

        // Quadrant complement (lineality split exercise).
        let q = cell1(vec![ineq(&[1, 0], 0), ineq(&[0, 1], 0)], vec![]);
        let comp = PresSet::from_cell(q).complement();
        rectilinearize_checked(&comp, 0, 9).unwrap();

        // Two-parameter family: x >= z1 + z2 with parity.
        let p = cell1(
            vec![ineq(&[1, -1, -1], 0)],
            vec![Congruence { coeffs: vec![1, 0, 0], residue: 0, modulus: 2 }],
        );
        rectilinearize_checked(&PresSet::from_cell(p), 2, 7).unwrap();

        // z1 <= x <= z2 has a fiber cardinality that depends on the
        // parameters: rejected as out of capability.
        let p = cell1(
            vec![ineq(&[1, -1, 0], 0), ineq(&[-1, 0, 1], 0)],
            vec![Congruence { coeffs: vec![1, 0, 0], residue: 0, modulus: 2 }],
        );
        assert!(matches!(
            rectilinearize(&PresSet::from_cell(p), 2),
            Err(PresError::Capability(_))
        ));
    }

    #[test]
    fn qe_box_agreement() {
        // Random-ish compound set: QE of {(x,y): x + 2y >= 0, y <= 3, x ≡ y mod 3}
        let c = cell1(
            vec![ineq(&[1, 2], 0), ineq(&[0, -1], 3)],
            vec![Congruence { coeffs: vec![1, -1], residue: 0, modulus: 3 }],
        );
        let s = PresSet::from_cell(c.clone());
        let proj = s.eliminate(1).unwrap();
        for x in -15..=15 {
            let direct = (-15..=15).any(|y| c.contains(&[x, y]))
                || (-100..=100).any(|y| c.contains(&[x, y]));
            assert_eq!(proj.contains(&[x]).unwrap(), direct, "x={x}");
        }
    }
}
