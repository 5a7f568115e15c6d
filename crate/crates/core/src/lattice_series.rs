//! Monomial graded linear series on projective space.
//!
//! A series of `O(d)` on `ℙⁿ` is described by the exponent sets `A_k` of its
//! graded pieces in the affine chart where the first homogeneous coordinate
//! is one; `α ∈ A_k` always satisfies `|α|₁ ≤ k·d`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{convex_hull, IntegerHalfspaces};
use crate::rational::{factorial, q_int, QVector, Q};

/// Default cap on the number of lattice points a single enumeration may touch.
pub const DEFAULT_POINT_CAP: u128 = 10_000_000;

/// Exponents of a monomial in a fixed affine chart; every coordinate is nonnegative.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct ExponentVector(Vec<i64>);

impl ExponentVector {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|&&c| c < 0) {
            return Err(Error::InvalidArgument(format!("negative exponent {c}")));
        }
        Ok(ExponentVector(coords))
    }

    pub(crate) fn from_signed(coords: Vec<i64>) -> Result<Self> {
        Self::new(coords)
    }

    pub fn zero(n: usize) -> Self {
        ExponentVector(vec![0; n])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn to_q(&self) -> QVector {
        self.0.iter().map(|&c| q_int(c)).collect()
    }

    /// The slope `α / k` as an exact rational vector.
    pub fn scaled(&self, k: u64) -> QVector {
        let k = q_int(k as i64);
        self.0.iter().map(|&c| q_int(c) / &k).collect()
    }

    pub fn add(&self, other: &ExponentVector) -> ExponentVector {
        ExponentVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl TryFrom<Vec<i64>> for ExponentVector {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        ExponentVector::new(v)
    }
}

impl From<ExponentVector> for Vec<i64> {
    fn from(v: ExponentVector) -> Self {
        v.0
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The exponent set `A_k` of the level-`k` piece.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedPiece {
    level: u64,
    degree: u64,
    exponents: Vec<ExponentVector>,
}

impl GradedPiece {
    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    /// Exponents in lexicographic order, without duplicates.
    pub fn exponents(&self) -> &[ExponentVector] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn contains(&self, alpha: &ExponentVector) -> bool {
        self.exponents.binary_search(alpha).is_ok()
    }
}

/// A section `z^α` of degree `degree` used to generate a series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub degree: u64,
    pub exponent: ExponentVector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeriesRule {
    /// Every monomial of degree at most `k·d`.
    Complete,
    /// The subalgebra generated by finitely many monomials.
    Generators(Vec<Generator>),
    /// `W_k = H⁰(L^k ⊗ integral closure of 𝔞^k)` for a monomial ideal 𝔞.
    NewtonPolyhedron {
        ideal: Vec<ExponentVector>,
        region: Vec<crate::polytope::Halfspace>,
    },
    /// `ℂ[X, Y, YZ, YZ², …] ⊂ ℂ[X, Y, Z]`, written in the chart `X = 1`.
    BuiltinExample36,
    /// Subseries generated by the level-`level` piece of `base`.
    Truncation {
        base: Box<MonomialSeries>,
        level: u64,
    },
}

/// A graded linear series of `O(d)` on `ℙⁿ` spanned by monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialSeries {
    n: usize,
    d: u64,
    rule: SeriesRule,
    cap: u128,
}

impl MonomialSeries {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u64 {
        self.d
    }

    pub fn rule(&self) -> &SeriesRule {
        &self.rule
    }

    pub fn cap(&self) -> u128 {
        self.cap
    }

    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    /// True for a generator series with no generators: every positive level is empty.
    pub fn is_trivial(&self) -> bool {
        matches!(&self.rule, SeriesRule::Generators(g) if g.is_empty())
    }

    pub fn graded_piece(&self, k: u64) -> Result<GradedPiece> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "graded pieces are indexed by k ≥ 1".into(),
            ));
        }
        let bound = self.bound(k)?;
        let exponents = match &self.rule {
            SeriesRule::Complete => self.collect_simplex(bound, |_| true)?,
            SeriesRule::NewtonPolyhedron { region, .. } => {
                let tests = IntegerHalfspaces::new(region);
                self.collect_simplex(bound, |a| tests.contains_scaled(a, k as i64))?
            }
            SeriesRule::BuiltinExample36 => {
                self.collect_simplex(bound, |a| a[1] == 0 || a[0] >= 1)?
            }
            SeriesRule::Generators(gens) => {
                let mut levels = GeneratorLevels::new(self, gens);
                levels.advance_to(k)?;
                levels.current(k).to_vec()
            }
            SeriesRule::Truncation { base, level } => {
                if !k.is_multiple_of(*level) {
                    Vec::new()
                } else {
                    let seed = base.graded_piece(*level)?.exponents;
                    let mut acc = seed.clone();
                    for m in 2..=k / level {
                        acc = sumset(&acc, &seed, self.n, (m * level * self.d) as i64, self.cap)?;
                    }
                    acc
                }
            }
        };
        Ok(GradedPiece {
            level: k,
            degree: self.d,
            exponents,
        })
    }

    /// `dim W_k` for each requested level, sharing work across levels.
    pub fn dimensions(&self, levels: &[u64]) -> Result<Vec<usize>> {
        match &self.rule {
            SeriesRule::Complete
            | SeriesRule::NewtonPolyhedron { .. }
            | SeriesRule::BuiltinExample36 => levels.iter().map(|&k| self.count_piece(k)).collect(),
            SeriesRule::Generators(gens) => {
                let mut sorted = levels.to_vec();
                sorted.sort_unstable();
                let mut levels_state = GeneratorLevels::new(self, gens);
                let mut out = std::collections::BTreeMap::new();
                for &k in &sorted {
                    levels_state.advance_to(k)?;
                    out.insert(k, levels_state.current(k).len());
                }
                Ok(levels.iter().map(|k| out[k]).collect())
            }
            SeriesRule::Truncation { base, level } => {
                let seed = base.graded_piece(*level)?.exponents;
                let max_m = levels
                    .iter()
                    .filter(|&&k| k % level == 0)
                    .map(|&k| k / level)
                    .max()
                    .unwrap_or(0);
                let mut by_m = vec![0usize; max_m as usize + 1];
                let mut acc = seed.clone();
                if max_m >= 1 {
                    by_m[1] = acc.len();
                }
                for m in 2..=max_m {
                    acc = sumset(&acc, &seed, self.n, (m * level * self.d) as i64, self.cap)?;
                    by_m[m as usize] = acc.len();
                }
                Ok(levels
                    .iter()
                    .map(|&k| {
                        if k % level == 0 {
                            by_m[(k / level) as usize]
                        } else {
                            0
                        }
                    })
                    .collect())
            }
        }
    }

    fn bound(&self, k: u64) -> Result<i64> {
        let bound = k
            .checked_mul(self.d)
            .and_then(|b| i64::try_from(b).ok())
            .ok_or_else(|| Error::InvalidArgument("level too large".into()))?;
        let count = simplex_count(self.n, bound);
        if count > self.cap {
            return Err(Error::CapExceeded {
                count,
                cap: self.cap,
            });
        }
        Ok(bound)
    }

    fn count_piece(&self, k: u64) -> Result<usize> {
        if k == 0 {
            return Err(Error::InvalidArgument(
                "graded pieces are indexed by k ≥ 1".into(),
            ));
        }
        let bound = self.bound(k)?;
        let mut count = 0usize;
        match &self.rule {
            SeriesRule::Complete => visit_simplex(self.n, bound, |_| count += 1),
            SeriesRule::NewtonPolyhedron { region, .. } => {
                let tests = IntegerHalfspaces::new(region);
                visit_simplex(self.n, bound, |a| {
                    if tests.contains_scaled(a, k as i64) {
                        count += 1;
                    }
                });
            }
            SeriesRule::BuiltinExample36 => visit_simplex(self.n, bound, |a| {
                if a[1] == 0 || a[0] >= 1 {
                    count += 1;
                }
            }),
            _ => return Ok(self.graded_piece(k)?.dim()),
        }
        Ok(count)
    }

    fn collect_simplex(
        &self,
        bound: i64,
        mut keep: impl FnMut(&[i64]) -> bool,
    ) -> Result<Vec<ExponentVector>> {
        let mut out = Vec::new();
        visit_simplex(self.n, bound, |a| {
            if keep(a) {
                out.push(ExponentVector(a.to_vec()));
            }
        });
        Ok(out)
    }
}

/// Rolling computation of generator-series levels.
struct GeneratorLevels<'a> {
    series: &'a MonomialSeries,
    gens: &'a [Generator],
    levels: Vec<Vec<ExponentVector>>,
    max_deg: u64,
}

impl<'a> GeneratorLevels<'a> {
    fn new(series: &'a MonomialSeries, gens: &'a [Generator]) -> Self {
        let max_deg = gens.iter().map(|g| g.degree).max().unwrap_or(1);
        GeneratorLevels {
            series,
            gens,
            levels: vec![vec![ExponentVector::zero(series.n)]],
            max_deg,
        }
    }

    fn advance_to(&mut self, k: u64) -> Result<()> {
        while (self.levels.len() as u64) <= k {
            let j = self.levels.len() as u64;
            let bound = (j * self.series.d) as i64;
            let count = simplex_count(self.series.n, bound);
            if count > self.series.cap {
                return Err(Error::CapExceeded {
                    count,
                    cap: self.series.cap,
                });
            }
            let mut grid = LatticeGrid::new(self.series.n, bound);
            for g in self.gens {
                if g.degree > j {
                    continue;
                }
                for a in &self.levels[(j - g.degree) as usize] {
                    grid.insert(&a.add(&g.exponent));
                }
            }
            self.levels.push(grid.into_sorted());
            // Levels older than the largest generator degree are never read again.
            let keep_from = j.saturating_sub(self.max_deg) as usize;
            for old in self.levels[..keep_from].iter_mut() {
                if !old.is_empty() {
                    *old = Vec::new();
                }
            }
        }
        Ok(())
    }

    fn current(&self, k: u64) -> &[ExponentVector] {
        &self.levels[k as usize]
    }
}

/// Dense bitmap over the box `[0, bound]ⁿ`, scanned in lexicographic order.
struct LatticeGrid {
    n: usize,
    side: usize,
    bits: Vec<bool>,
}

impl LatticeGrid {
    fn new(n: usize, bound: i64) -> Self {
        let side = bound as usize + 1;
        LatticeGrid {
            n,
            side,
            bits: vec![false; side.pow(n as u32)],
        }
    }

    fn insert(&mut self, a: &ExponentVector) {
        let idx =
            a.0.iter()
                .fold(0usize, |acc, &c| acc * self.side + c as usize);
        self.bits[idx] = true;
    }

    fn into_sorted(self) -> Vec<ExponentVector> {
        let mut out = Vec::new();
        for (idx, &set) in self.bits.iter().enumerate() {
            if set {
                let mut coords = vec![0i64; self.n];
                let mut rest = idx;
                for c in coords.iter_mut().rev() {
                    *c = (rest % self.side) as i64;
                    rest /= self.side;
                }
                out.push(ExponentVector(coords));
            }
        }
        out
    }
}

fn sumset(
    a: &[ExponentVector],
    b: &[ExponentVector],
    n: usize,
    bound: i64,
    cap: u128,
) -> Result<Vec<ExponentVector>> {
    let cells = ((bound + 1) as u128).pow(n as u32);
    if cells > cap {
        return Err(Error::CapExceeded { count: cells, cap });
    }
    let mut grid = LatticeGrid::new(n, bound);
    for x in a {
        for y in b {
            grid.insert(&x.add(y));
        }
    }
    Ok(grid.into_sorted())
}

/// Number of `α ∈ ℕⁿ` with `|α|₁ ≤ bound`, i.e. `binomial(bound + n, n)`.
pub fn simplex_count(n: usize, bound: i64) -> u128 {
    let mut c: u128 = 1;
    for i in 1..=n as u128 {
        c = c.saturating_mul(bound as u128 + i) / i;
    }
    c
}

/// Visits `α ∈ ℕⁿ` with `|α|₁ ≤ bound` in lexicographic order.
pub(crate) fn visit_simplex(n: usize, bound: i64, mut f: impl FnMut(&[i64])) {
    fn rec(cur: &mut Vec<i64>, n: usize, remaining: i64, f: &mut dyn FnMut(&[i64])) {
        if cur.len() == n {
            f(cur);
            return;
        }
        for v in 0..=remaining {
            cur.push(v);
            rec(cur, n, remaining - v, f);
            cur.pop();
        }
    }
    let mut cur = Vec::with_capacity(n);
    rec(&mut cur, n, bound, &mut f);
}

fn check_dims(n: usize, d: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "ambient dimension n must be positive".into(),
        ));
    }
    if d == 0 {
        return Err(Error::InvalidArgument(
            "line bundle degree d must be positive".into(),
        ));
    }
    Ok(())
}

/// The complete series `W_k = H⁰(ℙⁿ, O(k·d))`.
pub fn complete_series(n: usize, d: u64) -> Result<MonomialSeries> {
    check_dims(n, d)?;
    Ok(MonomialSeries {
        n,
        d,
        rule: SeriesRule::Complete,
        cap: DEFAULT_POINT_CAP,
    })
}

/// The series generated by `(degree, exponent)` pairs. An empty list gives
/// the trivial series, see [`MonomialSeries::is_trivial`].
pub fn series_from_generators(
    n: usize,
    d: u64,
    gens: Vec<(u64, ExponentVector)>,
) -> Result<MonomialSeries> {
    check_dims(n, d)?;
    let mut out = Vec::with_capacity(gens.len());
    for (degree, exponent) in gens {
        if degree == 0 {
            return Err(Error::InvalidArgument(
                "generator degree must be positive".into(),
            ));
        }
        if exponent.len() != n {
            return Err(Error::InvalidArgument(format!(
                "generator {exponent} has wrong length for n = {n}"
            )));
        }
        if exponent.l1() as u128 > degree as u128 * d as u128 {
            return Err(Error::InvalidArgument(format!(
                "generator {exponent} of degree {degree} leaves the simplex of size {}",
                degree * d
            )));
        }
        out.push(Generator { degree, exponent });
    }
    Ok(MonomialSeries {
        n,
        d,
        rule: SeriesRule::Generators(out),
        cap: DEFAULT_POINT_CAP,
    })
}

/// `W_k` = sections of `O(kd)` vanishing to the integral closure of `𝔞^k`,
/// where `𝔞` is the monomial ideal generated by `ideal_gens`. The integral
/// closure of a monomial ideal consists of the monomials whose exponents lie
/// in its Newton polyhedron.
pub fn ideal_series(n: usize, d: u64, ideal_gens: Vec<ExponentVector>) -> Result<MonomialSeries> {
    check_dims(n, d)?;
    if ideal_gens.is_empty() {
        return Err(Error::InvalidArgument(
            "ideal needs at least one generator".into(),
        ));
    }
    if ideal_gens.iter().any(|g| g.len() != n) {
        return Err(Error::InvalidArgument(
            "ideal generator of wrong length".into(),
        ));
    }
    let region = newton_region(n, d, &ideal_gens)?;
    let series = MonomialSeries {
        n,
        d,
        rule: SeriesRule::NewtonPolyhedron {
            ideal: ideal_gens,
            region,
        },
        cap: DEFAULT_POINT_CAP,
    };
    if series.graded_piece(1)?.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "degree d = {d} too small: level 1 is empty"
        )));
    }
    Ok(series)
}

/// Halfspaces of `Newton(𝔞) ∩ [0, M]ⁿ` with `M ≥ d` and `M ≥` every
/// generator coordinate. The truncated polyhedron is the hull of the
/// generators with any subset of coordinates raised to `M`.
fn newton_region(
    n: usize,
    d: u64,
    gens: &[ExponentVector],
) -> Result<Vec<crate::polytope::Halfspace>> {
    let m = gens
        .iter()
        .flat_map(|g| g.coords().iter().copied())
        .max()
        .unwrap_or(0)
        .max(d as i64);
    let mut corners: Vec<QVector> = Vec::new();
    for g in gens {
        for mask in 0..(1u32 << n) {
            let p: Vec<i64> = (0..n)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        m
                    } else {
                        g.coords()[i]
                    }
                })
                .collect();
            corners.push(p.iter().map(|&c| q_int(c)).collect());
        }
    }
    Ok(convex_hull(&corners)?.halfspaces().to_vec())
}

/// The built-in non-finitely generated series `ℂ[X, Y, YZ, YZ², …]` on `ℙ²`
/// with `L = O(1)`; `A_k = {(b, c) : b + c ≤ k, c = 0 or b ≥ 1}`.
pub fn example36_series() -> MonomialSeries {
    MonomialSeries {
        n: 2,
        d: 1,
        rule: SeriesRule::BuiltinExample36,
        cap: DEFAULT_POINT_CAP,
    }
}

/// Generators `X, Y, YZ, …, YZ^{max_power}` of the built-in series.
pub fn example36_generators(max_power: u64) -> Result<MonomialSeries> {
    let mut gens = vec![(1, ExponentVector::new(vec![0, 0])?)];
    for i in 0..=max_power {
        gens.push((i + 1, ExponentVector::new(vec![1, i as i64])?));
    }
    series_from_generators(2, 1, gens)
}

/// `W^(ℓ)_k = Im[S^{k/ℓ} W_ℓ → W_k]` when `ℓ | k`, zero otherwise.
pub fn truncate(series: &MonomialSeries, level: u64) -> Result<MonomialSeries> {
    if level == 0 {
        return Err(Error::InvalidArgument(
            "truncation level must be positive".into(),
        ));
    }
    Ok(MonomialSeries {
        n: series.n,
        d: series.d,
        rule: SeriesRule::Truncation {
            base: Box::new(series.clone()),
            level,
        },
        cap: series.cap,
    })
}

/// Index of the exponent-difference lattice in `ℤⁿ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatticeIndex {
    Finite(BigInt),
    Infinite,
}

impl LatticeIndex {
    pub fn as_q(&self) -> Option<Q> {
        match self {
            LatticeIndex::Finite(i) => Some(Q::from_integer(i.clone())),
            LatticeIndex::Infinite => None,
        }
    }
}

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeIndex::Finite(i) => write!(f, "{i}"),
            LatticeIndex::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BirationalStatus {
    pub level: u64,
    pub birational: bool,
    pub lattice_index: LatticeIndex,
    /// Smith normal form diagonal of the difference matrix (nonzero part).
    pub elementary_divisors: Vec<BigInt>,
}

/// Whether the differences `α − α₀` over `A_k` generate `ℤⁿ`.
pub fn is_birational_at(series: &MonomialSeries, k: u64) -> Result<BirationalStatus> {
    let piece = series.graded_piece(k)?;
    if piece.is_empty() {
        return Err(Error::TrivialPiece(k));
    }
    let n = series.n();
    let origin = &piece.exponents()[0];
    let diffs = piece.exponents()[1..].iter().map(|a| {
        a.coords()
            .iter()
            .zip(origin.coords())
            .map(|(x, y)| BigInt::from(x - y))
            .collect()
    });
    let echelon = integer_echelon(diffs, n);
    let divisors = elementary_divisors(&echelon);
    let lattice_index = if echelon.len() < n {
        LatticeIndex::Infinite
    } else {
        LatticeIndex::Finite(divisors.iter().fold(BigInt::one(), |acc, x| acc * x))
    };
    let birational = lattice_index == LatticeIndex::Finite(BigInt::one());
    Ok(BirationalStatus {
        level: k,
        birational,
        lattice_index,
        elementary_divisors: divisors,
    })
}

/// Row-echelon basis over `ℤ` of the lattice spanned by `rows`.
fn integer_echelon(rows: impl Iterator<Item = Vec<BigInt>>, n: usize) -> Vec<Vec<BigInt>> {
    // basis[c] holds the row whose leading column is c.
    let mut basis: Vec<Option<Vec<BigInt>>> = vec![None; n];
    for mut v in rows {
        for c in 0..n {
            if v[c].is_zero() {
                continue;
            }
            match basis[c].take() {
                None => {
                    if v[c].is_negative() {
                        v.iter_mut().for_each(|x| *x = -x.clone());
                    }
                    basis[c] = Some(v);
                    break;
                }
                Some(b) => {
                    let eg = b[c].extended_gcd(&v[c]);
                    let (g, x, y) = (eg.gcd, eg.x, eg.y);
                    let bc = &b[c] / &g;
                    let vc = &v[c] / &g;
                    let mut new_b: Vec<BigInt> =
                        b.iter().zip(&v).map(|(p, q)| &x * p + &y * q).collect();
                    let new_v: Vec<BigInt> =
                        b.iter().zip(&v).map(|(p, q)| &vc * p - &bc * q).collect();
                    if new_b[c].is_negative() {
                        new_b.iter_mut().for_each(|x| *x = -x.clone());
                    }
                    basis[c] = Some(new_b);
                    v = new_v;
                }
            }
        }
    }
    basis.into_iter().flatten().collect()
}

/// Invariant factors from determinantal divisors `d_i = gcd of i×i minors`.
fn elementary_divisors(rows: &[Vec<BigInt>]) -> Vec<BigInt> {
    let r = rows.len();
    if r == 0 {
        return Vec::new();
    }
    let n = rows[0].len();
    let mut prev = BigInt::one();
    let mut out = Vec::with_capacity(r);
    for size in 1..=r {
        let mut g = BigInt::zero();
        for rs in combinations(r, size) {
            for cs in combinations(n, size) {
                let minor: Vec<QVector> = rs
                    .iter()
                    .map(|&i| {
                        cs.iter()
                            .map(|&j| Q::from_integer(rows[i][j].clone()))
                            .collect()
                    })
                    .collect();
                let det = crate::rational::determinant(minor).to_integer();
                g = g.gcd(&det);
            }
        }
        if g.is_zero() {
            break;
        }
        out.push(&g / &prev);
        prev = g;
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Samples `n!·dim W_k / kⁿ` and their extrapolation to `k → ∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub divisibility: u64,
    #[serde(serialize_with = "crate::serde_q::serialize_samples")]
    pub samples: Vec<(u64, Q)>,
    pub dims: Vec<usize>,
    /// Fitted `v` in `v + c/k`.
    pub extrapolated: f64,
    /// Fitted `c` in `v + c/k`.
    pub fit_slope: f64,
}

/// Least-squares fit of `y ≈ v + c·x`; returns `(v, c)`.
pub fn fit_affine(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    if xs.len() == 1 {
        return (ys[0], 0.0);
    }
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return (my, 0.0);
    }
    let c = sxy / sxx;
    (my - c * mx, c)
}

pub fn estimate_volume(
    series: &MonomialSeries,
    k_max: u64,
    divisibility: u64,
) -> Result<VolumeEstimate> {
    if divisibility == 0 || k_max < divisibility {
        return Err(Error::InvalidArgument(format!(
            "need k_max ≥ divisibility ≥ 1, got k_max = {k_max}, divisibility = {divisibility}"
        )));
    }
    let levels: Vec<u64> = (1..=k_max / divisibility)
        .map(|j| j * divisibility)
        .collect();
    let dims = series.dimensions(&levels)?;
    let n = series.n();
    let nfact = Q::from_integer(factorial(n));
    let samples: Vec<(u64, Q)> = levels
        .iter()
        .zip(&dims)
        .map(|(&k, &dim)| {
            let kn = Q::from_integer(BigInt::from(k).pow(n as u32));
            (k, Q::from_integer(BigInt::from(dim)) * &nfact / kn)
        })
        .collect();
    let half = samples.len() - samples.len() / 2;
    let tail = &samples[samples.len() - half..];
    let xs: Vec<f64> = tail.iter().map(|(k, _)| 1.0 / *k as f64).collect();
    let ys: Vec<f64> = tail
        .iter()
        .map(|(_, v)| crate::rational::q_to_f64(v))
        .collect();
    let (v, c) = fit_affine(&xs, &ys);
    Ok(VolumeEstimate {
        divisibility,
        samples,
        dims,
        extrapolated: v.max(0.0),
        fit_slope: c,
    })
}
