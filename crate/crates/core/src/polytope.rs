//! Exact rational polytopes: convex hulls, volumes and lattice points.
//!
//! Hulls are computed with exact orientation tests. The plane uses Andrew's
//! monotone chain; three and more dimensions use gift wrapping over facets,
//! recursing into each facet to find its ridges. Volumes come from a fan
//! triangulation rooted at a vertex, summed as determinants.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lattice_series::{ExponentVector, MonomialSeries, DEFAULT_POINT_CAP};
use crate::rational::{
    determinant, dot, factorial, format_q, null_space, parse_q, q_int, q_pow, row_reduce, QVector,
    Q,
};

/// Upper bound on input size for hulls in dimension four and above.
pub const HIGH_DIM_POINT_CAP: usize = 4096;

/// The closed halfspace `⟨normal, x⟩ ≤ offset`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Halfspace {
    pub normal: QVector,
    pub offset: Q,
}

impl Halfspace {
    /// Builds a halfspace scaled to a primitive integer normal.
    pub fn new(normal: QVector, offset: Q) -> Self {
        let lcm = normal
            .iter()
            .chain(std::iter::once(&offset))
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let scale = Q::from_integer(lcm);
        let ints: Vec<BigInt> = normal.iter().map(|x| (x * &scale).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        if g.is_zero() {
            return Halfspace { normal, offset };
        }
        let g = Q::from_integer(g);
        let normal = normal.iter().map(|x| x * &scale / &g).collect();
        let offset = &offset * &scale / &g;
        Halfspace { normal, offset }
    }

    /// `offset − ⟨normal, x⟩`; nonnegative inside.
    pub fn slack(&self, x: &[Q]) -> Q {
        &self.offset - dot(&self.normal, x)
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        !self.slack(x).is_negative()
    }
}

#[derive(Debug, Clone)]
struct Facet {
    halfspace: Halfspace,
    members: Vec<usize>,
}

#[derive(Debug, Clone)]
struct FullHull {
    vertices: Vec<usize>,
    facets: Vec<Facet>,
}

/// A convex polytope with exact vertices and a validated H-representation.
///
/// For lower-dimensional polytopes the halfspaces include a pair of opposite
/// inequalities for each equation of the affine span.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPolytope {
    ambient: usize,
    dim: usize,
    vertices: Vec<QVector>,
    halfspaces: Vec<Halfspace>,
    /// Coordinates onto which the affine span projects injectively.
    chart: Vec<usize>,
}

impl RationalPolytope {
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    /// Affine dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.dim == self.ambient
    }

    /// Extreme points, canonically sorted.
    pub fn vertices(&self) -> &[QVector] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.halfspaces.iter().all(|h| h.contains(x))
    }

    /// Exact Lebesgue volume in the ambient space; zero unless full-dimensional.
    pub fn volume(&self) -> Q {
        if !self.is_full_dimensional() || self.ambient == 0 {
            return Q::zero();
        }
        let hull = hull_full(&self.vertices).expect("vertices of a full-dimensional polytope");
        let mut simplices = triangulate(&self.vertices, &hull);
        for s in simplices.iter_mut() {
            s.sort_unstable();
        }
        simplices.sort();
        let mut total = Q::zero();
        for simplex in &simplices {
            let apex = &self.vertices[simplex[0]];
            let rows: Vec<QVector> = simplex[1..]
                .iter()
                .map(|&v| {
                    self.vertices[v]
                        .iter()
                        .zip(apex)
                        .map(|(a, b)| a - b)
                        .collect()
                })
                .collect();
            total += determinant(rows).abs();
        }
        total / Q::from_integer(factorial(self.ambient))
    }

    /// Volume of the `dim`-dimensional polytope measured in its coordinate chart.
    pub fn relative_chart_volume(&self) -> Q {
        if self.dim == 0 {
            return Q::one();
        }
        let projected: Vec<QVector> = self
            .vertices
            .iter()
            .map(|v| self.chart.iter().map(|&c| v[c].clone()).collect())
            .collect();
        convex_hull(&projected)
            .map(|p| p.volume())
            .unwrap_or_else(|_| Q::zero())
    }

    /// Image under `x ↦ λx`.
    pub fn dilate(&self, factor: &Q) -> Result<RationalPolytope> {
        let pts: Vec<QVector> = self
            .vertices
            .iter()
            .map(|v| v.iter().map(|x| x * factor).collect())
            .collect();
        convex_hull(&pts)
    }

    /// All integer points of the polytope in lexicographic order.
    pub fn lattice_points(&self) -> Result<Vec<ExponentVector>> {
        self.lattice_points_capped(DEFAULT_POINT_CAP)
    }

    /// As [`lattice_points`](Self::lattice_points) with an explicit cap on the
    /// number of candidate points in the bounding box.
    pub fn lattice_points_capped(&self, cap: u128) -> Result<Vec<ExponentVector>> {
        let n = self.ambient;
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for i in 0..n {
            let min = self
                .vertices
                .iter()
                .map(|v| v[i].clone())
                .min()
                .expect("nonempty");
            let max = self
                .vertices
                .iter()
                .map(|v| v[i].clone())
                .max()
                .expect("nonempty");
            lo.push(
                min.ceil()
                    .to_integer()
                    .to_i64()
                    .ok_or_else(|| Error::Numeric("coordinate overflow".into()))?,
            );
            hi.push(
                max.floor()
                    .to_integer()
                    .to_i64()
                    .ok_or_else(|| Error::Numeric("coordinate overflow".into()))?,
            );
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Ok(Vec::new());
        }
        let count: u128 = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l + 1) as u128)
            .product();
        if count > cap {
            return Err(Error::CapExceeded { count, cap });
        }
        let tests = IntegerHalfspaces::new(&self.halfspaces);
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            if tests.contains(&cur) {
                out.push(ExponentVector::from_signed(cur.clone())?);
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    return Ok(out);
                }
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lo[axis];
            }
        }
    }

    /// Plain-text V-representation, one `p/q` vector per line.
    pub fn to_vrep_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let line: Vec<String> = v.iter().map(format_q).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses the V-representation text format; blank lines and `#` comments are skipped.
    pub fn from_vrep_text(text: &str) -> Result<RationalPolytope> {
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v = line
                .split_whitespace()
                .map(parse_q)
                .collect::<Result<QVector>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            pts.push(v);
        }
        convex_hull(&pts)
    }
}

/// Integer-scaled halfspaces for fast membership tests of lattice points.
pub(crate) struct IntegerHalfspaces {
    rows: Vec<(Vec<i128>, i128, i128)>,
    exact: Vec<Halfspace>,
}

impl IntegerHalfspaces {
    pub(crate) fn new(halfspaces: &[Halfspace]) -> Self {
        let mut rows = Vec::new();
        let mut exact = Vec::new();
        for h in halfspaces {
            let normal: Option<Vec<i128>> = h
                .normal
                .iter()
                .map(|x| {
                    if x.is_integer() {
                        x.to_integer().to_i128()
                    } else {
                        None
                    }
                })
                .collect();
            match (
                normal,
                h.offset.numer().to_i128(),
                h.offset.denom().to_i128(),
            ) {
                (Some(normal), Some(num), Some(den)) => rows.push((normal, num, den)),
                _ => exact.push(h.clone()),
            }
        }
        IntegerHalfspaces { rows, exact }
    }

    /// Tests `⟨normal, x⟩ ≤ scale · offset` for an integer point.
    pub(crate) fn contains_scaled(&self, x: &[i64], scale: i64) -> bool {
        for (normal, num, den) in &self.rows {
            let lhs: i128 = normal.iter().zip(x).map(|(a, &b)| a * b as i128).sum();
            if lhs * den > num * scale as i128 {
                return false;
            }
        }
        if self.exact.is_empty() {
            return true;
        }
        let q: QVector = x.iter().map(|&v| q_int(v)).collect();
        let s = q_int(scale);
        self.exact
            .iter()
            .all(|h| dot(&h.normal, &q) <= &h.offset * &s)
    }

    pub(crate) fn contains(&self, x: &[i64]) -> bool {
        self.contains_scaled(x, 1)
    }
}

/// Exact convex hull of a nonempty point set.
pub fn convex_hull(points: &[QVector]) -> Result<RationalPolytope> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidArgument("convex hull of an empty set".into()))?;
    let ambient = first.len();
    if points.iter().any(|p| p.len() != ambient) {
        return Err(Error::InvalidArgument("points of mixed dimension".into()));
    }
    let pts = column_extremes(points);
    let span = AffineSpan::of(&pts);
    let dim = span.dim();

    if ambient >= 4 && pts.len() > HIGH_DIM_POINT_CAP {
        return Err(Error::CapExceeded {
            count: pts.len() as u128,
            cap: HIGH_DIM_POINT_CAP as u128,
        });
    }

    let (vertex_idx, mut halfspaces) = if dim == 0 {
        (vec![0], Vec::new())
    } else {
        let projected: Vec<QVector> = pts
            .iter()
            .map(|p| span.chart.iter().map(|&c| p[c].clone()).collect())
            .collect();
        let hull = hull_full(&projected)?;
        let lifted: Vec<Halfspace> = hull
            .facets
            .iter()
            .map(|f| {
                let mut normal = vec![Q::zero(); ambient];
                for (k, &c) in span.chart.iter().enumerate() {
                    normal[c] = f.halfspace.normal[k].clone();
                }
                Halfspace::new(normal, f.halfspace.offset.clone())
            })
            .collect();
        (hull.vertices, lifted)
    };
    for eq in span.equations() {
        let offset = dot(&eq, &pts[0]);
        halfspaces.push(Halfspace::new(
            eq.iter().map(|x| -x).collect(),
            -offset.clone(),
        ));
        halfspaces.push(Halfspace::new(eq, offset));
    }
    halfspaces.sort_by(|a, b| {
        a.normal
            .cmp(&b.normal)
            .then_with(|| a.offset.cmp(&b.offset))
    });
    halfspaces.dedup();

    let mut vertices: Vec<QVector> = vertex_idx.iter().map(|&i| pts[i].clone()).collect();
    vertices.sort();

    for p in &pts {
        if !halfspaces.iter().all(|h| h.contains(p)) {
            return Err(Error::Invariant(
                "input point violates derived halfspace".into(),
            ));
        }
    }
    for v in &vertices {
        let tight = halfspaces.iter().filter(|h| h.slack(v).is_zero()).count();
        if tight < dim {
            return Err(Error::Invariant(
                "vertex tight on fewer than dim halfspaces".into(),
            ));
        }
    }

    Ok(RationalPolytope {
        ambient,
        dim,
        vertices,
        halfspaces,
        chart: span.chart,
    })
}

/// Drops duplicates and every point strictly between the extremes of its
/// line parallel to the last axis; such points are never extreme.
fn column_extremes(points: &[QVector]) -> Vec<QVector> {
    let n = points[0].len();
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut lines: BTreeMap<&[Q], (&Q, &Q)> = BTreeMap::new();
    for p in points {
        let (key, last) = p.split_at(n - 1);
        let last = &last[0];
        lines
            .entry(key)
            .and_modify(|(lo, hi)| {
                if last < *lo {
                    *lo = last;
                }
                if last > *hi {
                    *hi = last;
                }
            })
            .or_insert((last, last));
    }
    let mut out = Vec::with_capacity(lines.len() * 2);
    for (key, (lo, hi)) in lines {
        let mut p = key.to_vec();
        p.push(lo.clone());
        out.push(p);
        if lo != hi {
            let mut q = key.to_vec();
            q.push(hi.clone());
            out.push(q);
        }
    }
    out
}

struct AffineSpan {
    ambient: usize,
    basis: Vec<QVector>,
    chart: Vec<usize>,
}

impl AffineSpan {
    fn of(points: &[QVector]) -> AffineSpan {
        let ambient = points[0].len();
        let origin = &points[0];
        let mut basis: Vec<QVector> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for p in &points[1..] {
            if basis.len() == ambient {
                break;
            }
            let mut v: QVector = p.iter().zip(origin).map(|(a, b)| a - b).collect();
            for (row, &pc) in basis.iter().zip(&pivots) {
                if !v[pc].is_zero() {
                    let f = v[pc].clone();
                    for (x, r) in v.iter_mut().zip(row) {
                        *x -= &f * r;
                    }
                }
            }
            if let Some(pc) = v.iter().position(|x| !x.is_zero()) {
                let inv = v[pc].recip();
                for x in v.iter_mut() {
                    *x *= &inv;
                }
                for row in basis.iter_mut() {
                    if !row[pc].is_zero() {
                        let f = row[pc].clone();
                        for (x, r) in row.iter_mut().zip(&v) {
                            *x -= &f * r;
                        }
                    }
                }
                basis.push(v);
                pivots.push(pc);
            }
        }
        let mut chart = pivots;
        chart.sort_unstable();
        AffineSpan {
            ambient,
            basis,
            chart,
        }
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Normals of the affine span's defining equations.
    fn equations(&self) -> Vec<QVector> {
        if self.basis.is_empty() {
            return (0..self.ambient)
                .map(|i| {
                    (0..self.ambient)
                        .map(|j| if i == j { Q::one() } else { Q::zero() })
                        .collect()
                })
                .collect();
        }
        null_space(&self.basis, self.ambient)
    }
}

fn affine_dim(points: &[QVector], members: &[usize]) -> usize {
    let origin = &points[members[0]];
    let mut rows: Vec<QVector> = members[1..]
        .iter()
        .map(|&i| points[i].iter().zip(origin).map(|(a, b)| a - b).collect())
        .collect();
    if rows.is_empty() {
        return 0;
    }
    row_reduce(&mut rows).len()
}

fn drop_coord(p: &[Q], j: usize) -> QVector {
    p.iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, x)| x.clone())
        .collect()
}

fn insert_coord(p: &[Q], j: usize, value: Q) -> QVector {
    let mut out = p.to_vec();
    out.insert(j, value);
    out
}

fn tight_members(points: &[QVector], h: &Halfspace) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| h.slack(&points[i]).is_zero())
        .collect()
}

/// Hull of a full-dimensional point set.
fn hull_full(points: &[QVector]) -> Result<FullHull> {
    match points[0].len() {
        0 => Err(Error::InvalidArgument(
            "zero-dimensional ambient space".into(),
        )),
        1 => Ok(hull_1d(points)),
        2 => Ok(hull_2d(points)),
        _ => hull_gift_wrap(points),
    }
}

fn hull_1d(points: &[QVector]) -> FullHull {
    let (mut lo, mut hi) = (0, 0);
    for (i, p) in points.iter().enumerate() {
        if p[0] < points[lo][0] {
            lo = i;
        }
        if p[0] > points[hi][0] {
            hi = i;
        }
    }
    let left = Halfspace::new(vec![-Q::one()], -points[lo][0].clone());
    let right = Halfspace::new(vec![Q::one()], points[hi][0].clone());
    FullHull {
        vertices: vec![lo, hi],
        facets: vec![
            Facet {
                members: tight_members(points, &left),
                halfspace: left,
            },
            Facet {
                members: tight_members(points, &right),
                halfspace: right,
            },
        ],
    }
}

fn cross(o: &[Q], a: &[Q], b: &[Q]) -> Q {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

fn hull_2d(points: &[QVector]) -> FullHull {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].cmp(&points[b]));
    let mut lower: Vec<usize> = Vec::new();
    for &i in &order {
        while lower.len() >= 2
            && !cross(
                &points[lower[lower.len() - 2]],
                &points[lower[lower.len() - 1]],
                &points[i],
            )
            .is_positive()
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2
            && !cross(
                &points[upper[upper.len() - 2]],
                &points[upper[upper.len() - 1]],
                &points[i],
            )
            .is_positive()
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let ring = lower;
    let facets = (0..ring.len())
        .map(|k| {
            let p = &points[ring[k]];
            let q = &points[ring[(k + 1) % ring.len()]];
            let normal = vec![&q[1] - &p[1], &p[0] - &q[0]];
            let offset = dot(&normal, p);
            let halfspace = Halfspace::new(normal, offset);
            Facet {
                members: tight_members(points, &halfspace),
                halfspace,
            }
        })
        .collect();
    FullHull {
        vertices: ring,
        facets,
    }
}

/// Rotates the supporting hyperplane `h0` about the flat `{ℓ = 0}`, where
/// `ℓ(x) = ⟨w, x⟩ − beta` is nonnegative on every point of `h0`, until it
/// touches another point. Returns the resulting facet.
fn wrap(points: &[QVector], h0: &Halfspace, w: &[Q], beta: &Q) -> Result<Facet> {
    let mut best: Option<Q> = None;
    for p in points {
        let h = h0.slack(p);
        if h.is_positive() {
            let tau = (dot(w, p) - beta) / h;
            if best.as_ref().is_none_or(|b| tau < *b) {
                best = Some(tau);
            }
        }
    }
    let tau =
        best.ok_or_else(|| Error::Invariant("gift wrapping found no point off the facet".into()))?;
    let normal: QVector = w
        .iter()
        .zip(&h0.normal)
        .map(|(wi, ai)| -(wi + &tau * ai))
        .collect();
    let offset = -(beta + &tau * &h0.offset);
    let halfspace = Halfspace::new(normal, offset);
    Ok(Facet {
        members: tight_members(points, &halfspace),
        halfspace,
    })
}

fn initial_facet(points: &[QVector]) -> Result<Facet> {
    let d = points[0].len();
    let shadow: Vec<QVector> = points.iter().map(|p| p[..d - 1].to_vec()).collect();
    let shadow_hull = hull_full(&shadow)?;
    let g = &shadow_hull.facets[0].halfspace;
    let h0 = Halfspace::new(insert_coord(&g.normal, d - 1, Q::zero()), g.offset.clone());
    let members = tight_members(points, &h0);
    if affine_dim(points, &members) == d - 1 {
        return Ok(Facet {
            halfspace: h0,
            members,
        });
    }
    // The vertical hyperplane meets the hull in a codimension-two face; wrap around it.
    let rows: Vec<QVector> = members
        .iter()
        .map(|&i| {
            let mut r = points[i].clone();
            r.push(-Q::one());
            r
        })
        .collect();
    let mut reference = h0.normal.clone();
    reference.push(h0.offset.clone());
    let candidate = null_space(&rows, d + 1)
        .into_iter()
        .find(|v| {
            let mut pair = vec![v.clone(), reference.clone()];
            row_reduce(&mut pair).len() == 2
        })
        .ok_or_else(|| Error::Invariant("no rotation axis for initial facet".into()))?;
    wrap(points, &h0, &candidate[..d], &candidate[d])
}

fn hull_gift_wrap(points: &[QVector]) -> Result<FullHull> {
    let first = initial_facet(points)?;
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut vertex_set: HashSet<usize> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut facets = Vec::new();
    seen.insert(first.members.clone());
    queue.push_back(first);
    while let Some(facet) = queue.pop_front() {
        let j = facet
            .halfspace
            .normal
            .iter()
            .position(|x| !x.is_zero())
            .ok_or_else(|| Error::Invariant("zero facet normal".into()))?;
        let projected: Vec<QVector> = facet
            .members
            .iter()
            .map(|&i| drop_coord(&points[i], j))
            .collect();
        let sub = hull_full(&projected)?;
        vertex_set.extend(sub.vertices.iter().map(|&v| facet.members[v]));
        for ridge in &sub.facets {
            let w = insert_coord(
                &ridge
                    .halfspace
                    .normal
                    .iter()
                    .map(|x| -x)
                    .collect::<QVector>(),
                j,
                Q::zero(),
            );
            let beta = -ridge.halfspace.offset.clone();
            let next = wrap(points, &facet.halfspace, &w, &beta)?;
            if seen.insert(next.members.clone()) {
                queue.push_back(next);
            }
        }
        facets.push(facet);
    }
    let mut vertices: Vec<usize> = vertex_set.into_iter().collect();
    vertices.sort_unstable();
    Ok(FullHull { vertices, facets })
}

/// Fan triangulation from the first vertex; simplices index into `points`.
fn triangulate(points: &[QVector], hull: &FullHull) -> Vec<Vec<usize>> {
    let d = points[0].len();
    if d == 1 {
        return vec![vec![hull.vertices[0], hull.vertices[1]]];
    }
    let apex = *hull.vertices.iter().min().expect("nonempty hull");
    let mut out = Vec::new();
    for facet in &hull.facets {
        if facet.members.contains(&apex) {
            continue;
        }
        let j = facet
            .halfspace
            .normal
            .iter()
            .position(|x| !x.is_zero())
            .expect("nonzero normal");
        let projected: Vec<QVector> = facet
            .members
            .iter()
            .map(|&i| drop_coord(&points[i], j))
            .collect();
        let sub = hull_full(&projected).expect("facet is full-dimensional in its chart");
        for simplex in triangulate(&projected, &sub) {
            let mut s = vec![apex];
            s.extend(simplex.into_iter().map(|v| facet.members[v]));
            out.push(s);
        }
    }
    out
}

/// Exact volume of a polytope; zero for lower-dimensional ones.
pub fn volume(polytope: &RationalPolytope) -> Q {
    polytope.volume()
}

/// Integer points of a polytope, canonically sorted.
pub fn lattice_points(polytope: &RationalPolytope) -> Result<Vec<ExponentVector>> {
    polytope.lattice_points()
}

/// Self-intersection of the globally generated bundle attached to level `k`,
/// realized as `n!·vol(conv A_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfIntersection {
    pub level: u64,
    pub value: Q,
    /// `value / kⁿ`.
    pub normalized: Q,
    pub hull: RationalPolytope,
}

pub fn mk_self_intersection(series: &MonomialSeries, k: u64) -> Result<SelfIntersection> {
    let piece = series.graded_piece(k)?;
    if piece.is_empty() {
        return Err(Error::TrivialPiece(k));
    }
    let pts: Vec<QVector> = piece.exponents().iter().map(ExponentVector::to_q).collect();
    let hull = convex_hull(&pts)?;
    let n = series.n();
    let value = hull.volume() * Q::from_integer(factorial(n));
    let normalized = &value / q_pow(&q_int(k as i64), n);
    Ok(SelfIntersection {
        level: k,
        value,
        normalized,
        hull,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q_frac, q_vec};

    fn hull_of(pts: &[&[i64]]) -> RationalPolytope {
        convex_hull(&pts.iter().map(|p| q_vec(p)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn interior_point_dropped() {
        let pts = vec![
            q_vec(&[0, 0]),
            q_vec(&[1, 0]),
            q_vec(&[0, 1]),
            vec![q_frac(1, 4), q_frac(1, 4)],
        ];
        let p = convex_hull(&pts).unwrap();
        assert_eq!(p.vertices().len(), 3);
        assert_eq!(p.volume(), q_frac(1, 2));
    }

    #[test]
    fn quadrilateral_matches_shoelace() {
        let p = hull_of(&[&[0, 0], &[2, 0], &[1, 1], &[0, 1]]);
        assert_eq!(p.vertices().len(), 4);
        // Shoelace on (0,0),(2,0),(1,1),(0,1): |0 + 2 + 1 + 0| / 2.
        assert_eq!(p.volume(), q_frac(3, 2));
    }

    #[test]
    fn collinear_points_give_segment() {
        let p = hull_of(&[&[0, 0], &[1, 1], &[2, 2]]);
        assert_eq!(p.dim(), 1);
        assert_eq!(p.vertices().len(), 2);
        assert_eq!(p.volume(), Q::zero());
        assert!(p.contains(&q_vec(&[1, 1])));
        assert!(!p.contains(&q_vec(&[1, 0])));
        assert!(!p.contains(&q_vec(&[3, 3])));
    }

    #[test]
    fn single_point() {
        let p = hull_of(&[&[3, 4], &[3, 4]]);
        assert_eq!(p.dim(), 0);
        assert_eq!(p.vertices(), &[q_vec(&[3, 4])]);
        assert!(p.contains(&q_vec(&[3, 4])));
        assert!(!p.contains(&q_vec(&[3, 5])));
    }

    #[test]
    fn simplex_volumes() {
        assert_eq!(hull_of(&[&[0, 0], &[1, 0], &[0, 1]]).volume(), q_frac(1, 2));
        assert_eq!(hull_of(&[&[0, 0], &[2, 0], &[0, 2]]).volume(), q_int(2));
        assert_eq!(
            hull_of(&[&[0, 0, 0], &[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]).volume(),
            q_frac(1, 6)
        );
        assert_eq!(
            hull_of(&[
                &[0, 0, 0, 0],
                &[1, 0, 0, 0],
                &[0, 1, 0, 0],
                &[0, 0, 1, 0],
                &[0, 0, 0, 1]
            ])
            .volume(),
            q_frac(1, 24)
        );
    }

    #[test]
    fn cube_with_degenerate_faces() {
        let mut pts = Vec::new();
        for x in 0..=2 {
            for y in 0..=2 {
                for z in 0..=2 {
                    pts.push(q_vec(&[x, y, z]));
                }
            }
        }
        let p = convex_hull(&pts).unwrap();
        assert_eq!(p.vertices().len(), 8);
        assert_eq!(p.halfspaces().len(), 6);
        assert_eq!(p.volume(), q_int(8));
    }

    #[test]
    fn octahedron_volume() {
        let p = hull_of(&[
            &[1, 0, 0],
            &[-1, 0, 0],
            &[0, 1, 0],
            &[0, -1, 0],
            &[0, 0, 1],
            &[0, 0, -1],
            &[0, 0, 0],
        ]);
        assert_eq!(p.vertices().len(), 6);
        assert_eq!(p.halfspaces().len(), 8);
        assert_eq!(p.volume(), q_frac(4, 3));
    }

    #[test]
    fn flat_polygon_in_space() {
        let p = hull_of(&[&[0, 0, 1], &[1, 0, 1], &[0, 1, 1], &[1, 1, 1]]);
        assert_eq!(p.dim(), 2);
        assert_eq!(p.volume(), Q::zero());
        assert_eq!(p.relative_chart_volume(), q_int(1));
        assert!(p.contains(&[q_frac(1, 2), q_frac(1, 2), q_int(1)]));
        assert!(!p.contains(&[q_frac(1, 2), q_frac(1, 2), q_int(0)]));
    }

    #[test]
    fn lattice_points_of_simplices_and_segments() {
        let unit = hull_of(&[&[0, 0], &[1, 0], &[0, 1]]);
        let pts: Vec<Vec<i64>> = unit
            .lattice_points()
            .unwrap()
            .iter()
            .map(|e| e.coords().to_vec())
            .collect();
        assert_eq!(pts, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(
            hull_of(&[&[0, 0], &[2, 0], &[0, 2]])
                .lattice_points()
                .unwrap()
                .len(),
            6
        );
        let seg = hull_of(&[&[0, 0], &[2, 2]]);
        let pts: Vec<Vec<i64>> = seg
            .lattice_points()
            .unwrap()
            .iter()
            .map(|e| e.coords().to_vec())
            .collect();
        assert_eq!(pts, vec![vec![0, 0], vec![1, 1], vec![2, 2]]);
    }

    #[test]
    fn lattice_point_cap() {
        let big = hull_of(&[&[0, 0], &[1000, 0], &[0, 1000]]);
        assert!(matches!(
            big.lattice_points_capped(1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn vrep_text_round_trip() {
        let p =
            convex_hull(&[q_vec(&[0, 0]), vec![q_frac(1, 2), q_int(0)], q_vec(&[0, 1])]).unwrap();
        let text = p.to_vrep_text();
        assert!(text.contains("1/2 0/1"));
        let back = RationalPolytope::from_vrep_text(&text).unwrap();
        assert_eq!(back, p);
        assert!(RationalPolytope::from_vrep_text("1/2 x").is_err());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(convex_hull(&[]).is_err());
    }
}
