//! Total Monge-Ampère masses of toric symbols. For a convex symbol `u` on
//! `ℝⁿ` the non-pluripolar mass is `n!·Leb(∇u(ℝⁿ))`; for a PL symbol this is
//! `n!·vol(conv(active slopes))`, computed exactly, and independently by
//! integrating Hessian determinants of a smoothing on a grid.

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::envelope::{
    envelope_level, evaluate_on_grid, log_sum_exp, GridSpec, PLConvexFunction, SmoothToricWeight,
};
use crate::error::{Error, Result};
use crate::lattice_series::MonomialSeries;
use crate::lp::upper_envelope_value;
use crate::polytope::{convex_hull, mk_self_intersection, RationalPolytope};
use crate::rational::{factorial, q_from_f64, q_int, q_to_f64, QVector, Q};

/// Indices of the pieces that attain the maximum somewhere.
///
/// Piece `i` is active iff no point of the lifted hull `conv{(αⱼ, cⱼ)}` lies
/// strictly above `(αᵢ, cᵢ)`, which by LP duality is `∃t: ℓᵢ(t) ≥ ℓⱼ(t) ∀j`.
/// Equivalently some halfspace of the lifted hull that is tight at the
/// point has a positive last normal coordinate. Computed exactly.
pub fn active_pieces(f: &PLConvexFunction) -> Result<Vec<usize>> {
    let lifted: Vec<QVector> = f
        .pieces()
        .iter()
        .map(|p| {
            let mut v = p.slope.clone();
            v.push(q_from_f64(p.intercept)?);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let hull = convex_hull(&lifted)?;
    let upward: Vec<&crate::polytope::Halfspace> = hull
        .halfspaces()
        .iter()
        .filter(|h| h.normal.last().is_some_and(|x| x.is_positive()))
        .collect();
    Ok((0..lifted.len())
        .filter(|&i| upward.iter().any(|h| h.slack(&lifted[i]).is_zero()))
        .collect())
}

/// Distinct slopes of the active pieces, in piece order.
pub fn active_slopes(f: &PLConvexFunction) -> Result<Vec<QVector>> {
    let mut out: Vec<QVector> = Vec::new();
    for i in active_pieces(f)? {
        let s = &f.pieces()[i].slope;
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    Ok(out)
}

/// Exact mass `n!·vol(conv(active slopes))`; zero for a lower-dimensional hull.
pub fn ma_mass_pl(f: &PLConvexFunction) -> Result<Q> {
    let slopes = active_slopes(f)?;
    Ok(convex_hull(&slopes)?.volume() * Q::from_integer(factorial(f.n())))
}

/// A convex symbol whose gradient image closure is a known polytope.
pub trait MassSymbol: Sync {
    fn dim(&self) -> usize;
    fn value(&self, t: &[f64]) -> f64;
    fn gradient(&self, t: &[f64]) -> Vec<f64>;
    /// Closure of the gradient image.
    fn slope_hull(&self) -> Result<RationalPolytope>;
    /// Length over which the Hessian varies; bounds the difference step.
    fn curvature_scale(&self) -> f64 {
        1.0
    }
}

/// Central-difference Hessian at `t` (restored on return).
fn central_hessian(u: &dyn MassSymbol, t: &mut [f64], step: &[f64]) -> Vec<Vec<f64>> {
    let n = t.len();
    let center = u.value(t);
    let mut hess = vec![vec![0.0; n]; n];
    let eval = |t: &mut [f64], moves: &[(usize, f64)]| {
        for &(a, dx) in moves {
            t[a] += dx;
        }
        let v = u.value(t);
        for &(a, dx) in moves {
            t[a] -= dx;
        }
        v
    };
    for a in 0..n {
        let plus = eval(t, &[(a, step[a])]);
        let minus = eval(t, &[(a, -step[a])]);
        hess[a][a] = (plus - 2.0 * center + minus) / (step[a] * step[a]);
        for b in a + 1..n {
            let pp = eval(t, &[(a, step[a]), (b, step[b])]);
            let pm = eval(t, &[(a, step[a]), (b, -step[b])]);
            let mp = eval(t, &[(a, -step[a]), (b, step[b])]);
            let mm = eval(t, &[(a, -step[a]), (b, -step[b])]);
            let v = (pp - pm - mp + mm) / (4.0 * step[a] * step[b]);
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    hess
}

impl MassSymbol for SmoothToricWeight {
    fn dim(&self) -> usize {
        self.n()
    }
    fn value(&self, t: &[f64]) -> f64 {
        self.evaluate(t)
    }
    fn gradient(&self, t: &[f64]) -> Vec<f64> {
        SmoothToricWeight::gradient(self, t)
    }
    fn slope_hull(&self) -> Result<RationalPolytope> {
        let n = self.n();
        let mut pts = vec![vec![Q::zero(); n]];
        for i in 0..n {
            let mut v = vec![Q::zero(); n];
            v[i] = q_int(self.degree() as i64);
            pts.push(v);
        }
        convex_hull(&pts)
    }
}

/// `u_ε = ε·log Σ exp(ℓᵢ/ε)`, a smooth convex function decreasing to the PL
/// function as `ε → 0` with the same gradient image.
#[derive(Debug, Clone)]
pub struct SmoothedPL<'a> {
    pub f: &'a PLConvexFunction,
    pub epsilon: f64,
}

impl SmoothedPL<'_> {
    fn weights(&self, t: &[f64]) -> Vec<f64> {
        let vals: Vec<f64> = self
            .f
            .pieces()
            .iter()
            .map(|p| p.value(t) / self.epsilon)
            .collect();
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = vals.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|x| x / z).collect()
    }
}

impl MassSymbol for SmoothedPL<'_> {
    fn dim(&self) -> usize {
        self.f.n()
    }
    fn value(&self, t: &[f64]) -> f64 {
        self.epsilon * log_sum_exp(self.f.pieces().iter().map(|p| p.value(t) / self.epsilon))
    }
    fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let w = self.weights(t);
        let mut g = vec![0.0; self.f.n()];
        for (p, wi) in self.f.pieces().iter().zip(w) {
            for (gi, s) in g.iter_mut().zip(p.slope_f64()) {
                *gi += wi * s;
            }
        }
        g
    }
    fn slope_hull(&self) -> Result<RationalPolytope> {
        let slopes: Vec<QVector> = self.f.pieces().iter().map(|p| p.slope.clone()).collect();
        convex_hull(&slopes)
    }
    fn curvature_scale(&self) -> f64 {
        self.epsilon
    }
}

/// `f + δ·exp(−|t − center|²/2)`; the bump changes neither the gradient image nor the mass.
pub struct Perturbed<'a> {
    pub base: &'a dyn MassSymbol,
    pub delta: f64,
    pub center: Vec<f64>,
}

impl MassSymbol for Perturbed<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, t: &[f64]) -> f64 {
        let r2: f64 = t
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.base.value(t) + self.delta * (-0.5 * r2).exp()
    }
    fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let r2: f64 = t
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let b = self.delta * (-0.5 * r2).exp();
        self.base
            .gradient(t)
            .iter()
            .zip(t.iter().zip(&self.center))
            .map(|(g, (x, c))| g - b * (x - c))
            .collect()
    }
    fn slope_hull(&self) -> Result<RationalPolytope> {
        self.base.slope_hull()
    }
    fn curvature_scale(&self) -> f64 {
        self.base.curvature_scale().min(1.0)
    }
}

/// Grid integration settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMassOptions {
    /// Allowed distance between the gradient of a box-boundary node and the boundary of the slope hull.
    pub coverage_tolerance: f64,
    /// Allowed ratio of clamped negative determinant mass to positive mass.
    pub negative_tolerance: f64,
    /// How often [`ma_mass_grid_pl`] may double a box that is too small.
    pub max_box_doublings: usize,
}

impl Default for GridMassOptions {
    fn default() -> Self {
        GridMassOptions {
            coverage_tolerance: 1e-3,
            negative_tolerance: 0.01,
            max_box_doublings: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMass {
    pub mass: f64,
    /// `n!·∫ max(−det, 0)`, the clamped part.
    pub negative_mass: f64,
    pub negative_fraction: f64,
    /// Largest distance from a box-boundary gradient to the slope-hull boundary.
    pub coverage_deficit: f64,
    pub resolution: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub epsilon: Option<f64>,
}

/// `[−20, 20]ⁿ` with 4096 nodes for `n = 1`, `512²` for `n = 2` and `64ⁿ` above.
pub fn default_mass_grid(n: usize) -> GridSpec {
    let res = match n {
        1 => 4096,
        2 => 512,
        _ => 64,
    };
    GridSpec::cube(n, -20, 20, res).expect("valid default grid")
}

/// `ε = 2·(box width / resolution)` along the first axis.
pub fn default_smoothing(grid: &GridSpec) -> f64 {
    2.0 * q_to_f64(&(&grid.upper[0] - &grid.lower[0])) / grid.resolution[0] as f64
}

fn determinant_f64(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    match n {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => {
            let mut det = 1.0;
            for c in 0..n {
                let p = (c..n)
                    .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
                    .expect("nonempty");
                if m[p][c] == 0.0 {
                    return 0.0;
                }
                if p != c {
                    m.swap(p, c);
                    det = -det;
                }
                det *= m[c][c];
                for r in c + 1..n {
                    let factor = m[r][c] / m[c][c];
                    for k in c..n {
                        m[r][k] -= factor * m[c][k];
                    }
                }
            }
            det
        }
    }
}

/// `n!·∫_box max(det D²u, 0) dt` by the trapezoid rule on the grid nodes.
///
/// Hessians are central differences with step `min(spacing, scale/64)`,
/// where `scale` is the symbol's curvature length ([`MassSymbol::curvature_scale`]).
/// Tying the step to the grid spacing instead makes the mixed and pure
/// second differences see a ridge of width `ε` at different resolutions,
/// which leaves spurious determinant mass along every ridge.
pub fn ma_mass_grid(
    u: &dyn MassSymbol,
    grid: &GridSpec,
    options: &GridMassOptions,
) -> Result<GridMass> {
    let n = u.dim();
    if grid.dim() != n {
        return Err(Error::InvalidArgument(
            "grid dimension does not match the symbol".into(),
        ));
    }
    let h: Vec<f64> = (0..n).map(|a| grid.spacing(a)).collect();
    let step: Vec<f64> = h
        .iter()
        .map(|&x| x.min(u.curvature_scale() / 64.0))
        .collect();
    let lower: Vec<f64> = grid.lower.iter().map(q_to_f64).collect();
    let upper: Vec<f64> = grid.upper.iter().map(q_to_f64).collect();

    let row_len: usize = grid.resolution[1..].iter().product();
    let nfact = (1..=n).map(|i| i as f64).product::<f64>();
    // Each row along the first axis is reduced sequentially, rows are then summed in order.
    let rows: Vec<(f64, f64)> = (0..grid.resolution[0])
        .into_par_iter()
        .map(|i0| {
            let mut pos = 0.0;
            let mut neg = 0.0;
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            let mut t = vec![0.0; n];
            for rest in 0..row_len {
                let mut r = rest;
                for a in (1..n).rev() {
                    idx[a] = r % grid.resolution[a];
                    r /= grid.resolution[a];
                }
                for a in 0..n {
                    t[a] = grid.coordinate(a, idx[a]);
                }
                let det = determinant_f64(central_hessian(u, &mut t, &step));
                let weight: f64 = (0..n)
                    .map(|a| {
                        if idx[a] == 0 || idx[a] + 1 == grid.resolution[a] {
                            0.5 * h[a]
                        } else {
                            h[a]
                        }
                    })
                    .product();
                if det >= 0.0 {
                    pos += det * weight;
                } else {
                    neg -= det * weight;
                }
            }
            (pos, neg)
        })
        .collect();
    let (pos, neg) = rows
        .iter()
        .fold((0.0, 0.0), |(p, q), (a, b)| (p + a, q + b));
    let mass = nfact * pos;
    let negative_mass = nfact * neg;
    let negative_fraction = if pos > 0.0 {
        neg / pos
    } else if neg > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };

    let coverage_deficit = coverage_deficit(u, grid, &lower, &upper)?;
    if coverage_deficit > options.coverage_tolerance {
        return Err(Error::BoxTooSmall(format!(
            "gradients on the box boundary stay {coverage_deficit:.3e} away from the slope hull boundary"
        )));
    }
    if negative_fraction > options.negative_tolerance {
        return Err(Error::SmoothingTooSmall {
            fraction: negative_fraction,
        });
    }
    Ok(GridMass {
        mass,
        negative_mass,
        negative_fraction,
        coverage_deficit,
        resolution: grid.resolution.clone(),
        lower,
        upper,
        epsilon: None,
    })
}

/// Largest distance from `∇u(x)`, `x` on the box boundary, to the boundary of
/// the slope hull, or from a hull vertex to the nearest such gradient.
fn coverage_deficit(
    u: &dyn MassSymbol,
    grid: &GridSpec,
    lower: &[f64],
    upper: &[f64],
) -> Result<f64> {
    let hull = u.slope_hull()?;
    if !hull.is_full_dimensional() {
        return Ok(0.0);
    }
    let facets: Vec<(Vec<f64>, f64)> = hull
        .halfspaces()
        .iter()
        .map(|hs| {
            let a: Vec<f64> = hs.normal.iter().map(q_to_f64).collect();
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            (
                a.iter().map(|x| x / norm).collect(),
                q_to_f64(&hs.offset) / norm,
            )
        })
        .collect();
    let n = grid.dim();
    let mut boundary = Vec::new();
    for face_axis in 0..n {
        for &side in &[lower[face_axis], upper[face_axis]] {
            // A coarse sweep over each face.
            let per_axis = grid
                .resolution
                .iter()
                .map(|&r| r.min(129))
                .collect::<Vec<_>>();
            let count: usize = (0..n)
                .filter(|&a| a != face_axis)
                .map(|a| per_axis[a])
                .product();
            for flat in 0..count {
                let mut r = flat;
                let mut t = vec![0.0; n];
                for a in (0..n).rev() {
                    if a == face_axis {
                        t[a] = side;
                        continue;
                    }
                    let m = per_axis[a];
                    t[a] = lower[a] + (upper[a] - lower[a]) * (r % m) as f64 / (m - 1) as f64;
                    r /= m;
                }
                boundary.push(t);
            }
        }
    }
    let gradients: Vec<Vec<f64>> = boundary.par_iter().map(|t| u.gradient(t)).collect();
    let shell = gradients
        .iter()
        .map(|g| {
            facets
                .iter()
                .map(|(a, b)| b - a.iter().zip(g).map(|(x, y)| x * y).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .max(0.0)
        })
        .fold(0.0, f64::max);
    // Every vertex of the hull must be approached from the box boundary.
    let reach = hull
        .vertices()
        .iter()
        .map(|v| {
            let v: Vec<f64> = v.iter().map(q_to_f64).collect();
            gradients
                .iter()
                .map(|g| {
                    g.iter()
                        .zip(&v)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let deficit = shell.max(reach);
    Ok(deficit)
}

/// Grid mass of the `ε`-smoothing of a PL symbol.
///
/// After an [`Error::BoxTooSmall`] the box is doubled about its center, with
/// the node count doubled as well so the spacing is kept, at most
/// [`GridMassOptions::max_box_doublings`] times.
pub fn ma_mass_grid_pl(
    f: &PLConvexFunction,
    grid: &GridSpec,
    epsilon: f64,
    options: &GridMassOptions,
) -> Result<GridMass> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(
            "smoothing parameter must be positive".into(),
        ));
    }
    let mut current = grid.clone();
    let mut doublings = 0;
    loop {
        match ma_mass_grid(&SmoothedPL { f, epsilon }, &current, options) {
            Ok(mut out) => {
                out.epsilon = Some(epsilon);
                return Ok(out);
            }
            Err(Error::BoxTooSmall(_)) if doublings < options.max_box_doublings => {
                let two = q_int(2);
                let mid: QVector = current
                    .lower
                    .iter()
                    .zip(&current.upper)
                    .map(|(a, b)| (a + b) / &two)
                    .collect();
                let lower = current
                    .lower
                    .iter()
                    .zip(&mid)
                    .map(|(a, m)| m + (a - m) * &two)
                    .collect();
                let upper = current
                    .upper
                    .iter()
                    .zip(&mid)
                    .map(|(b, m)| m + (b - m) * &two)
                    .collect();
                let resolution = current.resolution.iter().map(|r| 2 * r - 1).collect();
                current = GridSpec::new(lower, upper, resolution)?;
                doublings += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Exact and grid masses of one PL symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassReport {
    #[serde(serialize_with = "crate::serde_q::serialize_option")]
    pub exact_mass: Option<Q>,
    pub grid: Option<GridMass>,
    pub active_slope_count: usize,
    /// `|exact − grid| / max(exact, ε)` when both are present.
    pub discrepancy: Option<f64>,
}

pub fn mass_report(
    f: &PLConvexFunction,
    grid: Option<(&GridSpec, f64)>,
    options: &GridMassOptions,
) -> Result<MassReport> {
    let active = active_slopes(f)?;
    let exact = convex_hull(&active)?.volume() * Q::from_integer(factorial(f.n()));
    let grid = grid
        .map(|(g, eps)| ma_mass_grid_pl(f, g, eps, options))
        .transpose()?;
    let discrepancy = grid
        .as_ref()
        .map(|g| (q_to_f64(&exact) - g.mass).abs() / q_to_f64(&exact).max(1e-12));
    Ok(MassReport {
        exact_mass: Some(exact),
        grid,
        active_slope_count: active.len(),
        discrepancy,
    })
}

/// Outcome of the comparison principle on one pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Comparison {
    /// `g ≤ f + C` does not hold, nothing to check.
    Skipped,
    Checked {
        holds: bool,
        mass_f: Q,
        mass_g: Q,
    },
}

/// If `g ≤ f + C` everywhere, checks `mass(g) ≤ mass(f)`.
///
/// The hypothesis is decided exactly: `sup_t ℓ_j(t) − f(t) = e_j + f*(β_j)`
/// for each piece `ℓ_j = ⟨β_j,·⟩ + e_j` of `g`, and `f*(β) = −(concave
/// envelope of f's pieces at β)`, infinite outside the slope hull of `f`. A
/// grid evaluation on `check_box` is done as well.
pub fn comparison_check(
    f: &PLConvexFunction,
    g: &PLConvexFunction,
    c: f64,
    check_box: &GridSpec,
) -> Result<Comparison> {
    if f.n() != g.n() {
        return Err(Error::InvalidArgument(
            "symbols live in different dimensions".into(),
        ));
    }
    let f_slopes: Vec<QVector> = f.pieces().iter().map(|p| p.slope.clone()).collect();
    let f_heights: Vec<Q> = f
        .pieces()
        .iter()
        .map(|p| q_from_f64(p.intercept))
        .collect::<Result<_>>()?;
    let bound = q_from_f64(c)?;
    for p in g.pieces() {
        let Some(env) = upper_envelope_value(&f_slopes, &f_heights, &p.slope) else {
            return Ok(Comparison::Skipped);
        };
        if q_from_f64(p.intercept)? - env > bound {
            return Ok(Comparison::Skipped);
        }
    }
    let fv = evaluate_on_grid(f, check_box)?;
    let gv = evaluate_on_grid(g, check_box)?;
    if fv
        .values
        .iter()
        .zip(&gv.values)
        .any(|(a, b)| *b > a + c + 1e-12 * (1.0 + a.abs()))
    {
        return Ok(Comparison::Skipped);
    }
    let mass_f = ma_mass_pl(f)?;
    let mass_g = ma_mass_pl(g)?;
    Ok(Comparison::Checked {
        holds: mass_g <= mass_f,
        mass_f,
        mass_g,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelMass {
    pub level: u64,
    #[serde(serialize_with = "crate::serde_q::serialize")]
    pub mass: Q,
    /// `M_kⁿ / kⁿ` from the hull of the exponent set.
    #[serde(serialize_with = "crate::serde_q::serialize")]
    pub self_intersection: Q,
    pub active_slope_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassLimit {
    pub levels: Vec<LevelMass>,
    /// Mass of the union of all levels, which equals the last level's mass.
    #[serde(serialize_with = "crate::serde_q::serialize")]
    pub equilibrium_mass: Q,
}

/// Per-level exact masses of `φ_k` along a divisibility schedule. Errors with
/// [`Error::Invariant`] if a mass differs from `M_kⁿ/kⁿ`, if masses decrease,
/// or if a vertex of `conv(A_k/k)` is inactive.
pub fn analytic_mass_limit(
    series: &MonomialSeries,
    phi: &SmoothToricWeight,
    schedule: &[u64],
) -> Result<MassLimit> {
    crate::envelope::check_schedule(schedule)?;
    let mut levels = Vec::with_capacity(schedule.len());
    let mut all_slopes: Vec<QVector> = Vec::new();
    for &k in schedule {
        let f = envelope_level(series, k, phi)?;
        let active = active_slopes(&f)?;
        let hull = convex_hull(&active)?;
        let mass = hull.volume() * Q::from_integer(factorial(series.n()));
        let mk = mk_self_intersection(series, k)?;
        for v in mk.hull.vertices() {
            let scaled: QVector = v.iter().map(|x| x / q_int(k as i64)).collect();
            if !active.contains(&scaled) {
                return Err(Error::Invariant(format!(
                    "hull vertex of A_{k} inactive in φ_{k}"
                )));
            }
        }
        if mass != mk.normalized {
            return Err(Error::Invariant(format!(
                "level {k}: PL mass differs from M_kⁿ/kⁿ"
            )));
        }
        if let Some(prev) = levels.last().map(|l: &LevelMass| l.mass.clone()) {
            if mass < prev {
                return Err(Error::Invariant(format!("mass decreased at level {k}")));
            }
        }
        all_slopes.extend(active.iter().cloned());
        levels.push(LevelMass {
            level: k,
            mass,
            self_intersection: mk.normalized,
            active_slope_count: active.len(),
        });
    }
    let equilibrium_mass =
        convex_hull(&all_slopes)?.volume() * Q::from_integer(factorial(series.n()));
    Ok(MassLimit {
        levels,
        equilibrium_mass,
    })
}

/// The families of approximations exercised by [`monotone_convergence_harness`].
pub enum Family<'a> {
    /// Smoothings `u_ε ↓ f` for decreasing `ε`.
    Smoothing {
        f: &'a PLConvexFunction,
        epsilons: Vec<f64>,
        grid: GridSpec,
    },
    /// Maxima of the first `m` pieces of `f`, `m = 1, …, #pieces`, increasing to `f`.
    Truncation {
        f: &'a PLConvexFunction,
        epsilon: f64,
        grid: GridSpec,
    },
    /// `φ + δ·bump` for decreasing `δ`, compared with the exact mass of `φ`.
    Perturbation {
        phi: &'a SmoothToricWeight,
        deltas: Vec<f64>,
        grid: GridSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessReport {
    pub regime: String,
    /// ε, m or δ per step.
    pub parameters: Vec<f64>,
    pub grid_masses: Vec<f64>,
    /// Exact mass per step (the PL mass of the step's symbol).
    pub exact_masses: Vec<f64>,
    /// Exact mass of the limit symbol.
    pub limit_mass: f64,
    pub final_error: f64,
    /// Fitted exponent `p` in `|error| ≈ C·parameterᵖ`, when the errors allow a fit.
    pub convergence_rate: Option<f64>,
}

pub fn monotone_convergence_harness(
    family: &Family<'_>,
    options: &GridMassOptions,
) -> Result<HarnessReport> {
    let (regime, parameters, grid_masses, exact_masses, limit_mass) = match family {
        Family::Smoothing { f, epsilons, grid } => {
            let exact = q_to_f64(&ma_mass_pl(f)?);
            let masses = epsilons
                .iter()
                .map(|&e| ma_mass_grid_pl(f, grid, e, options).map(|g| g.mass))
                .collect::<Result<Vec<_>>>()?;
            (
                "smoothing",
                epsilons.clone(),
                masses,
                vec![exact; epsilons.len()],
                exact,
            )
        }
        Family::Truncation { f, epsilon, grid } => {
            let limit = q_to_f64(&ma_mass_pl(f)?);
            let mut params = Vec::new();
            let mut masses = Vec::new();
            let mut exacts = Vec::new();
            for m in 1..=f.pieces().len() {
                let sub = PLConvexFunction::new(
                    f.n(),
                    f.pieces()[..m]
                        .iter()
                        .map(|p| (p.slope.clone(), p.intercept))
                        .collect(),
                )?;
                params.push(m as f64);
                exacts.push(q_to_f64(&ma_mass_pl(&sub)?));
                masses.push(ma_mass_grid_pl(&sub, grid, *epsilon, options)?.mass);
            }
            ("truncation", params, masses, exacts, limit)
        }
        Family::Perturbation { phi, deltas, grid } => {
            let exact =
                q_to_f64(&(phi.slope_hull()?.volume() * Q::from_integer(factorial(phi.n()))));
            let center = vec![0.0; phi.n()];
            let masses = deltas
                .iter()
                .map(|&delta| {
                    let p = Perturbed {
                        base: *phi,
                        delta,
                        center: center.clone(),
                    };
                    ma_mass_grid(&p, grid, options).map(|g| g.mass)
                })
                .collect::<Result<Vec<_>>>()?;
            (
                "perturbation",
                deltas.clone(),
                masses,
                vec![exact; deltas.len()],
                exact,
            )
        }
    };
    let final_error = (grid_masses.last().copied().unwrap_or(f64::NAN) - limit_mass).abs();
    let convergence_rate = fit_rate(&parameters, &grid_masses, limit_mass);
    Ok(HarnessReport {
        regime: regime.into(),
        parameters,
        grid_masses,
        exact_masses,
        limit_mass,
        final_error,
        convergence_rate,
    })
}

fn fit_rate(params: &[f64], masses: &[f64], limit: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = params
        .iter()
        .zip(masses)
        .filter(|(p, m)| **p > 0.0 && (**m - limit).abs() > 1e-14)
        .map(|(p, m)| (p.ln(), (m - limit).abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    Some(crate::lattice_series::fit_affine(&xs, &ys).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{equilibrium_symbol, fubini_study_weight};
    use crate::lattice_series::{complete_series, example36_series, ideal_series, ExponentVector};
    use crate::rational::{q_frac, q_vec};

    fn pl(pieces: &[(&[i64], f64)]) -> PLConvexFunction {
        let n = pieces[0].0.len();
        PLConvexFunction::new(n, pieces.iter().map(|(s, c)| (q_vec(s), *c)).collect()).unwrap()
    }

    /// Slopes attaining the max somewhere on a fine 1-D grid.
    fn brute_active_1d(f: &PLConvexFunction) -> Vec<QVector> {
        let mut out: Vec<QVector> = Vec::new();
        for i in 0..=200_000 {
            let t = -100.0 + 0.001 * i as f64;
            let v = f.value(&[t]);
            for p in f.pieces() {
                if p.value(&[t]) == v && !out.contains(&p.slope) {
                    out.push(p.slope.clone());
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn active_slope_examples() {
        let f = pl(&[(&[0], 0.0), (&[1], 0.0)]);
        assert_eq!(active_slopes(&f).unwrap().len(), 2);
        let dominated = pl(&[(&[0], 0.0), (&[1], 0.0), (&[1], -5.0)]);
        assert_eq!(active_pieces(&dominated).unwrap(), vec![0, 1]);
        assert_eq!(
            active_slopes(&dominated).unwrap(),
            vec![q_vec(&[0]), q_vec(&[1])]
        );
        let lifted = pl(&[(&[0], 0.0), (&[2], 0.0), (&[1], 10.0)]);
        let mut act = active_slopes(&lifted).unwrap();
        act.sort();
        assert_eq!(act, brute_active_1d(&lifted));
        assert!(act.contains(&q_vec(&[1])));
        let sunk = pl(&[(&[0], 0.0), (&[2], 0.0), (&[1], -10.0)]);
        assert_eq!(
            active_slopes(&sunk).unwrap(),
            vec![q_vec(&[0]), q_vec(&[2])]
        );
    }

    #[test]
    fn pl_mass_examples() {
        assert_eq!(
            ma_mass_pl(&pl(&[(&[0], 0.0), (&[1], 0.0)])).unwrap(),
            q_int(1)
        );
        assert_eq!(
            ma_mass_pl(&pl(&[(&[-1], 0.0), (&[1], 0.0)])).unwrap(),
            q_int(2)
        );
        let fs = fubini_study_weight(2, 1).unwrap();
        let p = equilibrium_symbol(&complete_series(2, 1).unwrap(), &fs, &[1]).unwrap();
        assert_eq!(ma_mass_pl(&p.function).unwrap(), q_int(1));
        assert_eq!(ma_mass_pl(&pl(&[(&[0, 0], 0.0)])).unwrap(), q_int(0));
    }

    #[test]
    fn grid_mass_one_dimensional() {
        let fs = fubini_study_weight(1, 1).unwrap();
        let g = ma_mass_grid(&fs, &default_mass_grid(1), &GridMassOptions::default()).unwrap();
        assert!((g.mass - 1.0).abs() < 0.01, "{g:?}");
        let f = pl(&[(&[0], 0.0), (&[1], 0.0)]);
        let g =
            ma_mass_grid_pl(&f, &default_mass_grid(1), 0.05, &GridMassOptions::default()).unwrap();
        assert!((g.mass - 1.0).abs() < 0.01, "{g:?}");
    }

    #[test]
    fn box_too_small_is_reported() {
        // The slope-1 piece only takes over beyond t = 30.
        let f = pl(&[(&[0], 0.0), (&[1], -30.0)]);
        let grid = GridSpec::cube(1, -20, 20, 4096).unwrap();
        assert!(matches!(
            ma_mass_grid_pl(&f, &grid, 0.02, &GridMassOptions::default()),
            Err(Error::BoxTooSmall(_))
        ));
    }

    #[test]
    fn comparison_examples() {
        let bx = GridSpec::cube(1, -10, 10, 201).unwrap();
        let f = pl(&[(&[0], 0.0), (&[1], 0.0)]);
        let zero = pl(&[(&[0], 0.0)]);
        match comparison_check(&f, &zero, 0.0, &bx).unwrap() {
            Comparison::Checked { holds, mass_g, .. } => {
                assert!(holds);
                assert_eq!(mass_g, q_int(0));
            }
            Comparison::Skipped => panic!("hypothesis holds"),
        }
        let abs = pl(&[(&[-1], 0.0), (&[1], 0.0)]);
        let half = PLConvexFunction::new(
            1,
            vec![(vec![q_frac(-1, 2)], 0.0), (vec![q_frac(1, 2)], 0.0)],
        )
        .unwrap();
        assert!(matches!(
            comparison_check(&abs, &half, 0.0, &bx).unwrap(),
            Comparison::Checked { holds: true, .. }
        ));
        // |t| is not below t/2 + C for any C.
        assert_eq!(
            comparison_check(&half, &abs, 100.0, &bx).unwrap(),
            Comparison::Skipped
        );
    }

    #[test]
    fn comparison_on_subseries() {
        let fs = fubini_study_weight(1, 1).unwrap();
        let w = complete_series(1, 1).unwrap();
        let f = envelope_level(&w, 2, &fs).unwrap();
        let g = PLConvexFunction::new(
            1,
            f.pieces()
                .iter()
                .filter(|p| p.slope != vec![q_frac(1, 2)])
                .map(|p| (p.slope.clone(), p.intercept))
                .collect(),
        )
        .unwrap();
        match comparison_check(&f, &g, 0.0, &GridSpec::cube(1, -10, 10, 101).unwrap()).unwrap() {
            Comparison::Checked {
                holds,
                mass_f,
                mass_g,
            } => {
                assert!(holds);
                assert_eq!(mass_f, q_int(1));
                assert_eq!(mass_g, q_int(1));
            }
            Comparison::Skipped => panic!("subseries is dominated"),
        }
    }

    #[test]
    fn mass_limit_examples() {
        let fs1 = fubini_study_weight(1, 1).unwrap();
        let m = analytic_mass_limit(&complete_series(1, 1).unwrap(), &fs1, &[1, 2, 4]).unwrap();
        assert!(m.levels.iter().all(|l| l.mass == q_int(1)));

        let fs2 = fubini_study_weight(2, 1).unwrap();
        let m = analytic_mass_limit(&example36_series(), &fs2, &[1, 2, 4]).unwrap();
        // Hull of A_k/k is the triangle (0,0), (1,0), (1/k, 1 − 1/k): mass (k − 1)/k.
        let got: Vec<Q> = m.levels.iter().map(|l| l.mass.clone()).collect();
        assert_eq!(got, vec![q_int(0), q_frac(1, 2), q_frac(3, 4)]);

        let fsd = fubini_study_weight(2, 2).unwrap();
        let ideal = ideal_series(
            2,
            2,
            vec![
                ExponentVector::new(vec![1, 0]).unwrap(),
                ExponentVector::new(vec![0, 2]).unwrap(),
            ],
        )
        .unwrap();
        let m = analytic_mass_limit(&ideal, &fsd, &[1, 2, 4]).unwrap();
        assert!(m.levels.iter().all(|l| l.mass == q_int(2)));
    }
}
