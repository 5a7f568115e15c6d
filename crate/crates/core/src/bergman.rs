//! L²-normalized Bergman weights `u_k = (1/k)·log Σ |z^α|² / ‖z^α‖²_{kφ}`.
//!
//! With a torus-invariant volume form the monomials are pairwise orthogonal,
//! so the Bergman kernel on the diagonal only needs one norm per exponent.
//! In log coordinates `‖z^α‖² = ∫ exp(⟨α,t⟩ − kφ(t))·ρ(t) dt` with `ρ` the
//! density of the volume form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::envelope::{
    evaluate_on_grid, golden_line_max, log_sum_exp, GridSpec, PLConvexFunction, SmoothToricWeight,
};
use crate::error::{Error, Result};
use crate::lattice_series::{ExponentVector, MonomialSeries};

/// Trapezoid settings for the monomial norms.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub initial_nodes: usize,
    /// Node cap per axis for one-dimensional integrals.
    pub max_nodes_1d: usize,
    /// Node cap per axis for two-dimensional integrals.
    pub max_nodes_2d: usize,
    pub relative_tolerance: f64,
    /// The box is grown until the integrand is below `tail · peak` outside it.
    pub tail: f64,
    /// Largest admissible `|t|` for the box.
    pub box_cap: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            initial_nodes: 128,
            max_nodes_1d: 8192,
            max_nodes_2d: 512,
            relative_tolerance: 1e-9,
            tail: 1e-12,
            box_cap: 1e3,
        }
    }
}

/// `log ‖z^α‖²` together with the quadrature that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEstimate {
    pub log_norm: f64,
    pub nodes_per_axis: usize,
    pub converged: bool,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Log of the integrand `exp(⟨α,t⟩ − kφ(t))·ρ(t)`, where `α` may be fractional.
fn log_integrand(alpha: &[f64], k: u64, phi: &SmoothToricWeight, t: &[f64]) -> f64 {
    let lin: f64 = alpha.iter().zip(t).map(|(a, b)| a * b).sum();
    lin - k as f64 * phi.evaluate(t) + phi.log_volume_density(t)
}

/// Coordinate ascent for a smooth concave function of at most a few variables.
fn concave_peak(g: &dyn Fn(&[f64]) -> f64, n: usize, limit: f64) -> Option<Vec<f64>> {
    let mut t = vec![0.0; n];
    for _ in 0..200 {
        let mut moved = 0.0f64;
        for axis in 0..n {
            let mut probe = t.clone();
            let x = golden_line_max(
                |x| {
                    probe[axis] = x;
                    g(&probe)
                },
                t[axis],
                0.5,
                1e-11,
                limit,
            )?;
            moved = moved.max((x - t[axis]).abs());
            t[axis] = x;
        }
        if moved < 1e-10 {
            break;
        }
    }
    Some(t)
}

/// Extent of `{g ≥ level}` along `axis` in direction `sign`, starting inside at `peak`.
/// For two variables the other coordinate is maximized out, giving the
/// bounding box of the convex superlevel set.
fn superlevel_extent(
    g: &dyn Fn(&[f64]) -> f64,
    peak: &[f64],
    axis: usize,
    sign: f64,
    level: f64,
    cap: f64,
) -> Option<f64> {
    let n = peak.len();
    let profile = |r: f64| -> Option<f64> {
        let mut t = peak.to_vec();
        t[axis] = peak[axis] + sign * r;
        if n == 1 {
            return Some(g(&t));
        }
        let other = 1 - axis;
        let mut probe = t.clone();
        let x = golden_line_max(
            |x| {
                probe[other] = x;
                g(&probe)
            },
            peak[other],
            0.5,
            1e-6,
            cap * 4.0,
        )?;
        t[other] = x;
        Some(g(&t))
    };
    let mut hi = 1.0;
    while profile(hi)? >= level {
        hi *= 2.0;
        if hi > cap {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if profile(mid)? >= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(peak[axis] + sign * hi)
}

fn trapezoid_log_sum(
    g: &dyn Fn(&[f64]) -> f64,
    lower: &[f64],
    upper: &[f64],
    nodes: usize,
    shift: f64,
) -> f64 {
    let n = lower.len();
    let h: Vec<f64> = (0..n)
        .map(|a| (upper[a] - lower[a]) / (nodes - 1) as f64)
        .collect();
    let weight = |i: usize| if i == 0 || i + 1 == nodes { 0.5 } else { 1.0 };
    let sum: f64 = match n {
        1 => {
            (0..nodes)
                .map(|i| weight(i) * (g(&[lower[0] + h[0] * i as f64]) - shift).exp())
                .sum::<f64>()
                * h[0]
        }
        _ => {
            let rows: Vec<f64> = (0..nodes)
                .map(|i| {
                    let t0 = lower[0] + h[0] * i as f64;
                    (0..nodes)
                        .map(|j| {
                            weight(i)
                                * weight(j)
                                * (g(&[t0, lower[1] + h[1] * j as f64]) - shift).exp()
                        })
                        .sum::<f64>()
                })
                .collect();
            rows.iter().sum::<f64>() * h[0] * h[1]
        }
    };
    shift + sum.ln()
}

/// `log ‖z^α‖²_{kφ}` for a possibly fractional exponent.
pub fn log_monomial_norm_at(
    alpha: &[f64],
    k: u64,
    phi: &SmoothToricWeight,
    spec: &QuadratureSpec,
) -> Result<NormEstimate> {
    let n = phi.n();
    if alpha.len() != n {
        return Err(Error::InvalidArgument(
            "exponent length does not match the weight".into(),
        ));
    }
    if n > 2 {
        return Err(Error::InvalidArgument(
            "monomial norms are implemented for n ≤ 2".into(),
        ));
    }
    let g = |t: &[f64]| log_integrand(alpha, k, phi, t);
    let not_captured = || Error::TailNotCaptured(format!("exponent {alpha:?} at level {k}"));
    let peak = concave_peak(&g, n, spec.box_cap).ok_or_else(not_captured)?;
    let top = g(&peak);
    let level = top + spec.tail.ln();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for a in 0..n {
        lower[a] =
            superlevel_extent(&g, &peak, a, -1.0, level, spec.box_cap).ok_or_else(not_captured)?;
        upper[a] =
            superlevel_extent(&g, &peak, a, 1.0, level, spec.box_cap).ok_or_else(not_captured)?;
    }
    let cap = if n == 1 {
        spec.max_nodes_1d
    } else {
        spec.max_nodes_2d
    };
    let mut nodes = spec.initial_nodes.min(cap).max(3);
    let mut value = trapezoid_log_sum(&g, &lower, &upper, nodes, top);
    let mut converged = false;
    while nodes < cap {
        let next_nodes = (2 * nodes - 1).min(cap);
        let next = trapezoid_log_sum(&g, &lower, &upper, next_nodes, top);
        let change = (next - value).abs();
        value = next;
        nodes = next_nodes;
        // `change` is a difference of logs, i.e. a relative change of the norm.
        if change < spec.relative_tolerance {
            converged = true;
            break;
        }
    }
    Ok(NormEstimate {
        log_norm: value,
        nodes_per_axis: nodes,
        converged,
        lower,
        upper,
    })
}

/// `‖z^α‖²_{kφ} = ∫ |z^α|² e^{−kφ} dV`.
pub fn monomial_norm(
    alpha: &ExponentVector,
    k: u64,
    phi: &SmoothToricWeight,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let a: Vec<f64> = alpha.coords().iter().map(|&c| c as f64).collect();
    Ok(log_monomial_norm_at(&a, k, phi, spec)?.log_norm.exp())
}

/// `|⟨z^α, z^β⟩| / (‖z^α‖·‖z^β‖)` by quadrature in polar coordinates: the
/// angular factor is a trapezoid mean of `e^{i⟨α−β,θ⟩}` over the torus and the
/// radial factor is the norm at the midpoint exponent `(α+β)/2`.
pub fn gram_offdiagonal(
    alpha: &ExponentVector,
    beta: &ExponentVector,
    k: u64,
    phi: &SmoothToricWeight,
    spec: &QuadratureSpec,
    angular_nodes: usize,
) -> Result<f64> {
    let n = phi.n();
    let diff: Vec<i64> = alpha
        .coords()
        .iter()
        .zip(beta.coords())
        .map(|(a, b)| a - b)
        .collect();
    let total = angular_nodes.pow(n as u32);
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for flat in 0..total {
        let mut r = flat;
        let mut phase = 0.0;
        for &m in &diff {
            let theta =
                2.0 * std::f64::consts::PI * (r % angular_nodes) as f64 / angular_nodes as f64;
            phase += m as f64 * theta;
            r /= angular_nodes;
        }
        re += phase.cos();
        im += phase.sin();
    }
    let angular = (re * re + im * im).sqrt() / total as f64;
    let a: Vec<f64> = alpha.coords().iter().map(|&c| c as f64).collect();
    let b: Vec<f64> = beta.coords().iter().map(|&c| c as f64).collect();
    let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
    let radial = log_monomial_norm_at(&mid, k, phi, spec)?.log_norm
        - 0.5
            * (log_monomial_norm_at(&a, k, phi, spec)?.log_norm
                + log_monomial_norm_at(&b, k, phi, spec)?.log_norm);
    Ok(angular * radial.exp())
}

/// `u_k` with its orthonormal data.
#[derive(Debug, Clone, PartialEq)]
pub struct BergmanLevel {
    pub level: u64,
    /// `log ‖z^α‖²` per exponent.
    pub log_norms: BTreeMap<ExponentVector, f64>,
    exponents: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl BergmanLevel {
    /// `u_k(t) = (1/k)·log Σ exp(⟨α,t⟩ − log‖z^α‖²)`.
    pub fn evaluate(&self, t: &[f64]) -> f64 {
        let terms = self
            .exponents
            .iter()
            .zip(&self.offsets)
            .map(|(a, off)| a.iter().zip(t).map(|(x, y)| x * y).sum::<f64>() - off);
        log_sum_exp(terms) / self.level as f64
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }
}

impl crate::envelope::ToricSymbol for BergmanLevel {
    fn dim(&self) -> usize {
        self.exponents.first().map_or(0, Vec::len)
    }
    fn value_at(&self, t: &[f64]) -> f64 {
        self.evaluate(t)
    }
}

pub fn bergman_weight(
    series: &MonomialSeries,
    k: u64,
    phi: &SmoothToricWeight,
    spec: &QuadratureSpec,
) -> Result<BergmanLevel> {
    if series.n() != phi.n() || series.degree() != phi.degree() {
        return Err(Error::InvalidArgument(
            "weight does not match the series".into(),
        ));
    }
    let piece = series.graded_piece(k)?;
    if piece.is_empty() {
        return Err(Error::TrivialPiece(k));
    }
    let norms: Vec<Result<f64>> = piece
        .exponents()
        .par_iter()
        .map(|a| {
            let af: Vec<f64> = a.coords().iter().map(|&c| c as f64).collect();
            log_monomial_norm_at(&af, k, phi, spec).map(|e| e.log_norm)
        })
        .collect();
    let mut log_norms = BTreeMap::new();
    let mut exponents = Vec::with_capacity(norms.len());
    let mut offsets = Vec::with_capacity(norms.len());
    for (a, v) in piece.exponents().iter().zip(norms) {
        let v = v?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!("norm of z^{a} is not finite")));
        }
        log_norms.insert(a.clone(), v);
        exponents.push(a.coords().iter().map(|&c| c as f64).collect());
        offsets.push(v);
    }
    Ok(BergmanLevel {
        level: k,
        log_norms,
        exponents,
        offsets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichRow {
    pub level: u64,
    pub dim: usize,
    /// `sup_K |u_k − P_Wφ|`.
    pub sup_gap: f64,
    /// `k·sup_gap`.
    pub scaled_gap: f64,
    /// `sup_K |u_k − log(dim W_k)/k − P_Wφ|`.
    pub dimension_corrected_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    /// Least-squares `C` in `sup_gap ≈ C/k` over the three largest levels.
    pub fitted_constant: f64,
    /// `max |k·sup_gap − C| / C` over the fitted levels.
    pub constant_spread: f64,
    /// Whether the gaps are non-increasing along the level list.
    pub monotone: bool,
    pub reference_schedule: Vec<u64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SandwichReport {
    /// Rows `k,sup_gap,fitted_C`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,sup_gap,scaled_gap,dimension_corrected_gap,fitted_C\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.level, r.sup_gap, r.scaled_gap, r.dimension_corrected_gap, self.fitted_constant
            );
        }
        s
    }
}

/// `C` minimizing `Σ (gap_k − C/k)²` over the three largest levels.
pub fn fit_constant(levels: &[u64], gaps: &[f64]) -> (f64, f64) {
    let mut pairs: Vec<(u64, f64)> = levels.iter().copied().zip(gaps.iter().copied()).collect();
    pairs.sort_by_key(|p| p.0);
    let tail = &pairs[pairs.len().saturating_sub(3)..];
    let num: f64 = tail.iter().map(|(k, g)| g / *k as f64).sum();
    let den: f64 = tail
        .iter()
        .map(|(k, _)| 1.0 / (*k as f64 * *k as f64))
        .sum();
    let c = num / den;
    let spread = tail
        .iter()
        .map(|(k, g)| (g * *k as f64 - c).abs() / c.abs())
        .fold(0.0, f64::max);
    (c, spread)
}

/// Compares `u_k` with the reference equilibrium symbol on the grid `compact`.
pub fn sandwich_report(
    series: &MonomialSeries,
    phi: &SmoothToricWeight,
    reference: &crate::envelope::EquilibriumSymbol,
    compact: &GridSpec,
    levels: &[u64],
    spec: &QuadratureSpec,
) -> Result<SandwichReport> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument(
            "sandwich needs at least one level".into(),
        ));
    }
    let p = evaluate_on_grid(&reference.function, compact)?;
    let mut rows = Vec::with_capacity(levels.len());
    for &k in levels {
        let u = bergman_weight(series, k, phi, spec)?;
        let uv = evaluate_on_grid(&u, compact)?;
        let shift = (u.dim() as f64).ln() / k as f64;
        let (mut gap, mut corrected) = (0.0f64, 0.0f64);
        for (a, b) in uv.values.iter().zip(&p.values) {
            gap = gap.max((a - b).abs());
            corrected = corrected.max((a - shift - b).abs());
        }
        rows.push(SandwichRow {
            level: k,
            dim: u.dim(),
            sup_gap: gap,
            scaled_gap: gap * k as f64,
            dimension_corrected_gap: corrected,
        });
    }
    let ks: Vec<u64> = rows.iter().map(|r| r.level).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.sup_gap).collect();
    let (fitted_constant, constant_spread) = fit_constant(&ks, &gaps);
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    Ok(SandwichReport {
        rows,
        fitted_constant,
        constant_spread,
        monotone,
        reference_schedule: reference.schedule.clone(),
        lower: compact
            .lower
            .iter()
            .map(crate::rational::q_to_f64)
            .collect(),
        upper: compact
            .upper
            .iter()
            .map(crate::rational::q_to_f64)
            .collect(),
    })
}

/// Largest cube `[−R, R]ⁿ` (R a multiple of `step`, at most `max_radius`)
/// on which the active slope of `f` at every grid node stays at distance
/// `≥ margin` from the boundary of the slope hull.
pub fn interior_box(
    f: &PLConvexFunction,
    margin: f64,
    step: f64,
    max_radius: f64,
    resolution: usize,
) -> Result<GridSpec> {
    let slopes: Vec<crate::rational::QVector> =
        f.pieces().iter().map(|p| p.slope.clone()).collect();
    let hull = crate::polytope::convex_hull(&slopes)?;
    if !hull.is_full_dimensional() {
        return Err(Error::InvalidArgument(
            "slope hull has empty interior".into(),
        ));
    }
    let facets: Vec<(Vec<f64>, f64)> = hull
        .halfspaces()
        .iter()
        .map(|h| {
            let a: Vec<f64> = h.normal.iter().map(crate::rational::q_to_f64).collect();
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            (
                a.iter().map(|x| x / norm).collect(),
                crate::rational::q_to_f64(&h.offset) / norm,
            )
        })
        .collect();
    let n = f.n();
    let depth = |t: &[f64]| -> f64 {
        let best = f
            .pieces()
            .iter()
            .max_by(|a, b| a.value(t).total_cmp(&b.value(t)))
            .expect("nonempty");
        facets
            .iter()
            .map(|(a, b)| {
                b - a
                    .iter()
                    .zip(best.slope_f64())
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut radius = 0.0;
    let mut r = step;
    while r <= max_radius + 1e-12 {
        let grid = GridSpec::new(
            vec![crate::rational::q_from_f64(-r)?; n],
            vec![crate::rational::q_from_f64(r)?; n],
            vec![resolution; n],
        )?;
        if (0..grid.len()).all(|i| depth(&grid.point(i)) >= margin) {
            radius = r;
            r += step;
        } else {
            break;
        }
    }
    if radius == 0.0 {
        return Err(Error::InvalidArgument(
            "no box keeps the active slopes inside the hull".into(),
        ));
    }
    GridSpec::new(
        vec![crate::rational::q_from_f64(-radius)?; n],
        vec![crate::rational::q_from_f64(radius)?; n],
        vec![resolution; n],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::fubini_study_weight;
    use crate::lattice_series::complete_series;

    fn ln_gamma_int(m: u64) -> f64 {
        (1..m).map(|i| (i as f64).ln()).sum()
    }

    /// Dirichlet integral for Fubini-Study: `Π Γ(αᵢ+1)·Γ(kd−|α|+1) / Γ(kd+n+1)`.
    fn fs_log_norm(alpha: &[u64], k: u64, d: u64, n: u64) -> f64 {
        let s: u64 = alpha.iter().sum();
        alpha.iter().map(|&a| ln_gamma_int(a + 1)).sum::<f64>() + ln_gamma_int(k * d - s + 1)
            - ln_gamma_int(k * d + n + 1)
    }

    #[test]
    fn norm_matches_brute_force_sum() {
        let fs = fubini_study_weight(1, 1).unwrap();
        let n0 = monomial_norm(
            &ExponentVector::new(vec![0]).unwrap(),
            1,
            &fs,
            &QuadratureSpec::default(),
        )
        .unwrap();
        // 10⁶-point Riemann sum on [−60, 60].
        let m = 1_000_000;
        let h = 120.0 / m as f64;
        let brute: f64 = (0..=m)
            .map(|i| log_integrand(&[0.0], 1, &fs, &[-60.0 + h * i as f64]).exp())
            .sum::<f64>()
            * h;
        assert!((n0 - brute).abs() / brute < 1e-8, "{n0} vs {brute}");
        assert!((n0 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn norms_match_dirichlet_integrals() {
        let spec = QuadratureSpec::default();
        let fs = fubini_study_weight(1, 1).unwrap();
        for k in [1u64, 4, 16] {
            for a in [0, k / 2, k] {
                let got = log_monomial_norm_at(&[a as f64], k, &fs, &spec).unwrap();
                assert!(got.converged);
                assert!(
                    (got.log_norm - fs_log_norm(&[a], k, 1, 1)).abs() < 1e-9,
                    "k={k} a={a}"
                );
            }
        }
        let fs2 = fubini_study_weight(2, 1).unwrap();
        for alpha in [[0u64, 0], [1, 2], [3, 0]] {
            let got =
                log_monomial_norm_at(&[alpha[0] as f64, alpha[1] as f64], 3, &fs2, &spec).unwrap();
            assert!(
                (got.log_norm - fs_log_norm(&alpha, 3, 1, 2)).abs() < 1e-7,
                "{alpha:?}"
            );
        }
    }

    #[test]
    fn symmetry_and_vertex_norms() {
        let spec = QuadratureSpec::default();
        let fs = fubini_study_weight(1, 1).unwrap();
        let n0 = monomial_norm(&ExponentVector::new(vec![0]).unwrap(), 1, &fs, &spec).unwrap();
        let n1 = monomial_norm(&ExponentVector::new(vec![1]).unwrap(), 1, &fs, &spec).unwrap();
        assert!((n0 - n1).abs() < 1e-12);
        let vertex =
            monomial_norm(&ExponentVector::new(vec![16]).unwrap(), 16, &fs, &spec).unwrap();
        let interior =
            monomial_norm(&ExponentVector::new(vec![8]).unwrap(), 16, &fs, &spec).unwrap();
        assert!(vertex > 0.0 && vertex > interior);
    }

    #[test]
    fn bergman_weight_examples() {
        let spec = QuadratureSpec::default();
        let fs = fubini_study_weight(1, 1).unwrap();
        let w = complete_series(1, 1).unwrap();
        let u1 = bergman_weight(&w, 1, &fs, &spec).unwrap();
        // N₀ = N₁ = 1/2, so u₁(t) = log(2 + 2eᵗ) = φ(t) + log 2.
        assert!((u1.evaluate(&[0.0]) - 4f64.ln()).abs() < 1e-9);
        for k in [2u64, 8] {
            let u = bergman_weight(&w, k, &fs, &spec).unwrap();
            for t in [-3.0, 0.0, 1.5] {
                let want = fs.evaluate(&[t]) + ((k + 1) as f64).ln() / k as f64;
                assert!((u.evaluate(&[t]) - want).abs() < 1e-9);
            }
        }
        let single = crate::lattice_series::series_from_generators(
            1,
            1,
            vec![(1, ExponentVector::new(vec![1]).unwrap())],
        )
        .unwrap();
        let u = bergman_weight(&single, 3, &fs, &spec).unwrap();
        let ln3 = u.log_norms[&ExponentVector::new(vec![3]).unwrap()];
        for t in [-2.0, 0.5, 4.0] {
            assert!((u.evaluate(&[t]) - (3.0 * t - ln3) / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_is_diagonal() {
        let spec = QuadratureSpec::default();
        let fs = fubini_study_weight(2, 1).unwrap();
        let a = ExponentVector::new(vec![1, 0]).unwrap();
        let b = ExponentVector::new(vec![0, 2]).unwrap();
        assert!(gram_offdiagonal(&a, &b, 3, &fs, &spec, 16).unwrap() <= 1e-8);
        let same = gram_offdiagonal(&a, &a, 3, &fs, &spec, 16).unwrap();
        assert!((same - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_fit() {
        let (c, spread) = fit_constant(&[4, 8, 16, 32], &[9.0, 0.25, 0.125, 0.0625]);
        assert!((c - 2.0).abs() < 1e-12);
        assert!(spread < 1e-12);
    }
}
