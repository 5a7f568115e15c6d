//! Toric symbols in log coordinates `t = (log|z₁|², …, log|zₙ|²)`: smooth
//! weights, their Legendre transforms, the piecewise-linear envelope levels
//! `φ_k` and the equilibrium symbol obtained along a divisibility schedule.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice_series::MonomialSeries;
use crate::rational::{format_q, parse_q, q_int, q_to_f64, QVector, Q};

/// Numerically stable `log Σ exp(x_i)`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// A smooth strictly convex symbol `φ(t) = d·log(w₀ + Σ wᵢ e^{tᵢ})` of a
/// positively curved torus-invariant metric on `O(d)`. All weights equal to
/// one gives the Fubini-Study metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothToricWeight {
    n: usize,
    d: u64,
    log_weights: Vec<f64>,
    name: String,
}

impl SmoothToricWeight {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u64 {
        self.d
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `(w₀, w₁, …, wₙ)`.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    fn log_partition(&self, t: &[f64]) -> f64 {
        log_sum_exp(
            std::iter::once(self.log_weights[0])
                .chain(t.iter().zip(&self.log_weights[1..]).map(|(x, l)| x + l)),
        )
    }

    pub fn evaluate(&self, t: &[f64]) -> f64 {
        self.d as f64 * self.log_partition(t)
    }

    pub fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let z = self.log_partition(t);
        t.iter()
            .zip(&self.log_weights[1..])
            .map(|(x, l)| self.d as f64 * (x + l - z).exp())
            .collect()
    }

    /// Density in `t` of the torus-invariant volume form
    /// `w₀ Π wᵢ e^{tᵢ} / (w₀ + Σ wᵢ e^{tᵢ})^{n+1}`; for Fubini-Study its total mass is `1/n!`.
    pub fn log_volume_density(&self, t: &[f64]) -> f64 {
        let lin: f64 = self.log_weights.iter().sum::<f64>() + t.iter().sum::<f64>();
        lin - (self.n as f64 + 1.0) * self.log_partition(t)
    }

    pub fn volume_density(&self, t: &[f64]) -> f64 {
        self.log_volume_density(t).exp()
    }
}

pub fn fubini_study_weight(n: usize, d: u64) -> Result<SmoothToricWeight> {
    weighted_fubini_study(n, d, &vec![1.0; n + 1]).map(|mut w| {
        w.name = "fubini-study".into();
        w
    })
}

/// `φ(t) = d·log(w₀ + Σ wᵢ e^{tᵢ})` with positive weights `(w₀, …, wₙ)`.
pub fn weighted_fubini_study(n: usize, d: u64, weights: &[f64]) -> Result<SmoothToricWeight> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(
            "weight needs n ≥ 1 and d ≥ 1".into(),
        ));
    }
    if weights.len() != n + 1 || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "need {} positive finite weights",
            n + 1
        )));
    }
    Ok(SmoothToricWeight {
        n,
        d,
        log_weights: weights.iter().map(|w| w.ln()).collect(),
        name: "weighted-fubini-study".into(),
    })
}

/// Search parameters of the numerical Legendre transform.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreOptions {
    /// Coarse scan over `[−half_width, half_width]` per free coordinate.
    pub half_width: f64,
    pub scan_points: usize,
    pub sweeps: usize,
    pub tolerance: f64,
}

impl Default for LegendreOptions {
    fn default() -> Self {
        LegendreOptions {
            half_width: 40.0,
            scan_points: 64,
            sweeps: 60,
            tolerance: 1e-10,
        }
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// `φ*(s) = sup_t ⟨s,t⟩ − φ(t)`; `+∞` outside the closed simplex `dΣ`.
///
/// The slope is written in homogeneous form `(s₀, s₁, …, sₙ)` with
/// `s₀ = d − Σsᵢ`. Coordinates with `s_j = 0` are sent to `−∞`, which is
/// exact, and the remaining problem is shift invariant, so one support
/// coordinate is pinned to zero. What is left is an interior problem of the
/// same shape solved by a coarse scan plus coordinate-wise golden section.
pub fn legendre(phi: &SmoothToricWeight, s: &[Q], options: &LegendreOptions) -> Result<f64> {
    if s.len() != phi.n {
        return Err(Error::InvalidArgument(format!(
            "slope has length {}, expected {}",
            s.len(),
            phi.n
        )));
    }
    let d = q_int(phi.d as i64);
    let s0 = s.iter().fold(d, |acc, x| acc - x);
    let homogeneous: Vec<Q> = std::iter::once(s0).chain(s.iter().cloned()).collect();
    if homogeneous.iter().any(Signed::is_negative) {
        return Ok(f64::INFINITY);
    }
    let support: Vec<usize> = (0..=phi.n).filter(|&j| !homogeneous[j].is_zero()).collect();
    let pin = support[0];
    let log_pin = phi.log_weights[pin];
    let free: Vec<usize> = support[1..].to_vec();
    let slope: Vec<f64> = free.iter().map(|&j| q_to_f64(&homogeneous[j])).collect();
    let log_w: Vec<f64> = free.iter().map(|&j| phi.log_weights[j]).collect();
    let d = phi.d as f64;

    let objective = |t: &[f64]| -> f64 {
        let lin: f64 = slope.iter().zip(t).map(|(a, b)| a * b).sum();
        let z =
            log_sum_exp(std::iter::once(log_pin).chain(t.iter().zip(&log_w).map(|(x, l)| x + l)));
        lin - d * z
    };
    if free.is_empty() {
        return Ok(objective(&[]));
    }
    let t = maximize_concave(&objective, free.len(), options, s)?;
    Ok(objective(&t))
}

/// Maximizes a concave function of one variable starting from `x0`: the
/// bracket grows geometrically from `step` until the function stops
/// increasing on both sides, then golden section shrinks it below
/// `tolerance`. `None` if the bracket leaves `[−limit, limit]`.
pub(crate) fn golden_line_max(
    mut f: impl FnMut(f64) -> f64,
    x0: f64,
    step: f64,
    tolerance: f64,
    limit: f64,
) -> Option<f64> {
    let f0 = f(x0);
    let mut width = step;
    let mut lo = x0 - width;
    while f(lo) > f0 {
        width *= 2.0;
        lo = x0 - width;
        if lo < -limit {
            return None;
        }
    }
    width = step;
    let mut hi = x0 + width;
    while f(hi) > f0 {
        width *= 2.0;
        hi = x0 + width;
        if hi > limit {
            return None;
        }
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut e = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fe = f(e);
    while b - a > tolerance {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + GOLDEN * (b - a);
            fe = f(e);
        }
    }
    let x = 0.5 * (a + b);
    Some(if f(x) >= f0 { x } else { x0 })
}

pub(crate) fn maximize_concave(
    f: &dyn Fn(&[f64]) -> f64,
    m: usize,
    options: &LegendreOptions,
    slope: &[Q],
) -> Result<Vec<f64>> {
    let nonconv = |reason: &str| Error::NonConvergence {
        slope: slope.iter().map(format_q).collect::<Vec<_>>().join(" "),
        reason: reason.to_string(),
    };
    // Coarse scan.
    let pts = options.scan_points.max(2);
    let h = 2.0 * options.half_width / (pts - 1) as f64;
    let mut best = vec![0.0; m];
    let mut best_val = f64::NEG_INFINITY;
    let mut idx = vec![0usize; m];
    let mut cur = vec![0.0; m];
    loop {
        for (c, &i) in cur.iter_mut().zip(&idx) {
            *c = -options.half_width + h * i as f64;
        }
        let v = f(&cur);
        if v > best_val {
            best_val = v;
            best.copy_from_slice(&cur);
        }
        let mut axis = 0;
        while axis < m {
            idx[axis] += 1;
            if idx[axis] < pts {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
        if axis == m {
            break;
        }
    }
    if !best_val.is_finite() {
        return Err(nonconv("objective not finite on the scan grid"));
    }

    // Coordinate-wise golden section with bracket expansion.
    let limit = 1e3 * options.half_width.max(1.0);
    let mut t = best;
    for _ in 0..options.sweeps {
        let mut moved = 0.0f64;
        for axis in 0..m {
            let x0 = t[axis];
            let mut probe = t.clone();
            let line = |x: f64| {
                probe[axis] = x;
                f(&probe)
            };
            let new = golden_line_max(line, x0, h.max(1e-3), options.tolerance, limit)
                .ok_or_else(|| nonconv("failed to bracket the maximizer"))?;
            moved = moved.max((new - x0).abs());
            t[axis] = new;
        }
        if moved <= options.tolerance {
            break;
        }
    }
    Ok(t)
}

/// One affine piece `t ↦ ⟨slope, t⟩ + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub slope: QVector,
    pub intercept: f64,
    slope_f64: Vec<f64>,
}

impl AffinePiece {
    pub fn new(slope: QVector, intercept: f64) -> Self {
        let slope_f64 = slope.iter().map(q_to_f64).collect();
        AffinePiece {
            slope,
            intercept,
            slope_f64,
        }
    }

    pub fn slope_f64(&self) -> &[f64] {
        &self.slope_f64
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        self.slope_f64
            .iter()
            .zip(t)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.intercept
    }
}

/// `t ↦ max_i ⟨slopeᵢ, t⟩ + interceptᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PLConvexFunction {
    n: usize,
    pieces: Vec<AffinePiece>,
}

impl PLConvexFunction {
    /// Exact duplicates (same slope and intercept) are merged.
    pub fn new(n: usize, pieces: Vec<(QVector, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument(
                "a PL function needs at least one piece".into(),
            ));
        }
        let mut out: Vec<AffinePiece> = Vec::with_capacity(pieces.len());
        for (slope, intercept) in pieces {
            if slope.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "slope of length {} in dimension {n}",
                    slope.len()
                )));
            }
            if !intercept.is_finite() {
                return Err(Error::InvalidArgument("intercepts must be finite".into()));
            }
            if !out
                .iter()
                .any(|p| p.slope == slope && p.intercept == intercept)
            {
                out.push(AffinePiece::new(slope, intercept));
            }
        }
        Ok(PLConvexFunction { n, pieces: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Adds a constant to every intercept.
    pub fn shifted(&self, c: f64) -> PLConvexFunction {
        PLConvexFunction {
            n: self.n,
            pieces: self
                .pieces
                .iter()
                .map(|p| AffinePiece::new(p.slope.clone(), p.intercept + c))
                .collect(),
        }
    }

    /// `t ↦ f(t − shift)`.
    pub fn translated(&self, shift: &[f64]) -> PLConvexFunction {
        PLConvexFunction {
            n: self.n,
            pieces: self
                .pieces
                .iter()
                .map(|p| {
                    let dot: f64 = p.slope_f64.iter().zip(shift).map(|(a, b)| a * b).sum();
                    AffinePiece::new(p.slope.clone(), p.intercept - dot)
                })
                .collect(),
        }
    }

    /// One line per piece: slope entries as `p/q`, then the intercept.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.pieces {
            for q in &p.slope {
                let _ = write!(s, "{} ", format_q(q));
            }
            let _ = writeln!(s, "{:e}", p.intercept);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<PLConvexFunction> {
        let mut pieces = Vec::new();
        let mut n = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let (intercept, slope) = fields.split_last().expect("nonempty line");
            let intercept: f64 = intercept.parse().map_err(|_| {
                Error::Parse(format!(
                    "line {}: invalid intercept `{intercept}`",
                    lineno + 1
                ))
            })?;
            let slope = slope
                .iter()
                .map(|f| parse_q(f))
                .collect::<Result<QVector>>()?;
            if *n.get_or_insert(slope.len()) != slope.len() {
                return Err(Error::Parse(format!(
                    "line {}: inconsistent slope length",
                    lineno + 1
                )));
            }
            pieces.push((slope, intercept));
        }
        PLConvexFunction::new(n.unwrap_or(0), pieces)
    }
}

/// Pointwise-evaluable symbol on `ℝⁿ`.
pub trait ToricSymbol: Sync {
    fn dim(&self) -> usize;
    fn value_at(&self, t: &[f64]) -> f64;
}

impl ToricSymbol for PLConvexFunction {
    fn dim(&self) -> usize {
        self.n
    }
    fn value_at(&self, t: &[f64]) -> f64 {
        self.value(t)
    }
}

impl ToricSymbol for SmoothToricWeight {
    fn dim(&self) -> usize {
        self.n
    }
    fn value_at(&self, t: &[f64]) -> f64 {
        self.evaluate(t)
    }
}

/// `φ_k(t) = max_{α ∈ A_k} ⟨α/k, t⟩ − φ*(α/k)`.
pub fn envelope_level(
    series: &MonomialSeries,
    k: u64,
    phi: &SmoothToricWeight,
) -> Result<PLConvexFunction> {
    let mut cache = BTreeMap::new();
    envelope_level_cached(series, k, phi, &LegendreOptions::default(), &mut cache)
}

fn envelope_level_cached(
    series: &MonomialSeries,
    k: u64,
    phi: &SmoothToricWeight,
    options: &LegendreOptions,
    cache: &mut BTreeMap<QVector, f64>,
) -> Result<PLConvexFunction> {
    check_weight(series, phi)?;
    let piece = series.graded_piece(k)?;
    if piece.is_empty() {
        return Err(Error::TrivialPiece(k));
    }
    let slopes: Vec<QVector> = piece.exponents().iter().map(|a| a.scaled(k)).collect();
    let missing: Vec<QVector> = slopes
        .iter()
        .filter(|s| !cache.contains_key(*s))
        .cloned()
        .collect();
    let computed: Vec<Result<f64>> = missing
        .par_iter()
        .map(|s| legendre(phi, s, options))
        .collect();
    for (s, v) in missing.into_iter().zip(computed) {
        cache.insert(s, v?);
    }
    let mut pieces = Vec::with_capacity(slopes.len());
    for s in slopes {
        let conj = cache[&s];
        if !conj.is_finite() {
            return Err(Error::Invariant(format!("slope outside dΣ at level {k}")));
        }
        pieces.push((s, -conj));
    }
    PLConvexFunction::new(series.n(), pieces)
}

fn check_weight(series: &MonomialSeries, phi: &SmoothToricWeight) -> Result<()> {
    if series.n() != phi.n() || series.degree() != phi.degree() {
        return Err(Error::InvalidArgument(format!(
            "weight on O({}) over ℙ^{} does not match series on O({}) over ℙ^{}",
            phi.degree(),
            phi.n(),
            series.degree(),
            series.n()
        )));
    }
    Ok(())
}

/// Axis-aligned box with a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: QVector,
    pub upper: QVector,
    pub resolution: Vec<usize>,
}

/// Upper bound on the number of grid nodes a single evaluation may allocate.
pub const GRID_NODE_CAP: usize = 1 << 26;

impl GridSpec {
    pub fn new(lower: QVector, upper: QVector, resolution: Vec<usize>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != resolution.len() {
            return Err(Error::InvalidArgument(
                "grid bounds and resolution must have equal positive length".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l >= u) {
            return Err(Error::InvalidArgument("grid box must be nonempty".into()));
        }
        if resolution.iter().any(|&r| r < 2) {
            return Err(Error::InvalidArgument(
                "grid resolution must be at least 2 per axis".into(),
            ));
        }
        let total = resolution
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r));
        match total {
            Some(t) if t <= GRID_NODE_CAP => {}
            _ => {
                return Err(Error::CapExceeded {
                    count: total.unwrap_or(usize::MAX) as u128,
                    cap: GRID_NODE_CAP as u128,
                })
            }
        }
        Ok(GridSpec {
            lower,
            upper,
            resolution,
        })
    }

    /// The cube `[lo, hi]ⁿ` with `res` nodes per axis.
    pub fn cube(n: usize, lo: i64, hi: i64, res: usize) -> Result<Self> {
        GridSpec::new(vec![q_int(lo); n], vec![q_int(hi); n], vec![res; n])
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        q_to_f64(&(&self.upper[axis] - &self.lower[axis])) / (self.resolution[axis] - 1) as f64
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.resolution[axis] {
            return q_to_f64(&self.upper[axis]);
        }
        q_to_f64(&self.lower[axis]) + self.spacing(axis) * i as f64
    }

    /// Node coordinates of the flat row-major index (last axis fastest).
    pub fn point(&self, mut flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let r = self.resolution[axis];
            out[axis] = self.coordinate(axis, flat % r);
            flat /= r;
        }
        out
    }
}

/// Values of a symbol on the nodes of a [`GridSpec`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let bounds: Vec<String> = self
            .spec
            .lower
            .iter()
            .zip(&self.spec.upper)
            .map(|(l, u)| format!("[{},{}]", format_q(l), format_q(u)))
            .collect();
        let res: Vec<String> = self.spec.resolution.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "# box {}", bounds.join(" x "));
        let _ = writeln!(s, "# resolution {}", res.join(" x "));
        let cols: Vec<String> = (1..=self.spec.dim()).map(|i| format!("t{i}")).collect();
        let _ = writeln!(s, "{},value", cols.join(","));
        for (flat, v) in self.values.iter().enumerate() {
            let p: Vec<String> = self
                .spec
                .point(flat)
                .iter()
                .map(|x| x.to_string())
                .collect();
            let _ = writeln!(s, "{},{}", p.join(","), v);
        }
        s
    }
}

pub fn evaluate_on_grid(f: &dyn ToricSymbol, spec: &GridSpec) -> Result<GridField> {
    if f.dim() != spec.dim() {
        return Err(Error::InvalidArgument(
            "grid dimension does not match the symbol".into(),
        ));
    }
    let values = (0..spec.len())
        .into_par_iter()
        .map(|i| f.value_at(&spec.point(i)))
        .collect();
    Ok(GridField {
        spec: spec.clone(),
        values,
    })
}

/// `P_Wφ` realized on a schedule, with per-level functions kept for diagnostics.
#[derive(Debug, Clone)]
pub struct EquilibriumSymbol {
    pub function: PLConvexFunction,
    pub schedule: Vec<u64>,
    pub levels: Vec<PLConvexFunction>,
    /// `sup |φ_last − φ_previous|` on the reference box; absent for a one-level schedule.
    pub schedule_gap: Option<f64>,
    pub reference_box: GridSpec,
}

/// Checks that each level divides the next.
pub fn check_schedule(schedule: &[u64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("schedule must be nonempty".into()));
    }
    if schedule.contains(&0) {
        return Err(Error::InvalidArgument(
            "schedule levels must be positive".into(),
        ));
    }
    for w in schedule.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 {
            return Err(Error::InvalidArgument(format!(
                "schedule is not divisibility ordered: {} does not properly divide {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// `{ℓ, 2ℓ, 4ℓ, 8ℓ}` with `ℓ` the smallest level carrying a section.
pub fn default_schedule(series: &MonomialSeries) -> Result<Vec<u64>> {
    for l in 1..=64u64 {
        if !series.graded_piece(l)?.is_empty() {
            return Ok(vec![l, 2 * l, 4 * l, 8 * l]);
        }
    }
    Err(Error::TrivialPiece(64))
}

pub fn default_reference_box(n: usize) -> GridSpec {
    let res = match n {
        1 => 1001,
        2 => 101,
        _ => 21,
    };
    GridSpec::cube(n, -5, 5, res).expect("valid default box")
}

pub fn equilibrium_symbol(
    series: &MonomialSeries,
    phi: &SmoothToricWeight,
    schedule: &[u64],
) -> Result<EquilibriumSymbol> {
    equilibrium_symbol_with(
        series,
        phi,
        schedule,
        &default_reference_box(series.n()),
        &LegendreOptions::default(),
    )
}

pub fn equilibrium_symbol_with(
    series: &MonomialSeries,
    phi: &SmoothToricWeight,
    schedule: &[u64],
    reference_box: &GridSpec,
    options: &LegendreOptions,
) -> Result<EquilibriumSymbol> {
    check_schedule(schedule)?;
    let mut cache = BTreeMap::new();
    let mut levels = Vec::with_capacity(schedule.len());
    for &k in schedule {
        levels.push(envelope_level_cached(series, k, phi, options, &mut cache)?);
    }
    let mut best: BTreeMap<QVector, f64> = BTreeMap::new();
    for level in &levels {
        for p in level.pieces() {
            let e = best.entry(p.slope.clone()).or_insert(f64::NEG_INFINITY);
            *e = e.max(p.intercept);
        }
    }
    let function = PLConvexFunction::new(series.n(), best.into_iter().collect())?;
    let schedule_gap = if levels.len() >= 2 {
        let last = evaluate_on_grid(&levels[levels.len() - 1], reference_box)?;
        let prev = evaluate_on_grid(&levels[levels.len() - 2], reference_box)?;
        Some(
            last.values
                .iter()
                .zip(&prev.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    Ok(EquilibriumSymbol {
        function,
        schedule: schedule.to_vec(),
        levels,
        schedule_gap,
        reference_box: reference_box.clone(),
    })
}
