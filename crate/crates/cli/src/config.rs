//! Experiment configuration.
//!
//! The file is TOML with the sections below. Only `series.kind` is required
//! (plus `n`, `d` and `generators` where the kind needs them); unknown keys
//! are rejected.
//!
//! ```toml
//! [series]
//! kind = "generators"        # complete | generators | ideal | example36
//! n = 1
//! d = 2
//! generators = [[1, 0], [1, 2]]  # [degree, α₁, …, αₙ] per generator; [α₁, …, αₙ] for ideal
//! truncation = 4             # optional: use the subseries generated in this degree
//!
//! [weight]
//! name = "fubini-study"      # or weighted-fubini-study with `weights`
//! d = 2                      # must equal series.d
//! weights = [1.0, 1.0]       # n + 1 positive coefficients
//!
//! [schedules]
//! envelope = [1, 2, 4, 8]    # each level divides the next
//! bergman = [4, 8, 16, 32]
//! reference = [1, 2, 4, 8, 16, 32, 64, 128]
//! counting_k_max = 256
//! divisibility = 1
//!
//! [grids]
//! mass_grid = true
//! mass_box = [-20.0, 20.0]
//! mass_resolution = 4096
//! smoothing = 0.02
//! max_box_doublings = 2      # grow the mass box while it misses part of the slope hull
//! bergman_box = [-3.0, 3.0]
//! bergman_resolution = 601
//!
//! [tolerances]
//! joint = 0.05
//! quadrature = 1e-9
//! coverage = 1e-3
//! negative_mass = 0.01
//!
//! [output]
//! dir = "eqvol-out"
//! ```

use std::path::PathBuf;

use eqvol_core::envelope::{check_schedule, default_schedule, weighted_fubini_study};
use eqvol_core::monge_ampere::{default_smoothing, GridMassOptions};
use eqvol_core::rational::q_from_f64;
use eqvol_core::{
    complete_series, example36_series, fubini_study_weight, ideal_series, series_from_generators,
    truncate, ExponentVector, GridSpec, MonomialSeries, QuadratureSpec, SmoothToricWeight,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    series: RawSeries,
    #[serde(default)]
    weight: RawWeight,
    #[serde(default)]
    schedules: RawSchedules,
    #[serde(default)]
    grids: RawGrids,
    #[serde(default)]
    tolerances: RawTolerances,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeries {
    kind: Option<String>,
    n: Option<usize>,
    d: Option<u64>,
    generators: Option<Vec<Vec<i64>>>,
    truncation: Option<u64>,
    point_cap: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeight {
    name: Option<String>,
    d: Option<u64>,
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedules {
    envelope: Option<Vec<u64>>,
    bergman: Option<Vec<u64>>,
    reference: Option<Vec<u64>>,
    counting_k_max: Option<u64>,
    divisibility: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    mass_grid: Option<bool>,
    mass_box: Option<[f64; 2]>,
    mass_resolution: Option<usize>,
    smoothing: Option<f64>,
    max_box_doublings: Option<usize>,
    bergman_box: Option<[f64; 2]>,
    bergman_resolution: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    joint: Option<f64>,
    quadrature: Option<f64>,
    coverage: Option<f64>,
    negative_mass: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Complete,
    Generators,
    Ideal,
    Example36,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesConfig {
    pub kind: SeriesKind,
    pub n: usize,
    pub d: u64,
    pub generators: Vec<Vec<i64>>,
    pub truncation: Option<u64>,
    pub point_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightConfig {
    pub name: String,
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedules {
    pub envelope: Vec<u64>,
    pub bergman: Vec<u64>,
    pub reference: Vec<u64>,
    pub counting_k_max: u64,
    pub divisibility: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grids {
    pub mass_grid: bool,
    pub mass_box: [f64; 2],
    pub mass_resolution: usize,
    pub smoothing: f64,
    pub max_box_doublings: usize,
    pub bergman_box: [f64; 2],
    pub bergman_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub joint: f64,
    pub quadrature: f64,
    pub coverage: f64,
    pub negative_mass: f64,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub series: SeriesConfig,
    pub weight: WeightConfig,
    pub schedules: Schedules,
    pub grids: Grids,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

fn positioned(text: &str, e: toml::de::Error) -> CliError {
    let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
    CliError::Config {
        line,
        column,
        message: e.message().trim().to_string(),
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| positioned(text, e))?;
    resolve(raw)
}

/// Parses TOML text into a table, checking syntax, key names and value
/// types with positions; required keys are checked after merging.
pub fn parse_table(text: &str) -> Result<toml::Table, CliError> {
    toml::from_str::<RawConfig>(text).map_err(|e| positioned(text, e))?;
    text.parse::<toml::Table>().map_err(|e| positioned(text, e))
}

/// Overlays `over` on `base`, recursing into sub-tables; values in `over` win.
pub fn merge_tables(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Validates a merged table.
pub fn from_table(table: toml::Table) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config {
            line: 0,
            column: 0,
            message: e.message().trim().to_string(),
        })?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, CliError> {
    let kind_name = raw
        .series
        .kind
        .clone()
        .ok_or_else(|| invalid("series.kind", "missing"))?;
    let kind = match kind_name.as_str() {
        "complete" => SeriesKind::Complete,
        "generators" => SeriesKind::Generators,
        "ideal" => SeriesKind::Ideal,
        "example36" => SeriesKind::Example36,
        other => return Err(invalid("series.kind", format!("unknown kind `{other}`"))),
    };
    let (n, d) = match kind {
        SeriesKind::Example36 => {
            if raw.series.n.is_some_and(|n| n != 2) || raw.series.d.is_some_and(|d| d != 1) {
                return Err(invalid("series.n", "example36 lives on n = 2 with d = 1"));
            }
            (2, 1)
        }
        _ => (
            raw.series.n.ok_or_else(|| invalid("series.n", "missing"))?,
            raw.series.d.ok_or_else(|| invalid("series.d", "missing"))?,
        ),
    };
    if n == 0 {
        return Err(invalid("series.n", "must be positive"));
    }
    if d == 0 {
        return Err(invalid("series.d", "must be positive"));
    }
    let generators = raw.series.generators.clone().unwrap_or_default();
    match kind {
        SeriesKind::Generators | SeriesKind::Ideal if generators.is_empty() => {
            return Err(invalid(
                "series.generators",
                format!("kind `{kind_name}` needs generators"),
            ));
        }
        SeriesKind::Complete | SeriesKind::Example36 if !generators.is_empty() => {
            return Err(invalid(
                "series.generators",
                format!("kind `{kind_name}` takes no generators"),
            ));
        }
        _ => {}
    }
    let width = if kind == SeriesKind::Generators {
        n + 1
    } else {
        n
    };
    if let Some(bad) = generators.iter().find(|g| g.len() != width) {
        return Err(invalid(
            "series.generators",
            format!("entry {bad:?} should have {width} numbers"),
        ));
    }
    if raw.series.truncation == Some(0) {
        return Err(invalid("series.truncation", "must be positive"));
    }
    let series = SeriesConfig {
        kind,
        n,
        d,
        generators,
        truncation: raw.series.truncation,
        point_cap: raw.series.point_cap,
    };

    let name = raw
        .weight
        .name
        .clone()
        .unwrap_or_else(|| "fubini-study".into());
    if let Some(wd) = raw.weight.d {
        if wd != d {
            return Err(invalid(
                "weight.d",
                format!("weight degree {wd} differs from series degree {d}"),
            ));
        }
    }
    match name.as_str() {
        "fubini-study" if raw.weight.weights.is_some() => {
            return Err(invalid("weight.weights", "fubini-study takes no weights"));
        }
        "fubini-study" => {}
        "weighted-fubini-study" => {
            let w = raw
                .weight
                .weights
                .as_ref()
                .ok_or_else(|| invalid("weight.weights", "missing"))?;
            if w.len() != n + 1 || w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(invalid(
                    "weight.weights",
                    format!("need {} positive numbers", n + 1),
                ));
            }
        }
        other => return Err(invalid("weight.name", format!("unknown weight `{other}`"))),
    }
    let weight = WeightConfig {
        name,
        weights: raw.weight.weights.clone(),
    };

    let mut config = ExperimentConfig {
        series,
        weight,
        schedules: Schedules {
            envelope: vec![],
            bergman: vec![],
            reference: vec![],
            counting_k_max: 0,
            divisibility: 1,
        },
        grids: Grids {
            mass_grid: false,
            mass_box: [0.0, 0.0],
            mass_resolution: 0,
            smoothing: 0.0,
            max_box_doublings: 0,
            bergman_box: [0.0, 0.0],
            bergman_resolution: 0,
        },
        tolerances: Tolerances {
            joint: 0.05,
            quadrature: 1e-9,
            coverage: 1e-3,
            negative_mass: 0.01,
        },
        output_dir: raw
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("eqvol-out")),
    };
    let built = config.build_series()?;
    config.build_weight()?;

    let s = &raw.schedules;
    let envelope = match &s.envelope {
        Some(v) => v.clone(),
        None => {
            default_schedule(&built).map_err(|e| invalid("schedules.envelope", e.to_string()))?
        }
    };
    check_schedule(&envelope).map_err(|e| invalid("schedules.envelope", e.to_string()))?;
    let bergman = match &s.bergman {
        Some(v) => v.clone(),
        None => match n {
            1 => vec![4, 8, 16, 32],
            2 => vec![2, 4, 8],
            _ => vec![],
        }
        .into_iter()
        .map(|k| k * envelope[0])
        .collect(),
    };
    if !bergman.is_empty() {
        check_schedule(&bergman).map_err(|e| invalid("schedules.bergman", e.to_string()))?;
        if n > 2 {
            return Err(invalid(
                "schedules.bergman",
                "Bergman weights are available for n ≤ 2",
            ));
        }
    }
    let reference = match &s.reference {
        Some(v) => v.clone(),
        None => {
            let target = bergman.iter().max().copied().unwrap_or(0) * if n == 1 { 4 } else { 1 };
            let mut v = envelope.clone();
            while *v.last().expect("nonempty") < target {
                let next = v.last().expect("nonempty") * 2;
                v.push(next);
            }
            v
        }
    };
    check_schedule(&reference).map_err(|e| invalid("schedules.reference", e.to_string()))?;
    let divisibility = s
        .divisibility
        .unwrap_or(config.series.truncation.unwrap_or(1));
    if divisibility == 0 {
        return Err(invalid("schedules.divisibility", "must be positive"));
    }
    let counting_k_max = s.counting_k_max.unwrap_or(match n {
        1 => 256,
        2 => 200,
        _ => 40,
    });
    if counting_k_max < divisibility {
        return Err(invalid(
            "schedules.counting_k_max",
            "must be at least the divisibility",
        ));
    }
    config.schedules = Schedules {
        envelope,
        bergman,
        reference,
        counting_k_max,
        divisibility,
    };

    let g = &raw.grids;
    let mass_box = g.mass_box.unwrap_or([-20.0, 20.0]);
    let mass_resolution = g.mass_resolution.unwrap_or(match n {
        1 => 4096,
        2 => 512,
        _ => 64,
    });
    let bergman_box = g.bergman_box.unwrap_or([-3.0, 3.0]);
    let bergman_resolution = g
        .bergman_resolution
        .unwrap_or(if n == 1 { 601 } else { 41 });
    for (field, b) in [
        ("grids.mass_box", mass_box),
        ("grids.bergman_box", bergman_box),
    ] {
        if !(b[0] < b[1]) || !b[0].is_finite() || !b[1].is_finite() {
            return Err(invalid(field, "need finite lower < upper"));
        }
    }
    for (field, r) in [
        ("grids.mass_resolution", mass_resolution),
        ("grids.bergman_resolution", bergman_resolution),
    ] {
        if r < 3 {
            return Err(invalid(field, "need at least 3 nodes per axis"));
        }
    }
    config.grids = Grids {
        mass_grid: g.mass_grid.unwrap_or(n <= 2),
        mass_box,
        mass_resolution,
        smoothing: 0.0,
        max_box_doublings: g.max_box_doublings.unwrap_or(2),
        bergman_box,
        bergman_resolution,
    };
    config.grids.smoothing = match g.smoothing {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(_) => return Err(invalid("grids.smoothing", "must be positive")),
        None => default_smoothing(&config.mass_grid()?),
    };

    let t = &raw.tolerances;
    config.tolerances = Tolerances {
        joint: t.joint.unwrap_or(0.05),
        quadrature: t.quadrature.unwrap_or(1e-9),
        coverage: t.coverage.unwrap_or(1e-3),
        negative_mass: t.negative_mass.unwrap_or(0.01),
    };
    for (field, v) in [
        ("tolerances.joint", config.tolerances.joint),
        ("tolerances.quadrature", config.tolerances.quadrature),
        ("tolerances.coverage", config.tolerances.coverage),
        ("tolerances.negative_mass", config.tolerances.negative_mass),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(invalid(field, "must be positive"));
        }
    }
    Ok(config)
}

fn cube(n: usize, b: [f64; 2], res: usize, field: &str) -> Result<GridSpec, CliError> {
    let lo = q_from_f64(b[0]).map_err(|e| invalid(field, e.to_string()))?;
    let hi = q_from_f64(b[1]).map_err(|e| invalid(field, e.to_string()))?;
    GridSpec::new(vec![lo; n], vec![hi; n], vec![res; n]).map_err(|e| invalid(field, e.to_string()))
}

impl ExperimentConfig {
    pub fn build_series(&self) -> Result<MonomialSeries, CliError> {
        let s = &self.series;
        let field = "series.generators";
        let exponent =
            |c: &[i64]| ExponentVector::new(c.to_vec()).map_err(|e| invalid(field, e.to_string()));
        let base = match s.kind {
            SeriesKind::Complete => {
                complete_series(s.n, s.d).map_err(|e| invalid("series", e.to_string()))?
            }
            SeriesKind::Example36 => example36_series(),
            SeriesKind::Generators => {
                let mut gens = Vec::with_capacity(s.generators.len());
                for g in &s.generators {
                    if g[0] <= 0 {
                        return Err(invalid(field, format!("degree in {g:?} must be positive")));
                    }
                    gens.push((g[0] as u64, exponent(&g[1..])?));
                }
                series_from_generators(s.n, s.d, gens).map_err(|e| invalid(field, e.to_string()))?
            }
            SeriesKind::Ideal => {
                let gens = s
                    .generators
                    .iter()
                    .map(|g| exponent(g))
                    .collect::<Result<Vec<_>, _>>()?;
                ideal_series(s.n, s.d, gens).map_err(|e| invalid(field, e.to_string()))?
            }
        };
        let base = match s.point_cap {
            Some(cap) => base.with_cap(cap as u128),
            None => base,
        };
        match s.truncation {
            Some(l) => truncate(&base, l).map_err(|e| invalid("series.truncation", e.to_string())),
            None => Ok(base),
        }
    }

    pub fn build_weight(&self) -> Result<SmoothToricWeight, CliError> {
        let (n, d) = (self.series.n, self.series.d);
        match &self.weight.weights {
            Some(w) => weighted_fubini_study(n, d, w),
            None => fubini_study_weight(n, d),
        }
        .map_err(|e| invalid("weight", e.to_string()))
    }

    pub fn mass_grid(&self) -> Result<GridSpec, CliError> {
        cube(
            self.series.n,
            self.grids.mass_box,
            self.grids.mass_resolution,
            "grids.mass_box",
        )
    }

    pub fn bergman_grid(&self) -> Result<GridSpec, CliError> {
        cube(
            self.series.n,
            self.grids.bergman_box,
            self.grids.bergman_resolution,
            "grids.bergman_box",
        )
    }

    pub fn mass_options(&self) -> GridMassOptions {
        GridMassOptions {
            coverage_tolerance: self.tolerances.coverage,
            negative_tolerance: self.tolerances.negative_mass,
            max_box_doublings: self.grids.max_box_doublings,
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            relative_tolerance: self.tolerances.quadrature,
            ..QuadratureSpec::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(
            "[series]\nkind = \"complete\"\nn = 1\nd = 1\n[weight]\nname = \"fubini-study\"\n",
        )
        .unwrap();
        assert_eq!(c.schedules.envelope, vec![1, 2, 4, 8]);
        assert_eq!(c.schedules.bergman, vec![4, 8, 16, 32]);
        assert_eq!(*c.schedules.reference.last().unwrap(), 128);
        assert_eq!(c.schedules.counting_k_max, 256);
        assert_eq!(c.grids.mass_resolution, 4096);
        assert_eq!(c.tolerances.joint, 0.05);
        assert_eq!(c.output_dir, PathBuf::from("eqvol-out"));
    }

    #[test]
    fn schedule_must_be_divisibility_ordered() {
        let err = parse_config(
            "[series]\nkind = \"complete\"\nn = 1\nd = 1\n[schedules]\nenvelope = [3, 5]\n",
        )
        .unwrap_err();
        assert!(
            matches!(err, CliError::Validation { ref field, .. } if field == "schedules.envelope"),
            "{err}"
        );
    }

    #[test]
    fn ideal_needs_generators() {
        let err = parse_config("[series]\nkind = \"ideal\"\nn = 2\nd = 2\n").unwrap_err();
        assert!(
            matches!(err, CliError::Validation { ref field, .. } if field == "series.generators"),
            "{err}"
        );
    }

    #[test]
    fn degree_mismatch_is_rejected() {
        let err = parse_config("[series]\nkind = \"complete\"\nn = 1\nd = 2\n[weight]\nd = 3\n")
            .unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "weight.d"));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err =
            parse_config("[series]\nkind = \"complete\"\nn = 1\nd = 1\ncolour = 3\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 5, .. }), "{err}");
        assert!(err.to_string().contains("colour"));
        let err = parse_table("[grids]\nmass_resolution = \"big\"\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 2, .. }), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_config("[series]\nkind = \"complete\"\nn = = 1\n").unwrap_err();
        match err {
            CliError::Config { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column >= 4);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn file_values_win_over_flags() {
        let mut flags = parse_table(
            "[series]\nkind = \"complete\"\nn = 1\nd = 2\n[schedules]\ncounting_k_max = 64\n",
        )
        .unwrap();
        merge_tables(&mut flags, parse_table("[series]\nd = 3\n").unwrap());
        let c = from_table(flags).unwrap();
        assert_eq!(c.series.d, 3);
        assert_eq!(c.schedules.counting_k_max, 64);
    }

    #[test]
    fn truncation_sets_divisibility() {
        let c = parse_config(
            "[series]\nkind = \"ideal\"\nn = 2\nd = 2\ngenerators = [[1, 0], [0, 2]]\ntruncation = 4\n",
        )
        .unwrap();
        assert_eq!(c.schedules.divisibility, 4);
        assert_eq!(c.schedules.envelope, vec![4, 8, 16, 32]);
        assert!(c
            .build_series()
            .unwrap()
            .graded_piece(5)
            .unwrap()
            .is_empty());
    }
}
