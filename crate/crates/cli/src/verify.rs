//! The end-to-end volume comparison.

use eqvol_core::bergman::SandwichReport;
use eqvol_core::envelope::equilibrium_symbol;
use eqvol_core::monge_ampere::MassLimit;
use eqvol_core::rational::{format_q, q_int, q_to_f64};
use eqvol_core::{
    analytic_mass_limit, estimate_volume, is_birational_at, ma_mass_grid_pl, mk_self_intersection,
    sandwich_report, GridMass, LatticeIndex, VolumeEstimate, Q,
};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MkLevel {
    pub level: u64,
    #[serde(serialize_with = "eqvol_core::serde_q::serialize")]
    pub self_intersection: Q,
    /// `M_kⁿ / kⁿ`.
    #[serde(serialize_with = "eqvol_core::serde_q::serialize")]
    pub normalized: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Birational {
    pub flag: bool,
    /// Decimal integer, or `"inf"` when the differences span a proper subspace.
    pub lattice_index: String,
    pub level: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub pair: [String; 2],
    pub values: [f64; 2],
    pub discrepancy: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Counting volume compared with the masses directly.
    Birational,
    /// Masses compared with `lattice_index × counting`.
    LatticeIndex,
    /// Infinite index: every volume is zero, compared in absolute terms.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub branch: Branch,
    pub tolerance: f64,
    pub discrepancies: Vec<Discrepancy>,
    /// `ma_exact == M_Kⁿ/Kⁿ` at the last envelope level.
    pub exact_match: bool,
}

/// Numbers the verdict is decided on.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictInputs {
    pub counting: f64,
    pub mk_limit: f64,
    pub ma_exact: Q,
    pub mk_final: Q,
    pub birational: bool,
    pub lattice_index: LatticeIndex,
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Pass iff the exact mass equals the last self-intersection and the three
/// volumes agree pairwise within `tolerance`. For a non-birational series
/// with finite index the counting volume is replaced by
/// `lattice_index × counting`; with infinite index all three must be within
/// `tolerance` of each other in absolute terms.
pub fn decide(inputs: &VerdictInputs, tolerance: f64) -> Verdict {
    let ma = q_to_f64(&inputs.ma_exact);
    let (branch, counting_name, counting) = match (&inputs.birational, &inputs.lattice_index) {
        (true, _) => (Branch::Birational, "counting".to_string(), inputs.counting),
        (false, LatticeIndex::Finite(i)) => {
            let index = q_to_f64(&Q::from_integer(i.clone()));
            (
                Branch::LatticeIndex,
                format!("{i}×counting"),
                index * inputs.counting,
            )
        }
        (false, LatticeIndex::Infinite) => {
            (Branch::Degenerate, "counting".to_string(), inputs.counting)
        }
    };
    let values = [
        (counting_name, counting),
        ("mk_limit".to_string(), inputs.mk_limit),
        ("ma_exact".to_string(), ma),
    ];
    let mut discrepancies = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b) = (values[i].1, values[j].1);
            let discrepancy = if branch == Branch::Degenerate {
                (a - b).abs()
            } else {
                relative(a, b)
            };
            discrepancies.push(Discrepancy {
                pair: [values[i].0.clone(), values[j].0.clone()],
                values: [a, b],
                discrepancy,
                within: discrepancy <= tolerance,
            });
        }
    }
    let exact_match = inputs.ma_exact == inputs.mk_final;
    let pass = exact_match && discrepancies.iter().all(|d| d.within);
    Verdict {
        pass,
        branch,
        tolerance,
        discrepancies,
        exact_match,
    }
}

/// Richardson extrapolation of `M_kⁿ/kⁿ` along the last two levels,
/// assuming an error of order `1/k`.
pub fn mk_limit(levels: &[MkLevel]) -> Q {
    match levels {
        [] => q_int(0),
        [only] => only.normalized.clone(),
        [.., a, b] => {
            let r = Q::new(b.level.into(), a.level.into());
            (&r * &b.normalized - &a.normalized) / (r - q_int(1))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub config: ExperimentConfig,
    pub vol_counting: f64,
    pub vol_mk_limit: f64,
    #[serde(serialize_with = "eqvol_core::serde_q::serialize")]
    pub vol_ma_exact: Q,
    pub vol_ma_grid: Option<f64>,
    pub birational: Birational,
    pub verdict: String,
    pub verdict_detail: Verdict,
    pub counting: VolumeEstimate,
    pub mk_levels: Vec<MkLevel>,
    pub mass_levels: MassLimit,
    pub grid: Option<GridMass>,
    pub bergman: Option<SandwichReport>,
}

pub fn run_verify(config: &ExperimentConfig) -> Result<VerificationReport, CliError> {
    let series = config.build_series()?;
    let phi = config.build_weight()?;
    let schedule = &config.schedules.envelope;
    let last = *schedule.last().expect("validated schedule");

    let counting = estimate_volume(
        &series,
        config.schedules.counting_k_max,
        config.schedules.divisibility,
    )?;
    let mk_levels = schedule
        .iter()
        .map(|&k| {
            mk_self_intersection(&series, k).map(|m| MkLevel {
                level: k,
                self_intersection: m.value,
                normalized: m.normalized,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mk_final = mk_levels.last().expect("nonempty").normalized.clone();
    let mk_lim = mk_limit(&mk_levels);

    let status = is_birational_at(&series, last)?;
    let mass_levels = analytic_mass_limit(&series, &phi, schedule)?;
    let ma_exact = mass_levels.equilibrium_mass.clone();

    let grid = if config.grids.mass_grid {
        let symbol = equilibrium_symbol(&series, &phi, schedule)?;
        Some(ma_mass_grid_pl(
            &symbol.function,
            &config.mass_grid()?,
            config.grids.smoothing,
            &config.mass_options(),
        )?)
    } else {
        None
    };

    let bergman = if config.schedules.bergman.is_empty() {
        None
    } else {
        let reference = equilibrium_symbol(&series, &phi, &config.schedules.reference)?;
        Some(sandwich_report(
            &series,
            &phi,
            &reference,
            &config.bergman_grid()?,
            &config.schedules.bergman,
            &config.quadrature(),
        )?)
    };

    let inputs = VerdictInputs {
        counting: counting.extrapolated,
        mk_limit: q_to_f64(&mk_lim),
        ma_exact: ma_exact.clone(),
        mk_final,
        birational: status.birational,
        lattice_index: status.lattice_index.clone(),
    };
    let verdict_detail = decide(&inputs, config.tolerances.joint);
    Ok(VerificationReport {
        config: config.clone(),
        vol_counting: counting.extrapolated,
        vol_mk_limit: inputs.mk_limit,
        vol_ma_exact: ma_exact,
        vol_ma_grid: grid.as_ref().map(|g| g.mass),
        birational: Birational {
            flag: status.birational,
            lattice_index: status.lattice_index.to_string(),
            level: last,
        },
        verdict: if verdict_detail.pass { "pass" } else { "fail" }.into(),
        verdict_detail,
        counting,
        mk_levels,
        mass_levels,
        grid,
        bergman,
    })
}

/// Plain-text summary of a report.
pub fn summary(report: &VerificationReport) -> String {
    let mut s = String::new();
    let s_cfg = &report.config.series;
    s.push_str(&format!(
        "series        {:?} n={} d={}\n",
        s_cfg.kind, s_cfg.n, s_cfg.d
    ));
    s.push_str(&format!("weight        {}\n", report.config.weight.name));
    s.push_str(&format!(
        "schedule      {:?}\n",
        report.config.schedules.envelope
    ));
    s.push_str(&format!("vol counting  {:.6}\n", report.vol_counting));
    s.push_str(&format!("vol mk limit  {:.6}\n", report.vol_mk_limit));
    s.push_str(&format!(
        "vol ma exact  {} ({:.6})\n",
        format_q(&report.vol_ma_exact),
        q_to_f64(&report.vol_ma_exact)
    ));
    match report.vol_ma_grid {
        Some(v) => s.push_str(&format!("vol ma grid   {v:.6}\n")),
        None => s.push_str("vol ma grid   -\n"),
    }
    s.push_str(&format!(
        "birational    {} (lattice index {} at k={})\n",
        report.birational.flag, report.birational.lattice_index, report.birational.level
    ));
    for d in &report.verdict_detail.discrepancies {
        s.push_str(&format!(
            "  {:>12} vs {:<9} {:.6} vs {:.6}  discrepancy {:.3e} {}\n",
            d.pair[0],
            d.pair[1],
            d.values[0],
            d.values[1],
            d.discrepancy,
            if d.within { "ok" } else { "OUT" }
        ));
    }
    s.push_str(&format!(
        "  exact mass equals M_K/K^n: {}\n",
        report.verdict_detail.exact_match
    ));
    if let Some(b) = &report.bergman {
        s.push_str("bergman sandwich\n");
        for r in &b.rows {
            s.push_str(&format!(
                "  k={:<4} sup gap {:.6}  k*gap {:.4}\n",
                r.level, r.sup_gap, r.scaled_gap
            ));
        }
        s.push_str(&format!(
            "  fitted C {:.4} (spread {:.1}%)\n",
            b.fitted_constant,
            100.0 * b.constant_spread
        ));
    }
    s.push_str(&format!("verdict       {}\n", report.verdict));
    s
}
