//! Writing reports to disk.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eqvol_core::rational::{format_q, q_to_f64};

use crate::error::CliError;
use crate::verify::{summary, VerificationReport};

/// Writes `contents` to `dir/name`, creating parent directories.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `report.json`, `summary.txt` and `tables/*.csv` under `dir`.
pub fn emit_report(report: &VerificationReport, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![
        write_file(dir, "report.json", &to_json(report))?,
        write_file(dir, "summary.txt", &summary(report))?,
    ];

    let mut volumes = String::from("quantity,value,exact\n");
    let _ = writeln!(volumes, "counting,{},", report.vol_counting);
    let _ = writeln!(volumes, "mk_limit,{},", report.vol_mk_limit);
    let _ = writeln!(
        volumes,
        "ma_exact,{},{}",
        q_to_f64(&report.vol_ma_exact),
        format_q(&report.vol_ma_exact)
    );
    let _ = writeln!(volumes, "ma_grid,{},", cell(report.vol_ma_grid));
    written.push(write_file(dir, "tables/volumes.csv", &volumes)?);

    let mut counting = String::from("k,dim,normalized,normalized_exact\n");
    for ((k, q), dim) in report.counting.samples.iter().zip(&report.counting.dims) {
        let _ = writeln!(counting, "{k},{dim},{},{}", q_to_f64(q), format_q(q));
    }
    written.push(write_file(dir, "tables/counting.csv", &counting)?);

    let mut levels = String::from("k,self_intersection,normalized,ma_mass,active_slopes\n");
    for (mk, ma) in report.mk_levels.iter().zip(&report.mass_levels.levels) {
        let _ = writeln!(
            levels,
            "{},{},{},{},{}",
            mk.level,
            format_q(&mk.self_intersection),
            format_q(&mk.normalized),
            format_q(&ma.mass),
            ma.active_slope_count
        );
    }
    written.push(write_file(dir, "tables/levels.csv", &levels)?);

    if let Some(b) = &report.bergman {
        written.push(write_file(dir, "tables/sandwich.csv", &b.to_csv())?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::verify::run_verify;

    #[test]
    fn files_and_fields() {
        let cfg = parse_config(
            "[series]\nkind = \"complete\"\nn = 1\nd = 3\n[schedules]\nbergman = []\ncounting_k_max = 64\n[grids]\nmass_grid = false\n",
        )
        .unwrap();
        let report = run_verify(&cfg).unwrap();
        let dir = std::env::temp_dir().join(format!("eqvol-report-{}", std::process::id()));
        let files = emit_report(&report, &dir).unwrap();
        assert_eq!(files.len(), 5);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap())
                .unwrap();
        assert_eq!(json["verdict"], "pass");
        assert_eq!(json["vol_ma_exact"], "3/1");
        assert!(json["vol_ma_grid"].is_null());
        assert!(json["bergman"].is_null());
        let volumes = std::fs::read_to_string(dir.join("tables/volumes.csv")).unwrap();
        assert!(volumes.lines().any(|l| l == "ma_grid,,"));
        assert!(volumes.contains("ma_exact,3,3/1"));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
