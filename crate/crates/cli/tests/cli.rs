use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn eqvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqvol"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("eqvol-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn verify_passes_and_is_deterministic() {
    let dir = scratch("pass");
    let mut reports = Vec::new();
    let out = dir.join("out");
    for _ in 0..2 {
        let config = write_config(
            &dir,
            &format!(
                "[series]\nkind = \"complete\"\nn = 1\nd = 3\n[schedules]\nbergman = [4, 8]\n[output]\ndir = \"{}\"\n",
                out.display()
            ),
        );
        let o = eqvol(&["verify", "--config", &config]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        reports.push(std::fs::read_to_string(out.join("report.json")).unwrap());
        for table in ["volumes", "counting", "levels", "sandwich"] {
            assert!(out.join("tables").join(format!("{table}.csv")).exists());
        }
    }
    assert_eq!(reports[0], reports[1]);
    let json: serde_json::Value = serde_json::from_str(&reports[0]).unwrap();
    assert_eq!(json["verdict"], "pass");
    assert_eq!(json["vol_ma_exact"], "3/1");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_fails_with_exit_one() {
    let dir = scratch("fail");
    let config = write_config(
        &dir,
        &format!(
            "[series]\nkind = \"example36\"\nn = 2\nd = 1\n[schedules]\nenvelope = [1, 2, 4, 8]\nbergman = []\n\
             counting_k_max = 80\n[grids]\nmass_grid = false\n[tolerances]\njoint = 0.1\n[output]\ndir = \"{}\"\n",
            dir.join("out").display()
        ),
    );
    let o = eqvol(&["verify", "--config", &config]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(json["verdict"], "fail");
    assert_eq!(json["vol_ma_exact"], "7/8");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_error_is_positioned_json_with_exit_two() {
    let dir = scratch("bad");
    let config = write_config(
        &dir,
        "[series]\nkind = \"complete\"\nn = 1\nd = 3\ncolour = 1\n",
    );
    let o = eqvol(&["volume", "--config", &config]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["line"], 5);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn schedule_not_divisibility_ordered_is_rejected() {
    let o = eqvol(&[
        "envelope",
        "--kind",
        "complete",
        "--n",
        "1",
        "--d",
        "2",
        "--schedule",
        "3,5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn stage_commands_print_results() {
    let o = eqvol(&[
        "volume", "--kind", "complete", "--n", "2", "--d", "2", "--k-max", "40",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("4/1"));

    let o = eqvol(&["ma-mass", "--kind", "complete", "--n", "1", "--d", "3"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["exact_mass"], "3/1");

    let o = eqvol(&[
        "envelope",
        "--kind",
        "complete",
        "--n",
        "1",
        "--d",
        "1",
        "--schedule",
        "1,2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!o.stdout.is_empty());
}
