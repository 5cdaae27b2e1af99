mod common;

use std::path::Path;
use std::process::{Command, Output};

use mctruth::report::Report;

use common::*;

fn mctruth(args: &[&str], config: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .arg("--config")
        .arg(config)
        .env_remove("MCTRUTH_THREADS")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bundled_configs_validate() {
    for cfg in ["example1.cfg", "example2.cfg"] {
        let out = mctruth(&["validate"], &configs_dir().join(cfg));
        assert_eq!(out.status.code(), Some(0), "{cfg}: {}", stderr(&out));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["command"], "validate");
        assert_eq!(v["valid"], true);
        assert_eq!(v["violations"].as_array().unwrap().len(), 0);
    }
}

#[test]
fn example2_describes_the_mediation_dag() {
    let cfg = mctruth::config::parse_config(&configs_dir().join("example2.cfg")).unwrap();
    let names: Vec<&str> = cfg.dgm.nodes.iter().map(|n| n.name.as_str()).collect();
    for n in ["C", "U", "A", "L", "M", "Y"] {
        assert!(names.contains(&n), "{n}");
    }
}

#[test]
fn oracle_on_example1_reports_delta() {
    let out = mctruth(&["oracle"], &configs_dir().join("example1.cfg"));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let delta = v["abs_delta"].as_f64().unwrap();
    let se = v["mc_replicate_se"].as_f64().unwrap();
    assert!(v["psi_quadrature"].as_f64().unwrap() > 1.0);
    assert!(v["psi_mc"].as_f64().is_some());
    assert!(delta < 3.0 * se, "{delta} vs {se}");
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(1).replace("[seed]\nmaster", "[seed]\nssed = 4\nmaster");
    let out = mctruth(&["truth"], &write(dir.path(), "c.toml", &text));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ssed"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn zero_n_and_bad_syntax_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = mctruth(
        &["truth"],
        &write(dir.path(), "n.toml", &small_config(1).replace("n = 20000", "n = 0")),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("run.n"), "{}", stderr(&out));
    let out = mctruth(&["truth"], &write(dir.path(), "s.toml", "[run\nn = 1\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn dangling_estimand_reference_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(1).replace(
        "type = \"marginal_odds_ratio\"\nexposure = \"A\"",
        "type = \"marginal_odds_ratio\"\nexposure = \"Q\"",
    );
    let out = mctruth(&["truth"], &write(dir.path(), "c.toml", &text));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn invalid_model_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(1)
        .replace(
            r#"name = "A"
intercept = 0.0"#,
            r#"name = "A"
intercept = 0.0
noise_sd = -1.0"#,
        )
        .replace(
            r#"link = "expit"
noise = "bernoulli"

[[dgm.nodes]]
name = "Y""#,
            r#"link = "identity"
noise = "gaussian"

[[dgm.nodes]]
name = "Y""#,
        );
    let cfg = write(dir.path(), "c.toml", &text);
    let out = mctruth(&["validate"], &cfg);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], false);
    assert!(!v["violations"].as_array().unwrap().is_empty());
    assert!(stderr(&out).contains("violation"));
    let out = mctruth(&["truth"], &cfg);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn saturated_outcome_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(1).replace("coefficient = 0.6931471805599453", "coefficient = 60.0");
    let out = mctruth(&["truth"], &write(dir.path(), "c.toml", &text));
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).to_lowercase().contains("degenerate"), "{}", stderr(&out));
}

#[test]
fn io_failures_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let out = mctruth(&["truth"], &dir.path().join("absent.toml"));
    assert_eq!(out.status.code(), Some(5));

    let text = small_config(1).replace(
        "[[dgm.nodes]]\nname = \"C\"",
        "[[dgm.sources]]\nname = \"s\"\npath = \"nowhere.csv\"\ncolumns = [\"x\"]\n\n[[dgm.nodes]]\nname = \"C\"",
    );
    let out = mctruth(&["validate"], &write(dir.path(), "c.toml", &text));
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
}

#[test]
fn empirical_source_paths_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cov.csv", "x\n-1.0\n0.0\n2.5\n");
    let text = small_config(1)
        .replace(
            "[[dgm.nodes]]\nname = \"C\"",
            "[[dgm.sources]]\nname = \"s\"\npath = \"cov.csv\"\ncolumns = [\"x\"]\n\n[[dgm.nodes]]\nname = \"C\"",
        )
        .replace(
            "distribution = { type = \"normal\", mean = 0.0, sd = 1.0 }",
            "distribution = { type = \"empirical\", source = \"s\", column = \"x\" }",
        );
    let cfg = write(dir.path(), "c.toml", &text);
    let out = Command::new(bin())
        .current_dir(std::env::temp_dir())
        .args(["truth", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn json_reports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config(3));
    for cmd in ["truth", "oracle", "diagnose", "simstudy", "validate"] {
        let out = mctruth(&[cmd], &cfg);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", stderr(&out));
        let text = String::from_utf8(out.stdout).unwrap();
        let parsed: Report = serde_json::from_str(&text).unwrap();
        let direct = mctruth::report::execute(
            match cmd {
                "truth" => mctruth::report::Command::Truth,
                "oracle" => mctruth::report::Command::Oracle,
                "diagnose" => mctruth::report::Command::Diagnose,
                "simstudy" => mctruth::report::Command::Simstudy,
                _ => mctruth::report::Command::Validate,
            },
            &mctruth::config::parse_config(&cfg).unwrap(),
        )
        .unwrap();
        assert_eq!(parsed, direct, "{cmd}");
        assert_eq!(parsed.render(mctruth::config::Format::Json).unwrap(), text, "{cmd}");
    }
}

#[test]
fn csv_numbers_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config(4));
    let json: serde_json::Value = serde_json::from_slice(&mctruth(&["truth"], &cfg).stdout).unwrap();
    let out = mctruth(&["truth", "--format", "csv"], &cfg);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let value_col = headers.iter().position(|h| h == "value").unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    let v: f64 = row[value_col].parse().unwrap();
    assert_eq!(v.to_bits(), json["value"].as_f64().unwrap().to_bits());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config(5));
    let a: serde_json::Value = serde_json::from_slice(&mctruth(&["truth", "--seed", "77"], &cfg).stdout).unwrap();
    let b: serde_json::Value =
        serde_json::from_slice(&mctruth(&["truth"], &write(dir.path(), "d.toml", &small_config(77))).stdout).unwrap();
    assert_eq!(a["master_seed"], 77);
    assert_eq!(a, b);
}

#[test]
fn thread_env_var_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config(6));
    let plain = mctruth(&["truth"], &cfg);
    let env = Command::new(bin())
        .args(["truth", "--config"])
        .arg(&cfg)
        .env("MCTRUTH_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(plain.stdout, env.stdout);
}

#[test]
fn output_file_is_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config(7));
    let dest = dir.path().join("report.json");
    let out = Command::new(bin())
        .args(["truth", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&dest)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let first = std::fs::read(&dest).unwrap();
    assert!(!first.is_empty());

    // A failing run leaves the previous report untouched and no temp files behind.
    let bad = write(
        dir.path(),
        "bad.toml",
        &small_config(7).replace("coefficient = 0.6931471805599453", "coefficient = 60.0"),
    );
    let out = Command::new(bin())
        .args(["truth", "--config"])
        .arg(&bad)
        .arg("--output")
        .arg(&dest)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(std::fs::read(&dest).unwrap(), first);
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["bad.toml", "c.toml", "report.json"]);

    let fresh = dir.path().join("never.json");
    let out = Command::new(bin())
        .args(["truth", "--config"])
        .arg(&bad)
        .arg("--output")
        .arg(&fresh)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(!fresh.exists());
}

#[test]
fn missing_command_block_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(8);
    let cut = text.find("[diagnose]").unwrap();
    let end = text.find("[simstudy]").unwrap();
    let text = format!("{}{}", &text[..cut], &text[end..]);
    let out = mctruth(&["diagnose"], &write(dir.path(), "c.toml", &text));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn csv_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &small_config(9));
    let expect = [
        ("truth", "estimand,value,replicate_se,n,replicates,master_seed,branch,potential_mean", 2),
        ("oracle", "method,mu_a1,mu_a0,psi_quadrature,psi_mc,mc_replicate_se,abs_delta", 1),
        ("diagnose", "n,mean,sd,replicates,is_kappa", 3),
        (
            "simstudy",
            "label,estimator,truth_used,n_sims,n_failed,mean_estimate,bias,bias_mcse,empirical_se,mse,coverage,coverage_mcse,error",
            3,
        ),
        ("validate", "node,violation", 0),
    ];
    for (cmd, header, rows) in expect {
        let out = mctruth(&[cmd, "--format", "csv"], &cfg);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        let text = String::from_utf8(out.stdout).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header), "{cmd}");
        assert_eq!(lines.count(), rows, "{cmd}");
    }
}
