use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_review-pricing"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn catalan_contains_known_count() {
    let out = run(&["catalan", "--a", "1", "--b", "2", "--m", "3", "--tmax", "13"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("likes,dislikes,count"));
    assert!(text.lines().any(|l| l == "9,4,570"));
}

#[test]
fn solve_series_prints_json() {
    let out = run(&[
        "solve-series", "--p", "0.6", "--q", "0.4", "--c", "0.43", "--delta", "0.99", "--x0", "0.5", "--mode",
        "dynamic",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let x_star = v["x_star"].as_f64().unwrap();
    let value = v["value"].as_f64().unwrap();
    assert!((x_star - 0.021105).abs() < 1e-5, "{x_star}");
    assert!((value - 7.85946).abs() < 1e-4, "{value}");
}

#[test]
fn solve_series_csv_schema() {
    let out = run(&["solve-series", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().next(), Some("x_star,value,epsilon,t_epsilon"));
}

#[test]
fn numbers_have_twelve_significant_digits() {
    let out = run(&["solve-series", "--format", "csv"]);
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    let value = row.split(',').nth(1).unwrap();
    let digits = value.chars().filter(char::is_ascii_digit).collect::<String>();
    assert!(digits.trim_start_matches('0').len() <= 12, "{value}");
}

#[test]
fn csv_headers_per_subcommand() {
    let cases: [(&[&str], &str); 5] = [
        (&["solve-dp", "--format", "csv"], "index,prior,value"),
        (&["static-sweep", "--points", "5"], "price,value,m_pi,frontier"),
        (&["extended-price-sweep", "--horizon", "50", "--grid-points", "21", "--points", "3"], "price,revenue"),
        (
            &["extended-cost-sweep", "--horizon", "50", "--grid-points", "21", "--points", "3", "--costs", "2"],
            "cost,revenue_static,revenue_dynamic",
        ),
        (&["simulate", "--runs", "200", "--horizon", "200", "--format", "csv"], "stop_time,runs"),
    ];
    for (args, header) in cases {
        let out = run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout(&out).lines().next(), Some(header), "{args:?}");
    }
}

#[test]
fn reproduce_figures_writes_five_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "reproduce-figures",
        "--out",
        dir.path().to_str().unwrap(),
        "--horizon",
        "150",
        "--points",
        "6",
        "--costs",
        "3",
        "--grid-points",
        "31",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let expected = [
        ("fig1_dp_values.csv", "index,prior,value"),
        ("fig3_static_sweep_sym.csv", "price,value,m_pi,frontier"),
        ("fig3_static_sweep_gen.csv", "price,value,m_pi,frontier"),
        ("fig4_price_sweep.csv", "price,revenue_binary,revenue_extended"),
        (
            "fig5_cost_sweep.csv",
            "cost,static_binary,dynamic_binary,static_extended,dynamic_extended",
        ),
    ];
    for (name, header) in expected {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{name}");
        assert!(text.lines().count() > 1, "{name} has no rows");
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("figs");
    let out = bin()
        .args(["reproduce-figures", "--horizon", "50", "--points", "3", "--costs", "2", "--grid-points", "11"])
        .env("REVIEW_PRICING_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("fig5_cost_sweep.csv").exists());
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&["solve-series", "--c", "0.45", "--epsilon", "1e-7", "--dump-config"]);
    assert!(first.status.success());
    let path = dir.path().join("run.toml");
    std::fs::write(&path, &first.stdout).unwrap();
    let second = run(&["solve-series", "--config", path.to_str().unwrap(), "--dump-config"]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);

    // The dumped config drives the same run as the flags.
    let a = run(&["solve-series", "--c", "0.45", "--epsilon", "1e-7"]);
    let b = run(&["solve-series", "--config", path.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[model]\nc = 0.45\n").unwrap();
    let out = run(&["solve-series", "--config", path.to_str().unwrap(), "--c", "0.44", "--dump-config"]);
    assert!(stdout(&out).contains("c = 0.44"));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = run(&["solve-series", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(v["value"].is_number());
}

#[test]
fn usage_and_config_errors_exit_two() {
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    for args in [
        &["solve-series", "--p", "1.5"][..],
        &["solve-series", "--mode", "static"],
        &["simulate", "--policy", "threshold"],
        &["solve-dp", "--p", "0.7", "--q", "0.3141592653589793"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[model]\nbogus = 1\n").unwrap();
    let out = run(&["solve-series", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.json");
    let out = run(&["solve-series", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
