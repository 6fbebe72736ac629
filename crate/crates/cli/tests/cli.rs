use std::path::Path;
use std::process::{Command, Output};

fn aloha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aloha-lab"))
        .args(args)
        .env_remove("ALOHA_LAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut lines = text.split("\r\n").filter(|l| !l.is_empty());
        let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
        let header = split(lines.next().unwrap());
        Csv {
            header,
            rows: lines.map(split).collect(),
        }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let j = self
            .header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[j].parse().unwrap()).collect()
    }
}

fn lambert_w(x: f64) -> f64 {
    let mut w = x.ln() - x.ln().ln();
    for _ in 0..50 {
        w -= (w * w.exp() - x) / (w.exp() * (w + 1.0));
    }
    w
}

#[test]
fn ri_sweep_has_one_row_per_point() {
    let out = aloha(&[
        "ri",
        "--n",
        "20",
        "--rho-db",
        "20",
        "--receiver",
        "all",
        "--mu-sweep",
        "0.01:100:200:log",
    ]);
    let text = stdout(&out);
    assert!(text.ends_with("\r\n"));
    let csv = Csv::parse(&text);
    assert_eq!(
        csv.header,
        ["mu", "r_collision", "r_capture", "r_ordered", "r_unordered_lb"]
    );
    assert_eq!(csv.rows.len(), 200);
    let (capture, ordered, unordered) = (csv.col("r_capture"), csv.col("r_ordered"), csv.col("r_unordered_lb"));
    for k in 0..200 {
        assert!(ordered[k] >= capture[k] - 1e-12 && unordered[k] >= capture[k] - 1e-12);
    }
    let mu = csv.col("mu");
    assert_eq!((mu[0], mu[199]), (0.01, 100.0));
}

#[test]
fn collision_operating_point_is_the_closed_form() {
    let out = aloha(&[
        "operating-point",
        "--n",
        "20",
        "--rho-db",
        "40",
        "--receiver",
        "collision",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let point = &json[0];
    let want = lambert_w(1e4).exp() - 1.0;
    let got = point["mu_star"].as_f64().unwrap();
    assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
    assert_eq!(point["q0_star"].as_f64(), Some(0.05));
    assert_eq!(point["rho"].as_f64(), Some(1e4));
}

#[test]
fn decibels_convert_exactly() {
    let csv = Csv::parse(&stdout(&aloha(&[
        "capacity",
        "--n",
        "1",
        "--rho-db-sweep",
        "0:20:2:lin",
    ])));
    assert_eq!(csv.col("rho"), [1.0, 100.0]);
    assert!((csv.col("c_sum")[0] - 0.860347).abs() < 1e-6);
}

#[test]
fn compare_orders_receivers() {
    let out = aloha(&[
        "compare",
        "--n",
        "20",
        "--rho-db-sweep",
        "-10:50:7:lin",
        "--receiver",
        "all",
    ]);
    let csv = Csv::parse(&stdout(&out));
    assert_eq!(csv.rows.len(), 7);
    let c = |r: &str| csv.col(&format!("c_{r}"));
    let (sum, os, ns, capture, collision) = (c("sum"), c("ordered"), c("unordered_lb"), c("capture"), c("collision"));
    for k in 0..7 {
        assert!(
            sum[k] > os[k] && os[k] >= ns[k] && ns[k] >= collision[k] - 3e-6,
            "row {k}"
        );
        assert!(capture[k] - collision[k] < 0.5, "row {k}");
    }
    assert!(csv.header.iter().any(|h| h == "slope_ordered"));
    assert_eq!(
        csv.rows[0][csv.header.iter().position(|h| h == "slope_sum").unwrap()],
        ""
    );
}

#[test]
fn single_point_compare_is_an_operating_point() {
    let args = ["--n", "10", "--rho-db", "10", "--receiver", "capture"];
    let compare = stdout(&aloha(&[&["compare"], &args[..]].concat()));
    let point = stdout(&aloha(&[&["operating-point"], &args[..]].concat()));
    assert_eq!(compare, point);
}

#[test]
fn figure_sidecar_replays_to_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_aloha-lab"))
        .args(["figure", "fig9b", "--slots", "2000"])
        .env("ALOHA_LAB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read(dir.path().join("fig9b.csv")).unwrap();
    let side_path = dir.path().join("fig9b.json");
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&side_path).unwrap()).unwrap();
    assert_eq!(side["seed"].as_u64(), Some(998));
    assert_eq!(side["job"]["simulate"]["slots"].as_u64(), Some(2000));
    assert!(side["version"].is_string());

    let header = String::from_utf8_lossy(&csv).lines().next().unwrap().to_string();
    assert!(
        header.starts_with("mu,") && header.contains("sim_sum_rate_ordered_sic"),
        "{header}"
    );

    let replayed = aloha(&["replay", side_path.to_str().unwrap()]);
    assert!(replayed.status.success());
    assert_eq!(replayed.stdout, csv);
}

#[test]
fn multi_panel_figures_write_every_panel() {
    let dir = tempfile::tempdir().unwrap();
    let out = aloha(&[
        "figure",
        "fig4",
        "--slots",
        "500",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for id in ["fig4a", "fig4b"] {
        assert!(Path::new(&dir.path().join(format!("{id}.csv"))).exists());
        assert!(Path::new(&dir.path().join(format!("{id}.json"))).exists());
    }
}

#[test]
fn parse_errors_exit_with_two_and_usage() {
    for args in [
        &["ri", "--n", "20", "--rho-db", "20", "--mu-sweep", "1:2:3"][..],
        &["ri", "--n", "20", "--rho-db", "20"],
        &["ri", "--n", "20", "--rho-db", "20", "--mu", "1", "--receiver", "bogus"],
        &["figure", "fig1"],
        &["nonsense"],
    ] {
        let out = aloha(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
}

#[test]
fn analytic_range_errors_exit_with_three_and_name_the_fallback() {
    let out = aloha(&[
        "ri",
        "--n",
        "40",
        "--rho-db",
        "20",
        "--mu",
        "0.5",
        "--receiver",
        "ordered-sic",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("simulate --estimate-ri"));

    let fallback = aloha(&[
        "simulate",
        "--n",
        "40",
        "--rho-db",
        "20",
        "--mu",
        "0.5",
        "--receiver",
        "ordered-sic",
        "--slots",
        "2000",
        "--estimate-ri",
    ]);
    let csv = Csv::parse(&stdout(&fallback));
    assert_eq!(csv.header, ["i", "sim_r_ordered_sic", "sim_r_ordered_sic_se"]);
    assert_eq!(csv.rows.len(), 40);
}

#[test]
fn simulation_output_ignores_worker_count() {
    let run = |workers: &str| {
        stdout(&aloha(&[
            "--workers",
            workers,
            "simulate",
            "--n",
            "8",
            "--rho-db",
            "10",
            "--mu-sweep",
            "0.5:2:3:log",
            "--q0",
            "0.3",
            "--slots",
            "150000",
        ]))
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    let csv = Csv::parse(&one);
    assert_eq!(csv.rows.len(), 3 * 5);
}

#[test]
fn json_format_follows_the_output_extension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub/rates.json");
    let out = aloha(&[
        "sumrate",
        "--n",
        "10",
        "--rho-db-sweep",
        "0:10:2:lin",
        "--receiver",
        "capture",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["rho_db"].as_f64(), Some(10.0));
    assert!(rows[1]["c_capture"].as_f64().unwrap() > rows[0]["c_capture"].as_f64().unwrap());
}
