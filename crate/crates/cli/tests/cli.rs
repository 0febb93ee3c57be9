use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.display().to_string()
}

fn golden(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    std::fs::read_to_string(p).unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isotherm"))
        .args(args)
        .env_remove("ISOTHERM_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn text_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(key)).then(|| it.next().unwrap().to_string())
        })
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

#[test]
fn info_qubit_fixture() {
    let o = run(&["info", "--system", &fixture("qubit.json"), "--state", &fixture("qubit_rho.json")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text_value(&text, "F"), "0.8");
    assert_eq!(text_value(&text, "B"), "0.1");
    assert_eq!(text_value(&text, "beta"), "2.19722457734");
}

#[test]
fn info_text_and_json_agree() {
    for state in ["qubit_rho.json", "qubit_gibbs.json", "rotated.json"] {
        let args = ["info", "--system", &fixture("qubit.json"), "--state", &fixture(state)];
        let text = stdout(&run(&args));
        let mut with_json = args.to_vec();
        with_json.push("--json");
        let json: serde_json::Value = serde_json::from_str(&stdout(&run(&with_json))).unwrap();
        for key in ["E", "S", "beta", "beta_tilde", "B", "F", "A"] {
            let v = &json[key];
            let token = match v.as_f64() {
                Some(x) => isotherm::diagram::fmt12(x),
                None => v.as_str().unwrap().to_string(),
            };
            assert_eq!(token, text_value(&text, key), "{state} {key}");
        }
    }
}

#[test]
fn gibbs_state_has_no_free_energy() {
    let o = run(&["info", "--system", &fixture("qubit.json"), "--state", &fixture("qubit_gibbs.json"), "--json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["F"], 0.0);
    assert_eq!(json["A"], 0.0);
}

#[test]
fn schema_errors_exit_2_and_name_the_field() {
    for (state, field) in [
        ("bad_trace.json", "diagonal"),
        ("not_hermitian.json", "matrix"),
        ("unknown_field.json", "temperature"),
    ] {
        let o = run(&["info", "--system", &fixture("qubit.json"), "--state", &fixture(state)]);
        assert_eq!(o.status.code(), Some(2), "{state}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(field), "{err}");
    }
    let o = run(&["info", "--system", &fixture("charges4.json"), "--state", &fixture("qubit_rho.json")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_3() {
    let o = run(&["boundary", "--system", &fixture("qubit.json"), "--points", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn equal_bath_temperatures_exit_4() {
    let q = fixture("qubit.json");
    let o = run(&["engine", "--cold", &q, "--beta-cold", "1", "--hot", &q, "--beta-hot", "1"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn engine_fixture_table() {
    let q = fixture("qubit.json");
    let (ba, bb) = (9f64.ln().to_string(), (7f64 / 3.0).ln().to_string());
    let o = run(&["engine", "--cold", &q, "--beta-cold", &ba, "--hot", &q, "--beta-hot", &bb, "--json"]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((json["eta"].as_f64().unwrap() - 0.3639283).abs() < 1e-6);
    assert!((json["bound_carnot"].as_f64().unwrap() - 0.6143781).abs() < 1e-6);
    assert_eq!(json["copies"].as_array().unwrap().len(), 4);
}

#[test]
fn rate_of_identical_states_is_one() {
    let o = run(&[
        "rate",
        "--system",
        &fixture("qubit.json"),
        "--from",
        &fixture("qubit_rho.json"),
        "--to",
        &fixture("qubit_rho.json"),
    ]);
    assert!(o.status.success());
    assert_eq!(text_value(&stdout(&o), "r"), "1");
}

#[test]
fn equilibrate_qubit_pair() {
    let q = fixture("qubit.json");
    let o = run(&[
        "equilibrate",
        "--system",
        &q,
        "--state",
        &fixture("qubit_cold.json"),
        "--system",
        &q,
        "--state",
        &fixture("qubit_warm.json"),
        "--json",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((json["beta_joint"].as_f64().unwrap() - 1.5316256).abs() < 1e-6);
    assert!((json["W"].as_f64().unwrap() - 0.0444881).abs() < 1e-6);
}

#[test]
fn laws_sweep_passes_and_ignores_thread_count() {
    let one = run(&["laws", "--trials", "1000", "--seed", "7", "--dims", "2x2"]);
    assert_eq!(one.status.code(), Some(0));
    let four = run(&["laws", "--trials", "1000", "--seed", "7", "--dims", "2x2", "--threads", "4"]);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn laws_seed_from_environment() {
    let flag = run(&["laws", "--trials", "50", "--seed", "11", "--dims", "3x2"]);
    let env = Command::new(env!("CARGO_BIN_EXE_isotherm"))
        .args(["laws", "--trials", "50", "--dims", "3x2"])
        .env("ISOTHERM_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, env.stdout);
    assert!(stdout(&env).contains("11"));
}

#[test]
fn charges_fixture() {
    let o = run(&[
        "charges",
        "--system",
        &fixture("charges4.json"),
        "--state",
        &fixture("charges4_gge.json"),
        "--json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let beta = json["beta_vec"].as_array().unwrap();
    assert!((beta[0].as_f64().unwrap() - 2f64.ln()).abs() < 1e-9);
    assert!(beta[1].as_f64().unwrap().abs() < 1e-9);
    for row in json["bound_charges"].as_array().unwrap() {
        assert_eq!(row["free"], 0.0);
    }
    let o = run(&[
        "charges",
        "--system",
        &fixture("charges4.json"),
        "--state",
        &fixture("charges4_rho.json"),
        "--mu",
        "1,1",
    ]);
    assert!(o.status.success());
    assert_eq!(text_value(&stdout(&o), "mu"), "0.707106781187");
}

#[test]
fn goldens_match() {
    let o = run(&[
        "boundary",
        "--system",
        &fixture("qubit.json"),
        "--state",
        &format!("rho={}", fixture("qubit_rho.json")),
        "--state",
        &format!("gibbs={}", fixture("qubit_gibbs.json")),
    ]);
    assert_eq!(stdout(&o), golden("qubit_boundary.csv"));
    let o = run(&["info", "--system", &fixture("qubit.json"), "--state", &fixture("qubit_rho.json"), "--json"]);
    assert_eq!(stdout(&o), golden("qubit_info.json"));
}

#[test]
fn boundary_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = run(&[
        "boundary",
        "--system",
        &fixture("qubit.json"),
        "--points",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.lines().nth(5).unwrap().starts_with("0,0.5,0.69314718056"));
}
