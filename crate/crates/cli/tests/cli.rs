use std::io::Write;
use std::process::{Command, Stdio};

use serde_json::{json, Value};

fn run(command: &str, problem: &Value, extra: &[&str]) -> (Value, i32) {
    let dir = std::env::temp_dir().join(format!("qpolar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{command}-{}.json", fnv1a(&problem.to_string())));
    std::fs::File::create(&path)
        .unwrap()
        .write_all(problem.to_string().as_bytes())
        .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qpolar"))
        .arg(command)
        .arg("--input")
        .arg(&path)
        .args(extra)
        .stderr(Stdio::null())
        .output()
        .unwrap();
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (report, out.status.code().unwrap())
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

fn close(v: &Value, x: f64) -> bool {
    (v.as_f64().unwrap() - x).abs() <= 1e-12 * x.abs().max(1.0)
}

#[test]
fn dual_of_identity_is_identity_and_saturated() {
    let (r, code) = run("dual", &json!({"version": "1", "n": 2, "matrices": {"A": [[1, 0], [0, 1]]}}), &[]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["dual"]["shape"], json!([[1.0, 0.0], [0.0, 1.0]]));
    assert_eq!(r["result"]["saturation"]["pair"]["is_saturated"], true);
}

#[test]
fn pauli_partners_in_one_dimension() {
    let p = json!({"version": "1", "n": 1, "params": {"mode": "pauli-1d", "sigma_xx": 1, "sigma_pp": 1}});
    let (r, code) = run("reconstruct", &p, &[]);
    assert_eq!(code, 0);
    let xp = r["result"]["sigma_xp"].as_array().unwrap();
    let half_root3 = 3f64.sqrt() / 2.0;
    assert!(close(&xp[0], half_root3) && close(&xp[1], -half_root3));
}

#[test]
fn exit_codes_follow_error_classes() {
    let sub = json!({"version": "1", "n": 1, "params": {"mode": "pauli-1d", "sigma_xx": 0.4, "sigma_pp": 0.4}});
    let (r, code) = run("reconstruct", &sub, &[]);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "precondition");

    let unknown = json!({"version": "1", "n": 1, "bogus": 1});
    assert_eq!(run("dual", &unknown, &[]).1, 1);

    let bad_dims = json!({"version": "1", "n": 2, "matrices": {"A": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}});
    assert_eq!(run("dual", &bad_dims, &[]).1, 1);

    let ragged = json!({"version": "1", "n": 2, "matrices": {"A": [[1, 0], [0]]}});
    assert_eq!(run("dual", &ragged, &[]).1, 1);

    let not_pd = json!({"version": "1", "n": 1, "matrices": {"Sigma": [[1, 2], [2, 1]]}});
    assert_eq!(run("williamson", &not_pd, &[]).1, 2);
}

#[test]
fn emitted_matrices_round_trip() {
    let a = 0.1_f64 + 0.2;
    let b = 1.0_f64 / 3.0;
    let sigma = [[a, b / 7.0], [b / 7.0, 2.0 * b]];
    let p = json!({"version": "1", "n": 1, "matrices": {"Sigma": sigma}});
    let (r, code) = run("project", &p, &[]);
    assert_eq!(code, 0);
    let echoed = &r["input"]["matrices"]["Sigma"];
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(echoed[i][j].as_f64().unwrap().to_bits(), sigma[i][j].to_bits());
        }
    }
}

#[test]
fn seed_flag_overrides_file() {
    let p = json!({"version": "1", "n": 2, "matrices": {"A": [[2, 0], [0, 0.5]]},
                   "params": {"samples": 10000, "seed": 1}});
    let (r, _) = run("mahler", &p, &["--seed", "99"]);
    assert_eq!(r["seed"], 99);
    let (r1, _) = run("mahler", &p, &[]);
    assert_eq!(r1["seed"], 1);
    assert_ne!(
        r["certificates"]["monte_carlo"]["volume"]["estimate"],
        r1["certificates"]["monte_carlo"]["volume"]["estimate"]
    );
}

#[test]
fn tolerance_flag_is_reported() {
    let p = json!({"version": "1", "n": 1, "matrices": {"A": [[1]], "B": [[1]]}});
    let (r, code) = run("pair-check", &p, &["--tolerance-rel", "1e-6"]);
    assert_eq!(code, 0);
    assert!(close(&r["tolerance"]["rel_eq"], 1e-6));
    assert_eq!(r["status"], "saturated");
}

#[test]
fn free_particle_spreads() {
    let p = json!({"version": "1", "n": 1,
                   "matrices": {"Sigma": [[0.5, 0], [0, 0.5]], "H": [[0, 0], [0, 1]]},
                   "params": {"t_grid": [0, 1, 2]}});
    let (r, code) = run("evolve", &p, &[]);
    assert_eq!(code, 0);
    let series = r["result"]["series"].as_array().unwrap();
    for pt in series {
        let t = pt["t"].as_f64().unwrap();
        assert!(close(&pt["Sigma"][0][0], 0.5 + 0.5 * t * t));
        assert_eq!(pt["pair"]["is_pair"], true);
    }
}
