use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    out: Output,
    dir: TempDir,
}

impl Run {
    fn code(&self) -> i32 {
        self.out.status.code().unwrap()
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.out.stderr).into_owned()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join("out").join(name)
    }

    fn csv(&self, cmd: &str) -> Vec<Vec<String>> {
        let text = std::fs::read_to_string(self.path(&format!("{cmd}.csv"))).unwrap();
        assert!(!text.contains('\r'));
        text.lines()
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect()
    }

    fn events(&self, cmd: &str) -> Vec<Value> {
        std::fs::read_to_string(self.path(&format!("{cmd}.ndjson")))
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    fn result(&self, cmd: &str) -> Value {
        self.events(cmd)
            .into_iter()
            .find(|e| e["event"] == "result")
            .expect("result event")
    }
}

fn kslab(cmd: &str, config: &str, extra: &[&str]) -> Run {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_kslab"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(extra)
        .output()
        .unwrap();
    Run { out, dir }
}

/// Column `name` of a CSV table as floats.
fn column(table: &[Vec<String>], name: &str) -> Vec<f64> {
    let idx = table[0].iter().position(|h| h == name).unwrap();
    table[1..].iter().map(|r| r[idx].parse().unwrap()).collect()
}

fn text_column<'a>(table: &'a [Vec<String>], name: &str) -> Vec<&'a str> {
    let idx = table[0].iter().position(|h| h == name).unwrap();
    table[1..].iter().map(|r| r[idx].as_str()).collect()
}

#[test]
fn constants_examples() {
    let base = "model.a=1\nmodel.lambda=1\nmodel.tau=0\nmodel.b=1\nmodel.chi=0.3\nmodel.mu=1\n";
    let run = kslab("constants", base, &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let t = run.csv("constants");
    assert_eq!(t[0].join(","), "c,lambda1,lambda2,B,b_star,kappa_star,c_star,H1,H2,H3,H4");
    assert_eq!(column(&t, "kappa_star"), vec![1.0]);
    assert_eq!(column(&t, "c_star"), vec![2.0]);
    assert!((column(&t, "b_star")[0] - 1.0).abs() <= 1e-10);
    for h in ["H1", "H2", "H3", "H4"] {
        assert_eq!(text_column(&t, h), vec!["true"]);
    }

    let run = kslab("constants", "model.a=4\nmodel.lambda=1\nmodel.tau=0\n", &[]);
    let t = run.csv("constants");
    assert!((column(&t, "kappa_star")[0] - 1.0).abs() <= 1e-10);
    assert!((column(&t, "c_star")[0] - 5.0).abs() <= 1e-10);
    assert!((column(&t, "b_star")[0] - 7.0 / 6.0).abs() <= 1e-10);

    for (a, lambda) in [(3.0f64, 0.5), (0.4, 7.0)] {
        let run = kslab("constants", &format!("model.a={a}\nmodel.lambda={lambda}\nmodel.tau=2\n"), &[]);
        let t = run.csv("constants");
        assert_eq!(column(&t, "kappa_star"), vec![a.sqrt()]);
        assert_eq!(column(&t, "c_star"), vec![2.0 * a.sqrt()]);
    }
}

#[test]
fn config_errors_name_the_line() {
    let run = kslab("constants", "model.a=1\n# fine\nmodel.zeta=3\n", &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains(":3:"), "{}", run.stderr());
    assert!(run.stderr().contains("model.zeta"));

    let run = kslab("wave", "wave.c=fast\n", &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains(":1:"));
}

#[test]
fn kernel_checks_pass_for_several_seeds() {
    for seed in ["1", "99"] {
        let run = kslab("kernel-test", "", &["--seed", seed]);
        assert_eq!(run.code(), 0, "{}", run.stderr());
        let t = run.csv("kernel-test");
        assert_eq!(t.len(), 5);
        assert!(text_column(&t, "status").iter().all(|s| *s == "ok"));
        assert_eq!(run.events("kernel-test")[0]["config"]["run.seed"], seed);
    }
}

#[test]
fn wave_run_and_determinism() {
    let run = kslab("wave", "", &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let t = run.csv("wave");
    assert_eq!(t[0].join(","), "x,U,V,Psi_x,residual_u,residual_v");
    assert_eq!(t.len(), 4097);
    let res = run.result("wave");
    assert!(res["decay_fit_rel_error"].as_f64().unwrap() < 0.02);
    assert!(res["plateau_error"].as_f64().unwrap() < 0.01);
    assert!(res["max_residual_u"].as_f64().unwrap() <= 1e-3);
    assert!(run.events("wave").iter().any(|e| e["event"] == "step-summary"));

    let again = kslab("wave", "", &[]);
    let (a, b) = (
        std::fs::read(run.path("wave.csv")).unwrap(),
        std::fs::read(again.path("wave.csv")).unwrap(),
    );
    assert!(a == b, "wave CSV differs between identical runs");
}

#[test]
fn wave_refuses_without_h2() {
    let run = kslab("wave", "model.chi=1.2\n", &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("H2"), "{}", run.stderr());
    assert!(run.stderr().contains("<= b*_tau*chi*mu"));
    let err = run.events("wave").into_iter().find(|e| e["event"] == "error").unwrap();
    assert_eq!(err["kind"], "refusal");
    assert_eq!(err["exit_code"], 2);

    let run = kslab("wave", "wave.c=1.5\n", &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("c*"));
}

fn config_from_start_event(run: &Run, cmd: &str) -> String {
    let start = &run.events(cmd)[0];
    assert_eq!(start["event"], "start");
    start["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k}={}\n", v.as_str().unwrap()))
        .collect()
}

#[test]
fn echoed_config_reproduces_the_run() {
    let first = kslab("stability", "model.chi=0.2\nstability.t_end=5\nsolver.n=512\n", &[]);
    assert_eq!(first.code(), 0, "{}", first.stderr());
    let echoed = config_from_start_event(&first, "stability");
    let second = kslab("stability", &echoed, &[]);
    assert_eq!(second.code(), 0, "{}", second.stderr());
    assert_eq!(config_from_start_event(&second, "stability"), echoed);
    assert_eq!(
        std::fs::read(first.path("stability.csv")).unwrap(),
        std::fs::read(second.path("stability.csv")).unwrap()
    );
}

fn speed_of(run: &Run) -> f64 {
    assert_eq!(run.code(), 0, "{}", run.stderr());
    column(&run.csv("speed"), "slope")[0]
}

#[test]
fn speed_examples() {
    let kpp = speed_of(&kslab("speed", "model.chi=0\n", &[]));
    assert!((1.9..=2.0).contains(&kpp), "{kpp}");
    let h3 = speed_of(&kslab("speed", "model.chi=0.3\n", &[]));
    assert!((h3 / 2.0 - 1.0).abs() < 0.05, "{h3}");

    // the front of a=4 covers 160 units by t = 40
    let lost = kslab("speed", "model.chi=0\nmodel.a=4\n", &[]);
    assert_eq!(lost.code(), 1);
    assert!(lost.stderr().contains("enlarge the domain"), "{}", lost.stderr());
    let wide = "model.chi=0\nmodel.a=4\nsolver.x_min=-20\nsolver.x_max=200\nsolver.n=4401\n";
    let fast = speed_of(&kslab("speed", wide, &[]));
    assert!((fast / 4.0 - 1.0).abs() < 0.05, "{fast}");
}

#[test]
fn stability_examples() {
    let run = kslab("stability", "", &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let t = run.csv("stability");
    assert_eq!(t[0].join(","), "t,dist_u,dist_v,umax,umin");
    let res = run.result("stability");
    assert!(res["distance"].as_f64().unwrap() < 1e-3);
    assert_eq!(column(&t, "t").last().copied().map(f64::round), Some(30.0));

    let run = kslab("stability", "stability.base=1\nstability.amplitude=0\n", &[]);
    let t = run.csv("stability");
    for name in ["dist_u", "dist_v"] {
        assert!(column(&t, name).iter().all(|d| *d <= 1e-10));
    }

    // homogeneous data follow the logistic ODE u' = u(a − bu); the explicit
    // reaction step makes each time step one Euler step of it
    let (a, b, u0) = (1.5f64, 0.75f64, 4.0f64);
    let k = a / b;
    let logistic = |t: f64| k / (1.0 + (k / u0 - 1.0) * (-a * t).exp());
    let mut worst = Vec::new();
    for dt in [0.01f64, 0.005] {
        let cfg = format!(
            "model.a={a}\nmodel.b={b}\nstability.base={u0}\nstability.amplitude=0\n\
             stability.t_end=10\nsolver.dt={dt}\n"
        );
        let run = kslab("stability", &cfg, &[]);
        let t = run.csv("stability");
        let (ts, du) = (column(&t, "t"), column(&t, "dist_u"));
        assert!(du.windows(2).all(|w| w[1] < w[0]));
        let stride = (0.5 / dt).round() as usize;
        let mut u = u0;
        let mut err: f64 = 0.0;
        for (j, (t, d)) in ts.iter().zip(&du).enumerate() {
            if j > 0 {
                for _ in 0..stride {
                    u += dt * u * (a - b * u);
                }
            }
            assert!((d - (u - k)).abs() <= 1e-12, "t = {t}: {d} vs Euler {}", u - k);
            err = err.max((d - (logistic(*t) - k)).abs());
        }
        worst.push(err);
    }
    let ratio = worst[0] / worst[1];
    assert!((ratio - 2.0).abs() < 0.2, "{worst:?}");
}

#[test]
fn stability_refusals() {
    let run = kslab("stability", "model.chi=0.6\n", &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("H3"));
    let run = kslab("stability", "stability.base=0.2\nstability.amplitude=0.3\n", &[]);
    assert_eq!(run.code(), 2);
    assert!(run.stderr().contains("inf u0"));
}

#[test]
fn sweep_tau_crossing() {
    // a = 4, lambda = 1: H4 starts at tau = 3/8
    let cfg = "model.a=4\nmodel.lambda=1\nsweep.tau=0,0.1,0.3,0.375,0.5,1,2\n";
    let run = kslab("sweep", cfg, &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let t = run.csv("sweep");
    for (tau, c) in column(&t, "tau").iter().zip(column(&t, "c_star")) {
        if *tau >= 0.375 {
            assert_eq!(c, 4.0, "tau = {tau}");
        } else {
            assert!(c > 4.0, "tau = {tau}");
        }
    }
}

#[test]
fn sweep_h3_flips_at_half_b_over_mu() {
    let cfg = "model.b=1.4\nmodel.mu=2\nsweep.chi=0.3,0.34,0.35,0.36,0.5\n";
    let run = kslab("sweep", cfg, &[]);
    let t = run.csv("sweep");
    assert_eq!(text_column(&t, "H3"), vec!["true", "true", "false", "false", "false"]);
    assert_eq!(text_column(&t, "H1"), vec!["true"; 5]);
}

#[test]
fn sweep_order_and_failures() {
    let cfg = "sweep.tau=0:2:9\nsweep.chi=0,0.2,0.4\nsweep.c=2.5,3\n";
    let one = kslab("sweep", cfg, &["--threads", "1"]);
    let many = kslab("sweep", cfg, &["--threads", "4"]);
    assert_eq!(
        std::fs::read(one.path("sweep.csv")).unwrap(),
        std::fs::read(many.path("sweep.csv")).unwrap()
    );
    let t = one.csv("sweep");
    assert_eq!(t.len(), 1 + 9 * 3 * 2);
    assert_eq!(column(&t, "cell"), (0..54).map(f64::from).collect::<Vec<_>>());

    let run = kslab("sweep", "sweep.tau=-1,0.5\n", &[]);
    assert_eq!(run.code(), 0);
    let t = run.csv("sweep");
    let status = text_column(&t, "status");
    assert!(status[0].starts_with("failed:"), "{status:?}");
    assert_eq!(status[1], "ok");
    assert_eq!(t[1].len(), t[0].len());

    let run = kslab("sweep", "sweep.tau=0:1:101\nsweep.chi=0:1:101\n", &[]);
    assert_eq!(run.code(), 2);
}

#[test]
fn sweep_measured_speed_ignores_chi() {
    let cfg = "model.tau=1\nsweep.chi=0,0.1,0.2,0.3\nsweep.measure_speed=true\n";
    let run = kslab("sweep", cfg, &[]);
    assert_eq!(run.code(), 0, "{}", run.stderr());
    let speeds = column(&run.csv("sweep"), "speed");
    let (lo, hi) = speeds.iter().fold((f64::MAX, f64::MIN), |(l, h), s| (l.min(*s), h.max(*s)));
    assert!(hi / lo - 1.0 < 0.05, "{speeds:?}");
    assert!(speeds.iter().all(|s| (s / 2.0 - 1.0).abs() < 0.05));
}

#[test]
fn default_out_dir_is_created() {
    let dir = TempDir::new().unwrap();
    let nested: &Path = &dir.path().join("a/b");
    let st = Command::new(env!("CARGO_BIN_EXE_kslab"))
        .args(["constants", "--out"])
        .arg(nested)
        .status()
        .unwrap();
    assert!(st.success());
    assert!(nested.join("constants.csv").exists());
    assert!(nested.join("constants.ndjson").exists());
}
