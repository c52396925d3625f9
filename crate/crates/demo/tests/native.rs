use kswave_demo::{psi_json, thresholds_json, wave_json};
use serde_json::Value;

const H3: (f64, f64, f64, f64, f64, f64) = (0.3, 1.0, 1.0, 1.0, 1.0, 1.0);

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn thresholds_payload() {
    let v = parse(thresholds_json((0.3, 1.0, 1.0, 4.0, 1.0, 0.0)).unwrap());
    assert!((v["thresholds"]["c_star"].as_f64().unwrap() - 5.0).abs() < 1e-10);
    assert!((v["thresholds"]["b_star"].as_f64().unwrap() - 7.0 / 6.0).abs() < 1e-10);
    assert_eq!(v["hypotheses"]["h4"], false);
    assert!(thresholds_json((0.3, 1.0, 1.0, -1.0, 1.0, 0.0)).is_err());
}

#[test]
fn chemical_field_payload() {
    let v = parse(psi_json(H3, 2.5, 0.5).unwrap());
    let x = v["x"].as_array().unwrap();
    assert_eq!(x.len(), v["psi"].as_array().unwrap().len());
    assert_eq!(x.last().unwrap().as_f64(), Some(40.0));
    assert!(v["gradient_excess"].as_f64().unwrap() <= 1e-10);
    // upstream influence decays like e^{-lambda2 * 20} with lambda2 ~ 0.35
    let psi: Vec<f64> = v["psi"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
    assert!(psi.iter().all(|p| *p > 0.0 && *p <= 1.0 + 1e-12));
    assert!((psi[0] - 1.0).abs() < 1e-2);
}

#[test]
fn coarse_wave_payload() {
    let v = parse(wave_json(H3, 2.5, 1024).unwrap());
    let fit = v["decay_fit"].as_f64().unwrap();
    assert!((fit / 0.5 - 1.0).abs() < 0.02, "{fit}");
    assert!(v["plateau_error"].as_f64().unwrap() < 0.01);
    let (u, up, lo) = (&v["u"], &v["upper"], &v["lower"]);
    for i in 0..v["x"].as_array().unwrap().len() {
        let (u, up, lo) = (u[i].as_f64().unwrap(), up[i].as_f64().unwrap(), lo[i].as_f64().unwrap());
        assert!(lo - 1e-9 <= u && u <= up + 1e-9);
    }
    let err = wave_json(H3, 1.9, 512).unwrap_err();
    assert!(err.to_string().contains("c*"));
}
