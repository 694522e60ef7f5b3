use otoc_wasm::{otoc_histogram_json, tv_sweep_json, weingarten_json};
use serde_json::Value;

#[test]
fn table_for_k2_d2() {
    let v: Value = serde_json::from_str(&weingarten_json(2, 2).unwrap()).unwrap();
    assert_eq!(v["k"], 2);
    assert_eq!(v["orthogonality"], true);
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
    assert!(weingarten_json(3, 2).is_err());
    assert!(weingarten_json(7, 9).is_err());
}

#[test]
fn histogram_counts_every_sample() {
    let v: Value = serde_json::from_str(&otoc_histogram_json(4, 300, 20, 1).unwrap()).unwrap();
    for key in ["global_counts", "product_counts"] {
        let total: u64 = v[key].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(total, 300);
    }
    // Product unitaries never disturb the second block.
    assert!((v["product_mean"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(otoc_histogram_json(3, 10, 10, 1).is_err());
    assert_eq!(otoc_histogram_json(2, 50, 5, 9), otoc_histogram_json(2, 50, 5, 9));
}

#[test]
fn sweep_returns_one_point_per_size() {
    let v: Value = serde_json::from_str(&tv_sweep_json("comp-basis", 2, 20, 4, 3).unwrap()).unwrap();
    let points = v.as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[1]["n"], 4);
    assert!(tv_sweep_json("nope", 2, 20, 2, 3).is_err());
    let oto: Value = serde_json::from_str(&tv_sweep_json("oto-theorem1", 4, 20, 2, 3).unwrap()).unwrap();
    assert_eq!(oto[0]["depth"], 2);
    assert!(tv_sweep_json("comp-basis", 2, 20, 8, 3).is_err());
}
