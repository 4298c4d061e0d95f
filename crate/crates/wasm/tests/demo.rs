//! Host-side checks of the demo surface (the bindings compile to plain Rust
//! off-wasm, so the state machines can be exercised without a browser).

use kmp_wasm::{attract_scan, CouplingDemo, DemoSim};

#[test]
fn demo_sim_tracks_mass_and_advances() {
    let mut sim = DemoSim::new("dkmp", 0.5, 64, 2.0, 1.0, 7).unwrap();
    let mass0 = sim.mass();
    assert!(mass0 > 0.0);
    sim.advance(0.01).unwrap();
    sim.advance(0.01).unwrap();
    assert!((sim.macro_time() - 0.02).abs() < 1e-12);
    assert_eq!(sim.mass(), mass0);
    let bins = sim.binned(8).unwrap();
    assert_eq!(bins.len(), 8);
    let reference = sim.reference(64);
    assert_eq!(reference.len(), 64);
    // the reference keeps the same spatial mean as the initial profile
    let mean: f64 = reference.iter().sum::<f64>() / 64.0;
    assert!((mean - 2.0).abs() < 1e-6);
}

#[test]
fn demo_sim_is_seed_deterministic() {
    let mut a = DemoSim::new("harm", 1.0, 32, 2.0, 1.0, 3).unwrap();
    let mut b = DemoSim::new("harm", 1.0, 32, 2.0, 1.0, 3).unwrap();
    a.advance(0.02).unwrap();
    b.advance(0.02).unwrap();
    assert_eq!(a.site_values(), b.site_values());
}

#[test]
fn demo_sim_rejects_bad_model() {
    // try_new is the plain-Rust layer; JsError conversion only exists on wasm
    assert!(DemoSim::try_new("kawasaki", 0.5, 32, 2.0, 1.0, 1).is_err());
    assert!(DemoSim::try_new("gkmp", -0.5, 32, 2.0, 1.0, 1).is_err());
}

#[test]
fn attract_scan_emits_json() {
    let json = attract_scan("dkmp", 0.5, 8, 16).unwrap();
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["report_only"], false);
    assert_eq!(value["criterion"]["pass"], true);
    let low_spin = attract_scan("harm", 0.3, 6, 12).unwrap();
    let value: serde_json::Value = serde_json::from_str(&low_spin).unwrap();
    assert_eq!(value["report_only"], true);
}

#[test]
fn coupling_demo_preserves_order() {
    // small spins stress the domination parameter scaling too
    for spin in [0.25, 0.5, 2.0] {
        let mut demo = CouplingDemo::new(48, spin, 11).unwrap();
        demo.step_events(20_000).unwrap();
        assert_eq!(demo.events(), 20_000);
        assert!(
            demo.min_gap() >= -1e-12,
            "spin {spin}: order violated, min gap {}",
            demo.min_gap()
        );
        let (lower, upper) = (demo.lower(), demo.upper());
        for (lo, hi) in lower.iter().zip(upper.iter()) {
            assert!(lo <= &(hi + 1e-12));
        }
    }
}
