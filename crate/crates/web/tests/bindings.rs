use twistflow_web::{profile_curves, Simulation};

#[test]
fn profile_table_is_unit_and_starts_at_south_pole() {
    let t = profile_curves(3, 0.5, 5.0, 11).ok().unwrap();
    assert_eq!(t.len(), 33);
    assert_eq!((t[0], t[1], t[2]), (0.0, 0.0, -1.0));
    assert_eq!((t[6], t[7], t[8]), (1.0, 16.0 / 65.0, 63.0 / 65.0));
    for row in t.chunks(3) {
        assert!((row[1] * row[1] + row[2] * row[2] - 1.0).abs() < 1e-14);
    }
}

#[test]
fn short_run_decays_and_slices_unit_directors() {
    let s = Simulation::new(3, 2.0, 0.0, 128, 0.5).ok().unwrap();
    let sig = s.sigma();
    assert_eq!(s.times().len(), sig.len());
    assert_eq!(s.energy().len(), sig.len());
    assert!(sig.last().unwrap() < &sig[0]);
    assert!(s.fitted_rate() < 0.0);
    assert_eq!(s.status(), "completed");
    let d = s.director_slice(2.0, 9).ok().unwrap();
    assert_eq!(d.len(), 3 * 81);
    for v in d.chunks(3) {
        assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-9);
    }
    // The centre pixel sits on the axis, where the director points down.
    assert_eq!(&d[3 * 40..3 * 41], &[0.0, 0.0, -1.0]);
}
