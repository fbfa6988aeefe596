use toda_bench::{gap_model, shock_state};

#[test]
fn fixtures_build() {
    let s = shock_state(60, 2.0);
    assert_eq!(s.len(), 121);
    assert_eq!(s.t, 2.0);
    let (a2, b) = gap_model().two_band(3, 1.0).unwrap();
    assert!(a2 > 0.0 && b.is_finite());
}
