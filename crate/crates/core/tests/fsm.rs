use pcfbpm::geometry::{HoleShape, PcfGeometry};
use pcfbpm::vparam::{fsm_index, FsmOptions};

fn opts() -> FsmOptions {
    FsmOptions {
        cells_per_pitch: 32,
        ..FsmOptions::default()
    }
}

#[test]
fn fsm_index_falls_with_wavelength_and_hole_size() {
    let pitch = 2.0;
    let mut prev_ratio = f64::INFINITY;
    for ratio in [0.2, 0.4, 0.6] {
        let g = PcfGeometry::silica_air(pitch, ratio * pitch, HoleShape::Circular);
        let mut prev = f64::INFINITY;
        for lp in [0.25, 0.5, 1.0, 1.5] {
            let n = fsm_index(&g, lp * pitch, &opts()).unwrap();
            assert!(
                n < 1.45 && n > 1.0,
                "d/pitch {ratio}, lambda/pitch {lp}: {n}"
            );
            assert!(
                n < prev,
                "not decreasing in wavelength at d/pitch {ratio}: {n} after {prev}"
            );
            prev = n;
        }
        let n = fsm_index(&g, pitch, &opts()).unwrap();
        assert!(n < prev_ratio, "not decreasing in hole size at {ratio}");
        prev_ratio = n;
    }
}

#[test]
fn fsm_index_is_scale_invariant() {
    let a = fsm_index(
        &PcfGeometry::silica_air(2.0, 0.9, HoleShape::Circular),
        1.0,
        &opts(),
    )
    .unwrap();
    let b = fsm_index(
        &PcfGeometry::silica_air(4.0, 1.8, HoleShape::Circular),
        2.0,
        &opts(),
    )
    .unwrap();
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
}
