use proptest::prelude::*;

use pcfbpm::geometry::{build_hex_lattice, rasterize_index, Grid2D, HoleShape, PcfGeometry};

fn geometry(pitch: f64, ratio: f64, rings: usize, square: bool, defect: bool) -> PcfGeometry {
    let shape = if square {
        HoleShape::Square
    } else {
        HoleShape::Circular
    };
    PcfGeometry {
        rings,
        core_defect: defect,
        ..PcfGeometry::silica_air(pitch, ratio * pitch, shape)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The set of hole centres is closed under 60 degree rotation.
    #[test]
    fn lattice_has_six_fold_symmetry(pitch in 0.5f64..5.0, ratio in 0.05f64..0.8, rings in 1usize..5, defect in any::<bool>()) {
        let g = geometry(pitch, ratio, rings, false, defect);
        let holes = build_hex_lattice(&g).unwrap();
        prop_assert_eq!(holes.len(), 3 * rings * (rings + 1) + usize::from(!defect));
        let (c, s) = (60f64.to_radians().cos(), 60f64.to_radians().sin());
        for h in &holes {
            let (x, y) = (c * h.x - s * h.y, s * h.x + c * h.y);
            let hit = holes.iter().any(|o| (o.x - x).hypot(o.y - y) < 1e-9 * pitch);
            prop_assert!(hit, "rotated centre ({x}, {y}) missing");
        }
    }

    /// On a centred grid the index map is mirror symmetric in both axes,
    /// the grid-compatible part of the lattice symmetry, and stays within
    /// the constituent indices.
    #[test]
    fn raster_mirror_symmetry(ratio in 0.1f64..0.8, square in any::<bool>(), n in 40usize..70) {
        let g = geometry(1.0, ratio, 2, square, true);
        let holes = build_hex_lattice(&g).unwrap();
        let dx = 6.0 / n as f64;
        let grid = Grid2D::centered(n, n, dx, dx).unwrap();
        let p = rasterize_index(&holes, &g, &grid, 6).unwrap();
        for j in 0..n {
            for i in 0..n {
                let v = p.at(i, j);
                prop_assert!(v >= 1.0 - 1e-15 && v <= 1.45 + 1e-15);
                prop_assert!((v - p.at(n - 1 - i, j)).abs() < 1e-12);
                prop_assert!((v - p.at(i, n - 1 - j)).abs() < 1e-12);
            }
        }
    }
}
