//! Property-based invariants: voxelizer determinism, serialization
//! round-trips, and structural solver properties on randomized inputs.

use proptest::prelude::*;

use thermgrid::assembly::face_conductance;
use thermgrid::field::{ScalarField, Unit};
use thermgrid::geometry::presets::{build_fabric, Fabric, FabricOptions};
use thermgrid::geometry::{voxelize, Block, FaceDir, Scenario, SinkPatch, SourceSchedule};
use thermgrid::io::scenario::{load_scenario, save_scenario};
use thermgrid::materials::builtin_library;
use thermgrid::thermal::solve_steady;

const MATERIALS: [&str; 4] = ["W", "Ti", "Si_nw", "Si3N4"];

/// Non-overlapping boxes on a fixed lattice of 4x2x2 slots, each slot
/// 4x4x4 nm; any subset of slots with any material assignment.
fn arb_disjoint_boxes() -> impl Strategy<Value = Vec<Block>> {
    prop::collection::vec((0usize..16, 0usize..MATERIALS.len()), 1..10).prop_map(|slots| {
        let mut seen = std::collections::HashSet::new();
        slots
            .into_iter()
            .filter(|(slot, _)| seen.insert(*slot))
            .map(|(slot, mat)| {
                let (x, rest) = (slot % 4, slot / 4);
                let (y, z) = (rest % 2, rest / 2);
                Block::new(
                    [4 * x as i64, 4 * y as i64, 4 * z as i64],
                    [4, 4, 4],
                    MATERIALS[mat],
                    &format!("slot{slot}"),
                )
            })
            .collect()
    })
}

fn scenario_from(boxes: Vec<Block>, spacing_nm: u32) -> Scenario {
    Scenario {
        spacing_nm,
        boxes,
        // voxelize insists on a sink patch; an empty-face patch at the
        // domain floor doesn't disturb the rasterization under test
        sinks: vec![SinkPatch {
            min: [0, 0, 0],
            size: [16, 8, 8],
            face: Some(FaceDir::ZMin),
            temperature: 300.0,
        }],
        sources: vec![],
        schedule: SourceSchedule::default(),
        electrical: None,
        material_overrides: vec![],
    }
}

proptest! {
    /// Painting order of non-overlapping boxes never changes the result.
    #[test]
    fn paint_order_irrelevant_for_disjoint_boxes(
        boxes in arb_disjoint_boxes(),
        seed in any::<u64>(),
    ) {
        let db = builtin_library();
        let forward = voxelize(&scenario_from(boxes.clone(), 2), &db).unwrap();
        // deterministic shuffle from the seed
        let mut shuffled = boxes;
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let reordered = voxelize(&scenario_from(shuffled, 2), &db).unwrap();
        prop_assert_eq!(forward.dims, reordered.dims);
        for v in 0..forward.voxel_count() {
            prop_assert_eq!(
                forward.material_at(v).name.clone(),
                reordered.material_at(v).name.clone()
            );
            prop_assert_eq!(forward.label_at(v), reordered.label_at(v));
        }
    }

    /// Active voxel count equals the summed box volumes when boxes are
    /// disjoint and lattice-aligned (volume conservation).
    #[test]
    fn volume_conserved_for_disjoint_boxes(boxes in arb_disjoint_boxes()) {
        let db = builtin_library();
        let grid = voxelize(&scenario_from(boxes.clone(), 2), &db).unwrap();
        let expected_nm3: i64 = boxes.iter().map(|b| b.volume_nm3()).sum();
        let voxel_nm3 = 8; // 2 nm spacing
        prop_assert_eq!(grid.n_active() as i64 * voxel_nm3, expected_nm3);
    }

    /// Voxelizing twice yields identical grids (determinism).
    #[test]
    fn voxelize_deterministic(boxes in arb_disjoint_boxes()) {
        let db = builtin_library();
        let s = scenario_from(boxes, 1);
        let a = voxelize(&s, &db).unwrap();
        let b = voxelize(&s, &db).unwrap();
        prop_assert_eq!(a.dims, b.dims);
        for v in 0..a.voxel_count() {
            prop_assert_eq!(a.material_index(v), b.material_index(v));
            prop_assert_eq!(a.label_index(v), b.label_index(v));
        }
    }

    /// Harmonic face conductance: symmetric, zero for insulating partners,
    /// and never exceeding either material's own half-cell conductance.
    #[test]
    fn face_conductance_properties(
        ka in 1e-3f64..1e3,
        kb in 1e-3f64..1e3,
        h in 1e-10f64..1e-8,
    ) {
        let g = face_conductance(ka, kb, h);
        prop_assert!((g - face_conductance(kb, ka, h)).abs() <= 1e-18 + 1e-12 * g);
        prop_assert_eq!(face_conductance(0.0, kb, h), 0.0);
        prop_assert!(g <= 2.0 * ka.min(kb) * h * (1.0 + 1e-12));
        prop_assert!(g > 0.0);
    }

    /// Superposition on a randomized two-material bar: scaling the heat
    /// density scales the temperature rise.
    #[test]
    fn steady_rise_is_linear_in_power(
        c in 0.1f64..10.0,
        qv in 1e14f64..1e17,
        split in 1usize..9,
    ) {
        let s = Scenario {
            spacing_nm: 2,
            boxes: vec![
                Block::new([0, 0, 0], [4, 4, 2 * split as i64], "W", "lo"),
                Block::new([0, 0, 2 * split as i64], [4, 4, 20 - 2 * split as i64], "Si_nw", "hi"),
            ],
            sinks: vec![SinkPatch {
                min: [0, 0, 0],
                size: [4, 4, 20],
                face: Some(FaceDir::ZMin),
                temperature: 300.0,
            }],
            sources: vec![],
            schedule: SourceSchedule::default(),
            electrical: None,
            material_overrides: vec![],
        };
        let grid = voxelize(&s, &builtin_library()).unwrap();
        let q1 = ScalarField::constant(&grid, Unit::WattsPerCubicMeter, qv);
        let qc = ScalarField::constant(&grid, Unit::WattsPerCubicMeter, qv * c);
        let s1 = solve_steady(&grid, &s.sinks, &q1, 1e-12, None).unwrap();
        let sc = solve_steady(&grid, &s.sinks, &qc, 1e-12, None).unwrap();
        let mut max_rise = 0.0f64;
        for v in &s1.temperature.values {
            max_rise = max_rise.max((v - 300.0).abs() * c);
        }
        for (a, b) in s1.temperature.values.iter().zip(&sc.temperature.values) {
            prop_assert!(((b - 300.0) - c * (a - 300.0)).abs() <= 1e-8 * max_rise.max(1.0));
        }
    }
}

/// Scenario JSON round-trip for every preset and feature combination.
#[test]
fn preset_scenarios_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cases = Vec::new();
    for fabric in [Fabric::M3d, Fabric::Sn3d, Fabric::Skybridge] {
        for (dielectric, extraction) in [(false, false), (true, false), (true, true)] {
            cases.push((fabric, dielectric, extraction));
        }
    }
    for (i, (fabric, dielectric, extraction)) in cases.into_iter().enumerate() {
        let opts = FabricOptions {
            dielectric,
            extraction,
            ..FabricOptions::default()
        };
        let s = build_fabric(fabric, &opts).unwrap();
        let path = dir.path().join(format!("case{i}.json"));
        save_scenario(&path, &s).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(s, back, "{fabric:?} dielectric={dielectric} extraction={extraction}");
    }
}
