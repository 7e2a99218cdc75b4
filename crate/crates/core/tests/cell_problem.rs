#![allow(clippy::needless_range_loop)]

use slipcell::cell_solver::{
    refine_and_extrapolate, slip_matrix_for_mask, solve_cell, solve_cell_dense, CellProblem,
    SolverOptions,
};
use slipcell::geometry::{rasterize, Pattern, PatternMask, UnitCellGrid};
use slipcell::riblet::{exact_slip, Orientation};
use slipcell::wall_operator::{TopCondition, WallOperator};
use slipcell::Error;

const TOPS: [TopCondition; 3] = [
    TopCondition::HalfSpace,
    TopCondition::TractionFree { height: 0.3 },
    TopCondition::NoSlip { height: 0.3 },
];

fn mask(case_id: &str, n: usize, top: TopCondition) -> PatternMask {
    rasterize(
        &case_id.parse::<Pattern>().unwrap(),
        &UnitCellGrid::new(n, top).unwrap(),
    )
    .unwrap()
}

#[test]
fn iterative_solve_matches_dense_system() {
    for top in TOPS {
        for case_id in ["disk:0.3", "rect:0.5,0.25", "riblet1:0.4"] {
            let m = mask(case_id, 16, top);
            for e in [[1.0, 0.0], [0.6, 0.8]] {
                let p = CellProblem::new(m.clone(), top, e);
                let it = solve_cell(&p).unwrap();
                let dense = solve_cell_dense(&p).unwrap();
                for k in 0..2 {
                    assert!(
                        (it.mean_slip[k] - dense[k]).abs() < 1e-8,
                        "{case_id} {top} {e:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn solution_satisfies_wall_conditions() {
    for top in TOPS {
        let m = mask("square:0.4", 32, top);
        let s = solve_cell(&CellProblem::new(m.clone(), top, [1.0, 0.0])).unwrap();
        let w = WallOperator::new(32, top).unwrap().apply(&s.shear).unwrap();
        let solid = m.cells();
        let mut worst_fluid_shear: f64 = 0.0;
        let mut worst_solid_slip: f64 = 0.0;
        let mut worst_trace: f64 = 0.0;
        for i in 0..32 {
            for j in 0..32 {
                let (t, u) = (s.shear.get(i, j), s.slip.get(i, j));
                if solid[i * 32 + j] {
                    worst_solid_slip = worst_solid_slip.max(u[0].abs()).max(u[1].abs());
                } else {
                    worst_fluid_shear = worst_fluid_shear.max((t[0] + 1.0).abs()).max(t[1].abs());
                }
                let wij = w.get(i, j);
                worst_trace = worst_trace.max((u[0] - wij[0] - s.mean_slip[0]).abs());
            }
        }
        assert!(worst_fluid_shear < 1e-12, "{top}: {worst_fluid_shear}");
        assert!(worst_solid_slip < 1e-7, "{top}: {worst_solid_slip}");
        assert!(worst_trace < 1e-10, "{top}: {worst_trace}");
        assert!(s.energy_check() < 1e-8);
    }
}

#[test]
fn linear_in_the_shear_direction() {
    let top = TopCondition::HalfSpace;
    let m = mask("rect:0.5,0.2", 32, top);
    let v = slip_matrix_for_mask(&m, "rect", top, SolverOptions::default())
        .unwrap()
        .v;
    let e = [0.28, -0.96];
    let s = solve_cell(&CellProblem::new(m, top, e)).unwrap();
    for k in 0..2 {
        let predicted = e[0] * v[0][k] + e[1] * v[1][k];
        assert!((s.mean_slip[k] - predicted).abs() < 1e-8);
    }
}

#[test]
fn adding_no_slip_cells_lowers_the_slip_length() {
    let top = TopCondition::HalfSpace;
    let n = 32;
    let mut cells = mask("disk:0.1", n, top).cells().to_vec();
    let mut previous = f64::INFINITY;
    for step in 0..4 {
        let m = PatternMask::from_cells(n, cells.clone()).unwrap();
        let v = slip_matrix_for_mask(&m, "grown", top, SolverOptions::default()).unwrap();
        assert!(v.v[0][0] < previous && v.v[1][1] > 0.0, "step {step}");
        previous = v.v[0][0];
        // Grow by one extra column of cells to the right of every solid cell.
        let grown: Vec<bool> = (0..n * n)
            .map(|k| cells[k] || cells[(k / n) * n + (k % n + n - 1) % n])
            .collect();
        cells = grown;
    }
}

#[test]
fn lower_lid_reduces_slip() {
    let v = |top| {
        slip_matrix_for_mask(
            &mask("disk:0.2", 32, top),
            "disk",
            top,
            SolverOptions::default(),
        )
        .unwrap()
        .v[0][0]
    };
    let tf = v(TopCondition::TractionFree { height: 0.3 });
    let half = v(TopCondition::HalfSpace);
    let ns = v(TopCondition::NoSlip { height: 0.3 });
    assert!(ns < half && half < tf, "{ns} {half} {tf}");
}

#[test]
fn degenerate_masks_are_rejected() {
    let top = TopCondition::HalfSpace;
    let empty = PatternMask::from_cells(16, vec![false; 256]).unwrap();
    let err = solve_cell(&CellProblem::new(empty, top, [1.0, 0.0])).unwrap_err();
    assert!(matches!(err, Error::PerfectSlip));
    let full = PatternMask::from_cells(16, vec![true; 256]).unwrap();
    let s = solve_cell(&CellProblem::new(full, top, [1.0, 0.0]));
    assert!(matches!(s, Err(Error::FullyNoSlip)) || s.is_ok_and(|s| s.slip_length().abs() < 1e-12));
}

#[test]
fn patches_overtake_riblets_at_small_fractions() {
    let grid = UnitCellGrid::new(128, TopCondition::HalfSpace).unwrap();
    for (phi, patch_wins) in [(0.03f64, true), (0.06, true), (0.2, false), (0.3, false)] {
        let disk = Pattern::disk((phi / std::f64::consts::PI).sqrt()).unwrap();
        let v = slipcell::cell_solver::fraction_matched_slip_matrix(
            &disk,
            &grid,
            SolverOptions::default(),
        )
        .unwrap();
        let par = exact_slip(phi, Orientation::Parallel).unwrap();
        assert_eq!(
            v.v[0][0] > par,
            patch_wins,
            "phi {phi}: disk {} riblet {par}",
            v.v[0][0]
        );
        assert!(v.v[0][0] > exact_slip(phi, Orientation::Perpendicular).unwrap());
    }
}

#[test]
fn refined_riblet_reaches_closed_form() {
    let study = refine_and_extrapolate(
        &Pattern::riblet_across2(0.5).unwrap(),
        &[64, 128, 256],
        TopCondition::HalfSpace,
        SolverOptions::default(),
    )
    .unwrap();
    assert!(study.limit.extrapolated);
    let exact = exact_slip(0.5, Orientation::Parallel).unwrap();
    assert!((study.limit.v[0][0] / exact - 1.0).abs() < 0.01);
    assert!((study.limit.v[1][1] / (exact / 2.0) - 1.0).abs() < 0.01);
}

#[test]
fn refined_square_converges_at_first_order() {
    let study = refine_and_extrapolate(
        &Pattern::square(0.3).unwrap(),
        &[64, 128, 256],
        TopCondition::HalfSpace,
        SolverOptions::default(),
    )
    .unwrap();
    let p = study.limit.order.expect("extrapolated");
    assert!(p > 0.5 && p < 2.0, "order {p}");
    let finest = study.levels.last().unwrap().v[0][0];
    assert!((study.limit.v[0][0] / finest - 1.0).abs() < 0.02);
}

#[test]
fn concentric_patterns_order_the_slip_lengths() {
    let top = TopCondition::HalfSpace;
    for family in ["disk", "square"] {
        let sizes: &[f64] = if family == "disk" {
            &[0.1, 0.2, 0.3, 0.4]
        } else {
            &[0.2, 0.4, 0.6, 0.8]
        };
        let values: Vec<[f64; 2]> = sizes
            .iter()
            .map(|s| {
                let v = slip_matrix_for_mask(
                    &mask(&format!("{family}:{s}"), 64, top),
                    family,
                    top,
                    SolverOptions::default(),
                )
                .unwrap()
                .v;
                [v[0][0], v[1][1]]
            })
            .collect();
        for w in values.windows(2) {
            for k in 0..2 {
                assert!(w[0][k] >= w[1][k] - 1e-6 * w[0][k], "{family}: {values:?}");
            }
        }
    }
}
