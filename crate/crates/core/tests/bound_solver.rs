use momentset::bound::{refine_atoms_with, solve_lp, DualCertificate, RefineOptions};
use momentset::measure::{Atom, Location};
use momentset::problem::SolveOptions;
use momentset::{
    enumerate_extreme, moment_bound, verify_dual, DiscreteMeasure, MomentProblem, MomentTable, MomentTarget, Sense,
    Status,
};

fn coords(m: &DiscreteMeasure) -> Vec<f64> {
    m.atoms().iter().map(|a| a.location.as_coord().unwrap()).collect()
}

fn weights(m: &DiscreteMeasure) -> Vec<f64> {
    m.atoms().iter().map(|a| a.weight).collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn markov(step: f64) -> MomentProblem {
    MomentProblem::interval(0.0, 10.0, Some(step), &[("1", 1.0, 1.0), ("x", 1.0, 1.0)], "(x >= 2)", Sense::Max)
        .unwrap()
}

fn cantelli(step: f64) -> MomentProblem {
    MomentProblem::interval(
        -10.0,
        10.0,
        Some(step),
        &[("1", 1.0, 1.0), ("x", 0.0, 0.0), ("x^2", 1.0, 1.0)],
        "(x >= 1)",
        Sense::Max,
    )
    .unwrap()
}

fn no_refine(p: MomentProblem) -> MomentProblem {
    p.with_options(SolveOptions { refine: false, ..SolveOptions::default() })
}

#[test]
fn markov_bound_on_fine_grid() {
    let r = moment_bound(&markov(0.01)).unwrap();
    assert_eq!(r.status, Status::Optimal);
    assert!((r.value - 0.5).abs() < 1e-12, "{}", r.value);
    let m = r.measure.as_ref().unwrap();
    assert!(close(&coords(m), &[0.0, 2.0], 1e-12));
    assert!(close(&weights(m), &[0.5, 0.5], 1e-12));
    let y = &r.dual.as_ref().unwrap().y;
    assert!(close(y, &[0.0, 0.5], 1e-9), "{y:?}");
    assert!(r.dual_report.as_ref().unwrap().accepted);
    assert!(r.extremality.as_ref().unwrap().is_extreme);
}

#[test]
fn markov_matches_coarse_enumeration() {
    // Oracle: best objective over all extreme points of the 11-point grid.
    let x: Vec<f64> = (0..=10).map(f64::from).collect();
    let g: Vec<f64> = x.iter().map(|&v| if v >= 2.0 { 1.0 } else { 0.0 }).collect();
    let t = MomentTable::new(vec![vec![1.0; 11], x], g.clone()).unwrap();
    let best = enumerate_extreme(&t, &[1.0, 1.0], 1e-12)
        .unwrap()
        .iter()
        .map(|m| m.integrate_points(&g).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((best - 0.5).abs() < 1e-14);
    let r = solve_lp(&t, &MomentTarget::exact(&[1.0, 1.0]).unwrap(), Sense::Max).unwrap();
    assert!((r.value - best).abs() < 1e-12);
}

#[test]
fn cantelli_bound() {
    let r = moment_bound(&cantelli(0.01)).unwrap();
    assert!((r.value - 0.5).abs() < 1e-9, "{}", r.value);
    let m = r.measure.as_ref().unwrap();
    assert!(m.len() <= 3);
    assert!(close(&coords(m), &[-1.0, 1.0], 1e-6), "{m:?}");
    assert!(r.dual_report.as_ref().unwrap().accepted, "{:?}", r.dual_report);
}

#[test]
fn cantelli_coarse_grid_with_refinement() {
    for step in [0.3, 0.37] {
        let coarse = moment_bound(&no_refine(cantelli(step))).unwrap();
        let refined = moment_bound(&cantelli(step)).unwrap();
        assert!(refined.refined);
        assert!(refined.value >= coarse.value - 1e-12);
        assert!((refined.value - 0.5).abs() < 1e-4, "step {step}: {} (coarse {})", refined.value, coarse.value);
        assert!(refined.measure.as_ref().unwrap().len() <= 3);
    }
}

#[test]
fn second_moment_tail() {
    let p = MomentProblem::interval(
        -10.0,
        10.0,
        None,
        &[("1", 1.0, 1.0), ("x^2", 1.0, 1.0)],
        "(x >= 2) + (x <= -2)",
        Sense::Max,
    )
    .unwrap();
    for step in [0.01, 0.005] {
        let r = moment_bound(&p.clone().with_grid_step(step).unwrap()).unwrap();
        assert!((r.value - 0.25).abs() < 1e-9, "{}", r.value);
        assert!(r.measure.unwrap().len() <= 2);
    }
}

#[test]
fn objective_equal_to_first_constraint() {
    let p = MomentProblem::interval(0.0, 3.0, Some(0.1), &[("1", 2.5, 2.5), ("x", 3.0, 3.0)], "1", Sense::Max).unwrap();
    let r = moment_bound(&p).unwrap();
    assert!((r.value - 2.5).abs() < 1e-12);
}

#[test]
fn convex_objective_two_point_extremal() {
    let p = MomentProblem::interval(0.0, 1.0, Some(0.01), &[("1", 1.0, 1.0), ("x", 0.7, 0.7)], "x^2", Sense::Max).unwrap();
    let r = moment_bound(&p).unwrap();
    assert!((r.value - 0.7).abs() < 1e-12);
    let m = r.measure.unwrap();
    assert!(close(&coords(&m), &[0.0, 1.0], 1e-12));
    assert!(close(&weights(&m), &[0.3, 0.7], 1e-12));
    // Fine-grid LP reaches the same value.
    let fine = moment_bound(&no_refine(p.with_grid_step(0.001).unwrap())).unwrap();
    assert!((fine.value - 0.7).abs() < 1e-12);
}

#[test]
fn refinement_fixed_point() {
    let p = markov(0.01);
    let seed = DiscreteMeasure::new(vec![
        Atom { location: Location::Coord(0.0), weight: 0.5 },
        Atom { location: Location::Coord(2.0), weight: 0.5 },
    ])
    .unwrap();
    let r = refine_atoms_with(&p, &seed, &RefineOptions::default()).unwrap();
    assert!((r.value - 0.5).abs() < 1e-15);
    assert!(close(&coords(&r.measure), &[0.0, 2.0], 0.0));
}

#[test]
fn refinement_rejects_infeasible_seed() {
    let p = markov(0.01);
    let seed = DiscreteMeasure::new(vec![Atom { location: Location::Coord(3.0), weight: 1.0 }]).unwrap();
    assert!(matches!(
        momentset::refine_atoms(&p, &seed),
        Err(momentset::Error::SeedInfeasible { .. })
    ));
}

#[test]
fn infeasible_mean() {
    let p = MomentProblem::interval(0.0, 1.0, None, &[("1", 1.0, 1.0), ("x", 2.0, 2.0)], "x", Sense::Max).unwrap();
    let r = moment_bound(&p).unwrap();
    assert_eq!(r.status, Status::Infeasible);
    assert!(r.phase1_residual.unwrap()[1] > 0.0);
}

#[test]
fn grid_refinement_never_loses_value() {
    let problems = [markov(0.4), cantelli(0.4)];
    for p in problems {
        let mut prev = f64::NEG_INFINITY;
        let mut step = 0.4;
        for _ in 0..4 {
            let r = moment_bound(&no_refine(p.clone().with_grid_step(step).unwrap())).unwrap();
            assert!(r.value >= prev - 1e-12, "{} < {prev}", r.value);
            prev = r.value;
            step /= 2.0;
        }
    }
}

#[test]
fn min_sense_and_box_targets() {
    // Lowest possible P(X >= 2) with mean in [1, 3] on [0, 10] is 0.
    let p = MomentProblem::interval(0.0, 10.0, Some(0.05), &[("1", 1.0, 1.0), ("x", 1.0, 3.0)], "(x >= 2)", Sense::Min)
        .unwrap();
    let r = moment_bound(&p).unwrap();
    assert!(r.value.abs() < 1e-12);
    // Highest is 1 (all mass at 2 or beyond keeps the mean within the box).
    let r = moment_bound(&p.with_sense(Sense::Max)).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12);
    let rep = r.dual_report.unwrap();
    assert!(rep.accepted, "{rep:?}");
}

#[test]
fn dual_certificate_rejects_weaker_majorant() {
    let p = markov(0.01);
    let d = p.discretize().unwrap();
    let target = p.target().unwrap();
    let cert = DualCertificate { y: vec![0.0, 0.4], value: 0.5, max_violation: 0.0, worst_point: None };
    let rep = verify_dual(&d.table, d.table.g(), &target, &cert, Sense::Max, 1e-9).unwrap();
    assert!(!rep.accepted);
    assert!((rep.max_violation - 0.2).abs() < 1e-12);
}
