use momentset::expr::{BinOp, CmpOp, Func};
use momentset::measure::{dirac_representation, Atom, Location};
use momentset::{
    atom_value, atomic_partition, certify_extreme, collect_breakpoints, enumerate_extreme, integrate, is_atom,
    moment_vector, parse_expr, solve_lp, support, truncate, verify_dual, DualCertificate, Expr, Measure,
    MomentTable, MomentTarget, Sense, Status, SubsetMask,
};
use proptest::prelude::*;

fn weights(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..10.0], 1..=max_n)
}

fn eighths() -> impl Strategy<Value = f64> {
    (-8i32..=8).prop_map(|v| v as f64 / 8.0)
}

/// `(F, g, λ0)` with F in multiples of 1/8 and λ0 in multiples of 1/4.
fn instance(max_n: usize, max_k: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (1..=max_n, 1..=max_k).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(prop::collection::vec(eighths(), n), k),
            prop::collection::vec(eighths(), n),
            prop::collection::vec((0u32..=4).prop_map(|v| v as f64 / 4.0), n),
        )
    })
}

fn dot(row: &[f64], x: &[f64]) -> f64 {
    row.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn target_of(f: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    f.iter().map(|r| dot(r, lambda)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn truncation_is_idempotent(w in weights(10), bits in prop::collection::vec(any::<bool>(), 10)) {
        let mu = Measure::new(w.clone()).unwrap();
        let a = SubsetMask::new(bits[..w.len()].to_vec());
        let once = truncate(&mu, &a).unwrap();
        prop_assert_eq!(truncate(&once, &a).unwrap(), once);
    }

    #[test]
    fn moment_vector_is_additive(
        w in weights(10),
        labels in prop::collection::vec(0u8..3, 10),
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 10), 1..4),
    ) {
        let n = w.len();
        let mu = Measure::new(w).unwrap();
        let f: Vec<Vec<f64>> = rows.iter().map(|r| r[..n].to_vec()).collect();
        let table = MomentTable::constraints_only(f).unwrap();
        let a = SubsetMask::new(labels[..n].iter().map(|&l| l == 0).collect());
        let b = SubsetMask::new(labels[..n].iter().map(|&l| l == 1).collect());
        prop_assert!(a.is_disjoint(&b));
        let va = moment_vector(&mu, &table, &a).unwrap();
        let vb = moment_vector(&mu, &table, &b).unwrap();
        let vab = moment_vector(&mu, &table, &a.union(&b)).unwrap();
        for j in 0..table.k() {
            let scale = va[j].abs().max(vb[j].abs()).max(1.0);
            prop_assert!((vab[j] - (va[j] + vb[j])).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn integration_is_homogeneous(w in weights(10), v in prop::collection::vec(-5.0f64..5.0, 10), t in 0.0f64..8.0) {
        let n = w.len();
        let mu = Measure::new(w).unwrap();
        let lhs = integrate(&mu.scaled(t).unwrap(), &v[..n]).unwrap();
        let rhs = t * integrate(&mu, &v[..n]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn atomic_partition_cells_are_maximal_atoms(w in weights(10)) {
        let mu = Measure::new(w).unwrap();
        let n = mu.len();
        let Ok(p) = atomic_partition(&mu) else {
            prop_assert!(mu.is_zero());
            return Ok(());
        };
        prop_assert_eq!(p.len(), support(&mu).count());
        let mut covered = vec![0usize; n];
        for cell in p.cells() {
            prop_assert!(is_atom(&mu, cell).unwrap());
            prop_assert!(mu.measure_of(cell).unwrap() > 0.0);
            for i in cell.indices() {
                covered[i] += 1;
            }
            // No split of the cell leaves positive mass on both sides.
            let ids: Vec<usize> = cell.indices().collect();
            for split in 1u32..(1 << ids.len()) - 1 {
                let left: Vec<usize> = ids.iter().enumerate().filter(|(b, _)| split >> b & 1 == 1).map(|(_, &i)| i).collect();
                let l = SubsetMask::from_indices(n, &left).unwrap();
                let r = SubsetMask::from_indices(n, &ids.iter().copied().filter(|i| !left.contains(i)).collect::<Vec<_>>()).unwrap();
                let both = mu.measure_of(&l).unwrap() > 0.0 && mu.measure_of(&r).unwrap() > 0.0;
                prop_assert!(!both);
            }
        }
        prop_assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn dirac_representation_is_bitwise_exact(
        w in weights(10),
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 10), 1..4),
        g in prop::collection::vec(-5.0f64..5.0, 10),
    ) {
        let n = w.len();
        let mu = Measure::new(w).unwrap();
        let f: Vec<Vec<f64>> = rows.iter().map(|r| r[..n].to_vec()).collect();
        let table = MomentTable::new(f, g[..n].to_vec()).unwrap();
        let d = dirac_representation(&mu).unwrap();
        let all = SubsetMask::all(n);
        prop_assert_eq!(d.moment_vector(&table).unwrap(), moment_vector(&mu, &table, &all).unwrap());
        prop_assert_eq!(d.integrate_points(table.g()).unwrap(), integrate(&mu, table.g()).unwrap());
        if let Ok(p) = atomic_partition(&mu) {
            for (cell, atom) in p.cells().iter().zip(d.atoms()) {
                let Location::Point(s) = atom.location else { unreachable!() };
                prop_assert_eq!(atom_value(&mu, cell, table.g()).unwrap(), table.g()[s]);
            }
        }
    }

    #[test]
    fn witnesses_are_valid((f, _, lambda) in instance(8, 3)) {
        let c = target_of(&f, &lambda);
        let table = MomentTable::constraints_only(f).unwrap();
        let mu = Measure::new(lambda).unwrap();
        let cert = certify_extreme(&mu, &table, &c, 1e-9).unwrap();
        prop_assert_eq!(cert.is_extreme, cert.witness.is_none());
        if let Some(w) = &cert.witness {
            let check = w.check(&mu, &table, &cert.partition, &c).unwrap();
            prop_assert!(check.holds(1e-10), "{:?}", check);
        }
    }

    #[test]
    fn enumerated_points_have_at_most_k_atoms((f, _, lambda) in instance(8, 3)) {
        let k = f.len();
        let c = target_of(&f, &lambda);
        let table = MomentTable::constraints_only(f).unwrap();
        for m in enumerate_extreme(&table, &c, 1e-9).unwrap() {
            prop_assert!(m.len() <= k);
            prop_assert!(m.in_atomic_class(k));
        }
    }

    #[test]
    fn lp_optimum_matches_enumeration((f, g, lambda) in instance(8, 3)) {
        let c = target_of(&f, &lambda);
        let table = MomentTable::new(f, g).unwrap();
        let target = MomentTarget::exact(&c).unwrap();
        let vertices = enumerate_extreme(&table, &c, 1e-9).unwrap();
        for sense in [Sense::Max, Sense::Min] {
            let r = solve_lp(&table, &target, sense).unwrap();
            if r.status != Status::Optimal {
                // The polytope is nonempty, so only unboundedness can occur.
                prop_assert_eq!(r.status, Status::Unbounded);
                continue;
            }
            let values = vertices.iter().map(|m| m.integrate_points(table.g()).unwrap());
            let best = match sense {
                Sense::Max => values.fold(f64::NEG_INFINITY, f64::max),
                Sense::Min => values.fold(f64::INFINITY, f64::min),
            };
            prop_assert!((r.value - best).abs() <= 1e-8, "{:?}: lp {} vs vertices {}", sense, r.value, best);
        }
    }

    #[test]
    fn lp_solutions_are_feasible_and_dual_certified((f, g, lambda) in instance(8, 3), slack in 0u32..3) {
        let c = target_of(&f, &lambda);
        let table = MomentTable::new(f, g).unwrap();
        let s = slack as f64 / 4.0;
        let target = MomentTarget::new(c.iter().map(|&v| (v - s, v + s)).collect()).unwrap();
        let r = solve_lp(&table, &target, Sense::Max).unwrap();
        if r.status != Status::Optimal {
            return Ok(());
        }
        let m = r.measure.as_ref().unwrap();
        prop_assert!(m.len() <= table.k());
        prop_assert!(target.distance(&m.moment_vector(&table).unwrap()) <= 1e-8);
        let dual = r.dual.as_ref().unwrap();
        let cert = DualCertificate { y: dual.y.clone(), value: r.value, max_violation: 0.0, worst_point: None };
        let report = verify_dual(&table, table.g(), &target, &cert, Sense::Max, 1e-7).unwrap();
        prop_assert!(report.accepted, "{:?}", report);
        prop_assert!(r.value <= report.dual_bound + 1e-7);
    }

    #[test]
    fn min_is_negated_max_of_negation((f, g, lambda) in instance(8, 3)) {
        let c = target_of(&f, &lambda);
        let table = MomentTable::new(f, g.clone()).unwrap();
        let neg = table.with_objective(g.iter().map(|v| -v).collect()).unwrap();
        let target = MomentTarget::exact(&c).unwrap();
        let lo = solve_lp(&table, &target, Sense::Min).unwrap();
        let hi = solve_lp(&neg, &target, Sense::Max).unwrap();
        prop_assert_eq!(lo.status, hi.status);
        prop_assert_eq!(lo.value, -hi.value);
    }
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::X),
        (0u32..1000).prop_map(|v| Expr::Num(v as f64 / 8.0)),
        prop_oneof![Just(1e-7), Just(2.5e12), Just(0.1), Just(1e300)].prop_map(Expr::Num),
    ]
}

fn any_expr() -> impl Strategy<Value = Expr> {
    let bin = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
    let cmp = prop_oneof![Just(CmpOp::Lt), Just(CmpOp::Le), Just(CmpOp::Gt), Just(CmpOp::Ge)];
    let unary = prop_oneof![Just(Func::Abs), Just(Func::Exp), Just(Func::Log), Just(Func::Sqrt)];
    let nary = prop_oneof![Just(Func::Min), Just(Func::Max)];
    leaf().prop_recursive(4, 32, 3, move |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (bin.clone(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (inner.clone(), -4i32..=4).prop_map(|(e, n)| Expr::Pow(Box::new(e), n)),
            (unary.clone(), inner.clone()).prop_map(|(f, e)| Expr::Call(f, vec![e])),
            (nary.clone(), prop::collection::vec(inner.clone(), 2..4)).prop_map(|(f, args)| Expr::Call(f, args)),
            (cmp.clone(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::Cmp(op, Box::new(a), Box::new(b))),
        ]
    })
}

fn polynomial() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![Just(Expr::X), (-40i32..=40).prop_map(|v| Expr::Num(v as f64 / 4.0))];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)], inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (inner, 0i32..=3).prop_map(|(e, n)| Expr::Pow(Box::new(e), n)),
        ]
    })
}

fn affine(a: f64, b: f64) -> Expr {
    Expr::Bin(BinOp::Add, Box::new(Expr::Bin(BinOp::Mul, Box::new(Expr::Num(a)), Box::new(Expr::X))), Box::new(Expr::Num(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_round_trips(e in any_expr()) {
        let text = e.to_string();
        prop_assert_eq!(parse_expr(&text).unwrap(), e, "{}", text);
    }

    #[test]
    fn polynomials_evaluate_everywhere(e in polynomial(), x in -2.0f64..2.0) {
        prop_assert!(e.eval(x).is_ok(), "{} at {}", e, x);
    }

    #[test]
    fn affine_indicator_jumps_are_breakpoints(
        terms in prop::collection::vec(((1i32..=8), (-16i32..=16), prop_oneof![Just(CmpOp::Lt), Just(CmpOp::Le), Just(CmpOp::Gt), Just(CmpOp::Ge)]), 1..4),
    ) {
        let indicators: Vec<Expr> = terms
            .iter()
            .map(|&(a, b, op)| Expr::Cmp(op, Box::new(affine(a as f64 / 2.0, b as f64 / 4.0)), Box::new(Expr::Num(0.0))))
            .collect();
        let e = indicators.into_iter().reduce(|a, b| Expr::Bin(BinOp::Add, Box::new(a), Box::new(b))).unwrap();
        let bp = collect_breakpoints(&e);
        prop_assert!(!bp.warning);
        let h = 1.0 / 1024.0;
        let mut x = -10.0;
        while x < 10.0 {
            let (u, v) = (e.eval(x).unwrap(), e.eval(x + h).unwrap());
            if u != v {
                prop_assert!(bp.points.iter().any(|&p| p >= x && p <= x + h), "jump in [{}, {}] of {}", x, x + h, e);
            }
            x += h;
        }
    }
}

#[test]
fn dirac_representation_of_an_atom_list_is_sorted() {
    let mu = Measure::new(vec![0.0, 0.25, 0.0, 0.75]).unwrap();
    let d = dirac_representation(&mu).unwrap();
    assert_eq!(
        d.atoms(),
        &[
            Atom { location: Location::Point(1), weight: 0.25 },
            Atom { location: Location::Point(3), weight: 0.75 }
        ]
    );
}
