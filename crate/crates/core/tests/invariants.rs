use proptest::prelude::*;

use hho_core::chain::{factor_cof_we, factor_we_fib, find_homotopy, homotopy_pullback_lift, pullback, ChainMap};
use hho_core::linalg::{smith_normal_form, solve, Ring};
use hho_core::random::{Sampler, ShapeKind};
use hho_core::rectifier::{rectify, RectifyOptions};

const RINGS: [Ring; 3] = [Ring::PrimeField(2), Ring::PrimeField(3), Ring::Integers];

fn ring() -> impl Strategy<Value = Ring> {
    (0..RINGS.len()).prop_map(|i| RINGS[i])
}

/// A random chain map between two sampled complexes.
fn sampled_map(seed: u64, ring: Ring) -> ChainMap {
    let j = ShapeKind::Toda(2).lattice();
    let y = Sampler::new(seed, ring).strict_diagram(&j, false);
    y.maps.values().next().unwrap().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smith_form_is_an_equivalence(seed in any::<u64>(), ring in ring(), rows in 1usize..5, cols in 1usize..5) {
        let m = Sampler::new(seed, ring).matrix(rows, cols);
        let (u, d, v) = smith_normal_form(&m);
        prop_assert_eq!(u.mul(&m).mul(&v), d.clone());
        for i in 0..rows {
            for j in 0..cols {
                prop_assert!(i == j || d.get(i, j) == &ring.from_i64(0));
            }
        }
    }

    #[test]
    fn solutions_solve(seed in any::<u64>(), ring in ring(), rows in 1usize..5, cols in 1usize..5) {
        let mut s = Sampler::new(seed, ring);
        let m = s.matrix(rows, cols);
        let b: Vec<_> = s.matrix(rows, 1).col_vec(0);
        if let Some(x) = solve(&m, &b).unwrap() {
            prop_assert_eq!(m.mul_vec(&x), b);
        }
    }

    #[test]
    fn sampled_complexes_square_to_zero(seed in any::<u64>(), ring in ring()) {
        let c = Sampler::new(seed, ring).complex();
        prop_assert!(c.validate().is_ok());
        prop_assert!(c.total_rank() <= 6);
    }

    #[test]
    fn factorizations_compose_back(seed in any::<u64>(), ring in ring()) {
        let f = sampled_map(seed, ring);
        let wf = factor_we_fib(&f);
        prop_assert_eq!(wf.second.compose(&wf.first), f.clone());
        prop_assert!(wf.first.is_quasi_iso());
        prop_assert!(wf.second.is_degreewise_surjective());
        let cw = factor_cof_we(&f);
        prop_assert_eq!(cw.second.compose(&cw.first), f.clone());
        prop_assert!(cw.second.is_quasi_iso());
    }

    #[test]
    fn boundaries_are_found_as_homotopies(seed in any::<u64>(), ring in ring()) {
        let f = sampled_map(seed, ring);
        let h = Sampler::new(seed ^ 1, ring).homotopy(&f.src, &f.dst);
        let g = f.add(&h.boundary());
        let found = find_homotopy(&f, &g);
        prop_assert!(found.is_some_and(|k| k.witnesses(&f, &g)));
    }

    #[test]
    fn pullback_lift_commutes_strictly(seed in any::<u64>(), ring in ring()) {
        let f = sampled_map(seed, ring);
        let wf = factor_we_fib(&f);
        let square = pullback(&f, &wf.second);
        let p = ChainMap::identity(&f.src);
        let h = find_homotopy(&wf.second.compose(&wf.first), &f).unwrap();
        let (g, s) = homotopy_pullback_lift(&square, &p, &wf.first, &h).unwrap();
        prop_assert_eq!(square.px.compose(&g), p);
        prop_assert!(s.witnesses(&square.py.compose(&g), &wf.first));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn perturbed_strict_diagrams_rectify(seed in any::<u64>(), ring in ring(), diamond in any::<bool>()) {
        let shape = if diamond { ShapeKind::DoubleDiamond } else { ShapeKind::Delta(3) };
        let j = shape.lattice();
        let mut s = Sampler::new(seed, ring);
        let y = s.strict_diagram(&j, false);
        let h = s.perturb(&y).unwrap();
        let out = rectify(&h, &RectifyOptions { check_oracle: true, ..Default::default() }).unwrap();
        prop_assert!(out.is_rectified());
    }

    #[test]
    fn oracle_agrees_under_any_choice_seed(seed in any::<u64>(), ring in ring(), choice in any::<u64>()) {
        let j = ShapeKind::Delta(3).lattice();
        let h = Sampler::new(seed, ring).ho_diagram(&j, false).unwrap();
        let opts = RectifyOptions { check_oracle: true, choice_seed: Some(choice), ..Default::default() };
        prop_assert!(rectify(&h, &opts).is_ok());
    }
}
