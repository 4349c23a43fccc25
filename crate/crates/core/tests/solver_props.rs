//! Solver and model invariants: the decreasing preorder's laws, price-state
//! bounds, call accounting on random instances, and per-customer coefficient
//! sums.

use proptest::prelude::*;

use rshare_core::analysis::call_accounting_holds;
use rshare_core::core_solver::{run_core, CoreParams};
use rshare_core::gen::gen_random_vertex;
use rshare_core::model::{
    dec_compare, sorted_decreasing, AllocationVector, NumericPolicy, PriceState,
};

fn same_len_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..7).prop_flat_map(|len| {
        (
            prop::collection::vec(0.0..10.0f64, len),
            prop::collection::vec(0.0..10.0f64, len),
        )
    })
}

proptest! {
    #[test]
    fn dec_compare_is_reflexive(v in prop::collection::vec(0.0..10.0f64, 1..7)) {
        let x = AllocationVector::new(v);
        prop_assert_eq!(dec_compare(&x, &x).unwrap(), std::cmp::Ordering::Equal);
    }

    #[test]
    fn dec_compare_is_antisymmetric_on_sorted_vectors((a, b) in same_len_pair()) {
        let x = AllocationVector::new(a);
        let y = AllocationVector::new(b);
        // total: any two same-length vectors are comparable, and the two
        // directions agree
        let xy = dec_compare(&x, &y).unwrap();
        let yx = dec_compare(&y, &x).unwrap();
        prop_assert_eq!(xy, yx.reverse());
    }

    #[test]
    fn dec_compare_is_transitive(
        (a, b) in same_len_pair(),
        c_seed in prop::collection::vec(0.0..10.0f64, 1..7)
    ) {
        let len = a.len();
        let mut c = c_seed;
        c.resize(len, 0.0);
        let x = AllocationVector::new(a);
        let y = AllocationVector::new(b);
        let z = AllocationVector::new(c);
        use std::cmp::Ordering::Greater;
        if dec_compare(&x, &y).unwrap() != Greater && dec_compare(&y, &z).unwrap() != Greater {
            prop_assert_ne!(dec_compare(&x, &z).unwrap(), Greater);
        }
    }

    #[test]
    fn sorted_readback_compares_equal(v in prop::collection::vec(0.0..10.0f64, 1..7)) {
        let x = AllocationVector::new(v);
        let s = AllocationVector::new(sorted_decreasing(&x));
        prop_assert_eq!(dec_compare(&x, &s).unwrap(), std::cmp::Ordering::Equal);
    }

    #[test]
    fn l1_log_brackets_max_exponent(v in prop::collection::vec(-50.0..50.0f64, 1..9)) {
        let len = v.len();
        let p = PriceState::from_exponents(v);
        let max = p.max_exponent();
        prop_assert!(p.l1_log() >= max - 1e-12);
        prop_assert!(p.l1_log() <= max + (len as f64).ln() + 1e-12);
    }
}

#[test]
fn call_accounting_on_random_instances() {
    // ten quick fuzz instances here; the acceptance suite runs fifty
    for seed in 0..10u64 {
        let n = 1 + (seed as usize % 4);
        let m = 2 + (seed as usize % 5);
        let k = 1 + (seed as usize % 3);
        let g = gen_random_vertex(n, m, k, seed, 2.0).unwrap();
        let params = CoreParams::new(0.1, 30).unwrap();
        let result = run_core(&g.instance, &params, None).unwrap();
        assert!(
            call_accounting_holds(&result.stats, n, m, params.epsilon),
            "accounting failed on seed {seed}"
        );
        result.primal.validate(&NumericPolicy::default()).unwrap();
        result.dual.validate(&NumericPolicy::default()).unwrap();
    }
}

#[test]
fn per_customer_coefficients_sum_to_one_per_run() {
    let g = gen_random_vertex(3, 4, 3, 42, 1.5).unwrap();
    let params = CoreParams::new(0.2, 25).unwrap();
    let result = run_core(&g.instance, &params, None).unwrap();
    for terms in result.primal.per_customer() {
        let sum: f64 = terms.iter().map(|t| t.coefficient).sum();
        assert!((sum - 1.0).abs() < 1e-9, "coefficient sum {sum}");
    }
}
