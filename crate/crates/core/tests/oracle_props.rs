//! Oracle-contract properties across the built-in block families: exactness
//! of reported costs, the approximation band of the wrapper, the product
//! decomposition identity, and positive scale-covariance.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rshare_core::oracles::{
    ApproxWrapper, BlockOracle, PathBlock, PathEdge, ProductBlock, ProductPart,
    ScaledSimplexBlock, VertexListBlock, ZeroBlock,
};

fn random_prices(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen::<f64>() * 10.0).collect()
}

fn exact_blocks(m: usize) -> Vec<(&'static str, Arc<dyn BlockOracle>)> {
    let vertices = VertexListBlock::new(vec![
        vec![1.0, 2.0, 0.5, 0.0, 3.0][..m].to_vec(),
        vec![0.0, 1.0, 4.0, 2.0, 0.5][..m].to_vec(),
        vec![2.5, 0.0, 1.0, 1.0, 1.0][..m].to_vec(),
    ])
    .unwrap();
    let simplex = ScaledSimplexBlock::new(3.0, m).unwrap();
    let zero = ZeroBlock::new(m);
    let product = ProductBlock::new(
        vec![
            ProductPart {
                block: Arc::new(ScaledSimplexBlock::new(2.0, 2).unwrap()),
                window: vec![0, 2],
            },
            ProductPart {
                block: Arc::new(VertexListBlock::new(vec![vec![1.0; m - 2], vec![0.5; m - 2]]).unwrap()),
                window: (0..m).filter(|r| *r != 0 && *r != 2).collect(),
            },
        ],
        m,
    )
    .unwrap();
    let path = PathBlock::new(
        vec![
            PathEdge { from: 0, to: 1, resource: Some(0) },
            PathEdge { from: 0, to: 1, resource: Some(1) },
            PathEdge { from: 1, to: 2, resource: Some(2) },
            PathEdge { from: 1, to: 2, resource: Some(3) },
            PathEdge { from: 0, to: 2, resource: Some(4) },
        ],
        0,
        2,
        1.5,
        m,
    )
    .unwrap();
    vec![
        ("vertices", Arc::new(vertices)),
        ("simplex", Arc::new(simplex)),
        ("zero", Arc::new(zero)),
        ("product", Arc::new(product)),
        ("paths", Arc::new(path)),
    ]
}

#[test]
fn reported_cost_matches_exact_opt_on_random_prices() {
    let m = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, block) in exact_blocks(m) {
        for _ in 0..1000 {
            let y = random_prices(&mut rng, m);
            let (alloc, cost) = block.evaluate(&y);
            let opt = block.exact_opt(&y).unwrap();
            let recomputed = alloc.dot(&y);
            let tol = 1e-9 * opt.abs().max(1.0);
            assert!(
                (cost - opt).abs() <= tol,
                "{name}: cost {cost} vs exact {opt}"
            );
            assert!(
                (recomputed - cost).abs() <= tol,
                "{name}: dot {recomputed} vs reported {cost}"
            );
            assert!(alloc.entries().iter().all(|&v| v >= 0.0 && v.is_finite()));
        }
    }
}

#[test]
fn wrapper_cost_stays_in_sigma_band() {
    let m = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let inner: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(2.0, m).unwrap());
    for adversarial in [false, true] {
        let wrapper = ApproxWrapper::new(inner.clone(), 1.7, adversarial, true).unwrap();
        for _ in 0..1000 {
            let y = random_prices(&mut rng, m);
            let (_, cost) = wrapper.evaluate(&y);
            let opt = inner.exact_opt(&y).unwrap();
            assert!(
                cost >= opt - 1e-12 && cost <= 1.7 * opt + 1e-9,
                "adversarial={adversarial}: cost {cost} outside [opt, 1.7 opt] = [{opt}, {}]",
                1.7 * opt
            );
        }
    }
}

#[test]
fn product_exact_opt_decomposes_into_window_optima() {
    let m = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let left: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(2.0, 2).unwrap());
    let right: Arc<dyn BlockOracle> =
        Arc::new(VertexListBlock::new(vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]).unwrap());
    let product = ProductBlock::new(
        vec![
            ProductPart { block: left.clone(), window: vec![1, 3] },
            ProductPart { block: right.clone(), window: vec![0, 2, 4] },
        ],
        m,
    )
    .unwrap();
    for _ in 0..500 {
        let y = random_prices(&mut rng, m);
        let whole = product.exact_opt(&y).unwrap();
        let left_opt = left.exact_opt(&[y[1], y[3]]).unwrap();
        let right_opt = right.exact_opt(&[y[0], y[2], y[4]]).unwrap();
        assert!((whole - (left_opt + right_opt)).abs() < 1e-9 * whole.abs().max(1.0));
    }
}

#[test]
fn evaluate_is_positively_scale_covariant() {
    let m = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (name, block) in exact_blocks(m) {
        for _ in 0..300 {
            let y = random_prices(&mut rng, m);
            let c = 10.0_f64.powf(rng.gen_range(-6.0..6.0));
            let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
            let (alloc, _) = block.evaluate(&scaled);
            let opt = block.exact_opt(&y).unwrap();
            let cost_at_y = alloc.dot(&y);
            // sigma = 1 blocks: the answer for c*y must be optimal for y too
            assert!(
                cost_at_y <= opt + 1e-9 * opt.abs().max(1.0),
                "{name}: scale {c} answer costs {cost_at_y} at y, opt {opt}"
            );
        }
    }
}

#[test]
fn adversarial_wrapper_is_scale_covariant_too() {
    let m = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let inner: Arc<dyn BlockOracle> = Arc::new(ScaledSimplexBlock::new(1.0, m).unwrap());
    let sigma = 2.0;
    let wrapper = ApproxWrapper::new(inner.clone(), sigma, true, false).unwrap();
    for _ in 0..500 {
        let y = random_prices(&mut rng, m);
        let c = 10.0_f64.powf(rng.gen_range(-4.0..4.0));
        let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
        let (alloc, _) = wrapper.evaluate(&scaled);
        let opt = inner.exact_opt(&y).unwrap();
        assert!(alloc.dot(&y) <= sigma * opt + 1e-9);
    }
}
