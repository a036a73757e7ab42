mod common;

use biascal::models::Precision;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backprop_matches_central_differences(seed in any::<u64>(), batch in 1usize..20) {
        let (m, b) = common::random_network_and_batch(seed, batch);
        for (precision, tol) in [(Precision::F32, 1e-2), (Precision::F64, 1e-6)] {
            let bp = common::backprop(&m, &b, precision);
            let fd = common::finite_difference(&m, &b, precision);
            let err = common::max_relative_error(&bp, &fd);
            prop_assert!(err < tol, "{:?}: {}", precision, err);
        }
    }
}

#[test]
fn reported_loss_is_the_batch_mse() {
    let (m, b) = common::random_network_and_batch(3, 9);
    let g = biascal::models::gradient(&m, &b, Precision::F64).unwrap();
    let p = m.params.cast::<f64>();
    let want = b
        .rows()
        .zip(b.targets())
        .map(|(x, y)| {
            let x64: Vec<f64> = x.iter().map(|&v| f64::from(v)).collect();
            (y - p.predict(&x64, m.bias)).powi(2)
        })
        .sum::<f64>()
        / 9.0;
    assert!((g.loss - want).abs() <= 1e-12 * want);
}
