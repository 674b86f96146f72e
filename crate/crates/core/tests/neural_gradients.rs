use fairdispatch_core::Mlp;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Central-difference gradient of `weights · net(input)` with respect to every parameter.
fn numeric_gradient(net: &Mlp, input: &[f64], weights: &[f64], h: f64) -> Vec<f64> {
    let params = net.flat_params();
    let loss = |p: &[f64]| {
        let mut probe = net.clone();
        probe.set_flat_params(p).unwrap();
        let out = probe.forward(input).unwrap();
        out.output().iter().zip(weights).map(|(o, w)| o * w).sum::<f64>()
    };
    (0..params.len())
        .map(|k| {
            let mut p = params.clone();
            p[k] += h;
            let up = loss(&p);
            p[k] = params[k] - h;
            (up - loss(&p)) / (2.0 * h)
        })
        .collect()
}

fn net_strategy() -> impl Strategy<Value = (Vec<usize>, u64)> {
    (1usize..6, prop::collection::vec(1usize..7, 1..3), 1usize..3, any::<u64>()).prop_map(|(i, hidden, o, seed)| {
        let mut widths = vec![i];
        widths.extend(hidden);
        widths.push(o);
        (widths, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gradients_match_finite_differences(
        (widths, seed) in net_strategy(),
        shift in -0.5f64..0.5,
        scale in 0.2f64..2.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::new(&widths, &mut rng).unwrap();
        let params: Vec<f64> = net.flat_params().iter().enumerate().map(|(k, p)| p + shift * ((k % 5) as f64 - 2.0) / 4.0).collect();
        net.set_flat_params(&params).unwrap();
        let input: Vec<f64> = (0..widths[0]).map(|k| scale * (k as f64 - 1.5)).collect();
        let weights: Vec<f64> = (0..widths[widths.len() - 1]).map(|k| 1.0 - 0.7 * k as f64).collect();
        let cache = net.forward(&input).unwrap();
        let analytic = net.backward(&cache, &weights).unwrap().flat();
        let numeric = numeric_gradient(&net, &input, &weights, 1e-5);
        prop_assert_eq!(analytic.len(), numeric.len());
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            prop_assert!(rel <= 1e-4, "analytic {} numeric {}", a, n);
        }
    }

    #[test]
    fn forward_is_pure((widths, seed) in net_strategy(), x in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::new(&widths, &mut rng).unwrap();
        let input = vec![x; widths[0]];
        let a = net.forward(&input).unwrap();
        let b = net.forward(&input).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(a.output()), bits(b.output()));
    }
}
