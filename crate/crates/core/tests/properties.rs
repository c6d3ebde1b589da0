#![allow(clippy::needless_range_loop, clippy::type_complexity, clippy::too_many_arguments)]

use proptest::prelude::*;

use uq_heads::data::{dataset_from_bytes, dataset_to_bytes, split_dataset, EmbeddingDataset};
use uq_heads::eval::{accuracy, f1_binary, variance_decile_report};
use uq_heads::heads::sngp::{mean_field_adjust, sngp_precision_update};
use uq_heads::heads::{
    hard_label, predict_with_uncertainty, HeadConfig, HeadKind, HeadParams, UncertainPrediction,
};
use uq_heads::numerics::{inv_softplus, softplus, stable_sigmoid, Matrix, RngStream};
use uq_heads::training::{PlateauScheduler, TrainConfig};

const LAMBDA: f64 = std::f64::consts::PI / 8.0;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sigmoid_is_bounded_and_symmetric(x in -1e4f64..1e4) {
        let s = stable_sigmoid(x);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((s + stable_sigmoid(-x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softplus_round_trip(y in 1e-6f64..50.0) {
        let x = inv_softplus(y).unwrap();
        prop_assert!((softplus(x) - y).abs() <= 1e-12 * y.max(1.0));
    }

    #[test]
    fn softplus_is_positive(x in -700f64..700.0) {
        prop_assert!(softplus(x) > 0.0);
    }

    #[test]
    fn mean_field_shrinks_toward_half(z in -20f64..20.0, v1 in 0f64..50.0, dv in 1e-3f64..50.0) {
        prop_assume!(z.abs() > 1e-3);
        let (a, b) = (mean_field_adjust(z, v1, LAMBDA), mean_field_adjust(z, v1 + dv, LAMBDA));
        prop_assert!((b - 0.5).abs() <= (a - 0.5).abs());
        prop_assert_eq!(hard_label(b), hard_label(stable_sigmoid(z)));
    }

    #[test]
    fn split_partitions_rows(n in 5usize..3000, seed in any::<u64>()) {
        let s = split_dataset(n, seed).unwrap();
        s.validate(n).unwrap();
        let test = n / 5;
        prop_assert_eq!(s.test.len(), test);
        prop_assert_eq!(s.val.len(), (n - test) / 5);
        prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), n);
    }

    #[test]
    fn uqeb_round_trip(n in 0usize..20, dim in 1usize..8, seed in any::<u64>(), labeled in any::<bool>()) {
        let mut rng = RngStream::new(seed);
        let mut x = Matrix::zeros(n, dim);
        rng.fill_normal(x.as_mut_slice());
        let labels = labeled.then(|| (0..n).map(|_| (rng.next_u64() & 1) as u8).collect());
        let ds = EmbeddingDataset::new(x, labels, "prop").unwrap();
        let bytes = dataset_to_bytes(&ds);
        let back = dataset_from_bytes(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.n(), n);
        prop_assert_eq!(back.dim(), dim);
        prop_assert_eq!(back.labels(), ds.labels());
        for (a, b) in ds.embeddings().as_slice().iter().zip(back.embeddings().as_slice()) {
            prop_assert_eq!((*a as f32) as f64, *b);
        }
        prop_assert_eq!(dataset_to_bytes(&back), bytes);
    }

    #[test]
    fn metrics_are_permutation_invariant(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..60), seed in any::<u64>()) {
        let (p, y): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
        let mut order: Vec<usize> = (0..p.len()).collect();
        RngStream::new(seed).shuffle(&mut order);
        let pp: Vec<u8> = order.iter().map(|&i| p[i]).collect();
        let yy: Vec<u8> = order.iter().map(|&i| y[i]).collect();
        prop_assert_eq!(accuracy(&p, &y).unwrap(), accuracy(&pp, &yy).unwrap());
        prop_assert_eq!(f1_binary(&p, &y).unwrap(), f1_binary(&pp, &yy).unwrap());
        let f1 = f1_binary(&p, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
    }

    #[test]
    fn deciles_have_ceil_size(vars in prop::collection::vec(0f64..1.0, 10..200)) {
        let n = vars.len();
        let preds: Vec<_> = vars.iter().map(|&v| UncertainPrediction::new(0.7, v)).collect();
        let labels = vec![1u8; n];
        let r = variance_decile_report(&preds, &labels).unwrap();
        prop_assert_eq!(r.decile_size, n.div_ceil(10));
        prop_assert!(2 * r.decile_size <= n);
        prop_assert_eq!(r.top_decile_accuracy, 1.0);
        prop_assert!((r.mean_variance - vars.iter().sum::<f64>() / n as f64).abs() < 1e-12);
    }

    #[test]
    fn plateau_rates_only_step_down_by_factor(losses in prop::collection::vec(0.1f64..2.0, 1..40)) {
        let cfg = TrainConfig::default();
        let mut s = PlateauScheduler::new(1.0, cfg.scheduler_factor, cfg.scheduler_patience, cfg.min_improvement);
        let mut lr = 1.0;
        for l in losses {
            let next = s.step(l);
            prop_assert!(next == lr || (next - lr * cfg.scheduler_factor).abs() < 1e-15);
            lr = next;
        }
    }

    #[test]
    fn precision_stays_symmetric_positive(seed in any::<u64>(), rows in 1usize..30) {
        let cfg = HeadConfig { hidden: 4, rff_dim: 6, ..HeadConfig::new(3) };
        let mut rng = RngStream::new(seed);
        let HeadParams::Sngp(mut p) = HeadParams::init(HeadKind::Sngp, &cfg, &mut rng).unwrap() else { unreachable!() };
        let mut x = Matrix::zeros(rows, 3);
        rng.fill_normal(x.as_mut_slice());
        let phi = p.features(&x).unwrap();
        let probs: Vec<f64> = (0..rows).map(|_| rng.uniform()).collect();
        sngp_precision_update(&mut p, &phi, &probs).unwrap();
        prop_assert!(p.precision.is_symmetric(0.0));
        prop_assert!(p.precision.cholesky().is_ok());
    }

    #[test]
    fn predictions_are_well_formed(seed in any::<u64>(), kind_ix in 0usize..3) {
        let kind = HeadKind::ALL[kind_ix];
        let cfg = HeadConfig { hidden: 5, rff_dim: 8, k_samples: 4, ..HeadConfig::new(3) };
        let mut rng = RngStream::new(seed);
        let mut params = HeadParams::init(kind, &cfg, &mut rng).unwrap();
        let mut x = Matrix::zeros(7, 3);
        rng.fill_normal(x.as_mut_slice());
        x.scale(3.0);
        if let HeadParams::Sngp(p) = &mut params {
            uq_heads::training::fit_laplace(p, &cfg, &x, 3).unwrap();
        }
        for pr in predict_with_uncertainty(&params, &cfg, &x, &mut rng).unwrap() {
            prop_assert!((0.0..=1.0).contains(&pr.prob_mean));
            prop_assert!(pr.variance >= 0.0);
            prop_assert_eq!(pr.label, hard_label(pr.prob_mean));
            if kind == HeadKind::Dnn {
                prop_assert_eq!(pr.variance, 0.0);
            }
        }
    }

    #[test]
    fn spd_inverse_is_an_inverse(seed in any::<u64>(), n in 1usize..12) {
        let mut rng = RngStream::new(seed);
        let mut a = Matrix::zeros(n, n);
        rng.fill_normal(a.as_mut_slice());
        let mut spd = a.t_matmul(&a);
        for i in 0..n {
            spd.set(i, i, spd.get(i, i) + 0.5);
        }
        let inv = spd.spd_inverse().unwrap();
        prop_assert!(inv.is_symmetric(0.0));
        prop_assert!(spd.matmul(&inv).max_abs_diff(&Matrix::identity(n)) < 1e-8);
    }
}

#[test]
fn same_seed_same_stream() {
    let mut a = RngStream::new(99).substream(4);
    let mut b = RngStream::new(99).substream(4);
    for _ in 0..1000 {
        assert_eq!(a.next_u64(), b.next_u64());
    }
}
