mod common;

use adaptive_dose::acquisition::EvaluationGrid;
use adaptive_dose::gp::{fit_posterior, rbf_kernel, KernelSpec, ObservationSet, JITTER};
use common::{central_difference, fit, random_data, DenseGp};
use proptest::prelude::*;
use rand::Rng;

fn grid() -> EvaluationGrid {
    EvaluationGrid::new(0.0, 12.0, 0.01).unwrap()
}

#[test]
fn factor_reconstructs_jittered_gram() {
    let spec = KernelSpec::default();
    let mut r = common::rng(17);
    for _ in 0..10 {
        let data = random_data(&mut r, 5, 0.0, 12.0);
        let model = fit(&data, spec, 0.1);
        let l = model.factor_rows();
        for i in 0..5 {
            assert!(l[i][i] > 0.0);
            for j in 0..5 {
                if j > i {
                    assert_eq!(l[i][j], 0.0);
                }
                let llt: f64 = (0..5).map(|k| l[i][k] * l[j][k]).sum();
                let mut target = common::sq_exp(data[i].0, data[j].0, &spec);
                if i == j {
                    target += 0.01 + JITTER;
                }
                assert!((llt - target).abs() < 1e-10, "({i},{j}) {llt} vs {target}");
            }
        }
        assert_eq!(model.weights().len(), model.train_x().len());
    }
}

#[test]
fn matches_dense_inverse_oracle() {
    let spec = KernelSpec::default();
    let mut r = common::rng(5);
    for _ in 0..20 {
        let n = r.gen_range(1..=5);
        let data = random_data(&mut r, n, 0.0, 12.0);
        let model = fit(&data, spec, 0.1);
        let oracle = DenseGp::new(&data, spec, 0.1, JITTER);
        for x in grid().points().step_by(7) {
            assert!((model.mean(x) - oracle.mean(x)).abs() < 1e-8);
            assert!((model.std(x) - oracle.std(x)).abs() < 1e-8);
        }
    }
}

#[test]
fn near_interpolation_with_tiny_noise() {
    let spec = KernelSpec::default();
    let data = [(1.0, 1.1), (4.0, 1.3), (7.5, 1.8), (11.0, 2.0)];
    let model = fit(&data, spec, 1e-8);
    for (x, y) in data {
        assert!((model.mean(x) - y).abs() <= 1e-4);
    }
}

#[test]
fn mean_derivative_matches_finite_differences() {
    let spec = KernelSpec::default();
    let mut r = common::rng(99);
    for _ in 0..5 {
        let data = random_data(&mut r, 6, 0.0, 12.0);
        let model = fit(&data, spec, 0.1);
        for _ in 0..50 {
            let x = r.gen_range(0.0..12.0);
            let fd = central_difference(|z| model.mean(z), x, 1e-4);
            let an = model.mean_deriv(x);
            assert!((an - fd).abs() <= 1e-4 * an.abs().max(1e-3), "{an} vs {fd}");
        }
    }
}

#[test]
fn prior_recovery_on_grid() {
    let spec = KernelSpec::new(2.0, 1.7).unwrap();
    let model = fit_posterior(&ObservationSet::new(), &spec, 0.1).unwrap();
    for x in grid().points() {
        assert_eq!(model.mean(x), 0.0);
        assert_eq!(model.std(x), 1.7);
    }
}

#[test]
fn adding_data_never_widens_the_band() {
    let spec = KernelSpec::default();
    let mut r = common::rng(3);
    let data = random_data(&mut r, 8, 0.0, 12.0);
    let mut prev = fit(&[], spec, 0.1);
    for k in 1..=data.len() {
        let next = fit(&data[..k], spec, 0.1);
        for x in grid().points() {
            assert!(next.std(x) <= prev.std(x) + 1e-9, "k={k} x={x}");
        }
        prev = next;
    }
}

proptest! {
    #[test]
    fn kernel_symmetric_and_dominated(a in -50.0..50.0f64, b in -50.0..50.0f64, ls in 0.1..10.0f64, amp in 0.1..5.0f64) {
        let spec = KernelSpec::new(ls, amp).unwrap();
        prop_assert_eq!(rbf_kernel(a, b, &spec), rbf_kernel(b, a, &spec));
        prop_assert!(rbf_kernel(a, a, &spec) >= rbf_kernel(a, b, &spec));
    }

    #[test]
    fn std_bounded_by_amplitude(
        pts in prop::collection::vec((0.0..12.0f64, 0.0..3.0f64), 0..10),
        x in 0.0..12.0f64,
        amp in 0.2..3.0f64,
    ) {
        let spec = KernelSpec::new(2.0, amp).unwrap();
        let model = fit(&pts, spec, 0.1);
        let s = model.std(x);
        prop_assert!(s >= 0.0 && s <= amp);
    }
}
