mod common;

use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use folbm::geometry::ChartPoint;
use folbm::models::*;
use folbm::rng::brownian_increments;
use folbm::sde::*;

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0];
    for d in increments {
        b.push(b.last().unwrap() + d);
    }
    b
}

#[test]
fn torus_flow_reference_point() {
    let m = EmbeddedTorusModel::default();
    let (x, y) = example3_flow(&m, 0.0, 0.0, 2f64.sqrt() * PI / 2.0);
    assert_abs_diff_eq!(x, PI / 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(y, PI / (3.0 * 3f64.sqrt()), epsilon = 1e-14);
    assert_eq!(example3_flow(&m, 0.4, 1.0, 0.0), (0.4, 1.0));
}

#[test]
fn torus_flow_agrees_with_integrating_the_leaf_field() {
    let m = EmbeddedTorusModel::new(1.3, 0.8).unwrap();
    let numeric = folbm::geometry::ChartModel::without_christoffels(m.clone());
    let x0 = ChartPoint::new(vec![2.5, 0.0]);
    // Long enough to cross x = π several times.
    let t = 12.0;
    let z = leaf_flow(&numeric, &x0, t).unwrap();
    let (x, y) = m.flow(2.5, 0.0, t);
    assert!((z.get(0) - x).abs() < 1e-8 && (z.get(1) - y).abs() < 1e-8);
}

#[test]
fn x_increment_is_linear_in_time() {
    let m = EmbeddedTorusModel::new(3.0, 0.5).unwrap();
    let s = (0.25f64 + 1.0).sqrt();
    for &t in &[-3.0, 0.1, 7.0] {
        assert_abs_diff_eq!(m.flow(1.0, 2.0, t).0 - 1.0, 0.5 * t / s, epsilon = 1e-14);
    }
}

#[test]
fn closed_form_paths() {
    let m = EmbeddedTorusModel::default();
    let still = example3_closed_form_fobm(&m, 0.3, 0.2, &[0.0; 5]);
    assert!(still.iter().all(|p| p.coords().as_slice() == [0.3, 0.2]));
    let one = example3_closed_form_fobm(&m, 0.3, 0.2, &[1.0]);
    assert_abs_diff_eq!(one[0].get(0), 0.3 + 1.0 / 2f64.sqrt(), epsilon = 1e-15);
}

#[test]
fn closed_form_x_variance() {
    let m = EmbeddedTorusModel::default();
    let (n, t) = (10_000usize, 1.0);
    let xs: Vec<f64> = (0..n)
        .map(|i| {
            let b = brownian_increments(21, i as u64, 1, t)[0];
            m.flow(0.0, 0.0, b).0
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let expected = 0.5 * t;
    let se = expected * (2.0 / (n - 1) as f64).sqrt();
    assert!((var - expected).abs() <= 3.0 * se, "{var}");
}

#[test]
fn kronecker_paths() {
    let k = KroneckerModel::plane(1.0).unwrap();
    let x0 = ChartPoint::new(vec![0.5, -0.5]);
    let still = kronecker_fobm(&k, &x0, &[0.0, 0.0]);
    assert!(still.iter().all(|p| p == &x0));
    let moved = kronecker_fobm(&k, &x0, &[2f64.sqrt()]);
    assert_abs_diff_eq!(moved[0].get(0), 1.5, epsilon = 1e-15);
    assert_abs_diff_eq!(moved[0].get(1), 0.5, epsilon = 1e-15);
    let wrapped = kronecker_fobm(&KroneckerModel::torus(1.0).unwrap(), &x0, &[2f64.sqrt()]);
    assert_abs_diff_eq!(wrapped[0].get(1), 0.5, epsilon = 1e-15);
    assert!((0.0..2.0 * PI).contains(&wrapped[0].get(0)));
}

#[test]
fn kronecker_increment_covariance() {
    let a = 2f64.sqrt();
    let k = KroneckerModel::plane(a).unwrap();
    let n = 10_000;
    let t = 0.5;
    let x0 = ChartPoint::new(vec![0.0, 0.0]);
    let d: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let b = brownian_increments(8, i as u64, 1, t)[0];
            let p = &kronecker_fobm(&k, &x0, &[b])[0];
            (p.get(0), p.get(1))
        })
        .collect();
    let s2 = a * a + 1.0;
    let expected = [[t * a * a / s2, t * a / s2], [t * a / s2, t / s2]];
    let samples: [[Vec<f64>; 2]; 2] = [
        [d.iter().map(|v| v.0 * v.0).collect(), d.iter().map(|v| v.0 * v.1).collect()],
        [d.iter().map(|v| v.1 * v.0).collect(), d.iter().map(|v| v.1 * v.1).collect()],
    ];
    for i in 0..2 {
        for j in 0..2 {
            let xs = &samples[i][j];
            let mean = xs.iter().sum::<f64>() / n as f64;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            assert!((mean - expected[i][j]).abs() <= 3.0 * sd / (n as f64).sqrt());
        }
    }
}

#[test]
fn frame_bundle_on_kronecker_equals_closed_form() {
    let k = KroneckerModel::plane(0.8).unwrap();
    let x0 = ChartPoint::new(vec![1.0, 1.0]);
    let cfg = SdeConfig::new(1e-2, 100).paths(4).seed(3);
    let ens = fobm_frame_bundle(&k, &FramePoint::at(&k, &x0).unwrap(), &cfg).unwrap();
    let flow = fobm_flow_1d(&k, &x0, &cfg).unwrap();
    for p in 0..4 {
        let exact = kronecker_fobm(&k, &x0, &ens.brownian_path(p, 0));
        for (i, e) in exact.iter().enumerate() {
            assert!((ens.state(p, i).coords() - e.coords()).amax() < 1e-12);
            assert!((flow.state(p, i).coords() - e.coords()).amax() < 1e-12);
        }
    }
}

#[test]
fn product_model_frame_bundle_moves_only_along_leaves() {
    let m = ProductModel::new(2, 2);
    let x0 = ChartPoint::new(vec![1.0, 2.0, 3.0, 4.0]);
    let cfg = SdeConfig::new(1e-2, 50).paths(2).seed(9);
    let ens = fobm_frame_bundle(&m, &FramePoint::at(&m, &x0).unwrap(), &cfg).unwrap();
    for p in 0..2 {
        for k in 0..ens.n_records() {
            let s = ens.state(p, k);
            assert_eq!((s.get(0), s.get(1)), (1.0, 2.0));
            let b2 = ens.brownian_path(p, 0)[k];
            let b3 = ens.brownian_path(p, 1)[k];
            assert!((s.get(2) - 3.0 - b2).abs() < 1e-12 && (s.get(3) - 4.0 - b3).abs() < 1e-12);
        }
    }
}

#[test]
fn frame_bundle_converges_to_closed_form_on_the_torus() {
    let m = EmbeddedTorusModel::default();
    let x0 = ChartPoint::new(vec![0.3, 0.1]);
    let u0 = FramePoint::at(&m, &x0).unwrap();
    let mut gaps = Vec::new();
    for &dt in &[1e-2, 1e-3] {
        let n = (1.0 / dt) as usize;
        let cfg = SdeConfig::new(dt, n);
        let mut worst: f64 = 0.0;
        for path in 0..10 {
            let noise = brownian_increments(1, path, n, dt);
            let rec = frame_bundle_path_with_noise(&m, &u0, &cfg, &noise, path as usize).unwrap();
            let exact = example3_closed_form_fobm(&m, 0.3, 0.1, &cumulative(&noise));
            for (k, e) in exact.iter().enumerate() {
                worst = worst
                    .max((rec.states[2 * k] - e.get(0)).abs())
                    .max((rec.states[2 * k + 1] - e.get(1)).abs());
            }
        }
        gaps.push(worst);
    }
    assert!(gaps[0] < 5e-3 && gaps[1] < gaps[0] / 2.0, "{gaps:?}");
}

#[test]
fn ensembles_are_deterministic_and_noise_is_standard() {
    let m = EmbeddedTorusModel::default();
    let x0 = ChartPoint::new(vec![0.0, 0.0]);
    let cfg = SdeConfig::new(1e-2, 200).paths(50).seed(77);
    let a = fobm_frame_bundle(&m, &FramePoint::at(&m, &x0).unwrap(), &cfg).unwrap();
    let b = fobm_frame_bundle(&m, &FramePoint::at(&m, &x0).unwrap(), &cfg).unwrap();
    assert_eq!(a, b);
    let all: Vec<f64> = a.paths.iter().flat_map(|p| p.noise.iter().copied()).collect();
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 4.0 * (cfg.dt / n).sqrt());
    assert!((var / cfg.dt - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
}

#[test]
fn flow_time_reversal() {
    let m = EmbeddedTorusModel::default();
    let x0 = ChartPoint::new(vec![1.0, 5.0]);
    let cfg = SdeConfig::new(1e-2, 300).seed(5);
    let ens = fobm_flow_1d(&m, &x0, &cfg).unwrap();
    let b_t = *ens.brownian_path(0, 0).last().unwrap();
    let back = leaf_flow(&m, &ens.endpoint(0), -b_t).unwrap();
    assert!((back.coords() - x0.coords()).amax() < 1e-8);
}

#[test]
fn thinned_ensembles_keep_the_endpoint() {
    let m = EmbeddedTorusModel::default();
    let x0 = ChartPoint::new(vec![0.0, 0.0]);
    let full = SdeConfig::new(1e-2, 10).seed(1);
    let thin = full.clone().stride(4);
    let a = fobm_frame_bundle(&m, &FramePoint::at(&m, &x0).unwrap(), &full).unwrap();
    let b = fobm_frame_bundle(&m, &FramePoint::at(&m, &x0).unwrap(), &thin).unwrap();
    assert!(b.is_thinned() && !a.is_thinned());
    assert_eq!(b.steps, vec![0, 4, 8, 10]);
    assert_eq!(a.endpoint(0), b.endpoint(0));
    assert_eq!(a.state(0, 4), b.state(0, 1));
}
