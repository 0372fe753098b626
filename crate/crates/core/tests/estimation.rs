use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

use lander_core::baseline::{BaselineConfig, EkfConfig, EkfPidController, EkfState};
use lander_core::dynamics::DroneState;
use lander_core::rng::stream;
use lander_core::Vec3;

/// Target simulated with exactly the filter's model: white acceleration-free
/// random walk with covariance Q per step and Gaussian measurement noise R.
#[test]
fn innovations_are_consistent_on_matched_model() {
    let cfg = EkfConfig {
        process_noise: 1e-4,
        measurement_noise: 1e-4,
        ..EkfConfig::default()
    };
    let q = Normal::new(0.0, cfg.process_noise.sqrt()).unwrap();
    let r = Normal::new(0.0, cfg.measurement_noise.sqrt()).unwrap();
    let mut rng = stream(21, "nis");
    let mut total = 0.0;
    let mut count = 0usize;
    for run in 0..40 {
        let mut pos = Vec3::new(0.1 * run as f64, 0.0, 0.5);
        let mut vel = Vec3::new(0.2, -0.1, 0.0);
        let mut ekf = EkfState::new(pos, vel, &cfg).unwrap();
        ekf.p = ekf.q;
        for step in 0..500 {
            pos += vel * cfg.dt + Vec3::from_fn(|_, _| q.sample(&mut rng));
            vel += Vec3::from_fn(|_, _| q.sample(&mut rng));
            let z = pos + Vec3::from_fn(|_, _| r.sample(&mut rng));
            let (next, nis) = ekf.predict().update_with_nis(&z).unwrap();
            ekf = next;
            if step >= 50 {
                total += nis;
                count += 1;
            }
        }
    }
    let mean = total / count as f64;
    assert!((mean - 3.0).abs() <= 0.3, "mean NIS {mean}");
}

#[test]
fn error_shrinks_after_burn_in() {
    let cfg = EkfConfig::default();
    let r = Normal::new(0.0, 1e-3).unwrap();
    let mut rng = stream(22, "convergence");
    let mut early = 0.0;
    let mut late = 0.0;
    for run in 0..50 {
        let p0 = Vec3::new(0.02 * run as f64, -0.3, 0.5);
        let v = Vec3::new(0.3, 0.1 * (run % 5) as f64 - 0.2, 0.0);
        let mut ekf = EkfState::new(p0, Vec3::zeros(), &cfg).unwrap();
        for k in 1..=200 {
            let truth = p0 + v * (k as f64 * cfg.dt);
            ekf = ekf.predict().update(&(truth + Vec3::from_fn(|_, _| r.sample(&mut rng)))).unwrap();
            let err = (ekf.position() - truth).norm() + (ekf.velocity() - v).norm();
            if (10..20).contains(&k) {
                early += err;
            }
            if (190..200).contains(&k) {
                late += err;
            }
        }
    }
    assert!(late <= early, "late {late} vs early {early}");
}

#[test]
fn baseline_commands_share_agent_bounds() {
    let cfg = BaselineConfig::default();
    let mut ctl = EkfPidController::new(cfg, &Vec3::new(0.0, 0.0, 0.5), 0.1, 3).unwrap();
    let mut rng = stream(23, "parity");
    let n = Normal::new(0.0, 2.0).unwrap();
    for _ in 0..2000 {
        let drone = DroneState::at_rest(Vec3::from_fn(|_, _| n.sample(&mut rng)));
        let pad = Vec3::from_fn(|_, _| n.sample(&mut rng));
        let a = ctl.command(&drone, &pad).unwrap();
        assert!(a.iter().all(|c| (-1.0..=1.0).contains(c)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn covariance_stays_symmetric_psd(
        seed in any::<u64>(),
        log_q in -8.0f64..-1.0,
        log_r in -8.0f64..-1.0,
        cycles in 1usize..300,
    ) {
        let cfg = EkfConfig {
            process_noise: 10f64.powf(log_q),
            measurement_noise: 10f64.powf(log_r),
            ..EkfConfig::default()
        };
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rng = stream(seed, "psd");
        let mut ekf = EkfState::new(Vec3::zeros(), Vec3::zeros(), &cfg).unwrap();
        for _ in 0..cycles {
            let z = ekf.position() + Vec3::from_fn(|_, _| noise.sample(&mut rng));
            ekf = ekf.predict().update(&z).unwrap();
            let p = ekf.p;
            let scale = p.amax();
            prop_assert!((p - p.transpose()).amax() <= 1e-9 * scale.max(1.0));
            prop_assert!(SymmetricEigen::new(p).eigenvalues.min() >= -1e-9 * scale.max(1.0));
        }
    }
}
