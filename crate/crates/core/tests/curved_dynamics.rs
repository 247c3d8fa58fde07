use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ringdyn::curved::{project_position, project_velocity};
use ringdyn::{
    acceleration_curved, integrate_curved, odot, ring_decompose_curved, CurvedState, Error,
    IntegrationOptions, MassModel, RingVariant, Sigma,
};

fn random_point(rng: &mut ChaCha8Rng, sigma: Sigma) -> Vector3<f64> {
    let raw = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    match sigma {
        Sigma::Positive => raw.normalize(),
        Sigma::Negative => Vector3::new(raw.x, raw.y, (1.0 + raw.x * raw.x + raw.y * raw.y).sqrt()),
    }
}

/// Smallest `sigma - sigma (q_i . q_j)^2` over pairs.
fn min_pair_denominator(q: &[Vector3<f64>], sigma: Sigma) -> f64 {
    let s = sigma.value();
    let mut out = f64::INFINITY;
    for i in 0..q.len() {
        for j in 0..i {
            let c = odot(&q[i], &q[j], sigma);
            out = out.min(s - s * c * c);
        }
    }
    out
}

/// Random state with every pair kept away from collision (and, on the
/// sphere, from the antipode). Near those the forces blow up and the
/// rounding of the input positions alone is amplified past 1e-12.
fn random_state(rng: &mut ChaCha8Rng, sigma: Sigma, n: usize) -> CurvedState {
    loop {
        let q: Vec<_> = (0..n).map(|_| random_point(rng, sigma)).collect();
        if min_pair_denominator(&q, sigma) < 0.05 {
            continue;
        }
        let v: Vec<_> = q
            .iter()
            .map(|p| {
                let raw = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                project_velocity(p, &raw, sigma)
            })
            .collect();
        if let Ok(state) = CurvedState::new(sigma, 0.0, q, v) {
            return state;
        }
    }
}

/// Ring of `n` bodies at planar radius `r` spinning at `omega` about the
/// vertical axis.
fn spinning_ring(sigma: Sigma, r: f64, n: usize, omega: f64, phase: f64) -> CurvedState {
    let mut q = Vec::new();
    let mut v = Vec::new();
    for k in 0..n {
        let th = phase + 2.0 * PI * k as f64 / n as f64;
        q.push(CurvedState::ring_point(sigma, r, th, false).unwrap());
        v.push(Vector3::new(-omega * r * th.sin(), omega * r * th.cos(), 0.0));
    }
    CurvedState::new(sigma, 0.0, q, v).unwrap()
}

// Rigid rotation of an equal-mass regular ring on the unit sphere is a
// solution when omega^2 = sum_j m (1 - cos d_j) / D_j^(3/2), where
// D_j = 1 - c_j^2 and c_j = r^2 cos d_j + z^2.
fn sphere_ring_rate(r: f64, n: usize, m: f64) -> f64 {
    let z2 = 1.0 - r * r;
    let sum: f64 = (1..n)
        .map(|j| {
            let d = 2.0 * PI * j as f64 / n as f64;
            let c = r * r * d.cos() + z2;
            m * (1.0 - d.cos()) / (1.0 - c * c).powf(1.5)
        })
        .sum();
    sum.sqrt()
}

#[test]
fn odot_examples() {
    let pole = Vector3::new(0.0, 0.0, 1.0);
    assert_eq!(odot(&pole, &pole, Sigma::Positive), 1.0);
    assert_eq!(odot(&pole, &pole, Sigma::Negative), -1.0);
    for sigma in [Sigma::Positive, Sigma::Negative] {
        assert_eq!(odot(&Vector3::x(), &Vector3::y(), sigma), 0.0);
    }
}

#[test]
fn lone_body_at_rest() {
    for sigma in [Sigma::Positive, Sigma::Negative] {
        let state = CurvedState::new(sigma, 0.0, vec![Vector3::new(0.0, 0.0, 1.0)], vec![Vector3::zeros()]).unwrap();
        let masses = MassModel::equal(1, 1.0).unwrap();
        assert_eq!(acceleration_curved(&state, &masses).unwrap(), vec![Vector3::zeros()]);
        let traj = integrate_curved(&state, &masses, &IntegrationOptions::new(2.0, 1e-10, 1e-12, 0.5)).unwrap();
        assert!(traj.samples().iter().all(|s| s.state.positions() == state.positions()));
    }
}

#[test]
fn tangency_identity_on_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for sigma in [Sigma::Positive, Sigma::Negative] {
        for _ in 0..1000 {
            let n = rng.gen_range(2..6);
            let state = random_state(&mut rng, sigma, n);
            let masses: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let acc = acceleration_curved(&state, &MassModel::constant(&masses).unwrap()).unwrap();
            for ((q, v), a) in state.positions().iter().zip(state.velocities()).zip(&acc) {
                let defect = odot(q, a, sigma) + odot(v, v, sigma);
                assert!(defect.abs() <= 1e-12, "{sigma:?}: {defect:e}");
            }
        }
    }
}

#[test]
fn antipodal_pair_is_singular() {
    let q = vec![Vector3::new(1.0, 0.0, 0.0), Vector3::new(-1.0, 0.0, 0.0)];
    assert!(CurvedState::new(Sigma::Positive, 0.0, q, vec![Vector3::zeros(); 2]).is_err());
}

#[test]
fn symmetric_pair_has_no_tangential_pull() {
    let state = spinning_ring(Sigma::Positive, 0.6, 2, 0.0, 0.4);
    let acc = acceleration_curved(&state, &MassModel::equal(2, 1.0).unwrap()).unwrap();
    for (q, a) in state.positions().iter().zip(&acc) {
        let e_theta = Vector3::new(-q.y, q.x, 0.0).normalize();
        assert!(a.dot(&e_theta).abs() <= 1e-15);
    }
}

#[test]
fn sphere_relative_equilibrium_keeps_its_shape() {
    let (r, n, m) = (0.5, 3, 1.0);
    let omega = sphere_ring_rate(r, n, m);
    let state = spinning_ring(Sigma::Positive, r, n, omega, 0.0);
    let traj = integrate_curved(
        &state,
        &MassModel::equal(n, m).unwrap(),
        &IntegrationOptions::new(10.0, 1e-10, 1e-12, 0.05),
    )
    .unwrap();
    let z0 = (1.0f64 - r * r).sqrt();
    for s in traj.samples() {
        let d = ring_decompose_curved(&s.state, 1e-6).unwrap();
        assert!((d.radius - r).abs() <= 1e-6);
        assert!((d.z.unwrap() - z0).abs() <= 1e-6);
        // and it actually turns at the predicted rate
        let expected = (omega * s.state.time() + PI).rem_euclid(2.0 * PI) - PI;
        let angle = s.state.positions()[0].y.atan2(s.state.positions()[0].x);
        assert!((angle - expected).abs() <= 1e-6, "t = {}", s.state.time());
    }
}

#[test]
fn constraint_and_tangency_drift_stay_small() {
    for sigma in [Sigma::Positive, Sigma::Negative] {
        // a perturbed ring: the spin is off the equilibrium rate
        let mut state = spinning_ring(sigma, 0.5, 4, 0.9, 0.1);
        let v: Vec<_> = state
            .positions()
            .iter()
            .zip(state.velocities())
            .enumerate()
            .map(|(k, (q, v))| project_velocity(q, &(v + Vector3::new(0.05 * k as f64, -0.03, 0.02)), sigma))
            .collect();
        state = CurvedState::new(sigma, 0.0, state.positions().to_vec(), v).unwrap();
        let traj = integrate_curved(
            &state,
            &MassModel::constant(&[0.3, 0.2, 0.25, 0.3]).unwrap(),
            &IntegrationOptions::new(10.0, 1e-10, 1e-12, 0.05),
        )
        .unwrap();
        for s in traj.samples() {
            assert!(s.state.constraint_drift() <= 1e-8, "{sigma:?}");
            assert!(s.state.tangency_drift() <= 1e-8, "{sigma:?}");
        }
    }
}

#[test]
fn hyperbolic_runs_stay_on_the_upper_sheet() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let state = random_state(&mut rng, Sigma::Negative, 3);
        let traj = integrate_curved(
            &state,
            &MassModel::equal(3, 0.2).unwrap(),
            &IntegrationOptions::new(5.0, 1e-10, 1e-12, 0.1),
        );
        let Ok(traj) = traj else { continue };
        for s in traj.samples() {
            for q in s.state.positions() {
                let r2 = q.x * q.x + q.y * q.y;
                assert!(q.z >= (1.0 + r2).sqrt() - 1e-9);
            }
        }
    }
}

#[test]
fn projection_rejects_points_inside_the_light_cone() {
    let err = project_position(&Vector3::new(2.0, 0.0, 1.0), Sigma::Negative).unwrap_err();
    assert!(matches!(err, Error::Geometry(_)), "{err}");
    let err = project_position(&Vector3::new(0.0, 0.0, -1.0), Sigma::Negative).unwrap_err();
    assert!(matches!(err, Error::Geometry(_)), "{err}");
    let p = project_position(&Vector3::new(0.3, 0.4, 1.2), Sigma::Negative).unwrap();
    assert_relative_eq!(odot(&p, &p, Sigma::Negative), -1.0, epsilon = 1e-15);
}

#[test]
fn ring_decomposition_examples() {
    let q: Vec<_> = (0..3)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / 3.0;
            Vector3::new(0.8 * th.cos(), 0.8 * th.sin(), 0.6)
        })
        .collect();
    let state = CurvedState::new(Sigma::Positive, 0.0, q.clone(), vec![Vector3::zeros(); 3]).unwrap();
    let d = ring_decompose_curved(&state, 1e-6).unwrap();
    assert_eq!(d.variant, RingVariant::AllOnCircle);
    assert_relative_eq!(d.radius, 0.8, epsilon = 1e-12);
    assert_relative_eq!(d.z.unwrap(), 0.6, epsilon = 1e-12);
    for g in ringdyn::ring::cyclic_gaps(&d.angles) {
        assert_relative_eq!(g, 2.0 * PI / 3.0, epsilon = 1e-12);
    }

    let mut with_pole = q.clone();
    with_pole.push(Vector3::new(0.0, 0.0, 1.0));
    let state = CurvedState::new(Sigma::Positive, 0.0, with_pole, vec![Vector3::zeros(); 4]).unwrap();
    let d = ring_decompose_curved(&state, 1e-6).unwrap();
    assert_eq!(d.variant, RingVariant::WithCenter);
    assert_eq!(d.angles.len(), 3);
    assert_eq!(d.pole_index, Some(3));

    // move one body to a nearby latitude, staying on the sphere
    let mut off = q;
    let z: f64 = 0.6 + 1e-5;
    let r = (1.0 - z * z).sqrt();
    off[1] = Vector3::new(r * off[1].x / 0.8, r * off[1].y / 0.8, z);
    let state = CurvedState::new(Sigma::Positive, 0.0, off, vec![Vector3::zeros(); 3]).unwrap();
    assert!(matches!(ring_decompose_curved(&state, 1e-6), Err(Error::NotARing { .. })));
}

proptest! {
    #[test]
    fn acceleration_commutes_with_vertical_rotations(seed in 0u64..10_000, angle in -PI..PI, negative in any::<bool>()) {
        let sigma = if negative { Sigma::Negative } else { Sigma::Positive };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_state(&mut rng, sigma, 4);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), angle);
        let turned = CurvedState::new(
            sigma,
            0.0,
            state.positions().iter().map(|q| rot * q).collect(),
            state.velocities().iter().map(|v| rot * v).collect(),
        )
        .unwrap();
        let masses = MassModel::constant(&[0.5, 1.0, 0.7, 0.2]).unwrap();
        let a = acceleration_curved(&state, &masses).unwrap();
        let b = acceleration_curved(&turned, &masses).unwrap();
        let scale = a.iter().map(|x| x.norm()).fold(1.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((rot * x - y).norm() <= 1e-12 * scale);
        }
    }
}
