use super::*;
use crate::dynamics::{energy_balance_residual, energy_sample};
use crate::field::Grid;
use crate::lp::{DyadicPartition, Profile};
use crate::random::{random_field, Spectrum};
use crate::Complex64;

fn grid(n: usize) -> Grid {
    Grid::new(n, std::f64::consts::TAU).unwrap()
}

fn data(g: Grid, amp: f64, eps: f64, seed: u64) -> HallState {
    let unit = |f: SpectralField| f.scale(amp / f.l2_norm());
    let u = unit(random_field(g, &Spectrum::band(3.0), seed, true));
    let b = unit(random_field(g, &Spectrum::band(3.0), seed + 500, true));
    HallState::from_data(u, b, HallParams::new(0.1, 0.1, eps).unwrap()).unwrap()
}

fn distance(a: &HallState, b: &HallState) -> f64 {
    Triple::of(a).sub(&Triple::of(b)).0.iter().map(|f| f.l2_norm()).sum()
}

#[test]
fn config_validation() {
    assert!(IntegratorConfig::new(0.0, 1.0).is_err());
    assert!(IntegratorConfig::new(0.1, -1.0).is_err());
    let mut c = IntegratorConfig::new(0.1, 1.0).unwrap();
    assert_eq!(c.steps(), 10);
    c.t_end = 1.05;
    assert_eq!(c.steps(), 11);
    c.snapshot_stride = 0;
    assert!(c.validate().is_err());
    assert!(PicardConfig::new(0.1, 0.2, 5, 0.0).is_err());
    assert!(PicardConfig::new(0.3, 1.0, 5, 1e-10).is_err());
}

#[test]
fn zero_data_stays_zero() {
    let g = grid(16);
    let s = HallState::zeros(g, HallParams::new(0.1, 0.1, 0.5).unwrap());
    let traj = evolve(&s, &IntegratorConfig::new(0.05, 0.2).unwrap()).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.snapshots.len(), 5);
    for snap in &traj.snapshots {
        assert_eq!(Triple::of(snap).0.iter().map(|f| f.max_abs_coeff()).sum::<f64>(), 0.0);
    }
}

#[test]
fn linear_flow_is_exact() {
    let g = grid(16);
    let s = data(g, 1.0, 0.3, 3);
    for scheme in [Scheme::IfRk2, Scheme::IfRk4] {
        let mut cfg = IntegratorConfig::new(0.1, 0.7).unwrap();
        cfg.nonlinear = false;
        cfg.scheme = scheme;
        let traj = evolve(&s, &cfg).unwrap();
        for snap in &traj.snapshots {
            let free = free_solution(&s.u, &s.b, &s.j, s.params, snap.t).unwrap();
            assert!(distance(snap, &free) < 1e-12, "t={}", snap.t);
        }
    }
}

#[test]
fn free_solution_single_mode() {
    let g = grid(16);
    let p = HallParams::new(0.2, 0.3, 0.0).unwrap();
    let m = [1i64, 2, 0];
    let amp = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.1)];
    let b = SpectralField::from_modes(g, |mm, _| {
        if mm == m {
            amp
        } else if mm == [-1, -2, 0] {
            [amp[0].conj(), amp[1].conj(), amp[2].conj()]
        } else {
            [Complex64::new(0.0, 0.0); 3]
        }
    });
    let z = SpectralField::zeros(g);
    let j = curl(&b);
    let s0 = free_solution(&z, &b, &j, p, 0.0).unwrap();
    assert_eq!(s0.b, b);
    let t = 0.8;
    let s = free_solution(&z, &b, &j, p, t).unwrap();
    let expect = (-0.3 * 5.0 * t).exp();
    let idx = g.flat(1, 2, 0);
    assert!((s.b.component(2)[idx] - amp[2] * expect).norm() < 1e-15);
    assert!(free_solution(&z, &b, &j, p, -1.0).is_err());
}

#[test]
fn free_solution_integrated_norm_matches_closed_form() {
    // single mode |k| = 3 lies on the plateau of shell 1 at L = 2π
    let g = grid(16);
    let p = HallParams::new(0.2, 0.2, 0.0).unwrap();
    let u0 = SpectralField::from_modes(g, |m, _| {
        let c = if m == [0, 0, 3] {
            Complex64::new(0.4, 0.2)
        } else if m == [0, 0, -3] {
            Complex64::new(0.4, -0.2)
        } else {
            Complex64::new(0.0, 0.0)
        };
        [c, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
    });
    let part = DyadicPartition::new(&g, Profile::Quintic).unwrap();
    let spec = FunctionalSpec::new(2.0, 2.0, true).unwrap();
    let z = SpectralField::zeros(g);
    let t_end = 2.0;
    let steps = 2000;
    let mut series = FunctionalSeries::default();
    for i in 0..=steps {
        let t = t_end * i as f64 / steps as f64;
        let s = free_solution(&u0, &z, &z, p, t).unwrap();
        let (level, smooth) = functional_terms(&part, &spec, &p, [&s.u, &s.b, &s.j]).unwrap();
        series.push(t, level, smooth);
    }
    let s0 = 0.5;
    let norm0 = 2f64.powf(s0) * u0.l2_norm();
    let integral = series.total() - series.sup_level();
    let k2 = 9.0;
    let expect = 2f64.powf(s0 + 2.0) * u0.l2_norm() * (1.0 - (-0.2 * k2 * t_end).exp()) / k2;
    assert!((series.sup_level() - norm0).abs() < 1e-12 * norm0);
    assert!((integral - expect).abs() < 1e-6 * expect);
    // recorded constant C of ∫‖u_L‖_{Ḃ^{s+2}} ≤ C‖u₀‖_{Ḃ^s}
    assert!(integral / norm0 <= 4.0 / k2 + 1e-12);
}

fn self_convergence(scheme: Scheme) -> f64 {
    let g = grid(16);
    let s = data(g, 0.8, 0.2, 7);
    let run = |dt: f64| {
        let mut cfg = IntegratorConfig::new(dt, 0.4).unwrap();
        cfg.scheme = scheme;
        evolve(&s, &cfg).unwrap().last().clone()
    };
    let (a, b, c) = (run(0.1), run(0.05), run(0.025));
    distance(&a, &b) / distance(&b, &c)
}

#[test]
fn rk4_self_convergence_order() {
    let r = self_convergence(Scheme::IfRk4);
    assert!(r > 13.0 && r < 19.0, "ratio {r}");
}

#[test]
fn rk2_self_convergence_order() {
    let r = self_convergence(Scheme::IfRk2);
    assert!(r > 3.4 && r < 4.6, "ratio {r}");
}

#[test]
fn formulations_give_same_trajectory() {
    let g = grid(16);
    let s = data(g, 0.8, 0.3, 9);
    let mut cfg = IntegratorConfig::new(0.02, 0.2).unwrap();
    let ext = evolve(&s, &cfg).unwrap();
    cfg.formulation = Formulation::Original;
    let orig = evolve(&s, &cfg).unwrap();
    for (a, b) in ext.snapshots.iter().zip(&orig.snapshots) {
        assert!(distance(a, b) < 1e-9 * Triple::of(a).0[1].l2_norm(), "t={}", a.t);
        assert!(a.current_defect() < 1e-10);
    }
}

#[test]
fn divergence_is_detected() {
    let g = grid(16);
    let s = data(g, 200.0, 1.0, 11);
    let traj = evolve(&s, &IntegratorConfig::new(0.5, 20.0).unwrap()).unwrap();
    match traj.status {
        RunStatus::Diverged { t_last, .. } => {
            assert!(t_last < 20.0);
            assert_eq!(traj.last().t, t_last);
        }
        RunStatus::Completed => panic!("expected divergence"),
    }
}

#[test]
fn observer_sees_every_step_and_energy_balance_converges() {
    let g = grid(16);
    let s = data(g, 0.5, 0.2, 13);
    let residual = |dt: f64| {
        let mut samples = Vec::new();
        let mut cfg = IntegratorConfig::new(dt, 0.4).unwrap();
        cfg.snapshot_stride = 4;
        let traj = evolve_with(&s, &cfg, |st| samples.push(energy_sample(st))).unwrap();
        assert_eq!(samples.len(), cfg.steps() + 1);
        let n = cfg.steps();
        assert_eq!(traj.snapshots.len(), n / 4 + 1 + usize::from(!n.is_multiple_of(4)));
        energy_balance_residual(&samples).unwrap()
    };
    let (r1, r2) = (residual(0.04), residual(0.02));
    assert!(r1 / r2 > 3.5 && r1 / r2 < 4.5, "{r1} {r2}");
}

#[test]
fn picard_zero_data() {
    let g = grid(16);
    let z = SpectralField::zeros(g);
    let cfg = PicardConfig::new(0.1, 0.3, 4, 1e-10).unwrap();
    let (traj, rep) = picard_solve(&z, &z, &z, HallParams::new(0.1, 0.1, 0.5).unwrap(), &cfg).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 0);
    assert_eq!(rep.bound_m, 0.0);
    assert_eq!(rep.marcher_difference, Some(0.0));
    assert!(traj.snapshots.iter().all(|s| s.u.max_abs_coeff() == 0.0));
}

#[test]
fn picard_contracts_and_matches_marcher() {
    let g = grid(16);
    let s = data(g, 0.05, 0.2, 17);
    let cfg = PicardConfig::new(0.05, 0.5, 30, 1e-12).unwrap();
    let (traj, rep) = picard_solve(&s.u, &s.b, &s.j, s.params, &cfg).unwrap();
    assert!(rep.converged, "{rep:?}");
    assert!(!rep.non_contraction);
    assert!(rep.worst_ratio_from(2) < 0.5, "{rep:?}");
    assert!(rep.marcher_difference.unwrap() < 1e-8, "{rep:?}");
    assert!(traj.snapshots.iter().all(|s| s.current_defect() < 1e-8));
    assert!(rep.bound_m <= 2.0 * rep.deltas[0]);
}

#[test]
fn picard_duhamel_quadrature_orders() {
    // sources f(t) = e^{at}·g with g fixed: bar(T) = g (e^{aT} − e^{−κk²T})/(a + κk²) per mode
    let g = grid(8);
    let p = HallParams::new(0.3, 0.3, 0.0).unwrap();
    let field = random_field(g, &Spectrum::band(2.0), 1, true);
    let zero = Triple([SpectralField::zeros(g), SpectralField::zeros(g), SpectralField::zeros(g)]);
    let a = 0.7;
    let t_end = 1.0;
    let err = |m: usize, scheme: Scheme| {
        let h = t_end / m as f64;
        let f = |t: f64| {
            let x = field.scale((a * t).exp());
            Triple([x.clone(), x.clone(), x])
        };
        let bar = picard::duhamel(f, &zero, &p, h, m, scheme);
        let exact = field.map_radial(|k| ((a * t_end).exp() - (-0.3 * k * k * t_end).exp()) / (a + 0.3 * k * k));
        bar.last().unwrap().0[0].sub(&exact).unwrap().l2_norm()
    };
    let r4 = err(10, Scheme::IfRk4) / err(20, Scheme::IfRk4);
    assert!(r4 > 13.0 && r4 < 19.0, "{r4}");
    let r2 = err(10, Scheme::IfRk2) / err(20, Scheme::IfRk2);
    assert!(r2 > 3.4 && r2 < 4.6, "{r2}");
}
