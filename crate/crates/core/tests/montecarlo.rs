use levy_fpe::analysis::LOW_STATE;
use levy_fpe::kinetics::{drift_scaled, KineticParams, ScaleTransform};
use levy_fpe::montecarlo::*;
use levy_fpe::solver::{DomainBox, MeksDrift, ZeroDrift};
use levy_fpe::NoiseSpec64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn settings(n_paths: usize, dt: f64, t_end: f64, seed: u64) -> EnsembleSettings<f64> {
    EnsembleSettings { n_paths, dt, t_end, seed, record_every: None }
}

fn rk4(start: (f64, f64), t_end: f64, steps: usize) -> (f64, f64) {
    let (p, tr) = (KineticParams::default(), ScaleTransform::default());
    let f = |x: (f64, f64)| drift_scaled(x, &p, &tr).unwrap();
    let dt = t_end / steps as f64;
    let mut x = start;
    for _ in 0..steps {
        let k1 = f(x);
        let k2 = f((x.0 + 0.5 * dt * k1.0, x.1 + 0.5 * dt * k1.1));
        let k3 = f((x.0 + 0.5 * dt * k2.0, x.1 + 0.5 * dt * k2.1));
        let k4 = f((x.0 + dt * k3.0, x.1 + dt * k3.1));
        x.0 += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        x.1 += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    x
}

fn quantile(mut x: Vec<f64>, q: f64) -> f64 {
    x.sort_by(f64::total_cmp);
    x[((x.len() - 1) as f64 * q).round() as usize]
}

#[test]
fn noiseless_paths_follow_the_ode() {
    let start = (1.0, 3.5);
    let noise = NoiseSpec64::isotropic(1.5, 0.0).unwrap();
    let ens = simulate_ensemble(start, &settings(8, 1e-4, 10.0, 1), &MeksDrift::default(), &noise, &DomainBox::default()).unwrap();
    let want = rk4(start, 10.0, 20_000);
    for &(k, s) in &ens.terminal {
        assert!((k - want.0).abs() < 1e-3 && (s - want.1).abs() < 1e-3, "({k}, {s}) vs {want:?}");
        assert_eq!((k, s), ens.terminal[0]);
    }
    assert_eq!(ens.absorbed_count, 0);
}

#[test]
fn sink_is_a_fixed_point_of_the_noiseless_step() {
    let noise = NoiseSpec64::isotropic(1.0, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let next = em_step(LOW_STATE, 1e-3, &MeksDrift::default(), &noise, &mut rng).unwrap();
    assert!((next.0 - LOW_STATE.0).abs() < 1e-6 && (next.1 - LOW_STATE.1).abs() < 1e-6);
}

#[test]
fn seeds_reproduce_independently_of_thread_count() {
    let noise = NoiseSpec64::isotropic(1.2, 0.3).unwrap();
    let s = settings(10_000, 1e-2, 2.0, 42);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_ensemble(LOW_STATE, &s, &MeksDrift::default(), &noise, &DomainBox::default()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    let other = simulate_ensemble(LOW_STATE, &settings(10_000, 1e-2, 2.0, 43), &MeksDrift::default(), &noise, &DomainBox::default()).unwrap();
    assert_ne!(one.terminal, other.terminal);
}

#[test]
fn absorption_grows_with_noise() {
    let absorbed = |eps: f64| {
        let noise = NoiseSpec64::isotropic(1.0, eps).unwrap();
        simulate_ensemble(LOW_STATE, &settings(20_000, 1e-2, 3.0, 5), &MeksDrift::default(), &noise, &DomainBox::default())
            .unwrap()
            .absorbed_count
    };
    assert!(absorbed(0.4) > absorbed(0.1));
}

#[test]
fn one_step_cauchy_quartiles() {
    let (eps, dt) = (0.25, 1e-2);
    let noise = NoiseSpec64::isotropic(1.0, eps).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let d: Vec<f64> = (0..1_000_000)
        .map(|_| em_step(LOW_STATE, dt, &MeksDrift::default(), &noise, &mut rng).unwrap().0 - LOW_STATE.0)
        .collect();
    let spread = quantile(d.clone(), 0.75) - quantile(d, 0.25);
    let want = 2.0 * eps * dt;
    assert!((spread - want).abs() < 0.02 * want, "spread {spread} vs {want}");
}

#[test]
fn increments_scale_with_dt_to_the_inverse_alpha() {
    let noise = NoiseSpec64::isotropic(1.5, 0.2).unwrap();
    let q75 = |dt: f64, seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..400_000).map(|_| em_step((0.0, 0.0), dt, &ZeroDrift, &noise, &mut rng).unwrap().0).collect();
        quantile(d, 0.75)
    };
    let ratio = q75(5e-3, 1) / q75(1e-2, 2);
    let want = 2f64.powf(-1.0 / 1.5);
    assert!((ratio - want).abs() < 0.01, "ratio {ratio} vs {want}");
}

fn ensemble_at(points: Vec<(f64, f64)>, absorbed: Vec<bool>) -> PathEnsemble<f64> {
    let absorbed_count = absorbed.iter().filter(|&&a| a).count();
    PathEnsemble { settings: settings(points.len(), 1e-3, 1.0, 0), terminal: points, absorbed, absorbed_count, trajectories: None }
}

#[test]
fn coincident_paths_fill_one_cell() {
    let dom = DomainBox::<f64>::default();
    let mut absorbed = vec![false; 100];
    absorbed[..25].iter_mut().for_each(|a| *a = true);
    let ens = ensemble_at(vec![(1.2, 4.1); 100], absorbed);
    let f = empirical_density(&ens, 25, &dom).unwrap();
    assert_eq!(f.values().iter().filter(|&&x| x != 0.0).count(), 1);
    assert!((f.total_mass() - 0.75).abs() < 1e-12);
    assert!((f.total_mass() - ens.surviving_fraction()).abs() < 1e-12);
}

#[test]
fn uniform_sample_gives_flat_histogram() {
    use rand::Rng;
    let dom = DomainBox::<f64>::default();
    let half = 10;
    let n = 400_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // uniform over the node cells of the interior grid
    let h = 1.0 / half as f64;
    let lo = -1.0 + 0.5 * h;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| dom.from_reference((lo + rng.random::<f64>() * (2.0 - h), lo + rng.random::<f64>() * (2.0 - h))))
        .collect();
    let f = empirical_density(&ensemble_at(pts, vec![false; n]), half, &dom).unwrap();
    let cells = f.values().len() as f64;
    let expected = 1.0 / (cells * h * h);
    let sigma = expected * ((1.0 - 1.0 / cells) / (n as f64 / cells)).sqrt();
    for &v in f.values() {
        assert!((v - expected).abs() < 5.0 * sigma, "{v} vs {expected} +- {sigma}");
    }
}

#[test]
fn trajectories_export_with_header() {
    let noise = NoiseSpec64::isotropic(1.0, 0.2).unwrap();
    let s = EnsembleSettings { n_paths: 3, dt: 1e-2, t_end: 0.1, seed: 1, record_every: Some(5) };
    let ens = simulate_ensemble(LOW_STATE, &s, &MeksDrift::default(), &noise, &DomainBox::default()).unwrap();
    let mut buf = Vec::new();
    write_trajectories_csv(&mut buf, &ens).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("path_id,t,k,s,absorbed\n"));
    assert!(text.lines().count() > 3);
}
