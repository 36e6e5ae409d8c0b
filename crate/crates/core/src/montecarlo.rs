//! Euler-Maruyama sample paths with alpha-stable increments, absorbed at the
//! domain boundary like the density solver.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::solver::{nearest_node, DensityField, DomainBox, Drift};
use crate::stable::{sample_standard_stable, NoiseSpec};

/// Paths per rng stream; streams are keyed by block index so results do
/// not depend on the worker count.
pub const PATHS_PER_STREAM: usize = 4096;

/// One step `x + f(x) dt + eps dt^(1/alpha) xi` with independent standard
/// stable `xi` per axis.
pub fn em_step<T, D, R>(state: (T, T), dt: T, drift: &D, noise: &NoiseSpec<T>, rng: &mut R) -> Result<(T, T)>
where
    T: Scalar,
    D: Drift<T> + ?Sized,
    R: rand::Rng + ?Sized,
{
    let (f1, f2) = drift.velocity(state)?;
    let scale = dt.powf(T::one() / noise.alpha);
    let xi1 = sample_standard_stable(noise.alpha, rng);
    let xi2 = sample_standard_stable(noise.alpha, rng);
    Ok((
        state.0 + f1 * dt + noise.eps_k * scale * xi1,
        state.1 + f2 * dt + noise.eps_s * scale * xi2,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSettings<T> {
    pub n_paths: usize,
    pub dt: T,
    pub t_end: T,
    pub seed: u64,
    /// Keep every `k`-th state of each path when set.
    pub record_every: Option<usize>,
}

/// Sample point of a stored trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub t: T,
    pub k: T,
    pub s: T,
    pub absorbed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEnsemble<T> {
    pub settings: EnsembleSettings<T>,
    /// Final state of each path; for absorbed paths, the first state outside the box.
    pub terminal: Vec<(T, T)>,
    pub absorbed: Vec<bool>,
    pub absorbed_count: usize,
    pub trajectories: Option<Vec<Vec<TrajectoryPoint<T>>>>,
}

impl<T: Scalar> PathEnsemble<T> {
    pub fn n_paths(&self) -> usize {
        self.terminal.len()
    }

    pub fn surviving_fraction(&self) -> f64 {
        1.0 - self.absorbed_count as f64 / self.n_paths() as f64
    }
}

struct PathOutcome<T> {
    terminal: (T, T),
    absorbed: bool,
    trajectory: Option<Vec<TrajectoryPoint<T>>>,
}

/// Simulates `settings.n_paths` independent paths from `initial`.
pub fn simulate_ensemble<T, D>(
    initial: (T, T),
    settings: &EnsembleSettings<T>,
    drift: &D,
    noise: &NoiseSpec<T>,
    domain_box: &DomainBox<T>,
) -> Result<PathEnsemble<T>>
where
    T: Scalar,
    D: Drift<T> + ?Sized,
{
    noise.validate()?;
    domain_box.validate()?;
    if !domain_box.contains(initial) {
        return Err(domain("initial state must lie strictly inside the domain"));
    }
    if settings.n_paths == 0 || !(settings.dt > T::zero()) || !(settings.t_end > T::zero()) {
        return Err(domain("need n_paths >= 1, dt > 0 and t_end > 0"));
    }
    let n_steps = (settings.t_end / settings.dt).round().to_f64_lossy().max(1.0) as usize;
    let blocks = settings.n_paths.div_ceil(PATHS_PER_STREAM);

    let per_block: Vec<Result<Vec<PathOutcome<T>>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(b as u64);
            let count = PATHS_PER_STREAM.min(settings.n_paths - b * PATHS_PER_STREAM);
            (0..count)
                .map(|_| simulate_path(initial, n_steps, settings, drift, noise, domain_box, &mut rng))
                .collect()
        })
        .collect();

    let mut terminal = Vec::with_capacity(settings.n_paths);
    let mut absorbed = Vec::with_capacity(settings.n_paths);
    let mut trajectories = settings.record_every.map(|_| Vec::with_capacity(settings.n_paths));
    for block in per_block {
        for out in block? {
            terminal.push(out.terminal);
            absorbed.push(out.absorbed);
            if let (Some(all), Some(tr)) = (trajectories.as_mut(), out.trajectory) {
                all.push(tr);
            }
        }
    }
    let absorbed_count = absorbed.iter().filter(|&&a| a).count();
    Ok(PathEnsemble { settings: *settings, terminal, absorbed, absorbed_count, trajectories })
}

fn simulate_path<T, D, R>(
    initial: (T, T),
    n_steps: usize,
    settings: &EnsembleSettings<T>,
    drift: &D,
    noise: &NoiseSpec<T>,
    domain_box: &DomainBox<T>,
    rng: &mut R,
) -> Result<PathOutcome<T>>
where
    T: Scalar,
    D: Drift<T> + ?Sized,
    R: rand::Rng + ?Sized,
{
    let mut state = initial;
    let mut trajectory = settings
        .record_every
        .map(|_| vec![TrajectoryPoint { t: T::zero(), k: state.0, s: state.1, absorbed: false }]);
    for step in 1..=n_steps {
        state = em_step(state, settings.dt, drift, noise, rng)?;
        let out = !domain_box.contains(state);
        if let (Some(tr), Some(every)) = (trajectory.as_mut(), settings.record_every) {
            if out || step % every.max(1) == 0 || step == n_steps {
                let t = settings.dt * T::from_usize_lossy(step);
                tr.push(TrajectoryPoint { t, k: state.0, s: state.1, absorbed: out });
            }
        }
        if out {
            return Ok(PathOutcome { terminal: state, absorbed: true, trajectory });
        }
    }
    Ok(PathOutcome { terminal: state, absorbed: false, trajectory })
}

/// Histogram of surviving terminal states on the solver grid, scaled so the
/// reference-square mass equals the surviving fraction.
pub fn empirical_density<T: Scalar>(ensemble: &PathEnsemble<T>, half: usize, domain_box: &DomainBox<T>) -> Result<DensityField<T>> {
    if ensemble.terminal.is_empty() {
        return Err(domain("empty ensemble"));
    }
    let mut field = DensityField::zeros(half, ensemble.settings.t_end);
    let h = field.h();
    let weight = T::one() / (T::from_usize_lossy(ensemble.n_paths()) * h * h);
    for (&pt, &gone) in ensemble.terminal.iter().zip(&ensemble.absorbed) {
        if gone {
            continue;
        }
        let (i, j) = nearest_node(domain_box.to_reference(pt), half);
        let v = field.get(i, j);
        field.set(i, j, v + weight);
    }
    field.refresh_mass();
    Ok(field)
}

/// Trajectory CSV with header `path_id,t,k,s,absorbed`.
pub fn write_trajectories_csv<T: Scalar, W: Write>(mut out: W, ensemble: &PathEnsemble<T>) -> Result<()> {
    writeln!(out, "path_id,t,k,s,absorbed")?;
    if let Some(all) = &ensemble.trajectories {
        for (id, tr) in all.iter().enumerate() {
            for p in tr {
                writeln!(
                    out,
                    "{id},{},{},{},{}",
                    p.t.to_f64_lossy(),
                    p.k.to_f64_lossy(),
                    p.s.to_f64_lossy(),
                    u8::from(p.absorbed)
                )?;
            }
        }
    }
    Ok(())
}
