//! Structural checks on small grids, shared with the acceptance suite.
#![allow(dead_code)]

use std::ops::ControlFlow;

use levy_fpe::analysis::{MeksRunner, LOW_STATE};
use levy_fpe::solver::*;
use levy_fpe::NoiseSpec64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn meks_operator(alpha: f64, eps: f64, half: usize) -> FpeOperator<f64> {
    MeksRunner::<f64>::new(half, 1.0).operator(NoiseSpec64::isotropic(alpha, eps).unwrap()).unwrap()
}

/// Runs MeKS from the low state and returns the diagnostics.
pub fn meks_diagnostics(alpha: f64, eps: f64, half: usize, t_end: f64) -> SolveDiagnostics {
    let r = MeksRunner::<f64>::new(half, t_end);
    let op = r.operator(NoiseSpec64::isotropic(alpha, eps).unwrap()).unwrap();
    let grid = GridSpec::new(half, op.stable_dt(0.5), t_end, 1).unwrap();
    let init = delta_initial(LOW_STATE, &r.domain, half).unwrap();
    solve_observed(init, &op, &grid, |_| ControlFlow::Continue(())).unwrap()
}

/// Largest violation of the square's symmetries over all recorded fields,
/// relative to the peak, for a centred delta under isotropic noise.
pub fn symmetry_violation(alpha: f64, half: usize, t_end: f64) -> f64 {
    let dom = DomainBox::new(-1.0, 1.0, -1.0, 1.0).unwrap();
    let op = FpeOperator::new(&ZeroDrift, NoiseSpec64::isotropic(alpha, 0.3).unwrap(), dom, half).unwrap();
    let grid = GridSpec::new(half, op.stable_dt(0.5), t_end, 1).unwrap();
    let n = half as isize - 1;
    let mut worst: f64 = 0.0;
    solve_observed(delta_initial((0.0, 0.0), &dom, half).unwrap(), &op, &grid, |f| {
        let peak = f.max_abs();
        for i in -n..=n {
            for j in -n..=n {
                let p = f.get(i, j);
                for q in [f.get(-i, j), f.get(i, -j), f.get(j, i)] {
                    worst = worst.max((p - q).abs() / peak);
                }
            }
        }
        ControlFlow::Continue(())
    })
    .unwrap();
    worst
}

pub fn random_field(half: usize, seed: u64) -> DensityField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * half - 1;
    DensityField::from_values(half, (0..n * n).map(|_| rng.random::<f64>()).collect(), 0.0).unwrap()
}

/// `max |L(aP + bQ) - a L(P) - b L(Q)| / max |L(aP + bQ)|` on random fields.
pub fn additivity_error(op: &FpeOperator<f64>, seed: u64) -> f64 {
    let half = op.half();
    let (p, q) = (random_field(half, seed), random_field(half, seed + 1));
    let (a, b) = (0.7, -1.3);
    let mix: Vec<f64> = p.values().iter().zip(q.values()).map(|(x, y)| a * x + b * y).collect();
    let mix = DensityField::from_values(half, mix, 0.0).unwrap();
    let (lp, lq, lm) = (op.rhs(&p), op.rhs(&q), op.rhs(&mix));
    let scale = lm.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    lm.iter().zip(lp.iter().zip(&lq)).map(|(m, (x, y))| (m - a * x - b * y).abs()).fold(0.0, f64::max) / scale
}

/// Node path of the maximiser from a delta of height `factor / h^2`.
pub fn argmax_nodes(factor: f64, alpha: f64, eps: f64, half: usize, t_end: f64) -> Vec<(isize, isize)> {
    let r = MeksRunner::<f64>::new(half, t_end);
    let op = r.operator(NoiseSpec64::isotropic(alpha, eps).unwrap()).unwrap();
    let grid = GridSpec::new(half, op.stable_dt(0.5), t_end, 10).unwrap();
    let init = delta_initial(LOW_STATE, &r.domain, half).unwrap().scaled(factor);
    let mut nodes = Vec::new();
    solve_observed(init, &op, &grid, |f| {
        nodes.push(f.argmax().0);
        ControlFlow::Continue(())
    })
    .unwrap();
    nodes
}
