//! Nonlocal Fokker-Planck solver on the reference square with absorbing
//! boundary: WENO3 advection, trapezoidal jump sums and TVD-RK3 in time.

mod field;
mod grid;
pub mod io;
mod nonlocal;
mod rk3;
pub mod weno;

use std::ops::ControlFlow;

use log::{debug, warn};

pub use field::{delta_initial, gaussian_initial, nearest_node, DensityField};
pub use grid::{node, DomainBox, GridSpec};
pub use nonlocal::{nonlocal_rhs, AxisCoefficients};
pub use rk3::{rk3_step, Rk3};

use crate::error::{Error, Result};
use crate::kinetics::{drift_scaled, KineticParams, ScaleTransform};
use crate::scalar::Scalar;
use crate::stable::NoiseSpec;
use weno::{flux_derivative_line, LineScratch, WENO_EPS};

/// Deterministic vector field driving the density, in physical coordinates.
pub trait Drift<T>: Sync {
    fn velocity(&self, point: (T, T)) -> Result<(T, T)>;
}

/// Scaled MeKS drift.
#[derive(Clone, Copy, Debug)]
pub struct MeksDrift<T> {
    pub params: KineticParams<T>,
    pub transform: ScaleTransform<T>,
}

impl<T: Scalar> Default for MeksDrift<T> {
    fn default() -> Self {
        Self { params: KineticParams::default(), transform: ScaleTransform::default() }
    }
}

impl<T: Scalar> Drift<T> for MeksDrift<T> {
    fn velocity(&self, point: (T, T)) -> Result<(T, T)> {
        drift_scaled(point, &self.params, &self.transform)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroDrift;

impl<T: Scalar> Drift<T> for ZeroDrift {
    fn velocity(&self, _: (T, T)) -> Result<(T, T)> {
        Ok((T::zero(), T::zero()))
    }
}

/// Drift given by a closure.
pub struct FnDrift<F>(pub F);

impl<T, F> Drift<T> for FnDrift<F>
where
    F: Fn((T, T)) -> (T, T) + Sync,
{
    fn velocity(&self, point: (T, T)) -> Result<(T, T)> {
        Ok((self.0)(point))
    }
}

/// Drift components sampled at every interior node.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftGrid<T> {
    pub half: usize,
    pub f1: Vec<T>,
    pub f2: Vec<T>,
}

impl<T: Scalar> DriftGrid<T> {
    pub fn sample<D: Drift<T> + ?Sized>(drift: &D, domain_box: &DomainBox<T>, half: usize) -> Result<Self> {
        let lim = half as isize - 1;
        let n = 2 * half - 1;
        let mut f1 = Vec::with_capacity(n * n);
        let mut f2 = Vec::with_capacity(n * n);
        for i in -lim..=lim {
            for j in -lim..=lim {
                let point = domain_box.from_reference((node(i, half), node(j, half)));
                let (a, b) = drift.velocity(point)?;
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::Config(format!(
                        "non-finite drift at node ({i}, {j}) = ({}, {})",
                        point.0, point.1
                    )));
                }
                f1.push(a);
                f2.push(b);
            }
        }
        Ok(Self { half, f1, f2 })
    }

    /// Global Lax-Friedrichs speeds `max |f1|`, `max |f2|`.
    pub fn lf_speeds(&self) -> (T, T) {
        let m = |v: &[T]| v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()));
        (m(&self.f1), m(&self.f2))
    }
}

/// Advection part `-(2/(b-a)) (f1 P)_v - (2/(d-c)) (f2 P)_w`.
///
/// The WENO smoothness regularisation acts on the density normalised to unit
/// mass `h^2 sum |P|`, so the operator is positively homogeneous:
/// `R(cP) = c R(P)`.
pub fn advection_rhs<T: Scalar>(field: &DensityField<T>, drift: &DriftGrid<T>, domain_box: &DomainBox<T>) -> Vec<T> {
    let mut out = vec![T::zero(); field.values().len()];
    add_advection(field.values(), drift, domain_box, field.half(), &mut out);
    out
}

fn add_advection<T: Scalar>(p: &[T], drift: &DriftGrid<T>, domain_box: &DomainBox<T>, half: usize, out: &mut [T]) {
    let n = 2 * half - 1;
    let h = grid::spacing::<T>(half);
    let two = T::lit(2.0);
    let kx = two / domain_box.width();
    let ky = two / domain_box.height();
    let (lf1, lf2) = drift.lf_speeds();
    let eps = T::lit(WENO_EPS);
    let mass = p.iter().fold(T::zero(), |m, x| m + x.abs()) * h * h;
    if mass == T::zero() || !mass.is_finite() {
        return;
    }
    let inv = T::one() / mass;
    let kx = kx * mass;
    let ky = ky * mass;
    let mut scratch = LineScratch::default();
    let mut vel = vec![T::zero(); n];
    let mut den = vec![T::zero(); n];
    let mut deriv = vec![T::zero(); n];

    if lf1 > T::zero() {
        for j in 0..n {
            for i in 0..n {
                vel[i] = drift.f1[i * n + j];
                den[i] = p[i * n + j] * inv;
            }
            flux_derivative_line(&vel, &den, lf1, h, eps, &mut scratch, &mut deriv);
            for i in 0..n {
                out[i * n + j] -= kx * deriv[i];
            }
        }
    }
    if lf2 > T::zero() {
        for i in 0..n {
            let row = i * n..(i + 1) * n;
            for (d, &x) in den.iter_mut().zip(&p[row.clone()]) {
                *d = x * inv;
            }
            flux_derivative_line(&drift.f2[row.clone()], &den, lf2, h, eps, &mut scratch, &mut deriv);
            for (o, d) in out[row].iter_mut().zip(&deriv) {
                *o -= ky * *d;
            }
        }
    }
}

/// Full right-hand side `advection + nonlocal`, evaluated from the direct
/// sums. Use [`FpeOperator`] when the same operator is applied repeatedly.
pub fn rhs<T: Scalar>(
    field: &DensityField<T>,
    drift: &DriftGrid<T>,
    noise: &NoiseSpec<T>,
    domain_box: &DomainBox<T>,
) -> Result<Vec<T>> {
    let mut out = nonlocal_rhs(field, noise, domain_box)?;
    add_advection(field.values(), drift, domain_box, field.half(), &mut out);
    Ok(out)
}

/// Semi-discrete operator with the jump sums assembled into dense per-axis
/// matrices.
#[derive(Clone, Debug)]
pub struct FpeOperator<T> {
    half: usize,
    domain: DomainBox<T>,
    noise: NoiseSpec<T>,
    drift: DriftGrid<T>,
    x_axis: AxisCoefficients<T>,
    y_axis: AxisCoefficients<T>,
    // row = output node along v
    x_matrix: Vec<T>,
    // transposed: row = input node along w
    y_matrix_t: Vec<T>,
}

impl<T: Scalar> FpeOperator<T> {
    pub fn new<D: Drift<T> + ?Sized>(drift: &D, noise: NoiseSpec<T>, domain_box: DomainBox<T>, half: usize) -> Result<Self> {
        noise.validate()?;
        domain_box.validate()?;
        if half < 2 {
            return Err(Error::Config(format!("grid half-resolution must be >= 2, got {half}")));
        }
        let drift = DriftGrid::sample(drift, &domain_box, half)?;
        let x_axis = AxisCoefficients::new(noise.alpha, noise.eps_k, domain_box.width(), half)?;
        let y_axis = AxisCoefficients::new(noise.alpha, noise.eps_s, domain_box.height(), half)?;
        let x_matrix = x_axis.line_matrix(half);
        let y = y_axis.line_matrix(half);
        let n = 2 * half - 1;
        let mut y_matrix_t = vec![T::zero(); n * n];
        for r in 0..n {
            for c in 0..n {
                y_matrix_t[c * n + r] = y[r * n + c];
            }
        }
        Ok(Self { half, domain: domain_box, noise, drift, x_axis, y_axis, x_matrix, y_matrix_t })
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    pub fn noise(&self) -> &NoiseSpec<T> {
        &self.noise
    }

    pub fn drift(&self) -> &DriftGrid<T> {
        &self.drift
    }

    pub fn axis_coefficients(&self) -> (AxisCoefficients<T>, AxisCoefficients<T>) {
        (self.x_axis, self.y_axis)
    }

    /// Writes `R(P)` into `out`.
    pub fn apply(&self, p: &[T], out: &mut [T]) {
        let n = 2 * self.half - 1;
        debug_assert_eq!(p.len(), n * n);
        out.fill(T::zero());
        add_advection(p, &self.drift, &self.domain, self.half, out);
        if self.x_axis.gamma != T::zero() {
            for i in 0..n {
                let out_row = &mut out[i * n..(i + 1) * n];
                let coeffs = &self.x_matrix[i * n..(i + 1) * n];
                for (m, &a) in coeffs.iter().enumerate() {
                    if a == T::zero() {
                        continue;
                    }
                    axpy(out_row, a, &p[m * n..(m + 1) * n]);
                }
            }
        }
        if self.y_axis.gamma != T::zero() {
            for i in 0..n {
                let p_row = &p[i * n..(i + 1) * n];
                let out_row = &mut out[i * n..(i + 1) * n];
                for (m, &pm) in p_row.iter().enumerate() {
                    if pm == T::zero() {
                        continue;
                    }
                    axpy(out_row, pm, &self.y_matrix_t[m * n..(m + 1) * n]);
                }
            }
        }
    }

    pub fn rhs(&self, field: &DensityField<T>) -> Vec<T> {
        let mut out = vec![T::zero(); field.values().len()];
        self.apply(field.values(), &mut out);
        out
    }

    /// Spectral-radius estimate `L_adv + L_jump` used for the explicit step bound.
    pub fn stiffness(&self) -> T {
        let h = grid::spacing::<T>(self.half);
        let two = T::lit(2.0);
        let (lf1, lf2) = self.drift.lf_speeds();
        let adv = two * lf1 / (self.domain.width() * h) + two * lf2 / (self.domain.height() * h);
        let n = 2 * self.half - 1;
        let max_diag = |m: &[T]| (0..n).fold(T::zero(), |acc, r| acc.max(m[r * n + r].abs()));
        adv + max_diag(&self.x_matrix) + max_diag(&self.y_matrix_t)
    }

    /// `c_stab / stiffness`; infinite when the operator vanishes.
    pub fn stable_dt(&self, c_stab: T) -> T {
        c_stab / self.stiffness()
    }
}

#[inline]
fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Largest admissible `dt * stiffness`.
pub const STABILITY_LIMIT: f64 = 1.0;
/// Default safety factor applied to the step bound.
pub const DEFAULT_C_STAB: f64 = 0.5;
/// Integration aborts once `max |P|` exceeds this multiple of `1 / h^2`.
pub const BLOWUP_FACTOR: f64 = 1e12;
/// Allowed per-step mass increase, relative to the initial mass.
pub const MASS_TOLERANCE: f64 = 1e-10;
/// Quality gate on `min P / max P`.
pub const UNDERSHOOT_TOLERANCE: f64 = 1e-6;
/// Default memory available for stored snapshots.
pub const DEFAULT_SNAPSHOT_BUDGET: usize = 2 << 30;

/// How an integration ended.
#[derive(Clone, Debug, PartialEq)]
pub enum SolveStatus {
    Completed,
    /// The observer requested an early stop after the snapshot at `time`.
    Stopped { time: f64 },
    Aborted { step: usize, time: f64, max_abs: f64, reason: String },
}

/// Mass and positivity monitoring collected during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveDiagnostics {
    pub status: SolveStatus,
    pub dt: f64,
    pub steps: usize,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Steps whose mass rose by more than [`MASS_TOLERANCE`] times the initial mass.
    pub mass_increase_steps: usize,
    pub max_mass_increase: f64,
    /// Smallest `min P / max P` seen over the run.
    pub min_undershoot_ratio: f64,
}

impl SolveDiagnostics {
    pub fn mass_monotone(&self) -> bool {
        self.mass_increase_steps == 0
    }

    pub fn passes_undershoot_gate(&self) -> bool {
        self.min_undershoot_ratio >= -UNDERSHOOT_TOLERANCE
    }
}

/// Recorded snapshots of a run.
#[derive(Clone, Debug)]
pub struct SolveResult<T> {
    pub snapshots: Vec<DensityField<T>>,
    pub grid: GridSpec<T>,
    pub domain: DomainBox<T>,
    pub noise: NoiseSpec<T>,
    pub diagnostics: SolveDiagnostics,
}

fn check_setup<T: Scalar>(initial: &DensityField<T>, op: &FpeOperator<T>, grid: &GridSpec<T>) -> Result<()> {
    grid.validate()?;
    if initial.half() != grid.half || op.half() != grid.half {
        return Err(Error::Config(format!(
            "resolution mismatch: field {}, operator {}, grid {}",
            initial.half(),
            op.half(),
            grid.half
        )));
    }
    let limit = T::lit(STABILITY_LIMIT) / op.stiffness();
    if grid.dt > limit {
        return Err(Error::Config(format!(
            "dt = {} exceeds the explicit stability bound {} (stiffness {})",
            grid.dt,
            limit,
            op.stiffness()
        )));
    }
    Ok(())
}

/// Bytes needed to store every snapshot of a run.
pub fn snapshot_bytes<T>(grid: &GridSpec<T>) -> usize
where
    T: Scalar,
{
    let count = grid.n_steps() / grid.record_stride + 2;
    count * grid.n() * grid.n() * std::mem::size_of::<T>()
}

/// Integrates and stores every recorded snapshot.
pub fn solve<T: Scalar>(initial: DensityField<T>, op: &FpeOperator<T>, grid: &GridSpec<T>) -> Result<SolveResult<T>> {
    solve_with_budget(initial, op, grid, DEFAULT_SNAPSHOT_BUDGET)
}

pub fn solve_with_budget<T: Scalar>(
    initial: DensityField<T>,
    op: &FpeOperator<T>,
    grid: &GridSpec<T>,
    budget_bytes: usize,
) -> Result<SolveResult<T>> {
    grid.validate()?;
    let need = snapshot_bytes(grid);
    if need > budget_bytes {
        return Err(Error::Config(format!(
            "storing snapshots needs {need} bytes, over the {budget_bytes}-byte budget; increase record_stride"
        )));
    }
    let mut snapshots = Vec::new();
    let diagnostics = solve_observed(initial, op, grid, |f| {
        snapshots.push(f.clone());
        ControlFlow::Continue(())
    })?;
    Ok(SolveResult { snapshots, grid: *grid, domain: *op.domain(), noise: *op.noise(), diagnostics })
}

/// Integrates from `initial.time` to `t_end`, handing every recorded
/// snapshot (initial state, every `record_stride` steps, final state) to
/// `observer`. Returning `Break` stops the run after that snapshot.
///
/// Numerical blow-up does not return `Err`: the last good state is passed
/// to the observer and the status is [`SolveStatus::Aborted`].
pub fn solve_observed<T, O>(
    initial: DensityField<T>,
    op: &FpeOperator<T>,
    grid: &GridSpec<T>,
    mut observer: O,
) -> Result<SolveDiagnostics>
where
    T: Scalar,
    O: FnMut(&DensityField<T>) -> ControlFlow<()>,
{
    check_setup(&initial, op, grid)?;
    let h = initial.h().to_f64_lossy();
    let blowup = BLOWUP_FACTOR / (h * h);
    let n_steps = grid.n_steps();
    let t0 = initial.time;
    let initial_mass = initial.total_mass().to_f64_lossy();
    let mut diag = SolveDiagnostics {
        status: SolveStatus::Completed,
        dt: grid.dt.to_f64_lossy(),
        steps: 0,
        initial_mass,
        final_mass: initial_mass,
        mass_increase_steps: 0,
        max_mass_increase: 0.0,
        min_undershoot_ratio: undershoot_ratio(&initial),
    };
    debug!("solving {n_steps} steps, dt = {}, stiffness = {}", grid.dt, op.stiffness());

    let mut field = initial;
    if observer(&field).is_break() {
        diag.status = SolveStatus::Stopped { time: field.time.to_f64_lossy() };
        return Ok(diag);
    }
    let mut rk = Rk3::new();
    let mut last_recorded = 0usize;
    let mut previous = field.clone();
    for step in 1..=n_steps {
        let t_next = if step == n_steps { t0 + grid.t_end } else { t0 + grid.dt * T::from_usize_lossy(step) };
        let dt = t_next - field.time;
        previous.clone_from(&field);
        let prev_mass = field.total_mass().to_f64_lossy();
        let outcome = rk.step(field.values_mut(), dt, |x, out| op.apply(x, out));
        let failure = match outcome {
            Err(Error::NonFinite { max_abs, .. }) => Some((max_abs, "non-finite values".to_string())),
            Err(e) => return Err(e),
            Ok(()) => {
                let m = field.max_abs().to_f64_lossy();
                (m > blowup).then(|| (m, format!("max |P| exceeded {blowup:e}")))
            }
        };
        if let Some((max_abs, reason)) = failure {
            warn!("integration aborted at step {step}: {reason}");
            diag.status = SolveStatus::Aborted { step, time: t_next.to_f64_lossy(), max_abs, reason };
            if last_recorded != step - 1 {
                let _ = observer(&previous);
            }
            diag.final_mass = previous.total_mass().to_f64_lossy();
            return Ok(diag);
        }
        field.time = t_next;
        field.refresh_mass();
        diag.steps = step;

        let mass = field.total_mass().to_f64_lossy();
        let rise = mass - prev_mass;
        if rise > MASS_TOLERANCE * initial_mass {
            diag.mass_increase_steps += 1;
        }
        diag.max_mass_increase = diag.max_mass_increase.max(rise);
        diag.min_undershoot_ratio = diag.min_undershoot_ratio.min(undershoot_ratio(&field));
        diag.final_mass = mass;

        if step % grid.record_stride == 0 || step == n_steps {
            last_recorded = step;
            if observer(&field).is_break() {
                diag.status = SolveStatus::Stopped { time: field.time.to_f64_lossy() };
                return Ok(diag);
            }
        }
    }
    if diag.mass_increase_steps > 0 {
        warn!("total mass increased on {} steps (max {:e})", diag.mass_increase_steps, diag.max_mass_increase);
    }
    Ok(diag)
}

fn undershoot_ratio<T: Scalar>(field: &DensityField<T>) -> f64 {
    let max = field.max().to_f64_lossy();
    if max <= 0.0 {
        return 0.0;
    }
    (field.min().to_f64_lossy() / max).min(0.0)
}

/// Builds the scaled MeKS operator and integrates from `initial`.
pub fn solve_meks<T: Scalar>(
    initial: DensityField<T>,
    params: &KineticParams<T>,
    transform: &ScaleTransform<T>,
    noise: NoiseSpec<T>,
    domain_box: DomainBox<T>,
    grid: &GridSpec<T>,
) -> Result<SolveResult<T>> {
    let drift = MeksDrift { params: *params, transform: *transform };
    let op = FpeOperator::new(&drift, noise, domain_box, grid.half)?;
    solve(initial, &op, grid)
}
