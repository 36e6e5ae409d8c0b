//! MeKS (ComK/ComS) competence circuit: drift field, scale transform and
//! equilibria.

use log::warn;

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Rate constants and Hill coefficients of the MeKS circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticParams<T> {
    /// Basal ComK production rate.
    pub a_k: T,
    /// Fully activated ComK production rate.
    pub b_k: T,
    /// Maximal ComS production rate.
    pub b_s: T,
    /// ComK concentration for half-maximal auto-activation.
    pub k0: T,
    /// ComK concentration for half-maximal ComS repression.
    pub k1: T,
    /// Hill coefficient of ComK auto-activation.
    pub n: u32,
    /// Hill coefficient of ComS repression.
    pub p: u32,
}

impl<T: Scalar> Default for KineticParams<T> {
    fn default() -> Self {
        Self {
            a_k: T::lit(0.004),
            b_k: T::lit(0.14),
            b_s: T::lit(0.68),
            k0: T::lit(0.2),
            k1: T::lit(0.222),
            n: 2,
            p: 5,
        }
    }
}

impl<T: Scalar> KineticParams<T> {
    pub fn validate(&self) -> Result<()> {
        // Production rates may vanish (b_k = 0 switches off the feedback loop);
        // half-saturation constants may not.
        let rates = [("a_k", self.a_k), ("b_k", self.b_k), ("b_s", self.b_s)];
        for (name, v) in rates {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(domain(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        for (name, v) in [("k0", self.k0), ("k1", self.k1)] {
            if !(v.is_finite() && v > T::zero()) {
                return Err(domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.n == 0 || self.p == 0 {
            return Err(domain("Hill coefficients n and p must be >= 1"));
        }
        Ok(())
    }
}

/// Linear rescaling `k' = c_k k`, `s' = c_s s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleTransform<T> {
    pub c_k: T,
    pub c_s: T,
}

impl<T: Scalar> Default for ScaleTransform<T> {
    fn default() -> Self {
        Self { c_k: T::lit(10.0), c_s: T::lit(2.0) }
    }
}

impl<T: Scalar> ScaleTransform<T> {
    pub fn identity() -> Self {
        Self { c_k: T::one(), c_s: T::one() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_k.is_finite() && self.c_k > T::zero() && self.c_s.is_finite() && self.c_s > T::zero()) {
            return Err(domain("scale factors must be positive and finite"));
        }
        Ok(())
    }

    pub fn forward(&self, (k, s): (T, T)) -> (T, T) {
        (self.c_k * k, self.c_s * s)
    }

    pub fn inverse(&self, (k, s): (T, T)) -> (T, T) {
        (k / self.c_k, s / self.c_s)
    }
}

#[inline]
fn powi<T: Scalar>(x: T, n: u32) -> T {
    let mut acc = T::one();
    for _ in 0..n {
        acc *= x;
    }
    acc
}

fn check_point<T: Scalar>(k: T, s: T) -> Result<()> {
    if !(k.is_finite() && s.is_finite()) {
        return Err(domain(format!("non-finite concentration ({k}, {s})")));
    }
    if k < T::zero() || s < T::zero() {
        return Err(domain(format!("negative concentration ({k}, {s})")));
    }
    Ok(())
}

/// MeKS drift `(dk/dt, ds/dt)` in physical (unscaled) concentrations.
pub fn drift<T: Scalar>((k, s): (T, T), params: &KineticParams<T>) -> Result<(T, T)> {
    check_point(k, s)?;
    let kn = powi(k, params.n);
    let degradation = T::one() / (T::one() + k + s);
    let f1 = params.a_k + params.b_k * kn / (powi(params.k0, params.n) + kn) - k * degradation;
    let f2 = params.b_s / (T::one() + powi(k / params.k1, params.p)) - s * degradation;
    Ok((f1, f2))
}

/// Drift of the rescaled system, evaluated at scaled coordinates.
pub fn drift_scaled<T: Scalar>(
    point: (T, T),
    params: &KineticParams<T>,
    transform: &ScaleTransform<T>,
) -> Result<(T, T)> {
    let (f1, f2) = drift(transform.inverse(point), params)?;
    Ok((transform.c_k * f1, transform.c_s * f2))
}

/// Analytic Jacobian `[[df1/dk, df1/ds], [df2/dk, df2/ds]]` of the unscaled drift.
pub fn jacobian<T: Scalar>((k, s): (T, T), params: &KineticParams<T>) -> Result<[[T; 2]; 2]> {
    check_point(k, s)?;
    let one = T::one();
    let denom = one + k + s;
    let denom2 = denom * denom;

    let n = params.n;
    let k0n = powi(params.k0, n);
    let kn = powi(k, n);
    // d/dk [k^n / (k0^n + k^n)] = n k^(n-1) k0^n / (k0^n + k^n)^2
    let hill_act = T::from_u32(n).unwrap() * powi(k, n - 1) * k0n / ((k0n + kn) * (k0n + kn));

    let p = params.p;
    let r = k / params.k1;
    let rp = powi(r, p);
    // d/dk [1 / (1 + (k/k1)^p)] = -p (k/k1)^(p-1) / k1 / (1 + (k/k1)^p)^2
    let hill_rep = -T::from_u32(p).unwrap() * powi(r, p - 1) / params.k1 / ((one + rp) * (one + rp));

    let d11 = params.b_k * hill_act - (one + s) / denom2;
    let d12 = k / denom2;
    let d21 = params.b_s * hill_rep + s / denom2;
    let d22 = -(one + k) / denom2;
    Ok([[d11, d12], [d21, d22]])
}

/// Linear stability type of a fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EquilibriumKind {
    NodalSink,
    SpiralSink,
    Saddle,
    NodalSource,
    SpiralSource,
    /// Zero or purely imaginary eigenvalue.
    Degenerate,
}

impl EquilibriumKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NodalSink => "nodal-sink",
            Self::SpiralSink => "spiral-sink",
            Self::Saddle => "saddle",
            Self::NodalSource => "nodal-source",
            Self::SpiralSource => "spiral-source",
            Self::Degenerate => "degenerate",
        }
    }
}

/// Complex number as `(re, im)`.
pub type Eigenvalue<T> = (T, T);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equilibrium<T> {
    pub point: (T, T),
    pub kind: EquilibriumKind,
    pub eigenvalues: [Eigenvalue<T>; 2],
}

/// Eigenvalues of a real 2x2 matrix, larger real part first.
pub fn eigenvalues_2x2<T: Scalar>(m: &[[T; 2]; 2]) -> [Eigenvalue<T>; 2] {
    let two = T::lit(2.0);
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / T::lit(4.0) - det;
    let half = tr / two;
    if disc >= T::zero() {
        let r = disc.sqrt();
        [(half + r, T::zero()), (half - r, T::zero())]
    } else {
        let r = (-disc).sqrt();
        [(half, r), (half, -r)]
    }
}

pub fn classify<T: Scalar>(eig: &[Eigenvalue<T>; 2]) -> EquilibriumKind {
    let [(re0, im0), (re1, _)] = *eig;
    let zero = T::zero();
    if im0 != zero {
        if re0 < zero {
            EquilibriumKind::SpiralSink
        } else if re0 > zero {
            EquilibriumKind::SpiralSource
        } else {
            EquilibriumKind::Degenerate
        }
    } else if re0 < zero && re1 < zero {
        EquilibriumKind::NodalSink
    } else if re0 > zero && re1 > zero {
        EquilibriumKind::NodalSource
    } else if re0 > zero && re1 < zero {
        EquilibriumKind::Saddle
    } else {
        EquilibriumKind::Degenerate
    }
}

/// Settings of the seeded Newton search used by [`find_equilibria`].
#[derive(Clone, Copy, Debug)]
pub struct EquilibriumSearch {
    pub k_max: f64,
    pub s_max: f64,
    pub cells: usize,
    /// Levels of 2x2 subdivision applied to cells the nullclines pass through.
    pub refine_depth: u32,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub dedup_tol: f64,
}

impl Default for EquilibriumSearch {
    fn default() -> Self {
        Self {
            k_max: 3.0,
            s_max: 6.0,
            cells: 30,
            refine_depth: 5,
            newton_tol: 1e-12,
            newton_max_iter: 100,
            dedup_tol: 1e-6,
        }
    }
}

/// Locates and classifies the fixed points of the unscaled drift.
///
/// Cells of a uniform grid in which both drift components change sign over a
/// 3x3 sample are recursively subdivided; Newton is started from the centre of
/// every surviving leaf. Seeds that fail to converge are dropped. Results are
/// sorted by `k`.
pub fn find_equilibria<T: Scalar>(params: &KineticParams<T>) -> Result<Vec<Equilibrium<T>>> {
    find_equilibria_with(params, &EquilibriumSearch::default())
}

pub fn find_equilibria_with<T: Scalar>(
    params: &KineticParams<T>,
    search: &EquilibriumSearch,
) -> Result<Vec<Equilibrium<T>>> {
    params.validate()?;
    let p64 = KineticParams::<f64> {
        a_k: params.a_k.to_f64_lossy(),
        b_k: params.b_k.to_f64_lossy(),
        b_s: params.b_s.to_f64_lossy(),
        k0: params.k0.to_f64_lossy(),
        k1: params.k1.to_f64_lossy(),
        n: params.n,
        p: params.p,
    };
    let f = |k: f64, s: f64| drift((k, s), &p64).expect("grid points are nonnegative");

    let dk = search.k_max / search.cells as f64;
    let ds = search.s_max / search.cells as f64;
    let mut seeds = Vec::new();
    for ci in 0..search.cells {
        for cj in 0..search.cells {
            collect_seeds(&f, ci as f64 * dk, cj as f64 * ds, dk, ds, search.refine_depth, &mut seeds);
        }
    }

    let mut roots: Vec<(f64, f64)> = Vec::new();
    for seed in seeds {
        let Some(root) = newton(&p64, seed, search) else { continue };
        if roots.iter().all(|r| ((r.0 - root.0).powi(2) + (r.1 - root.1).powi(2)).sqrt() > search.dedup_tol) {
            roots.push(root);
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    if roots.is_empty() {
        warn!("no equilibria found in (0, {}) x (0, {})", search.k_max, search.s_max);
    }

    roots
        .into_iter()
        .map(|(k, s)| {
            let point = (T::lit(k), T::lit(s));
            let eigenvalues = eigenvalues_2x2(&jacobian(point, params)?);
            Ok(Equilibrium { point, kind: classify(&eigenvalues), eigenvalues })
        })
        .collect()
}

fn sign_changes(vals: &[f64]) -> bool {
    let pos = vals.iter().any(|&v| v >= 0.0);
    let neg = vals.iter().any(|&v| v <= 0.0);
    pos && neg
}

fn collect_seeds<F: Fn(f64, f64) -> (f64, f64)>(
    f: &F,
    k: f64,
    s: f64,
    dk: f64,
    ds: f64,
    depth: u32,
    out: &mut Vec<(f64, f64)>,
) {
    // 3x3 sample: corners alone miss nullclines that dip into a cell
    let mut f1 = [0.0; 9];
    let mut f2 = [0.0; 9];
    for a in 0..3 {
        for b in 0..3 {
            let v = f(k + 0.5 * a as f64 * dk, s + 0.5 * b as f64 * ds);
            f1[3 * a + b] = v.0;
            f2[3 * a + b] = v.1;
        }
    }
    if !(sign_changes(&f1) && sign_changes(&f2)) {
        return;
    }
    if depth == 0 {
        out.push((k + 0.5 * dk, s + 0.5 * ds));
        return;
    }
    let (hk, hs) = (0.5 * dk, 0.5 * ds);
    for (ok, os) in [(0.0, 0.0), (hk, 0.0), (0.0, hs), (hk, hs)] {
        collect_seeds(f, k + ok, s + os, hk, hs, depth - 1, out);
    }
}

fn newton(params: &KineticParams<f64>, seed: (f64, f64), search: &EquilibriumSearch) -> Option<(f64, f64)> {
    let (mut k, mut s) = seed;
    for _ in 0..search.newton_max_iter {
        let (f1, f2) = drift((k, s), params).ok()?;
        if f1.hypot(f2) < search.newton_tol {
            return Some((k, s));
        }
        let j = jacobian((k, s), params).ok()?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let step_k = (j[1][1] * f1 - j[0][1] * f2) / det;
        let step_s = (-j[1][0] * f1 + j[0][0] * f2) / det;
        k -= step_k;
        s -= step_s;
        if !(k.is_finite() && s.is_finite()) || k < 0.0 || s < 0.0 {
            return None;
        }
    }
    let (f1, f2) = drift((k, s), params).ok()?;
    (f1.hypot(f2) < search.newton_tol).then_some((k, s))
}
