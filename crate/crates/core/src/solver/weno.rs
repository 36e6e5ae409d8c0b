//! Third-order WENO reconstruction with global Lax-Friedrichs flux splitting.

use crate::scalar::Scalar;

/// Regularisation of the smoothness indicators.
pub const WENO_EPS: f64 = 1e-6;

#[inline]
fn nonlinear_average<T: Scalar>(q0: T, q1: T, beta0: T, beta1: T, eps: T) -> T {
    let d0 = T::one() / T::lit(3.0);
    let d1 = T::lit(2.0) / T::lit(3.0);
    let a0 = d0 / ((eps + beta0) * (eps + beta0));
    let a1 = d1 / ((eps + beta1) * (eps + beta1));
    (a0 * q0 + a1 * q1) / (a0 + a1)
}

/// Left-biased reconstruction at `j + 1/2` from `g_{j-1}, g_j, g_{j+1}`.
#[inline]
pub fn reconstruct_plus<T: Scalar>(gm1: T, g0: T, gp1: T, eps: T) -> T {
    let half = T::lit(0.5);
    let q0 = -half * gm1 + T::lit(1.5) * g0;
    let q1 = half * g0 + half * gp1;
    nonlinear_average(q0, q1, (g0 - gm1) * (g0 - gm1), (gp1 - g0) * (gp1 - g0), eps)
}

/// Right-biased reconstruction at `j + 1/2` from `g_j, g_{j+1}, g_{j+2}`.
#[inline]
pub fn reconstruct_minus<T: Scalar>(g0: T, gp1: T, gp2: T, eps: T) -> T {
    reconstruct_plus(gp2, gp1, g0, eps)
}

/// Scratch space for [`flux_derivative_line`].
#[derive(Debug, Default)]
pub struct LineScratch<T> {
    plus: Vec<T>,
    minus: Vec<T>,
    iface: Vec<T>,
}

/// Approximates `d(f P)/dx` along one grid line.
///
/// `velocity` and `density` hold the line's interior values; two ghost nodes
/// of zero density are appended on either side. `lf_speed` is the global
/// splitting speed and `h` the node spacing. Results are written to `out`.
pub fn flux_derivative_line<T: Scalar>(
    velocity: &[T],
    density: &[T],
    lf_speed: T,
    h: T,
    eps: T,
    scratch: &mut LineScratch<T>,
    out: &mut [T],
) {
    let n = density.len();
    debug_assert_eq!(velocity.len(), n);
    debug_assert_eq!(out.len(), n);
    let half = T::lit(0.5);
    scratch.plus.clear();
    scratch.minus.clear();
    scratch.plus.resize(n + 4, T::zero());
    scratch.minus.resize(n + 4, T::zero());
    for l in 0..n {
        let flux = velocity[l] * density[l];
        let diss = lf_speed * density[l];
        scratch.plus[l + 2] = half * (flux + diss);
        scratch.minus[l + 2] = half * (flux - diss);
    }
    // interface between extended nodes k and k+1, k = 1..=n+1
    scratch.iface.clear();
    scratch.iface.resize(n + 1, T::zero());
    let (gp, gm) = (&scratch.plus, &scratch.minus);
    for (slot, k) in scratch.iface.iter_mut().zip(1..=n + 1) {
        *slot = reconstruct_plus(gp[k - 1], gp[k], gp[k + 1], eps)
            + reconstruct_minus(gm[k], gm[k + 1], gm[k + 2], eps);
    }
    let inv_h = T::one() / h;
    for l in 0..n {
        out[l] = (scratch.iface[l + 1] - scratch.iface[l]) * inv_h;
    }
}
