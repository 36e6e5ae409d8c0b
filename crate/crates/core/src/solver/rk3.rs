//! Three-stage TVD Runge-Kutta (Shu-Osher form).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reusable stage buffers for [`Rk3::step`].
#[derive(Debug, Default)]
pub struct Rk3<T> {
    rate: Vec<T>,
    stage1: Vec<T>,
    stage2: Vec<T>,
}

impl<T: Scalar> Rk3<T> {
    pub fn new() -> Self {
        Self { rate: Vec::new(), stage1: Vec::new(), stage2: Vec::new() }
    }

    /// Advances `state` by `dt` in place:
    ///
    /// ```text
    /// P1 = P + dt R(P)
    /// P2 = 3/4 P + 1/4 P1 + 1/4 dt R(P1)
    /// P' = 1/3 P + 2/3 P2 + 2/3 dt R(P2)
    /// ```
    ///
    /// `rhs(x, out)` must overwrite `out` with `R(x)`. On non-finite output
    /// `state` is left untouched and [`Error::NonFinite`] is returned with
    /// `step = 0`; callers fill in the step index.
    pub fn step<F>(&mut self, state: &mut [T], dt: T, mut rhs: F) -> Result<()>
    where
        F: FnMut(&[T], &mut [T]),
    {
        let n = state.len();
        self.rate.resize(n, T::zero());
        self.stage1.resize(n, T::zero());
        self.stage2.resize(n, T::zero());
        let (q3, q4) = (T::lit(0.75), T::lit(0.25));
        let (t1, t2) = (T::one() / T::lit(3.0), T::lit(2.0) / T::lit(3.0));

        rhs(state, &mut self.rate);
        for ((s1, &p), &r) in self.stage1.iter_mut().zip(state.iter()).zip(&self.rate) {
            *s1 = p + dt * r;
        }
        rhs(&self.stage1, &mut self.rate);
        for (((s2, &p), &s1), &r) in self.stage2.iter_mut().zip(state.iter()).zip(&self.stage1).zip(&self.rate) {
            *s2 = q3 * p + q4 * s1 + q4 * dt * r;
        }
        rhs(&self.stage2, &mut self.rate);
        let mut max_abs = T::zero();
        let mut finite = true;
        for (((next, &p), &s2), &r) in self.stage1.iter_mut().zip(state.iter()).zip(&self.stage2).zip(&self.rate) {
            *next = t1 * p + t2 * s2 + t2 * dt * r;
            finite &= next.is_finite();
            max_abs = max_abs.max(next.abs());
        }
        if !finite {
            return Err(Error::NonFinite { step: 0, max_abs: max_abs.to_f64_lossy() });
        }
        state.copy_from_slice(&self.stage1);
        Ok(())
    }
}

/// One RK3 step of `state` without retained buffers.
pub fn rk3_step<T: Scalar, F: FnMut(&[T], &mut [T])>(state: &[T], dt: T, rhs: F) -> Result<Vec<T>> {
    let mut next = state.to_vec();
    Rk3::new().step(&mut next, dt, rhs)?;
    Ok(next)
}
