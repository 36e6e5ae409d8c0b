//! Discretisation of the truncated jump integral on the reference square.
//!
//! Along each axis the integral over `(-1 - v, 1 - v)` is approximated by a
//! trapezoidal sum over grid offsets (half weight on the two end offsets,
//! where the density vanishes) with the singular node removed, plus a
//! second-difference correction weighted by `-zeta(alpha - 1) h^(2 - alpha)`.
//! Jumps that leave the square are accounted for by the killing term
//! `-(gamma / alpha) [(1 + v)^-alpha + (1 - v)^-alpha] P`.

use crate::error::Result;
use crate::scalar::Scalar;
use crate::special::zeta;
use crate::stable::{c_alpha, check_alpha, NoiseSpec};

use super::field::DensityField;
use super::grid::{node, spacing, DomainBox};

/// Per-axis constants of the nonlocal operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisCoefficients<T> {
    pub alpha: T,
    /// `C_alpha (2 eps / L)^alpha`.
    pub gamma: T,
    /// Coefficient of the second difference, `-gamma zeta(alpha - 1) h^(2 - alpha)`.
    pub c_h: T,
}

impl<T: Scalar> AxisCoefficients<T> {
    pub fn new(alpha: T, eps: T, length: T, half: usize) -> Result<Self> {
        check_alpha(alpha)?;
        let scaled = T::lit(2.0) * eps / length;
        let gamma = if scaled == T::zero() { T::zero() } else { c_alpha(alpha)? * scaled.powf(alpha) };
        let z = T::lit(zeta(alpha.to_f64_lossy() - 1.0)?);
        let h: T = spacing(half);
        Ok(Self { alpha, gamma, c_h: -gamma * z * h.powf(T::lit(2.0) - alpha) })
    }

    /// Trapezoid weight of offset `k` for node `i` (end offsets are halved).
    fn weight(i: isize, k: isize, half: usize) -> T {
        let lim = half as isize;
        if k == -lim - i || k == lim - i {
            T::lit(0.5)
        } else {
            T::one()
        }
    }

    fn killing(&self, v: T) -> T {
        let one = T::one();
        self.gamma / self.alpha * ((one + v).powf(-self.alpha) + (one - v).powf(-self.alpha))
    }

    /// Nonlocal operator at node `i` of a line, reading `line(i)` with zero
    /// extension. Direct transcription of the semi-discrete sum.
    pub fn apply_at<F: Fn(isize) -> T>(&self, i: isize, half: usize, line: F) -> T {
        if self.gamma == T::zero() {
            return T::zero();
        }
        let h: T = spacing(half);
        let lim = half as isize;
        let p = line(i);
        let mut acc = -self.killing(node(i, half)) * p;
        acc += self.c_h * (line(i - 1) - T::lit(2.0) * p + line(i + 1)) / (h * h);
        let mut sum = T::zero();
        for k in (-lim - i)..=(lim - i) {
            if k == 0 {
                continue;
            }
            let dist = T::from_isize(k.abs()).unwrap() * h;
            sum += Self::weight(i, k, half) * (line(i + k) - p) / dist.powf(T::one() + self.alpha);
        }
        acc + self.gamma * h * sum
    }

    /// Dense `(2 half - 1)^2` matrix of the 1D operator, row = output node.
    pub fn line_matrix(&self, half: usize) -> Vec<T> {
        let n = 2 * half - 1;
        let mut m = vec![T::zero(); n * n];
        if self.gamma == T::zero() {
            return m;
        }
        let h: T = spacing(half);
        let lim = half as isize;
        let kernel: Vec<T> = (0..=2 * half)
            .map(|k| {
                if k == 0 {
                    T::zero()
                } else {
                    self.gamma * h / (T::from_usize_lossy(k) * h).powf(T::one() + self.alpha)
                }
            })
            .collect();
        let lap = self.c_h / (h * h);
        for r in 0..n {
            let i = r as isize - (lim - 1);
            let mut diag = -self.killing(node(i, half)) - T::lit(2.0) * lap;
            for k in (-lim - i)..=(lim - i) {
                if k == 0 {
                    continue;
                }
                let kv = kernel[k.unsigned_abs()];
                diag -= Self::weight(i, k, half) * kv;
                let col = r as isize + k;
                if col >= 0 && (col as usize) < n {
                    m[r * n + col as usize] += kv;
                }
            }
            if r > 0 {
                m[r * n + r - 1] += lap;
            }
            if r + 1 < n {
                m[r * n + r + 1] += lap;
            }
            m[r * n + r] = diag;
        }
        m
    }
}

/// Nonlocal part of the right-hand side, evaluated node by node from the
/// direct sums. `O(n^3)`; the stepping loop uses the dense form held by
/// [`FpeOperator`](super::FpeOperator).
pub fn nonlocal_rhs<T: Scalar>(
    field: &DensityField<T>,
    noise: &NoiseSpec<T>,
    domain_box: &DomainBox<T>,
) -> Result<Vec<T>> {
    noise.validate()?;
    let half = field.half();
    let ax = AxisCoefficients::new(noise.alpha, noise.eps_k, domain_box.width(), half)?;
    let ay = AxisCoefficients::new(noise.alpha, noise.eps_s, domain_box.height(), half)?;
    let lim = half as isize - 1;
    let mut out = Vec::with_capacity(field.values().len());
    for i in -lim..=lim {
        for j in -lim..=lim {
            let x = ax.apply_at(i, half, |ii| field.get(ii, j));
            let y = ay.apply_at(j, half, |jj| field.get(i, jj));
            out.push(x + y);
        }
    }
    Ok(out)
}
