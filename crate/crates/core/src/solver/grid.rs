use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Physical rectangle `(a, b) x (c, d)` on which the density is supported.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainBox<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Default for DomainBox<T> {
    /// `(0, 3) x (2, 7)` in scaled MeKS coordinates.
    fn default() -> Self {
        Self { a: T::zero(), b: T::lit(3.0), c: T::lit(2.0), d: T::lit(7.0) }
    }
}

impl<T: Scalar> DomainBox<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let bx = Self { a, b, c, d };
        bx.validate()?;
        Ok(bx)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.c, self.d].iter().all(|x| x.is_finite());
        if !finite || self.a >= self.b || self.c >= self.d {
            return Err(domain(format!(
                "domain box needs a < b and c < d, got ({}, {}) x ({}, {})",
                self.a, self.b, self.c, self.d
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> T {
        self.b - self.a
    }

    pub fn height(&self) -> T {
        self.d - self.c
    }

    pub fn contains(&self, (k, s): (T, T)) -> bool {
        k > self.a && k < self.b && s > self.c && s < self.d
    }

    /// Affine map onto the reference square `(-1, 1)^2`.
    pub fn to_reference(&self, (k, s): (T, T)) -> (T, T) {
        let two = T::lit(2.0);
        (two * (k - self.a) / self.width() - T::one(), two * (s - self.c) / self.height() - T::one())
    }

    pub fn from_reference(&self, (v, w): (T, T)) -> (T, T) {
        let two = T::lit(2.0);
        (self.width() / two * (v + T::one()) + self.a, self.height() / two * (w + T::one()) + self.c)
    }
}

/// Spatial resolution and time stepping of a run.
///
/// Nodes sit at `v_i = i h`, `h = 1 / half`; interior indices run over
/// `-half < i < half` and values at `|i| >= half` are zero by convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub half: usize,
    pub dt: T,
    pub t_end: T,
    pub record_stride: usize,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(half: usize, dt: T, t_end: T, record_stride: usize) -> Result<Self> {
        let g = Self { half, dt, t_end, record_stride };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.half < 2 {
            return Err(Error::Config(format!("grid half-resolution must be >= 2, got {}", self.half)));
        }
        if !(self.dt.is_finite() && self.dt > T::zero()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > T::zero()) {
            return Err(Error::Config(format!("terminal time must be positive, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn h(&self) -> T {
        spacing(self.half)
    }

    /// Number of interior nodes per axis, `2 half - 1`.
    pub fn n(&self) -> usize {
        2 * self.half - 1
    }

    /// Steps needed to reach `t_end`; the last one may be shortened.
    pub fn n_steps(&self) -> usize {
        let raw = (self.t_end / self.dt).to_f64_lossy();
        let n = raw.ceil() as usize;
        // absorb rounding noise such as 1.0000000002 steps
        if n > 1 && (raw - (n - 1) as f64) < 1e-9 {
            n - 1
        } else {
            n.max(1)
        }
    }
}

pub(crate) fn spacing<T: Scalar>(half: usize) -> T {
    T::one() / T::from_usize_lossy(half)
}

/// Reference coordinate of interior index `i`.
pub fn node<T: Scalar>(i: isize, half: usize) -> T {
    T::from_isize(i).unwrap() * spacing::<T>(half)
}
