use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

use super::grid::{node, spacing, DomainBox};

/// Discrete density `P_{i,j}` on the interior nodes of the reference square.
///
/// Values are stored row-major with the `v` index `i` outer and the `w`
/// index `j` inner, both running from `-half + 1` to `half - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField<T> {
    half: usize,
    values: Vec<T>,
    pub time: T,
    total_mass: T,
}

impl<T: Scalar> DensityField<T> {
    pub fn zeros(half: usize, time: T) -> Self {
        let n = 2 * half - 1;
        Self { half, values: vec![T::zero(); n * n], time, total_mass: T::zero() }
    }

    pub fn from_values(half: usize, values: Vec<T>, time: T) -> Result<Self> {
        let n = 2 * half - 1;
        if half < 1 || values.len() != n * n {
            return Err(Error::Format(format!(
                "expected {} values for half-resolution {half}, got {}",
                n * n,
                values.len()
            )));
        }
        let mut f = Self { half, values, time, total_mass: T::zero() };
        f.refresh_mass();
        Ok(f)
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn n(&self) -> usize {
        2 * self.half - 1
    }

    pub fn h(&self) -> T {
        spacing(self.half)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Mutable access; call [`refresh_mass`](Self::refresh_mass) afterwards.
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Reference-square integral `h^2 sum P`.
    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    pub fn refresh_mass(&mut self) {
        let h = self.h();
        self.total_mass = h * h * self.values.iter().copied().sum::<T>();
    }

    /// Flat storage offset of interior node `(i, j)`.
    pub fn offset(&self, i: isize, j: isize) -> Option<usize> {
        let lim = self.half as isize;
        if i.abs() >= lim || j.abs() >= lim {
            return None;
        }
        let n = self.n();
        Some((i + lim - 1) as usize * n + (j + lim - 1) as usize)
    }

    /// `P_{i,j}` with zero outside the interior.
    pub fn get(&self, i: isize, j: isize) -> T {
        self.offset(i, j).map_or(T::zero(), |o| self.values[o])
    }

    pub fn set(&mut self, i: isize, j: isize, value: T) {
        let o = self.offset(i, j).expect("interior index");
        self.values[o] = value;
    }

    /// Signed index pair of a flat offset.
    pub fn index_of(&self, offset: usize) -> (isize, isize) {
        let n = self.n();
        let lim = self.half as isize - 1;
        ((offset / n) as isize - lim, (offset % n) as isize - lim)
    }

    /// Interior maximiser; ties go to the smallest `i`, then smallest `j`.
    pub fn argmax(&self) -> ((isize, isize), T) {
        let mut best = 0;
        for (o, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = o;
            }
        }
        (self.index_of(best), self.values[best])
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn scaled(&self, factor: T) -> Self {
        let values = self.values.iter().map(|&v| v * factor).collect();
        Self::from_values(self.half, values, self.time).expect("same shape")
    }

    /// Reference coordinates of node `(i, j)`.
    pub fn reference_point(&self, i: isize, j: isize) -> (T, T) {
        (node(i, self.half), node(j, self.half))
    }
}

/// Nearest interior node to a reference-square point.
pub fn nearest_node<T: Scalar>((v, w): (T, T), half: usize) -> (isize, isize) {
    let lim = half as isize - 1;
    let scale = T::from_usize_lossy(half);
    let round = |x: T| ((x * scale).round().to_f64_lossy() as isize).clamp(-lim, lim);
    (round(v), round(w))
}

/// Discrete point mass `1 / h^2` at the node nearest to `point`.
pub fn delta_initial<T: Scalar>(point: (T, T), domain_box: &DomainBox<T>, half: usize) -> Result<DensityField<T>> {
    domain_box.validate()?;
    if !domain_box.contains(point) {
        return Err(domain(format!(
            "initial point ({}, {}) must lie strictly inside the domain",
            point.0, point.1
        )));
    }
    let (i, j) = nearest_node(domain_box.to_reference(point), half);
    let mut f = DensityField::zeros(half, T::zero());
    let h = f.h();
    f.set(i, j, T::one() / (h * h));
    f.refresh_mass();
    Ok(f)
}

/// Gaussian bump of standard deviation `std` (reference units) centred on
/// `point`, normalised to unit reference-square mass.
pub fn gaussian_initial<T: Scalar>(
    point: (T, T),
    std: T,
    domain_box: &DomainBox<T>,
    half: usize,
) -> Result<DensityField<T>> {
    domain_box.validate()?;
    if !domain_box.contains(point) {
        return Err(domain("initial point must lie strictly inside the domain"));
    }
    if !(std > T::zero()) {
        return Err(domain("bump width must be positive"));
    }
    let (v0, w0) = domain_box.to_reference(point);
    let mut f = DensityField::zeros(half, T::zero());
    let lim = half as isize - 1;
    let two = T::lit(2.0);
    for i in -lim..=lim {
        for j in -lim..=lim {
            let (v, w) = f.reference_point(i, j);
            let r2 = ((v - v0) * (v - v0) + (w - w0) * (w - w0)) / (two * std * std);
            f.set(i, j, (-r2).exp());
        }
    }
    f.refresh_mass();
    let mass = f.total_mass();
    Ok(f.scaled(T::one() / mass))
}
