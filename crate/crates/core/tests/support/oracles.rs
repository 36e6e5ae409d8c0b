//! Oracles shared by the convergence tests and the acceptance suite.
#![allow(dead_code)]

use levy_fpe::solver::weno::{flux_derivative_line, LineScratch, WENO_EPS};
use levy_fpe::solver::*;
use levy_fpe::NoiseSpec64;

pub fn order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}


/// Transport of a smooth bump at unit speed on (-1, 1); returns the L1 error at `t_end`.
pub fn weno_transport_error(half: usize, amplitude: f64, t_end: f64) -> f64 {
    let h = 1.0 / half as f64;
    let n = 2 * half - 1;
    let xs: Vec<f64> = (0..n).map(|l| (l as f64 - (half as f64 - 1.0)) * h).collect();
    let bump = |x: f64| amplitude * (-(x / 0.2).powi(2)).exp();
    let x0 = -0.25;
    let mut u: Vec<f64> = xs.iter().map(|&x| bump(x - x0)).collect();
    let vel = vec![1.0; n];
    let steps = (t_end / (0.05 * h)).ceil() as usize;
    let dt = t_end / steps as f64;
    let mut rk = Rk3::new();
    let mut scratch = LineScratch::default();
    for _ in 0..steps {
        rk.step(&mut u, dt, |p, out| {
            flux_derivative_line(&vel, p, 1.0, h, WENO_EPS, &mut scratch, out);
            out.iter_mut().for_each(|o| *o = -*o);
        })
        .unwrap();
    }
    xs.iter().zip(&u).map(|(&x, &v)| (v - bump(x - x0 - t_end)).abs() * h).sum::<f64>() / amplitude
}


// (1 - v^2)^4 as a polynomial, coefficients of v^0..v^8
const POLY: [f64; 9] = [1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0];

fn poly_eval(c: &[f64], v: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * v + a)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(m, &a)| a * m as f64).collect()
}

fn bump(v: f64) -> f64 {
    if v.abs() >= 1.0 {
        0.0
    } else {
        poly_eval(&POLY, v)
    }
}

/// `u(v + y) + u(v - y) - 2 u(v)` without cancellation while both points
/// stay inside the support.
fn second_symmetric_difference(v: f64, y: f64) -> f64 {
    if y < 1.0 - v.abs() {
        let mut c = POLY.to_vec();
        let mut acc = 0.0;
        let mut fact = 1.0;
        for m in 1..=8 {
            c = poly_deriv(&c);
            fact *= m as f64;
            if m % 2 == 0 {
                acc += 2.0 * poly_eval(&c, v) * y.powi(m as i32) / fact;
            }
        }
        acc
    } else {
        bump(v + y) + bump(v - y) - 2.0 * bump(v)
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `PV int (u(v + y) - u(v)) |y|^(-1-alpha) dy` over the real line for the
/// zero-extended bump, via y = t^2 and symmetric singularity subtraction.
fn exact_operator(v: f64, alpha: f64) -> f64 {
    let reach = 1.0 + v.abs();
    let integrand = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let y = t * t;
        2.0 * second_symmetric_difference(v, y) * t.powf(-1.0 - 2.0 * alpha)
    };
    let mut breaks = vec![0.0, (1.0 - v.abs()).sqrt(), reach.sqrt()];
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += adaptive_simpson(&integrand, w[0], w[1], 1e-13);
    }
    total - 2.0 * bump(v) * reach.powf(-alpha) / alpha
}

pub fn nonlocal_error(alpha: f64, half: usize) -> f64 {
    // gamma = 1 when 2 eps / L = C_alpha^(-1/alpha) with L = 2
    let c = levy_fpe::stable::c_alpha(alpha).unwrap();
    let eps = c.powf(-1.0 / alpha);
    let ax = AxisCoefficients::new(alpha, eps, 2.0, half).unwrap();
    assert!((ax.gamma - 1.0).abs() < 1e-12);
    let h = 1.0 / half as f64;
    let lim = half as isize;
    let mut err = 0.0;
    for i in (1 - lim)..lim {
        let got = ax.apply_at(i, half, |m| if m.abs() < lim { bump(m as f64 * h) } else { 0.0 });
        err += (got - exact_operator(i as f64 * h, alpha)).abs() * h;
    }
    err
}


/// Density of the k-marginal after free Cauchy spreading, compared with the
/// analytic law of scale `(2 eps / L) t` in reference coordinates.
pub fn free_cauchy_errors(half: usize, eps: f64, t_end: f64) -> (f64, f64) {
    let dom = DomainBox::new(-1.0, 1.0, -1.0, 1.0).unwrap();
    let noise = NoiseSpec64::new(1.0, eps, 0.0).unwrap();
    let op = FpeOperator::new(&ZeroDrift, noise, dom, half).unwrap();
    let grid = GridSpec::new(half, op.stable_dt(0.5), t_end, usize::MAX).unwrap();
    let res = solve(delta_initial((0.0, 0.0), &dom, half).unwrap(), &op, &grid).unwrap();
    let last = res.snapshots.last().unwrap();
    let h = last.h();
    let scale = 2.0 * eps / dom.width() * t_end;
    let cauchy = |v: f64| scale / (std::f64::consts::PI * (scale * scale + v * v));
    let lim = half as isize;
    let mut l1 = 0.0;
    for i in (1 - lim)..lim {
        l1 += (last.get(i, 0) * h - cauchy(i as f64 * h)).abs() * h;
    }
    let mode = (last.get(0, 0) * h - cauchy(0.0)).abs() / cauchy(0.0);
    (mode, l1)
}
