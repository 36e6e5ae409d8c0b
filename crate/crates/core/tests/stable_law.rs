use levy_fpe::stable::{c_alpha, jump_density, sample_standard_stable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// alpha, C_alpha at 40 digits
const C_ALPHA_TABLE: [(f64, f64); 20] = [
    (0.05, 0.024312593256155605798),
    (0.15, 0.069332374904158862153),
    (0.25, 0.11041062584210533404),
    (0.35, 0.14821315197251646193),
    (0.45, 0.18308899921866468984),
    (0.55, 0.21514590490605764378),
    (0.65, 0.24429511869581103763),
    (0.75, 0.27027789764008596257),
    (0.85, 0.29268080420247419205),
    (0.95, 0.31094419740481524095),
    (1.05, 0.32436682695905621967),
    (1.15, 0.33210864403533284805),
    (1.25, 0.33319353792264003238),
    (1.35, 0.32651354083638601963),
    (1.45, 0.31083602917797124871),
    (1.55, 0.28481554100207645937),
    (1.65, 0.24701199810462654581),
    (1.75, 0.19591734892136880542),
    (1.85, 0.12999292191707576878),
    (1.95, 0.047720086172791604473),
];

fn draws(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_standard_stable(alpha, &mut rng)).collect()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

fn sorted(mut x: Vec<f64>) -> Vec<f64> {
    x.sort_by(f64::total_cmp);
    x
}

#[test]
fn c_alpha_matches_high_precision_table() {
    for (alpha, want) in C_ALPHA_TABLE {
        let got: f64 = c_alpha(alpha).unwrap();
        assert!((got - want).abs() < 1e-12, "alpha {alpha}: {got} vs {want}");
    }
    assert!((c_alpha(1.0f64).unwrap() - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
}

#[test]
fn cauchy_draws_pass_ks() {
    let x = sorted(draws(1.0, 1_000_000, 11));
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (r, &v) in x.iter().enumerate() {
        let cdf = 0.5 + v.atan() / std::f64::consts::PI;
        d = d.max((cdf - r as f64 / n).abs()).max(((r + 1) as f64 / n - cdf).abs());
    }
    assert!(d < 0.005, "KS statistic {d}");
}

#[test]
fn symmetric_median_at_small_alpha() {
    let x = sorted(draws(0.5, 400_000, 12));
    let m = quantile(&x, 0.5);
    assert!(m.abs() < 0.01, "median {m}");
}

#[test]
fn hill_tail_exponent() {
    let x = sorted(draws(1.5, 1_000_000, 13).into_iter().map(f64::abs).collect());
    let k = 2_000;
    let n = x.len();
    let threshold = x[n - k - 1].ln();
    let hill: f64 = x[n - k..].iter().map(|v| v.ln() - threshold).sum::<f64>() / k as f64;
    let tail = 1.0 / hill;
    assert!((1.35..=1.65).contains(&tail), "tail exponent {tail}");
}

#[test]
fn sums_are_self_similar() {
    // (X1 + X2) / 2^(1/alpha) has the law of X
    for alpha in [0.7, 1.0, 1.5] {
        let raw = draws(alpha, 400_000, 14);
        let single = sorted(raw[..200_000].to_vec());
        let scale = 2f64.powf(1.0 / alpha);
        let paired = sorted(raw[200_000..].chunks(2).map(|c| (c[0] + c[1]) / scale).collect());
        let single = sorted(single.into_iter().step_by(2).collect());
        for q in [0.1, 0.25, 0.75, 0.9] {
            let (a, b) = (quantile(&single, q), quantile(&paired, q));
            assert!((a - b).abs() < 0.03 * a.abs().max(0.3), "alpha {alpha} q {q}: {a} vs {b}");
        }
    }
}

#[test]
fn jump_tail_mass_integrates_to_closed_form() {
    // int_{|x|>r} C_alpha |x|^(-1-alpha) dx = 2 C_alpha r^-alpha / alpha,
    // checked by composite Simpson in log coordinates over [r, r e^40]
    for alpha in [0.5, 1.0, 1.5] {
        let r: f64 = 0.3;
        let n = 20_000;
        let span = 40.0;
        let step = span / n as f64;
        let f = |u: f64| {
            let x = r * u.exp();
            jump_density(x, alpha).unwrap() * x
        };
        let mut acc = f(0.0) + f(span);
        for m in 1..n {
            acc += f(m as f64 * step) * if m % 2 == 1 { 4.0 } else { 2.0 };
        }
        let numeric = 2.0 * acc * step / 3.0;
        let tail_beyond = 2.0 * c_alpha(alpha).unwrap() * (r * span.exp()).powf(-alpha) / alpha;
        let exact = 2.0 * c_alpha(alpha).unwrap() * r.powf(-alpha) / alpha;
        assert!(((numeric + tail_beyond) - exact).abs() < 1e-10 * exact, "alpha {alpha}");
    }
}

#[test]
fn jump_density_rejects_origin() {
    assert!(jump_density(0.0f64, 1.0).is_err());
}
