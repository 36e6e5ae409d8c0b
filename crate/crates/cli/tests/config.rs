use levy_fpe_cli::config::*;
use levy_fpe_cli::presets::{preset, presets, Variant};
use proptest::prelude::*;

fn problems(text: &str) -> Vec<String> {
    parse_config(text).unwrap_err().problems
}

#[test]
fn single_run_requires_alpha() {
    let errs = problems("[experiment]\nkind = \"single-run\"\n[noise]\neps = 0.2\n");
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert!(errs[0].contains("noise.alpha"), "{errs:?}");
}

#[test]
fn defaults_are_the_published_values() {
    let cfg = parse_config("[experiment]\nkind = \"single-run\"\n[noise]\nalpha = 1.0\neps = 0.2\n").unwrap();
    assert_eq!(cfg.kinetics, levy_fpe::KineticParams64::default());
    assert_eq!((cfg.transform.c_k, cfg.transform.c_s), (10.0, 2.0));
    assert_eq!(cfg.initial.point, (0.15262, 4.3148));
    assert_eq!(cfg.analysis.tipping_cap, 30.0);
    assert_eq!(cfg.grid.t_end, 100.0);
}

#[test]
fn alpha_out_of_range_is_named() {
    let errs = problems("[experiment]\nkind = \"single-run\"\n[noise]\nalpha = 2.5\neps = 0.2\n");
    assert!(errs.iter().any(|e| e.contains("alpha must lie in (0,2)")), "{errs:?}");
}

#[test]
fn every_problem_is_listed() {
    let text = "[experiment]\nkind = \"fig7-tipping-sweep\"\ncolour = 3\n\
                [noise]\nalphas = [0.5, 2.0]\n\
                [grid]\nhalf = \"big\"\nt_end = -1\n\
                [kinetics]\nk0 = 0\n\
                [extra]\n";
    let errs = problems(text);
    for needle in [
        "experiment.colour",
        "alpha must lie in (0,2)",
        "noise.epsilons",
        "grid.half",
        "grid.t_end",
        "k0",
        "extra",
    ] {
        assert!(errs.iter().any(|e| e.contains(needle)), "missing {needle}: {errs:?}");
    }
}

#[test]
fn missing_or_unknown_kind() {
    assert!(problems("").iter().any(|e| e.contains("experiment.kind")));
    assert!(problems("[experiment]\nkind = \"fig6\"\n").iter().any(|e| e.contains("unknown kind")));
}

#[test]
fn domain_must_hold_the_equilibria() {
    let errs = problems("[experiment]\nkind = \"single-run\"\n[noise]\nalpha = 1.0\neps = 0.2\n[domain]\nb = 1.2\n");
    assert!(errs.iter().any(|e| e.contains("spiral-sink")), "{errs:?}");
}

#[test]
fn initial_point_inside_domain() {
    let errs = problems("[experiment]\nkind = \"single-run\"\n[noise]\nalpha = 1.0\neps = 0.2\n[initial]\npoint = [5.0, 4.0]\n");
    assert!(errs.iter().any(|e| e.contains("initial.point")), "{errs:?}");
}

#[test]
fn fig3_preset_matches_the_figure() {
    let cfg = preset("fig3").unwrap().config(Variant::Paper);
    assert_eq!(cfg.kind, ExperimentKind::Fig3Snapshots);
    assert_eq!((cfg.noise.alpha, cfg.noise.eps), (Some(0.5), Some(0.25)));
    assert_eq!(cfg.initial.point, (0.15262, 4.3148));
    assert_eq!(cfg.grid.snapshot_times, vec![1.0, 3.0, 6.0, 9.0, 20.0, 100.0]);
    assert_eq!((cfg.grid.half, cfg.grid.t_end), (100, 100.0));
}

#[test]
fn fig7_preset_grid() {
    let cfg = preset("fig7").unwrap().config(Variant::Coarse);
    assert_eq!(cfg.noise.epsilons, vec![0.15, 0.25, 0.4]);
    assert_eq!(cfg.noise.alphas.len(), 8);
    assert_eq!(cfg.grid.half, 50);
}

#[test]
fn presets_validate_and_round_trip() {
    for p in presets() {
        for v in [Variant::Coarse, Variant::Paper] {
            let cfg = p.config(v);
            assert!(validate(&cfg).is_empty(), "{} {:?}: {:?}", p.name, v, validate(&cfg));
            assert_eq!(parse_config(&to_toml(&cfg)).unwrap(), cfg, "{}", p.name);
        }
        let coarse = p.config(Variant::Coarse);
        let paper = p.config(Variant::Paper);
        assert!(coarse.grid.half <= paper.grid.half && coarse.grid.t_end <= paper.grid.t_end);
    }
}

#[test]
fn worker_override_is_parsed() {
    std::env::set_var(levy_fpe_cli::WORKERS_ENV, "3");
    assert_eq!(levy_fpe_cli::workers_from_env().unwrap(), Some(3));
    std::env::set_var(levy_fpe_cli::WORKERS_ENV, "zero");
    assert!(levy_fpe_cli::workers_from_env().is_err());
    std::env::remove_var(levy_fpe_cli::WORKERS_ENV);
    assert_eq!(levy_fpe_cli::workers_from_env().unwrap(), None);
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        prop::sample::select(ExperimentKind::ALL.to_vec()),
        0.05f64..1.95,
        0.0f64..1.0,
        prop::collection::vec(0.05f64..1.95, 1..5),
        prop::collection::vec(0.0f64..1.0, 1..5),
        2usize..200,
        1.0f64..200.0,
        any::<bool>(),
        0u64..1 << 40,
    )
        .prop_map(|(kind, alpha, eps, alphas, epsilons, half, t_end, flag, seed)| {
            let mut cfg = RunConfig::new(kind);
            cfg.seed = seed;
            cfg.noise = NoiseConfig { alpha: Some(alpha), eps: Some(eps), alphas, epsilons };
            cfg.grid.half = half;
            cfg.grid.t_end = t_end;
            cfg.grid.snapshot_times = vec![t_end / 3.0, t_end];
            cfg.analysis.early_exit = flag;
            cfg.montecarlo.compare_fpe = !flag;
            cfg.initial.points = if flag { vec![(0.2, 4.1), (0.1 + eps / 10.0, 4.4)] } else { vec![] };
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialized_configs_parse_back_equal(cfg in arb_config()) {
        prop_assert!(validate(&cfg).is_empty(), "{:?}", validate(&cfg));
        prop_assert_eq!(parse_config(&to_toml(&cfg)).unwrap(), cfg);
    }
}
