//! Ready-made configurations for each figure, in a desk-scale and a full variant.

use std::path::PathBuf;

use crate::config::{ExperimentKind, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Small grid and shortened horizon.
    Coarse,
    /// `I = 100`, `T = 100`.
    Paper,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Coarse => "coarse",
            Self::Paper => "paper",
        }
    }
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn(Variant) -> RunConfig,
}

impl Preset {
    pub fn config(&self, variant: Variant) -> RunConfig {
        let mut cfg = (self.build)(variant);
        cfg.output = PathBuf::from(format!("out/{}-{}", self.name, variant.name()));
        cfg
    }
}

fn base(kind: ExperimentKind, v: Variant, coarse: (usize, f64)) -> RunConfig {
    let mut cfg = RunConfig::new(kind);
    (cfg.grid.half, cfg.grid.t_end) = match v {
        Variant::Coarse => coarse,
        Variant::Paper => (100, 100.0),
    };
    cfg
}

fn fig2(v: Variant) -> RunConfig {
    let mut cfg = base(ExperimentKind::McCrosscheck, v, (25, 20.0));
    cfg.noise.alpha = Some(1.5);
    cfg.noise.eps = Some(0.15);
    cfg.montecarlo.n_paths = 5;
    cfg.montecarlo.record_every = 100;
    cfg.montecarlo.compare_fpe = false;
    cfg.seed = 2;
    cfg
}

fn fig3(v: Variant) -> RunConfig {
    let mut cfg = base(ExperimentKind::Fig3Snapshots, v, (25, 20.0));
    cfg.noise.alpha = Some(0.5);
    cfg.noise.eps = Some(0.25);
    cfg.grid.snapshot_times = [1.0, 3.0, 6.0, 9.0, 20.0, 100.0].into_iter().filter(|&t| t <= cfg.grid.t_end).collect();
    cfg
}

fn fig4(v: Variant) -> RunConfig {
    let mut cfg = base(ExperimentKind::Fig4Trajectories, v, (25, 50.0));
    cfg.noise.alphas = vec![0.25, 0.5, 1.0, 1.5];
    cfg.noise.epsilons = vec![0.1, 0.15, 0.25, 0.4];
    cfg
}

fn fig5(v: Variant) -> RunConfig {
    let mut cfg = base(ExperimentKind::Fig5PhaseDiagram, v, (25, 50.0));
    cfg.noise.alphas = vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75];
    cfg.noise.epsilons = vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4];
    cfg.analysis.early_exit = true;
    cfg
}

fn fig7(v: Variant) -> RunConfig {
    let mut cfg = base(ExperimentKind::Fig7TippingSweep, v, (50, 30.0));
    cfg.noise.alphas = vec![0.25, 0.5, 0.8, 1.0, 1.2, 1.5, 1.8, 1.95];
    cfg.noise.epsilons = vec![0.15, 0.25, 0.4];
    cfg.analysis.early_exit = true;
    cfg
}

fn fig8(v: Variant) -> RunConfig {
    let mut cfg = base(ExperimentKind::Fig8InitialConditions, v, (25, 50.0));
    cfg.noise.alpha = Some(1.0);
    cfg.noise.eps = Some(0.3);
    cfg
}

fn fig9(v: Variant) -> RunConfig {
    let mut cfg = base(ExperimentKind::Fig9DistanceSweep, v, (25, 60.0));
    cfg.noise.alphas = vec![1.0, 1.25, 1.5, 1.75, 1.85];
    cfg.noise.epsilons = vec![0.15, 0.2, 0.25];
    cfg
}

fn mc(v: Variant) -> RunConfig {
    let mut cfg = RunConfig::new(ExperimentKind::McCrosscheck);
    cfg.noise.alpha = Some(1.0);
    cfg.noise.eps = Some(0.25);
    cfg.grid.t_end = 3.0;
    (cfg.grid.half, cfg.montecarlo.n_paths) = match v {
        Variant::Coarse => (25, 100_000),
        Variant::Paper => (50, 1_000_000),
    };
    cfg.seed = 6;
    cfg
}

static PRESETS: [Preset; 8] = [
    Preset { name: "fig2", description: "sample SDE trajectories, alpha 1.5, eps 0.15", build: fig2 },
    Preset { name: "fig3", description: "density snapshots, alpha 0.5, eps 0.25", build: fig3 },
    Preset { name: "fig4", description: "most probable trajectories over alpha x eps", build: fig4 },
    Preset { name: "fig5", description: "L-L / L-H phase diagram", build: fig5 },
    Preset { name: "fig7", description: "tipping time against alpha and eps", build: fig7 },
    Preset { name: "fig8", description: "nine starts around the nodal sink, alpha 1, eps 0.3", build: fig8 },
    Preset { name: "fig9", description: "distance from the metastable to the competence state", build: fig9 },
    Preset { name: "mc", description: "Monte Carlo against the density, alpha 1, eps 0.25, T 3", build: mc },
];

pub fn presets() -> &'static [Preset] {
    &PRESETS
}

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
