//! Run configuration: a TOML document with one table per module.
//!
//! ```toml
//! [experiment]
//! kind = "fig7-tipping-sweep"
//! output = "out/fig7"
//! seed = 1
//!
//! [kinetics]          # a_k b_k b_s k0 k1 n p
//! [transform]         # c_k c_s
//! [noise]             # alpha eps | alphas epsilons
//! [domain]            # a b c d
//! [grid]              # half t_end record_interval c_stab snapshot_times
//! [initial]           # point | points | ring_radius ring_count
//! [analysis]          # tipping_cap early_exit refine_argmax
//! [montecarlo]        # n_paths dt record_every compare_fpe
//! ```
//!
//! Parsing reports every problem at once. Unknown tables and keys are errors.

use std::fmt;
use std::path::PathBuf;

use levy_fpe::analysis::{DEFAULT_TIPPING_CAP, LOW_STATE};
use levy_fpe::kinetics::find_equilibria;
use levy_fpe::solver::DEFAULT_C_STAB;
use levy_fpe::{DomainBox64, KineticParams64, ScaleTransform64};
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    SingleRun,
    Fig3Snapshots,
    Fig4Trajectories,
    Fig7TippingSweep,
    Fig5PhaseDiagram,
    Fig8InitialConditions,
    Fig9DistanceSweep,
    McCrosscheck,
}

impl ExperimentKind {
    pub const ALL: [Self; 8] = [
        Self::SingleRun,
        Self::Fig3Snapshots,
        Self::Fig4Trajectories,
        Self::Fig7TippingSweep,
        Self::Fig5PhaseDiagram,
        Self::Fig8InitialConditions,
        Self::Fig9DistanceSweep,
        Self::McCrosscheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SingleRun => "single-run",
            Self::Fig3Snapshots => "fig3-snapshots",
            Self::Fig4Trajectories => "fig4-trajectories",
            Self::Fig7TippingSweep => "fig7-tipping-sweep",
            Self::Fig5PhaseDiagram => "fig5-phase-diagram",
            Self::Fig8InitialConditions => "fig8-initial-conditions",
            Self::Fig9DistanceSweep => "fig9-distance-sweep",
            Self::McCrosscheck => "mc-crosscheck",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Kinds that run a Cartesian `(alpha, eps)` sweep.
    pub fn is_sweep(self) -> bool {
        matches!(
            self,
            Self::Fig4Trajectories | Self::Fig7TippingSweep | Self::Fig5PhaseDiagram | Self::Fig9DistanceSweep
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct NoiseConfig {
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub half: usize,
    pub t_end: f64,
    /// Time between recorded path points.
    pub record_interval: f64,
    pub c_stab: f64,
    /// Times at which full density snapshots are written.
    pub snapshot_times: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half: 25, t_end: 100.0, record_interval: 0.05, c_stab: DEFAULT_C_STAB, snapshot_times: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialConfig {
    pub point: (f64, f64),
    /// Explicit starting points for `fig8-initial-conditions`; a ring around
    /// `point` is used when empty.
    pub points: Vec<(f64, f64)>,
    pub ring_radius: f64,
    pub ring_count: usize,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { point: LOW_STATE, points: Vec::new(), ring_radius: 0.1, ring_count: 9 }
    }
}

impl InitialConfig {
    /// Starting points of a multi-start run.
    pub fn starts(&self) -> Vec<(f64, f64)> {
        if !self.points.is_empty() {
            return self.points.clone();
        }
        (0..self.ring_count)
            .map(|m| {
                let theta = 2.0 * std::f64::consts::PI * m as f64 / self.ring_count as f64;
                (self.point.0 + self.ring_radius * theta.cos(), self.point.1 + self.ring_radius * theta.sin())
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub tipping_cap: f64,
    pub early_exit: bool,
    pub refine_argmax: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { tipping_cap: DEFAULT_TIPPING_CAP, early_exit: false, refine_argmax: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloConfig {
    pub n_paths: usize,
    pub dt: f64,
    /// Store every n-th state of each path; 0 stores none.
    pub record_every: usize,
    pub compare_fpe: bool,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, dt: 1e-3, record_every: 0, compare_fpe: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub output: PathBuf,
    pub seed: u64,
    pub kinetics: KineticParams64,
    pub transform: ScaleTransform64,
    pub noise: NoiseConfig,
    pub domain: DomainBox64,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    pub analysis: AnalysisConfig,
    pub montecarlo: MonteCarloConfig,
}

impl RunConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            output: PathBuf::from("levy-fpe-out"),
            seed: 0,
            kinetics: KineticParams64::default(),
            transform: ScaleTransform64::default(),
            noise: NoiseConfig::default(),
            domain: DomainBox64::default(),
            grid: GridConfig::default(),
            initial: InitialConfig::default(),
            analysis: AnalysisConfig::default(),
            montecarlo: MonteCarloConfig::default(),
        }
    }
}

/// Every problem found in a config document.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid config ({} problem{}):", self.problems.len(), if self.problems.len() == 1 { "" } else { "s" })?;
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

struct Section {
    name: &'static str,
    table: Table,
}

impl Section {
    fn take(root: &mut Table, name: &'static str, errs: &mut Vec<String>) -> Self {
        let table = match root.remove(name) {
            None => Table::new(),
            Some(Value::Table(t)) => t,
            Some(_) => {
                errs.push(format!("`{name}` must be a table"));
                Table::new()
            }
        };
        Self { name, table }
    }

    fn raw(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn mismatch(&self, key: &str, want: &str, errs: &mut Vec<String>) {
        errs.push(format!("`{}.{key}`: expected {want}", self.name));
    }

    fn opt_f64(&mut self, key: &str, errs: &mut Vec<String>) -> Option<f64> {
        let v = self.raw(key)?;
        let out = as_f64(&v);
        if out.is_none() {
            self.mismatch(key, "a number", errs);
        }
        out
    }

    fn f64(&mut self, key: &str, default: f64, errs: &mut Vec<String>) -> f64 {
        self.opt_f64(key, errs).unwrap_or(default)
    }

    fn int(&mut self, key: &str, default: u64, errs: &mut Vec<String>) -> u64 {
        match self.raw(key) {
            None => default,
            Some(Value::Integer(i)) if i >= 0 => i as u64,
            Some(_) => {
                self.mismatch(key, "a non-negative integer", errs);
                default
            }
        }
    }

    fn bool(&mut self, key: &str, default: bool, errs: &mut Vec<String>) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(_) => {
                self.mismatch(key, "true or false", errs);
                default
            }
        }
    }

    fn string(&mut self, key: &str, errs: &mut Vec<String>) -> Option<String> {
        match self.raw(key)? {
            Value::String(s) => Some(s),
            _ => {
                self.mismatch(key, "a string", errs);
                None
            }
        }
    }

    fn f64_list(&mut self, key: &str, errs: &mut Vec<String>) -> Vec<f64> {
        let Some(v) = self.raw(key) else { return Vec::new() };
        match v.as_array().and_then(|a| a.iter().map(as_f64).collect::<Option<Vec<_>>>()) {
            Some(xs) => xs,
            None => {
                self.mismatch(key, "an array of numbers", errs);
                Vec::new()
            }
        }
    }

    fn point(&mut self, key: &str, default: (f64, f64), errs: &mut Vec<String>) -> (f64, f64) {
        let Some(v) = self.raw(key) else { return default };
        match as_point(&v) {
            Some(p) => p,
            None => {
                self.mismatch(key, "a pair [k, s]", errs);
                default
            }
        }
    }

    fn point_list(&mut self, key: &str, errs: &mut Vec<String>) -> Vec<(f64, f64)> {
        let Some(v) = self.raw(key) else { return Vec::new() };
        match v.as_array().and_then(|a| a.iter().map(as_point).collect::<Option<Vec<_>>>()) {
            Some(ps) => ps,
            None => {
                self.mismatch(key, "an array of pairs [k, s]", errs);
                Vec::new()
            }
        }
    }

    fn finish(self, errs: &mut Vec<String>) {
        for key in self.table.keys() {
            errs.push(format!("unknown key `{}.{key}`", self.name));
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_point(v: &Value) -> Option<(f64, f64)> {
    match v.as_array()?.as_slice() {
        [k, s] => Some((as_f64(k)?, as_f64(s)?)),
        _ => None,
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut root: Table =
        text.parse().map_err(|e: toml::de::Error| ConfigError { problems: vec![format!("syntax: {}", e.message())] })?;
    let mut errs = Vec::new();

    let mut exp = Section::take(&mut root, "experiment", &mut errs);
    let kind = match exp.string("kind", &mut errs) {
        Some(s) => ExperimentKind::parse(&s).or_else(|| {
            let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            errs.push(format!("`experiment.kind`: unknown kind `{s}` (one of {})", names.join(", ")));
            None
        }),
        None => {
            errs.push("`experiment.kind` is required".into());
            None
        }
    };
    let mut cfg = RunConfig::new(kind.unwrap_or(ExperimentKind::SingleRun));
    if let Some(out) = exp.string("output", &mut errs) {
        cfg.output = PathBuf::from(out);
    }
    cfg.seed = exp.int("seed", 0, &mut errs);
    exp.finish(&mut errs);

    let mut kin = Section::take(&mut root, "kinetics", &mut errs);
    let d = cfg.kinetics;
    cfg.kinetics.a_k = kin.f64("a_k", d.a_k, &mut errs);
    cfg.kinetics.b_k = kin.f64("b_k", d.b_k, &mut errs);
    cfg.kinetics.b_s = kin.f64("b_s", d.b_s, &mut errs);
    cfg.kinetics.k0 = kin.f64("k0", d.k0, &mut errs);
    cfg.kinetics.k1 = kin.f64("k1", d.k1, &mut errs);
    cfg.kinetics.n = kin.int("n", d.n as u64, &mut errs).try_into().unwrap_or(u32::MAX);
    cfg.kinetics.p = kin.int("p", d.p as u64, &mut errs).try_into().unwrap_or(u32::MAX);
    kin.finish(&mut errs);

    let mut tr = Section::take(&mut root, "transform", &mut errs);
    cfg.transform.c_k = tr.f64("c_k", cfg.transform.c_k, &mut errs);
    cfg.transform.c_s = tr.f64("c_s", cfg.transform.c_s, &mut errs);
    tr.finish(&mut errs);

    let mut noise = Section::take(&mut root, "noise", &mut errs);
    cfg.noise.alpha = noise.opt_f64("alpha", &mut errs);
    cfg.noise.eps = noise.opt_f64("eps", &mut errs);
    cfg.noise.alphas = noise.f64_list("alphas", &mut errs);
    cfg.noise.epsilons = noise.f64_list("epsilons", &mut errs);
    noise.finish(&mut errs);

    let mut dom = Section::take(&mut root, "domain", &mut errs);
    cfg.domain.a = dom.f64("a", cfg.domain.a, &mut errs);
    cfg.domain.b = dom.f64("b", cfg.domain.b, &mut errs);
    cfg.domain.c = dom.f64("c", cfg.domain.c, &mut errs);
    cfg.domain.d = dom.f64("d", cfg.domain.d, &mut errs);
    dom.finish(&mut errs);

    let mut grid = Section::take(&mut root, "grid", &mut errs);
    cfg.grid.half = grid.int("half", cfg.grid.half as u64, &mut errs) as usize;
    cfg.grid.t_end = grid.f64("t_end", cfg.grid.t_end, &mut errs);
    cfg.grid.record_interval = grid.f64("record_interval", cfg.grid.record_interval, &mut errs);
    cfg.grid.c_stab = grid.f64("c_stab", cfg.grid.c_stab, &mut errs);
    cfg.grid.snapshot_times = grid.f64_list("snapshot_times", &mut errs);
    grid.finish(&mut errs);

    let mut init = Section::take(&mut root, "initial", &mut errs);
    cfg.initial.point = init.point("point", cfg.initial.point, &mut errs);
    cfg.initial.points = init.point_list("points", &mut errs);
    cfg.initial.ring_radius = init.f64("ring_radius", cfg.initial.ring_radius, &mut errs);
    cfg.initial.ring_count = init.int("ring_count", cfg.initial.ring_count as u64, &mut errs) as usize;
    init.finish(&mut errs);

    let mut an = Section::take(&mut root, "analysis", &mut errs);
    cfg.analysis.tipping_cap = an.f64("tipping_cap", cfg.analysis.tipping_cap, &mut errs);
    cfg.analysis.early_exit = an.bool("early_exit", cfg.analysis.early_exit, &mut errs);
    cfg.analysis.refine_argmax = an.bool("refine_argmax", cfg.analysis.refine_argmax, &mut errs);
    an.finish(&mut errs);

    let mut mc = Section::take(&mut root, "montecarlo", &mut errs);
    cfg.montecarlo.n_paths = mc.int("n_paths", cfg.montecarlo.n_paths as u64, &mut errs) as usize;
    cfg.montecarlo.dt = mc.f64("dt", cfg.montecarlo.dt, &mut errs);
    cfg.montecarlo.record_every = mc.int("record_every", cfg.montecarlo.record_every as u64, &mut errs) as usize;
    cfg.montecarlo.compare_fpe = mc.bool("compare_fpe", cfg.montecarlo.compare_fpe, &mut errs);
    mc.finish(&mut errs);

    for key in root.keys() {
        errs.push(format!("unknown table or key `{key}`"));
    }

    if kind.is_some() {
        errs.extend(validate(&cfg));
    }
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { problems: errs })
    }
}

/// Checks every invariant and the fields the experiment kind requires.
pub fn validate(cfg: &RunConfig) -> Vec<String> {
    let mut errs = Vec::new();
    if let Err(e) = cfg.kinetics.validate() {
        errs.push(format!("kinetics: {e}"));
    }
    if let Err(e) = cfg.transform.validate() {
        errs.push(format!("transform: {e}"));
    }
    let domain_ok = cfg.domain.validate().map_err(|e| errs.push(format!("domain: {e}"))).is_ok();
    if cfg.seed > i64::MAX as u64 {
        errs.push("`experiment.seed` must be <= 2^63 - 1".into());
    }

    let check_alpha = |a: f64, key: &str, errs: &mut Vec<String>| {
        if !(a > 0.0 && a < 2.0) {
            errs.push(format!("`{key}`: alpha must lie in (0,2), got {a}"));
        }
    };
    let check_eps = |e: f64, key: &str, errs: &mut Vec<String>| {
        if !(e.is_finite() && e >= 0.0) {
            errs.push(format!("`{key}`: noise intensity must be finite and >= 0, got {e}"));
        }
    };
    if let Some(a) = cfg.noise.alpha {
        check_alpha(a, "noise.alpha", &mut errs);
    }
    if let Some(e) = cfg.noise.eps {
        check_eps(e, "noise.eps", &mut errs);
    }
    for &a in &cfg.noise.alphas {
        check_alpha(a, "noise.alphas", &mut errs);
    }
    for &e in &cfg.noise.epsilons {
        check_eps(e, "noise.epsilons", &mut errs);
    }

    let g = &cfg.grid;
    if g.half < 2 {
        errs.push(format!("`grid.half` must be >= 2, got {}", g.half));
    }
    if !(g.t_end.is_finite() && g.t_end > 0.0) {
        errs.push(format!("`grid.t_end` must be > 0, got {}", g.t_end));
    }
    if !(g.record_interval > 0.0 && g.record_interval <= g.t_end) {
        errs.push(format!("`grid.record_interval` must lie in (0, t_end], got {}", g.record_interval));
    }
    if !(g.c_stab > 0.0 && g.c_stab <= 1.0) {
        errs.push(format!("`grid.c_stab` must lie in (0, 1], got {}", g.c_stab));
    }
    if g.snapshot_times.iter().any(|&t| !(0.0..=g.t_end).contains(&t)) {
        errs.push("`grid.snapshot_times` must lie in [0, t_end]".into());
    }
    if !(cfg.analysis.tipping_cap > 0.0) {
        errs.push("`analysis.tipping_cap` must be > 0".into());
    }

    if domain_ok {
        if !cfg.domain.contains(cfg.initial.point) {
            errs.push(format!("`initial.point` {:?} lies outside the domain box", cfg.initial.point));
        }
        if cfg.kind == ExperimentKind::Fig8InitialConditions {
            if cfg.initial.points.is_empty() && (cfg.initial.ring_count == 0 || !(cfg.initial.ring_radius > 0.0)) {
                errs.push("`initial.ring_count` and `initial.ring_radius` must be positive".into());
            }
            if cfg.initial.starts().iter().any(|&p| !cfg.domain.contains(p)) {
                errs.push("every starting point must lie inside the domain box".into());
            }
        }
        if cfg.kinetics.validate().is_ok() && cfg.transform.validate().is_ok() {
            match find_equilibria(&cfg.kinetics) {
                Ok(eqs) => {
                    for e in eqs {
                        let p = cfg.transform.forward(e.point);
                        if !cfg.domain.contains(p) {
                            errs.push(format!("domain box does not contain the scaled {} at {p:?}", e.kind.name()));
                        }
                    }
                }
                Err(e) => errs.push(format!("kinetics: {e}")),
            }
        }
    }

    let kind = cfg.kind.name();
    if cfg.kind.is_sweep() {
        if cfg.noise.alphas.is_empty() {
            errs.push(format!("`noise.alphas` is required for {kind}"));
        }
        if cfg.noise.epsilons.is_empty() {
            errs.push(format!("`noise.epsilons` is required for {kind}"));
        }
    } else {
        if cfg.noise.alpha.is_none() {
            errs.push(format!("`noise.alpha` is required for {kind}"));
        }
        if cfg.noise.eps.is_none() {
            errs.push(format!("`noise.eps` is required for {kind}"));
        }
    }
    if cfg.kind == ExperimentKind::Fig3Snapshots && g.snapshot_times.is_empty() {
        errs.push(format!("`grid.snapshot_times` is required for {kind}"));
    }
    if cfg.kind == ExperimentKind::McCrosscheck {
        let mc = &cfg.montecarlo;
        if mc.n_paths == 0 {
            errs.push("`montecarlo.n_paths` must be >= 1".into());
        }
        if !(mc.dt > 0.0 && mc.dt <= g.t_end) {
            errs.push(format!("`montecarlo.dt` must lie in (0, t_end], got {}", mc.dt));
        }
    }
    errs
}

/// Serializes a config so that `parse_config` returns an equal value.
pub fn to_toml(cfg: &RunConfig) -> String {
    let f = Value::Float;
    let int = |x: u64| Value::Integer(x as i64);
    let list = |xs: &[f64]| Value::Array(xs.iter().map(|&x| f(x)).collect());
    let point = |p: (f64, f64)| Value::Array(vec![f(p.0), f(p.1)]);
    let table = |entries: Vec<(&str, Value)>| {
        Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    };

    let mut root = Table::new();
    root.insert(
        "experiment".into(),
        table(vec![
            ("kind", Value::String(cfg.kind.name().into())),
            ("output", Value::String(cfg.output.to_string_lossy().into_owned())),
            ("seed", int(cfg.seed)),
        ]),
    );
    let k = &cfg.kinetics;
    root.insert(
        "kinetics".into(),
        table(vec![
            ("a_k", f(k.a_k)),
            ("b_k", f(k.b_k)),
            ("b_s", f(k.b_s)),
            ("k0", f(k.k0)),
            ("k1", f(k.k1)),
            ("n", int(k.n.into())),
            ("p", int(k.p.into())),
        ]),
    );
    root.insert("transform".into(), table(vec![("c_k", f(cfg.transform.c_k)), ("c_s", f(cfg.transform.c_s))]));
    let mut noise = Vec::new();
    if let Some(a) = cfg.noise.alpha {
        noise.push(("alpha", f(a)));
    }
    if let Some(e) = cfg.noise.eps {
        noise.push(("eps", f(e)));
    }
    noise.push(("alphas", list(&cfg.noise.alphas)));
    noise.push(("epsilons", list(&cfg.noise.epsilons)));
    root.insert("noise".into(), table(noise));
    let d = &cfg.domain;
    root.insert("domain".into(), table(vec![("a", f(d.a)), ("b", f(d.b)), ("c", f(d.c)), ("d", f(d.d))]));
    let g = &cfg.grid;
    root.insert(
        "grid".into(),
        table(vec![
            ("half", int(g.half as u64)),
            ("t_end", f(g.t_end)),
            ("record_interval", f(g.record_interval)),
            ("c_stab", f(g.c_stab)),
            ("snapshot_times", list(&g.snapshot_times)),
        ]),
    );
    let i = &cfg.initial;
    root.insert(
        "initial".into(),
        table(vec![
            ("point", point(i.point)),
            ("points", Value::Array(i.points.iter().map(|&p| point(p)).collect())),
            ("ring_radius", f(i.ring_radius)),
            ("ring_count", int(i.ring_count as u64)),
        ]),
    );
    let a = &cfg.analysis;
    root.insert(
        "analysis".into(),
        table(vec![
            ("tipping_cap", f(a.tipping_cap)),
            ("early_exit", Value::Boolean(a.early_exit)),
            ("refine_argmax", Value::Boolean(a.refine_argmax)),
        ]),
    );
    let m = &cfg.montecarlo;
    root.insert(
        "montecarlo".into(),
        table(vec![
            ("n_paths", int(m.n_paths as u64)),
            ("dt", f(m.dt)),
            ("record_every", int(m.record_every as u64)),
            ("compare_fpe", Value::Boolean(m.compare_fpe)),
        ]),
    );
    toml::to_string(&root).expect("config tables serialize")
}
