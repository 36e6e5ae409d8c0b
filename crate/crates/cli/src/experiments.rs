//! Experiment orchestration: runs a validated [`RunConfig`] and writes its
//! artifacts, plot scripts and manifest under the configured output directory.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use levy_fpe::analysis::*;
use levy_fpe::kinetics::{find_equilibria, EquilibriumKind};
use levy_fpe::montecarlo::{empirical_density, simulate_ensemble, write_trajectories_csv, EnsembleSettings};
use levy_fpe::solver::io::{write_snapshot, write_snapshot_csv, Snapshot};
use levy_fpe::solver::*;
use levy_fpe::NoiseSpec64;
use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{to_toml, validate, ConfigError, ExperimentKind, RunConfig};
use crate::manifest::write_manifest;
use crate::plots;

/// Scaled low state, saddle and high state of the configured kinetics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct States {
    pub low: (f64, f64),
    pub saddle: (f64, f64),
    pub high: (f64, f64),
}

pub fn scaled_states(cfg: &RunConfig) -> Result<States> {
    let eqs = find_equilibria(&cfg.kinetics)?;
    let find = |kind: EquilibriumKind| {
        eqs.iter()
            .find(|e| e.kind == kind)
            .map(|e| cfg.transform.forward(e.point))
            .ok_or_else(|| anyhow!("the kinetics have no {}; the analysis needs a bistable system", kind.name()))
    };
    Ok(States {
        low: find(EquilibriumKind::NodalSink)?,
        saddle: find(EquilibriumKind::Saddle)?,
        high: find(EquilibriumKind::SpiralSink)?,
    })
}

pub fn meks_runner(cfg: &RunConfig, states: &States) -> MeksRunner<f64> {
    let mut r = MeksRunner::new(cfg.grid.half, cfg.grid.t_end);
    r.params = cfg.kinetics;
    r.transform = cfg.transform;
    r.domain = cfg.domain;
    r.initial = cfg.initial.point;
    r.record_interval = cfg.grid.record_interval;
    r.c_stab = cfg.grid.c_stab;
    r.early_exit = cfg.analysis.early_exit;
    r.tipping_cap = cfg.analysis.tipping_cap;
    r.refine_argmax = cfg.analysis.refine_argmax;
    r.saddle = states.saddle;
    r.high_state = states.high;
    r
}

/// Directory name of a sweep cell.
pub fn cell_id(alpha: f64, eps: f64) -> String {
    format!("a{alpha}_e{eps}")
}

fn diagnostics_json(d: &SolveDiagnostics) -> Value {
    let status = match &d.status {
        SolveStatus::Completed => json!("completed"),
        SolveStatus::Stopped { time } => json!({ "stopped": time }),
        SolveStatus::Aborted { step, time, max_abs, reason } => {
            json!({ "aborted": { "step": step, "time": time, "max_abs": max_abs, "reason": reason } })
        }
    };
    json!({
        "status": status,
        "dt": d.dt,
        "steps": d.steps,
        "initial_mass": d.initial_mass,
        "final_mass": d.final_mass,
        "mass_monotone": d.mass_monotone(),
        "mass_increase_steps": d.mass_increase_steps,
        "max_mass_increase": d.max_mass_increase,
        "min_undershoot_ratio": d.min_undershoot_ratio,
        "passes_undershoot_gate": d.passes_undershoot_gate(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

fn write_path(path: &Path, p: &ProbablePath<f64>) -> Result<()> {
    let mut f = create(path)?;
    write_path_csv(&mut f, p)?;
    f.flush()?;
    Ok(())
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

/// Writes `<stem>.nfpe` and `<stem>.csv`.
fn write_snapshot_pair(dir: &Path, stem: &str, snap: &Snapshot<f64>) -> Result<()> {
    let mut bin = create(&dir.join(format!("{stem}.nfpe")))?;
    write_snapshot(&mut bin, snap)?;
    bin.flush()?;
    let mut csv = create(&dir.join(format!("{stem}.csv")))?;
    write_snapshot_csv(&mut csv, snap)?;
    csv.flush()?;
    Ok(())
}

/// Reads a path CSV (`t,k,s,density`); grid nodes are not stored and read back as the origin.
pub fn read_path(path: &Path, saddle: (f64, f64)) -> Result<ProbablePath<f64>> {
    let f = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut entries = Vec::new();
    for (n, line) in f.lines().enumerate().skip(1) {
        let line = line?;
        let cols: Vec<f64> = line.split(',').map(str::parse).collect::<Result<_, _>>()
            .map_err(|_| anyhow!("{}:{}: malformed row", path.display(), n + 1))?;
        let [t, k, s, d] = cols[..] else { bail!("{}:{}: expected 4 columns", path.display(), n + 1) };
        entries.push(PathEntry { time: t, point: (k, s), density: d, node: (0, 0) });
    }
    Ok(ProbablePath { entries, saddle, status: PathStatus::Complete, warnings: Vec::new() })
}

fn noise(cfg: &RunConfig) -> Result<NoiseSpec64> {
    let alpha = cfg.noise.alpha.ok_or_else(|| anyhow!("noise.alpha missing"))?;
    let eps = cfg.noise.eps.ok_or_else(|| anyhow!("noise.eps missing"))?;
    Ok(NoiseSpec64::isotropic(alpha, eps)?)
}

fn state_marks(s: &States) -> [(&'static str, (f64, f64)); 3] {
    [("low", s.low), ("saddle", s.saddle), ("high", s.high)]
}

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub output: PathBuf,
    pub summary: Value,
    /// Sweep cells computed in this invocation.
    pub computed_cells: usize,
    /// Sweep cells reused from an earlier invocation.
    pub reused_cells: usize,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    root: PathBuf,
    cells: Mutex<BTreeMap<String, Value>>,
    computed: usize,
    reused: usize,
}

impl Ctx<'_> {
    fn record_cell(&self, id: &str, diag: Value) {
        self.cells.lock().unwrap().insert(id.to_string(), diag);
    }
}

/// Runs the experiment named by `cfg.kind` into `cfg.output`.
///
/// A manifest is written on success and on failure (status `failed`,
/// with the error message); sweeps resume from cells already on disk.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutcome> {
    let problems = validate(cfg);
    if !problems.is_empty() {
        return Err(ConfigError { problems }.into());
    }
    let root = cfg.output.clone();
    fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    write_text(&root.join("config.toml"), &to_toml(cfg))?;
    info!("running {} into {}", cfg.kind, root.display());

    let mut ctx = Ctx { cfg, root: root.clone(), cells: Mutex::new(BTreeMap::new()), computed: 0, reused: 0 };
    let result = match cfg.kind {
        ExperimentKind::SingleRun | ExperimentKind::Fig3Snapshots => single_run(&mut ctx),
        ExperimentKind::Fig4Trajectories
        | ExperimentKind::Fig7TippingSweep
        | ExperimentKind::Fig5PhaseDiagram
        | ExperimentKind::Fig9DistanceSweep => sweep_experiment(&mut ctx),
        ExperimentKind::Fig8InitialConditions => initial_conditions(&mut ctx),
        ExperimentKind::McCrosscheck => mc_crosscheck(&mut ctx),
    };

    let (status, summary, error) = match &result {
        Ok(s) => ("complete", s.clone(), Value::Null),
        Err(e) => ("failed", Value::Null, json!(format!("{e:#}"))),
    };
    let body = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "core_version": levy_fpe::VERSION,
        "experiment": cfg.kind.name(),
        "status": status,
        "error": error,
        "started_unix": started,
        "wall_seconds": clock.elapsed().as_secs_f64(),
        "config": to_toml(cfg),
        "summary": summary,
        "cells_computed": ctx.computed,
        "cells_reused": ctx.reused,
        "mass_diagnostics": Value::Object(ctx.cells.into_inner().unwrap().into_iter().collect()),
    });
    write_manifest(&root, body).context("writing manifest")?;
    let summary = result?;
    Ok(RunOutcome { output: root, summary, computed_cells: ctx.computed, reused_cells: ctx.reused })
}

fn single_run(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let states = scaled_states(cfg)?;
    let runner = meks_runner(cfg, &states);
    let op = runner.operator(noise(cfg)?)?;
    let grid = runner.grid(&op)?;
    let initial = delta_initial(cfg.initial.point, &cfg.domain, cfg.grid.half)?;

    let mut targets = cfg.grid.snapshot_times.clone();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let tol = 0.5 * grid.dt * grid.record_stride as f64 + 1e-9;
    let mut captured: Vec<Option<(f64, DensityField<f64>)>> = vec![None; targets.len()];
    let mut tracker = PathTracker::new(cfg.domain, states.saddle).with_refinement(cfg.analysis.refine_argmax);
    let diag = solve_observed(initial, &op, &grid, |f| {
        let _ = tracker.push(f);
        for (slot, &t) in captured.iter_mut().zip(&targets) {
            let gap = (f.time - t).abs();
            if gap <= tol && slot.as_ref().is_none_or(|(g, _)| gap < *g) {
                *slot = Some((gap, f.clone()));
            }
        }
        ControlFlow::Continue(())
    })?;
    ctx.record_cell("run", diagnostics_json(&diag));
    let path = tracker.finish();
    write_path(&ctx.root.join("path.csv"), &path)?;
    let marks = state_marks(&states);
    write_text(
        &ctx.root.join("path.gp"),
        &plots::trajectories(cfg.kind.name(), &[("path.csv".into(), "argmax".into())], &marks, states.saddle.0),
    )?;

    let mut snaps = Vec::new();
    for (slot, &t) in captured.into_iter().zip(&targets) {
        let Some((_, field)) = slot else {
            warn!("no recorded field near t = {t}");
            continue;
        };
        let stem = format!("t{t}");
        let snap = Snapshot { field, domain: cfg.domain, noise: *op.noise() };
        write_snapshot_pair(&ctx.root.join("snapshots"), &stem, &snap)?;
        snaps.push((format!("{stem}.csv"), format!("t = {t}")));
    }
    if !snaps.is_empty() {
        write_text(&ctx.root.join("snapshots").join("snapshots.gp"), &plots::snapshots(&snaps))?;
    }
    if let SolveStatus::Aborted { reason, .. } = &diag.status {
        bail!("solver aborted: {reason}");
    }

    let tipping = tipping_time(&path, states.saddle.0, cfg.analysis.tipping_cap);
    let crossed = tipping_time(&path, states.saddle.0, cfg.grid.t_end).time().is_some();
    let meta = metastable_state(&path, default_window(&path))?;
    let last = path.entries.last().map(|e| e.point).unwrap_or(meta);
    Ok(json!({
        "tipping_time": tipping.time(),
        "classification": if crossed { "L-H" } else { "L-L" },
        "terminal_state": [last.0, last.1],
        "metastable_state": [meta.0, meta.1],
        "distance_d": distance_to_competence(last, states.high),
        "snapshots_written": snaps.len(),
        "path_warnings": path.warnings,
    }))
}

/// Wraps a runner so every solved cell leaves its path and diagnostics in
/// its own directory.
struct CellWriter<'a> {
    inner: MeksRunner<f64>,
    dir: PathBuf,
    ctx: &'a Ctx<'a>,
}

impl CellRunner<f64> for CellWriter<'_> {
    fn run(&self, alpha: f64, eps: f64) -> levy_fpe::Result<CellRun<f64>> {
        let run = self.inner.run(alpha, eps)?;
        let id = cell_id(alpha, eps);
        let dir = self.dir.join(&id);
        let io = |e: anyhow::Error| levy_fpe::Error::Io(std::io::Error::other(format!("{e:#}")));
        write_path(&dir.join("path.csv"), &run.path).map_err(io)?;
        let diag = diagnostics_json(&run.diagnostics);
        write_json(&dir.join("diagnostics.json"), &diag).map_err(io)?;
        self.ctx.record_cell(&id, diag);
        Ok(run)
    }

    fn k_threshold(&self) -> f64 {
        self.inner.k_threshold()
    }

    fn tipping_cap(&self) -> f64 {
        self.inner.tipping_cap
    }

    fn high_state(&self) -> (f64, f64) {
        self.inner.high_state
    }
}

/// Completed cells found on disk.
fn load_completed(ctx: &Ctx, cells: &Path) -> Vec<SweepRecord<f64>> {
    let cfg = ctx.cfg;
    let mut done = Vec::new();
    for &a in &cfg.noise.alphas {
        for &e in &cfg.noise.epsilons {
            let dir = cells.join(cell_id(a, e));
            let Ok(f) = File::open(dir.join("record.csv")) else { continue };
            match read_sweep_csv(BufReader::new(f), cfg.analysis.tipping_cap) {
                Ok(recs) => {
                    if let Some(r) = recs.into_iter().find(|r| r.alpha == a && r.eps == e && r.status == CellStatus::Ok) {
                        if let Ok(text) = fs::read_to_string(dir.join("diagnostics.json")) {
                            if let Ok(v) = serde_json::from_str(&text) {
                                ctx.record_cell(&cell_id(a, e), v);
                            }
                        }
                        done.push(r);
                    }
                }
                Err(err) => warn!("ignoring unreadable {}: {err}", dir.display()),
            }
        }
    }
    done
}

fn sweep_experiment(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let states = scaled_states(cfg)?;
    let cells = ctx.root.join("cells");
    let completed = load_completed(ctx, &cells);
    let total = cfg.noise.alphas.len() * cfg.noise.epsilons.len();
    if !completed.is_empty() {
        info!("resuming: {} of {total} cells already complete", completed.len());
    }
    let write_errors = Mutex::new(Vec::new());
    let records = {
        let writer = CellWriter { inner: meks_runner(cfg, &states), dir: cells.clone(), ctx };
        sweep(&cfg.noise.alphas, &cfg.noise.epsilons, &writer, &completed, |rec| {
            let path = cells.join(cell_id(rec.alpha, rec.eps)).join("record.csv");
            let res = create(&path).and_then(|mut f| {
                write_sweep_csv(&mut f, std::slice::from_ref(rec))?;
                f.flush()?;
                Ok(())
            });
            if let Err(e) = res {
                write_errors.lock().unwrap().push(format!("{e:#}"));
            }
        })?
    };
    let reused = completed.len().min(total);
    ctx.reused = reused;
    ctx.computed = total - reused;
    if let Some(e) = write_errors.into_inner().unwrap().first() {
        bail!("writing cell record: {e}");
    }

    let mut f = create(&ctx.root.join("sweep.csv"))?;
    write_sweep_csv(&mut f, &records)?;
    f.flush()?;

    let failed: Vec<String> = records
        .iter()
        .filter(|r| r.status != CellStatus::Ok)
        .map(|r| cell_id(r.alpha, r.eps))
        .collect();
    let ok: Vec<&SweepRecord<f64>> = records.iter().filter(|r| r.status == CellStatus::Ok).collect();
    let mut summary = json!({
        "cells": records.len(),
        "failed_cells": failed,
        "lh_cells": ok.iter().filter(|r| r.classification == Classification::LowHigh).count(),
    });

    match cfg.kind {
        ExperimentKind::Fig4Trajectories => {
            for &e in &cfg.noise.epsilons {
                let files: Vec<(String, String)> = cfg
                    .noise
                    .alphas
                    .iter()
                    .map(|&a| (format!("cells/{}/path.csv", cell_id(a, e)), format!("alpha={a}")))
                    .collect();
                let title = format!("eps = {e}");
                let script = plots::trajectories(&title, &files, &state_marks(&states), states.saddle.0)
                    .replace("trajectories.png", &format!("trajectories_e{e}.png"));
                write_text(&ctx.root.join(format!("fig4_e{e}.gp")), &script)?;
            }
        }
        ExperimentKind::Fig7TippingSweep => {
            let cap = cfg.analysis.tipping_cap;
            let tip = |r: &SweepRecord<f64>| r.tipping.time().unwrap_or(cap);
            let mut by_eps = Vec::new();
            for &e in &cfg.noise.epsilons {
                let name = format!("tipping_e{e}.csv");
                let mut text = String::from("alpha,tipping_time,transition\n");
                for r in ok.iter().filter(|r| r.eps == e) {
                    text += &format!("{},{},{}\n", r.alpha, tip(r), u8::from(r.tipping.time().is_some()));
                }
                write_text(&ctx.root.join(&name), &text)?;
                by_eps.push((name, format!("eps={e}")));
            }
            let mut by_alpha = Vec::new();
            for &a in &cfg.noise.alphas {
                let name = format!("tipping_a{a}.csv");
                let mut text = String::from("eps,tipping_time,transition\n");
                for r in ok.iter().filter(|r| r.alpha == a) {
                    text += &format!("{},{},{}\n", r.eps, tip(r), u8::from(r.tipping.time().is_some()));
                }
                write_text(&ctx.root.join(&name), &text)?;
                by_alpha.push((name, format!("alpha={a}")));
            }
            write_text(&ctx.root.join("fig7.gp"), &plots::tipping(&by_eps, &by_alpha, cap))?;
        }
        ExperimentKind::Fig5PhaseDiagram => {
            let mut text = String::from("alpha,eps,lh\n");
            for r in &ok {
                text += &format!("{},{},{}\n", r.alpha, r.eps, u8::from(r.classification == Classification::LowHigh));
            }
            write_text(&ctx.root.join("phase.csv"), &text)?;
            write_text(&ctx.root.join("fig5.gp"), &plots::phase())?;
        }
        ExperimentKind::Fig9DistanceSweep => {
            let mut all = String::from("alpha,eps,k_meta,s_meta,distance_d\n");
            let mut per_eps: BTreeMap<String, String> = BTreeMap::new();
            let mut best: Option<(f64, f64, f64)> = None;
            for r in &ok {
                let path = read_path(&cells.join(cell_id(r.alpha, r.eps)).join("path.csv"), states.saddle)?;
                let meta = metastable_state(&path, default_window(&path))?;
                let d = distance_to_competence(meta, states.high);
                all += &format!("{},{},{},{},{d}\n", r.alpha, r.eps, meta.0, meta.1);
                per_eps.entry(r.eps.to_string()).or_insert_with(|| String::from("alpha,distance_d\n"))
                    .push_str(&format!("{},{d}\n", r.alpha));
                if best.is_none_or(|b| d < b.2) {
                    best = Some((r.alpha, r.eps, d));
                }
            }
            write_text(&ctx.root.join("distance.csv"), &all)?;
            let mut files = Vec::new();
            for &e in &cfg.noise.epsilons {
                if let Some(text) = per_eps.get(&e.to_string()) {
                    let name = format!("distance_e{e}.csv");
                    write_text(&ctx.root.join(&name), text)?;
                    files.push((name, format!("eps={e}")));
                }
            }
            write_text(&ctx.root.join("fig9.gp"), &plots::distance(&files))?;
            summary["min_distance"] = json!(best.map(|(a, e, d)| json!({ "alpha": a, "eps": e, "d": d })));
        }
        _ => unreachable!("not a sweep kind"),
    }
    if !failed.is_empty() {
        warn!("{} cell(s) failed: {}", failed.len(), failed.join(", "));
    }
    Ok(summary)
}

fn initial_conditions(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let states = scaled_states(cfg)?;
    let noise = noise(cfg)?;
    let starts = cfg.initial.starts();
    let results: Vec<Result<(f64, f64)>> = starts
        .par_iter()
        .enumerate()
        .map(|(m, &p)| {
            let mut r = meks_runner(cfg, &states);
            r.initial = p;
            let run = r.run(noise.alpha, noise.eps_k)?;
            let id = format!("p{m}");
            let dir = ctx.root.join("starts").join(&id);
            write_path(&dir.join("path.csv"), &run.path)?;
            let diag = diagnostics_json(&run.diagnostics);
            write_json(&dir.join("diagnostics.json"), &diag)?;
            ctx.record_cell(&id, diag);
            if let SolveStatus::Aborted { reason, .. } = &run.diagnostics.status {
                bail!("start {m} aborted: {reason}");
            }
            Ok(metastable_state(&run.path, default_window(&run.path))?)
        })
        .collect();
    let metas = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut text = String::from("index,k0,s0,k_meta,s_meta,distance_d\n");
    for (m, (p, q)) in starts.iter().zip(&metas).enumerate() {
        text += &format!("{m},{},{},{},{},{}\n", p.0, p.1, q.0, q.1, distance_to_competence(*q, states.high));
    }
    write_text(&ctx.root.join("metastable.csv"), &text)?;
    let files: Vec<(String, String)> =
        (0..starts.len()).map(|m| (format!("starts/p{m}/path.csv"), format!("start {m}"))).collect();
    let title = format!("alpha = {}, eps = {}", noise.alpha, noise.eps_k);
    write_text(&ctx.root.join("fig8.gp"), &plots::trajectories(&title, &files, &state_marks(&states), states.saddle.0))?;

    let mut diameter: f64 = 0.0;
    for &a in &metas {
        for &b in &metas {
            diameter = diameter.max(distance_to_competence(a, b));
        }
    }
    Ok(json!({
        "starts": starts.len(),
        "metastable_states": metas.iter().map(|q| json!([q.0, q.1])).collect::<Vec<_>>(),
        "cluster_diameter": diameter,
    }))
}

/// Normalised L1 distance `h^2 sum |p / m_p - q / m_q|` between two fields.
pub fn normalized_l1(p: &DensityField<f64>, q: &DensityField<f64>) -> f64 {
    let h2 = p.h() * p.h();
    let (mp, mq) = (p.total_mass(), q.total_mass());
    p.values().iter().zip(q.values()).map(|(a, b)| (a / mp - b / mq).abs()).sum::<f64>() * h2
}

fn mc_crosscheck(ctx: &mut Ctx) -> Result<Value> {
    let cfg = ctx.cfg;
    let mc = &cfg.montecarlo;
    let noise = noise(cfg)?;
    let drift = MeksDrift { params: cfg.kinetics, transform: cfg.transform };
    let settings = EnsembleSettings {
        n_paths: mc.n_paths,
        dt: mc.dt,
        t_end: cfg.grid.t_end,
        seed: cfg.seed,
        record_every: (mc.record_every > 0).then_some(mc.record_every),
    };
    let ensemble = simulate_ensemble(cfg.initial.point, &settings, &drift, &noise, &cfg.domain)?;
    let survival = ensemble.surviving_fraction();
    let mut summary = json!({
        "n_paths": ensemble.n_paths(),
        "absorbed_count": ensemble.absorbed_count,
        "seed": cfg.seed,
        "settings": { "dt": mc.dt, "t_end": cfg.grid.t_end, "record_every": mc.record_every,
                      "initial": [cfg.initial.point.0, cfg.initial.point.1] },
        "surviving_fraction": survival,
    });
    if ensemble.trajectories.is_some() {
        let mut f = create(&ctx.root.join("trajectories.csv"))?;
        write_trajectories_csv(&mut f, &ensemble)?;
        f.flush()?;
        write_text(&ctx.root.join("sample_paths.gp"), &plots::sample_paths())?;
    }
    let hist = empirical_density(&ensemble, cfg.grid.half, &cfg.domain)?;

    if mc.compare_fpe {
        let op = FpeOperator::new(&drift, noise, cfg.domain, cfg.grid.half)?;
        let grid = GridSpec::new(cfg.grid.half, op.stable_dt(cfg.grid.c_stab), cfg.grid.t_end, usize::MAX)?;
        let initial = delta_initial(cfg.initial.point, &cfg.domain, cfg.grid.half)?;
        let mut last = None;
        let diag = solve_observed(initial, &op, &grid, |f| {
            last = Some(f.clone());
            ControlFlow::Continue(())
        })?;
        ctx.record_cell("fpe", diagnostics_json(&diag));
        if let SolveStatus::Aborted { reason, .. } = &diag.status {
            bail!("solver aborted: {reason}");
        }
        let fpe = last.expect("the final field is always observed");
        let mass = fpe.total_mass();
        let n = ensemble.n_paths() as f64;
        let sigma = (mass * (1.0 - mass) / n).sqrt();
        summary["fpe_mass"] = json!(mass);
        summary["mass_gap_sigma"] = json!((survival - mass).abs() / sigma);
        summary["normalized_l1"] = json!(normalized_l1(&hist, &fpe));
        write_snapshot_pair(&ctx.root, "fpe_density", &Snapshot { field: fpe, domain: cfg.domain, noise })?;
        write_text(&ctx.root.join("comparison.gp"), &plots::density_comparison())?;
    }
    write_snapshot_pair(&ctx.root, "mc_density", &Snapshot { field: hist, domain: cfg.domain, noise })?;
    write_json(&ctx.root.join("ensemble.json"), &summary)?;
    Ok(summary)
}
