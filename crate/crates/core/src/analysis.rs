//! Most probable trajectories (density maximiser tracks) and the derived
//! tipping, phase-diagram and metastable-state quantities.

use std::io::{BufRead, Write};
use std::ops::ControlFlow;

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::kinetics::{KineticParams, ScaleTransform};
use crate::scalar::Scalar;
use crate::solver::{
    delta_initial, solve_observed, DensityField, DomainBox, FpeOperator, GridSpec, MeksDrift, SolveDiagnostics,
    SolveResult, SolveStatus, DEFAULT_C_STAB,
};
use crate::stable::NoiseSpec;

/// Scaled saddle of the MeKS circuit.
pub const SADDLE: (f64, f64) = (0.8568, 4.4938);
/// Scaled low-concentration (vegetative) state.
pub const LOW_STATE: (f64, f64) = (0.15262, 4.3148);
/// Scaled high-concentration (competence) state.
pub const HIGH_STATE: (f64, f64) = (1.5732, 3.1562);
/// Cap on reported tipping times.
pub const DEFAULT_TIPPING_CAP: f64 = 30.0;
/// Jumps longer than this many cells are checked for bimodality.
pub const PATH_JUMP_CELLS: isize = 20;
/// A second peak within this fraction of the maximum makes a field bimodal.
pub const BIMODAL_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathEntry<T> {
    pub time: T,
    /// Physical (scaled) coordinates `(k, s)` of the maximiser.
    pub point: (T, T),
    /// Density at the maximiser, clipped at zero.
    pub density: T,
    pub node: (isize, isize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathStatus {
    Complete,
    /// The density was fully absorbed at `time`; later snapshots are dropped.
    Absorbed { time: f64 },
}

/// Time-stamped sequence of density maximisers.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbablePath<T> {
    pub entries: Vec<PathEntry<T>>,
    pub saddle: (T, T),
    pub status: PathStatus,
    /// Long jumps between consecutive maximisers not explained by a second peak.
    pub warnings: Vec<String>,
}

/// Builds a path one snapshot at a time; [`most_probable_path`] is the batch form.
#[derive(Clone, Debug)]
pub struct PathTracker<T> {
    domain: DomainBox<T>,
    path: ProbablePath<T>,
    refine: bool,
}

impl<T: Scalar> PathTracker<T> {
    pub fn new(domain_box: DomainBox<T>, saddle: (T, T)) -> Self {
        Self {
            domain: domain_box,
            path: ProbablePath { entries: Vec::new(), saddle, status: PathStatus::Complete, warnings: Vec::new() },
            refine: false,
        }
    }

    /// Places each point at the vertex of a per-axis parabola through the
    /// maximiser and its neighbours instead of on the node itself.
    pub fn with_refinement(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn is_absorbed(&self) -> bool {
        matches!(self.path.status, PathStatus::Absorbed { .. })
    }

    /// Appends the maximiser of `field`. Returns `Break` once the field is
    /// fully absorbed (nothing is appended then).
    pub fn push(&mut self, field: &DensityField<T>) -> ControlFlow<()> {
        if self.is_absorbed() {
            return ControlFlow::Break(());
        }
        let (node, value) = field.argmax();
        if value <= T::zero() {
            self.path.status = PathStatus::Absorbed { time: field.time.to_f64_lossy() };
            return ControlFlow::Break(());
        }
        if let Some(last) = self.path.entries.last() {
            if field.time <= last.time {
                return ControlFlow::Continue(());
            }
            let jump = (node.0 - last.node.0).abs().max((node.1 - last.node.1).abs());
            if jump > PATH_JUMP_CELLS && second_peak(field, node) < (T::one() - T::lit(BIMODAL_FRACTION)) * value {
                let msg = format!(
                    "maximiser jumped {jump} cells at t = {} without a competing peak",
                    field.time
                );
                warn!("{msg}");
                self.path.warnings.push(msg);
            }
        }
        let (mut v, mut w) = field.reference_point(node.0, node.1);
        if self.refine {
            let h = field.h();
            v += h * vertex_offset(field.get(node.0 - 1, node.1), value, field.get(node.0 + 1, node.1));
            w += h * vertex_offset(field.get(node.0, node.1 - 1), value, field.get(node.0, node.1 + 1));
        }
        let point = self.domain.from_reference((v, w));
        self.path.entries.push(PathEntry { time: field.time, point, density: value.max(T::zero()), node });
        ControlFlow::Continue(())
    }

    pub fn last(&self) -> Option<&PathEntry<T>> {
        self.path.entries.last()
    }

    pub fn finish(self) -> ProbablePath<T> {
        self.path
    }
}

/// Vertex of the parabola through `(-1, a)`, `(0, b)`, `(1, c)`, clamped to the cell.
fn vertex_offset<T: Scalar>(a: T, b: T, c: T) -> T {
    let curv = a - T::lit(2.0) * b + c;
    if curv >= T::zero() {
        return T::zero();
    }
    let half = T::lit(0.5);
    (half * (a - c) / curv).max(-half).min(half)
}

/// Largest strict 8-neighbour local maximum other than the node `skip`.
fn second_peak<T: Scalar>(field: &DensityField<T>, skip: (isize, isize)) -> T {
    let lim = field.half() as isize - 1;
    let mut best = T::neg_infinity();
    for i in -lim..=lim {
        for j in -lim..=lim {
            if (i, j) == skip {
                continue;
            }
            let v = field.get(i, j);
            if v <= best {
                continue;
            }
            let is_peak = (-1..=1)
                .flat_map(|di| (-1..=1).map(move |dj| (di, dj)))
                .filter(|&d| d != (0, 0))
                .all(|(di, dj)| field.get(i + di, j + dj) < v);
            if is_peak {
                best = v;
            }
        }
    }
    best
}

/// Maximiser track of every snapshot, mapped to physical coordinates.
pub fn most_probable_path<T: Scalar>(result: &SolveResult<T>, saddle: (T, T)) -> Result<ProbablePath<T>> {
    if result.snapshots.len() < 2 {
        return Err(domain("a probable path needs at least two snapshots"));
    }
    let mut tracker = PathTracker::new(result.domain, saddle);
    for snap in &result.snapshots {
        if tracker.push(snap).is_break() {
            break;
        }
    }
    Ok(tracker.finish())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TippingKind<T> {
    Transition { time: T },
    NoTransition,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TippingOutcome<T> {
    pub kind: TippingKind<T>,
    pub cap: T,
}

impl<T: Scalar> TippingOutcome<T> {
    pub fn time(&self) -> Option<T> {
        match self.kind {
            TippingKind::Transition { time } => Some(time),
            TippingKind::NoTransition => None,
        }
    }
}

/// Earliest entry time whose `k` reaches `k_u`.
pub fn tipping_time<T: Scalar>(path: &ProbablePath<T>, k_u: T, cap: T) -> TippingOutcome<T> {
    let kind = path
        .entries
        .iter()
        .find(|e| e.point.0 >= k_u)
        .map(|e| e.time)
        .filter(|&t| t <= cap)
        .map_or(TippingKind::NoTransition, |time| TippingKind::Transition { time });
    TippingOutcome { kind, cap }
}

/// Componentwise median of the last `window` path points.
pub fn metastable_state<T: Scalar>(path: &ProbablePath<T>, window: usize) -> Result<(T, T)> {
    if path.entries.is_empty() {
        return Err(domain("empty path has no metastable state"));
    }
    if window == 0 {
        return Err(domain("window must be >= 1"));
    }
    let tail = &path.entries[path.entries.len().saturating_sub(window)..];
    let median = |mut xs: Vec<T>| {
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        let m = xs.len() / 2;
        if xs.len() % 2 == 1 {
            xs[m]
        } else {
            (xs[m - 1] + xs[m]) / T::lit(2.0)
        }
    };
    Ok((
        median(tail.iter().map(|e| e.point.0).collect()),
        median(tail.iter().map(|e| e.point.1).collect()),
    ))
}

/// Window covering the final 10% of the path's entries (at least one).
pub fn default_window<T>(path: &ProbablePath<T>) -> usize {
    (path.entries.len() as f64 * 0.1).ceil().max(1.0) as usize
}

/// Euclidean distance between a metastable state and the competence state.
pub fn distance_to_competence<T: Scalar>(state: (T, T), high_state: (T, T)) -> T {
    let dk = high_state.0 - state.0;
    let ds = high_state.1 - state.1;
    (dk * dk + ds * ds).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    /// Stays in the low-concentration region.
    LowLow,
    /// Reaches the high-concentration region.
    LowHigh,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Self::LowLow => "L-L",
            Self::LowHigh => "L-H",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "L-L" => Some(Self::LowLow),
            "L-H" => Some(Self::LowHigh),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

/// One `(alpha, eps)` cell of a parameter sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord<T> {
    pub alpha: T,
    pub eps: T,
    pub tipping: TippingOutcome<T>,
    pub classification: Classification,
    pub terminal_state: (T, T),
    pub distance_d: T,
    pub status: CellStatus,
}

/// Path produced by a solver run for one parameter cell.
#[derive(Clone, Debug)]
pub struct CellRun<T> {
    pub path: ProbablePath<T>,
    pub diagnostics: SolveDiagnostics,
    pub horizon: T,
}

/// Something that can solve the density evolution at a given `(alpha, eps)`.
pub trait CellRunner<T: Scalar>: Sync {
    fn run(&self, alpha: T, eps: T) -> Result<CellRun<T>>;
    fn k_threshold(&self) -> T;
    /// Cap on reported tipping times; classification always uses the full horizon.
    fn tipping_cap(&self) -> T {
        T::lit(DEFAULT_TIPPING_CAP)
    }
    fn high_state(&self) -> (T, T);
}

/// Full MeKS solve from a fixed initial point, tracking the maximiser on the fly.
#[derive(Clone, Debug)]
pub struct MeksRunner<T> {
    pub params: KineticParams<T>,
    pub transform: ScaleTransform<T>,
    pub domain: DomainBox<T>,
    pub initial: (T, T),
    pub half: usize,
    pub t_end: T,
    /// Time between recorded path points.
    pub record_interval: T,
    pub c_stab: T,
    /// Stop as soon as the path crosses `k_u`.
    pub early_exit: bool,
    /// Reported tipping times beyond this are treated as no transition.
    pub tipping_cap: T,
    /// Sub-grid refinement of the maximiser.
    pub refine_argmax: bool,
    pub saddle: (T, T),
    pub high_state: (T, T),
}

impl<T: Scalar> MeksRunner<T> {
    pub fn new(half: usize, t_end: T) -> Self {
        let lit = |p: (f64, f64)| (T::lit(p.0), T::lit(p.1));
        Self {
            params: KineticParams::default(),
            transform: ScaleTransform::default(),
            domain: DomainBox::default(),
            initial: lit(LOW_STATE),
            half,
            t_end,
            record_interval: T::lit(0.05),
            c_stab: T::lit(DEFAULT_C_STAB),
            early_exit: false,
            tipping_cap: T::lit(DEFAULT_TIPPING_CAP),
            refine_argmax: false,
            saddle: lit(SADDLE),
            high_state: lit(HIGH_STATE),
        }
    }

    pub fn operator(&self, noise: NoiseSpec<T>) -> Result<FpeOperator<T>> {
        let drift = MeksDrift { params: self.params, transform: self.transform };
        FpeOperator::new(&drift, noise, self.domain, self.half)
    }

    pub fn grid(&self, op: &FpeOperator<T>) -> Result<GridSpec<T>> {
        let dt = op.stable_dt(self.c_stab).min(self.record_interval);
        let stride = (self.record_interval / dt).round().to_f64_lossy().max(1.0) as usize;
        GridSpec::new(self.half, dt, self.t_end, stride)
    }
}

impl<T: Scalar> CellRunner<T> for MeksRunner<T> {
    fn run(&self, alpha: T, eps: T) -> Result<CellRun<T>> {
        let noise = NoiseSpec::isotropic(alpha, eps)?;
        let op = self.operator(noise)?;
        let grid = self.grid(&op)?;
        let initial = delta_initial(self.initial, &self.domain, self.half)?;
        let mut tracker = PathTracker::new(self.domain, self.saddle).with_refinement(self.refine_argmax);
        let k_u = self.saddle.0;
        let early = self.early_exit;
        let diagnostics = solve_observed(initial, &op, &grid, |f| {
            tracker.push(f)?;
            match tracker.last() {
                Some(e) if early && e.point.0 >= k_u => ControlFlow::Break(()),
                _ => ControlFlow::Continue(()),
            }
        })?;
        Ok(CellRun { path: tracker.finish(), diagnostics, horizon: self.t_end })
    }

    fn k_threshold(&self) -> T {
        self.saddle.0
    }

    fn tipping_cap(&self) -> T {
        self.tipping_cap
    }

    fn high_state(&self) -> (T, T) {
        self.high_state
    }
}

/// Solves one cell and classifies it: L-H iff the path crosses `k_u` within
/// the runner's horizon. The reported tipping time uses the runner's cap.
pub fn classify_cell<T: Scalar, R: CellRunner<T> + ?Sized>(alpha: T, eps: T, runner: &R) -> SweepRecord<T> {
    let failed = |msg: String| {
        warn!("cell alpha={alpha}, eps={eps} failed: {msg}");
        SweepRecord {
            alpha,
            eps,
            tipping: TippingOutcome { kind: TippingKind::NoTransition, cap: runner.tipping_cap() },
            classification: Classification::LowLow,
            terminal_state: (T::nan(), T::nan()),
            distance_d: T::nan(),
            status: CellStatus::Failed(msg),
        }
    };
    let run = match runner.run(alpha, eps) {
        Ok(run) => run,
        Err(e) => return failed(e.to_string()),
    };
    if let SolveStatus::Aborted { reason, step, .. } = &run.diagnostics.status {
        return failed(format!("solver aborted at step {step}: {reason}"));
    }
    let Some(last) = run.path.entries.last() else {
        return failed("empty path".into());
    };
    let k_u = runner.k_threshold();
    let classification = match tipping_time(&run.path, k_u, run.horizon).kind {
        TippingKind::Transition { .. } => Classification::LowHigh,
        TippingKind::NoTransition => Classification::LowLow,
    };
    let tipping = tipping_time(&run.path, k_u, runner.tipping_cap());
    let terminal_state = last.point;
    SweepRecord {
        alpha,
        eps,
        tipping,
        classification,
        terminal_state,
        distance_d: distance_to_competence(terminal_state, runner.high_state()),
        status: CellStatus::Ok,
    }
}

/// Cartesian sweep, `alpha` outer and `eps` inner. Cells present in
/// `completed` (matched on exact parameter values) are reused, not rerun.
/// `on_record` fires for every newly computed cell, possibly from worker
/// threads.
pub fn sweep<T, R, F>(
    alphas: &[T],
    epsilons: &[T],
    runner: &R,
    completed: &[SweepRecord<T>],
    on_record: F,
) -> Result<Vec<SweepRecord<T>>>
where
    T: Scalar,
    R: CellRunner<T> + ?Sized,
    F: Fn(&SweepRecord<T>) + Sync,
{
    if alphas.is_empty() || epsilons.is_empty() {
        return Err(domain("sweep needs at least one alpha and one eps"));
    }
    for &a in alphas {
        crate::stable::check_alpha(a)?;
    }
    if epsilons.iter().any(|e| !(e.is_finite() && *e >= T::zero())) {
        return Err(domain("noise intensities must be >= 0"));
    }
    let cells: Vec<(T, T)> = alphas.iter().flat_map(|&a| epsilons.iter().map(move |&e| (a, e))).collect();
    let total = cells.len();
    let records = cells
        .into_par_iter()
        .enumerate()
        .map(|(idx, (a, e))| {
            if let Some(done) = completed.iter().find(|r| r.alpha == a && r.eps == e) {
                return done.clone();
            }
            let rec = classify_cell(a, e, runner);
            info!("cell {}/{total}: alpha={a}, eps={e} -> {}", idx + 1, rec.classification.label());
            on_record(&rec);
            rec
        })
        .collect();
    Ok(records)
}

/// Header of the sweep CSV.
pub const SWEEP_CSV_HEADER: &str = "alpha,eps,tipping_time,classification,kT,sT,distance_d,status";

pub fn sweep_csv_line<T: Scalar>(r: &SweepRecord<T>) -> String {
    let tip = r.tipping.time().map_or(String::new(), |t| t.to_f64_lossy().to_string());
    let status = match r.status {
        CellStatus::Ok => "ok",
        CellStatus::Failed(_) => "failed",
    };
    format!(
        "{},{},{},{},{},{},{},{}",
        r.alpha.to_f64_lossy(),
        r.eps.to_f64_lossy(),
        tip,
        r.classification.label(),
        r.terminal_state.0.to_f64_lossy(),
        r.terminal_state.1.to_f64_lossy(),
        r.distance_d.to_f64_lossy(),
        status
    )
}

pub fn write_sweep_csv<T: Scalar, W: Write>(mut out: W, records: &[SweepRecord<T>]) -> Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", sweep_csv_line(r))?;
    }
    Ok(())
}

/// Reads sweep rows back. `cap` is the horizon used for the tipping outcome.
pub fn read_sweep_csv<R: BufRead>(input: R, cap: f64) -> Result<Vec<SweepRecord<f64>>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == SWEEP_CSV_HEADER => {}
        _ => return Err(Error::Format("missing sweep CSV header".into())),
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("malformed sweep row {}: {line}", n + 2));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let kind = if cols[2].is_empty() {
            TippingKind::NoTransition
        } else {
            TippingKind::Transition { time: num(cols[2])? }
        };
        out.push(SweepRecord {
            alpha: num(cols[0])?,
            eps: num(cols[1])?,
            tipping: TippingOutcome { kind, cap },
            classification: Classification::parse(cols[3]).ok_or_else(bad)?,
            terminal_state: (num(cols[4])?, num(cols[5])?),
            distance_d: num(cols[6])?,
            status: match cols[7] {
                "ok" => CellStatus::Ok,
                "failed" => CellStatus::Failed("recorded as failed".into()),
                _ => return Err(bad()),
            },
        });
    }
    Ok(out)
}

/// Path CSV with header `t,k,s,density`.
pub fn write_path_csv<T: Scalar, W: Write>(mut out: W, path: &ProbablePath<T>) -> Result<()> {
    writeln!(out, "t,k,s,density")?;
    for e in &path.entries {
        writeln!(
            out,
            "{},{},{},{}",
            e.time.to_f64_lossy(),
            e.point.0.to_f64_lossy(),
            e.point.1.to_f64_lossy(),
            e.density.to_f64_lossy()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_from(points: &[(f64, f64, f64)]) -> ProbablePath<f64> {
        ProbablePath {
            entries: points
                .iter()
                .map(|&(t, k, s)| PathEntry { time: t, point: (k, s), density: 1.0, node: (0, 0) })
                .collect(),
            saddle: SADDLE,
            status: PathStatus::Complete,
            warnings: vec![],
        }
    }

    #[test]
    fn tipping_detects_first_crossing() {
        let p = path_from(&[(0.0, 0.2, 4.0), (1.2, 0.5, 4.0), (2.4, 0.9, 4.0), (3.6, 1.2, 4.0)]);
        let out = tipping_time(&p, 0.8568, 30.0);
        assert_eq!(out.kind, TippingKind::Transition { time: 2.4 });
    }

    #[test]
    fn tipping_without_crossing() {
        let p = path_from(&[(0.0, 0.2, 4.0), (1.0, 0.3, 4.0)]);
        assert_eq!(tipping_time(&p, 0.8568, 30.0).kind, TippingKind::NoTransition);
        let late = path_from(&[(0.0, 0.2, 4.0), (40.0, 1.3, 4.0)]);
        assert_eq!(tipping_time(&late, 0.8568, 30.0).kind, TippingKind::NoTransition);
    }

    #[test]
    fn metastable_median_and_window_one() {
        let p = path_from(&[(0.0, 1.0, 3.0), (1.0, 1.2, 3.5), (2.0, 1.1, 3.1), (3.0, 1.4, 3.2)]);
        assert_eq!(metastable_state(&p, 1).unwrap(), (1.4, 3.2));
        assert_eq!(metastable_state(&p, 3).unwrap(), (1.2, 3.2));
        let flat = path_from(&[(0.0, 1.5, 3.0), (1.0, 1.5, 3.0), (2.0, 1.5, 3.0)]);
        for w in 1..5 {
            assert_eq!(metastable_state(&flat, w).unwrap(), (1.5, 3.0));
        }
        assert!(metastable_state(&p, 0).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to_competence(HIGH_STATE, HIGH_STATE), 0.0);
        let d = distance_to_competence((1.5732, 4.1562), HIGH_STATE);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_csv_round_trip() {
        let recs = vec![
            SweepRecord {
                alpha: 1.5,
                eps: 0.25,
                tipping: TippingOutcome { kind: TippingKind::Transition { time: 4.25 }, cap: 100.0 },
                classification: Classification::LowHigh,
                terminal_state: (1.53, 3.2),
                distance_d: 0.06,
                status: CellStatus::Ok,
            },
            SweepRecord {
                alpha: 0.25,
                eps: 0.4,
                tipping: TippingOutcome { kind: TippingKind::NoTransition, cap: 100.0 },
                classification: Classification::LowLow,
                terminal_state: (0.15, 4.3),
                distance_d: 1.8,
                status: CellStatus::Ok,
            },
        ];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &recs).unwrap();
        let back = read_sweep_csv(buf.as_slice(), 100.0).unwrap();
        assert_eq!(back, recs);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().starts_with("0.25,0.4,,L-L,"));
    }

    #[test]
    fn second_peak_ignores_shoulders() {
        let half = 6;
        let mut f = DensityField::<f64>::zeros(half, 0.0);
        f.set(-3, 0, 10.0);
        f.set(-2, 0, 9.0);
        f.set(3, 1, 9.8);
        assert_eq!(second_peak(&f, (-3, 0)), 9.8);
    }
}
