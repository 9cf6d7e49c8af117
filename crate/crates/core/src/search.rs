//! Parameter scans over `(t, φ)` or `(t, β)`, peak detection on the
//! resulting surfaces, and derivative-free local refinement.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{ReducedLabel, RouterParams};
use crate::routing::{Router, RoutingAmplitudes, SpectrumCache, SuperpositionGrid};

/// Settings for [`refine`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Starting step along each coordinate.
    pub initial_steps: [f64; 2],
    /// Search stops once every step has been halved below this.
    pub min_step: f64,
    pub max_evaluations: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            initial_steps: [0.1, 0.05],
            min_step: 1e-4,
            max_evaluations: 50_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined {
    pub point: [f64; 2],
    pub value: f64,
    pub start_value: f64,
    /// `true` when every step fell below `min_step`; `false` if the
    /// evaluation budget ran out first.
    pub converged: bool,
    pub evaluations: usize,
}

/// Maximize `objective` by coordinate search with step halving, starting at
/// `start` and staying inside `bounds`. Accepted iterates never decrease the
/// objective.
pub fn refine<F>(
    objective: F,
    start: [f64; 2],
    bounds: [(f64, f64); 2],
    opts: &RefineOptions,
) -> Result<Refined>
where
    F: Fn([f64; 2]) -> f64,
{
    for (i, (&x, &(lo, hi))) in start.iter().zip(&bounds).enumerate() {
        if !(lo <= hi) {
            return Err(invalid("bounds", format!("coordinate {i}: {lo} > {hi}")));
        }
        if !(lo..=hi).contains(&x) {
            return Err(invalid(
                "start",
                format!("coordinate {i} = {x} outside [{lo}, {hi}]"),
            ));
        }
    }
    if !(opts.min_step > 0.0) || opts.initial_steps.iter().any(|s| !(*s > 0.0)) {
        return Err(invalid("steps", "must be positive"));
    }
    let eval = |x: [f64; 2]| -> Result<f64> {
        let v = objective(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("objective"))
        }
    };

    let mut x = start;
    let mut best = eval(x)?;
    let start_value = best;
    let mut steps = opts.initial_steps;
    let mut evaluations = 1;
    while steps.iter().any(|&s| s >= opts.min_step) {
        if evaluations >= opts.max_evaluations {
            return Ok(Refined {
                point: x,
                value: best,
                start_value,
                converged: false,
                evaluations,
            });
        }
        for i in 0..2 {
            if steps[i] < opts.min_step {
                continue;
            }
            let mut moved = false;
            for dir in [1.0, -1.0] {
                let mut trial = x;
                trial[i] = (x[i] + dir * steps[i]).clamp(bounds[i].0, bounds[i].1);
                if trial[i] == x[i] {
                    continue;
                }
                let v = eval(trial)?;
                evaluations += 1;
                if v > best {
                    best = v;
                    x = trial;
                    moved = true;
                    break;
                }
            }
            if !moved {
                steps[i] *= 0.5;
            }
        }
    }
    Ok(Refined {
        point: x,
        value: best,
        start_value,
        converged: true,
        evaluations,
    })
}

/// Which router parameter a scan varies alongside time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Phase,
    Weight,
}

/// Figure of merit evaluated at each scan point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `P_{1,4}`.
    Localized,
    /// Mean fidelity over the superposition grid.
    Average,
    /// Refined minimum fidelity over the superposition grid.
    WorstCase,
}

/// Evenly spaced axis. With `include_max = false` the upper end is left out,
/// as for a periodic phase axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    pub include_max: bool,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, steps: usize, include_max: bool) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::NonFinite("range bound"));
        }
        if !(min < max) {
            return Err(invalid("range", format!("min {min} must be < max {max}")));
        }
        if steps < 2 {
            return Err(invalid("steps", format!("need at least 2, got {steps}")));
        }
        Ok(Self {
            min,
            max,
            steps,
            include_max,
        })
    }

    pub fn spacing(&self) -> f64 {
        let intervals = if self.include_max {
            self.steps - 1
        } else {
            self.steps
        };
        (self.max - self.min) / intervals as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.steps)
            .map(|i| {
                if self.include_max && i == self.steps - 1 {
                    self.max
                } else {
                    self.min + h * i as f64
                }
            })
            .collect()
    }
}

/// Time axis and parameter axis of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub t: AxisRange,
    pub param: AxisRange,
    pub kind: ParamKind,
}

impl ScanGrid {
    pub fn new(t: AxisRange, param: AxisRange, kind: ParamKind) -> Self {
        Self { t, param, kind }
    }

    /// `t ∈ [0, 50]` (501 points) by `φ ∈ [0, 2π)` (256 points).
    pub fn default_phase() -> Self {
        Self::new(
            AxisRange::new(0.0, 50.0, 501, true).expect("valid"),
            AxisRange::new(0.0, TAU, 256, false).expect("valid"),
            ParamKind::Phase,
        )
    }

    /// `t ∈ [0, 50]` (501 points) by `β ∈ [0, 40]` (401 points).
    pub fn default_weight() -> Self {
        Self::new(
            AxisRange::new(0.0, 50.0, 501, true).expect("valid"),
            AxisRange::new(0.0, 40.0, 401, true).expect("valid"),
            ParamKind::Weight,
        )
    }
}

/// Fidelity surface over `(t, parameter)`.
///
/// Values are stored row-major; `time_major` tells whether rows run over
/// time (the layout produced by [`scan`]) or over the parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub t_axis: Vec<f64>,
    pub param_axis: Vec<f64>,
    pub kind: ParamKind,
    values: Vec<f64>,
    p_wrong: Option<Vec<f64>>,
    time_major: bool,
}

impl Surface {
    /// Build from a time-major table, `values[ti][pj]`.
    pub fn from_rows(
        t_axis: Vec<f64>,
        param_axis: Vec<f64>,
        kind: ParamKind,
        values: Vec<Vec<f64>>,
        p_wrong: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let (nt, np) = (t_axis.len(), param_axis.len());
        if nt == 0 || np == 0 {
            return Err(Error::Empty("surface axis"));
        }
        let check = |rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != nt {
                return Err(Error::DimensionMismatch {
                    expected: nt,
                    found: rows.len(),
                });
            }
            for r in rows {
                if r.len() != np {
                    return Err(Error::DimensionMismatch {
                        expected: np,
                        found: r.len(),
                    });
                }
            }
            Ok(())
        };
        check(&values)?;
        let p_wrong = match p_wrong {
            Some(p) => {
                check(&p)?;
                Some(p.into_iter().flatten().collect())
            }
            None => None,
        };
        Ok(Self {
            t_axis,
            param_axis,
            kind,
            values: values.into_iter().flatten().collect(),
            p_wrong,
            time_major: true,
        })
    }

    fn offset(&self, ti: usize, pj: usize) -> usize {
        if self.time_major {
            ti * self.param_axis.len() + pj
        } else {
            pj * self.t_axis.len() + ti
        }
    }

    pub fn value(&self, ti: usize, pj: usize) -> f64 {
        self.values[self.offset(ti, pj)]
    }

    /// `P_{1,6}` at the grid point, if recorded.
    pub fn p_wrong(&self, ti: usize, pj: usize) -> Option<f64> {
        self.p_wrong.as_ref().map(|p| p[self.offset(ti, pj)])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.t_axis.len(), self.param_axis.len())
    }

    pub fn is_time_major(&self) -> bool {
        self.time_major
    }

    /// Same surface with the storage transposed.
    pub fn transpose(&self) -> Self {
        let (nt, np) = self.shape();
        let mut values = Vec::with_capacity(nt * np);
        let mut p_wrong = self.p_wrong.as_ref().map(|_| Vec::with_capacity(nt * np));
        let time_major = !self.time_major;
        let (outer, inner) = if time_major { (nt, np) } else { (np, nt) };
        for o in 0..outer {
            for i in 0..inner {
                let (ti, pj) = if time_major { (o, i) } else { (i, o) };
                values.push(self.value(ti, pj));
                if let (Some(p), Some(v)) = (p_wrong.as_mut(), self.p_wrong(ti, pj)) {
                    p.push(v);
                }
            }
        }
        Self {
            t_axis: self.t_axis.clone(),
            param_axis: self.param_axis.clone(),
            kind: self.kind,
            values,
            p_wrong,
            time_major,
        }
    }

    /// Restrict to `t ∈ [t_lo, t_hi]` (time-major copy).
    pub fn window_t(&self, t_lo: f64, t_hi: f64) -> Result<Self> {
        let idx: Vec<usize> = (0..self.t_axis.len())
            .filter(|&i| (t_lo..=t_hi).contains(&self.t_axis[i]))
            .collect();
        if idx.is_empty() {
            return Err(Error::Empty("time window"));
        }
        let np = self.param_axis.len();
        let values = idx
            .iter()
            .map(|&ti| (0..np).map(|pj| self.value(ti, pj)).collect())
            .collect();
        let p_wrong = self.p_wrong.as_ref().map(|_| {
            idx.iter()
                .map(|&ti| (0..np).filter_map(|pj| self.p_wrong(ti, pj)).collect())
                .collect()
        });
        Self::from_rows(
            idx.iter().map(|&i| self.t_axis[i]).collect(),
            self.param_axis.clone(),
            self.kind,
            values,
            p_wrong,
        )
    }

    /// Iterate `(t, param, value, p_wrong)` in time-major order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, Option<f64>)> + '_ {
        let (nt, np) = self.shape();
        (0..nt).flat_map(move |ti| {
            (0..np).map(move |pj| {
                (
                    self.t_axis[ti],
                    self.param_axis[pj],
                    self.value(ti, pj),
                    self.p_wrong(ti, pj),
                )
            })
        })
    }
}

fn params_for(base: &RouterParams, kind: ParamKind, value: f64) -> Result<RouterParams> {
    match kind {
        ParamKind::Phase => base.with_phi(value),
        ParamKind::Weight => base.with_beta(value),
    }
}

fn objective_value(
    amps: &RoutingAmplitudes,
    objective: Objective,
    sp_grid: &SuperpositionGrid,
) -> f64 {
    match objective {
        Objective::Localized => amps.u41.norm_sqr().clamp(0.0, 1.0),
        Objective::Average => amps.average(sp_grid),
        Objective::WorstCase => amps.worst_case(sp_grid).value,
    }
}

/// Evaluate `objective` on every `(t, param)` grid point. Rows run over
/// time. The result does not depend on thread count or scheduling.
pub fn scan(
    base: &RouterParams,
    grid: &ScanGrid,
    objective: Objective,
    sp_grid: Option<&SuperpositionGrid>,
) -> Result<Surface> {
    let t_axis = grid.t.values();
    let param_axis = grid.param.values();
    let default_grid;
    let sp_grid = match sp_grid {
        Some(g) => g,
        None => {
            default_grid = SuperpositionGrid::default();
            &default_grid
        }
    };
    let routers = param_axis
        .iter()
        .map(|&v| params_for(base, grid.kind, v))
        .collect::<Result<Vec<_>>>()?;
    let wrong = ReducedLabel::WRONG_OUTPUTS.index();
    let input = ReducedLabel::INPUT.index();
    let columns: Vec<(Vec<f64>, Vec<f64>)> = routers
        .into_par_iter()
        .map(|params| {
            let router = Router::new(params);
            t_axis
                .iter()
                .map(|&t| {
                    let u = router.unitary(t);
                    let amps = RoutingAmplitudes::from_unitary(&u);
                    (
                        objective_value(&amps, objective, sp_grid),
                        u[(wrong, input)].norm_sqr().clamp(0.0, 1.0),
                    )
                })
                .unzip()
        })
        .collect();
    let (nt, np) = (t_axis.len(), param_axis.len());
    let mut values = vec![vec![0.0; np]; nt];
    let mut p_wrong = vec![vec![0.0; np]; nt];
    for (pj, (vals, wrongs)) in columns.into_iter().enumerate() {
        for ti in 0..nt {
            values[ti][pj] = vals[ti];
            p_wrong[ti][pj] = wrongs[ti];
        }
    }
    Surface::from_rows(t_axis, param_axis, grid.kind, values, Some(p_wrong))
}

/// Single-point evaluation of a scan objective, sharing diagonalizations
/// through `cache`.
pub fn evaluate_objective(
    base: &RouterParams,
    kind: ParamKind,
    objective: Objective,
    sp_grid: &SuperpositionGrid,
    cache: &SpectrumCache,
    t: f64,
    param: f64,
) -> Result<f64> {
    let router = cache.router(params_for(base, kind, param)?);
    Ok(objective_value(&router.amplitudes(t), objective, sp_grid))
}

/// Local refinement of a scan objective over `(t, param)`.
pub fn optimize(
    base: &RouterParams,
    kind: ParamKind,
    objective: Objective,
    sp_grid: &SuperpositionGrid,
    start: [f64; 2],
    bounds: [(f64, f64); 2],
    opts: &RefineOptions,
) -> Result<Refined> {
    let cache = SpectrumCache::new();
    // Phase bounds may run past 2π; RouterParams wraps them.
    params_for(base, kind, start[1])?;
    refine(
        |x| {
            evaluate_objective(base, kind, objective, sp_grid, &cache, x[0], x[1])
                .unwrap_or(f64::NAN)
        },
        start,
        bounds,
        opts,
    )
}

/// How [`find_peaks`] orders its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakOrder {
    #[default]
    Value,
    /// Broadest first (`width_t × width_param`).
    WidthProduct,
}

/// A local maximum of a surface above a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakReport {
    /// `(t, param)` at the maximum.
    pub location: (f64, f64),
    pub indices: (usize, usize),
    pub value: f64,
    /// Extent along time of the contiguous run through the peak where the
    /// surface stays at or above the threshold, counted in grid cells times
    /// the spacing.
    pub width_t: f64,
    /// Same along the parameter axis.
    pub width_param: f64,
    /// Midpoint of the above-threshold run on each axis.
    pub center: (f64, f64),
    /// `P_{1,6}` at the maximum, if the surface records it.
    pub wrong_output_prob: Option<f64>,
}

impl PeakReport {
    pub fn width_product(&self) -> f64 {
        self.width_t * self.width_param
    }
}

fn spacing(axis: &[f64]) -> f64 {
    if axis.len() > 1 {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    } else {
        0.0
    }
}

/// Local maxima at or above `threshold`, with plateau widths measured at the
/// threshold level.
///
/// A grid point is a maximum when no 8-neighbour is larger; among equal
/// neighbours the one with the smaller `(t, param)` index wins, so a flat
/// plateau yields one report.
pub fn find_peaks(surface: &Surface, threshold: f64, order: PeakOrder) -> Result<Vec<PeakReport>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(
            "threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ));
    }
    let (nt, np) = surface.shape();
    let (dt, dp) = (spacing(&surface.t_axis), spacing(&surface.param_axis));
    let mut peaks = Vec::new();
    for ti in 0..nt {
        for pj in 0..np {
            let v = surface.value(ti, pj);
            if !(v >= threshold) {
                continue;
            }
            if !is_local_max(surface, ti, pj) {
                continue;
            }
            let (t_lo, t_hi) = run(nt, ti, |i| surface.value(i, pj) >= threshold);
            let (p_lo, p_hi) = run(np, pj, |j| surface.value(ti, j) >= threshold);
            peaks.push(PeakReport {
                location: (surface.t_axis[ti], surface.param_axis[pj]),
                indices: (ti, pj),
                value: v,
                width_t: (t_hi - t_lo + 1) as f64 * dt,
                width_param: (p_hi - p_lo + 1) as f64 * dp,
                center: (
                    0.5 * (surface.t_axis[t_lo] + surface.t_axis[t_hi]),
                    0.5 * (surface.param_axis[p_lo] + surface.param_axis[p_hi]),
                ),
                wrong_output_prob: surface.p_wrong(ti, pj),
            });
        }
    }
    sort_peaks(&mut peaks, order);
    Ok(peaks)
}

fn is_local_max(surface: &Surface, ti: usize, pj: usize) -> bool {
    let (nt, np) = surface.shape();
    let v = surface.value(ti, pj);
    for di in -1i64..=1 {
        for dj in -1i64..=1 {
            if di == 0 && dj == 0 {
                continue;
            }
            let (i, j) = (ti as i64 + di, pj as i64 + dj);
            if i < 0 || j < 0 || i >= nt as i64 || j >= np as i64 {
                continue;
            }
            let (i, j) = (i as usize, j as usize);
            let nv = surface.value(i, j);
            if nv > v || (nv == v && (i, j) < (ti, pj)) {
                return false;
            }
        }
    }
    true
}

fn run(len: usize, at: usize, inside: impl Fn(usize) -> bool) -> (usize, usize) {
    let mut lo = at;
    while lo > 0 && inside(lo - 1) {
        lo -= 1;
    }
    let mut hi = at;
    while hi + 1 < len && inside(hi + 1) {
        hi += 1;
    }
    (lo, hi)
}

fn sort_peaks(peaks: &mut [PeakReport], order: PeakOrder) {
    let tie = |a: &PeakReport, b: &PeakReport| {
        b.width_product()
            .total_cmp(&a.width_product())
            .then(a.location.0.total_cmp(&b.location.0))
            .then(a.location.1.total_cmp(&b.location.1))
    };
    peaks.sort_by(|a, b| -> Ordering {
        match order {
            PeakOrder::Value => b.value.total_cmp(&a.value).then_with(|| tie(a, b)),
            PeakOrder::WidthProduct => b
                .width_product()
                .total_cmp(&a.width_product())
                .then(b.value.total_cmp(&a.value))
                .then(a.location.0.total_cmp(&b.location.0))
                .then(a.location.1.total_cmp(&b.location.1)),
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface_from_fn(nt: usize, np: usize, f: impl Fn(f64, f64) -> f64) -> Surface {
        let t_axis: Vec<f64> = (0..nt).map(|i| i as f64 * 0.1).collect();
        let p_axis: Vec<f64> = (0..np).map(|j| j as f64 * 0.05).collect();
        let values = t_axis
            .iter()
            .map(|&t| p_axis.iter().map(|&p| f(t, p)).collect())
            .collect();
        Surface::from_rows(t_axis, p_axis, ParamKind::Phase, values, None).unwrap()
    }

    #[test]
    fn quadratic_bowl() {
        let f = |x: [f64; 2]| -(x[0] - 1.3).powi(2) - 2.0 * (x[1] + 0.4).powi(2);
        let r = refine(
            f,
            [0.0, 0.0],
            [(-5.0, 5.0), (-5.0, 5.0)],
            &RefineOptions::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.point[0] - 1.3).abs() < 1e-3);
        assert!((r.point[1] + 0.4).abs() < 1e-3);
        assert!(r.value >= r.start_value);
    }

    #[test]
    fn plateau_returns_start() {
        let r = refine(
            |_| 0.5,
            [0.2, 0.3],
            [(0.0, 1.0), (0.0, 1.0)],
            &RefineOptions::default(),
        )
        .unwrap();
        assert_eq!(r.point, [0.2, 0.3]);
        assert_eq!(r.value, 0.5);
        assert!(r.converged);
    }

    #[test]
    fn refine_respects_bounds_and_errors() {
        let f = |x: [f64; 2]| x[0] + x[1];
        let r = refine(
            f,
            [0.5, 0.5],
            [(0.0, 1.0), (0.0, 2.0)],
            &RefineOptions::default(),
        )
        .unwrap();
        assert_eq!(r.point, [1.0, 2.0]);
        assert!(refine(
            f,
            [3.0, 0.5],
            [(0.0, 1.0), (0.0, 1.0)],
            &RefineOptions::default()
        )
        .is_err());
        let bad = |x: [f64; 2]| if x[0] > 0.55 { f64::NAN } else { x[0] };
        assert_eq!(
            refine(
                bad,
                [0.5, 0.5],
                [(0.0, 1.0), (0.0, 1.0)],
                &RefineOptions::default()
            ),
            Err(Error::NonFinite("objective"))
        );
    }

    #[test]
    fn axis_validation() {
        assert!(AxisRange::new(0.0, 1.0, 1, true).is_err());
        assert!(AxisRange::new(1.0, 1.0, 5, true).is_err());
        assert!(AxisRange::new(2.0, 1.0, 5, true).is_err());
        let a = AxisRange::new(0.0, 1.0, 5, true).unwrap();
        assert_eq!(a.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let p = AxisRange::new(0.0, 4.0, 4, false).unwrap();
        assert_eq!(p.values(), vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn constant_surface_below_threshold_has_no_peaks() {
        let s = surface_from_fn(10, 12, |_, _| 0.3);
        assert!(find_peaks(&s, 0.5, PeakOrder::Value).unwrap().is_empty());
    }

    #[test]
    fn flat_plateau_reported_once() {
        let s = surface_from_fn(6, 7, |_, _| 0.9);
        let peaks = find_peaks(&s, 0.5, PeakOrder::Value).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].indices, (0, 0));
        assert!((peaks[0].width_t - 0.6).abs() < 1e-12);
        assert!((peaks[0].width_param - 0.35).abs() < 1e-12);
    }

    #[test]
    fn gaussian_peak_recovered_within_one_cell() {
        let (t0, p0) = (2.37, 0.81);
        let s = surface_from_fn(50, 40, |t, p| {
            0.95 * (-((t - t0).powi(2) / 0.5 + (p - p0).powi(2) / 0.1)).exp()
        });
        let peaks = find_peaks(&s, 0.5, PeakOrder::Value).unwrap();
        assert_eq!(peaks.len(), 1);
        let pk = peaks[0];
        assert!((pk.location.0 - t0).abs() <= 0.1);
        assert!((pk.location.1 - p0).abs() <= 0.05);
        assert!(pk.width_t > 0.0 && pk.width_param > 0.0);
        assert!((pk.center.0 - t0).abs() <= 0.1);
    }

    #[test]
    fn ordering_and_ties() {
        // two equal-height peaks, the second broader
        let s = surface_from_fn(60, 60, |t, p| {
            let a = 0.9 * (-((t - 1.0).powi(2) + (p - 0.5).powi(2)) / 0.02).exp();
            let b = 0.9 * (-((t - 4.0).powi(2) + (p - 2.0).powi(2)) / 0.2).exp();
            a.max(b)
        });
        let by_value = find_peaks(&s, 0.5, PeakOrder::Value).unwrap();
        assert_eq!(by_value.len(), 2);
        assert_eq!(by_value[0].value, by_value[1].value);
        assert!(by_value[0].width_product() > by_value[1].width_product());
        assert!((by_value[0].location.0 - 4.0).abs() < 1e-9);
        let by_width = find_peaks(&s, 0.5, PeakOrder::WidthProduct).unwrap();
        assert_eq!(by_width[0].indices, by_value[0].indices);
    }

    #[test]
    fn transposition_invariance() {
        let s = surface_from_fn(30, 25, |t, p| {
            0.5 + 0.45 * (3.0 * t).sin() * (5.0 * p).cos()
        });
        let a = find_peaks(&s, 0.6, PeakOrder::Value).unwrap();
        let b = find_peaks(&s.transpose(), 0.6, PeakOrder::Value).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);
        assert!(!s.transpose().is_time_major());
        assert_eq!(s.transpose().transpose(), s);
    }

    #[test]
    fn invalid_threshold() {
        let s = surface_from_fn(3, 3, |_, _| 0.5);
        assert!(find_peaks(&s, 0.0, PeakOrder::Value).is_err());
        assert!(find_peaks(&s, 1.0, PeakOrder::Value).is_err());
    }

    #[test]
    fn scan_is_deterministic_and_consistent() {
        let base = RouterParams::new(12, 1.0, 0.0).unwrap();
        let grid = ScanGrid::new(
            AxisRange::new(0.0, 5.0, 11, true).unwrap(),
            AxisRange::new(0.0, TAU, 8, false).unwrap(),
            ParamKind::Phase,
        );
        let a = scan(&base, &grid, Objective::Localized, None).unwrap();
        let b = scan(&base, &grid, Objective::Localized, None).unwrap();
        assert_eq!(a, b);
        for (t, phi, v, pw) in a.rows() {
            let p = base.with_phi(phi).unwrap();
            let p14 = crate::routing::transition_probability(&p, t, 1, 4).unwrap();
            let p16 = crate::routing::transition_probability(&p, t, 1, 6).unwrap();
            assert!((v - p14).abs() < 1e-12);
            assert!((pw.unwrap() - p16).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_scan_varies_beta() {
        let base = RouterParams::new(5, 1.0, 0.0).unwrap();
        let grid = ScanGrid::new(
            AxisRange::new(1.0, 3.0, 3, true).unwrap(),
            AxisRange::new(0.0, 2.0, 3, true).unwrap(),
            ParamKind::Weight,
        );
        let s = scan(&base, &grid, Objective::Localized, None).unwrap();
        let p = RouterParams::new(5, 2.0, 0.0).unwrap();
        let expect = crate::routing::transition_probability(&p, 3.0, 1, 4).unwrap();
        assert!((s.value(2, 2) - expect).abs() < 1e-12);
    }
}
