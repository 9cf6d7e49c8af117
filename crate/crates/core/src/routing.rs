//! Routing figures of merit.
//!
//! Localized routing is measured by `P_{a,b}(t) = |⟨b|e^{-iH_red t}|a⟩|²`.
//! Superposition routing sends `|ψ₀⟩ = α|1⟩ + √(1-α²) e^{iχ}|2⟩` towards
//! `|w⟩ = α|4⟩ + √(1-α²) e^{iχ}|3⟩` and is scored by `|⟨w|U(t)|ψ₀⟩|²`,
//! averaged or minimized over `(α, χ)`.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dynamics::{PureState, Spectrum};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{build_reduced_hamiltonian, ReducedLabel, RouterParams, REDUCED_DIM};
use crate::search::{refine, RefineOptions};
use crate::C64;

/// Tolerance used to validate density matrices.
pub const DENSITY_TOL: f64 = 1e-10;

/// Step at which the worst-case local refinement stops.
pub const WORST_CASE_STEP_TOL: f64 = 1e-4;

fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Superposition parameters `(α, χ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionParams {
    alpha: f64,
    chi: f64,
}

impl SuperpositionParams {
    pub fn new(alpha: f64, chi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        if !chi.is_finite() {
            return Err(Error::NonFinite("chi"));
        }
        Ok(Self {
            alpha,
            chi: chi.rem_euclid(TAU),
        })
    }

    /// Fully localized input `|1⟩`.
    pub fn localized() -> Self {
        Self {
            alpha: 1.0,
            chi: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Coefficient `√(1-α²) e^{iχ}` of the second component.
    pub fn second_amplitude(&self) -> C64 {
        C64::from_polar((1.0 - self.alpha * self.alpha).max(0.0).sqrt(), self.chi)
    }
}

fn two_level_state(
    sp: &SuperpositionParams,
    first: ReducedLabel,
    second: ReducedLabel,
) -> PureState {
    let mut amps = DVector::zeros(REDUCED_DIM);
    amps[first.index()] = C64::new(sp.alpha, 0.0);
    amps[second.index()] += sp.second_amplitude();
    PureState::new(amps).expect("two-level state has unit norm")
}

/// `α|1⟩ + √(1-α²) e^{iχ}|2⟩`.
pub fn input_state(sp: &SuperpositionParams) -> PureState {
    two_level_state(sp, ReducedLabel::INPUT, ReducedLabel::INPUT_INTERNAL)
}

/// `α|4⟩ + √(1-α²) e^{iχ}|3⟩`.
pub fn target_state(sp: &SuperpositionParams) -> PureState {
    two_level_state(sp, ReducedLabel::OUTPUT, ReducedLabel::OUTPUT_INTERNAL)
}

/// How grid points over `(α, χ)` are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingMeasure {
    /// `α` evenly spaced on `[0, 1]` (both ends included).
    Uniform,
    /// `α²` evenly spaced (midpoints), i.e. uniform on the Bloch sphere.
    Haar,
}

/// Rectangular grid over the superposition parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionGrid {
    alphas: Vec<f64>,
    chis: Vec<f64>,
    measure: AveragingMeasure,
}

impl SuperpositionGrid {
    pub const DEFAULT_ALPHA_POINTS: usize = 41;
    pub const DEFAULT_CHI_POINTS: usize = 64;

    /// `n_alpha` values of `α` on `[0, 1]`, `n_chi` values of `χ` on `[0, 2π)`.
    pub fn uniform(n_alpha: usize, n_chi: usize) -> Result<Self> {
        Self::with_measure(n_alpha, n_chi, AveragingMeasure::Uniform)
    }

    pub fn haar(n_alpha: usize, n_chi: usize) -> Result<Self> {
        Self::with_measure(n_alpha, n_chi, AveragingMeasure::Haar)
    }

    pub fn with_measure(n_alpha: usize, n_chi: usize, measure: AveragingMeasure) -> Result<Self> {
        if n_alpha == 0 || n_chi == 0 {
            return Err(Error::Empty("superposition grid"));
        }
        let alphas = match measure {
            AveragingMeasure::Uniform if n_alpha == 1 => vec![1.0],
            AveragingMeasure::Uniform => (0..n_alpha)
                .map(|i| i as f64 / (n_alpha - 1) as f64)
                .collect(),
            AveragingMeasure::Haar => (0..n_alpha)
                .map(|i| ((i as f64 + 0.5) / n_alpha as f64).sqrt())
                .collect(),
        };
        let chis = (0..n_chi).map(|j| TAU * j as f64 / n_chi as f64).collect();
        Ok(Self {
            alphas,
            chis,
            measure,
        })
    }

    /// Explicit point lists; `α` values must lie in `[0, 1]`.
    pub fn from_points(alphas: Vec<f64>, chis: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || chis.is_empty() {
            return Err(Error::Empty("superposition grid"));
        }
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {a}")));
        }
        if chis.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("chi"));
        }
        Ok(Self {
            alphas,
            chis,
            measure: AveragingMeasure::Uniform,
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn chis(&self) -> &[f64] {
        &self.chis
    }

    pub fn measure(&self) -> AveragingMeasure {
        self.measure
    }

    pub fn len(&self) -> usize {
        self.alphas.len() * self.chis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = SuperpositionParams> + '_ {
        self.alphas.iter().flat_map(move |&alpha| {
            self.chis
                .iter()
                .map(move |&chi| SuperpositionParams::new(alpha, chi).expect("validated grid"))
        })
    }

    fn alpha_step(&self) -> f64 {
        if self.alphas.len() > 1 {
            1.0 / (self.alphas.len() - 1) as f64
        } else {
            0.25
        }
    }

    fn chi_step(&self) -> f64 {
        TAU / self.chis.len() as f64
    }
}

impl Default for SuperpositionGrid {
    fn default() -> Self {
        Self::uniform(Self::DEFAULT_ALPHA_POINTS, Self::DEFAULT_CHI_POINTS)
            .expect("default grid is non-empty")
    }
}

/// The four propagator elements that enter superposition routing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingAmplitudes {
    /// `⟨4|U|1⟩`
    pub u41: C64,
    /// `⟨4|U|2⟩`
    pub u42: C64,
    /// `⟨3|U|1⟩`
    pub u31: C64,
    /// `⟨3|U|2⟩`
    pub u32: C64,
}

impl RoutingAmplitudes {
    pub fn from_unitary(u: &DMatrix<C64>) -> Self {
        let (one, two) = (
            ReducedLabel::INPUT.index(),
            ReducedLabel::INPUT_INTERNAL.index(),
        );
        let (three, four) = (
            ReducedLabel::OUTPUT_INTERNAL.index(),
            ReducedLabel::OUTPUT.index(),
        );
        Self {
            u41: u[(four, one)],
            u42: u[(four, two)],
            u31: u[(three, one)],
            u32: u[(three, two)],
        }
    }

    /// `⟨w|U|ψ₀⟩ = α² U₄₁ + α b U₄₂ + α b̄ U₃₁ + |b|² U₃₂` with `b = √(1-α²) e^{iχ}`.
    pub fn overlap(&self, sp: &SuperpositionParams) -> C64 {
        let a = sp.alpha;
        let b = sp.second_amplitude();
        self.u41 * (a * a) + self.u42 * b * a + self.u31 * b.conj() * a + self.u32 * b.norm_sqr()
    }

    pub fn fidelity(&self, sp: &SuperpositionParams) -> f64 {
        clamp_probability(self.overlap(sp).norm_sqr())
    }

    pub fn average(&self, grid: &SuperpositionGrid) -> f64 {
        let sum: f64 = grid.points().map(|sp| self.fidelity(&sp)).sum();
        sum / grid.len() as f64
    }

    /// Grid minimum followed by coordinate descent from the grid argmin.
    pub fn worst_case(&self, grid: &SuperpositionGrid) -> WorstCase {
        let (start, grid_value) = grid
            .points()
            .map(|sp| (sp, self.fidelity(&sp)))
            .fold(None::<(SuperpositionParams, f64)>, |best, cur| match best {
                Some(b) if b.1 <= cur.1 => Some(b),
                _ => Some(cur),
            })
            .expect("grid is non-empty");
        let eval = |x: [f64; 2]| -> f64 {
            let sp = SuperpositionParams {
                alpha: x[0].clamp(0.0, 1.0),
                chi: x[1],
            };
            -self.fidelity(&sp)
        };
        let opts = RefineOptions {
            initial_steps: [grid.alpha_step() / 2.0, grid.chi_step() / 2.0],
            min_step: WORST_CASE_STEP_TOL,
            max_evaluations: 20_000,
        };
        let bounds = [(0.0, 1.0), (start.chi - TAU, start.chi + TAU)];
        match refine(eval, [start.alpha, start.chi], bounds, &opts) {
            Ok(r) => WorstCase {
                value: clamp_probability(-r.value),
                at: SuperpositionParams::new(r.point[0], r.point[1]).unwrap_or(start),
                grid_value,
            },
            Err(_) => WorstCase {
                value: grid_value,
                at: start,
                grid_value,
            },
        }
    }
}

/// Result of a worst-case search over `(α, χ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    pub at: SuperpositionParams,
    /// Plain grid minimum before refinement.
    pub grid_value: f64,
}

/// A router with its reduced Hamiltonian already diagonalized.
#[derive(Debug, Clone)]
pub struct Router {
    params: RouterParams,
    spectrum: Arc<Spectrum>,
}

impl Router {
    pub fn new(params: RouterParams) -> Self {
        Self {
            params,
            spectrum: Arc::new(Spectrum::new(&build_reduced_hamiltonian(&params))),
        }
    }

    pub fn with_spectrum(params: RouterParams, spectrum: Arc<Spectrum>) -> Self {
        Self { params, spectrum }
    }

    pub fn params(&self) -> &RouterParams {
        &self.params
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        self.spectrum.unitary(t)
    }

    pub fn evolve(&self, t: f64, psi0: &PureState) -> Result<PureState> {
        if psi0.dim() != REDUCED_DIM {
            return Err(Error::DimensionMismatch {
                expected: REDUCED_DIM,
                found: psi0.dim(),
            });
        }
        Ok(PureState::from_raw(
            self.spectrum.apply(t, psi0.amplitudes()),
        ))
    }

    /// `|⟨to|U(t)|from⟩|²`.
    pub fn transition_probability(&self, t: f64, from: ReducedLabel, to: ReducedLabel) -> f64 {
        let column = self
            .spectrum
            .apply(t, PureState::reduced(from).amplitudes());
        clamp_probability(column[to.index()].norm_sqr())
    }

    pub fn amplitudes(&self, t: f64) -> RoutingAmplitudes {
        RoutingAmplitudes::from_unitary(&self.unitary(t))
    }

    pub fn fidelity(&self, t: f64, sp: &SuperpositionParams) -> f64 {
        self.amplitudes(t).fidelity(sp)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("t"))
    }
}

/// `P_{from,to}(t) = |⟨to|e^{-iH_red t}|from⟩|²`.
pub fn transition_probability(
    params: &RouterParams,
    t: f64,
    from: usize,
    to: usize,
) -> Result<f64> {
    check_time(t)?;
    let from = ReducedLabel::new(from)?;
    let to = ReducedLabel::new(to)?;
    Ok(Router::new(*params).transition_probability(t, from, to))
}

/// Probability of reaching any single wrong output, `P_{1,6}(t) / (n - 1)`.
pub fn per_wrong_output_probability(params: &RouterParams, t: f64) -> Result<f64> {
    let p16 = transition_probability(params, t, 1, 6)?;
    Ok(p16 / (params.n_outputs() - 1) as f64)
}

/// `|⟨w|U(t)|ψ₀⟩|²` for the superposition given by `sp`.
pub fn routing_fidelity(params: &RouterParams, t: f64, sp: &SuperpositionParams) -> Result<f64> {
    check_time(t)?;
    Ok(Router::new(*params).fidelity(t, sp))
}

/// Mean routing fidelity over the grid.
pub fn average_fidelity(params: &RouterParams, t: f64, grid: &SuperpositionGrid) -> Result<f64> {
    check_time(t)?;
    if grid.is_empty() {
        return Err(Error::Empty("superposition grid"));
    }
    Ok(Router::new(*params).amplitudes(t).average(grid))
}

/// Worst-case routing fidelity: grid minimum refined locally.
pub fn min_fidelity(params: &RouterParams, t: f64, grid: &SuperpositionGrid) -> Result<f64> {
    Ok(worst_case_fidelity(params, t, grid)?.value)
}

pub fn worst_case_fidelity(
    params: &RouterParams,
    t: f64,
    grid: &SuperpositionGrid,
) -> Result<WorstCase> {
    check_time(t)?;
    if grid.is_empty() {
        return Err(Error::Empty("superposition grid"));
    }
    Ok(Router::new(*params).amplitudes(t).worst_case(grid))
}

/// Diagonalized reduced Hamiltonians keyed by `(n, β, φ)`, shareable across
/// threads.
#[derive(Debug, Default)]
pub struct SpectrumCache {
    entries: RwLock<HashMap<(u64, u64, u64), Arc<Spectrum>>>,
}

impl SpectrumCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn router(&self, params: RouterParams) -> Router {
        let key = (
            params.n_outputs(),
            params.beta().to_bits(),
            params.phi().to_bits(),
        );
        if let Some(s) = self.entries.read().expect("cache lock").get(&key) {
            return Router::with_spectrum(params, Arc::clone(s));
        }
        let router = Router::new(params);
        self.entries
            .write()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&router.spectrum));
        router
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validate `m` within [`DENSITY_TOL`] and store its Hermitian part.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let rho = Self::hermitian_part(m)?;
        rho.validate()?;
        Ok(rho)
    }

    fn hermitian_part(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.is_empty() {
            return Err(Error::Empty("density matrix"));
        }
        let dev = crate::hamiltonian::hermitian_deviation(&m);
        if !(dev <= DENSITY_TOL) {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let data = (&m + m.adjoint()).scale(0.5);
        Ok(Self { data })
    }

    fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(psi: &PureState) -> Self {
        let a = psi.amplitudes();
        Self {
            data: a * a.adjoint(),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            data: DMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    /// `Σ_i p_i |ψ_i⟩⟨ψ_i|`; weights must be non-negative and sum to 1.
    pub fn mixture(weights: &[f64], states: &[PureState]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty("mixture"));
        }
        if weights.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                found: weights.len(),
            });
        }
        let dim = states[0].dim();
        let mut acc = DMatrix::zeros(dim, dim);
        for (&w, s) in weights.iter().zip(states) {
            if !(w >= 0.0) {
                return Err(invalid("weight", format!("must be >= 0, got {w}")));
            }
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            let a = s.amplitudes();
            acc += (a * a.adjoint()).scale(w);
        }
        Self::new(acc)
    }

    /// Accumulated sum of outer products, normalized by its own trace. Used
    /// by ensemble averages where the weights are built up incrementally.
    pub(crate) fn from_accumulator(acc: DMatrix<C64>) -> Result<Self> {
        let mut rho = Self::hermitian_part(acc)?;
        let tr = rho.trace();
        if !(tr > 0.0) {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        rho.data.unscale_mut(tr);
        rho.validate()?;
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.data.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &PureState) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        let a = psi.amplitudes();
        Ok(a.dotc(&(&self.data * a)).re)
    }

    /// The dominant eigenvector when `ρ` is pure within `tol` on its purity.
    pub fn as_pure(&self, tol: f64) -> Option<PureState> {
        if (self.purity() - 1.0).abs() > tol {
            return None;
        }
        let eig = SymmetricEigen::new(self.data.clone());
        let top = eig.eigenvalues.imax();
        PureState::normalized(eig.eigenvectors.column(top).into_owned()).ok()
    }

    fn sqrt(&self) -> DMatrix<C64> {
        let eig = SymmetricEigen::new(self.data.clone());
        let mut scaled = eig.eigenvectors.clone();
        for (mut col, &l) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
            col.scale_mut(l.max(0.0).sqrt());
        }
        scaled * eig.eigenvectors.adjoint()
    }
}

/// Uhlmann fidelity `[Tr √(√ρ σ √ρ)]²`.
///
/// When either argument is pure this is the expectation value `⟨w|σ|w⟩`,
/// which is evaluated directly.
pub fn mixed_state_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    if let Some(w) = rho.as_pure(DENSITY_TOL) {
        return Ok(clamp_probability(sigma.expectation(&w)?));
    }
    if let Some(w) = sigma.as_pure(DENSITY_TOL) {
        return Ok(clamp_probability(rho.expectation(&w)?));
    }
    Ok(uhlmann_fidelity_general(rho, sigma))
}

/// General-route Uhlmann fidelity, `(‖√ρ √σ‖_*)²` with the nuclear norm taken
/// from the singular values.
pub fn uhlmann_fidelity_general(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    let prod = rho.sqrt() * sigma.sqrt();
    let nuclear: f64 = prod.singular_values().iter().sum();
    clamp_probability(nuclear * nuclear)
}

/// Fidelity values over a time grid for one router configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub params: RouterParams,
    pub input: String,
    pub target: String,
}

impl FidelityCurve {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        params: RouterParams,
        input: impl Into<String>,
        target: impl Into<String>,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        if times.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(invalid("times", "must be sorted"));
        }
        if let Some(v) = values.iter().find(|v| !(-1e-12..=1.0 + 1e-12).contains(*v)) {
            return Err(invalid("values", format!("{v} outside [0, 1]")));
        }
        Ok(Self {
            times,
            values,
            params,
            input: input.into(),
            target: target.into(),
        })
    }

    /// Noiseless superposition-routing curve.
    pub fn noiseless(
        params: RouterParams,
        times: Vec<f64>,
        sp: &SuperpositionParams,
    ) -> Result<Self> {
        let router = Router::new(params);
        let values = times.iter().map(|&t| router.fidelity(t, sp)).collect();
        Self::new(
            times,
            values,
            params,
            format!("input(alpha={}, chi={})", sp.alpha(), sp.chi()),
            format!("target(alpha={}, chi={})", sp.alpha(), sp.chi()),
        )
    }

    /// `(t, value)` at the maximum.
    pub fn max(&self) -> Option<(f64, f64)> {
        self.times
            .iter()
            .zip(&self.values)
            .fold(None, |best: Option<(f64, f64)>, (&t, &v)| match best {
                Some(b) if b.1 >= v => Some(b),
                _ => Some((t, v)),
            })
    }
}
