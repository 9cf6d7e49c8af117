//! Phase noise on the chiral link.
//!
//! Static disorder: the phase is `φ + ε` with `ε` drawn once from a von Mises
//! density `p_k(ε) = e^{k cos ε} / (2π I₀(k))` on `[-π, π)`. Averages over
//! `ε` are computed by Gauss–Legendre quadrature.
//!
//! Dynamical noise: the phase follows an Ornstein–Uhlenbeck process
//! `dX = θ(μ - X) dt + Σ dW`, integrated with Euler–Maruyama from a
//! stationary start, and the state is averaged over trajectories evolved with
//! a piecewise-constant Hamiltonian.
//!
//! Every random draw comes from a ChaCha8 stream selected by trajectory index,
//! and trajectories are reduced in fixed batches in index order, so results
//! depend only on the seed.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Matrix6, SymmetricEigen, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::{PureState, Spectrum};
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{
    build_reduced_hamiltonian, reduced_with_phase, RouterParams, REDUCED_DIM,
};
use crate::quadrature::gauss_legendre_on;
use crate::routing::{input_state, target_state, DensityMatrix, SuperpositionParams};
use crate::C64;

/// Below this `k` the power series is used for `I₀`, above it the
/// large-argument expansion.
const BESSEL_SERIES_LIMIT: f64 = 20.0;

/// `e^{-k} I₀(k)`; finite for every `k ≥ 0`.
pub fn bessel_i0_scaled(k: f64) -> Result<f64> {
    check_concentration(k)?;
    if k <= BESSEL_SERIES_LIMIT {
        Ok(i0_series(k) * (-k).exp())
    } else {
        Ok(i0_asymptotic_scaled(k))
    }
}

/// Modified Bessel function of the first kind, order 0.
pub fn bessel_i0(k: f64) -> Result<f64> {
    check_concentration(k)?;
    if k <= BESSEL_SERIES_LIMIT {
        Ok(i0_series(k))
    } else {
        Ok(i0_asymptotic_scaled(k) * k.exp())
    }
}

fn check_concentration(k: f64) -> Result<()> {
    if !k.is_finite() {
        return Err(Error::NonFinite("k"));
    }
    if k < 0.0 {
        return Err(invalid("k", format!("must be >= 0, got {k}")));
    }
    Ok(())
}

/// `Σ_m (k/2)^{2m} / (m!)²`.
fn i0_series(k: f64) -> f64 {
    let q = 0.25 * k * k;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * m);
        sum += term;
        if term < sum * 1e-17 {
            return sum;
        }
    }
}

/// `e^{-k} I₀(k) ≈ (2πk)^{-1/2} Σ_j [(2j-1)!!]² / (j! (8k)^j)`, truncated at
/// the smallest term.
fn i0_asymptotic_scaled(k: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0;
    let mut j = 0.0f64;
    loop {
        j += 1.0;
        let next = term * (2.0 * j - 1.0).powi(2) / (j * 8.0 * k);
        if next >= term || next < sum * 1e-17 {
            if next < term {
                sum += next;
            }
            break;
        }
        term = next;
        sum += term;
    }
    sum / (TAU * k).sqrt()
}

/// Von Mises density `e^{k cos ε} / (2π I₀(k))`.
pub fn von_mises_pdf(eps: f64, k: f64) -> Result<f64> {
    let scaled = bessel_i0_scaled(k)?;
    if k == 0.0 {
        return Ok(1.0 / TAU);
    }
    Ok((k * (eps.cos() - 1.0)).exp() / (TAU * scaled))
}

/// Draw one von Mises deviate on `[-π, π)` (Best & Fisher rejection sampler).
pub fn sample_von_mises<R: Rng + ?Sized>(k: f64, rng: &mut R) -> f64 {
    if k < 1e-8 {
        return rng.random_range(-PI..PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * k * k).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * k);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = k * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { theta } else { -theta };
        }
    }
}

/// Static-disorder settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesSpec {
    k: f64,
    quadrature_points: usize,
}

impl VonMisesSpec {
    pub const DEFAULT_POINTS: usize = 129;
    /// Quadrature is doubled at most this many times.
    pub const MAX_DOUBLINGS: u32 = 6;
    /// Successive results closer than this are accepted.
    pub const STABLE_TOL: f64 = 1e-8;
    /// Final changes above this clear the `converged` flag.
    pub const WARN_TOL: f64 = 1e-6;

    pub fn new(k: f64) -> Result<Self> {
        Self::with_points(k, Self::DEFAULT_POINTS)
    }

    pub fn with_points(k: f64, quadrature_points: usize) -> Result<Self> {
        check_concentration(k)?;
        if quadrature_points < 8 {
            return Err(invalid(
                "quadrature_points",
                format!("need at least 8, got {quadrature_points}"),
            ));
        }
        Ok(Self {
            k,
            quadrature_points,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn quadrature_points(&self) -> usize {
        self.quadrature_points
    }

    /// Half-width of the integration window: where `p_k` has fallen by
    /// `e^{-46}` relative to its peak, capped at `π`.
    fn half_width(&self) -> f64 {
        if self.k == 0.0 {
            PI
        } else {
            (92.0 / self.k).sqrt().min(PI)
        }
    }

    /// Nodes `ε_i` and weights `p_k(ε_i) w_i`, normalized to sum to 1.
    fn nodes(&self, points: usize, layout: QuadratureLayout) -> Vec<(f64, f64)> {
        let l = self.half_width();
        let (lo, hi) = match layout {
            QuadratureLayout::Full => (-l, l),
            QuadratureLayout::Folded => (0.0, l),
        };
        let (x, w) = gauss_legendre_on(points, lo, hi);
        let mut nodes: Vec<(f64, f64)> = x
            .into_iter()
            .zip(w)
            .map(|(e, wi)| (e, wi * (self.k * (e.cos() - 1.0)).exp()))
            .collect();
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        for n in &mut nodes {
            n.1 /= total;
        }
        nodes
    }
}

/// How the symmetric `ε` integral is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureLayout {
    /// Nodes over the whole window `[-L, L]`.
    #[default]
    Full,
    /// Nodes over `[0, L]`, integrand `f(ε) + f(-ε)`.
    Folded,
}

/// A quadrature result with its convergence status.
#[derive(Debug, Clone, PartialEq)]
pub struct Converged<T> {
    pub value: T,
    /// Quadrature points of the returned result.
    pub points: usize,
    /// Change between the last two refinements.
    pub last_change: f64,
    /// `false` when the last doubling still moved the result by more than
    /// [`VonMisesSpec::WARN_TOL`].
    pub converged: bool,
}

fn refine_quadrature<T>(
    vm: &VonMisesSpec,
    mut eval: impl FnMut(usize) -> T,
    distance: impl Fn(&T, &T) -> f64,
) -> Converged<T> {
    let mut points = vm.quadrature_points;
    let mut prev = eval(points);
    let mut change = f64::INFINITY;
    for _ in 0..VonMisesSpec::MAX_DOUBLINGS {
        let next_points = 2 * points;
        let next = eval(next_points);
        change = distance(&prev, &next);
        prev = next;
        points = next_points;
        if change <= VonMisesSpec::STABLE_TOL {
            break;
        }
    }
    Converged {
        value: prev,
        points,
        last_change: change,
        converged: change <= VonMisesSpec::WARN_TOL,
    }
}

/// Per-node fidelity curves `|⟨w|U(φ + ε_i, t)|ψ₀⟩|²`, summed with the
/// quadrature weights in node order.
fn averaged_curve(
    params: &RouterParams,
    times: &[f64],
    psi0: &PureState,
    w: &PureState,
    nodes: &[(f64, f64)],
    layout: QuadratureLayout,
) -> Vec<f64> {
    let per_node: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|&(eps, weight)| {
            let signs: &[f64] = match layout {
                QuadratureLayout::Full => &[1.0],
                QuadratureLayout::Folded => &[1.0, -1.0],
            };
            let mut out = vec![0.0; times.len()];
            for &s in signs {
                let h =
                    reduced_with_phase(params.n_outputs(), params.beta(), params.phi() + s * eps);
                let spec = Spectrum::new(&h);
                for (o, &t) in out.iter_mut().zip(times) {
                    let evolved = spec.apply(t, psi0.amplitudes());
                    *o += weight / signs.len() as f64 * w.amplitudes().dotc(&evolved).norm_sqr();
                }
            }
            out
        })
        .collect();
    let mut acc = vec![0.0; times.len()];
    for curve in per_node {
        for (a, v) in acc.iter_mut().zip(curve) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a = a.clamp(0.0, 1.0));
    acc
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `∫ p_k(ε) |⟨w|U(n, t, φ + ε)|ψ₀⟩|² dε` at one time.
pub fn static_noise_fidelity(
    params: &RouterParams,
    t: f64,
    sp: &SuperpositionParams,
    vm: &VonMisesSpec,
) -> Result<Converged<f64>> {
    static_noise_fidelity_with(params, t, sp, vm, QuadratureLayout::Full)
}

pub fn static_noise_fidelity_with(
    params: &RouterParams,
    t: f64,
    sp: &SuperpositionParams,
    vm: &VonMisesSpec,
    layout: QuadratureLayout,
) -> Result<Converged<f64>> {
    let c = static_noise_curve_with(params, &[t], sp, vm, layout)?;
    Ok(Converged {
        value: c.value[0],
        points: c.points,
        last_change: c.last_change,
        converged: c.converged,
    })
}

/// Static-noise fidelity over many times, sharing one diagonalization per
/// quadrature node.
pub fn static_noise_curve(
    params: &RouterParams,
    times: &[f64],
    sp: &SuperpositionParams,
    vm: &VonMisesSpec,
) -> Result<Converged<Vec<f64>>> {
    static_noise_curve_with(params, times, sp, vm, QuadratureLayout::Full)
}

fn static_noise_curve_with(
    params: &RouterParams,
    times: &[f64],
    sp: &SuperpositionParams,
    vm: &VonMisesSpec,
    layout: QuadratureLayout,
) -> Result<Converged<Vec<f64>>> {
    if let Some(t) = times.iter().find(|t| !t.is_finite()) {
        return Err(invalid("t", format!("non-finite time {t}")));
    }
    let psi0 = input_state(sp);
    let w = target_state(sp);
    Ok(refine_quadrature(
        vm,
        |points| averaged_curve(params, times, &psi0, &w, &vm.nodes(points, layout), layout),
        |a, b| max_diff(a, b),
    ))
}

/// Monte Carlo estimate of [`static_noise_fidelity`]: `(mean, standard error)`.
pub fn static_noise_fidelity_mc(
    params: &RouterParams,
    t: f64,
    sp: &SuperpositionParams,
    k: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_concentration(k)?;
    if samples < 2 {
        return Err(invalid("samples", "need at least 2"));
    }
    let psi0 = input_state(sp);
    let w = target_state(sp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let eps = sample_von_mises(k, &mut rng);
        let h = reduced_with_phase(params.n_outputs(), params.beta(), params.phi() + eps);
        let f = w
            .amplitudes()
            .dotc(&Spectrum::new(&h).apply(t, psi0.amplitudes()))
            .norm_sqr();
        sum += f;
        sum_sq += f * f;
    }
    Ok(mean_and_stderr(sum, sum_sq, samples))
}

fn mean_and_stderr(sum: f64, sum_sq: f64, count: usize) -> (f64, f64) {
    let n = count as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// `σ_out = ∫ p_k(ε) U|ψ₀⟩⟨ψ₀|U† dε` at time `t`.
pub fn static_noise_state(
    params: &RouterParams,
    t: f64,
    psi0: &PureState,
    vm: &VonMisesSpec,
) -> Result<Converged<DensityMatrix>> {
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    if psi0.dim() != REDUCED_DIM {
        return Err(Error::DimensionMismatch {
            expected: REDUCED_DIM,
            found: psi0.dim(),
        });
    }
    let mix = |points: usize| -> DMatrix<C64> {
        let parts: Vec<DMatrix<C64>> = vm
            .nodes(points, QuadratureLayout::Full)
            .par_iter()
            .map(|&(eps, weight)| {
                let h = reduced_with_phase(params.n_outputs(), params.beta(), params.phi() + eps);
                let a = Spectrum::new(&h).apply(t, psi0.amplitudes());
                (&a * a.adjoint()).scale(weight)
            })
            .collect();
        parts
            .into_iter()
            .fold(DMatrix::zeros(REDUCED_DIM, REDUCED_DIM), |acc, m| acc + m)
    };
    let c = refine_quadrature(vm, mix, |a, b| (a - b).norm());
    Ok(Converged {
        value: DensityMatrix::from_accumulator(c.value)?,
        points: c.points,
        last_change: c.last_change,
        converged: c.converged,
    })
}

/// Ornstein–Uhlenbeck phase-noise settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OUSpec {
    theta: f64,
    mu: Option<f64>,
    sigma_vol: f64,
    dt: f64,
    trajectories: usize,
    seed: u64,
}

impl OUSpec {
    pub const DEFAULT_DT: f64 = 0.01;
    pub const DEFAULT_TRAJECTORIES: usize = 2000;

    /// Mean reversion `θ` and volatility `Σ`; the long-time mean defaults to
    /// the router phase.
    pub fn new(theta: f64, sigma_vol: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(invalid(
                "theta",
                format!("must be finite and > 0, got {theta}"),
            ));
        }
        if !(sigma_vol.is_finite() && sigma_vol >= 0.0) {
            return Err(invalid(
                "sigma",
                format!("must be finite and >= 0, got {sigma_vol}"),
            ));
        }
        Ok(Self {
            theta,
            mu: None,
            sigma_vol,
            dt: Self::DEFAULT_DT,
            trajectories: Self::DEFAULT_TRAJECTORIES,
            seed: 0,
        })
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NonFinite("mu"));
        }
        self.mu = Some(mu);
        Ok(self)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", format!("must be finite and > 0, got {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn with_trajectories(mut self, trajectories: usize) -> Result<Self> {
        if trajectories == 0 {
            return Err(invalid("trajectories", "must be positive"));
        }
        self.trajectories = trajectories;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    pub fn sigma_vol(&self) -> f64 {
        self.sigma_vol
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn trajectories(&self) -> usize {
        self.trajectories
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `Σ² / (2θ)`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma_vol * self.sigma_vol / (2.0 * self.theta)
    }

    fn rng(&self, trajectory: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trajectory);
        rng
    }
}

/// Euler–Maruyama stepper for one trajectory.
struct OuPath {
    x: f64,
    mu: f64,
    theta: f64,
    diffusion: f64,
    dt: f64,
    rng: ChaCha8Rng,
}

impl OuPath {
    fn new(spec: &OUSpec, mu: f64, trajectory: u64) -> Self {
        let mut rng = spec.rng(trajectory);
        let z: f64 = rng.sample(StandardNormal);
        Self {
            x: mu + spec.stationary_variance().sqrt() * z,
            mu,
            theta: spec.theta,
            diffusion: spec.sigma_vol * spec.dt.sqrt(),
            dt: spec.dt,
            rng,
        }
    }

    fn current(&self) -> f64 {
        self.x
    }

    fn advance(&mut self) {
        let z: f64 = self.rng.sample(StandardNormal);
        self.x += self.theta * (self.mu - self.x) * self.dt + self.diffusion * z;
    }
}

/// One Euler–Maruyama path `X_0..=X_steps` (trajectory 0 of the seed), with
/// `X_0` drawn from the stationary law `N(μ, Σ²/2θ)`.
pub fn ou_sample_path(spec: &OUSpec, steps: usize) -> Vec<f64> {
    ou_sample_path_for(spec, steps, 0)
}

/// Path of trajectory `trajectory`; the long-time mean defaults to 0 when
/// unset.
pub fn ou_sample_path_for(spec: &OUSpec, steps: usize, trajectory: u64) -> Vec<f64> {
    let mut path = OuPath::new(spec, spec.mu.unwrap_or(0.0), trajectory);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(path.current());
    for _ in 0..steps {
        path.advance();
        out.push(path.current());
    }
    out
}

/// Mean and standard error of a fidelity estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Ensemble-averaged states at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct OuEnsemble {
    /// Times actually sampled (`round(t / dt) · dt`).
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Present when a target state was supplied.
    pub fidelity: Option<Vec<FidelityEstimate>>,
}

const OU_BATCH: usize = 16;

struct BatchAccumulator {
    rho: Vec<Matrix6<C64>>,
    f_sum: Vec<f64>,
    f_sq: Vec<f64>,
}

impl BatchAccumulator {
    fn new(snapshots: usize) -> Self {
        Self {
            rho: vec![Matrix6::zeros(); snapshots],
            f_sum: vec![0.0; snapshots],
            f_sq: vec![0.0; snapshots],
        }
    }

    fn merge(&mut self, other: BatchAccumulator) {
        for (a, b) in self.rho.iter_mut().zip(other.rho) {
            *a += b;
        }
        for (a, b) in self.f_sum.iter_mut().zip(other.f_sum) {
            *a += b;
        }
        for (a, b) in self.f_sq.iter_mut().zip(other.f_sq) {
            *a += b;
        }
    }
}

/// `e^{-i H_red(φ) dt}` for the reduced Hamiltonian at raw phase `phase`.
fn reduced_step(n: u64, beta: f64, phase: f64, dt: f64) -> Matrix6<C64> {
    let h = reduced_with_phase(n, beta, phase);
    let m = Matrix6::from_fn(|r, c| h.get(r, c));
    let eig = SymmetricEigen::new(m);
    let q = eig.eigenvectors;
    let mut scaled = q;
    for (mut col, &l) in scaled.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col *= C64::from_polar(1.0, -l * dt);
    }
    scaled * q.adjoint()
}

/// Average `U(t)|ψ₀⟩⟨ψ₀|U(t)†` over OU phase trajectories, where `U(t)` is
/// the time-ordered product of `e^{-i H_red(X_m) dt}` steps. Snapshots are
/// taken after `round(t / dt)` steps for each requested `t`.
pub fn ou_ensemble(
    params: &RouterParams,
    psi0: &PureState,
    spec: &OUSpec,
    times: &[f64],
    target: Option<&PureState>,
) -> Result<OuEnsemble> {
    if spec.trajectories < 2 {
        return Err(invalid(
            "trajectories",
            "need at least 2 for a standard error",
        ));
    }
    if psi0.dim() != REDUCED_DIM {
        return Err(Error::DimensionMismatch {
            expected: REDUCED_DIM,
            found: psi0.dim(),
        });
    }
    if let Some(w) = target {
        if w.dim() != REDUCED_DIM {
            return Err(Error::DimensionMismatch {
                expected: REDUCED_DIM,
                found: w.dim(),
            });
        }
    }
    if times.is_empty() {
        return Err(Error::Empty("time list"));
    }
    let mut snap_steps = Vec::with_capacity(times.len());
    for &t in times {
        if !(t.is_finite() && t >= 0.0) {
            return Err(invalid("t", format!("must be finite and >= 0, got {t}")));
        }
        snap_steps.push((t / spec.dt).round() as usize);
    }
    let max_steps = *snap_steps.iter().max().expect("non-empty");
    // snapshot indices grouped by step
    let mut at_step: Vec<Vec<usize>> = vec![Vec::new(); max_steps + 1];
    for (i, &s) in snap_steps.iter().enumerate() {
        at_step[s].push(i);
    }

    let mu = spec.mu.unwrap_or(params.phi());
    let (n, beta) = (params.n_outputs(), params.beta());
    let psi_init = Vector6::from_iterator(psi0.amplitudes().iter().copied());
    let w = target.map(|w| Vector6::from_iterator(w.amplitudes().iter().copied()));
    let snapshots = times.len();

    let batches = spec.trajectories.div_ceil(OU_BATCH);
    let partial: Vec<BatchAccumulator> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = BatchAccumulator::new(snapshots);
            let lo = b * OU_BATCH;
            let hi = (lo + OU_BATCH).min(spec.trajectories);
            for traj in lo..hi {
                let mut path = OuPath::new(spec, mu, traj as u64);
                let mut psi = psi_init;
                for (step, snaps) in at_step.iter().enumerate() {
                    for &i in snaps {
                        acc.rho[i] += psi * psi.adjoint();
                        if let Some(w) = &w {
                            let f = w.dotc(&psi).norm_sqr();
                            acc.f_sum[i] += f;
                            acc.f_sq[i] += f * f;
                        }
                    }
                    if step < max_steps {
                        psi = reduced_step(n, beta, path.current(), spec.dt) * psi;
                        path.advance();
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = BatchAccumulator::new(snapshots);
    for p in partial {
        total.merge(p);
    }

    let count = spec.trajectories;
    let states = total
        .rho
        .iter()
        .map(|m| DensityMatrix::from_accumulator(DMatrix::from_iterator(6, 6, m.iter().copied())))
        .collect::<Result<Vec<_>>>()?;
    let fidelity = w.map(|_| {
        total
            .f_sum
            .iter()
            .zip(&total.f_sq)
            .map(|(&s, &sq)| {
                let (mean, stderr) = mean_and_stderr(s, sq, count);
                FidelityEstimate {
                    mean: mean.clamp(0.0, 1.0),
                    stderr,
                }
            })
            .collect()
    });
    Ok(OuEnsemble {
        times: snap_steps.iter().map(|&s| s as f64 * spec.dt).collect(),
        states,
        fidelity,
    })
}

/// Ensemble-averaged state `ρ̄(t)` under OU phase noise.
pub fn ou_ensemble_state(
    params: &RouterParams,
    t: f64,
    psi0: &PureState,
    spec: &OUSpec,
) -> Result<DensityMatrix> {
    let mut e = ou_ensemble(params, psi0, spec, &[t], None)?;
    Ok(e.states.remove(0))
}

/// Routing fidelity of the OU-averaged state with its Monte Carlo error.
pub fn ou_ensemble_fidelity(
    params: &RouterParams,
    t: f64,
    sp: &SuperpositionParams,
    spec: &OUSpec,
) -> Result<FidelityEstimate> {
    let e = ou_ensemble(
        params,
        &input_state(sp),
        spec,
        &[t],
        Some(&target_state(sp)),
    )?;
    Ok(e.fidelity.expect("target supplied")[0])
}

/// Gaussian-variance correspondence between the two noise models: a von
/// Mises density with concentration `k` is close to `N(0, 1/k)`, and a
/// stationary OU variable is `N(μ, Σ²/2θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEquivalence {
    pub k: f64,
    pub variance: f64,
    pub theta: f64,
    pub sigma_vol: f64,
}

impl NoiseEquivalence {
    /// Match a von Mises concentration to an OU process with the given `θ`.
    pub fn from_von_mises(k: f64, theta: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(invalid("k", format!("must be finite and > 0, got {k}")));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(invalid(
                "theta",
                format!("must be finite and > 0, got {theta}"),
            ));
        }
        let variance = 1.0 / k;
        Ok(Self {
            k,
            variance,
            theta,
            sigma_vol: (2.0 * theta * variance).sqrt(),
        })
    }

    pub fn from_ou(theta: f64, sigma_vol: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(invalid(
                "theta",
                format!("must be finite and > 0, got {theta}"),
            ));
        }
        if !(sigma_vol.is_finite() && sigma_vol > 0.0) {
            return Err(invalid(
                "sigma",
                format!("must be finite and > 0, got {sigma_vol}"),
            ));
        }
        let variance = sigma_vol * sigma_vol / (2.0 * theta);
        Ok(Self {
            k: 1.0 / variance,
            variance,
            theta,
            sigma_vol,
        })
    }
}

/// Noise acting on the chiral phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    VonMisesStatic(VonMisesSpec),
    OrnsteinUhlenbeck(OUSpec),
}

/// Fidelity against time under a noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCurve {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    /// Monte Carlo standard errors (OU only).
    pub stderr: Option<Vec<f64>>,
    /// Quadrature convergence (von Mises only).
    pub converged: bool,
}

impl NoiseModel {
    pub fn fidelity_curve(
        &self,
        params: &RouterParams,
        times: &[f64],
        sp: &SuperpositionParams,
    ) -> Result<NoiseCurve> {
        match self {
            NoiseModel::VonMisesStatic(vm) => {
                let c = static_noise_curve(params, times, sp, vm)?;
                Ok(NoiseCurve {
                    times: times.to_vec(),
                    fidelity: c.value,
                    stderr: None,
                    converged: c.converged,
                })
            }
            NoiseModel::OrnsteinUhlenbeck(ou) => {
                let e = ou_ensemble(params, &input_state(sp), ou, times, Some(&target_state(sp)))?;
                let est = e.fidelity.expect("target supplied");
                Ok(NoiseCurve {
                    times: e.times,
                    fidelity: est.iter().map(|e| e.mean).collect(),
                    stderr: Some(est.iter().map(|e| e.stderr).collect()),
                    converged: true,
                })
            }
        }
    }
}

/// Noiseless fidelity curve, for comparison with [`NoiseModel::fidelity_curve`].
pub fn noiseless_curve(params: &RouterParams, times: &[f64], sp: &SuperpositionParams) -> Vec<f64> {
    let spec = Spectrum::new(&build_reduced_hamiltonian(params));
    let psi0 = input_state(sp);
    let w = target_state(sp);
    times
        .iter()
        .map(|&t| {
            w.amplitudes()
                .dotc(&spec.apply(t, psi0.amplitudes()))
                .norm_sqr()
                .clamp(0.0, 1.0)
        })
        .collect()
}
