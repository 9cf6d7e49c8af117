//! Unitary evolution `U(t) = e^{-iHt}` through the spectral decomposition
//! `H = Q Λ Q†`, so `U(t) = Q e^{-iΛt} Q†`.
//!
//! Time is dimensionless (`ħ = 1`, any prefactor of `H` absorbed into `t`).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{
    build_reduced_hamiltonian, reduction_isometry, FullGraphLayout, HermitianMatrix, ReducedLabel,
    RouterParams, REDUCED_DIM,
};
use crate::C64;

/// Tolerance on `Σ|a_j|² = 1` for [`PureState`].
pub const NORM_TOL: f64 = 1e-10;

/// Normalized amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: DVector<C64>,
}

impl PureState {
    /// Wrap `amps`, which must already have unit norm within [`NORM_TOL`].
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Empty("state"));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("amplitude"));
        }
        let norm_sq = amps.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sq));
        }
        Ok(Self { amps })
    }

    /// Rescale `amps` to unit norm.
    pub fn normalized(amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        Self::new(amps.unscale(norm))
    }

    /// State localized on storage index `idx`.
    pub fn basis(dim: usize, idx: usize) -> Result<Self> {
        if idx >= dim {
            return Err(invalid("idx", format!("{idx} >= dim {dim}")));
        }
        let mut amps = DVector::zeros(dim);
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    /// Reduced-basis state `|label⟩`.
    pub fn reduced(label: ReducedLabel) -> Self {
        let mut amps = DVector::zeros(REDUCED_DIM);
        amps[label.index()] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub(crate) fn from_raw(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitude(&self, idx: usize) -> C64 {
        self.amps[idx]
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Eigendecomposition of a Hermitian matrix, reusable across many times.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn new(h: &HermitianMatrix) -> Self {
        let eig = SymmetricEigen::new(h.as_matrix().clone());
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    /// `Q Λ Q†`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (mut col, &l) in scaled.column_iter_mut().zip(self.values.iter()) {
            col.scale_mut(l);
        }
        scaled * self.vectors.adjoint()
    }

    fn phases(&self, t: f64) -> impl Iterator<Item = C64> + '_ {
        self.values
            .iter()
            .map(move |&l| C64::from_polar(1.0, -l * t))
    }

    /// `e^{-iHt}` as a dense matrix.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (mut col, ph) in scaled.column_iter_mut().zip(self.phases(t)) {
            col *= ph;
        }
        scaled * self.vectors.adjoint()
    }

    /// `e^{-iHt} ψ` without forming the full propagator.
    pub fn apply(&self, t: f64, psi: &DVector<C64>) -> DVector<C64> {
        let mut coeffs = self.vectors.ad_mul(psi);
        for (c, ph) in coeffs.iter_mut().zip(self.phases(t)) {
            *c *= ph;
        }
        &self.vectors * coeffs
    }
}

/// A unitary `e^{-iHt}` together with its time.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    matrix: DMatrix<C64>,
    time: f64,
}

impl Propagator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Frobenius norm of `U†U - I`.
    pub fn unitarity_error(&self) -> f64 {
        let dim = self.dim();
        (self.matrix.ad_mul(&self.matrix) - DMatrix::identity(dim, dim)).norm()
    }

    /// Element `⟨to|U|from⟩`.
    pub fn element(&self, to: usize, from: usize) -> C64 {
        self.matrix[(to, from)]
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        check_dim(self.dim(), psi.dim())?;
        Ok(PureState::from_raw(&self.matrix * psi.amplitudes()))
    }

    /// Product `self · other`, i.e. `other` applied first.
    pub fn compose(&self, other: &Propagator) -> Result<Propagator> {
        check_dim(self.dim(), other.dim())?;
        Ok(Propagator {
            matrix: &self.matrix * &other.matrix,
            time: self.time + other.time,
        })
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("t"))
    }
}

/// `e^{-iHt}`.
pub fn propagator(h: &HermitianMatrix, t: f64) -> Result<Propagator> {
    check_time(t)?;
    Ok(Propagator {
        matrix: Spectrum::new(h).unitary(t),
        time: t,
    })
}

/// `e^{-iHt} ψ₀`.
pub fn evolve(h: &HermitianMatrix, t: f64, psi0: &PureState) -> Result<PureState> {
    check_time(t)?;
    check_dim(h.dim(), psi0.dim())?;
    Ok(PureState::from_raw(
        Spectrum::new(h).apply(t, psi0.amplitudes()),
    ))
}

/// Time-ordered evolution under a piecewise-constant Hamiltonian: each
/// matrix acts for `dt`, earliest first, giving `U_M ⋯ U_1 ψ₀`.
pub fn evolve_piecewise(hs: &[HermitianMatrix], dt: f64, psi0: &PureState) -> Result<PureState> {
    if hs.is_empty() {
        return Err(Error::Empty("Hamiltonian sequence"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("must be finite and > 0, got {dt}")));
    }
    for h in hs {
        check_dim(psi0.dim(), h.dim())?;
    }
    let amps = hs.iter().fold(psi0.amplitudes().clone(), |psi, h| {
        Spectrum::new(h).apply(dt, &psi)
    });
    Ok(PureState::from_raw(amps))
}

/// Largest amplitude deviation `max |U_full(t) V - V U_red(t)|` between the
/// full-graph evolution of the reduced basis states and their reduced
/// evolution, lifted by the isometry `V`.
///
/// `full` is normally [`build_full_hamiltonian`](crate::build_full_hamiltonian)
/// for the same parameters; any other Hermitian matrix of the right size is
/// accepted, which makes the check itself testable.
pub fn reduction_deviation(
    full: &HermitianMatrix,
    params: &RouterParams,
    layout: &FullGraphLayout,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    check_dim(layout.dim(), full.dim())?;
    let v = reduction_isometry(layout);
    let lhs = Spectrum::new(full).unitary(t) * &v;
    let rhs = &v * Spectrum::new(&build_reduced_hamiltonian(params)).unitary(t);
    Ok((lhs - rhs).iter().fold(0.0, |m, z| m.max(z.norm())))
}
