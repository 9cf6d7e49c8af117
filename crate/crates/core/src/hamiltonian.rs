//! Router Hamiltonians.
//!
//! The full graph has `2(n + 1)` vertices: internal vertices `x_0..x_n` forming
//! a complete graph (storage indices `0..=n`) and external vertices
//! `y_0..y_n` (storage indices `n + 1..=2n + 1`), with `y_m` attached to `x_m`.
//! The single modified link between the input-side internal vertex `x̄_j` and
//! the output-side internal vertex `x̄_k` carries `⟨x̄_k|H|x̄_j⟩ = β e^{iφ}`.
//!
//! The reduced basis groups vertices that evolve identically:
//!
//! | label | state                                   |
//! |-------|-----------------------------------------|
//! | 1     | input port `y_j`                        |
//! | 2     | input-side internal vertex `x̄_j`        |
//! | 3     | output-side internal vertex `x̄_k`       |
//! | 4     | target output port `y_k`                |
//! | 5     | uniform superposition of other internals |
//! | 6     | uniform superposition of other outputs   |
//!
//! Labels are 1-based everywhere in the public API ([`ReducedLabel`]); matrix
//! storage is 0-based, so label `l` lives at row/column `l - 1`.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::C64;

/// Dimension of the reduced basis.
pub const REDUCED_DIM: usize = 6;

/// Largest `n` for which the full graph Hamiltonian will be materialized.
pub const MAX_FULL_OUTPUTS: u64 = 4096;

/// Default tolerance used when validating externally supplied Hermitian data.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// One router instance: number of outputs, link weight and chiral phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouterParams {
    n_outputs: u64,
    beta: f64,
    phi: f64,
}

impl RouterParams {
    /// Build validated parameters. `phi` is reduced into `[0, 2π)`.
    pub fn new(n_outputs: u64, beta: f64, phi: f64) -> Result<Self> {
        if n_outputs < 2 {
            return Err(Error::TooFewOutputs(n_outputs));
        }
        if !beta.is_finite() {
            return Err(Error::NonFinite("beta"));
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite("phi"));
        }
        Ok(Self {
            n_outputs,
            beta,
            phi: wrap_phase(phi),
        })
    }

    pub fn n_outputs(&self) -> u64 {
        self.n_outputs
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Chiral phase in `[0, 2π)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn with_phi(&self, phi: f64) -> Result<Self> {
        Self::new(self.n_outputs, self.beta, phi)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.n_outputs, beta, self.phi)
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// A 1-based label of the reduced basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedLabel(u8);

impl ReducedLabel {
    pub const INPUT: Self = Self(1);
    pub const INPUT_INTERNAL: Self = Self(2);
    pub const OUTPUT_INTERNAL: Self = Self(3);
    pub const OUTPUT: Self = Self(4);
    pub const BULK_INTERNAL: Self = Self(5);
    pub const WRONG_OUTPUTS: Self = Self(6);

    pub fn new(label: usize) -> Result<Self> {
        if (1..=REDUCED_DIM).contains(&label) {
            Ok(Self(label as u8))
        } else {
            Err(Error::InvalidLabel(label))
        }
    }

    pub fn label(self) -> usize {
        self.0 as usize
    }

    /// 0-based storage index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (1..=REDUCED_DIM as u8).map(Self)
    }
}

impl fmt::Display for ReducedLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}⟩", self.0)
    }
}

/// Square complex matrix that is exactly conjugate-symmetric.
///
/// Every constructor either writes entries in conjugate pairs or symmetrizes
/// its input, so `H[j][k] == conj(H[k][j])` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<C64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            data: DMatrix::zeros(dim, dim),
        }
    }

    /// Accept a matrix that is Hermitian within `tol` (max-abs) and store its
    /// exactly symmetrized part `(M + M†) / 2`.
    pub fn try_from_matrix(m: DMatrix<C64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entry"));
        }
        let dev = hermitian_deviation(&m);
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        let dim = m.nrows();
        let mut h = Self::zeros(dim);
        for r in 0..dim {
            h.data[(r, r)] = C64::new(m[(r, r)].re, 0.0);
            for c in r + 1..dim {
                let v = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
                h.set_pair(r, c, v);
            }
        }
        Ok(h)
    }

    /// Write `v` at `(r, c)` and `conj(v)` at `(c, r)`. On the diagonal only the
    /// real part is kept.
    pub fn set_pair(&mut self, r: usize, c: usize, v: C64) {
        if r == c {
            self.data[(r, r)] = C64::new(v.re, 0.0);
        } else {
            self.data[(r, c)] = v;
            self.data[(c, r)] = v.conj();
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[(r, c)]
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    /// Max-abs deviation from conjugate symmetry; zero for every instance.
    pub fn hermiticity_error(&self) -> f64 {
        hermitian_deviation(&self.data)
    }
}

/// Largest `|M[j][k] - conj(M[k][j])|` over all entries.
pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

/// Vertex numbering of the full router graph and the choice of ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FullGraphLayout {
    n_outputs: u64,
    input_internal: usize,
    output_internal: usize,
}

impl FullGraphLayout {
    /// `input_internal` and `output_internal` are internal vertex numbers in
    /// `0..=n`; the matching external ports are attached to them.
    pub fn new(n_outputs: u64, input_internal: usize, output_internal: usize) -> Result<Self> {
        if n_outputs < 2 {
            return Err(Error::TooFewOutputs(n_outputs));
        }
        if n_outputs > MAX_FULL_OUTPUTS {
            return Err(invalid(
                "n_outputs",
                format!("full graph limited to n <= {MAX_FULL_OUTPUTS}"),
            ));
        }
        let n = n_outputs as usize;
        for (name, idx) in [
            ("input_internal", input_internal),
            ("output_internal", output_internal),
        ] {
            if idx > n {
                return Err(Error::InvalidLayout(format!(
                    "{name} = {idx} outside internal range 0..={n}"
                )));
            }
        }
        if input_internal == output_internal {
            return Err(Error::PortsCoincide(input_internal));
        }
        Ok(Self {
            n_outputs,
            input_internal,
            output_internal,
        })
    }

    /// Input pair on internal vertex 0, output pair on internal vertex 1.
    pub fn default_for(n_outputs: u64) -> Result<Self> {
        Self::new(n_outputs, 0, 1)
    }

    pub fn n_outputs(&self) -> u64 {
        self.n_outputs
    }

    /// Total number of vertices, `2(n + 1)`.
    pub fn dim(&self) -> usize {
        2 * (self.n_outputs as usize + 1)
    }

    /// Storage index of internal vertex `x_m`.
    pub fn internal(&self, m: usize) -> usize {
        m
    }

    /// Storage index of external vertex `y_m`.
    pub fn external(&self, m: usize) -> usize {
        self.n_outputs as usize + 1 + m
    }

    pub fn input_internal(&self) -> usize {
        self.input_internal
    }

    pub fn output_internal(&self) -> usize {
        self.output_internal
    }

    pub fn internal_indices(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.n_outputs as usize
    }

    pub fn external_indices(&self) -> std::ops::RangeInclusive<usize> {
        self.external(0)..=self.external(self.n_outputs as usize)
    }

    /// Internal vertices that are neither the input nor the output side.
    fn bulk(&self) -> impl Iterator<Item = usize> + '_ {
        self.internal_indices()
            .filter(move |&m| m != self.input_internal && m != self.output_internal)
    }
}

/// Full `2(n + 1)`-dimensional router Hamiltonian.
pub fn build_full_hamiltonian(
    params: &RouterParams,
    layout: &FullGraphLayout,
) -> Result<HermitianMatrix> {
    if params.n_outputs != layout.n_outputs {
        return Err(Error::InvalidLayout(format!(
            "layout built for n = {}, params have n = {}",
            layout.n_outputs, params.n_outputs
        )));
    }
    let n = layout.n_outputs as usize;
    let one = C64::new(1.0, 0.0);
    let mut h = HermitianMatrix::zeros(layout.dim());
    for m in 0..=n {
        for l in 0..m {
            h.set_pair(layout.internal(m), layout.internal(l), one);
        }
        h.set_pair(layout.internal(m), layout.external(m), one);
    }
    h.set_pair(
        layout.output_internal,
        layout.input_internal,
        chiral_link(params.beta, params.phi),
    );
    Ok(h)
}

fn chiral_link(beta: f64, phase: f64) -> C64 {
    if phase == 0.0 {
        C64::new(beta, 0.0)
    } else {
        C64::from_polar(beta, phase)
    }
}

/// The 6×6 reduced Hamiltonian.
pub fn build_reduced_hamiltonian(params: &RouterParams) -> HermitianMatrix {
    reduced_with_phase(params.n_outputs, params.beta, params.phi)
}

/// Reduced Hamiltonian for a raw (unwrapped) phase. Used where the phase is a
/// stochastic path and only `e^{iφ}` matters.
pub fn reduced_with_phase(n_outputs: u64, beta: f64, phase: f64) -> HermitianMatrix {
    let n = n_outputs as f64;
    let bulk = (n - 1.0).sqrt();
    let one = C64::new(1.0, 0.0);
    let mut h = HermitianMatrix::zeros(REDUCED_DIM);
    h.set_pair(0, 1, one);
    h.set_pair(1, 2, chiral_link(beta, phase).conj());
    h.set_pair(1, 4, C64::new(bulk, 0.0));
    h.set_pair(2, 4, C64::new(bulk, 0.0));
    h.set_pair(2, 3, one);
    h.set_pair(4, 4, C64::new(n - 2.0, 0.0));
    h.set_pair(4, 5, one);
    h
}

/// Isometry whose column `c` (label `c + 1`) is the full-graph amplitude
/// vector of reduced basis state `|c + 1⟩`.
pub fn reduction_isometry(layout: &FullGraphLayout) -> DMatrix<C64> {
    let n = layout.n_outputs as usize;
    let mut v = DMatrix::zeros(layout.dim(), REDUCED_DIM);
    let one = C64::new(1.0, 0.0);
    v[(layout.external(layout.input_internal), 0)] = one;
    v[(layout.input_internal, 1)] = one;
    v[(layout.output_internal, 2)] = one;
    v[(layout.external(layout.output_internal), 3)] = one;
    let amp = C64::new(1.0 / ((n - 1) as f64).sqrt(), 0.0);
    for m in layout.bulk() {
        v[(layout.internal(m), 4)] = amp;
        v[(layout.external(m), 5)] = amp;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().fold(0.0, |a, z| a.max(z.norm()))
    }

    #[test]
    fn rejects_small_n_and_coinciding_ports() {
        assert_eq!(RouterParams::new(1, 1.0, 0.0), Err(Error::TooFewOutputs(1)));
        assert_eq!(FullGraphLayout::new(3, 2, 2), Err(Error::PortsCoincide(2)));
        assert!(FullGraphLayout::new(3, 0, 4).is_err());
        assert!(RouterParams::new(3, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn phase_is_wrapped() {
        let p = RouterParams::new(3, 1.0, -FRAC_PI_2).unwrap();
        assert!((p.phi() - 3.0 * FRAC_PI_2).abs() < 1e-15);
        let p = RouterParams::new(3, 1.0, TAU).unwrap();
        assert_eq!(p.phi(), 0.0);
        let p = RouterParams::new(3, 1.0, -1e-300).unwrap();
        assert!(p.phi() < TAU);
    }

    #[test]
    fn full_graph_without_chirality_is_adjacency() {
        let params = RouterParams::new(2, 1.0, 0.0).unwrap();
        let layout = FullGraphLayout::default_for(2).unwrap();
        let h = build_full_hamiltonian(&params, &layout).unwrap();
        assert_eq!(h.dim(), 6);
        let m = h.as_matrix();
        for r in 0..6 {
            for c in 0..6 {
                let z = m[(r, c)];
                assert_eq!(z.im, 0.0);
                assert!(z.re == 0.0 || z.re == 1.0);
                assert_eq!(z, m[(c, r)]);
            }
            assert_eq!(m[(r, r)], C64::new(0.0, 0.0));
        }
        // 3 internal edges + 3 pendant edges
        let edges: f64 = m.iter().map(|z| z.re).sum::<f64>() / 2.0;
        assert_eq!(edges, 6.0);
    }

    #[test]
    fn quarter_turn_phase_on_modified_link() {
        let params = RouterParams::new(2, 1.0, FRAC_PI_2).unwrap();
        let layout = FullGraphLayout::default_for(2).unwrap();
        let h = build_full_hamiltonian(&params, &layout).unwrap();
        let (j, k) = (layout.input_internal(), layout.output_internal());
        assert!((h.get(k, j) - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((h.get(j, k) - C64::new(0.0, -1.0)).norm() < 1e-15);
        // remaining internal entries untouched
        assert_eq!(h.get(0, 2), C64::new(1.0, 0.0));
        assert_eq!(h.get(1, 2), C64::new(1.0, 0.0));
    }

    #[test]
    fn zero_weight_removes_link() {
        let params = RouterParams::new(5, 0.0, 0.0).unwrap();
        let layout = FullGraphLayout::default_for(5).unwrap();
        let h = build_full_hamiltonian(&params, &layout).unwrap();
        assert_eq!(h.get(0, 1), C64::new(0.0, 0.0));
        assert_eq!(h.get(1, 0), C64::new(0.0, 0.0));
        for m in 0..=5 {
            for l in 0..=5 {
                let expected = if m == l || (m.min(l), m.max(l)) == (0, 1) {
                    0.0
                } else {
                    1.0
                };
                assert_eq!(h.get(m, l).re, expected, "({m}, {l})");
            }
        }
    }

    #[test]
    fn full_graph_rejects_mismatched_layout() {
        let params = RouterParams::new(4, 1.0, 0.0).unwrap();
        let layout = FullGraphLayout::default_for(3).unwrap();
        assert!(build_full_hamiltonian(&params, &layout).is_err());
    }

    #[test]
    fn reduced_matrix_entries() {
        let h = build_reduced_hamiltonian(&RouterParams::new(2, 1.0, 0.0).unwrap());
        let expected = [
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 1.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        ];
        for (r, row) in expected.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                assert_eq!(h.get(r, c), C64::new(v, 0.0));
            }
        }

        let h = build_reduced_hamiltonian(&RouterParams::new(5, 1.0, PI).unwrap());
        assert!((h.get(1, 2) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(h.get(4, 4), C64::new(3.0, 0.0));
        assert_eq!(h.get(1, 4), C64::new(2.0, 0.0));
        assert_eq!(h.get(2, 4), C64::new(2.0, 0.0));
    }

    #[test]
    fn reduced_uses_conjugate_phase_above_diagonal() {
        let h = build_reduced_hamiltonian(&RouterParams::new(7, 0.5, 1.1).unwrap());
        assert!((h.get(1, 2) - C64::from_polar(0.5, -1.1)).norm() < 1e-15);
        assert!((h.get(2, 1) - C64::from_polar(0.5, 1.1)).norm() < 1e-15);
        assert_eq!(h.hermiticity_error(), 0.0);
    }

    #[test]
    fn isometry_columns() {
        let v = reduction_isometry(&FullGraphLayout::default_for(2).unwrap());
        for c in [4, 5] {
            let nz: Vec<_> = v
                .column(c)
                .iter()
                .filter(|z| z.norm() > 0.0)
                .copied()
                .collect();
            assert_eq!(nz, vec![C64::new(1.0, 0.0)]);
        }
        let v = reduction_isometry(&FullGraphLayout::default_for(5).unwrap());
        for c in [4, 5] {
            let nz: Vec<_> = v
                .column(c)
                .iter()
                .filter(|z| z.norm() > 0.0)
                .copied()
                .collect();
            assert_eq!(nz.len(), 4);
            assert!(nz.iter().all(|z| (z.re - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn isometry_is_orthonormal() {
        for n in 2..=12 {
            let v = reduction_isometry(&FullGraphLayout::new(n, 3 % (n as usize + 1), 1).unwrap());
            let gram = v.adjoint() * &v;
            let err = max_abs(&(gram - DMatrix::identity(6, 6)));
            assert!(err < 1e-15, "n = {n}: {err}");
        }
    }

    #[test]
    fn projection_reproduces_reduced_hamiltonian() {
        for n in 2..=8u64 {
            for &(beta, phi) in &[(1.0, 0.0), (0.3, 1.7), (-2.0, 5.5), (0.0, 3.0)] {
                let params = RouterParams::new(n, beta, phi).unwrap();
                let layout = FullGraphLayout::default_for(n).unwrap();
                let v = reduction_isometry(&layout);
                let full = build_full_hamiltonian(&params, &layout).unwrap();
                let projected = v.adjoint() * full.as_matrix() * &v;
                let reduced = build_reduced_hamiltonian(&params);
                let err = max_abs(&(projected - reduced.as_matrix()));
                assert!(err < 1e-12, "n={n} beta={beta} phi={phi}: {err}");
            }
        }
    }

    #[test]
    fn phase_periodicity() {
        for &phi in &[0.0, 0.4, 2.0, 6.2] {
            let a = build_reduced_hamiltonian(&RouterParams::new(9, 1.3, phi).unwrap());
            let b = build_reduced_hamiltonian(&RouterParams::new(9, 1.3, phi + TAU).unwrap());
            assert!(max_abs(&(a.into_matrix() - b.into_matrix())) < 1e-14);
        }
    }

    #[test]
    fn hermitian_validation() {
        let mut m = DMatrix::from_element(2, 2, C64::new(0.0, 0.0));
        m[(0, 1)] = C64::new(1.0, 1.0);
        m[(1, 0)] = C64::new(1.0, 1.0);
        assert!(matches!(
            HermitianMatrix::try_from_matrix(m.clone(), 1e-10),
            Err(Error::NotHermitian(_))
        ));
        m[(1, 0)] = C64::new(1.0, -1.0 + 1e-12);
        let h = HermitianMatrix::try_from_matrix(m, 1e-10).unwrap();
        assert_eq!(h.hermiticity_error(), 0.0);
    }

    #[test]
    fn labels() {
        assert!(ReducedLabel::new(0).is_err());
        assert!(ReducedLabel::new(7).is_err());
        assert_eq!(ReducedLabel::new(4).unwrap(), ReducedLabel::OUTPUT);
        assert_eq!(ReducedLabel::OUTPUT.index(), 3);
        assert_eq!(ReducedLabel::all().count(), 6);
    }
}
