//! Zeeman product basis and elementary spin-1/2 operators.
//!
//! The 2^N-dimensional Hilbert space of N spins-1/2 is indexed by bit
//! patterns: basis index `b` has bit `i` describing spin `i`, with a set bit
//! meaning "up". The total magnetic quantum number of `|b⟩` is
//!
//! ```text
//! m(b) = popcount(b) − N/2 ,
//! ```
//!
//! and the coherence order of a density-operator element `⟨r|ρ|c⟩` is
//! `M = m(r) − m(c)`. Operators use the spin-1/2 normalization with
//! eigenvalues ±1/2 (not the Pauli ±1).

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on the spin count: 2^14 complex doubles per matrix row is the
/// largest dense problem this crate is expected to handle on one host.
pub const MAX_SPINS: usize = 14;

/// One of the three spin projection axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

// ---------------------------------------------------------------------------
// spin systems
// ---------------------------------------------------------------------------

/// A concrete N-spin system: spin count plus the symmetric coupling matrix
/// `d_ij` in angular-frequency units (rad/s) with zero diagonal.
#[derive(Debug, Clone)]
pub struct SpinSystem {
    pub n_spins: usize,
    pub couplings: Array2<f64>,
    /// Free-form run identifier carried into output metadata.
    pub label: String,
}

impl SpinSystem {
    /// Builds a system after validating the coupling matrix invariants.
    pub fn new(n_spins: usize, couplings: Array2<f64>, label: impl Into<String>) -> Result<Self> {
        if n_spins < 1 || n_spins > MAX_SPINS {
            return Err(Error::Size(format!(
                "n_spins = {n_spins} outside supported range 1..={MAX_SPINS}"
            )));
        }
        if couplings.shape() != [n_spins, n_spins] {
            return Err(Error::Shape(format!(
                "coupling matrix is {:?}, expected [{n_spins}, {n_spins}]",
                couplings.shape()
            )));
        }
        for i in 0..n_spins {
            if couplings[[i, i]] != 0.0 {
                return Err(Error::Domain(format!(
                    "coupling matrix has nonzero diagonal at ({i}, {i})"
                )));
            }
            for j in 0..n_spins {
                if couplings[[i, j]] != couplings[[j, i]] {
                    return Err(Error::Domain(format!(
                        "coupling matrix not symmetric at ({i}, {j})"
                    )));
                }
                if !couplings[[i, j]].is_finite() {
                    return Err(Error::Domain(format!(
                        "coupling matrix not finite at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(SpinSystem { n_spins, couplings, label: label.into() })
    }

    /// Hilbert-space dimension 2^N.
    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    /// RMS coupling per spin, `sqrt((1/N) Σ_i Σ_{j≠i} d_ij²)`, the
    /// second-moment normalization used throughout (rad/s).
    pub fn rms_coupling(&self) -> f64 {
        let total: f64 = self.couplings.iter().map(|d| d * d).sum();
        (total / self.n_spins as f64).sqrt()
    }
}

// ---------------------------------------------------------------------------
// basis
// ---------------------------------------------------------------------------

/// The Zeeman product basis for N spins: basis metadata only, no matrices.
#[derive(Debug, Clone)]
pub struct ZeemanBasis {
    pub n_spins: usize,
    /// `m_of[b]` is the total magnetic quantum number of basis state `b`.
    /// Half-integers are exact in floating point, so differences of entries
    /// are exact integers (or exact half-integers for odd N).
    pub m_of: Vec<f64>,
}

/// Builds the basis for `n_spins` spins with the bit-pattern ordering.
pub fn build_basis(n_spins: usize) -> Result<ZeemanBasis> {
    if n_spins < 1 || n_spins > MAX_SPINS {
        return Err(Error::Size(format!(
            "n_spins = {n_spins} outside supported range 1..={MAX_SPINS}"
        )));
    }
    let dim = 1usize << n_spins;
    let half_n = n_spins as f64 / 2.0;
    let m_of = (0..dim).map(|b| b.count_ones() as f64 - half_n).collect();
    Ok(ZeemanBasis { n_spins, m_of })
}

impl ZeemanBasis {
    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    /// `Tr(Iz²) = N·2^N/4`, the normalization constant of the MQC spectrum.
    pub fn iz_norm(&self) -> f64 {
        self.n_spins as f64 * self.dim() as f64 / 4.0
    }
}

/// Coherence order `M = m(row) − m(col)` of a density-operator element.
///
/// Both indices must be valid basis indices; this is a total function on the
/// basis (no error cases) and antisymmetric under swapping its arguments.
pub fn coherence_order(basis: &ZeemanBasis, row: usize, col: usize) -> i32 {
    (basis.m_of[row] - basis.m_of[col]).round() as i32
}

// ---------------------------------------------------------------------------
// operators
// ---------------------------------------------------------------------------

/// Structural tag for an operator matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Hermitian,
    Unitary,
    General,
}

/// A dense operator on the 2^N Hilbert space, tagged with its claimed kind.
///
/// The tag is a contract: [`OperatorMatrix::validate`] checks hermiticity to
/// 1e-12 (relative, max-norm) or unitarity to 1e-10 (max-norm). Constructors
/// do not validate (building is hot-path); validation runs where the contract
/// requires it and in the test suite.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub dim: usize,
    pub entries: Array2<Complex64>,
    pub kind: OpKind,
}

impl OperatorMatrix {
    fn from_entries(entries: Array2<Complex64>, kind: OpKind) -> Result<Self> {
        let shape = entries.shape();
        if shape[0] != shape[1] {
            return Err(Error::Shape(format!("operator matrix is {shape:?}, expected square")));
        }
        Ok(OperatorMatrix { dim: shape[0], entries, kind })
    }

    pub fn hermitian(entries: Array2<Complex64>) -> Result<Self> {
        Self::from_entries(entries, OpKind::Hermitian)
    }

    pub fn unitary(entries: Array2<Complex64>) -> Result<Self> {
        Self::from_entries(entries, OpKind::Unitary)
    }

    pub fn general(entries: Array2<Complex64>) -> Result<Self> {
        Self::from_entries(entries, OpKind::General)
    }

    /// Identity operator of the given dimension.
    pub fn identity(dim: usize) -> Self {
        let mut entries = Array2::zeros((dim, dim));
        for i in 0..dim {
            entries[[i, i]] = Complex64::new(1.0, 0.0);
        }
        OperatorMatrix { dim, entries, kind: OpKind::Unitary }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> OperatorMatrix {
        let entries = self.entries.t().mapv(|z| z.conj());
        OperatorMatrix { dim: self.dim, entries, kind: self.kind }
    }

    /// Largest absolute entry (max-norm), used by the validity checks.
    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Checks the invariant implied by `kind`.
    ///
    /// * hermitian: `‖A − A†‖_max ≤ 1e-12 · ‖A‖_max`
    /// * unitary:   `‖A†A − 1‖_max ≤ 1e-10`
    /// * general:   nothing to check
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            OpKind::Hermitian => {
                let scale = self.max_norm().max(f64::MIN_POSITIVE);
                let mut worst = 0.0f64;
                for r in 0..self.dim {
                    for c in r..self.dim {
                        let dev = (self.entries[[r, c]] - self.entries[[c, r]].conj()).norm();
                        worst = worst.max(dev);
                    }
                }
                if worst > 1e-12 * scale {
                    return Err(Error::Kind(format!(
                        "matrix tagged hermitian deviates from A = A† by {worst:.3e} (relative {:.3e})",
                        worst / scale
                    )));
                }
                Ok(())
            }
            OpKind::Unitary => {
                let product = self.dagger().entries.dot(&self.entries);
                let mut worst = 0.0f64;
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        let target = if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                        worst = worst.max((product[[r, c]] - target).norm());
                    }
                }
                if worst > 1e-10 {
                    return Err(Error::Kind(format!(
                        "matrix tagged unitary deviates from U†U = 1 by {worst:.3e}"
                    )));
                }
                Ok(())
            }
            OpKind::General => Ok(()),
        }
    }
}

/// `Î_axis` acting on `site`, tensored with identity elsewhere.
///
/// Built directly in the bit-pattern basis: for each basis state the operator
/// touches at most one partner state (the one with the site's bit flipped).
pub fn single_spin_op(basis: &ZeemanBasis, site: usize, axis: Axis) -> Result<OperatorMatrix> {
    if site >= basis.n_spins {
        return Err(Error::Index(format!(
            "site {site} out of range for {} spins",
            basis.n_spins
        )));
    }
    let dim = basis.dim();
    let mask = 1usize << site;
    let mut entries: Array2<Complex64> = Array2::zeros((dim, dim));
    for b in 0..dim {
        match axis {
            Axis::Z => {
                let val = if b & mask != 0 { 0.5 } else { -0.5 };
                entries[[b, b]] = Complex64::new(val, 0.0);
            }
            Axis::X => {
                entries[[b ^ mask, b]] = Complex64::new(0.5, 0.0);
            }
            Axis::Y => {
                // ⟨up|Iy|down⟩ = −i/2, ⟨down|Iy|up⟩ = +i/2
                let r = b ^ mask;
                let val = if r & mask != 0 { -0.5 } else { 0.5 };
                entries[[r, b]] = Complex64::new(0.0, val);
            }
        }
    }
    OperatorMatrix::hermitian(entries)
}

/// Collective `Î_z = Σ_i Î_z^i`: diagonal with entry `m(b)` at index `b`.
pub fn collective_iz(basis: &ZeemanBasis) -> OperatorMatrix {
    let dim = basis.dim();
    let mut entries: Array2<Complex64> = Array2::zeros((dim, dim));
    for b in 0..dim {
        entries[[b, b]] = Complex64::new(basis.m_of[b], 0.0);
    }
    OperatorMatrix { dim, entries, kind: OpKind::Hermitian }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
