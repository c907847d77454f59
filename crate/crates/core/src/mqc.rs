//! Multiple-quantum coherence readout: phase encoding, the signal `S(φ)`,
//! and extraction of the coherence-order distribution `A_M`.
//!
//! A density operator expanded in the Zeeman basis splits into coherence
//! blocks `ρ = Σ_M ρ_M`, where block M collects the entries with
//! `m_row − m_col = M`. A collective z-rotation tags each block with a phase,
//!
//! ```text
//! φ̂_z ρ φ̂_z^{−1} = Σ_M ρ_M e^{−iφM} ,      φ̂_z = e^{−iφ Iz} ,
//! ```
//!
//! so the observed signal `S(φ) = Tr{A · φ̂_z ρ φ̂_z^{−1}} / Tr{Iz²}` is a
//! Fourier series in φ whose coefficients are the spectrum amplitudes
//!
//! ```text
//! A_M = Tr{A_M† ρ_M} / Tr{Iz²} .
//! ```
//!
//! Two independent extraction routes are provided: [`spectrum_fft`] samples
//! `S(φ)` on a uniform grid and Fourier-inverts it, mirroring the laboratory
//! procedure, while [`spectrum_direct`] bins the matrix entries by coherence
//! order. They agree to near machine precision and serve as mutual oracles.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hilbert::{build_basis, coherence_order, OperatorMatrix, ZeemanBasis};

/// Which extraction route produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumSource {
    /// Fourier inversion of phase-encoded signal samples.
    Fft,
    /// Direct coherence-block binning of the matrix entries.
    Direct,
}

impl std::fmt::Display for SpectrumSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpectrumSource::Fft => write!(f, "fft"),
            SpectrumSource::Direct => write!(f, "direct"),
        }
    }
}

/// Distribution of multiple-quantum coherence amplitudes `A_M` over orders
/// `M ∈ [−N, N]`, normalized by `Tr{Iz²}` so that an unperturbed echo sums
/// to 1 regardless of system size.
#[derive(Debug, Clone)]
pub struct CoherenceSpectrum {
    pub n_spins: usize,
    /// `A_M` indexed by `M + n_spins`.
    amplitudes: Vec<f64>,
    /// `Σ_M A_M` before dividing by `Tr{Iz²}` (the raw trace overlap).
    pub normalization: f64,
    pub source: SpectrumSource,
}

impl CoherenceSpectrum {
    /// Assembles a spectrum from raw (unnormalized) per-order accumulators.
    ///
    /// `raw_re[M + n]` and `raw_im[M + n]` hold `Tr{A_M† ρ_M}`; `norm_const`
    /// is `Tr{Iz²}`. An imaginary residue above 1e-9 on the normalized scale
    /// indicates corrupted inputs and is reported rather than truncated.
    pub(crate) fn from_raw(
        n_spins: usize,
        raw_re: Vec<f64>,
        raw_im: Vec<f64>,
        norm_const: f64,
        source: SpectrumSource,
    ) -> Result<Self> {
        debug_assert_eq!(raw_re.len(), 2 * n_spins + 1);
        debug_assert_eq!(raw_im.len(), 2 * n_spins + 1);
        for (i, &im) in raw_im.iter().enumerate() {
            let residue = im.abs() / norm_const;
            if residue > 1e-9 {
                return Err(Error::Diagnostic(format!(
                    "imaginary residue {residue:.3e} at coherence order {} exceeds 1e-9; \
                     amplitudes are not real",
                    i as i32 - n_spins as i32
                )));
            }
        }
        let normalization = raw_re.iter().sum();
        let amplitudes = raw_re.iter().map(|v| v / norm_const).collect();
        Ok(CoherenceSpectrum { n_spins, amplitudes, normalization, source })
    }

    /// Builds a spectrum from already-normalized amplitudes listed in
    /// ascending order of M over the full range `[−N, N]`, for feeding
    /// externally obtained distributions into the analysis layer.
    pub fn from_amplitudes(
        n_spins: usize,
        amplitudes: Vec<f64>,
        source: SpectrumSource,
    ) -> Result<Self> {
        if amplitudes.len() != 2 * n_spins + 1 {
            return Err(Error::Shape(format!(
                "expected {} amplitudes for N = {n_spins} (orders −N..=N), got {}",
                2 * n_spins + 1,
                amplitudes.len()
            )));
        }
        if let Some(bad) = amplitudes.iter().find(|a| !a.is_finite()) {
            return Err(Error::Domain(format!("amplitudes must be finite, got {bad}")));
        }
        let normalization = amplitudes.iter().sum();
        Ok(CoherenceSpectrum { n_spins, amplitudes, normalization, source })
    }

    /// Amplitude at coherence order M (zero outside `[−N, N]`).
    pub fn amplitude(&self, m: i32) -> f64 {
        let idx = m + self.n_spins as i32;
        if idx < 0 || idx as usize >= self.amplitudes.len() {
            return 0.0;
        }
        self.amplitudes[idx as usize]
    }

    /// Iterates `(M, A_M)` in ascending order of M.
    pub fn orders(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        let n = self.n_spins as i32;
        self.amplitudes.iter().enumerate().map(move |(i, &a)| (i as i32 - n, a))
    }

    /// `Σ_M A_M`, which equals `S(0)` by completeness of the block partition.
    pub fn total(&self) -> f64 {
        self.amplitudes.iter().sum()
    }
}

/// Default phase-grid size: the smallest power of two at or above the
/// Nyquist requirement `2N + 2` for orders `M ∈ [−N, N]`.
pub fn default_n_phi(n_spins: usize) -> usize {
    (2 * n_spins + 2).next_power_of_two()
}

/// Conjugates an operator by the collective z-rotation `φ̂_z = e^{−iφ Iz}`:
/// entry `(r, c)` acquires the phase `e^{−iφ(m_r − m_c)}`.
///
/// The operator must live in the given basis (panics on dimension mismatch;
/// this is a programmer error, not a runtime condition).
pub fn phase_rotate(a: &OperatorMatrix, basis: &ZeemanBasis, phi: f64) -> OperatorMatrix {
    assert_eq!(
        a.dim,
        basis.dim(),
        "operator dimension {} does not match basis dimension {}",
        a.dim,
        basis.dim()
    );
    let mut entries = a.entries.clone();
    for r in 0..a.dim {
        for c in 0..a.dim {
            let delta = basis.m_of[r] - basis.m_of[c];
            entries[[r, c]] *= Complex64::from_polar(1.0, -phi * delta);
        }
    }
    OperatorMatrix { dim: a.dim, entries, kind: a.kind }
}

/// Phase-encoded signal `S(φ) = Tr{observable · φ̂_z ρ φ̂_z^{−1}} / Tr{Iz²}`.
///
/// The Zeeman basis is inferred from the operator dimension, which must be a
/// power of two shared by both operators.
pub fn signal(rho: &OperatorMatrix, observable: &OperatorMatrix, phi: f64) -> Result<Complex64> {
    if rho.dim != observable.dim {
        return Err(Error::Shape(format!(
            "state dimension {} does not match observable dimension {}",
            rho.dim, observable.dim
        )));
    }
    if !rho.dim.is_power_of_two() {
        return Err(Error::Shape(format!(
            "operator dimension {} is not a power of two; cannot infer spin count",
            rho.dim
        )));
    }
    let n_spins = rho.dim.trailing_zeros() as usize;
    let basis = build_basis(n_spins)?;
    Ok(signal_in_basis(rho, observable, &basis, phi))
}

/// `S(φ)` with an explicit basis: `Σ_{r,c} O_rc · ρ_cr · e^{−iφ(m_c − m_r)}`,
/// normalized. Evaluated entrywise without forming the rotated matrix.
fn signal_in_basis(
    rho: &OperatorMatrix,
    observable: &OperatorMatrix,
    basis: &ZeemanBasis,
    phi: f64,
) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for r in 0..rho.dim {
        for c in 0..rho.dim {
            let entry = observable.entries[[r, c]] * rho.entries[[c, r]];
            if entry != Complex64::new(0.0, 0.0) {
                let delta = basis.m_of[c] - basis.m_of[r];
                total += entry * Complex64::from_polar(1.0, -phi * delta);
            }
        }
    }
    total / basis.iz_norm()
}

/// Extracts the coherence spectrum by sampling `S(φ)` on the uniform grid
/// `φ_k = 2πk/n_phi` and applying a discrete Fourier inversion, the same
/// procedure the laboratory experiment performs.
///
/// `n_phi` must be even and at least `2N + 2`; smaller grids would alias
/// order `+N` onto `−N` and are refused.
pub fn spectrum_fft(
    rho: &OperatorMatrix,
    observable: &OperatorMatrix,
    basis: &ZeemanBasis,
    n_phi: usize,
) -> Result<CoherenceSpectrum> {
    let n = basis.n_spins;
    if rho.dim != basis.dim() || observable.dim != basis.dim() {
        return Err(Error::Shape(format!(
            "operator dimensions ({}, {}) do not match basis dimension {}",
            rho.dim,
            observable.dim,
            basis.dim()
        )));
    }
    if n_phi < 2 * n + 2 || n_phi % 2 != 0 {
        return Err(Error::Aliasing(format!(
            "phase grid n_phi = {n_phi} cannot resolve orders in [−{n}, {n}]; \
             need an even grid with n_phi ≥ {}",
            2 * n + 2
        )));
    }

    // S(φ) = Σ_M A_M e^{−iφM}, so A_M is recovered by the inverse transform
    // (1/n)·Σ_k S(φ_k) e^{+iφ_k M}, read at index M mod n_phi.
    let mut samples: Vec<Complex64> = (0..n_phi)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64;
            signal_in_basis(rho, observable, basis, phi) * basis.iz_norm()
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n_phi).process(&mut samples);

    let mut raw_re = vec![0.0; 2 * n + 1];
    let mut raw_im = vec![0.0; 2 * n + 1];
    for m in -(n as i32)..=(n as i32) {
        let idx = (m.rem_euclid(n_phi as i32)) as usize;
        let value = samples[idx] / n_phi as f64;
        raw_re[(m + n as i32) as usize] = value.re;
        raw_im[(m + n as i32) as usize] = value.im;
    }
    CoherenceSpectrum::from_raw(n, raw_re, raw_im, basis.iz_norm(), SpectrumSource::Fft)
}

/// Extracts the coherence spectrum by binning matrix entries directly:
/// `A_M = Tr{observable_M† · ρ_M} / Tr{Iz²}` over the blocks
/// `M = m_row − m_col`.
///
/// For p = 0 protocols the observable block equals the state block and every
/// `A_M` is a squared block norm, hence nonnegative.
pub fn spectrum_direct(
    rho: &OperatorMatrix,
    observable: &OperatorMatrix,
    basis: &ZeemanBasis,
) -> Result<CoherenceSpectrum> {
    let n = basis.n_spins;
    if rho.dim != basis.dim() || observable.dim != basis.dim() {
        return Err(Error::Shape(format!(
            "operator dimensions ({}, {}) do not match basis dimension {}",
            rho.dim,
            observable.dim,
            basis.dim()
        )));
    }
    let mut raw_re = vec![0.0; 2 * n + 1];
    let mut raw_im = vec![0.0; 2 * n + 1];
    for r in 0..rho.dim {
        for c in 0..rho.dim {
            let v = observable.entries[[r, c]].conj() * rho.entries[[r, c]];
            if v != Complex64::new(0.0, 0.0) {
                let idx = (coherence_order(basis, r, c) + n as i32) as usize;
                raw_re[idx] += v.re;
                raw_im[idx] += v.im;
            }
        }
    }
    CoherenceSpectrum::from_raw(n, raw_re, raw_im, basis.iz_norm(), SpectrumSource::Direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{couplings_from_model, CouplingModel, CouplingVariant};
    use crate::hilbert::collective_iz;
    use crate::propagate::{evolve_observable, propagator_of, Backend};
    use ndarray::Array2;

    fn two_spin_state(d: f64, t: f64) -> (OperatorMatrix, ZeemanBasis) {
        let mut couplings = Array2::zeros((2, 2));
        couplings[[0, 1]] = d;
        couplings[[1, 0]] = d;
        let sys = crate::hilbert::SpinSystem::new(2, couplings, "pair").unwrap();
        let h0 = crate::hamiltonian::build_h0(&sys);
        let basis = build_basis(2).unwrap();
        let iz = collective_iz(&basis);
        let u = propagator_of(&h0, t, Backend::Eigen).unwrap();
        (evolve_observable(&iz, &u).unwrap(), basis)
    }

    #[test]
    fn iz_spectrum_is_pure_zero_order() {
        for n in [1usize, 3] {
            let basis = build_basis(n).unwrap();
            let iz = collective_iz(&basis);
            for spec in [
                spectrum_fft(&iz, &iz, &basis, default_n_phi(n)).unwrap(),
                spectrum_direct(&iz, &iz, &basis).unwrap(),
            ] {
                assert!((spec.amplitude(0) - 1.0).abs() < 1e-12);
                for m in 1..=(n as i32) {
                    assert!(spec.amplitude(m).abs() < 1e-12);
                    assert!(spec.amplitude(-m).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn signal_of_iz_is_one_for_all_phases() {
        let basis = build_basis(3).unwrap();
        let iz = collective_iz(&basis);
        for k in 0..7 {
            let s = signal(&iz, &iz, 0.9 * k as f64).unwrap();
            assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_rotate_identities() {
        let (rho, basis) = two_spin_state(1.3, 0.7);
        // φ = 0 and φ = 2π leave any integer-order operator unchanged
        for phi in [0.0, 2.0 * std::f64::consts::PI] {
            let rotated = phase_rotate(&rho, &basis, phi);
            let diff = (&rotated.entries - &rho.entries).map(|z| z.norm()).sum();
            assert!(diff < 1e-12, "φ = {phi}: residual {diff}");
        }
        // diagonal operators are invariant for every φ
        let iz = collective_iz(&basis);
        let rotated = phase_rotate(&iz, &basis, 1.234);
        let diff = (&rotated.entries - &iz.entries).map(|z| z.norm()).sum();
        assert!(diff < 1e-14);
    }

    #[test]
    fn two_spin_quarter_turn_spectrum() {
        // d·t = π/4 puts half the weight at M = 0 and a quarter at M = ±2
        let (rho, basis) = two_spin_state(1.0, std::f64::consts::FRAC_PI_4);
        for spec in [
            spectrum_fft(&rho, &rho, &basis, default_n_phi(2)).unwrap(),
            spectrum_direct(&rho, &rho, &basis).unwrap(),
        ] {
            assert!((spec.amplitude(0) - 0.5).abs() < 1e-12);
            assert!((spec.amplitude(2) - 0.25).abs() < 1e-12);
            assert!((spec.amplitude(-2) - 0.25).abs() < 1e-12);
            assert!(spec.amplitude(1).abs() < 1e-12);
            assert!(spec.amplitude(-1).abs() < 1e-12);
        }
    }

    #[test]
    fn two_spin_signal_vanishes_at_half_pi() {
        // At φ = π/2 the M = ±2 terms acquire e^{∓iπ} = −1, so
        // S = A₀ − (A₂ + A₋₂) = 1/2 − 1/2 = 0.
        let (rho, _basis) = two_spin_state(1.0, std::f64::consts::FRAC_PI_4);
        let s = signal(&rho, &rho, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(s.norm() < 1e-12, "S(π/2) = {s}");
    }

    #[test]
    fn fft_matches_direct_on_random_instance() {
        let sys = couplings_from_model(
            &CouplingModel {
                variant: CouplingVariant::RandomAllToAll { seed: 5 },
                target_second_moment: Some(1.0),
            },
            3,
        )
        .unwrap();
        let h = crate::hamiltonian::build_h_eff(
            &sys,
            &crate::hamiltonian::PerturbationSpec::new(0.37).unwrap(),
        )
        .unwrap();
        let basis = build_basis(3).unwrap();
        let iz = collective_iz(&basis);
        let u = propagator_of(&h, 1.1, Backend::Eigen).unwrap();
        let rho = evolve_observable(&iz, &u).unwrap();
        let h0 = crate::hamiltonian::build_h0(&sys);
        let v = propagator_of(&h0, 0.8, Backend::Eigen).unwrap();
        let obs = evolve_observable(&iz, &v).unwrap();

        let by_fft = spectrum_fft(&rho, &obs, &basis, default_n_phi(3)).unwrap();
        let by_direct = spectrum_direct(&rho, &obs, &basis).unwrap();
        for m in -3..=3 {
            assert!(
                (by_fft.amplitude(m) - by_direct.amplitude(m)).abs() < 1e-12,
                "M = {m}: fft {} vs direct {}",
                by_fft.amplitude(m),
                by_direct.amplitude(m)
            );
        }
        assert_eq!(by_fft.source, SpectrumSource::Fft);
        assert_eq!(by_direct.source, SpectrumSource::Direct);
    }

    #[test]
    fn undersized_phase_grid_is_refused() {
        let basis = build_basis(3).unwrap();
        let iz = collective_iz(&basis);
        // below Nyquist
        let err = spectrum_fft(&iz, &iz, &basis, 6).unwrap_err();
        assert_eq!(err.category(), "aliasing");
        // odd grid
        let err = spectrum_fft(&iz, &iz, &basis, 9).unwrap_err();
        assert_eq!(err.category(), "aliasing");
    }

    #[test]
    fn complex_residue_is_reported() {
        // A non-Hermitian operator pair leaves an imaginary part in A_M.
        let basis = build_basis(1).unwrap();
        let mut o = Array2::zeros((2, 2));
        o[[0, 1]] = Complex64::new(0.0, 1.0);
        let mut r = Array2::zeros((2, 2));
        r[[0, 1]] = Complex64::new(1.0, 0.0);
        let obs = OperatorMatrix::general(o).unwrap();
        let rho = OperatorMatrix::general(r).unwrap();
        let err = spectrum_direct(&rho, &obs, &basis).unwrap_err();
        assert_eq!(err.category(), "diagnostic");
    }

    #[test]
    fn default_grid_is_nyquist_safe_power_of_two() {
        for n in 1..=14usize {
            let g = default_n_phi(n);
            assert!(g.is_power_of_two());
            assert!(g >= 2 * n + 2);
            assert!(g / 2 < 2 * n + 2, "grid {g} larger than necessary for N = {n}");
        }
    }
}
