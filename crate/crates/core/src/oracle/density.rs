//! Dense density matrices over the support of an ensemble.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::fock::{BasisVector, PureState};

/// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|` on the basis vectors that actually occur.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    modes: usize,
    basis: Vec<BasisVector>,
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Mixture of `(weight, state)` pairs; states need not be normalized.
    pub fn from_mixture(parts: &[(f64, &PureState)]) -> Result<Self> {
        let modes = parts.first().map_or(0, |(_, s)| s.modes());
        for (_, s) in parts {
            if s.modes() != modes {
                return Err(Error::DimensionMismatch {
                    left: modes,
                    right: s.modes(),
                });
            }
        }
        let basis: Vec<BasisVector> = parts
            .iter()
            .flat_map(|(_, s)| s.terms().map(|(k, _)| k.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = basis.len();
        let mut matrix = DMatrix::<Complex64>::zeros(n, n);
        for (w, s) in parts {
            let v: Vec<Complex64> = basis.iter().map(|k| s.amplitude(k)).collect();
            for i in 0..n {
                if v[i] == Complex64::default() {
                    continue;
                }
                for j in 0..n {
                    matrix[(i, j)] += v[i] * v[j].conj() * *w;
                }
            }
        }
        Ok(DensityMatrix {
            modes,
            basis,
            matrix,
        })
    }

    pub fn pure(state: &PureState) -> Result<Self> {
        Self::from_mixture(&[(1.0, state)])
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn basis(&self) -> &[BasisVector] {
        &self.basis
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `⟨a|ρ|b⟩`, zero outside the support.
    pub fn entry(&self, a: &BasisVector, b: &BasisVector) -> Complex64 {
        match (self.index(a), self.index(b)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => Complex64::default(),
        }
    }

    fn index(&self, v: &BasisVector) -> Option<usize> {
        self.basis.binary_search(v).ok()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dimension() == 0 {
            return Vec::new();
        }
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Largest entrywise difference to `other`, over the union of supports.
    pub fn max_deviation(&self, other: &DensityMatrix) -> Result<f64> {
        if self.modes != other.modes && self.dimension() > 0 && other.dimension() > 0 {
            return Err(Error::DimensionMismatch {
                left: self.modes,
                right: other.modes,
            });
        }
        let union: BTreeSet<&BasisVector> = self.basis.iter().chain(&other.basis).collect();
        let mut worst: f64 = 0.0;
        for a in &union {
            for b in &union {
                worst = worst.max((self.entry(a, b) - other.entry(a, b)).norm());
            }
        }
        Ok(worst)
    }

    /// Same matrix divided by its trace.
    pub fn renormalized(&self) -> Result<Self> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(DensityMatrix {
            modes: self.modes,
            basis: self.basis.clone(),
            matrix: &self.matrix / Complex64::new(t, 0.0),
        })
    }
}

/// Density matrix of an ensemble. With `keep_only`, discarded branches are
/// dropped and the result is renormalized to unit trace.
pub fn density_of(ensemble: &Ensemble, keep_only: bool) -> Result<DensityMatrix> {
    let parts: Vec<(f64, &PureState)> = ensemble
        .branches()
        .iter()
        .filter(|b| !keep_only || b.is_kept())
        .map(|b| (b.weight, &b.state))
        .collect();
    let rho = DensityMatrix::from_mixture(&parts)?;
    if keep_only {
        rho.renormalized()
    } else {
        Ok(rho)
    }
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.dimension() > 0 && psi.modes() != rho.modes() {
        return Err(Error::DimensionMismatch {
            left: rho.modes(),
            right: psi.modes(),
        });
    }
    let mut acc = Complex64::default();
    for (a, x) in psi.terms() {
        for (b, y) in psi.terms() {
            acc += x.conj() * rho.entry(a, b) * y;
        }
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{b2g, ghz_minus, ghz_plus, phi_plus, v0h};

    #[test]
    fn pure_state_is_rank_one() {
        let rho = DensityMatrix::pure(&ghz_plus()).unwrap();
        let ev = rho.eigenvalues();
        assert!((ev[ev.len() - 1] - 1.0).abs() < 1e-12);
        assert!(ev[..ev.len() - 1].iter().all(|e| e.abs() < 1e-12));
        assert!((fidelity(&rho, &ghz_plus()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn b2g_mixture() {
        let r = b2g(&phi_plus().tensor(&phi_plus()).unwrap()).unwrap();
        let kept = density_of(&r.ensemble, true).unwrap();
        let g = ghz_plus();
        let v = v0h();
        let expected = DensityMatrix::from_mixture(&[(2.0 / 3.0, &g), (1.0 / 3.0, &v)]).unwrap();
        assert!(kept.max_deviation(&expected).unwrap() < 1e-12);
        assert!((fidelity(&kept, &ghz_plus()).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(fidelity(&kept, &ghz_minus()).unwrap().abs() < 1e-12);
        assert!(kept.hermiticity_error() < 1e-12);
        assert!(kept.eigenvalues()[0] > -1e-10);
    }

    #[test]
    fn full_ensemble_has_unit_trace() {
        let r = b2g(&phi_plus().tensor(&phi_plus()).unwrap()).unwrap();
        let all: Vec<_> = r
            .ensemble
            .branches()
            .iter()
            .map(|b| (b.weight, &b.state))
            .collect();
        let rho = DensityMatrix::from_mixture(&all).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let rho = DensityMatrix::pure(&ghz_plus()).unwrap();
        assert!(fidelity(&rho, &phi_plus()).is_err());
        let h = PureState::ket("H").unwrap();
        assert!(DensityMatrix::from_mixture(&[(0.5, &h), (0.5, &ghz_plus())]).is_err());
    }
}
