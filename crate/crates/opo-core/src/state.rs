//! Phase-space state vectors for the three dynamical descriptions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Mean-field amplitudes; α⁺ = α* is implicit and not stored.
    Classical,
    /// Doubled phase space: α₀..α₄ followed by the independent α₀⁺..α₄⁺.
    PositiveP,
    /// Symmetric-ordering amplitudes, same shape as Classical.
    Wigner,
}

impl Representation {
    /// Component count for a given topology.
    pub fn n_components(self, topology: Topology) -> usize {
        let m = topology.n_modes();
        match self {
            Representation::Classical | Representation::Wigner => m,
            Representation::PositiveP => 2 * m,
        }
    }

    pub fn is_stochastic(self) -> bool {
        !matches!(self, Representation::Classical)
    }
}

/// A mode-amplitude vector tagged with its representation.
///
/// Length encodes the topology unambiguously: 5/10 components for the
/// nondegenerate case, 3/6 for the degenerate one.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceState {
    pub representation: Representation,
    pub amplitudes: Vec<Complex64>,
}

impl PhaseSpaceState {
    pub fn new(representation: Representation, amplitudes: Vec<Complex64>) -> Self {
        Self { representation, amplitudes }
    }

    /// All-zero state (the positive-P vacuum).
    pub fn zero(representation: Representation, topology: Topology) -> Self {
        Self {
            representation,
            amplitudes: vec![Complex64::new(0.0, 0.0); representation.n_components(topology)],
        }
    }

    pub fn n_components(&self) -> usize {
        self.amplitudes.len()
    }

    /// Number of distinct modes represented.
    pub fn n_modes(&self) -> usize {
        match self.representation {
            Representation::PositiveP => self.amplitudes.len() / 2,
            _ => self.amplitudes.len(),
        }
    }

    pub fn topology(&self) -> Result<Topology> {
        match self.n_modes() {
            5 => Ok(Topology::Nondegenerate),
            3 => Ok(Topology::Degenerate),
            _ => Err(Error::ShapeMismatch { expected: 5, got: self.n_modes() }),
        }
    }

    /// Check the shape against a representation and topology.
    pub fn check_shape(&self, representation: Representation, topology: Topology) -> Result<()> {
        if self.representation != representation {
            return Err(Error::ShapeMismatch {
                expected: representation.n_components(topology),
                got: self.amplitudes.len(),
            });
        }
        let want = representation.n_components(topology);
        if self.amplitudes.len() != want {
            return Err(Error::ShapeMismatch { expected: want, got: self.amplitudes.len() });
        }
        Ok(())
    }

    /// α for mode `i` (any representation).
    pub fn alpha(&self, i: usize) -> Complex64 {
        self.amplitudes[i]
    }

    /// α⁺ for mode `i`: the stored conjugate sector for positive-P, the
    /// complex conjugate otherwise.
    pub fn alpha_plus(&self, i: usize) -> Complex64 {
        match self.representation {
            Representation::PositiveP => self.amplitudes[self.n_modes() + i],
            _ => self.amplitudes[i].conj(),
        }
    }

    /// Mode intensity αᵢ·αᵢ⁺ (complex in positive-P, real otherwise).
    pub fn intensity(&self, i: usize) -> Complex64 {
        self.alpha(i) * self.alpha_plus(i)
    }

    /// Lift a classical/Wigner state into the doubled positive-P space with
    /// α⁺ = α*.
    pub fn to_positive_p(&self) -> Self {
        match self.representation {
            Representation::PositiveP => self.clone(),
            _ => {
                let mut amps = self.amplitudes.clone();
                amps.extend(self.amplitudes.iter().map(|a| a.conj()));
                Self { representation: Representation::PositiveP, amplitudes: amps }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_per_representation_and_topology() {
        assert_eq!(Representation::Classical.n_components(Topology::Nondegenerate), 5);
        assert_eq!(Representation::Wigner.n_components(Topology::Degenerate), 3);
        assert_eq!(Representation::PositiveP.n_components(Topology::Nondegenerate), 10);
        assert_eq!(Representation::PositiveP.n_components(Topology::Degenerate), 6);
    }

    #[test]
    fn topology_recovered_from_length() {
        let s = PhaseSpaceState::zero(Representation::PositiveP, Topology::Degenerate);
        assert_eq!(s.topology().unwrap(), Topology::Degenerate);
        let s = PhaseSpaceState::zero(Representation::Classical, Topology::Nondegenerate);
        assert_eq!(s.topology().unwrap(), Topology::Nondegenerate);
    }

    #[test]
    fn alpha_plus_is_conjugate_for_classical() {
        let z = Complex64::new(1.0, -2.0);
        let s = PhaseSpaceState::new(Representation::Classical, vec![z; 5]);
        assert_eq!(s.alpha_plus(3), z.conj());
        assert_eq!(s.intensity(0), Complex64::new(z.norm_sqr(), 0.0));
    }

    #[test]
    fn wrong_shape_is_reported() {
        let s = PhaseSpaceState::new(Representation::Classical, vec![Complex64::default(); 4]);
        assert!(matches!(
            s.check_shape(Representation::Classical, Topology::Nondegenerate),
            Err(Error::ShapeMismatch { expected: 5, got: 4 })
        ));
    }
}
