use crate::scalar::{r, Real};

/// Physical constants. Default is natural units hbar = m = 1; both stay
/// explicit so runs in physical units remain possible. The potential is a
/// hook: all shipped scenarios are free (V = 0), but a sampled V enters the
/// Crank-Nicolson diagonal when present.
#[derive(Debug, Clone)]
pub struct Constants<R: Real> {
    pub hbar: R,
    pub mass: R,
    pub potential: Potential<R>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential<R: Real> {
    Free,
    /// One sample per interior node, 1D only.
    Samples(Vec<R>),
}

impl<R: Real> Constants<R> {
    pub fn natural() -> Self {
        Constants {
            hbar: R::one(),
            mass: R::one(),
            potential: Potential::Free,
        }
    }

    pub fn new(hbar: R, mass: R) -> Self {
        assert!(hbar > R::zero() && mass > R::zero(), "hbar and m must be positive");
        Constants {
            hbar,
            mass,
            potential: Potential::Free,
        }
    }

    /// hbar / m, the factor turning phase gradients into velocities.
    #[inline]
    pub fn hbar_over_m(&self) -> R {
        self.hbar / self.mass
    }

    pub fn is_free(&self) -> bool {
        matches!(self.potential, Potential::Free)
    }

    pub fn potential_at(&self, i: usize) -> R {
        match &self.potential {
            Potential::Free => R::zero(),
            Potential::Samples(v) => v[i],
        }
    }

    /// Shift the potential by a constant (keeps Free + 0 as Free).
    pub fn shifted_potential(&self, c0: R, n: usize) -> Self {
        let mut out = self.clone();
        if c0 == R::zero() {
            return out;
        }
        out.potential = match &self.potential {
            Potential::Free => Potential::Samples(vec![c0; n]),
            Potential::Samples(v) => Potential::Samples(v.iter().map(|&x| x + c0).collect()),
        };
        out
    }
}

impl Default for Constants<f64> {
    fn default() -> Self {
        Constants::natural()
    }
}

/// Default node threshold under which Madelung velocities are masked:
/// 1e-12 relative to the density peak.
pub fn default_node_eps<R: Real>(rho_max: R) -> R {
    r::<R>(1e-12) * rho_max
}
