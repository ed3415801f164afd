//! Crank-Nicolson systems over a contiguous run of unknown nodes.
//!
//! The implicit matrix is A = W + i(gS + (dt/2hbar) W V) with W the
//! finite-volume cell weights (1 in the bulk, 1/2 on a half cell at a
//! face row), S the real symmetric second-difference stencil and g =
//! hbar dt / (4 m dx^2). The explicit side is always B = 2W - A, so one
//! band set describes the whole step. Nodes outside the unknown run are
//! homogeneous Dirichlet and simply do not appear.
//!
//! Face row variants fold the boundary condition into the last row:
//! a ghost node psi_{f+1} = psi_{f-1} + 2 dx beta psi_f eliminated into a
//! half-weight row. beta = 0 is the reflecting (Neumann) wall; Im beta > 0
//! absorbs. With beta = 0 the matrix is W + i(symmetric), which conserves
//! the W-weighted norm exactly; that identity is what keeps the detector
//! budget at round-off.

use crate::error::EngineError;
use crate::scalar::{r, Real, C};

use super::tridiag::{FactoredCyclic, FactoredTridiag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceRow<R: Real> {
    /// Last unknown is an ordinary bulk node; its right neighbor is a
    /// pinned zero (reflecting wall).
    Dirichlet,
    /// Zero-flux half-cell row, used for the severed detector bond.
    Neumann,
    /// Ghost relation n.grad psi = beta psi folded into a half-cell row.
    Robin(C<R>),
}

#[derive(Debug, Clone)]
pub struct CnSystem<R: Real> {
    n: usize,
    a_sub: Vec<C<R>>,
    a_diag: Vec<C<R>>,
    a_sup: Vec<C<R>>,
    w: Vec<R>,
    factored: FactoredTridiag<R>,
    pub g: R,
}

impl<R: Real> CnSystem<R> {
    /// `pot_phase` is dt V_i / (2 hbar) per unknown; empty means free.
    pub fn build(
        n: usize,
        g: R,
        dx: R,
        pot_phase: &[R],
        face: FaceRow<R>,
    ) -> Result<Self, EngineError> {
        assert!(n >= 2);
        assert!(pot_phase.is_empty() || pot_phase.len() == n);
        let ig = C::new(R::zero(), g);
        let one = C::new(R::one(), R::zero());
        let half = r::<R>(0.5);
        let vp = |i: usize| {
            if pot_phase.is_empty() {
                R::zero()
            } else {
                pot_phase[i]
            }
        };
        let a_sub = vec![-ig; n - 1];
        let a_sup = vec![-ig; n - 1];
        let mut a_diag: Vec<C<R>> = (0..n)
            .map(|i| one + ig * r::<R>(2.0) + C::new(R::zero(), vp(i)))
            .collect();
        let mut w = vec![R::one(); n];
        match face {
            FaceRow::Dirichlet => {}
            FaceRow::Neumann | FaceRow::Robin(_) => {
                let beta = match face {
                    FaceRow::Robin(b) => b,
                    _ => C::new(R::zero(), R::zero()),
                };
                let f = n - 1;
                w[f] = half;
                a_diag[f] = C::new(half, R::zero())
                    + ig * (one - beta * dx)
                    + C::new(R::zero(), half * vp(f));
            }
        }
        let factored = FactoredTridiag::new(&a_sub, &a_diag, &a_sup)?;
        Ok(CnSystem { n, a_sub, a_diag, a_sup, w, factored, g })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Writes B x into `out` (B = 2W - A, zero Dirichlet ghosts).
    pub fn explicit_rhs(&self, x: &[C<R>], out: &mut [C<R>]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        let two = r::<R>(2.0);
        for i in 0..self.n {
            let mut acc = (C::new(two * self.w[i], R::zero()) - self.a_diag[i]) * x[i];
            if i > 0 {
                acc -= self.a_sub[i - 1] * x[i - 1];
            }
            if i < self.n - 1 {
                acc -= self.a_sup[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// One CN step on the unknown run: `x` is replaced by the new field,
    /// using `scratch` (same length) as the rhs buffer.
    pub fn step(&self, x: &mut [C<R>], scratch: &mut [C<R>]) {
        self.explicit_rhs(x, scratch);
        self.factored.solve_in_place(scratch);
        x.copy_from_slice(scratch);
    }
}

/// Free-particle CN step on a periodic line (constant coefficients, no
/// face), for the transverse axis of the 2D splitting.
#[derive(Debug, Clone)]
pub struct CyclicCn<R: Real> {
    n: usize,
    fac: FactoredCyclic<R>,
    ig: C<R>,
}

impl<R: Real> CyclicCn<R> {
    pub fn build(n: usize, g: R) -> Result<Self, EngineError> {
        let ig = C::new(R::zero(), g);
        let diag = C::new(R::one(), R::zero()) + ig * r::<R>(2.0);
        let fac = FactoredCyclic::new(n, -ig, diag)?;
        Ok(CyclicCn { n, fac, ig })
    }

    pub fn step(&self, x: &mut [C<R>], scratch: &mut [C<R>]) {
        debug_assert_eq!(x.len(), self.n);
        let n = self.n;
        let b_diag = C::new(R::one(), R::zero()) - self.ig * r::<R>(2.0);
        for i in 0..n {
            let l = x[(i + n - 1) % n];
            let rr = x[(i + 1) % n];
            scratch[i] = b_diag * x[i] + self.ig * (l + rr);
        }
        self.fac.solve_in_place(&mut scratch[..n]);
        x.copy_from_slice(&scratch[..n]);
    }
}

/// Probability carried across the bond a-b during one CN step, in terms of
/// the step midpoint field phi = (psi + psi_new)/2. Positive means flow
/// from a toward b. Summed over a cut, these transfers account for the
/// cell-mass changes exactly (a discrete continuity law of the scheme, not
/// an approximation).
#[inline]
pub fn bond_transfer<R: Real>(g: R, dx: R, phi_a: C<R>, phi_b: C<R>) -> R {
    r::<R>(4.0) * g * dx * (phi_a.conj() * phi_b).im
}
