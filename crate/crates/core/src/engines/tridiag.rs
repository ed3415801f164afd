//! Complex tridiagonal solvers, factored once and reused every step.

use crate::error::EngineError;
use crate::scalar::{Real, C};

/// Thomas algorithm with the elimination coefficients precomputed, so a
/// solve is two sweeps with no divisions.
#[derive(Debug, Clone)]
pub struct FactoredTridiag<R: Real> {
    n: usize,
    sub: Vec<C<R>>,      // couples row i to i-1, len n-1
    inv_diag: Vec<C<R>>, // reciprocal pivots after elimination
    cprime: Vec<C<R>>,   // eliminated superdiagonal, len n-1
}

impl<R: Real> FactoredTridiag<R> {
    pub fn new(sub: &[C<R>], diag: &[C<R>], sup: &[C<R>]) -> Result<Self, EngineError> {
        let n = diag.len();
        assert!(n >= 1 && sub.len() == n - 1 && sup.len() == n - 1);
        let mut inv_diag = Vec::with_capacity(n);
        let mut cprime = Vec::with_capacity(n.saturating_sub(1));
        let mut denom = diag[0];
        for i in 0..n {
            if i > 0 {
                denom = diag[i] - sub[i - 1] * cprime[i - 1];
            }
            if denom.norm_sqr() == R::zero() || !denom.re.is_finite() || !denom.im.is_finite() {
                return Err(EngineError::SingularSystem { row: i });
            }
            let inv = denom.inv();
            inv_diag.push(inv);
            if i < n - 1 {
                cprime.push(sup[i] * inv);
            }
        }
        Ok(FactoredTridiag { n, sub: sub.to_vec(), inv_diag, cprime })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Solves in place: on entry `x` is the right-hand side, on exit the
    /// solution.
    pub fn solve_in_place(&self, x: &mut [C<R>]) {
        debug_assert_eq!(x.len(), self.n);
        x[0] = x[0] * self.inv_diag[0];
        for i in 1..self.n {
            x[i] = (x[i] - self.sub[i - 1] * x[i - 1]) * self.inv_diag[i];
        }
        for i in (0..self.n - 1).rev() {
            let t = x[i] - self.cprime[i] * x[i + 1];
            x[i] = t;
        }
    }
}

/// Cyclic (periodic) constant-coefficient tridiagonal system
/// `off,x[i-1] + diag,x[i] + off,x[i+1] = r[i]` with wraparound, solved by
/// rank-one correction of an ordinary tridiagonal system.
#[derive(Debug, Clone)]
pub struct FactoredCyclic<R: Real> {
    base: FactoredTridiag<R>,
    z: Vec<C<R>>,
    v_last: C<R>, // off/gamma, the second component of the correction functional
    denom: C<R>,  // 1 + v.z
}

impl<R: Real> FactoredCyclic<R> {
    pub fn new(n: usize, off: C<R>, diag: C<R>) -> Result<Self, EngineError> {
        assert!(n >= 3);
        let gamma = -diag;
        let mut d = vec![diag; n];
        d[0] = diag - gamma;
        d[n - 1] = diag - off * off / gamma;
        let sub = vec![off; n - 1];
        let sup = vec![off; n - 1];
        let base = FactoredTridiag::new(&sub, &d, &sup)?;
        let mut z = vec![C::new(R::zero(), R::zero()); n];
        z[0] = gamma;
        z[n - 1] = off;
        base.solve_in_place(&mut z);
        let v_last = off / gamma;
        let denom = C::new(R::one(), R::zero()) + z[0] + v_last * z[n - 1];
        if denom.norm_sqr() == R::zero() {
            return Err(EngineError::SingularSystem { row: 0 });
        }
        Ok(FactoredCyclic { base, z, v_last, denom })
    }

    pub fn solve_in_place(&self, x: &mut [C<R>]) {
        let n = x.len();
        debug_assert_eq!(n, self.base.len());
        self.base.solve_in_place(x);
        let factor = (x[0] + self.v_last * x[n - 1]) / self.denom;
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi = *xi - factor * *zi;
        }
    }
}
