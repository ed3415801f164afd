//! Spectral split-step free propagator on a periodically extended grid.
//! Exact in space for band-limited data and exact in time for the free
//! Hamiltonian, so it serves as an independent cross-check of the
//! Crank-Nicolson stepper on wall-free scenarios.

use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::constants::Constants;
use crate::error::EngineError;
use crate::scalar::{r, Real, C};

pub struct SplitStep<R: Real + rustfft::FftNum> {
    forward: Arc<dyn Fft<R>>,
    inverse: Arc<dyn Fft<R>>,
    /// Momentum-space phase per mode, with the 1/n FFT normalization
    /// folded in.
    phase: Vec<C<R>>,
}

impl<R: Real + rustfft::FftNum> SplitStep<R> {
    pub fn new(n: usize, dx: R, dt: R, cs: &Constants<R>) -> Result<Self, EngineError> {
        if !cs.is_free() {
            return Err(EngineError::Unsupported(
                "split-step oracle covers the free case only".into(),
            ));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = r::<R>(n as f64) * dx;
        let two_pi = R::PI() * r::<R>(2.0);
        let scale = R::one() / r::<R>(n as f64);
        let phase = (0..n)
            .map(|q| {
                let qs = if q <= n / 2 { q as f64 } else { q as f64 - n as f64 };
                let k = two_pi * r::<R>(qs) / len;
                let w = -cs.hbar * k * k * dt / (r::<R>(2.0) * cs.mass);
                C::new(w.cos(), w.sin()) * C::new(scale, R::zero())
            })
            .collect();
        Ok(SplitStep { forward, inverse, phase })
    }

    pub fn step(&self, psi: &mut [C<R>]) {
        self.forward.process(psi);
        for (z, p) in psi.iter_mut().zip(&self.phase) {
            *z *= *p;
        }
        self.inverse.process(psi);
    }
}
