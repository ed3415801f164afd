//! Hydrodynamic detector engine: explicit finite-volume transport of rho
//! with the gated detector face, velocity update in primitive form, u
//! recomputed from rho every stage, Heun time stepping. Deliberately
//! desk-scale; it exists as an independent witness for the wave-function
//! engines, not as the production path (the quantum term carries a third
//! derivative and wants tiny steps).

use crate::constants::{default_node_eps, Constants};
use crate::error::EngineError;
use crate::madelung::{stochastic_velocity_from_density, MadelungState};
use crate::record::{DetectorRecord, FieldSnap, FluxSample, RunFlags, Snapshot, SurfaceSnap};
use crate::scalar::{r, Real};
use crate::surface::Surface1;

use super::{EngineConfig, EngineKind};

pub const MAX_HYDRO_NODES: usize = 2048;

struct StageRate<R: Real> {
    drho: Vec<R>,
    dv: Vec<R>,
    /// Gated outflux through the detector face (probability per time).
    face_outflux: R,
}

pub struct HydroEngine<R: Real> {
    cfg: EngineConfig<R>,
    cs: Constants<R>,
    state: MadelungState<R>,
    sigma: R,
    momentum_tally: [R; 2],
    t: R,
    support0: Vec<bool>,
    support_count: usize,
}

impl<R: Real> HydroEngine<R> {
    pub fn new(
        state: MadelungState<R>,
        cfg: EngineConfig<R>,
        cs: Constants<R>,
    ) -> Result<Self, EngineError> {
        let n = state.grid.n();
        if n > MAX_HYDRO_NODES {
            return Err(EngineError::Unsupported(format!(
                "hydro engine is desk-scale only (<= {MAX_HYDRO_NODES} nodes, got {n})"
            )));
        }
        if cfg.extension != R::zero() {
            return Err(EngineError::Unsupported(
                "hydro engine gates directly at the face; extension must be 0".into(),
            ));
        }
        for (i, &x) in state.rho.iter().enumerate() {
            if !x.is_finite() || x < R::zero() {
                return Err(EngineError::Field(crate::error::FieldError::NonFinite { index: i }));
            }
        }
        let eps = default_node_eps(state.rho.iter().cloned().fold(R::zero(), R::max));
        let support0: Vec<bool> = state.rho.iter().map(|&x| x > eps).collect();
        let support_count = support0.iter().filter(|&&b| b).count();
        Ok(HydroEngine {
            cfg,
            cs,
            state,
            sigma: R::zero(),
            momentum_tally: [R::zero(); 2],
            t: R::zero(),
            support0,
            support_count,
        })
    }

    fn rate(&self, rho: &[R], v: &[R], eps: R) -> StageRate<R> {
        let n = rho.len();
        let dx = self.state.grid.spacing();
        let half = r::<R>(0.5);
        let u = stochastic_velocity_from_density(rho, dx, &self.cs, eps);

        // upwind transport on the dual cells (half cells at both ends so
        // cell masses sum to the trapezoid integral and the budget
        // telescopes exactly)
        let mut flux = vec![R::zero(); n + 1]; // flux[i] crosses the left edge of node i
        for i in 1..n {
            let vface = (v[i - 1] + v[i]) * half;
            let up = if vface > R::zero() { rho[i - 1] } else { rho[i] };
            flux[i] = vface * up;
        }
        flux[0] = R::zero();
        let face_v = v[n - 1];
        flux[n] = if face_v > R::zero() { face_v * rho[n - 1] } else { R::zero() };

        let mut drho = vec![R::zero(); n];
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { dx * half } else { dx };
            drho[i] = -(flux[i + 1] - flux[i]) / w;
        }

        let mut dv = vec![R::zero(); n];
        let quantum = self.cs.hbar / (r::<R>(2.0) * self.cs.mass);
        for i in 1..n - 1 {
            let vx = if v[i] > R::zero() {
                (v[i] - v[i - 1]) / dx
            } else {
                (v[i + 1] - v[i]) / dx
            };
            let ux = (u[i + 1] - u[i - 1]) * half / dx;
            let uxx = (u[i + 1] - u[i] * r::<R>(2.0) + u[i - 1]) / (dx * dx);
            dv[i] = -v[i] * vx + u[i] * ux + quantum * uxx;
        }

        StageRate { drho, dv, face_outflux: flux[n] }
    }

    fn cfl(&self, v: &[R]) -> Result<(), EngineError> {
        let vmax = v.iter().fold(R::zero(), |a, &b| a.max(b.abs()));
        let dx = self.state.grid.spacing();
        let measured = vmax * self.cfg.dt / dx;
        if measured > self.cfg.cfl_safety {
            let suggested = self.cfg.cfl_safety * dx / vmax;
            return Err(EngineError::Cfl {
                measured: measured.to_f64().unwrap_or(f64::NAN),
                safety: self.cfg.cfl_safety.to_f64().unwrap_or(f64::NAN),
                suggested_dt: suggested.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    fn step(&mut self) -> Result<(FluxSample<R>, usize), EngineError> {
        let dt = self.cfg.dt;
        let n = self.state.grid.n();
        let half = r::<R>(0.5);
        let eps = default_node_eps(self.state.rho.iter().cloned().fold(R::zero(), R::max));

        self.cfl(&self.state.v)?;
        let k1 = self.rate(&self.state.rho, &self.state.v, eps);
        let rho1: Vec<R> =
            (0..n).map(|i| self.state.rho[i] + dt * k1.drho[i]).collect();
        let v1: Vec<R> = (0..n).map(|i| self.state.v[i] + dt * k1.dv[i]).collect();
        self.cfl(&v1)?;
        let k2 = self.rate(&rho1, &v1, eps);

        for i in 0..n {
            self.state.rho[i] += dt * half * (k1.drho[i] + k2.drho[i]);
            self.state.v[i] += dt * half * (k1.dv[i] + k2.dv[i]);
            if !self.state.rho[i].is_finite() || !self.state.v[i].is_finite() {
                return Err(EngineError::Blowup { step: 0 });
            }
        }
        let inc = dt * half * (k1.face_outflux + k2.face_outflux);
        self.sigma += inc;
        let rho_face = self.state.rho[n - 1];
        if inc > R::zero() && rho_face > eps {
            let v_imp = inc / (dt * rho_face);
            self.momentum_tally[0] += self.cs.mass * v_imp * inc;
        }
        self.t += dt;

        let masked = self
            .state
            .rho
            .iter()
            .zip(&self.support0)
            .filter(|(&x, &was)| was && x <= eps)
            .count();
        Ok((
            FluxSample { t: self.t, flux: inc / dt, face_density: rho_face },
            masked,
        ))
    }

    fn snapshot(&self, trace: Vec<FluxSample<R>>) -> Snapshot<R> {
        Snapshot {
            t: self.t,
            field: FieldSnap::Hydro(self.state.clone()),
            surface: SurfaceSnap::One(Surface1 { sigma: self.sigma }),
            interior_prob: self.state.interior_probability(),
            surface_prob: self.sigma,
            flux_trace: trace,
            momentum_tally: vec![self.momentum_tally],
        }
    }

    pub fn run(mut self) -> Result<DetectorRecord<R>, EngineError> {
        let mut snapshots = vec![self.snapshot(Vec::new())];
        let mut trace = Vec::new();
        let mut budget_worst = R::zero();
        let mut far_wall_peak = R::zero();
        let mut mask_events = 0usize;
        let mut steps_taken = 0usize;
        let dx = self.state.grid.spacing();

        for k in 0..self.cfg.steps {
            let (sample, masked) = self.step().map_err(|e| match e {
                EngineError::Blowup { .. } => EngineError::Blowup { step: k },
                other => other,
            })?;
            steps_taken = k + 1;
            trace.push(sample);
            if masked > 0 {
                mask_events += 1;
            }
            if masked * 5 > self.support_count {
                return Err(EngineError::MaskGrowth {
                    masked,
                    support: self.support_count,
                });
            }

            let interior = self.state.interior_probability();
            let drift = (interior + self.sigma - R::one()).abs();
            budget_worst = budget_worst.max(drift);
            if drift > self.cfg.conservation_tol {
                return Err(EngineError::Budget {
                    drift: drift.to_f64().unwrap_or(f64::NAN),
                    tol: self.cfg.conservation_tol.to_f64().unwrap_or(f64::NAN),
                    step: k,
                });
            }
            let wall_mass: R = self.state.rho[..5.min(self.state.rho.len())]
                .iter()
                .cloned()
                .sum::<R>()
                * dx;
            far_wall_peak = far_wall_peak.max(wall_mass);

            let stop = interior < self.cfg.stop_threshold;
            if (k + 1) % self.cfg.record_every == 0 || k + 1 == self.cfg.steps || stop {
                snapshots.push(self.snapshot(std::mem::take(&mut trace)));
            }
            if stop {
                break;
            }
        }

        let final_interior = snapshots.last().map(|s| s.interior_prob).unwrap_or(R::zero());
        let flags = RunFlags {
            far_wall_contaminated: far_wall_peak > r::<R>(1e-8),
            budget_exceeded: false,
            truncated: final_interior > self.cfg.stop_threshold,
            resolution_warning: false,
        };
        Ok(DetectorRecord {
            kind: EngineKind::IdealHydro,
            detector_active: true,
            dt: self.cfg.dt,
            steps_taken,
            face_ds: vec![R::one()],
            face_positions: vec![R::zero()],
            face_span: (R::zero(), R::zero()),
            face_periodic: false,
            snapshots,
            shut_steps: 0,
            clamp_events: 0,
            mask_events,
            monotonicity_violations: 0,
            budget_worst,
            far_wall_peak,
            extension_end_peak: R::zero(),
            stop_threshold: self.cfg.stop_threshold,
            flags,
        })
    }
}
