//! 1D wave-function engines: unitary reference, Robin absorbing face, and
//! the one-way detector exchange.
//!
//! The detector realization works on the interior grid plus a continuation
//! of the same spacing past the face, ending in a reflecting wall. Each
//! step first solves the coupled Crank-Nicolson system as a trial. The
//! probability carried across the face during that trial is known exactly
//! from the step's own discrete continuity law (the average of the two
//! bond transfers flanking the face node equals minus the change of the
//! trapezoid interior mass, identically). If that transfer is positive the
//! trial is kept and the transfer is credited to sigma; otherwise the
//! trial is discarded and the step is redone with the face bond severed: a
//! zero-flux half-cell row closes the interior, and the continuation runs
//! the same step between two walls of its own. Both branches conserve
//! their account exactly, so interior + sigma holds to round-off while
//! sigma can only grow. The continuation is never reset; what crossed the
//! face keeps evolving out there so that reopening the gate sees a smooth
//! field. Size the continuation so nothing reflects back to the face
//! within the horizon (length >= horizon * fastest group velocity works;
//! the record reports the mass near the far end of the continuation so
//! undersized runs are visible).

use crate::constants::Constants;
use crate::error::EngineError;
use crate::grid::Grid1;
use crate::record::{DetectorRecord, FieldSnap, FluxSample, RunFlags, Snapshot, SurfaceSnap};
use crate::scalar::{r, Real, C};
use crate::surface::Surface1;
use crate::wave::Wave1;

use super::cn::{bond_transfer, CnSystem, FaceRow};
use super::{resolution_check_1d, EngineConfig, EngineKind};

enum FaceTreatment<R: Real> {
    /// Face is a reflecting wall; single Dirichlet system on the interior.
    Walled { sys: CnSystem<R> },
    /// Extended domain, always committed (reference embedding; keeps the
    /// signed flux trace at the face).
    Open { sys: CnSystem<R> },
    /// Extended domain with the one-way gate.
    Gated {
        open: CnSystem<R>,
        severed_in: CnSystem<R>,
        severed_out: CnSystem<R>,
    },
    /// Robin row at the face, no continuation.
    Robin { sys: CnSystem<R> },
}

pub struct Psi1Engine<R: Real> {
    cfg: EngineConfig<R>,
    cs: Constants<R>,
    interior: Grid1<R>,
    n_total: usize,
    face: usize,
    dx: R,
    g: R,
    psi: Vec<C<R>>,
    trial: Vec<C<R>>,
    scratch: Vec<C<R>>,
    treatment: FaceTreatment<R>,
    sigma: R,
    momentum_tally: [R; 2],
    t: R,
    prev_interior: R,
    node_eps: R,
}

impl<R: Real> Psi1Engine<R> {
    pub fn new(
        wave: Wave1<R>,
        cfg: EngineConfig<R>,
        cs: Constants<R>,
    ) -> Result<Self, EngineError> {
        if cfg.kind == EngineKind::IdealHydro {
            return Err(EngineError::Unsupported("hydro engine handles its own state".into()));
        }
        resolution_check_1d(&wave)?;
        let interior = wave.grid.clone();
        let n = interior.n();
        let dx = interior.spacing();
        let dt = cfg.dt;
        let g = cs.hbar * dt / (r::<R>(4.0) * cs.mass * dx * dx);
        let pot: Vec<R> = match &cs.potential {
            crate::constants::Potential::Free => Vec::new(),
            crate::constants::Potential::Samples(v) => {
                if v.len() != n {
                    return Err(EngineError::Unsupported(
                        "potential samples must match the interior grid".into(),
                    ));
                }
                v.iter().map(|&x| dt * x / (r::<R>(2.0) * cs.hbar)).collect()
            }
        };
        let pot_slice = |lo: usize, hi: usize| -> Vec<R> {
            if pot.is_empty() {
                Vec::new()
            } else {
                pot[lo..hi].to_vec()
            }
        };

        let wants_extension = match cfg.kind {
            EngineKind::Robin => false,
            _ => cfg.extension > R::zero(),
        };
        if cfg.kind == EngineKind::Robin && cfg.extension > R::zero() {
            return Err(EngineError::Unsupported(
                "the robin face is itself the boundary; extension must be 0".into(),
            ));
        }
        let ext_nodes = if wants_extension {
            let k = (cfg.extension / dx).round().to_f64().unwrap_or(0.0) as usize;
            if k < cfg.window_cells + 4 {
                return Err(EngineError::Unsupported(format!(
                    "extension of {k} cells is too short (need at least window_cells + 4 = {})",
                    cfg.window_cells + 4
                )));
            }
            k
        } else {
            0
        };
        let n_total = n + ext_nodes;
        let face = n - 1;

        let treatment = match cfg.kind {
            EngineKind::Robin => {
                // unknowns 1..=face
                let sys = CnSystem::build(
                    face,
                    g,
                    dx,
                    &pot_slice(1, face + 1),
                    FaceRow::Robin(cfg.beta),
                )?;
                FaceTreatment::Robin { sys }
            }
            EngineKind::Reference | EngineKind::IdealPsi => {
                if ext_nodes == 0 {
                    // unknowns 1..=n-2, face pinned to zero
                    let sys =
                        CnSystem::build(n - 2, g, dx, &pot_slice(1, n - 1), FaceRow::Dirichlet)?;
                    FaceTreatment::Walled { sys }
                } else {
                    if !pot.is_empty() {
                        return Err(EngineError::Unsupported(
                            "extended runs are free-particle only (no potential samples past the face)"
                                .into(),
                        ));
                    }
                    let open = CnSystem::build(n_total - 2, g, dx, &[], FaceRow::Dirichlet)?;
                    if cfg.kind == EngineKind::Reference {
                        FaceTreatment::Open { sys: open }
                    } else {
                        let severed_in = CnSystem::build(face, g, dx, &[], FaceRow::Neumann)?;
                        let severed_out =
                            CnSystem::build(n_total - 2 - face, g, dx, &[], FaceRow::Dirichlet)?;
                        FaceTreatment::Gated { open, severed_in, severed_out }
                    }
                }
            }
            EngineKind::IdealHydro => unreachable!(),
        };

        let mut psi = vec![C::new(R::zero(), R::zero()); n_total];
        psi[..n].copy_from_slice(&wave.psi);
        psi[0] = C::new(R::zero(), R::zero());
        if ext_nodes == 0 && !matches!(cfg.kind, EngineKind::Robin) {
            psi[face] = C::new(R::zero(), R::zero());
        }
        psi[n_total - 1] = C::new(R::zero(), R::zero());

        let rho_max = psi.iter().map(|z| z.norm_sqr()).fold(R::zero(), R::max);
        let node_eps = crate::constants::default_node_eps(rho_max);

        let mut engine = Psi1Engine {
            cfg,
            cs,
            interior,
            n_total,
            face,
            dx,
            g,
            trial: psi.clone(),
            scratch: vec![C::new(R::zero(), R::zero()); n_total],
            psi,
            treatment,
            sigma: R::zero(),
            momentum_tally: [R::zero(); 2],
            t: R::zero(),
            prev_interior: R::zero(),
            node_eps,
        };
        let m0 = engine.interior_mass();
        let tol = r::<R>(1e-8);
        if (m0 + engine.ext_mass() - R::one()).abs() > tol {
            return Err(EngineError::Unsupported(format!(
                "initial state is not normalized on the grid (norm^2 = {})",
                (m0 + engine.ext_mass()).to_f64().unwrap_or(f64::NAN)
            )));
        }
        engine.prev_interior = m0;
        Ok(engine)
    }

    /// Trapezoid probability over the interior domain only.
    fn interior_mass(&self) -> R {
        let half = r::<R>(0.5);
        let mut acc = self.psi[0].norm_sqr() * half;
        for z in &self.psi[1..self.face] {
            acc += z.norm_sqr();
        }
        acc += self.psi[self.face].norm_sqr() * half;
        acc * self.dx
    }

    fn ext_mass(&self) -> R {
        if self.n_total == self.interior.n() {
            return R::zero();
        }
        let half = r::<R>(0.5);
        let mut acc = self.psi[self.face].norm_sqr() * half;
        for z in &self.psi[self.face + 1..self.n_total - 1] {
            acc += z.norm_sqr();
        }
        acc += self.psi[self.n_total - 1].norm_sqr() * half;
        acc * self.dx
    }

    fn mass_in(&self, range: std::ops::Range<usize>) -> R {
        let mut acc = R::zero();
        for z in &self.psi[range] {
            acc += z.norm_sqr();
        }
        acc * self.dx
    }

    /// One step. Returns the flux sample for the trace.
    fn step(&mut self) -> Result<FluxSample<R>, EngineError> {
        let dt = self.cfg.dt;
        let f = self.face;
        let half = r::<R>(0.5);
        let sample = match &self.treatment {
            FaceTreatment::Walled { sys } => {
                let n = sys.len();
                sys.step(&mut self.psi[1..1 + n], &mut self.scratch[..n]);
                FluxSample { t: self.t + dt, flux: R::zero(), face_density: R::zero() }
            }
            FaceTreatment::Open { sys } => {
                let n = sys.len();
                self.trial.copy_from_slice(&self.psi);
                sys.step(&mut self.psi[1..1 + n], &mut self.scratch[..n]);
                let phi = |i: usize| (self.trial[i] + self.psi[i]) * C::new(half, R::zero());
                let b1 = bond_transfer(self.g, self.dx, phi(f - 1), phi(f));
                let b2 = bond_transfer(self.g, self.dx, phi(f), phi(f + 1));
                let inc = (b1 + b2) * half;
                FluxSample { t: self.t + dt, flux: inc / dt, face_density: phi(f).norm_sqr() }
            }
            FaceTreatment::Gated { open, severed_in, severed_out } => {
                let n = open.len();
                self.trial.copy_from_slice(&self.psi);
                open.step(&mut self.psi[1..1 + n], &mut self.scratch[..n]);
                let phi_f = (self.trial[f] + self.psi[f]) * C::new(half, R::zero());
                let phi_l = (self.trial[f - 1] + self.psi[f - 1]) * C::new(half, R::zero());
                let phi_r = (self.trial[f + 1] + self.psi[f + 1]) * C::new(half, R::zero());
                let b1 = bond_transfer(self.g, self.dx, phi_l, phi_f);
                let b2 = bond_transfer(self.g, self.dx, phi_f, phi_r);
                let inc = (b1 + b2) * half;
                if inc > R::zero() {
                    self.sigma += inc;
                    let rho_f = phi_f.norm_sqr();
                    if rho_f > self.node_eps {
                        let v = inc / (dt * rho_f);
                        self.momentum_tally[0] += self.cs.mass * v * inc;
                    }
                    FluxSample { t: self.t + dt, flux: inc / dt, face_density: rho_f }
                } else {
                    // redo the step with the face bond severed
                    self.psi.copy_from_slice(&self.trial);
                    let ni = severed_in.len();
                    severed_in.step(&mut self.psi[1..1 + ni], &mut self.scratch[..ni]);
                    let no = severed_out.len();
                    severed_out
                        .step(&mut self.psi[f + 1..f + 1 + no], &mut self.scratch[..no]);
                    let phi_f = (self.trial[f] + self.psi[f]) * C::new(half, R::zero());
                    FluxSample {
                        t: self.t + dt,
                        flux: R::zero(),
                        face_density: phi_f.norm_sqr(),
                    }
                }
            }
            FaceTreatment::Robin { sys } => {
                let n = sys.len();
                self.trial.copy_from_slice(&self.psi);
                sys.step(&mut self.psi[1..1 + n], &mut self.scratch[..n]);
                let phi_f = (self.trial[f] + self.psi[f]) * C::new(half, R::zero());
                let m = self.interior_mass();
                let dec = self.prev_interior - m;
                FluxSample { t: self.t + dt, flux: dec / dt, face_density: phi_f.norm_sqr() }
            }
        };
        self.t += dt;
        Ok(sample)
    }

    fn is_gated(&self) -> bool {
        matches!(self.treatment, FaceTreatment::Gated { .. })
    }

    fn snapshot(&self, trace: Vec<FluxSample<R>>, with_field: bool) -> Snapshot<R> {
        let field = if with_field {
            FieldSnap::Psi1(Wave1 {
                grid: self.interior.clone(),
                psi: self.psi[..self.interior.n()].to_vec(),
            })
        } else {
            FieldSnap::Absent
        };
        Snapshot {
            t: self.t,
            field,
            surface: SurfaceSnap::One(Surface1 { sigma: self.sigma }),
            interior_prob: self.interior_mass(),
            surface_prob: self.sigma,
            flux_trace: trace,
            momentum_tally: vec![self.momentum_tally],
        }
    }

    pub fn run(mut self) -> Result<DetectorRecord<R>, EngineError> {
        let mut snapshots = vec![self.snapshot(Vec::new(), true)];
        let mut trace: Vec<FluxSample<R>> = Vec::new();
        let mut shut_steps = 0usize;
        let mut mono_violations = 0usize;
        let mut budget_worst = R::zero();
        let mut far_wall_peak = R::zero();
        let mut ext_end_peak = R::zero();
        let mut steps_taken = 0usize;
        let check_budget = !matches!(self.treatment, FaceTreatment::Robin { .. });
        let robin = matches!(self.treatment, FaceTreatment::Robin { .. });
        let mono_tol = r::<R>(1e-12);

        for k in 0..self.cfg.steps {
            let sigma_before = self.sigma;
            let gated = self.is_gated();
            let sample = self.step()?;
            steps_taken = k + 1;
            if gated && sample.flux == R::zero() && self.sigma == sigma_before {
                shut_steps += 1;
            }
            if self.sigma < sigma_before {
                mono_violations += 1;
            }
            if !sample.flux.is_finite() {
                return Err(EngineError::Blowup { step: k });
            }
            trace.push(sample);

            let interior = self.interior_mass();
            if robin {
                if interior > self.prev_interior + mono_tol {
                    return Err(EngineError::Budget {
                        drift: (interior - self.prev_interior).to_f64().unwrap_or(f64::NAN),
                        tol: mono_tol.to_f64().unwrap_or(f64::NAN),
                        step: k,
                    });
                }
            } else if check_budget {
                let total = if self.is_gated() {
                    interior + self.sigma
                } else {
                    interior + self.ext_mass()
                };
                let drift = (total - R::one()).abs();
                budget_worst = budget_worst.max(drift);
                if drift > self.cfg.conservation_tol {
                    return Err(EngineError::Budget {
                        drift: drift.to_f64().unwrap_or(f64::NAN),
                        tol: self.cfg.conservation_tol.to_f64().unwrap_or(f64::NAN),
                        step: k,
                    });
                }
            }
            self.prev_interior = interior;

            far_wall_peak = far_wall_peak.max(self.mass_in(0..5.min(self.n_total)));
            if self.n_total > self.interior.n() {
                let w = self.cfg.window_cells.min(self.n_total - 1);
                ext_end_peak = ext_end_peak.max(self.mass_in(self.n_total - 1 - w..self.n_total));
            }

            let stop = interior < self.cfg.stop_threshold;
            let last = k + 1 == self.cfg.steps || stop;
            if (k + 1) % self.cfg.record_every == 0 || last {
                let with_field = self.cfg.record_fields || last;
                snapshots.push(self.snapshot(std::mem::take(&mut trace), with_field));
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
            kind: self.cfg.kind,
            detector_active: self.is_gated(),
            dt: self.cfg.dt,
            steps_taken,
            face_ds: vec![R::one()],
            face_positions: vec![R::zero()],
            face_span: (R::zero(), R::zero()),
            face_periodic: false,
            snapshots,
            shut_steps,
            clamp_events: 0,
            mask_events: 0,
            monotonicity_violations: mono_violations,
            budget_worst,
            far_wall_peak,
            extension_end_peak: ext_end_peak,
            stop_threshold: self.cfg.stop_threshold,
            flags,
        })
    }
}
