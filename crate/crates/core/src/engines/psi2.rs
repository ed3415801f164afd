//! 2D wave-function engines by Strang splitting: a half step along the
//! detector edge (y), a full step along the detector normal (x), another
//! half step along y. The y sweeps are unitary per line (walled or
//! periodic), and the x sweep is the 1D face treatment applied row by
//! row, so every row carries its own gate and its own exact transfer
//! tally. The probability budget therefore holds to round-off exactly as
//! in 1D, and sigma is monotone per face node.

use ndarray::Array2;

use crate::constants::Constants;
use crate::error::EngineError;
use crate::grid::Grid2;
use crate::record::{DetectorRecord, FieldSnap, FluxSample, RunFlags, Snapshot, SurfaceSnap};
use crate::scalar::{r, Real, C};
use crate::surface::Surface2;
use crate::wave::Wave2;

use super::cn::{bond_transfer, CnSystem, CyclicCn, FaceRow};
use super::{resolution_check_2d, EngineConfig, EngineKind};

enum YStep<R: Real> {
    Walled(CnSystem<R>),
    Periodic(CyclicCn<R>),
}

enum XStep<R: Real> {
    Walled(CnSystem<R>),
    Gated {
        open: CnSystem<R>,
        severed_in: CnSystem<R>,
        severed_out: CnSystem<R>,
    },
}

pub struct Psi2Engine<R: Real> {
    cfg: EngineConfig<R>,
    cs: Constants<R>,
    interior: Grid2<R>,
    nx_total: usize,
    face: usize,
    ny: usize,
    dx: R,
    g: R,
    psi: Vec<C<R>>, // index i * ny + j
    ystep: YStep<R>,
    xstep: XStep<R>,
    xbuf: Vec<C<R>>,
    xtrial: Vec<C<R>>,
    scratch: Vec<C<R>>,
    phi_face: Vec<C<R>>,
    inc_row: Vec<R>,
    sigma: Vec<R>,
    tally: Vec<[R; 2]>,
    t: R,
    node_eps: R,
}

impl<R: Real> Psi2Engine<R> {
    pub fn new(
        wave: Wave2<R>,
        cfg: EngineConfig<R>,
        cs: Constants<R>,
    ) -> Result<Self, EngineError> {
        match cfg.kind {
            EngineKind::Reference | EngineKind::IdealPsi => {}
            _ => {
                return Err(EngineError::Unsupported(
                    "2D supports the reference and ideal-detector wave engines".into(),
                ))
            }
        }
        if !cs.is_free() {
            return Err(EngineError::Unsupported("2D runs are free-particle only".into()));
        }
        resolution_check_2d(&wave)?;
        let interior = wave.grid.clone();
        let (nx, ny) = (interior.nx(), interior.ny());
        let dx = interior.dx();
        let dy = interior.dy();
        let dt = cfg.dt;
        let g = cs.hbar * dt / (r::<R>(4.0) * cs.mass * dx * dx);
        let gy = cs.hbar * (dt * r::<R>(0.5)) / (r::<R>(4.0) * cs.mass * dy * dy);

        let ystep = if interior.periodic_y() {
            YStep::Periodic(CyclicCn::build(ny, gy)?)
        } else {
            YStep::Walled(CnSystem::build(ny - 2, gy, dy, &[], FaceRow::Dirichlet)?)
        };

        let wants_extension = cfg.kind == EngineKind::IdealPsi && cfg.extension > R::zero();
        if cfg.kind == EngineKind::Reference && cfg.extension > R::zero() {
            return Err(EngineError::Unsupported(
                "2D reference runs keep the face walled (extension must be 0)".into(),
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
        let nx_total = nx + ext_nodes;
        let face = nx - 1;
        let xstep = if ext_nodes == 0 {
            XStep::Walled(CnSystem::build(nx - 2, g, dx, &[], FaceRow::Dirichlet)?)
        } else {
            XStep::Gated {
                open: CnSystem::build(nx_total - 2, g, dx, &[], FaceRow::Dirichlet)?,
                severed_in: CnSystem::build(face, g, dx, &[], FaceRow::Neumann)?,
                severed_out: CnSystem::build(nx_total - 2 - face, g, dx, &[], FaceRow::Dirichlet)?,
            }
        };

        let zero = C::new(R::zero(), R::zero());
        let mut psi = vec![zero; nx_total * ny];
        for i in 0..nx {
            for j in 0..ny {
                psi[i * ny + j] = wave.psi[(i, j)];
            }
        }
        for j in 0..ny {
            psi[j] = zero; // far x wall
            psi[(nx_total - 1) * ny + j] = zero;
            if ext_nodes == 0 {
                psi[face * ny + j] = zero; // walled face
            }
        }
        if !interior.periodic_y() {
            for i in 0..nx_total {
                psi[i * ny] = zero;
                psi[i * ny + ny - 1] = zero;
            }
        }

        let rho_max = psi.iter().map(|z| z.norm_sqr()).fold(R::zero(), R::max);
        let node_eps = crate::constants::default_node_eps(rho_max);
        let buflen = nx_total.max(ny);
        let engine = Psi2Engine {
            cfg,
            cs,
            interior,
            nx_total,
            face,
            ny,
            dx,
            g,
            psi,
            ystep,
            xstep,
            xbuf: vec![zero; nx_total],
            xtrial: vec![zero; nx_total],
            scratch: vec![zero; buflen],
            phi_face: vec![zero; ny],
            inc_row: vec![R::zero(); ny],
            sigma: vec![R::zero(); ny],
            tally: vec![[R::zero(); 2]; ny],
            t: R::zero(),
            node_eps,
        };
        let m0 = engine.interior_mass();
        if (m0 - R::one()).abs() > r::<R>(1e-8) {
            return Err(EngineError::Unsupported(format!(
                "initial state is not normalized on the grid (norm^2 = {})",
                m0.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(engine)
    }

    fn wy(&self, j: usize) -> R {
        self.interior.weight_y(j)
    }

    fn interior_mass(&self) -> R {
        let half = r::<R>(0.5);
        let mut acc = R::zero();
        for i in 0..=self.face {
            let wx = if i == 0 || i == self.face { self.dx * half } else { self.dx };
            let row = &self.psi[i * self.ny..(i + 1) * self.ny];
            let mut line = R::zero();
            for (j, z) in row.iter().enumerate() {
                line += z.norm_sqr() * self.wy(j);
            }
            acc += wx * line;
        }
        acc
    }

    fn surface_prob(&self) -> R {
        let mut acc = R::zero();
        for (j, &s) in self.sigma.iter().enumerate() {
            acc += s * self.wy(j);
        }
        acc
    }

    fn mass_columns(&self, range: std::ops::Range<usize>) -> R {
        let mut acc = R::zero();
        for i in range {
            let row = &self.psi[i * self.ny..(i + 1) * self.ny];
            let mut line = R::zero();
            for (j, z) in row.iter().enumerate() {
                line += z.norm_sqr() * self.wy(j);
            }
            acc += self.dx * line;
        }
        acc
    }

    fn y_half(&mut self) {
        let ny = self.ny;
        for i in 1..self.nx_total - 1 {
            let line = &mut self.psi[i * ny..(i + 1) * ny];
            match &self.ystep {
                YStep::Periodic(sys) => sys.step(line, &mut self.scratch[..ny]),
                YStep::Walled(sys) => {
                    sys.step(&mut line[1..ny - 1], &mut self.scratch[..ny - 2])
                }
            }
        }
    }

    /// One x sweep; returns (total transferred mass, shut row count).
    fn x_full(&mut self) -> (R, usize) {
        let ny = self.ny;
        let f = self.face;
        let half = r::<R>(0.5);
        let dt = self.cfg.dt;
        let mut shut_rows = 0usize;
        let walled_y = !self.interior.periodic_y();
        for j in 0..ny {
            if walled_y && (j == 0 || j == ny - 1) {
                self.phi_face[j] = C::new(R::zero(), R::zero());
                self.inc_row[j] = R::zero();
                continue;
            }
            for i in 0..self.nx_total {
                self.xbuf[i] = self.psi[i * ny + j];
            }
            match &self.xstep {
                XStep::Walled(sys) => {
                    let n = sys.len();
                    sys.step(&mut self.xbuf[1..1 + n], &mut self.scratch[..n]);
                    self.phi_face[j] = C::new(R::zero(), R::zero());
                    self.inc_row[j] = R::zero();
                    for i in 0..self.nx_total {
                        self.psi[i * ny + j] = self.xbuf[i];
                    }
                }
                XStep::Gated { open, severed_in, severed_out } => {
                    self.xtrial.copy_from_slice(&self.xbuf);
                    let n = open.len();
                    open.step(&mut self.xbuf[1..1 + n], &mut self.scratch[..n]);
                    let phi = |old: &[C<R>], new: &[C<R>], i: usize| {
                        (old[i] + new[i]) * C::new(half, R::zero())
                    };
                    let pf = phi(&self.xtrial, &self.xbuf, f);
                    let b1 = bond_transfer(self.g, self.dx, phi(&self.xtrial, &self.xbuf, f - 1), pf);
                    let b2 = bond_transfer(self.g, self.dx, pf, phi(&self.xtrial, &self.xbuf, f + 1));
                    let inc = (b1 + b2) * half;
                    if inc > R::zero() {
                        self.sigma[j] += inc;
                        self.inc_row[j] = inc;
                        self.phi_face[j] = pf;
                        let rho_f = pf.norm_sqr();
                        if rho_f > self.node_eps {
                            let v = inc / (dt * rho_f);
                            self.tally[j][0] += self.cs.mass * v * inc;
                        }
                        for i in 0..self.nx_total {
                            self.psi[i * ny + j] = self.xbuf[i];
                        }
                    } else {
                        shut_rows += 1;
                        self.xbuf.copy_from_slice(&self.xtrial);
                        let ni = severed_in.len();
                        severed_in.step(&mut self.xbuf[1..1 + ni], &mut self.scratch[..ni]);
                        let no = severed_out.len();
                        severed_out.step(&mut self.xbuf[f + 1..f + 1 + no], &mut self.scratch[..no]);
                        self.phi_face[j] =
                            (self.xtrial[f] + self.xbuf[f]) * C::new(half, R::zero());
                        self.inc_row[j] = R::zero();
                        for i in 0..self.nx_total {
                            self.psi[i * ny + j] = self.xbuf[i];
                        }
                    }
                }
            }
        }
        // tangential impact momentum, from the face midpoint line
        let dy = self.interior.dy();
        let periodic = self.interior.periodic_y();
        let mut total = R::zero();
        for j in 0..ny {
            let inc = self.inc_row[j];
            total += inc * self.wy(j);
            if inc > R::zero() {
                let rho_f = self.phi_face[j].norm_sqr();
                if rho_f > self.node_eps {
                    let (jl, jr) = if periodic {
                        ((j + ny - 1) % ny, (j + 1) % ny)
                    } else if j == 0 || j == ny - 1 {
                        continue;
                    } else {
                        (j - 1, j + 1)
                    };
                    let dpsi = (self.phi_face[jr] - self.phi_face[jl])
                        * C::new(half / dy, R::zero());
                    let vy = self.cs.hbar_over_m() * (self.phi_face[j].conj() * dpsi).im / rho_f;
                    self.tally[j][1] += self.cs.mass * vy * inc;
                }
            }
        }
        (total, shut_rows)
    }

    fn snapshot(&self, trace: Vec<FluxSample<R>>, with_field: bool) -> Snapshot<R> {
        let field = if with_field {
            let (nx, ny) = (self.interior.nx(), self.interior.ny());
            let psi = Array2::from_shape_fn((nx, ny), |(i, j)| self.psi[i * ny + j]);
            FieldSnap::Psi2(Wave2 { grid: self.interior.clone(), psi })
        } else {
            FieldSnap::Absent
        };
        Snapshot {
            t: self.t,
            field,
            surface: SurfaceSnap::Two(Surface2 { sigma: self.sigma.clone() }),
            interior_prob: self.interior_mass(),
            surface_prob: self.surface_prob(),
            flux_trace: trace,
            momentum_tally: self.tally.clone(),
        }
    }

    pub fn run(mut self) -> Result<DetectorRecord<R>, EngineError> {
        let mut snapshots = vec![self.snapshot(Vec::new(), true)];
        let mut trace = Vec::new();
        let mut shut_steps = 0usize;
        let mut budget_worst = R::zero();
        let mut far_wall_peak = R::zero();
        let mut ext_end_peak = R::zero();
        let mut steps_taken = 0usize;
        let nx = self.interior.nx();

        for k in 0..self.cfg.steps {
            self.y_half();
            let (inc_mass, shut_rows) = self.x_full();
            self.y_half();
            self.t += self.cfg.dt;
            steps_taken = k + 1;
            shut_steps += shut_rows;

            let face_rho: R = (0..self.ny)
                .map(|j| self.phi_face[j].norm_sqr() * self.wy(j))
                .fold(R::zero(), |a, b| a + b);
            trace.push(FluxSample {
                t: self.t,
                flux: inc_mass / self.cfg.dt,
                face_density: face_rho,
            });

            let interior = self.interior_mass();
            let total = interior + self.surface_prob();
            let drift = (total - R::one()).abs();
            if !drift.is_finite() {
                return Err(EngineError::Blowup { step: k });
            }
            budget_worst = budget_worst.max(drift);
            if drift > self.cfg.conservation_tol {
                return Err(EngineError::Budget {
                    drift: drift.to_f64().unwrap_or(f64::NAN),
                    tol: self.cfg.conservation_tol.to_f64().unwrap_or(f64::NAN),
                    step: k,
                });
            }

            far_wall_peak = far_wall_peak.max(self.mass_columns(0..5.min(self.nx_total)));
            if !self.interior.periodic_y() {
                // y wall strips over the interior
                let mut strip = R::zero();
                for i in 0..nx {
                    let row = &self.psi[i * self.ny..(i + 1) * self.ny];
                    let wx = if i == 0 || i == self.face {
                        self.dx * r::<R>(0.5)
                    } else {
                        self.dx
                    };
                    for j in (0..5.min(self.ny)).chain(self.ny.saturating_sub(5)..self.ny) {
                        strip += row[j].norm_sqr() * wx * self.wy(j);
                    }
                }
                far_wall_peak = far_wall_peak.max(strip);
            }
            if self.nx_total > nx {
                let w = self.cfg.window_cells.min(self.nx_total - 1);
                ext_end_peak =
                    ext_end_peak.max(self.mass_columns(self.nx_total - 1 - w..self.nx_total));
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
        let face_ds: Vec<R> = (0..self.ny).map(|j| self.interior.face_ds(j)).collect();
        let face_positions: Vec<R> = (0..self.ny).map(|j| self.interior.y(j)).collect();
        let half_ly = self.interior.length_y() * r::<R>(0.5);
        Ok(DetectorRecord {
            kind: self.cfg.kind,
            detector_active: matches!(self.xstep, XStep::Gated { .. }),
            dt: self.cfg.dt,
            steps_taken,
            face_ds,
            face_positions,
            face_span: (-half_ly, half_ly),
            face_periodic: self.interior.periodic_y(),
            snapshots,
            shut_steps,
            clamp_events: 0,
            mask_events: 0,
            monotonicity_violations: 0,
            budget_worst,
            far_wall_peak,
            extension_end_peak: ext_end_peak,
            stop_threshold: self.cfg.stop_threshold,
            flags,
        })
    }
}
