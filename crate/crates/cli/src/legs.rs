//! Turns a parsed configuration into a concrete engine run. Compare jobs
//! reuse this to spin several engines off one scenario.

use arrival_core::engines::InitialState;
use arrival_core::oracle::{
    analytic_density, analytic_gaussian, analytic_velocity, make_backflow_state, BackflowWitness,
    GaussianParams, SuperposedGaussians,
};
use arrival_core::{
    Constants, DetectorRecord, EngineConfig, EngineKind, Grid1, Grid2, MadelungState, Wave1, Wave2,
    C,
};

use crate::config::{Config, Initial};
use crate::Failure;

pub struct WitnessInfo {
    pub witness: BackflowWitness<f64>,
    pub terms: SuperposedGaussians<f64>,
    pub verified: bool,
}

pub struct Leg {
    pub kind: EngineKind,
    pub record: DetectorRecord<f64>,
    pub witness: Option<WitnessInfo>,
}

/// Robin and hydro faces do their own absorbing, so those legs drop the
/// continuation instead of fighting over it.
pub fn engine_config(cfg: &Config, kind: EngineKind) -> EngineConfig<f64> {
    let mut out = EngineConfig::new(kind);
    out.dt = cfg.engine.dt;
    out.steps = cfg.engine.steps;
    out.record_every = cfg.engine.record_every;
    out.cfl_safety = cfg.engine.cfl_safety;
    out.conservation_tol = cfg.engine.conservation_tol;
    out.window_cells = cfg.engine.window_cells;
    out.stop_threshold = cfg.engine.stop_threshold;
    out.record_fields = false;
    out.extension = match kind {
        EngineKind::Robin | EngineKind::IdealHydro => 0.0,
        _ => cfg.grid.extension,
    };
    if let Some((re, im)) = cfg.beta {
        out.beta = C::new(re, im);
    }
    out
}

fn build_initial(
    cfg: &Config,
    kind: EngineKind,
    cs: &Constants<f64>,
) -> Result<(InitialState<f64>, Option<WitnessInfo>), Failure> {
    if cfg.grid.dim == 2 {
        let (ly, ny, periodic) = cfg.grid.y.expect("validated 2d grid");
        let grid = Grid2::new(cfg.grid.length, cfg.grid.nodes, ly, ny, periodic)?;
        let Initial::Gaussian { x0, s, k0, t0, y } = &cfg.initial else {
            return Err(Failure::Config("2d runs take gaussian initial data".into()));
        };
        let (sy, ky) = y.expect("validated 2d initial");
        let px = GaussianParams::new(*x0, *s, *k0, *t0)?;
        let py = GaussianParams::new(0.0, sy, ky, *t0)?;
        let mut wave =
            Wave2::from_fn(grid, |x, yy| analytic_gaussian(&px, cs, x, 0.0) * analytic_gaussian(&py, cs, yy, 0.0))?;
        wave.normalize();
        return Ok((InitialState::Psi2(wave), None));
    }

    let grid = Grid1::new(cfg.grid.length, cfg.grid.nodes)?;
    match &cfg.initial {
        Initial::Gaussian { x0, s, k0, t0, .. } => {
            let p = GaussianParams::new(*x0, *s, *k0, *t0)?;
            if kind == EngineKind::IdealHydro {
                let mut rho: Vec<f64> =
                    (0..grid.n()).map(|i| analytic_density(&p, cs, grid.x(i), 0.0)).collect();
                let v: Vec<f64> =
                    (0..grid.n()).map(|i| analytic_velocity(&p, cs, grid.x(i), 0.0)).collect();
                let mass = grid.integrate(&rho);
                for r in &mut rho {
                    *r /= mass;
                }
                Ok((InitialState::Hydro(MadelungState { grid, rho, v }), None))
            } else {
                let mut wave = Wave1::from_fn(grid, |x| analytic_gaussian(&p, cs, x, 0.0))?;
                wave.normalize();
                Ok((InitialState::Psi1(wave), None))
            }
        }
        Initial::Backflow { x0, s, k1, k2, ratio, phase } => {
            // the witness scan needs a positive window even for a
            // zero-step run
            let horizon = (cfg.engine.dt * cfg.engine.steps as f64).max(1.0);
            let w2 = C::from_polar(*ratio, *phase);
            let state =
                make_backflow_state(&grid, cs, *k1, *k2, (C::new(1.0, 0.0), w2), *s, *x0, horizon)?;
            let verified = state.witness.verify(&state.terms, cs);
            let info = WitnessInfo { witness: state.witness, terms: state.terms, verified };
            Ok((InitialState::Psi1(state.wave), Some(info)))
        }
    }
}

pub fn run_leg(cfg: &Config, kind: EngineKind, cs: &Constants<f64>) -> Result<Leg, Failure> {
    let (initial, witness) = build_initial(cfg, kind, cs)?;
    let engine_cfg = engine_config(cfg, kind);
    let record = arrival_core::run_evolution(initial, &engine_cfg, cs)?;
    Ok(Leg { kind, record, witness })
}
