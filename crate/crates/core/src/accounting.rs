//! Probability bookkeeping on top of finished runs: position measures with
//! the singular surface part, arrival-time distributions with the
//! never-arrives atom, screen (surface x time) distributions, conditional
//! on-detector statistics, and the ungated signed flux integral used as a
//! comparison baseline.

use crate::error::AccountingError;
use crate::record::{DetectorRecord, FieldSnap, Snapshot, SurfaceSnap};
use crate::scalar::{r, Real};

/// Axis-aligned query box. The 1D variant is an interval on the x axis.
#[derive(Debug, Clone, Copy)]
pub enum Region<R: Real> {
    Interval { lo: R, hi: R },
    Rect { x_lo: R, x_hi: R, y_lo: R, y_hi: R },
}

impl<R: Real> Region<R> {
    pub fn interval(lo: R, hi: R) -> Self {
        Region::Interval { lo, hi }
    }

    pub fn rect(x_lo: R, x_hi: R, y_lo: R, y_hi: R) -> Self {
        Region::Rect { x_lo, x_hi, y_lo, y_hi }
    }
}

fn olap<R: Real>(a0: R, a1: R, b0: R, b1: R) -> R {
    (a1.min(b1) - a0.max(b0)).max(R::zero())
}

/// Spread `density * length` over the bins of `edges` that [a, b] covers.
fn distribute<R: Real>(edges: &[R], a: R, b: R, density: R, out: &mut [R]) {
    if !(b > a) || density == R::zero() {
        return;
    }
    let mut i = edges.partition_point(|&e| e <= a).saturating_sub(1);
    while i < out.len() {
        if edges[i] >= b {
            break;
        }
        let o = olap(edges[i], edges[i + 1], a, b);
        if o > R::zero() {
            out[i] += density * o;
        }
        i += 1;
    }
}

/// Dual cells of the face nodes as (lo, hi) pieces inside the span.
/// Periodic faces use centered cells with the overhang wrapped around;
/// walled faces use the cumulative partition, which pins the half cells
/// to the walls. Both cover the span exactly.
fn face_cells<R: Real>(
    pos: &[R],
    ds: &[R],
    span: (R, R),
    periodic: bool,
) -> Vec<Vec<(R, R)>> {
    let (lo, hi) = span;
    if periodic {
        let len = hi - lo;
        pos.iter()
            .zip(ds)
            .map(|(&y, &w)| {
                let half = w * r::<R>(0.5);
                let (a, b) = (y - half, y + half);
                if a < lo {
                    vec![(lo, b), (a + len, hi)]
                } else if b > hi {
                    vec![(a, hi), (lo, b - len)]
                } else {
                    vec![(a, b)]
                }
            })
            .collect()
    } else {
        let mut e = lo;
        ds.iter()
            .map(|&w| {
                let cell = (e, e + w);
                e = e + w;
                vec![cell]
            })
            .collect()
    }
}

fn density_1d<R: Real>(
    snap: &Snapshot<R>,
) -> Result<(crate::grid::Grid1<R>, Vec<R>), AccountingError> {
    match &snap.field {
        FieldSnap::Psi1(w) => Ok((w.grid.clone(), w.density())),
        FieldSnap::Hydro(s) => Ok((s.grid.clone(), s.rho.clone())),
        _ => Err(AccountingError::MissingField("a 1D density field".into())),
    }
}

/// Probability of finding the system in `region` at the snapshot time:
/// the density integral over the region's interior part plus, when the
/// region touches the detector face, the surface part (which carries
/// weight despite having zero volume). Partial cells enter by overlap
/// fraction of the trapezoid dual cell.
pub fn position_measure<R: Real>(
    snap: &Snapshot<R>,
    region: &Region<R>,
) -> Result<R, AccountingError> {
    match (region, &snap.surface) {
        (&Region::Interval { lo, hi }, SurfaceSnap::One(surf)) => {
            let (grid, rho) = density_1d(snap)?;
            let l = grid.length();
            let slack = r::<R>(1e-12) * (R::one() + l);
            if lo > hi {
                return Err(AccountingError::RegionOutsideDomain("inverted interval".into()));
            }
            if lo < -l - slack || hi > slack {
                return Err(AccountingError::RegionOutsideDomain(format!(
                    "interval [{lo}, {hi}] not contained in [-{l}, 0]"
                )));
            }
            let mut acc = R::zero();
            let mut e = -l;
            for (i, &rho_i) in rho.iter().enumerate() {
                let w = grid.weight(i);
                acc += rho_i * olap(e, e + w, lo, hi);
                e += w;
            }
            if hi >= -slack {
                acc += surf.sigma;
            }
            Ok(acc)
        }
        (&Region::Rect { x_lo, x_hi, y_lo, y_hi }, SurfaceSnap::Two(surf)) => {
            let wave = match &snap.field {
                FieldSnap::Psi2(w) => w,
                _ => return Err(AccountingError::MissingField("a 2D density field".into())),
            };
            let grid = &wave.grid;
            let (lx, ly) = (grid.length_x(), grid.length_y());
            let half_ly = ly * r::<R>(0.5);
            let slack = r::<R>(1e-12) * (R::one() + lx.max(ly));
            if x_lo > x_hi || y_lo > y_hi {
                return Err(AccountingError::RegionOutsideDomain("inverted box".into()));
            }
            if x_lo < -lx - slack
                || x_hi > slack
                || y_lo < -half_ly - slack
                || y_hi > half_ly + slack
            {
                return Err(AccountingError::RegionOutsideDomain(format!(
                    "box [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}] not contained in the domain"
                )));
            }
            let mut ox = vec![R::zero(); grid.nx()];
            let mut e = -lx;
            for (i, o) in ox.iter_mut().enumerate() {
                let w = grid.weight_x(i);
                *o = olap(e, e + w, x_lo, x_hi);
                e += w;
            }
            let ypos: Vec<R> = (0..grid.ny()).map(|j| grid.y(j)).collect();
            let yds: Vec<R> = (0..grid.ny()).map(|j| grid.weight_y(j)).collect();
            let cells = face_cells(&ypos, &yds, (-half_ly, half_ly), grid.periodic_y());
            let oy: Vec<R> = cells
                .iter()
                .map(|pieces| {
                    pieces
                        .iter()
                        .map(|&(a, b)| olap(a, b, y_lo, y_hi))
                        .fold(R::zero(), |s, v| s + v)
                })
                .collect();
            let rho = wave.density();
            let mut acc = R::zero();
            for i in 0..grid.nx() {
                if ox[i] == R::zero() {
                    continue;
                }
                for j in 0..grid.ny() {
                    acc += rho[(i, j)] * ox[i] * oy[j];
                }
            }
            if x_hi >= -slack {
                for j in 0..grid.ny() {
                    acc += surf.sigma[j] * oy[j];
                }
            }
            Ok(acc)
        }
        _ => Err(AccountingError::BadBinning(
            "region dimension does not match the snapshot".into(),
        )),
    }
}

fn require_arrival<R: Real>(record: &DetectorRecord<R>) -> Result<(), AccountingError> {
    if record.is_arrival_record() {
        Ok(())
    } else {
        Err(AccountingError::NotAnArrivalRecord { kind: record.kind.as_str().into() })
    }
}

/// Probability of arrival by time t. Only one-way detector records carry
/// this meaning; for anything else the surface reading is refused rather
/// than silently repurposed.
pub fn arrival_cumulative<R: Real>(
    record: &DetectorRecord<R>,
    t: R,
) -> Result<R, AccountingError> {
    require_arrival(record)?;
    record.surface_at(t)
}

/// Probability of arrival within [t, t + dt].
pub fn arrival_interval<R: Real>(
    record: &DetectorRecord<R>,
    t: R,
    dt: R,
) -> Result<R, AccountingError> {
    if !(dt > R::zero()) {
        return Err(AccountingError::BadBinning(format!(
            "interval length must be positive, got {dt}"
        )));
    }
    Ok(arrival_cumulative(record, t + dt)? - arrival_cumulative(record, t)?)
}

fn make_time_edges<R: Real>(horizon: R, width: R) -> Result<Vec<R>, AccountingError> {
    if !(width > R::zero()) || !width.is_finite() {
        return Err(AccountingError::BadBinning(format!(
            "bin width must be positive and finite, got {width}"
        )));
    }
    let nb = ((horizon / width).to_f64().unwrap_or(0.0) - 1e-9).ceil().max(1.0) as usize;
    let mut edges = Vec::with_capacity(nb + 1);
    edges.push(R::zero());
    for k in 1..nb {
        edges.push(width * r::<R>(k as f64));
    }
    edges.push(horizon);
    Ok(edges)
}

#[derive(Debug, Clone)]
pub struct ArrivalDistribution<R: Real> {
    pub time_edges: Vec<R>,
    pub mass: Vec<R>,
    /// Mass of the never-arrives event, 1 minus the surface probability at
    /// the horizon. An upper bound when `truncated` is set.
    pub never: R,
    pub horizon: R,
    pub p_horizon: R,
    pub truncated: bool,
}

impl<R: Real> ArrivalDistribution<R> {
    pub fn total(&self) -> R {
        self.mass.iter().fold(self.never, |a, &m| a + m)
    }

    pub fn cumulative(&self) -> Vec<R> {
        let mut acc = R::zero();
        let mut out = vec![R::zero()];
        for &m in &self.mass {
            acc += m;
            out.push(acc);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct DetectorDistribution<R: Real> {
    pub surface_edges: Vec<R>,
    pub time_edges: Vec<R>,
    /// mass[surface bin][time bin]
    pub mass: Vec<Vec<R>>,
    pub never: R,
    pub horizon: R,
    pub p_horizon: R,
    pub truncated: bool,
}

impl<R: Real> DetectorDistribution<R> {
    pub fn time_marginal(&self) -> Vec<R> {
        let nt = self.time_edges.len() - 1;
        let mut out = vec![R::zero(); nt];
        for row in &self.mass {
            for (k, &m) in row.iter().enumerate() {
                out[k] += m;
            }
        }
        out
    }

    pub fn surface_marginal(&self) -> Vec<R> {
        self.mass
            .iter()
            .map(|row| row.iter().fold(R::zero(), |a, &m| a + m))
            .collect()
    }

    pub fn total(&self) -> R {
        self.mass
            .iter()
            .flat_map(|row| row.iter())
            .fold(self.never, |a, &m| a + m)
    }
}

/// Where and when probability landed on the detector: per-node sigma
/// increments resolved into surface bins (by dual-cell overlap, so a node
/// sitting on a bin edge splits its mass symmetrically) and time bins (by
/// interpolating each node's sigma trajectory at the bin edges).
pub fn detector_distribution<R: Real>(
    record: &DetectorRecord<R>,
    surface_bins: usize,
    time_bin_width: R,
) -> Result<DetectorDistribution<R>, AccountingError> {
    require_arrival(record)?;
    if surface_bins == 0 {
        return Err(AccountingError::BadBinning("need at least one surface bin".into()));
    }
    let horizon = record.horizon();
    let time_edges = make_time_edges(horizon, time_bin_width)?;
    let nt = time_edges.len() - 1;
    let nodes = record.surface_nodes();

    let (nb, surface_edges, shares): (usize, Vec<R>, Vec<Vec<(usize, R)>>) = if nodes == 1 {
        (
            1,
            vec![record.face_span.0, record.face_span.1],
            vec![vec![(0, record.face_ds[0])]],
        )
    } else {
        let nb = surface_bins;
        let (lo, hi) = record.face_span;
        let width = (hi - lo) / r::<R>(nb as f64);
        let mut edges: Vec<R> = (0..nb).map(|k| lo + width * r::<R>(k as f64)).collect();
        edges.push(hi);
        let cells =
            face_cells(&record.face_positions, &record.face_ds, record.face_span, record.face_periodic);
        let shares = cells
            .iter()
            .map(|pieces| {
                let mut acc = vec![R::zero(); nb];
                for &(a, b) in pieces {
                    distribute(&edges, a, b, R::one(), &mut acc);
                }
                acc.into_iter()
                    .enumerate()
                    .filter(|&(_, v)| v > R::zero())
                    .collect()
            })
            .collect();
        (nb, edges, shares)
    };

    let mut sig = vec![vec![R::zero(); nodes]; nt + 1];
    for (e, &te) in time_edges.iter().enumerate() {
        for (j, s) in sig[e].iter_mut().enumerate() {
            *s = record.sigma_node_at(j, te)?;
        }
    }
    let mut mass = vec![vec![R::zero(); nt]; nb];
    for j in 0..nodes {
        for &(b, share) in &shares[j] {
            for k in 0..nt {
                mass[b][k] += share * (sig[k + 1][j] - sig[k][j]);
            }
        }
    }
    let p_horizon = record.surface_at(horizon)?;
    Ok(DetectorDistribution {
        surface_edges,
        time_edges,
        mass,
        never: R::one() - p_horizon,
        horizon,
        p_horizon,
        truncated: record.flags.truncated,
    })
}

/// Arrival-time distribution: sigma increments aggregated over the whole
/// detector surface, plus the never-arrives atom. Built as the one-bin
/// surface reduction so it agrees with the screen distribution by
/// construction.
pub fn arrival_distribution<R: Real>(
    record: &DetectorRecord<R>,
    time_bin_width: R,
) -> Result<ArrivalDistribution<R>, AccountingError> {
    let d = detector_distribution(record, 1, time_bin_width)?;
    let mass = d.mass.into_iter().next().unwrap_or_default();
    Ok(ArrivalDistribution {
        time_edges: d.time_edges,
        mass,
        never: d.never,
        horizon: d.horizon,
        p_horizon: d.p_horizon,
        truncated: d.truncated,
    })
}

fn region_touches_face<R: Real>(region: &Region<R>) -> bool {
    let slack = r::<R>(1e-12);
    match *region {
        Region::Interval { lo, hi } => lo <= slack && hi >= -slack,
        Region::Rect { x_lo, x_hi, .. } => x_lo <= slack && x_hi >= -slack,
    }
}

/// Surface mass inside the region at time t (the numerator of the
/// conditional measure). The region is intersected with the detector
/// surface only; its interior part is ignored here.
fn surface_mass_in<R: Real>(
    record: &DetectorRecord<R>,
    t: R,
    region: &Region<R>,
) -> Result<R, AccountingError> {
    if !region_touches_face(region) {
        return Ok(R::zero());
    }
    let nodes = record.surface_nodes();
    if nodes == 1 {
        return Ok(record.sigma_node_at(0, t)? * record.face_ds[0]);
    }
    let (y_lo, y_hi) = match *region {
        Region::Rect { y_lo, y_hi, .. } => (y_lo, y_hi),
        Region::Interval { .. } => {
            return Err(AccountingError::BadBinning(
                "1D region queried against a 2D detector surface".into(),
            ))
        }
    };
    let cells =
        face_cells(&record.face_positions, &record.face_ds, record.face_span, record.face_periodic);
    let mut acc = R::zero();
    for (j, pieces) in cells.iter().enumerate() {
        let o = pieces
            .iter()
            .map(|&(a, b)| olap(a, b, y_lo, y_hi))
            .fold(R::zero(), |s, v| s + v);
        if o > R::zero() {
            acc += record.sigma_node_at(j, t)? * o;
        }
    }
    Ok(acc)
}

/// Conditional probability of the region given arrival, at time t.
pub fn conditional_measure<R: Real>(
    record: &DetectorRecord<R>,
    t: R,
    region: &Region<R>,
) -> Result<R, AccountingError> {
    let p_d = record.surface_at(t)?;
    if !(p_d > R::zero()) {
        return Err(AccountingError::UndefinedConditional);
    }
    Ok(surface_mass_in(record, t, region)? / p_d)
}

/// Expected impact momentum of the probability absorbed so far: each
/// transfer event was tallied with the momentum it carried at absorption,
/// and the conditional expectation is that tally normalized by the
/// arrival probability. Returns [p_x] in 1D, [p_x, p_y] in 2D.
pub fn conditional_momentum<R: Real>(
    record: &DetectorRecord<R>,
    t: R,
) -> Result<Vec<R>, AccountingError> {
    let p_d = record.surface_at(t)?;
    if !(p_d > R::zero()) {
        return Err(AccountingError::UndefinedConditional);
    }
    let tally = record.momentum_tally_at(t)?;
    let mut px = R::zero();
    let mut py = R::zero();
    for (j, &ds) in record.face_ds.iter().enumerate() {
        px += tally[j][0] * ds;
        py += tally[j][1] * ds;
    }
    if record.surface_nodes() == 1 {
        Ok(vec![px / p_d])
    } else {
        Ok(vec![px / p_d, py / p_d])
    }
}

/// Time bins of the raw signed flux integral, no gate applied. Entries can
/// be negative and the cumulative need not be monotone; this is the
/// baseline the gated arrival distribution is compared against.
#[derive(Debug, Clone)]
pub struct FluxDistribution<R: Real> {
    pub time_edges: Vec<R>,
    pub mass: Vec<R>,
}

impl<R: Real> FluxDistribution<R> {
    pub fn cumulative(&self) -> Vec<R> {
        let mut acc = R::zero();
        let mut out = vec![R::zero()];
        for &m in &self.mass {
            acc += m;
            out.push(acc);
        }
        out
    }

    pub fn is_monotone(&self) -> bool {
        self.mass.iter().all(|&m| m >= R::zero())
    }
}

pub fn signed_flux_distribution<R: Real>(
    record: &DetectorRecord<R>,
    time_bin_width: R,
) -> Result<FluxDistribution<R>, AccountingError> {
    let horizon = record.horizon();
    let time_edges = make_time_edges(horizon, time_bin_width)?;
    let mut mass = vec![R::zero(); time_edges.len() - 1];
    let dt = record.dt;
    for s in record.full_flux_trace() {
        let b = s.t.min(horizon);
        let a = (s.t - dt).max(R::zero());
        distribute(&time_edges, a, b, s.flux, &mut mass);
    }
    Ok(FluxDistribution { time_edges, mass })
}

/// Signed flux integral over [0, t] from the per-step trace, each step
/// contributing pro rata.
pub fn flux_integral<R: Real>(record: &DetectorRecord<R>, t: R) -> Result<R, AccountingError> {
    let horizon = record.horizon();
    let tol = r::<R>(1e-12) * (R::one() + horizon.abs());
    if t < -tol || t > horizon + tol {
        return Err(AccountingError::OutsideHorizon {
            t: t.to_f64().unwrap_or(f64::NAN),
            horizon: horizon.to_f64().unwrap_or(f64::NAN),
        });
    }
    let t = t.max(R::zero()).min(horizon);
    let dt = record.dt;
    let mut acc = R::zero();
    for s in record.full_flux_trace() {
        let a = s.t - dt;
        if a >= t {
            break;
        }
        acc += s.flux * olap(a, s.t, R::zero(), t);
    }
    Ok(acc)
}
