//! Run records: what an engine hands to the accounting layer.

use crate::engines::EngineKind;
use crate::error::AccountingError;
use crate::madelung::MadelungState;
use crate::scalar::{r, Real};
use crate::surface::{Surface1, Surface2};
use crate::wave::{Wave1, Wave2};

/// One per-step sample of the detector-face flux. `flux` is the rate the
/// engine actually experienced: the gated transfer rate for detector
/// engines, the signed free flux for an extended reference run, the norm
/// loss rate for Robin. `face_density` is |phi|^2 at the face at the step
/// midpoint, recorded for the Robin balance check and impact-momentum
/// bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct FluxSample<R: Real> {
    pub t: R,
    pub flux: R,
    pub face_density: R,
}

#[derive(Debug, Clone)]
pub enum FieldSnap<R: Real> {
    Absent,
    Psi1(Wave1<R>),
    Psi2(Wave2<R>),
    Hydro(MadelungState<R>),
}

#[derive(Debug, Clone)]
pub enum SurfaceSnap<R: Real> {
    One(Surface1<R>),
    Two(Surface2<R>),
}

impl<R: Real> SurfaceSnap<R> {
    pub fn node(&self, j: usize) -> R {
        match self {
            SurfaceSnap::One(s) => {
                debug_assert_eq!(j, 0);
                s.sigma
            }
            SurfaceSnap::Two(s) => s.sigma[j],
        }
    }

    pub fn nodes(&self) -> usize {
        match self {
            SurfaceSnap::One(_) => 1,
            SurfaceSnap::Two(s) => s.sigma.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot<R: Real> {
    pub t: R,
    pub field: FieldSnap<R>,
    pub surface: SurfaceSnap<R>,
    pub interior_prob: R,
    pub surface_prob: R,
    /// Per-step flux samples since the previous snapshot.
    pub flux_trace: Vec<FluxSample<R>>,
    /// Cumulative sum of m*v * sigma-increment per face node, split into
    /// (normal, tangential) components; the running numerator of the
    /// impact-momentum expectation.
    pub momentum_tally: Vec<[R; 2]>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunFlags {
    pub far_wall_contaminated: bool,
    pub budget_exceeded: bool,
    /// Interior probability at the horizon still above the stop threshold,
    /// so never-arrival masses derived from this record are upper bounds.
    pub truncated: bool,
    pub resolution_warning: bool,
}

impl RunFlags {
    pub fn any(&self) -> bool {
        self.far_wall_contaminated
            || self.budget_exceeded
            || self.truncated
            || self.resolution_warning
    }
}

/// a + (b - a) w, clamped into [a, b]. Written this way the rounded value
/// is monotone in w and never overshoots either endpoint, so differences
/// of interpolated monotone curves keep their sign exactly.
fn lerp<R: Real>(a: R, b: R, w: R) -> R {
    let v = a + (b - a) * w;
    v.max(a.min(b)).min(a.max(b))
}

#[derive(Debug, Clone)]
pub struct DetectorRecord<R: Real> {
    pub kind: EngineKind,
    /// False when the detector face was run as a plain wall.
    pub detector_active: bool,
    pub dt: R,
    pub steps_taken: usize,
    /// Area element per detector-face node (a single 1.0 in 1D).
    pub face_ds: Vec<R>,
    /// Coordinate of each face node along the detector surface (all zero
    /// in 1D, where the face is a point).
    pub face_positions: Vec<R>,
    /// Extent of the detector surface in that coordinate.
    pub face_span: (R, R),
    pub face_periodic: bool,
    pub snapshots: Vec<Snapshot<R>>,
    pub shut_steps: usize,
    pub clamp_events: usize,
    pub mask_events: usize,
    pub monotonicity_violations: usize,
    pub budget_worst: R,
    /// Peak probability mass seen within five cells of a far wall.
    pub far_wall_peak: R,
    /// Peak probability mass within the audit window at the end of the
    /// detector-side continuation (informational; see sizing notes).
    pub extension_end_peak: R,
    pub stop_threshold: R,
    pub flags: RunFlags,
}

impl<R: Real> DetectorRecord<R> {
    pub fn horizon(&self) -> R {
        self.snapshots.last().map(|s| s.t).unwrap_or_else(R::zero)
    }

    /// Whether surface probability on this record means arrival
    /// probability. True only for the one-way detector engines.
    pub fn is_arrival_record(&self) -> bool {
        matches!(self.kind, EngineKind::IdealPsi | EngineKind::IdealHydro)
    }

    pub fn final_snapshot(&self) -> &Snapshot<R> {
        self.snapshots.last().expect("record always has the initial snapshot")
    }

    fn bracket(&self, t: R) -> Result<(usize, usize, R), AccountingError> {
        let hor = self.horizon();
        let tol = r::<R>(1e-12) * (R::one() + hor.abs());
        if t < -tol || t > hor + tol {
            return Err(AccountingError::OutsideHorizon {
                t: t.to_f64().unwrap_or(f64::NAN),
                horizon: hor.to_f64().unwrap_or(f64::NAN),
            });
        }
        let t = t.max(R::zero()).min(hor);
        let snaps = &self.snapshots;
        let mut hi = snaps.len() - 1;
        let mut lo = 0usize;
        while hi - lo > 1 {
            let mid = (hi + lo) / 2;
            if snaps[mid].t <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if snaps.len() == 1 {
            return Ok((0, 0, R::zero()));
        }
        let span = snaps[hi].t - snaps[lo].t;
        let w = if span > R::zero() { (t - snaps[lo].t) / span } else { R::zero() };
        Ok((lo, hi, w))
    }

    /// Total surface probability at time t, linear between snapshots.
    pub fn surface_at(&self, t: R) -> Result<R, AccountingError> {
        let (lo, hi, w) = self.bracket(t)?;
        Ok(lerp(self.snapshots[lo].surface_prob, self.snapshots[hi].surface_prob, w))
    }

    pub fn interior_at(&self, t: R) -> Result<R, AccountingError> {
        let (lo, hi, w) = self.bracket(t)?;
        Ok(lerp(self.snapshots[lo].interior_prob, self.snapshots[hi].interior_prob, w))
    }

    /// Per-node sigma at time t, linear between snapshots.
    pub fn sigma_node_at(&self, j: usize, t: R) -> Result<R, AccountingError> {
        let (lo, hi, w) = self.bracket(t)?;
        Ok(lerp(self.snapshots[lo].surface.node(j), self.snapshots[hi].surface.node(j), w))
    }

    pub fn surface_nodes(&self) -> usize {
        self.face_ds.len()
    }

    /// Per-node cumulative impact-momentum numerators at time t, linear
    /// between snapshots (the tallies are cumulative sums, so this is
    /// consistent with the sigma interpolation).
    pub fn momentum_tally_at(&self, t: R) -> Result<Vec<[R; 2]>, AccountingError> {
        let (lo, hi, w) = self.bracket(t)?;
        let a = &self.snapshots[lo].momentum_tally;
        let b = &self.snapshots[hi].momentum_tally;
        let omw = R::one() - w;
        Ok((0..a.len())
            .map(|j| [a[j][0] * omw + b[j][0] * w, a[j][1] * omw + b[j][1] * w])
            .collect())
    }

    /// Concatenated per-step flux samples over the whole run.
    pub fn full_flux_trace(&self) -> Vec<FluxSample<R>> {
        let mut out = Vec::new();
        for s in &self.snapshots {
            out.extend_from_slice(&s.flux_trace);
        }
        out
    }
}
