//! Hydrodynamic decomposition of a wave function: density rho, current
//! velocity v and osmotic velocity u, plus the pointwise energy density
//! built from them. Velocities are left at zero where rho falls below the
//! node threshold, so vortex cores and tails stay finite.

use ndarray::Array2;

use crate::constants::{default_node_eps, Constants};
use crate::grid::Grid1;
use crate::scalar::{r, Real};
use crate::wave::{Wave1, Wave2};

/// (rho, v, u) state of a 1D hydrodynamic evolution.
#[derive(Debug, Clone)]
pub struct MadelungState<R: Real> {
    pub grid: Grid1<R>,
    pub rho: Vec<R>,
    pub v: Vec<R>,
}

impl<R: Real> MadelungState<R> {
    pub fn interior_probability(&self) -> R {
        self.grid.integrate(&self.rho)
    }
}

fn gradient<R: Real>(f: &[R], dx: R) -> Vec<R> {
    let n = f.len();
    let half = r::<R>(0.5) / dx;
    let mut g = vec![R::zero(); n];
    for i in 1..n - 1 {
        g[i] = (f[i + 1] - f[i - 1]) * half;
    }
    let three = r::<R>(3.0);
    let four = r::<R>(4.0);
    g[0] = (f[1] * four - f[2] - f[0] * three) * half;
    g[n - 1] = (f[n - 1] * three - f[n - 2] * four + f[n - 3]) * half;
    g
}

/// Current velocity v = j/rho and osmotic velocity
/// u = (hbar/2m) grad(rho)/rho, both from the wave function directly:
/// v = (hbar/m) Im(psi* psi')/rho, u = (hbar/m) Re(psi* psi')/rho.
pub fn velocity_fields_from_wave<R: Real>(
    w: &Wave1<R>,
    cs: &Constants<R>,
) -> (Vec<R>, Vec<R>) {
    let n = w.grid.n();
    let dx = w.grid.spacing();
    let hm = cs.hbar_over_m();
    let rho = w.density();
    let eps = default_node_eps(rho.iter().cloned().fold(R::zero(), R::max));
    let p = &w.psi;
    let half = r::<R>(0.5);
    let mut v = vec![R::zero(); n];
    let mut u = vec![R::zero(); n];
    let mut set = |i: usize, d: crate::scalar::C<R>| {
        if rho[i] > eps {
            let q = p[i].conj() * d;
            v[i] = hm * q.im / rho[i];
            u[i] = hm * q.re / rho[i];
        }
    };
    for i in 1..n - 1 {
        set(i, (p[i + 1] - p[i - 1]) * crate::scalar::C::new(half / dx, R::zero()));
    }
    let three = r::<R>(3.0);
    let four = r::<R>(4.0);
    set(0, (p[1] * four - p[2] - p[0] * three) * crate::scalar::C::new(half / dx, R::zero()));
    set(
        n - 1,
        (p[n - 1] * three - p[n - 2] * four + p[n - 3])
            * crate::scalar::C::new(half / dx, R::zero()),
    );
    (v, u)
}

/// Osmotic velocity from the density alone, u = (hbar/2m) grad(rho)/rho.
/// This is the route the hydrodynamic engine uses each stage.
pub fn stochastic_velocity_from_density<R: Real>(
    rho: &[R],
    dx: R,
    cs: &Constants<R>,
    eps: R,
) -> Vec<R> {
    let g = gradient(rho, dx);
    let c = cs.hbar_over_m() * r::<R>(0.5);
    rho.iter()
        .zip(g)
        .map(|(&d, gd)| if d > eps { c * gd / d } else { R::zero() })
        .collect()
}

/// Pointwise energy density
/// E = (m/2) v^2 + V - (m/2) u^2 - (hbar/2) div u.
/// For a real Gaussian in the width-matched oscillator potential this is
/// spatially constant, hbar^2/(4 m s^2).
pub fn energy_field<R: Real>(
    grid: &Grid1<R>,
    v: &[R],
    u: &[R],
    cs: &Constants<R>,
) -> Vec<R> {
    let du = gradient(u, grid.spacing());
    let hm2 = cs.mass * r::<R>(0.5);
    let hb2 = cs.hbar * r::<R>(0.5);
    (0..grid.n())
        .map(|i| {
            hm2 * v[i] * v[i] + cs.potential_at(i) - hm2 * u[i] * u[i] - hb2 * du[i]
        })
        .collect()
}

/// Discrete curl of the 2D current velocity, d_x v_y - d_y v_x on interior
/// nodes (zero on the rim). Away from density nodes this vanishes for any
/// single-valued phase; nonzero values flag vortices.
pub fn velocity_curl<R: Real>(w: &Wave2<R>, cs: &Constants<R>) -> Array2<R> {
    let (nx, ny) = (w.grid.nx(), w.grid.ny());
    let (dx, dy) = (w.grid.dx(), w.grid.dy());
    let hm = cs.hbar_over_m();
    let rho = w.density();
    let eps = default_node_eps(rho.iter().cloned().fold(R::zero(), R::max));
    let half = r::<R>(0.5);
    let mut vx = Array2::zeros((nx, ny));
    let mut vy = Array2::zeros((nx, ny));
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            if rho[(i, j)] > eps {
                let gx = (w.psi[(i + 1, j)] - w.psi[(i - 1, j)])
                    * crate::scalar::C::new(half / dx, R::zero());
                let gy = (w.psi[(i, j + 1)] - w.psi[(i, j - 1)])
                    * crate::scalar::C::new(half / dy, R::zero());
                vx[(i, j)] = hm * (w.psi[(i, j)].conj() * gx).im / rho[(i, j)];
                vy[(i, j)] = hm * (w.psi[(i, j)].conj() * gy).im / rho[(i, j)];
            }
        }
    }
    let mut curl = Array2::zeros((nx, ny));
    for i in 2..nx - 2 {
        for j in 2..ny - 2 {
            curl[(i, j)] = (vy[(i + 1, j)] - vy[(i - 1, j)]) * half / dx
                - (vx[(i, j + 1)] - vx[(i, j - 1)]) * half / dy;
        }
    }
    curl
}
