//! Discrete wave functions and the densities derived from them.

use ndarray::Array2;

use crate::constants::Constants;
use crate::error::FieldError;
use crate::grid::{Grid1, Grid2};
use crate::scalar::{r, Real, C};

#[derive(Debug, Clone)]
pub struct Wave1<R: Real> {
    pub grid: Grid1<R>,
    pub psi: Vec<C<R>>,
}

impl<R: Real> Wave1<R> {
    pub fn new(grid: Grid1<R>, psi: Vec<C<R>>) -> Result<Self, FieldError> {
        if psi.len() != grid.n() {
            return Err(FieldError::GridMismatch(format!(
                "{} amplitudes for a {}-node grid",
                psi.len(),
                grid.n()
            )));
        }
        for (i, z) in psi.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(FieldError::NonFinite { index: i });
            }
        }
        Ok(Wave1 { grid, psi })
    }

    pub fn from_fn(grid: Grid1<R>, f: impl Fn(R) -> C<R>) -> Result<Self, FieldError> {
        let psi = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Wave1::new(grid, psi)
    }

    pub fn density(&self) -> Vec<R> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm_sq(&self) -> R {
        self.grid.integrate(&self.density())
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sq().sqrt();
        let inv = C::new(R::one() / n, R::zero());
        for z in &mut self.psi {
            *z *= inv;
        }
    }

    /// Probability current j = (hbar/m) Im(psi* d_x psi), central differences
    /// inside, second-order one-sided stencils at both walls.
    pub fn current(&self, cs: &Constants<R>) -> Vec<R> {
        let n = self.grid.n();
        let dx = self.grid.spacing();
        let hm = cs.hbar_over_m();
        let p = &self.psi;
        let half = r::<R>(0.5);
        let mut j = vec![R::zero(); n];
        for i in 1..n - 1 {
            let d = (p[i + 1] - p[i - 1]) * C::new(half / dx, R::zero());
            j[i] = hm * (p[i].conj() * d).im;
        }
        let two = r::<R>(2.0);
        let d0 = (p[1] * two * two - p[2] - p[0] * r::<R>(3.0)) * C::new(half / dx, R::zero());
        j[0] = hm * (p[0].conj() * d0).im;
        let dn = (p[n - 1] * r::<R>(3.0) - p[n - 2] * two * two + p[n - 3])
            * C::new(half / dx, R::zero());
        j[n - 1] = hm * (p[n - 1].conj() * dn).im;
        j
    }

    /// Outward normal flux density n.j at the detector face.
    pub fn boundary_flux(&self, cs: &Constants<R>) -> R {
        let j = self.current(cs);
        j[self.grid.face_index()]
    }
}

#[derive(Debug, Clone)]
pub struct Wave2<R: Real> {
    pub grid: Grid2<R>,
    pub psi: Array2<C<R>>,
}

impl<R: Real> Wave2<R> {
    pub fn new(grid: Grid2<R>, psi: Array2<C<R>>) -> Result<Self, FieldError> {
        if psi.dim() != (grid.nx(), grid.ny()) {
            return Err(FieldError::GridMismatch(format!(
                "{:?} amplitudes for a {} x {} grid",
                psi.dim(),
                grid.nx(),
                grid.ny()
            )));
        }
        for (k, z) in psi.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(FieldError::NonFinite { index: k });
            }
        }
        Ok(Wave2 { grid, psi })
    }

    pub fn from_fn(grid: Grid2<R>, f: impl Fn(R, R) -> C<R>) -> Result<Self, FieldError> {
        let psi = Array2::from_shape_fn((grid.nx(), grid.ny()), |(i, j)| f(grid.x(i), grid.y(j)));
        Wave2::new(grid, psi)
    }

    pub fn density(&self) -> Array2<R> {
        self.psi.mapv(|z| z.norm_sqr())
    }

    pub fn norm_sq(&self) -> R {
        self.grid.integrate(&self.density())
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sq().sqrt();
        let inv = C::new(R::one() / n, R::zero());
        self.psi.mapv_inplace(|z| z * inv);
    }

    /// Outward normal flux density along the face, one value per face node.
    pub fn boundary_flux(&self, cs: &Constants<R>) -> Vec<R> {
        let nx = self.grid.nx();
        let dx = self.grid.dx();
        let hm = cs.hbar_over_m();
        let half = r::<R>(0.5);
        let three = r::<R>(3.0);
        let four = r::<R>(4.0);
        (0..self.grid.ny())
            .map(|j| {
                let f = self.psi[(nx - 1, j)];
                let a = self.psi[(nx - 2, j)];
                let b = self.psi[(nx - 3, j)];
                let d = (f * three - a * four + b) * C::new(half / dx, R::zero());
                hm * (f.conj() * d).im
            })
            .collect()
    }
}
