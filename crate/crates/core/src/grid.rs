//! Uniform grids over the detector geometry. The domain is the interval
//! [-L, 0] (1D) or the rectangle [-Lx, 0] x [-Ly/2, Ly/2] (2D); the
//! detector face is the x = 0 boundary with outward normal +x, every other
//! boundary is a non-detecting wall. Along the detector edge (y) the 2D
//! grid may instead be periodic.

use crate::error::FieldError;
use crate::scalar::{r, Real};

pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1<R: Real> {
    length: R,
    n: usize,
}

impl<R: Real> Grid1<R> {
    pub fn new(length: R, n: usize) -> Result<Self, FieldError> {
        if !(length > R::zero()) {
            return Err(FieldError::BadGrid(format!("length must be positive, got {length}")));
        }
        if n < MIN_NODES {
            return Err(FieldError::BadGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        Ok(Grid1 { length, n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> R {
        self.length
    }

    #[inline]
    pub fn spacing(&self) -> R {
        self.length / r::<R>((self.n - 1) as f64)
    }

    /// Node coordinate; node 0 is the far wall at -L, node n-1 the face at 0.
    #[inline]
    pub fn x(&self, i: usize) -> R {
        -self.length + self.spacing() * r::<R>(i as f64)
    }

    #[inline]
    pub fn face_index(&self) -> usize {
        self.n - 1
    }

    /// Trapezoid quadrature weight of node i (also the finite-volume dual
    /// cell size, which is what makes budget telescoping exact).
    #[inline]
    pub fn weight(&self, i: usize) -> R {
        let dx = self.spacing();
        if i == 0 || i == self.n - 1 {
            dx * r::<R>(0.5)
        } else {
            dx
        }
    }

    pub fn integrate(&self, f: &[R]) -> R {
        debug_assert_eq!(f.len(), self.n);
        let dx = self.spacing();
        let mut acc = (f[0] + f[self.n - 1]) * r::<R>(0.5);
        for &v in &f[1..self.n - 1] {
            acc += v;
        }
        acc * dx
    }

    /// Detector face area element (a point in 1D).
    #[inline]
    pub fn face_ds(&self) -> R {
        R::one()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2<R: Real> {
    length_x: R,
    nx: usize,
    length_y: R,
    ny: usize,
    periodic_y: bool,
}

impl<R: Real> Grid2<R> {
    pub fn new(
        length_x: R,
        nx: usize,
        length_y: R,
        ny: usize,
        periodic_y: bool,
    ) -> Result<Self, FieldError> {
        if !(length_x > R::zero() && length_y > R::zero()) {
            return Err(FieldError::BadGrid("extents must be positive".into()));
        }
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(FieldError::BadGrid(format!(
                "need at least {MIN_NODES} nodes per axis, got {nx} x {ny}"
            )));
        }
        Ok(Grid2 { length_x, nx, length_y, ny, periodic_y })
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn length_x(&self) -> R {
        self.length_x
    }

    #[inline]
    pub fn length_y(&self) -> R {
        self.length_y
    }

    #[inline]
    pub fn periodic_y(&self) -> bool {
        self.periodic_y
    }

    #[inline]
    pub fn dx(&self) -> R {
        self.length_x / r::<R>((self.nx - 1) as f64)
    }

    /// y spacing: extent/(n-1) between walls, extent/n on the periodic torus
    /// (a periodic axis has no duplicated end node).
    #[inline]
    pub fn dy(&self) -> R {
        if self.periodic_y {
            self.length_y / r::<R>(self.ny as f64)
        } else {
            self.length_y / r::<R>((self.ny - 1) as f64)
        }
    }

    #[inline]
    pub fn x(&self, i: usize) -> R {
        -self.length_x + self.dx() * r::<R>(i as f64)
    }

    #[inline]
    pub fn y(&self, j: usize) -> R {
        -self.length_y * r::<R>(0.5) + self.dy() * r::<R>(j as f64)
    }

    #[inline]
    pub fn face_index(&self) -> usize {
        self.nx - 1
    }

    #[inline]
    pub fn weight_x(&self, i: usize) -> R {
        let dx = self.dx();
        if i == 0 || i == self.nx - 1 {
            dx * r::<R>(0.5)
        } else {
            dx
        }
    }

    #[inline]
    pub fn weight_y(&self, j: usize) -> R {
        let dy = self.dy();
        if self.periodic_y || (j != 0 && j != self.ny - 1) {
            dy
        } else {
            dy * r::<R>(0.5)
        }
    }

    /// Area element carried by one detector-face node.
    #[inline]
    pub fn face_ds(&self, j: usize) -> R {
        self.weight_y(j)
    }

    pub fn integrate(&self, f: &ndarray::Array2<R>) -> R {
        debug_assert_eq!(f.dim(), (self.nx, self.ny));
        let mut acc = R::zero();
        for i in 0..self.nx {
            let wx = self.weight_x(i);
            for j in 0..self.ny {
                acc += f[(i, j)] * wx * self.weight_y(j);
            }
        }
        acc
    }
}
