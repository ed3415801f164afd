//! Absorbed probability living on the detector face. In 1D the face is a
//! single point; in 2D it is the x = 0 edge and sigma is a density per
//! unit length of that edge.

use crate::grid::Grid2;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Surface1<R: Real> {
    pub sigma: R,
}

impl<R: Real> Surface1<R> {
    pub fn zero() -> Self {
        Surface1 { sigma: R::zero() }
    }

    #[inline]
    pub fn total_probability(&self) -> R {
        self.sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surface2<R: Real> {
    pub sigma: Vec<R>,
}

impl<R: Real> Surface2<R> {
    pub fn zero(ny: usize) -> Self {
        Surface2 { sigma: vec![R::zero(); ny] }
    }

    pub fn total_probability(&self, grid: &Grid2<R>) -> R {
        self.sigma
            .iter()
            .enumerate()
            .map(|(j, &s)| s * grid.face_ds(j))
            .fold(R::zero(), |a, b| a + b)
    }
}
