use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Boundary treatment in y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum YBoundary {
    /// Period `h`; nodes at `y_j = j·dy`, `dy = h/ny`.
    Periodic { h: f64 },
    /// Zero at `y = 0` and `y = l`; interior nodes `y_j = (j + 1)·dy`, `dy = l/(ny + 1)`.
    Dirichlet { l: f64 },
}

/// Cell-centred grid on `[x_lo, x_hi] × y-domain` with absorbing (zero)
/// boundaries in x.
///
/// x nodes sit at cell centres, `x_j = x_lo + (j + ½)·dx`; the zero
/// boundary values live half a cell outside the first and last nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_lo: f64,
    pub x_hi: f64,
    pub nx: usize,
    pub ny: usize,
    pub bc_y: YBoundary,
}

impl Grid2D {
    pub fn new(x_lo: f64, x_hi: f64, nx: usize, ny: usize, bc_y: YBoundary) -> Result<Self> {
        let g = Self {
            x_lo,
            x_hi,
            nx,
            ny,
            bc_y,
        };
        g.validate()?;
        Ok(g)
    }

    /// Symmetric window `[−X, X]`.
    pub fn symmetric(half_extent: f64, nx: usize, ny: usize, bc_y: YBoundary) -> Result<Self> {
        Self::new(-half_extent, half_extent, nx, ny, bc_y)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 {
            return Err(invalid("nx", format!("need at least 8 cells, got {}", self.nx)));
        }
        if self.ny < 8 {
            return Err(invalid("ny", format!("need at least 8 cells, got {}", self.ny)));
        }
        if !(self.x_lo.is_finite() && self.x_hi.is_finite() && self.x_hi > self.x_lo) {
            return Err(invalid("x window", "need finite x_lo < x_hi"));
        }
        match self.bc_y {
            YBoundary::Periodic { h } if !(h > 0.0 && h.is_finite()) => {
                Err(invalid("h", "period must be positive"))
            }
            YBoundary::Dirichlet { l } if !(l > 0.0 && l.is_finite()) => {
                Err(invalid("l", "strip width must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_hi - self.x_lo) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        match self.bc_y {
            YBoundary::Periodic { h } => h / self.ny as f64,
            YBoundary::Dirichlet { l } => l / (self.ny + 1) as f64,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_lo + (j as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        match self.bc_y {
            YBoundary::Periodic { .. } => j as f64 * self.dy(),
            YBoundary::Dirichlet { .. } => (j + 1) as f64 * self.dy(),
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    /// Area of one cell; Dirichlet strips integrate over `[0, l]`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same window with `factor` times as many cells in each direction.
    pub fn refined(&self, factor: usize) -> Self {
        let ny = match self.bc_y {
            YBoundary::Periodic { .. } => self.ny * factor,
            YBoundary::Dirichlet { .. } => (self.ny + 1) * factor - 1,
        };
        Self {
            nx: self.nx * factor,
            ny,
            ..*self
        }
    }
}

/// Row-major field: `values[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
            time: 0.0,
        }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[iy * nx..(iy + 1) * nx]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(*v))
    }

    /// `∫∫ T dx dy` over the window and one period (or the strip).
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_area()
    }

    /// `sup_x` of each row.
    pub fn row_sups(&self) -> Vec<f64> {
        (0..self.grid.ny)
            .map(|iy| self.row(iy).iter().fold(0.0_f64, |m, v| m.max(*v)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout() {
        let g = Grid2D::new(-2.0, 2.0, 8, 8, YBoundary::Periodic { h: 1.0 }).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.x(0), -1.75);
        assert_eq!(g.x(7), 1.75);
        assert_eq!(g.y(4), 0.5);
        let s = Grid2D::new(-1.0, 1.0, 8, 9, YBoundary::Dirichlet { l: 1.0 }).unwrap();
        assert!((s.dy() - 0.1).abs() < 1e-15);
        assert!((s.y(8) - 0.9).abs() < 1e-15);
        let r = s.refined(2);
        assert_eq!(r.ny, 19);
        assert!((r.dy() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid2D::new(-1.0, 1.0, 4, 8, YBoundary::Periodic { h: 1.0 }).is_err());
        assert!(Grid2D::new(1.0, -1.0, 8, 8, YBoundary::Periodic { h: 1.0 }).is_err());
    }
}
