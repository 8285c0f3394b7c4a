//! Uniform 1D grids and the physical unit scale.

use serde::Serialize;

use crate::error::{Error, Result};

/// Closure applied to stencil couplings that leave the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Indices wrap modulo `N`; operators are circulant.
    Periodic,
    /// Couplings outside the grid are dropped (hard-wall box, wavefunction zero outside).
    Dirichlet,
}

/// `N` equally spaced points `x_n = origin + n * spacing`, `n = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    points: usize,
    spacing: f64,
    boundary: Boundary,
    origin: f64,
}

impl GridSpec {
    /// Grid with the default origin: centred on zero for Dirichlet, starting at zero for periodic.
    pub fn new(points: usize, spacing: f64, boundary: Boundary) -> Result<Self> {
        if points == 0 {
            return Err(Error::Size("grid needs at least one point".into()));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Domain(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        let origin = match boundary {
            Boundary::Periodic => 0.0,
            Boundary::Dirichlet => -0.5 * (points - 1) as f64 * spacing,
        };
        Ok(Self {
            points,
            spacing,
            boundary,
            origin,
        })
    }

    /// Grid of total length `L = N * a`.
    pub fn with_length(points: usize, length: f64, boundary: Boundary) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!(
                "grid length must be positive, got {length}"
            )));
        }
        if points == 0 {
            return Err(Error::Size("grid needs at least one point".into()));
        }
        Self::new(points, length / points as f64, boundary)
    }

    pub fn with_origin(mut self, origin: f64) -> Self {
        self.origin = origin;
        self
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn length(&self) -> f64 {
        self.points as f64 * self.spacing
    }

    pub fn x(&self, n: usize) -> f64 {
        self.origin + n as f64 * self.spacing
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.points).map(|n| self.x(n)).collect()
    }
}

/// Physical constants entering the operator prefactors.
///
/// The default `hbar = 1`, `hbar2_over_2mu = 1` gives Rydberg energies for lengths in bohr.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysScale {
    hbar: f64,
    hbar2_over_2mu: f64,
}

impl PhysScale {
    pub fn new(hbar: f64, hbar2_over_2mu: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::Domain(format!("hbar must be positive, got {hbar}")));
        }
        if !(hbar2_over_2mu > 0.0 && hbar2_over_2mu.is_finite()) {
            return Err(Error::Domain(format!(
                "hbar^2/2mu must be positive, got {hbar2_over_2mu}"
            )));
        }
        Ok(Self {
            hbar,
            hbar2_over_2mu,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn hbar2_over_2mu(&self) -> f64 {
        self.hbar2_over_2mu
    }
}

impl Default for PhysScale {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            hbar2_over_2mu: 1.0,
        }
    }
}
