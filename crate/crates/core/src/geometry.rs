//! Computational domains and the boundary distance weight.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FracError, Result};

/// A point in the plane; one-dimensional geometries use the first coordinate
/// and keep the second at zero.
pub type Point = [f64; 2];

pub fn dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Shape of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Interval { a: f64, b: f64 },
    Disk { center: Point, radius: f64 },
}

/// A bounded domain with its fractional order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub s: f64,
}

impl Domain {
    pub fn interval(a: f64, b: f64, s: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(FracError::InvalidDomain(format!(
                "interval requires a < b, got ({a}, {b})"
            )));
        }
        Self::checked(DomainKind::Interval { a, b }, s)
    }

    pub fn disk(center: Point, radius: f64, s: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(FracError::InvalidDomain(format!(
                "disk requires radius > 0, got {radius}"
            )));
        }
        Self::checked(DomainKind::Disk { center, radius }, s)
    }

    fn checked(kind: DomainKind, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(invalid("s", format!("s must lie in (0,1), got {s}")));
        }
        Ok(Self { kind, s })
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Disk { .. } => 2,
        }
    }

    /// Lebesgue measure |Ω|.
    pub fn measure(&self) -> f64 {
        match self.kind {
            DomainKind::Interval { a, b } => b - a,
            DomainKind::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    /// Fractional critical exponent 2N/(N-2s); `None` when N <= 2s.
    pub fn critical_exponent(&self) -> Option<f64> {
        critical_exponent(self.dim(), self.s)
    }

    /// Signed distance to the boundary (positive inside).
    fn signed_distance(&self, x: &Point) -> f64 {
        match self.kind {
            DomainKind::Interval { a, b } => (x[0] - a).min(b - x[0]),
            DomainKind::Disk { center, radius } => radius - dist(x, &center),
        }
    }

    pub fn contains_closed(&self, x: &Point) -> bool {
        let scale = self.length_scale();
        self.signed_distance(x) >= -1e-12 * scale
    }

    pub fn contains_open(&self, x: &Point) -> bool {
        self.signed_distance(x) > 0.0
    }

    pub fn length_scale(&self) -> f64 {
        match self.kind {
            DomainKind::Interval { a, b } => b - a,
            DomainKind::Disk { radius, .. } => radius,
        }
    }

    /// δ(x) = dist(x, ℝ^N \ Ω), for x in the closed domain.
    pub fn boundary_distance(&self, x: &Point) -> Result<f64> {
        if !self.contains_closed(x) {
            return Err(FracError::OutsideDomain { point: *x });
        }
        Ok(self.signed_distance(x).max(0.0))
    }
}

pub fn critical_exponent(dim: usize, s: f64) -> Option<f64> {
    let n = dim as f64;
    if n > 2.0 * s {
        Some(2.0 * n / (n - 2.0 * s))
    } else {
        None
    }
}
