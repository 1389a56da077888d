//! Rectangular deployment region and the disk/region area function.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub width: f64,
    pub height: f64,
}

impl Default for Region {
    fn default() -> Self {
        Region::unit_square()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePosition {
    pub x: f64,
    pub y: f64,
}

impl NodePosition {
    pub fn new(x: f64, y: f64) -> Self {
        NodePosition { x, y }
    }
}

impl Region {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::domain(format!(
                "region sides must be positive and finite, got {width} x {height}"
            )));
        }
        Ok(Region { width, height })
    }

    pub fn unit_square() -> Self {
        Region { width: 1.0, height: 1.0 }
    }

    /// Total area `A_T`.
    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> NodePosition {
        NodePosition::new(0.5 * self.width, 0.5 * self.height)
    }

    pub fn contains(&self, p: NodePosition) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// Distance from `p` to the nearest side of the region.
    pub fn distance_to_edge(&self, p: NodePosition) -> f64 {
        p.x.min(self.width - p.x).min(p.y).min(self.height - p.y)
    }

    /// Distance from `p` to the farthest corner; every disk at least this
    /// large covers the whole region.
    pub fn farthest_corner_distance(&self, p: NodePosition) -> f64 {
        let dx = p.x.max(self.width - p.x);
        let dy = p.y.max(self.height - p.y);
        dx.hypot(dy)
    }

    fn check_inside(&self, p: NodePosition) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "position ({}, {}) lies outside the {} x {} region",
                p.x, p.y, self.width, self.height
            )))
        }
    }
}

/// Antiderivative of `sqrt(r^2 - u^2)`.
fn half_chord_integral(u: f64, r: f64) -> f64 {
    let s = (r * r - u * u).max(0.0).sqrt();
    let ratio = (u / r).clamp(-1.0, 1.0);
    0.5 * (u * s + r * r * ratio.asin())
}

/// Area of the disk of radius `r` (centered at the origin) within the
/// quadrant `{u <= x, v <= y}`.
fn quadrant_area(x: f64, y: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    if x <= -r || y <= -r {
        return 0.0;
    }
    let s_int = |a: f64, b: f64| half_chord_integral(b, r) - half_chord_integral(a, r);
    if y >= r {
        return 2.0 * s_int(-r, x);
    }
    let w = (r * r - y * y).max(0.0).sqrt();
    let mut total = 0.0;
    // vertical chords below y: full chord where |u| >= w (y >= 0), none there (y < 0)
    let outer = |a: f64, b: f64| if y >= 0.0 { 2.0 * s_int(a, b) } else { 0.0 };
    let segs = [(-r, -w), (-w, w), (w, r)];
    for (k, &(a, b)) in segs.iter().enumerate() {
        let hi = b.min(x);
        if hi <= a {
            continue;
        }
        total += if k == 1 { y * (hi - a) + s_int(a, hi) } else { outer(a, hi) };
    }
    total
}

/// Exact area of the intersection between the disk of `radius` around
/// `center` and the region, `A(j, radius)`.
pub fn disk_intersection_area(region: &Region, center: NodePosition, radius: f64) -> Result<f64> {
    region.check_inside(center)?;
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::domain(format!("radius must be nonnegative, got {radius}")));
    }
    Ok(disk_area_unchecked(region, center, radius))
}

pub(crate) fn disk_area_unchecked(region: &Region, c: NodePosition, radius: f64) -> f64 {
    if radius == 0.0 {
        return 0.0;
    }
    if radius.is_infinite() || radius >= region.farthest_corner_distance(c) {
        return region.area();
    }
    if radius <= region.distance_to_edge(c) {
        return std::f64::consts::PI * radius * radius;
    }
    let (x0, x1) = (-c.x, region.width - c.x);
    let (y0, y1) = (-c.y, region.height - c.y);
    let a = quadrant_area(x1, y1, radius) - quadrant_area(x0, y1, radius)
        - quadrant_area(x1, y0, radius)
        + quadrant_area(x0, y0, radius);
    a.clamp(0.0, region.area().min(std::f64::consts::PI * radius * radius))
}

/// Place `n` nodes independently and uniformly over the region.
pub fn place_nodes<R: Rng + ?Sized>(region: &Region, n: usize, rng: &mut R) -> Result<Vec<NodePosition>> {
    if n == 0 {
        return Err(Error::domain("cannot place zero nodes"));
    }
    Ok((0..n)
        .map(|_| {
            let x = rng.random::<f64>() * region.width;
            let y = rng.random::<f64>() * region.height;
            NodePosition::new(x, y)
        })
        .collect())
}
