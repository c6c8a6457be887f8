//! Plane points and labeled point configurations.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Point::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Point {
    fn sub_assign(&mut self, o: Point) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// N labeled points with positive integer multiplicities.
///
/// A multiplicity `m` at `p` stands for `m` coincident unit charges; the
/// screening and smearing routines use it directly, while the Hamiltonians
/// treat it as a coincidence (infinite energy).
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    points: Vec<Point>,
    multiplicities: Vec<u32>,
}

impl PointConfiguration {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::with_multiplicities(points, vec![1; n])
    }

    pub fn with_multiplicities(points: Vec<Point>, multiplicities: Vec<u32>) -> Result<Self> {
        if points.is_empty() {
            return domain("a configuration needs at least one point");
        }
        if points.len() != multiplicities.len() {
            return domain(format!(
                "{} points but {} multiplicities",
                points.len(),
                multiplicities.len()
            ));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return domain(format!("point {i} has a non-finite coordinate"));
        }
        if let Some(i) = multiplicities.iter().position(|&m| m == 0) {
            return domain(format!("point {i} has multiplicity 0"));
        }
        Ok(PointConfiguration {
            points,
            multiplicities,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn multiplicity(&self, i: usize) -> u32 {
        self.multiplicities[i]
    }

    /// Total charge, counting multiplicities.
    pub fn total_charge(&self) -> u64 {
        self.multiplicities.iter().map(|&m| m as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, u32)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.multiplicities.iter().copied())
    }

    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Sub-configuration picked by index, keeping multiplicities.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut pts = Vec::with_capacity(indices.len());
        let mut mult = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return domain(format!("index {i} out of range (N = {})", self.len()));
            }
            pts.push(self.points[i]);
            mult.push(self.multiplicities[i]);
        }
        Self::with_multiplicities(pts, mult)
    }
}

/// Convex hull in counter-clockwise order (Andrew's monotone chain).
/// Collinear boundary points are dropped.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 {
            let n = lower.len();
            if (lower[n - 1] - lower[n - 2]).cross(p - lower[n - 2]) <= 0.0 {
                lower.pop();
            } else {
                break;
            }
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 {
            let n = upper.len();
            if (upper[n - 1] - upper[n - 2]).cross(p - upper[n - 2]) <= 0.0 {
                upper.pop();
            } else {
                break;
            }
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from `p` to the boundary of the polygon `hull` (any orientation).
pub fn distance_to_polygon_boundary(p: Point, hull: &[Point]) -> f64 {
    match hull.len() {
        0 => f64::INFINITY,
        1 => p.dist(hull[0]),
        _ => (0..hull.len())
            .map(|i| segment_distance(p, hull[i], hull[(i + 1) % hull.len()]))
            .fold(f64::INFINITY, f64::min),
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_point() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(0.5, 0.5),
            Point::new(0.5, 0.0),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        assert!((distance_to_polygon_boundary(Point::new(0.5, 0.5), &hull) - 0.5).abs() < 1e-15);
        assert!((distance_to_polygon_boundary(Point::new(0.5, 0.1), &hull) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn configuration_rejects_bad_input() {
        assert!(PointConfiguration::new(vec![]).is_err());
        assert!(PointConfiguration::new(vec![Point::new(f64::NAN, 0.0)]).is_err());
        assert!(PointConfiguration::with_multiplicities(vec![Point::ORIGIN], vec![0]).is_err());
        let c = PointConfiguration::with_multiplicities(
            vec![Point::ORIGIN, Point::new(1.0, 0.0)],
            vec![2, 1],
        )
        .unwrap();
        assert_eq!(c.total_charge(), 3);
        assert_eq!(c.subset(&[1]).unwrap().total_charge(), 1);
    }
}
