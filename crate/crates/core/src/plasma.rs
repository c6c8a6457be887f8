//! Generalized Coulomb Hamiltonians
//! `H(x) = β Σ|x_j|² − g Σ_{i<j} log|x_i − x_j| + Σ_k c_k Σ_j (−log|x_j − a_k|)`,
//! the Laughlin-to-plasma unit map, and a mean-value superharmonicity checker.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::geometry::{Point, PointConfiguration};

/// Pair distances below this value (reduced units) count as coincident.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-12;

/// A fixed positive log charge at `position`.
///
/// Besides quasi-holes this also carries any radial extra term `−c log|x − a|`
/// with `c > 0`; both have the same one-body form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiHole {
    pub position: Point,
    pub coefficient: f64,
}

impl QuasiHole {
    pub const DEFAULT_COEFFICIENT: f64 = 2.0;

    pub fn new(position: Point, coefficient: f64) -> Result<Self> {
        if !(coefficient > 0.0) || !coefficient.is_finite() {
            return domain(format!("hole coefficient must be > 0, got {coefficient}"));
        }
        if !position.is_finite() {
            return domain("hole position must be finite");
        }
        Ok(QuasiHole {
            position,
            coefficient,
        })
    }

    pub fn at(position: Point) -> Result<Self> {
        Self::new(position, Self::DEFAULT_COEFFICIENT)
    }
}

/// Immutable plasma Hamiltonian. Every perturbation coefficient is positive,
/// so the one-body perturbation is superharmonic by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PlasmaHamiltonian {
    beta: f64,
    g: f64,
    holes: Vec<QuasiHole>,
}

impl PlasmaHamiltonian {
    pub fn new(beta: f64, g: f64, holes: Vec<QuasiHole>) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return domain(format!("background coefficient must be > 0, got {beta}"));
        }
        if !(g > 0.0) || !g.is_finite() {
            return domain(format!("pair coupling must be > 0, got {g}"));
        }
        for h in &holes {
            QuasiHole::new(h.position, h.coefficient)?;
        }
        Ok(PlasmaHamiltonian { beta, g, holes })
    }

    /// Reduced-unit jellium: `β = π/2`, `g = 1`, background density 1.
    pub fn jellium(holes: Vec<QuasiHole>) -> Result<Self> {
        Self::new(PI / 2.0, 1.0, holes)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn g(&self) -> f64 {
        self.g
    }
    pub fn holes(&self) -> &[QuasiHole] {
        &self.holes
    }

    /// Density of the neutralizing background, `2β/(πg)`.
    pub fn background_density(&self) -> f64 {
        2.0 * self.beta / (PI * self.g)
    }

    /// Total hole charge in units of the pair coupling.
    pub fn hole_charge(&self) -> f64 {
        self.holes.iter().map(|h| h.coefficient).sum::<f64>() / self.g
    }

    /// `β|p|² + Σ_k c_k (−log|p − a_k|)`.
    pub fn one_body(&self, p: Point) -> Result<f64> {
        let mut e = self.beta * p.norm2();
        for (k, h) in self.holes.iter().enumerate() {
            let d = p.dist(h.position);
            if d < COINCIDENCE_THRESHOLD {
                return Err(Error::InfiniteEnergy(format!(
                    "point ({}, {}) sits on hole {k}",
                    p.x, p.y
                )));
            }
            e -= h.coefficient * d.ln();
        }
        Ok(e)
    }

    fn one_body_gradient(&self, p: Point) -> Point {
        let mut gr = p * (2.0 * self.beta);
        for h in &self.holes {
            let d = p - h.position;
            gr -= d * (h.coefficient / d.norm2());
        }
        gr
    }

    /// `−g log|p − q|`.
    pub fn pair(&self, p: Point, q: Point) -> Result<f64> {
        let d = p.dist(q);
        if d < COINCIDENCE_THRESHOLD {
            return Err(Error::InfiniteEnergy(format!(
                "coincident points at ({}, {})",
                p.x, p.y
            )));
        }
        Ok(-self.g * d.ln())
    }

    pub fn energy(&self, points: &[Point]) -> Result<f64> {
        let mut e = 0.0;
        for (i, &p) in points.iter().enumerate() {
            e += self.one_body(p)?;
            for &q in &points[i + 1..] {
                e += self.pair(p, q)?;
            }
        }
        Ok(e)
    }

    /// Energy of a configuration; a multiplicity above 1 is a coincidence.
    pub fn energy_of(&self, config: &PointConfiguration) -> Result<f64> {
        if let Some(i) = config.multiplicities().iter().position(|&m| m > 1) {
            return Err(Error::InfiniteEnergy(format!(
                "point {i} has multiplicity {}",
                config.multiplicity(i)
            )));
        }
        self.energy(config.points())
    }

    pub fn gradient(&self, points: &[Point]) -> Result<Vec<Point>> {
        let mut grad: Vec<Point> = Vec::with_capacity(points.len());
        for &p in points {
            for (k, h) in self.holes.iter().enumerate() {
                if p.dist(h.position) < COINCIDENCE_THRESHOLD {
                    return Err(Error::InfiniteEnergy(format!("point sits on hole {k}")));
                }
            }
            grad.push(self.one_body_gradient(p));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d = points[i] - points[j];
                let r2 = d.norm2();
                if r2 < COINCIDENCE_THRESHOLD * COINCIDENCE_THRESHOLD {
                    return Err(Error::InfiniteEnergy(format!(
                        "points {i} and {j} coincide"
                    )));
                }
                let f = d * (self.g / r2);
                grad[i] -= f;
                grad[j] += f;
            }
        }
        Ok(grad)
    }

    /// Energy change when point `j` moves to `new`, in O(N).
    pub fn delta_energy(&self, points: &[Point], j: usize, new: Point) -> Result<f64> {
        let old = points[j];
        let mut de = self.one_body(new)? - self.one_body(old)?;
        for (i, &q) in points.iter().enumerate() {
            if i != j {
                de += self.pair(new, q)? - self.pair(old, q)?;
            }
        }
        Ok(de)
    }

    /// The one-body perturbation `Σ_k c_k (−log|x − a_k|)` as a function.
    pub fn perturbation(&self) -> impl Fn(Point) -> f64 + '_ {
        move |p| {
            self.holes
                .iter()
                .map(|h| -h.coefficient * p.dist(h.position).ln())
                .sum()
        }
    }
}

/// Laughlin Hamiltonian `H_F` in original units: `β = B/2`, `g = 2ℓ`, holes as given.
pub fn laughlin_hamiltonian(b: f64, ell: u32, holes: &[QuasiHole]) -> Result<PlasmaHamiltonian> {
    if !(b > 0.0) || ell == 0 {
        return domain(format!("need B > 0 and ℓ ≥ 1, got B = {b}, ℓ = {ell}"));
    }
    PlasmaHamiltonian::new(0.5 * b, 2.0 * ell as f64, holes.to_vec())
}

/// Reduced-unit Hamiltonian and length scale `s = √(2πℓ/B)` with
/// `H_F(s·x)/(2ℓ) = ℋ(x) + const`.
pub fn laughlin_to_plasma(
    b: f64,
    ell: u32,
    holes: &[QuasiHole],
) -> Result<(PlasmaHamiltonian, f64)> {
    if !(b > 0.0) || ell == 0 {
        return domain(format!("need B > 0 and ℓ ≥ 1, got B = {b}, ℓ = {ell}"));
    }
    let two_ell = 2.0 * ell as f64;
    let s = (PI * two_ell / b).sqrt();
    let reduced = holes
        .iter()
        .map(|h| QuasiHole::new(h.position * (1.0 / s), h.coefficient / two_ell))
        .collect::<Result<Vec<_>>>()?;
    Ok((PlasmaHamiltonian::jellium(reduced)?, s))
}

/// Background density `B/(2πℓ)` of the Laughlin plasma in original units.
pub fn laughlin_density(b: f64, ell: u32) -> f64 {
    b / (2.0 * PI * ell as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperharmonicityReport {
    pub passed: bool,
    /// Minimum over checked disks of `w(center) − mean_circle(w)`.
    pub worst_margin: f64,
    pub checked: usize,
    /// Disks skipped because a singularity lies at the center or near the circle.
    pub skipped: Vec<usize>,
}

pub const MEAN_VALUE_NODES: usize = 64;
pub const MEAN_VALUE_TOLERANCE: f64 = 1e-8;

/// Relative width of the band around a test circle that must be free of
/// singularities; keeps the 64-node circle quadrature accurate to ~1e−10.
pub const SINGULARITY_BAND: f64 = 0.3;

/// Mean-value test of superharmonicity: `w(c) ≥ ⨍_{∂D(c,r)} w` on each disk.
///
/// Singularities strictly inside a disk do not skip it: a superharmonic
/// function with point singularities still satisfies the inequality. A disk
/// is skipped when a listed singularity is at its center or within
/// `SINGULARITY_BAND·r` of its circle.
pub fn superharmonicity_check(
    w: impl Fn(Point) -> f64,
    singularities: &[Point],
    disks: &[(Point, f64)],
) -> SuperharmonicityReport {
    let mut worst = f64::INFINITY;
    let mut skipped = Vec::new();
    let mut checked = 0;
    for (k, &(c, r)) in disks.iter().enumerate() {
        let near = singularities.iter().any(|&s| {
            let d = s.dist(c);
            d < COINCIDENCE_THRESHOLD || (d - r).abs() < SINGULARITY_BAND * r
        });
        if near || !(r > 0.0) {
            skipped.push(k);
            continue;
        }
        let center = w(c);
        let mut sum = 0.0;
        let mut finite = center.is_finite();
        for m in 0..MEAN_VALUE_NODES {
            let v = w(c + Point::polar(r, 2.0 * PI * m as f64 / MEAN_VALUE_NODES as f64));
            finite &= v.is_finite();
            sum += v;
        }
        if !finite {
            skipped.push(k);
            continue;
        }
        checked += 1;
        worst = worst.min(center - sum / MEAN_VALUE_NODES as f64);
    }
    SuperharmonicityReport {
        passed: checked > 0 && worst >= -MEAN_VALUE_TOLERANCE,
        worst_margin: worst,
        checked,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd_gradient(h: &PlasmaHamiltonian, pts: &[Point], step: f64) -> Vec<Point> {
        let mut out = Vec::new();
        let mut q = pts.to_vec();
        for j in 0..pts.len() {
            let mut g = Point::ORIGIN;
            for axis in 0..2 {
                let e = if axis == 0 {
                    Point::new(step, 0.0)
                } else {
                    Point::new(0.0, step)
                };
                q[j] = pts[j] + e;
                let up = h.energy(&q).unwrap();
                q[j] = pts[j] - e;
                let down = h.energy(&q).unwrap();
                q[j] = pts[j];
                let d = (up - down) / (2.0 * step);
                if axis == 0 {
                    g.x = d
                } else {
                    g.y = d
                }
            }
            out.push(g);
        }
        out
    }

    #[test]
    fn energy_examples() {
        let h = PlasmaHamiltonian::jellium(vec![]).unwrap();
        let e = h.energy(&[Point::ORIGIN, Point::new(1.0, 0.0)]).unwrap();
        assert!((e - PI / 2.0).abs() < 1e-15);
        assert_eq!(h.energy(&[Point::ORIGIN]).unwrap(), 0.0);
        let a = Point::new(0.4, -0.3);
        let pts = [Point::new(1.0, 0.2), Point::new(-0.5, 0.7)];
        let with = PlasmaHamiltonian::jellium(vec![QuasiHole::at(a).unwrap()]).unwrap();
        let extra: f64 = pts.iter().map(|p| -2.0 * p.dist(a).ln()).sum();
        assert!((with.energy(&pts).unwrap() - h.energy(&pts).unwrap() - extra).abs() < 1e-13);
    }

    #[test]
    fn coincidences_are_infinite() {
        let h =
            PlasmaHamiltonian::jellium(vec![QuasiHole::at(Point::new(1.0, 1.0)).unwrap()]).unwrap();
        assert!(matches!(
            h.energy(&[Point::ORIGIN, Point::ORIGIN]),
            Err(Error::InfiniteEnergy(_))
        ));
        assert!(matches!(
            h.energy(&[Point::new(1.0, 1.0)]),
            Err(Error::InfiniteEnergy(_))
        ));
        assert!(matches!(
            h.gradient(&[Point::ORIGIN, Point::ORIGIN]),
            Err(Error::InfiniteEnergy(_))
        ));
        let c = PointConfiguration::with_multiplicities(vec![Point::ORIGIN], vec![2]).unwrap();
        assert!(matches!(h.energy_of(&c), Err(Error::InfiniteEnergy(_))));
    }

    #[test]
    fn gradient_symmetries() {
        let h = PlasmaHamiltonian::jellium(vec![]).unwrap();
        assert_eq!(h.gradient(&[Point::ORIGIN]).unwrap()[0], Point::ORIGIN);
        let p = Point::new(0.3, -0.8);
        let g = h.gradient(&[p, -p]).unwrap();
        assert!((g[0] + g[1]).norm() < 1e-15);
    }

    #[test]
    fn laughlin_units() {
        let (h, s) = laughlin_to_plasma(1.0, 1, &[]).unwrap();
        assert!((h.background_density() - 1.0).abs() < 1e-15);
        assert!((s - (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((laughlin_density(1.0, 1) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((laughlin_density(1.0, 3) - 1.0 / (6.0 * PI)).abs() < 1e-15);
        let orig = laughlin_hamiltonian(1.0, 3, &[]).unwrap();
        assert!((orig.background_density() - laughlin_density(1.0, 3)).abs() < 1e-15);
        for (b, ell) in [(0.7, 1), (2.0, 2), (5.0, 5)] {
            let (h, _) = laughlin_to_plasma(b, ell, &[]).unwrap();
            assert!((h.background_density() - 1.0).abs() < 1e-14);
        }
        assert!(laughlin_to_plasma(0.0, 1, &[]).is_err());
        assert!(laughlin_to_plasma(1.0, 0, &[]).is_err());
    }

    #[test]
    fn superharmonicity_examples() {
        let a = Point::new(0.2, 0.1);
        let disks: Vec<(Point, f64)> = (0..20)
            .map(|k| {
                (
                    Point::new(0.3 * k as f64 - 3.0, 0.17 * k as f64 - 1.0),
                    0.5 + 0.1 * k as f64,
                )
            })
            .collect();
        let minus_log = superharmonicity_check(|x| -x.dist(a).ln(), &[a], &disks);
        assert!(minus_log.passed, "{minus_log:?}");
        let plus_log = superharmonicity_check(|x| x.dist(a).ln(), &[a], &disks);
        assert!(!plus_log.passed);
        let quad = superharmonicity_check(|x| x.norm2(), &[], &disks);
        assert!(!quad.passed);
        let hit = superharmonicity_check(|x| -x.dist(a).ln(), &[a], &[(a, 1.0)]);
        assert_eq!(hit.skipped, vec![0]);
        assert!(plus_log.checked > 0 && plus_log.skipped.len() < disks.len());
    }

    fn config_strategy(max_n: usize) -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2..=max_n).prop_filter_map(
            "well separated",
            |v| {
                let pts: Vec<Point> = v.into_iter().map(|(x, y)| Point::new(x, y)).collect();
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        if pts[i].dist(pts[j]) < 0.05 {
                            return None;
                        }
                    }
                }
                Some(pts)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn energy_is_permutation_invariant(pts in config_strategy(12), seed in 0usize..1000) {
            let h = PlasmaHamiltonian::jellium(vec![QuasiHole::at(Point::new(5.0, 5.0)).unwrap()]).unwrap();
            let mut perm = pts.clone();
            let n = perm.len();
            for i in 0..n {
                perm.swap(i, (i * 7 + seed) % n);
            }
            let (a, b) = (h.energy(&pts).unwrap(), h.energy(&perm).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn gradient_matches_finite_differences(pts in config_strategy(16)) {
            let h = PlasmaHamiltonian::jellium(vec![QuasiHole::new(Point::new(0.1, 4.0), 1.5).unwrap()]).unwrap();
            let g = h.gradient(&pts).unwrap();
            let fd = fd_gradient(&h, &pts, 1e-5);
            let scale = g.iter().map(|p| p.norm()).fold(1.0, f64::max);
            for (a, b) in g.iter().zip(&fd) {
                prop_assert!((*a - *b).norm() <= 1e-5 * scale);
            }
        }

        #[test]
        fn laughlin_scaling_identity(pts in config_strategy(10), b in 0.3f64..4.0, ell in 1u32..5) {
            let holes = [QuasiHole::at(Point::new(10.0, -9.0)).unwrap(), QuasiHole::new(Point::new(-12.0, 3.0), 3.0).unwrap()];
            let orig = laughlin_hamiltonian(b, ell, &holes).unwrap();
            let (red, s) = laughlin_to_plasma(b, ell, &holes).unwrap();
            let diff = |x: &[Point]| {
                let scaled: Vec<Point> = x.iter().map(|&p| p * s).collect();
                orig.energy(&scaled).unwrap() / (2.0 * ell as f64) - red.energy(x).unwrap()
            };
            let shifted: Vec<Point> = pts.iter().map(|&p| p * 0.7 + Point::new(0.3, -0.2)).collect();
            prop_assert!((diff(&pts) - diff(&shifted)).abs() < 1e-10 * (1.0 + red.energy(&pts).unwrap().abs()));
        }
    }
}
