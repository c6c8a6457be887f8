//! Ground states of plasma Hamiltonians by multistart projected gradient
//! descent, with separation and incompressibility diagnostics and the
//! finite-box energy-per-area scan.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::fields::{
    disk_potential_radial_derivative, disk_potential_unchecked, rectangle_log_gradient,
    rectangle_log_integral, UNIT_SQUARE_MEAN_LOG,
};
use crate::geometry::{convex_hull, distance_to_polygon_boundary, Point, PointConfiguration};
use crate::parallel::{map_tasks, split_seed};
use crate::plasma::{PlasmaHamiltonian, COINCIDENCE_THRESHOLD};

/// Separation constant `δ = 1/√π` at unit density.
pub const SEPARATION_DELTA: f64 = 0.564_189_583_547_756_3;

/// A differentiable energy over N-point configurations, optionally confined
/// to a closed convex set.
pub trait Objective: Sync {
    fn energy(&self, x: &[Point]) -> Result<f64>;
    fn gradient(&self, x: &[Point]) -> Result<Vec<Point>>;
    /// Radius of the disk from which random starts are drawn.
    fn start_radius(&self, n: usize) -> f64;
    /// Projects onto the admissible set.
    fn project(&self, _x: &mut [Point]) {}
    /// Removes outward gradient components at active walls.
    fn project_gradient(&self, _x: &[Point], _g: &mut [Point]) {}
}

impl Objective for PlasmaHamiltonian {
    fn energy(&self, x: &[Point]) -> Result<f64> {
        PlasmaHamiltonian::energy(self, x)
    }
    fn gradient(&self, x: &[Point]) -> Result<Vec<Point>> {
        PlasmaHamiltonian::gradient(self, x)
    }
    fn start_radius(&self, n: usize) -> f64 {
        (n as f64 / (PI * self.background_density())).sqrt() * 1.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    pub multistart: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Convergence when the (projected) gradient norm is at most
    /// `tolerance·max(1, |E|)`.
    pub tolerance: f64,
    pub armijo: f64,
    /// Largest single-point displacement of a trial step.
    pub max_displacement: f64,
    pub serial: bool,
    pub record_trace: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            multistart: 8,
            seed: 0,
            max_iterations: 50_000,
            tolerance: 1e-8,
            armijo: 1e-4,
            max_displacement: 0.5,
            serial: false,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub seed: u64,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted energies, starting with the initial one; empty unless recorded.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub config: PointConfiguration,
    pub energy: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Index into `runs` of the returned minimum.
    pub best_run: usize,
    pub runs: Vec<RunReport>,
}

fn norm(g: &[Point]) -> f64 {
    g.iter().map(|p| p.norm2()).sum::<f64>().sqrt()
}

fn random_start(obj: &dyn Objective, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let r = obj.start_radius(n);
    let mut x: Vec<Point> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let th: f64 = rng.random::<f64>() * 2.0 * PI;
            Point::polar(r * u.sqrt(), th)
        })
        .collect();
    obj.project(&mut x);
    x
}

/// One projected-gradient run with Armijo backtracking and Barzilai–Borwein
/// initial steps. Energies along the run are non-increasing.
pub fn descend(
    obj: &dyn Objective,
    mut x: Vec<Point>,
    opts: &MinimizeOptions,
) -> Result<(Vec<Point>, RunReport)> {
    obj.project(&mut x);
    let mut e = obj.energy(&x)?;
    let mut g = obj.gradient(&x)?;
    let mut trace = Vec::new();
    if opts.record_trace {
        trace.push(e);
    }
    let mut step: f64 = 1e-2;
    let mut converged = false;
    let mut iterations = 0;
    let mut pg = g.clone();
    obj.project_gradient(&x, &mut pg);
    let mut pg_norm = norm(&pg);
    let mut trial = vec![Point::ORIGIN; x.len()];
    while iterations < opts.max_iterations {
        if pg_norm <= opts.tolerance * e.abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;
        let gmax = g.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let mut t = step.min(opts.max_displacement / gmax);
        let accepted = loop {
            for ((xt, &xi), &gi) in trial.iter_mut().zip(&x).zip(&g) {
                *xt = xi - gi * t;
            }
            obj.project(&mut trial);
            let decrease: f64 = x
                .iter()
                .zip(&trial)
                .zip(&g)
                .map(|((&xi, &ti), &gi)| gi.dot(xi - ti))
                .sum();
            if !(decrease > 0.0) {
                break None;
            }
            match obj.energy(&trial) {
                Ok(et) if et <= e - opts.armijo * decrease => break Some(et),
                Ok(_) | Err(Error::InfiniteEnergy(_)) => {}
                Err(err) => return Err(err),
            }
            t *= 0.5;
            if t < 1e-300 {
                break None;
            }
        };
        let Some(e_new) = accepted else { break };
        let g_new = obj.gradient(&trial)?;
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..x.len() {
            let s = trial[i] - x[i];
            let y = g_new[i] - g[i];
            ss += s.norm2();
            sy += s.dot(y);
        }
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-12, 1e6)
        } else {
            (4.0 * t).min(1e6)
        };
        std::mem::swap(&mut x, &mut trial);
        e = e_new;
        g = g_new;
        pg.clone_from(&g);
        obj.project_gradient(&x, &mut pg);
        pg_norm = norm(&pg);
        if opts.record_trace {
            trace.push(e);
        }
    }
    if !converged && pg_norm <= opts.tolerance * e.abs().max(1.0) {
        converged = true;
    }
    Ok((
        x,
        RunReport {
            seed: 0,
            energy: e,
            gradient_norm: pg_norm,
            iterations,
            converged,
            trace,
        },
    ))
}

/// Multistart minimization; task `k` is seeded with `split_seed(seed, k)`.
///
/// Returns the lowest-energy converged run, or the lowest-energy run with
/// `converged = false` if none converged. Ties go to the lower run index.
pub fn minimize(obj: &dyn Objective, n: usize, opts: &MinimizeOptions) -> Result<Minimum> {
    if n == 0 {
        return domain("need at least one point");
    }
    if opts.multistart == 0 {
        return domain("multistart count must be at least 1");
    }
    let results = map_tasks(opts.multistart, opts.serial, |k| {
        let seed = split_seed(opts.seed, k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = random_start(obj, n, &mut rng);
        descend(obj, start, opts).map(|(x, mut rep)| {
            rep.seed = seed;
            (x, rep)
        })
    });
    let mut runs = Vec::with_capacity(results.len());
    let mut configs = Vec::with_capacity(results.len());
    for r in results {
        let (x, rep) = r?;
        configs.push(x);
        runs.push(rep);
    }
    let better = |a: &RunReport, b: &RunReport| {
        (a.converged && !b.converged) || (a.converged == b.converged && a.energy < b.energy)
    };
    let mut best = 0;
    for k in 1..runs.len() {
        if better(&runs[k], &runs[best]) {
            best = k;
        }
    }
    Ok(Minimum {
        config: PointConfiguration::new(configs.swap_remove(best))?,
        energy: runs[best].energy,
        gradient_norm: runs[best].gradient_norm,
        converged: runs[best].converged,
        best_run: best,
        runs,
    })
}

/// Boundary from which the "bulk" margin is measured.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainBoundary {
    /// Convex hull of the configuration itself.
    ConvexHull,
    Container(Container),
    /// Every point is bulk.
    None,
}

/// Distance of each point to the declared boundary (positive inside).
pub fn boundary_distances(config: &PointConfiguration, boundary: &DomainBoundary) -> Vec<f64> {
    match boundary {
        DomainBoundary::None => vec![f64::INFINITY; config.len()],
        DomainBoundary::Container(c) => config
            .points()
            .iter()
            .map(|&p| c.inner_distance(p))
            .collect(),
        DomainBoundary::ConvexHull => {
            let hull = convex_hull(config.points());
            if hull.len() < 3 {
                return vec![0.0; config.len()];
            }
            config
                .points()
                .iter()
                .map(|&p| distance_to_polygon_boundary(p, &hull))
                .collect()
        }
    }
}

/// Bulk points: distance at least `margin` from the boundary.
pub fn bulk_indices(
    config: &PointConfiguration,
    boundary: &DomainBoundary,
    margin: f64,
) -> Vec<usize> {
    boundary_distances(config, boundary)
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d >= margin)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    /// Smallest nearest-neighbor distance over bulk points (∞ if none).
    pub distance: f64,
    pub bulk_count: usize,
    pub threshold: f64,
    /// `(bulk point, neighbor, distance)` below the threshold.
    pub violations: Vec<(usize, usize, f64)>,
}

/// Nearest-neighbor distances of bulk points, flagged against `threshold`.
/// A point of multiplicity above 1 is its own neighbor at distance 0.
pub fn min_pair_distance(
    config: &PointConfiguration,
    boundary: &DomainBoundary,
    margin: f64,
    threshold: f64,
) -> SeparationReport {
    let bulk = bulk_indices(config, boundary, margin);
    let pts = config.points();
    let mut distance = f64::INFINITY;
    let mut violations = Vec::new();
    for &i in &bulk {
        let (mut nn, mut nd) = (i, f64::INFINITY);
        if config.multiplicity(i) > 1 {
            nd = 0.0;
        } else {
            for (j, &q) in pts.iter().enumerate() {
                if j != i {
                    let d = pts[i].dist(q);
                    if d < nd {
                        nd = d;
                        nn = j;
                    }
                }
            }
        }
        distance = distance.min(nd);
        if nd < threshold {
            violations.push((i, nn, nd));
        }
    }
    SeparationReport {
        distance,
        bulk_count: bulk.len(),
        threshold,
        violations,
    }
}

/// Number of points, with multiplicity, in the closed disk `D(a, r)`.
pub fn disk_count(config: &PointConfiguration, a: Point, r: f64) -> u64 {
    config
        .iter()
        .filter(|(p, _)| p.dist(a) <= r)
        .map(|(_, m)| m as u64)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CenterSampling {
    /// Square lattice of centers with the given spacing inside `D(center, radius)`.
    Grid {
        center: Point,
        radius: f64,
        spacing: f64,
    },
    Explicit(Vec<Point>),
}

impl CenterSampling {
    pub fn centers(&self) -> Vec<Point> {
        match self {
            CenterSampling::Explicit(v) => v.clone(),
            CenterSampling::Grid {
                center,
                radius,
                spacing,
            } => {
                if !(*radius >= 0.0) || !(*spacing > 0.0) {
                    return Vec::new();
                }
                let m = (radius / spacing).floor() as i64;
                let mut out = Vec::new();
                for j in -m..=m {
                    for i in -m..=m {
                        let p = Point::new(i as f64 * spacing, j as f64 * spacing);
                        if p.norm() <= *radius {
                            out.push(*center + p);
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncompressibilityRow {
    pub radius: f64,
    /// `max_a N(a, R)/(πR²)`.
    pub max_ratio: f64,
    pub argmax: Point,
    pub centers: usize,
}

/// Per radius, the largest local count ratio `N(a, R)/(πR²)` over sampled
/// centers. Centers that depend on `R` (bulk region shrinking with `R`) are
/// supplied through `sampling(R)`.
pub fn incompressibility_report(
    config: &PointConfiguration,
    radii: &[f64],
    sampling: impl Fn(f64) -> CenterSampling,
) -> Result<Vec<IncompressibilityRow>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return domain(format!("radius must be positive, got {r}"));
            }
            let centers = sampling(r).centers();
            let area = PI * r * r;
            let mut best = (f64::NEG_INFINITY, Point::ORIGIN);
            for &a in &centers {
                let ratio = disk_count(config, a, r) as f64 / area;
                if ratio > best.0 {
                    best = (ratio, a);
                }
            }
            Ok(IncompressibilityRow {
                radius: r,
                max_ratio: best.0,
                argmax: best.1,
                centers: centers.len(),
            })
        })
        .collect()
}

/// Bulk center sampling for a droplet of total charge `charge` at density 1:
/// centers within `D(0, R_drop − R)` with `R_drop = √(charge/π)`.
pub fn droplet_centers(charge: f64, spacing: f64) -> impl Fn(f64) -> CenterSampling {
    let r_drop = (charge / PI).sqrt();
    move |r| CenterSampling::Grid {
        center: Point::ORIGIN,
        radius: (r_drop - r).max(0.0),
        spacing,
    }
}

/// Container shape centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Container {
    Square { side: f64 },
    Disk { radius: f64 },
}

const WALL_GAP: f64 = 1e-9;

impl Container {
    /// Square of side `l`, or the disk of equal area.
    pub fn with_area_of_square(l: f64, disk: bool) -> Self {
        if disk {
            Container::Disk {
                radius: l / PI.sqrt(),
            }
        } else {
            Container::Square { side: l }
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Container::Square { side } => side * side,
            Container::Disk { radius } => PI * radius * radius,
        }
    }

    /// Distance to the wall, positive inside.
    pub fn inner_distance(&self, p: Point) -> f64 {
        match *self {
            Container::Square { side } => {
                let w = 0.5 * side;
                (w - p.x.abs()).min(w - p.y.abs())
            }
            Container::Disk { radius } => radius - p.norm(),
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Container::Square { side } => 0.5 * side,
            Container::Disk { radius } => radius,
        }
    }

    /// `∫_Ω C(x − y) dy`.
    pub fn potential(&self, x: Point) -> f64 {
        match *self {
            Container::Square { side } => {
                let w = 0.5 * side;
                -rectangle_log_integral(x, Point::new(-w, -w), Point::new(w, w))
            }
            Container::Disk { radius } => disk_potential_unchecked(Point::ORIGIN, radius, 1.0, x),
        }
    }

    pub fn potential_gradient(&self, x: Point) -> Point {
        match *self {
            Container::Square { side } => {
                let w = 0.5 * side;
                -rectangle_log_gradient(x, Point::new(-w, -w), Point::new(w, w))
            }
            Container::Disk { radius } => {
                let d = x.norm();
                if d == 0.0 {
                    Point::ORIGIN
                } else {
                    x * (disk_potential_radial_derivative(radius, 1.0, d) / d)
                }
            }
        }
    }

    /// `∬_{Ω×Ω} C(x − y) dx dy`.
    pub fn self_interaction(&self) -> f64 {
        match *self {
            Container::Square { side } => side.powi(4) * (-UNIT_SQUARE_MEAN_LOG - side.ln()),
            Container::Disk { radius } => PI * PI * radius.powi(4) * (0.25 - radius.ln()),
        }
    }

    fn project(&self, p: Point) -> Point {
        let gap = WALL_GAP * self.scale();
        match *self {
            Container::Square { side } => {
                let w = 0.5 * side - gap;
                Point::new(p.x.clamp(-w, w), p.y.clamp(-w, w))
            }
            Container::Disk { radius } => {
                let r = radius - gap;
                let d = p.norm();
                if d > r {
                    p * (r / d)
                } else {
                    p
                }
            }
        }
    }

    fn project_gradient(&self, p: Point, g: Point) -> Point {
        let band = 2.0 * WALL_GAP * self.scale();
        match *self {
            Container::Square { side } => {
                let w = 0.5 * side;
                let mut g = g;
                // descent direction −g points outward iff g·n < 0
                if w - p.x.abs() <= band && g.x * p.x.signum() < 0.0 {
                    g.x = 0.0;
                }
                if w - p.y.abs() <= band && g.y * p.y.signum() < 0.0 {
                    g.y = 0.0;
                }
                g
            }
            Container::Disk { radius } => {
                let d = p.norm();
                if radius - d <= band && d > 0.0 {
                    let n = p * (1.0 / d);
                    let gn = g.dot(n);
                    if gn < 0.0 {
                        return g - n * gn;
                    }
                }
                g
            }
        }
    }
}

/// Jellium in a hard-walled container with its exact uniform background:
/// `Σ_{i<j} C(x_i − x_j) − ρ Σ_j ∫_Ω C(x_j − y) dy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxJellium {
    pub container: Container,
    pub density: f64,
}

impl BoxJellium {
    /// Background self-energy `(ρ²/2) ∬ C`.
    pub fn background_self_energy(&self) -> f64 {
        0.5 * self.density * self.density * self.container.self_interaction()
    }
}

impl Objective for BoxJellium {
    fn energy(&self, x: &[Point]) -> Result<f64> {
        let mut e = 0.0;
        for (i, &p) in x.iter().enumerate() {
            e -= self.density * self.container.potential(p);
            for &q in &x[i + 1..] {
                let d = p.dist(q);
                if d < COINCIDENCE_THRESHOLD {
                    return Err(Error::InfiniteEnergy("coincident points".into()));
                }
                e -= d.ln();
            }
        }
        Ok(e)
    }

    fn gradient(&self, x: &[Point]) -> Result<Vec<Point>> {
        let mut g: Vec<Point> = x
            .iter()
            .map(|&p| self.container.potential_gradient(p) * -self.density)
            .collect();
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let d = x[i] - x[j];
                let r2 = d.norm2();
                if r2 < COINCIDENCE_THRESHOLD * COINCIDENCE_THRESHOLD {
                    return Err(Error::InfiniteEnergy("coincident points".into()));
                }
                let f = d * (1.0 / r2);
                g[i] -= f;
                g[j] += f;
            }
        }
        Ok(g)
    }

    fn start_radius(&self, _n: usize) -> f64 {
        0.98 * match self.container {
            Container::Square { side } => 0.5 * side,
            Container::Disk { radius } => radius,
        }
    }

    fn project(&self, x: &mut [Point]) {
        for p in x.iter_mut() {
            *p = self.container.project(*p);
        }
    }

    fn project_gradient(&self, x: &[Point], g: &mut [Point]) {
        for (p, gi) in x.iter().zip(g.iter_mut()) {
            *gi = self.container.project_gradient(*p, *gi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub side: f64,
    pub n: usize,
    pub min_energy: f64,
    pub self_energy: f64,
    /// `(min energy + background self-energy)/L²`.
    pub energy_per_area: f64,
    pub converged: bool,
}

/// Minimum jellium energy per unit area in boxes of side `L` (or the disk of
/// the same area when `disk` is set), for each `L` with `ρL²` an integer.
pub fn energy_per_volume_scan(
    density: f64,
    sides: &[f64],
    disk: bool,
    opts: &MinimizeOptions,
) -> Result<Vec<ScanPoint>> {
    if !(density > 0.0) {
        return domain(format!("density must be positive, got {density}"));
    }
    sides
        .iter()
        .map(|&l| {
            let nf = density * l * l;
            let n = nf.round();
            if !(l > 0.0) || (nf - n).abs() > 1e-9 * nf.max(1.0) || n < 1.0 {
                return domain(format!("ρL² = {nf} is not a positive integer for L = {l}"));
            }
            let obj = BoxJellium {
                container: Container::with_area_of_square(l, disk),
                density,
            };
            let m = minimize(&obj, n as usize, opts)?;
            let self_energy = obj.background_self_energy();
            Ok(ScanPoint {
                side: l,
                n: n as usize,
                min_energy: m.energy,
                self_energy,
                energy_per_area: (m.energy + self_energy) / (l * l),
                converged: m.converged,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn serial(seed: u64) -> MinimizeOptions {
        MinimizeOptions {
            seed,
            serial: true,
            record_trace: true,
            multistart: 4,
            ..Default::default()
        }
    }

    #[test]
    fn single_point_goes_to_origin() {
        let h = PlasmaHamiltonian::jellium(vec![]).unwrap();
        let m = minimize(&h, 1, &serial(3)).unwrap();
        assert!(m.converged);
        assert!(m.energy.abs() < 1e-15);
        assert!(m.config.points()[0].norm() < 1e-8);
    }

    #[test]
    fn pair_distance_matches_brute_force() {
        // 1D brute force of πr²/4 − log r (two points at ±r/2).
        let f = |r: f64| PI * r * r / 4.0 - r.ln();
        let (mut lo, mut hi) = (0.1, 3.0);
        for _ in 0..200 {
            let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
            if f(a) < f(b) {
                hi = b
            } else {
                lo = a
            }
        }
        let r_star = 0.5 * (lo + hi);
        assert!((r_star - (2.0 / PI).sqrt()).abs() < 1e-7);
        let h = PlasmaHamiltonian::jellium(vec![]).unwrap();
        let m = minimize(&h, 2, &serial(1)).unwrap();
        let p = m.config.points();
        assert!(m.converged);
        assert!((p[0].dist(p[1]) - r_star).abs() < 1e-7);
    }

    #[test]
    fn runs_are_monotone_and_converged() {
        let h =
            PlasmaHamiltonian::jellium(vec![
                crate::plasma::QuasiHole::at(Point::new(0.5, 0.2)).unwrap()
            ])
            .unwrap();
        let m = minimize(&h, 30, &serial(7)).unwrap();
        for run in &m.runs {
            assert!(run.trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(run.converged, "{run:?}");
            assert!(run.gradient_norm <= 1e-8 * run.energy.abs().max(1.0));
        }
        let g = h.gradient(m.config.points()).unwrap();
        assert!(norm(&g) <= 1e-8 * m.energy.abs().max(1.0));
    }

    #[test]
    fn serial_runs_are_bitwise_deterministic() {
        let h = PlasmaHamiltonian::jellium(vec![]).unwrap();
        let a = minimize(&h, 12, &serial(99)).unwrap();
        let b = minimize(&h, 12, &serial(99)).unwrap();
        assert_eq!(a, b);
        let mut par = serial(99);
        par.serial = false;
        assert_eq!(minimize(&h, 12, &par).unwrap().config, a.config);
    }

    fn square_lattice(m: usize) -> PointConfiguration {
        let pts = (0..m * m)
            .map(|k| Point::new((k % m) as f64 + 0.5, (k / m) as f64 + 0.5))
            .collect();
        PointConfiguration::new(pts).unwrap()
    }

    #[test]
    fn separation_examples() {
        assert!((SEPARATION_DELTA - 1.0 / PI.sqrt()).abs() < 1e-15);
        let lat = square_lattice(6);
        let rep = min_pair_distance(&lat, &DomainBoundary::None, 0.0, SEPARATION_DELTA);
        assert!((rep.distance - 1.0).abs() < 1e-15);
        assert!(rep.violations.is_empty());
        let mut pts = lat.points().to_vec();
        pts.push(Point::new(2.6, 2.5));
        let planted = PointConfiguration::new(pts).unwrap();
        let rep = min_pair_distance(&planted, &DomainBoundary::None, 0.0, SEPARATION_DELTA);
        assert_eq!(rep.violations.len(), 2);
        let pairs: std::collections::BTreeSet<(usize, usize)> = rep
            .violations
            .iter()
            .map(|&(i, j, _)| (i.min(j), i.max(j)))
            .collect();
        assert_eq!(pairs.len(), 1);
        let hull = min_pair_distance(&lat, &DomainBoundary::ConvexHull, SEPARATION_DELTA, 0.5);
        assert_eq!(hull.bulk_count, 16);
    }

    #[test]
    fn disk_counts() {
        let lat = square_lattice(40);
        assert_eq!(disk_count(&lat, Point::new(-5.0, -5.0), 1.0), 0);
        assert_eq!(disk_count(&lat, Point::ORIGIN, 1e3), 1600);
        let c = disk_count(&lat, Point::new(20.5, 20.5), 10.0) as f64 / (PI * 100.0);
        assert!((0.97..=1.03).contains(&c), "{c}");
        let rows = incompressibility_report(&lat, &[2.0, 5.0, 12.0], |_| CenterSampling::Grid {
            center: Point::new(20.0, 20.0),
            radius: 3.0,
            spacing: 0.25,
        })
        .unwrap();
        let dev: Vec<f64> = rows.iter().map(|r| (r.max_ratio - 1.0).abs()).collect();
        assert!(dev[2] < dev[0]);
        let m = PointConfiguration::with_multiplicities(vec![Point::ORIGIN], vec![3]).unwrap();
        assert_eq!(disk_count(&m, Point::ORIGIN, 0.0), 3);
    }

    #[test]
    fn container_closed_forms() {
        for c in [
            Container::Square { side: 1.7 },
            Container::Disk { radius: 0.9 },
        ] {
            // midpoint quadrature of ∬ C over the container
            let m = 120;
            let w = c.scale();
            let h = 2.0 * w / m as f64;
            let cells: Vec<Point> = (0..m * m)
                .map(|k| {
                    Point::new(
                        -w + ((k % m) as f64 + 0.5) * h,
                        -w + ((k / m) as f64 + 0.5) * h,
                    )
                })
                .filter(|&p| c.inner_distance(p) > 0.0)
                .collect();
            let pot: f64 = cells.iter().map(|&p| c.potential(p)).sum::<f64>() * h * h;
            let rel = (pot - c.self_interaction()).abs() / c.self_interaction().abs();
            assert!(rel < 5e-3, "{c:?}: {pot} vs {}", c.self_interaction());
            let p = Point::new(0.3, -0.2);
            let e = 1e-6;
            let fd = Point::new(
                (c.potential(p + Point::new(e, 0.0)) - c.potential(p - Point::new(e, 0.0)))
                    / (2.0 * e),
                (c.potential(p + Point::new(0.0, e)) - c.potential(p - Point::new(0.0, e)))
                    / (2.0 * e),
            );
            assert!((fd - c.potential_gradient(p)).norm() < 1e-7);
        }
    }

    #[test]
    fn box_minimizer_stays_inside_and_converges() {
        let obj = BoxJellium {
            container: Container::Square { side: 3.0 },
            density: 1.0,
        };
        let m = minimize(&obj, 9, &serial(5)).unwrap();
        assert!(m.converged, "{:?}", m.runs);
        assert!(m
            .config
            .points()
            .iter()
            .all(|&p| obj.container.inner_distance(p) > 0.0));
        for run in &m.runs {
            assert!(run.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn scan_rejects_non_integer_counts() {
        assert!(energy_per_volume_scan(1.0, &[2.5], false, &serial(0)).is_err());
        let ok = energy_per_volume_scan(1.0, &[2.0], false, &serial(0)).unwrap();
        assert_eq!(ok[0].n, 4);
    }
}
