//! Screening regions by partial balayage.
//!
//! For points `x_i` with multiplicities `m_i` the screening region `Σ` has
//! area `K = Σ m_i`, and the potential
//! `Φ = C ⋆ (Σ m_i δ_{x_i} − 1_Σ)` is positive on `Σ` and zero outside it.
//! On a grid this is the obstacle problem
//!
//! ```text
//! Φ ≥ 0,   q := −Δ_h Φ − 2π μ_h + 2π ≥ 0,   Φ·q = 0,   Φ = 0 on the box boundary
//! ```
//!
//! with `μ_h` the point charges smeared over radius `2h`, solved by projected
//! SOR from a nested coarse-to-fine initial guess.

mod edt;
pub(crate) mod lcp;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

pub use edt::squared_distance_to_complement;
pub use lcp::{PsorOptions, PsorReport, SweepOrder};

use crate::error::{domain, Error, Result};
use crate::fields::{
    deposit, neg_laplacian, rectangle_log_integral, Grid, ScalarField, SmearingProfile,
    UNIT_SQUARE_MEAN_LOG,
};
use crate::geometry::{Point, PointConfiguration};
use crate::spectral::convolve_offsets;

/// Smearing radius of the point charges, in cells.
pub const CHARGE_RADIUS_CELLS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalayageOptions {
    /// Grid spacing.
    pub h: f64,
    /// Extra margin added to the estimated support radius when sizing the box.
    pub padding: f64,
    pub psor: PsorOptions,
    /// Fill-fraction threshold of the indicator `σ`.
    pub theta: f64,
    pub max_enlargements: usize,
    /// Coarse-to-fine initialization down to about this many cells per side.
    pub coarsest_cells: usize,
}

impl Default for BalayageOptions {
    fn default() -> Self {
        BalayageOptions {
            h: 0.02,
            padding: 0.25,
            psor: PsorOptions::default(),
            theta: 0.5,
            max_enlargements: 3,
            coarsest_cells: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalayageSolution {
    /// Total potential `Φ`; non-negative.
    pub phi: ScalarField,
    /// Discrete fill fraction `μ_h + Δ_hΦ/(2π)`, clamped to `[0, 1]`.
    pub fill: ScalarField,
    /// Indicator of `Σ`: 1 where `fill ≥ θ`.
    pub sigma: ScalarField,
    /// `h²·Σσ`.
    pub area: f64,
    /// Relative complementarity residual of the final solve.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest `|center|` over cells with `σ = 1`.
    pub support_radius: f64,
    pub enlargements: usize,
    /// Cells holding smeared point charge.
    pub charge_cells: Vec<bool>,
    pub points: PointConfiguration,
}

impl BalayageSolution {
    pub fn grid(&self) -> &Grid {
        self.phi.grid()
    }

    pub fn total_charge(&self) -> f64 {
        self.points.total_charge() as f64
    }

    /// `σ = 1` at `p` (false outside the grid).
    pub fn contains(&self, p: Point) -> bool {
        self.grid()
            .cell_containing(p)
            .is_some_and(|(i, j)| self.sigma.get(i, j) == 1.0)
    }

    /// Cells with `σ = 1` that have a `σ = 0` neighbor.
    pub fn boundary_cell_count(&self) -> usize {
        let g = self.grid();
        let s = self.sigma.values();
        let mut count = 0;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if s[g.index(i, j)] != 1.0 {
                    continue;
                }
                let out = |a: isize, b: isize| {
                    a < 0
                        || b < 0
                        || a >= g.nx() as isize
                        || b >= g.ny() as isize
                        || s[g.index(a as usize, b as usize)] == 0.0
                };
                let (i, j) = (i as isize, j as isize);
                if out(i - 1, j) || out(i + 1, j) || out(i, j - 1) || out(i, j + 1) {
                    count += 1;
                }
            }
        }
        count
    }

    /// Squared distance (cell units) of each cell to the nearest `σ = 0` cell.
    pub fn interior_depth2(&self) -> Vec<f64> {
        let inside: Vec<bool> = self.sigma.values().iter().map(|&v| v == 1.0).collect();
        squared_distance_to_complement(&inside, self.grid().nx(), self.grid().ny())
    }

    /// `max|Φ|` outside `Σ` dilated by `cells` cells, relative to `max Φ`.
    pub fn exterior_ratio(&self, cells: usize) -> f64 {
        let g = self.grid();
        let (nx, ny) = (g.nx() as isize, g.ny() as isize);
        let s = self.sigma.values();
        let c = cells as isize;
        let mut dilated = vec![false; g.len()];
        for j in 0..ny {
            for i in 0..nx {
                if s[g.index(i as usize, j as usize)] != 1.0 {
                    continue;
                }
                for b in (j - c).max(0)..=(j + c).min(ny - 1) {
                    for a in (i - c).max(0)..=(i + c).min(nx - 1) {
                        dilated[g.index(a as usize, b as usize)] = true;
                    }
                }
            }
        }
        let phi = self.phi.values();
        let top = phi.iter().copied().fold(0.0, f64::max);
        let out = phi
            .iter()
            .zip(&dilated)
            .filter(|(_, &d)| !d)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max);
        if top > 0.0 {
            out / top
        } else {
            out
        }
    }

    /// Fraction of `σ = 1` cells more than one cell from the boundary with `Φ > 0`.
    pub fn interior_positive_fraction(&self) -> f64 {
        let depth2 = self.interior_depth2();
        let phi = self.phi.values();
        let (mut n, mut pos) = (0usize, 0usize);
        for (k, &d) in depth2.iter().enumerate() {
            if d > 1.0 {
                n += 1;
                if phi[k] > 0.0 {
                    pos += 1;
                }
            }
        }
        if n == 0 {
            1.0
        } else {
            pos as f64 / n as f64
        }
    }

    /// Centers of `σ = 1` cells.
    pub fn region_centers(&self) -> Vec<Point> {
        self.grid()
            .centers()
            .filter(|&(k, _)| self.sigma.values()[k] == 1.0)
            .map(|(_, p)| p)
            .collect()
    }

    /// Boundary of `Σ` as closed polylines, by marching squares on `σ` at cell centers.
    pub fn boundary_polylines(&self) -> Vec<Vec<Point>> {
        marching_squares(self.grid(), self.sigma.values())
    }

    /// CSV of boundary vertices: `path,x,y`.
    pub fn write_boundary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "path,x,y")?;
        for (k, line) in self.boundary_polylines().iter().enumerate() {
            for p in line {
                writeln!(w, "{k},{},{}", p.x, p.y)?;
            }
        }
        Ok(())
    }
}

fn smeared_charge(grid: &Grid, points: &PointConfiguration) -> Result<Vec<f64>> {
    let profile = SmearingProfile::tent(CHARGE_RADIUS_CELLS * grid.h())?;
    let mut mu = vec![0.0; grid.len()];
    for (idx, (p, m)) in points.iter().enumerate() {
        deposit(&mut mu, grid, &profile, p, m as f64).map_err(|e| match e {
            Error::BoundaryClipping { x, y, margin, .. } => Error::BoundaryClipping {
                index: idx,
                x,
                y,
                margin,
            },
            other => other,
        })?;
    }
    Ok(mu)
}

/// Square box grid centered at the origin with `n = n_c·2^levels` cells per side.
fn box_grid(half_width: f64, h: f64, coarsest: usize) -> Result<(Grid, usize)> {
    let n_min = (2.0 * half_width / h).ceil() as usize;
    let mut levels = 0;
    while (n_min >> (levels + 1)) >= coarsest.max(4) {
        levels += 1;
    }
    let nc = n_min.div_ceil(1 << levels).max(4);
    let n = nc << levels;
    let side = n as f64 * h;
    Ok((
        Grid::new(Point::new(-0.5 * side, -0.5 * side), h, n, n)?,
        levels,
    ))
}

/// Obstacle problem on a fixed box, initialized coarse-to-fine.
fn solve_on_box(
    points: &PointConfiguration,
    fine: &Grid,
    levels: usize,
    opts: &BalayageOptions,
) -> Result<(Vec<f64>, Vec<f64>, PsorReport)> {
    let mut u: Option<Vec<f64>> = None;
    let mut iterations = 0;
    for level in (0..=levels).rev() {
        let scale = (1usize << level) as f64;
        let grid = Grid::new(
            fine.origin(),
            fine.h() * scale,
            fine.nx() >> level,
            fine.ny() >> level,
        )?;
        let mu = smeared_charge(&grid, points)?;
        let f: Vec<f64> = mu.iter().map(|&m| 2.0 * PI * (m - 1.0)).collect();
        let problem = lcp::Problem {
            grid: &grid,
            f,
            ghost: vec![0.0; grid.len()],
        };
        let mut cur = match u.take() {
            Some(coarse) => lcp::prolong(&coarse, grid.nx() / 2, grid.ny() / 2),
            None => vec![0.0; grid.len()],
        };
        let rep = problem.solve(&mut cur, &opts.psor);
        iterations += rep.sweeps;
        if level == 0 {
            return Ok((
                cur,
                mu,
                PsorReport {
                    sweeps: iterations,
                    ..rep
                },
            ));
        }
        u = Some(cur);
    }
    unreachable!("level 0 always returns")
}

/// Unbalanced estimate of `M_R`: deviation on `|x| = R` of the point
/// potential from that of the total charge placed at the charge centroid.
fn estimate_m(points: &PointConfiguration, r: f64) -> f64 {
    let k = points.total_charge() as f64;
    let c = points
        .iter()
        .fold(Point::ORIGIN, |acc, (p, m)| acc + p * m as f64)
        * (1.0 / k);
    let mut worst: f64 = 0.0;
    for s in 0..256 {
        let x = Point::polar(r, 2.0 * PI * s as f64 / 256.0);
        let mut v = k * x.dist(c).ln();
        for (p, m) in points.iter() {
            v -= m as f64 * x.dist(p).ln();
        }
        if v.is_finite() {
            worst = worst.max(v.abs());
        }
    }
    worst / PI
}

/// Probe radius used for box sizing: just outside all points.
fn probe_radius(points: &PointConfiguration, h: f64) -> f64 {
    points.max_norm() + 4.0 * h + 1e-3
}

/// Computes the screening region of a finite point set.
pub fn partial_balayage(
    points: &PointConfiguration,
    opts: &BalayageOptions,
) -> Result<BalayageSolution> {
    if !(opts.h > 0.0) || !(opts.padding >= 0.0) {
        return domain("balayage needs h > 0 and padding ≥ 0");
    }
    if !(opts.psor.omega > 0.0 && opts.psor.omega < 2.0) {
        return domain(format!(
            "PSOR ω must lie in (0, 2), got {}",
            opts.psor.omega
        ));
    }
    if !(opts.theta > 0.0 && opts.theta < 1.0) {
        return domain(format!("θ must lie in (0, 1), got {}", opts.theta));
    }
    let k = points.total_charge() as f64;
    let r = probe_radius(points, opts.h);
    let c = points
        .iter()
        .fold(Point::ORIGIN, |acc, (p, m)| acc + p * m as f64)
        * (1.0 / k);
    let mut half =
        (r + estimate_m(points, r).sqrt()).max(c.norm() + (k / PI).sqrt()) + opts.padding;
    let mut enlargements = 0;
    loop {
        let (grid, levels) = box_grid(half, opts.h, opts.coarsest_cells)?;
        let (phi, mu, rep) = solve_on_box(points, &grid, levels, opts)?;
        let sol = assemble(points, grid, phi, mu, rep, enlargements, opts)?;
        let near_wall = sol.sigma.grid().centers().any(|(idx, p)| {
            (sol.sigma.values()[idx] == 1.0 || sol.phi.values()[idx] > 0.0)
                && grid.distance_to_boundary(p) < 2.0 * grid.h()
        });
        let bound_ok = !near_wall && support_bound(&sol, r).map(|b| b.holds).unwrap_or(false);
        if bound_ok {
            return Ok(sol);
        }
        if enlargements >= opts.max_enlargements {
            return Err(Error::GridTooSmall(format!(
                "screening region not contained after {enlargements} enlargements (half width {half})"
            )));
        }
        enlargements += 1;
        half *= 1.5;
    }
}

fn assemble(
    points: &PointConfiguration,
    grid: Grid,
    phi: Vec<f64>,
    mu: Vec<f64>,
    rep: PsorReport,
    enlargements: usize,
    opts: &BalayageOptions,
) -> Result<BalayageSolution> {
    let lap = neg_laplacian(&grid, &phi, |_| 0.0);
    let fill: Vec<f64> = mu
        .iter()
        .zip(&lap)
        .map(|(&m, &l)| (m - l / (2.0 * PI)).clamp(0.0, 1.0))
        .collect();
    let sigma: Vec<f64> = fill
        .iter()
        .map(|&f| if f >= opts.theta { 1.0 } else { 0.0 })
        .collect();
    let area = sigma.iter().sum::<f64>() * grid.cell_area();
    let support_radius = grid
        .centers()
        .filter(|&(k, _)| sigma[k] == 1.0)
        .map(|(_, p)| p.norm())
        .fold(0.0, f64::max);
    let charge_cells = mu.iter().map(|&m| m > 0.0).collect();
    let phi: Vec<f64> = phi.into_iter().map(|v| v.max(0.0)).collect();
    Ok(BalayageSolution {
        phi: ScalarField::new(grid, phi)?,
        fill: ScalarField::new(grid, fill)?,
        sigma: ScalarField::new(grid, sigma)?,
        area,
        residual: rep.residual,
        iterations: rep.sweeps,
        converged: rep.converged,
        support_radius,
        enlargements,
        charge_cells,
        points: points.clone(),
    })
}

/// Hausdorff distance between the cell-center sets of two regions.
pub fn hausdorff_distance(a: &BalayageSolution, b: &BalayageSolution) -> f64 {
    let (pa, pb) = (a.region_centers(), b.region_centers());
    if pa.is_empty() || pb.is_empty() {
        return if pa.is_empty() && pb.is_empty() {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let one_way = |x: &[Point], y: &[Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(&pa, &pb).max(one_way(&pb, &pa))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportBound {
    pub probe_radius: f64,
    /// `(1/π)·max_{|x| = R} |Φ(x)|`.
    pub m_r: f64,
    /// `R + √M_R`.
    pub bound: f64,
    pub measured_radius: f64,
    /// `measured_radius ≤ bound + h`.
    pub holds: bool,
}

pub const SUPPORT_BOUND_NODES: usize = 512;

/// Samples `|Φ|` on the circle `|x| = R` and checks the support bound.
pub fn support_bound(sol: &BalayageSolution, r: f64) -> Result<SupportBound> {
    if !(r > sol.points.max_norm()) {
        return domain(format!(
            "probe radius {r} must exceed max|x_i| = {}",
            sol.points.max_norm()
        ));
    }
    let g = sol.grid();
    let mut worst: f64 = 0.0;
    for s in 0..SUPPORT_BOUND_NODES {
        let x = Point::polar(r, 2.0 * PI * s as f64 / SUPPORT_BOUND_NODES as f64);
        let v = g.interpolate(sol.phi.values(), x).ok_or_else(|| {
            Error::GridTooSmall(format!("probe circle of radius {r} leaves the grid"))
        })?;
        worst = worst.max(v.abs());
    }
    let m_r = worst / PI;
    let bound = r + m_r.sqrt();
    Ok(SupportBound {
        probe_radius: r,
        m_r,
        bound,
        measured_radius: sol.support_radius,
        holds: sol.support_radius <= bound + g.h(),
    })
}

/// Incompressible Thomas–Fermi energy
/// `Σ_i m_i ∫ log|x − x_i| σ(x) dx − ½ ∬ σ(x) log|x − y| σ(y) dx dy`
/// with `σ` constant on cells.
pub fn tf_energy(sigma: &ScalarField, points: &PointConfiguration) -> Result<f64> {
    let g = sigma.grid();
    let v = sigma.values();
    if let Some(k) = v.iter().position(|&s| !(-1e-12..=1.0 + 1e-12).contains(&s)) {
        return domain(format!("σ = {} at cell {k} is outside [0, 1]", v[k]));
    }
    let h = g.h();
    let half = Point::new(0.5 * h, 0.5 * h);
    let mut linear = 0.0;
    for (k, c) in g.centers() {
        if v[k] == 0.0 {
            continue;
        }
        let mut s = 0.0;
        for (p, m) in points.iter() {
            s += m as f64 * rectangle_log_integral(p, c - half, c + half);
        }
        linear += v[k] * s;
    }
    let self_cell = h.powi(4) * (UNIT_SQUARE_MEAN_LOG + h.ln());
    let conv = convolve_offsets(v, g.nx(), g.ny(), |di, dj| {
        if di == 0 && dj == 0 {
            self_cell
        } else {
            let d = Point::new(di as f64 * h, dj as f64 * h);
            h * h * rectangle_log_integral(d, -half, half)
        }
    });
    let quadratic: f64 = v.iter().zip(&conv).map(|(a, b)| a * b).sum();
    Ok(linear - 0.5 * quadratic)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionReport {
    /// Indices (into the full configuration) of points inside the subset's region.
    pub violations: Vec<usize>,
    pub subset_area: f64,
    pub converged: bool,
}

/// Points outside `subset` lying in the subset's screening region, farther
/// than one cell from its boundary.
pub fn exclusion_check(
    config: &PointConfiguration,
    subset: &[usize],
    opts: &BalayageOptions,
) -> Result<ExclusionReport> {
    if subset.is_empty() {
        return domain("exclusion check needs a non-empty subset");
    }
    let mut in_subset = vec![false; config.len()];
    for &i in subset {
        if i >= config.len() {
            return domain(format!("subset index {i} out of range"));
        }
        in_subset[i] = true;
    }
    if in_subset.iter().all(|&b| b) {
        return Ok(ExclusionReport {
            violations: Vec::new(),
            subset_area: config.total_charge() as f64,
            converged: true,
        });
    }
    let sol = partial_balayage(&config.subset(subset)?, opts)?;
    let depth2 = sol.interior_depth2();
    let g = sol.grid();
    let mut violations = Vec::new();
    for (idx, &p) in config.points().iter().enumerate() {
        if in_subset[idx] {
            continue;
        }
        if let Some((i, j)) = g.cell_containing(p) {
            let k = g.index(i, j);
            // distance from the cell center to the nearest σ = 0 center, in cells
            if sol.sigma.values()[k] == 1.0 && depth2[k] > 1.0 {
                violations.push(idx);
            }
        }
    }
    Ok(ExclusionReport {
        violations,
        subset_area: sol.area,
        converged: sol.converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Accepted disks `(center, radius)` in order of acceptance.
    pub disks: Vec<(Point, f64)>,
    /// Disks of radius at least `2h`.
    pub significant: usize,
    /// Fraction of `σ = 1` cells not covered by any accepted disk.
    pub uncovered_fraction: f64,
}

/// Greedy cover of `Σ` by maximal inscribed disks centered at `σ = 1` cells
/// in `D(0, R)`, largest first; a candidate is skipped when its center is
/// already covered. Only disks of radius at least `2h` are used.
pub fn union_of_disks_diagnostic(sol: &BalayageSolution, r: f64) -> CoverageReport {
    let g = sol.grid();
    let h = g.h();
    let depth2 = sol.interior_depth2();
    let s = sol.sigma.values();
    let mut cands: Vec<(f64, usize, Point)> = g
        .centers()
        .filter(|&(k, p)| s[k] == 1.0 && p.norm() <= r)
        .map(|(k, p)| (depth2[k].sqrt() * h, k, p))
        .filter(|&(rad, _, _)| rad >= 2.0 * h)
        .collect();
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut disks: Vec<(Point, f64)> = Vec::new();
    for &(rad, _, p) in &cands {
        if disks.iter().any(|&(c, rc)| p.dist(c) < rc) {
            continue;
        }
        disks.push((p, rad));
    }
    let mut total = 0usize;
    let mut uncovered = 0usize;
    for (k, p) in g.centers() {
        if s[k] != 1.0 {
            continue;
        }
        total += 1;
        if !disks.iter().any(|&(c, rc)| p.dist(c) < rc) {
            uncovered += 1;
        }
    }
    CoverageReport {
        significant: disks.iter().filter(|d| d.1 >= 2.0 * h).count(),
        disks,
        uncovered_fraction: if total == 0 {
            0.0
        } else {
            uncovered as f64 / total as f64
        },
    }
}

fn marching_squares(grid: &Grid, s: &[f64]) -> Vec<Vec<Point>> {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let val = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && i < nx && j < ny && s[grid.index(i as usize, j as usize)] == 1.0
    };
    // Edge midpoints keyed in half-cell integer coordinates (2i+1 etc.).
    type Key = (isize, isize);
    let mut segs: Vec<(Key, Key)> = Vec::new();
    for j in -1..ny {
        for i in -1..nx {
            let (a, b, c, d) = (val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1));
            let code = (a as u8) | (b as u8) << 1 | (c as u8) << 2 | (d as u8) << 3;
            let bottom = (2 * i + 1, 2 * j);
            let right = (2 * i + 2, 2 * j + 1);
            let top = (2 * i + 1, 2 * j + 2);
            let left = (2 * i, 2 * j + 1);
            let cell: &[(Key, Key)] = match code {
                0 | 15 => &[],
                1 | 14 => &[(left, bottom)],
                2 | 13 => &[(bottom, right)],
                3 | 12 => &[(left, right)],
                4 | 11 => &[(right, top)],
                6 | 9 => &[(bottom, top)],
                7 | 8 => &[(left, top)],
                5 => &[(left, top), (bottom, right)],
                10 => &[(left, bottom), (right, top)],
                _ => unreachable!(),
            };
            segs.extend_from_slice(cell);
        }
    }
    let mut adj: HashMap<Key, Vec<usize>> = HashMap::new();
    for (k, &(p, q)) in segs.iter().enumerate() {
        adj.entry(p).or_default().push(k);
        adj.entry(q).or_default().push(k);
    }
    let to_point = |key: Key| {
        let o = grid.origin();
        let h = grid.h();
        // key/2 is the position in cell-center units (center of cell i is i + 1/2)
        Point::new(
            o.x + (key.0 as f64 / 2.0 + 0.5) * h,
            o.y + (key.1 as f64 / 2.0 + 0.5) * h,
        )
    };
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first, mut cur) = segs[start];
        let mut line = vec![to_point(first), to_point(cur)];
        loop {
            let next = adj[&cur].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            cur = if segs[k].0 == cur {
                segs[k].1
            } else {
                segs[k].0
            };
            line.push(to_point(cur));
        }
        lines.push(line);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(h: f64) -> BalayageOptions {
        BalayageOptions {
            h,
            ..Default::default()
        }
    }

    fn one(p: Point, m: u32) -> PointConfiguration {
        PointConfiguration::with_multiplicities(vec![p], vec![m]).unwrap()
    }

    #[test]
    fn single_point_disk() {
        let sol = partial_balayage(&one(Point::new(0.1, -0.05), 1), &opts(0.02)).unwrap();
        assert!(sol.converged);
        assert!((sol.area - 1.0).abs() < 0.01, "area {}", sol.area);
        let r = 1.0 / PI.sqrt();
        for (k, p) in sol.grid().centers() {
            let d = p.dist(Point::new(0.1, -0.05));
            if d < r - 0.03 {
                assert_eq!(sol.sigma.values()[k], 1.0);
            }
            if d > r + 0.03 {
                assert_eq!(sol.sigma.values()[k], 0.0);
                assert!(sol.phi.values()[k] < 1e-6);
            }
        }
    }

    #[test]
    fn double_point_has_area_two() {
        let sol = partial_balayage(&one(Point::ORIGIN, 2), &opts(0.02)).unwrap();
        assert!((sol.area - 2.0).abs() < 0.02, "area {}", sol.area);
        let r_eq = (sol.area / PI).sqrt();
        assert!((r_eq - (2.0 / PI).sqrt()).abs() < 0.01);
    }

    #[test]
    fn separated_points_give_disjoint_disks() {
        let pts =
            PointConfiguration::new(vec![Point::new(-0.7, 0.0), Point::new(0.7, 0.0)]).unwrap();
        let sol = partial_balayage(&pts, &opts(0.02)).unwrap();
        assert!((sol.area - 2.0).abs() < 0.02);
        assert!(!sol.contains(Point::ORIGIN));
        let cover = union_of_disks_diagnostic(&sol, 1.0);
        assert_eq!(cover.significant, 2);
        assert_eq!(sol.boundary_polylines().len(), 2);
    }

    #[test]
    fn support_bound_single_point() {
        let sol = partial_balayage(&one(Point::ORIGIN, 1), &opts(0.02)).unwrap();
        let b = support_bound(&sol, 0.7).unwrap();
        assert!(b.m_r >= 0.0 && b.m_r < 1e-6);
        assert!((b.bound - 0.7).abs() < 1e-3);
        assert!(b.holds);
        assert!(support_bound(&sol, 100.0).is_err());
    }

    #[test]
    fn tf_energy_prefers_disk_and_rejects_bad_sigma() {
        let pts = one(Point::ORIGIN, 1);
        let sol = partial_balayage(&pts, &opts(0.02)).unwrap();
        let g = *sol.grid();
        let e_sol = tf_energy(&sol.sigma, &pts).unwrap();
        let n_cells = sol.sigma.values().iter().filter(|&&v| v == 1.0).count();
        let side = (n_cells as f64).sqrt().round() as isize;
        let square = ScalarField::from_fn(g, |p| {
            let a = 0.5 * side as f64 * g.h();
            if p.x.abs() < a && p.y.abs() < a {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert!(e_sol < tf_energy(&square, &pts).unwrap());
        let bad = ScalarField::from_fn(g, |_| 1.5).unwrap();
        assert!(tf_energy(&bad, &pts).is_err());
    }

    #[test]
    fn tf_energy_of_disk_matches_closed_form() {
        // K = 1 at the origin, σ = 1_{D(0,a)} with πa² = 1:
        // ∫ log|x| σ = π a²(log a − 1/2), ½∬σ log σ = −½ π² a⁴ (1/4 − log a).
        let a = 1.0 / PI.sqrt();
        let exact = PI * a * a * (a.ln() - 0.5) + 0.5 * PI * PI * a.powi(4) * (0.25 - a.ln());
        let g = Grid::square(Point::ORIGIN, 0.7, 0.005).unwrap();
        let sigma = ScalarField::from_fn(g, |p| if p.norm() < a { 1.0 } else { 0.0 }).unwrap();
        let e = tf_energy(&sigma, &one(Point::ORIGIN, 1)).unwrap();
        assert!((e - exact).abs() < 5e-3, "{e} vs {exact}");
    }

    #[test]
    fn exclusion_examples() {
        let cfg = PointConfiguration::new(vec![
            Point::ORIGIN,
            Point::new(0.3, 0.0),
            Point::new(3.0, 0.0),
        ])
        .unwrap();
        let rep = exclusion_check(&cfg, &[0], &opts(0.02)).unwrap();
        assert_eq!(rep.violations, vec![1]);
        assert!(exclusion_check(&cfg, &[0, 1, 2], &opts(0.02))
            .unwrap()
            .violations
            .is_empty());
        assert!(exclusion_check(&cfg, &[], &opts(0.02)).is_err());
    }

    #[test]
    fn nested_regions_are_monotone() {
        let pts = vec![
            Point::new(0.2, 0.1),
            Point::new(-0.4, 0.3),
            Point::new(0.1, -0.6),
        ];
        let small = partial_balayage(
            &PointConfiguration::new(pts[..2].to_vec()).unwrap(),
            &opts(0.02),
        )
        .unwrap();
        let big = partial_balayage(&PointConfiguration::new(pts).unwrap(), &opts(0.02)).unwrap();
        let depth2 = small.interior_depth2();
        for (k, p) in small.grid().centers() {
            if small.sigma.values()[k] == 1.0 && depth2[k] > 1.0 {
                assert!(big.contains(p));
            }
        }
    }

    #[test]
    fn exterior_vanishes_and_interior_is_positive() {
        let pts = PointConfiguration::new(vec![
            Point::new(0.3, 0.2),
            Point::new(-0.5, 0.1),
            Point::new(0.0, -0.7),
            Point::new(0.9, -0.4),
        ])
        .unwrap();
        let sol = partial_balayage(&pts, &opts(0.02)).unwrap();
        assert!(sol.exterior_ratio(2) <= 1e-3, "{}", sol.exterior_ratio(2));
        assert!(sol.interior_positive_fraction() >= 0.99);
        assert!(sol.phi.values().iter().all(|&v| v >= -1e-10));
        let cover = union_of_disks_diagnostic(&sol, 2.0);
        assert!(
            cover.uncovered_fraction < 0.05,
            "{}",
            cover.uncovered_fraction
        );
    }

    #[test]
    fn refinement_moves_region_by_little() {
        let pts = one(Point::new(0.05, 0.0), 1);
        let coarse = partial_balayage(&pts, &opts(0.04)).unwrap();
        let fine = partial_balayage(&pts, &opts(0.02)).unwrap();
        assert!(hausdorff_distance(&coarse, &fine) <= 4.0 * 0.04);
    }

    #[test]
    fn sweep_orders_give_same_energy_and_solution_beats_dent() {
        let pts =
            PointConfiguration::new(vec![Point::new(0.2, 0.0), Point::new(-0.3, 0.4)]).unwrap();
        let mut o = opts(0.02);
        let a = partial_balayage(&pts, &o).unwrap();
        o.psor.order = SweepOrder::Lexicographic;
        let b = partial_balayage(&pts, &o).unwrap();
        let (ea, eb) = (
            tf_energy(&a.sigma, &pts).unwrap(),
            tf_energy(&b.sigma, &pts).unwrap(),
        );
        assert!((ea - eb).abs() <= 1e-6 * ea.abs(), "{ea} {eb}");
        // move one boundary cell outward by two cells: same area, new shape
        let g = *a.grid();
        let v = a.sigma.values();
        let (i, j) = (0..g.ny())
            .flat_map(|j| (0..g.nx()).map(move |i| (i, j)))
            .find(|&(i, j)| v[g.index(i, j)] == 1.0)
            .unwrap();
        let mut dented = v.to_vec();
        dented[g.index(i, j)] = 0.0;
        dented[g.index(i, j - 2)] = 1.0;
        let dented = ScalarField::new(g, dented).unwrap();
        assert!(ea < tf_energy(&dented, &pts).unwrap());
    }

    #[test]
    fn boundary_csv_lists_vertices() {
        let sol = partial_balayage(&one(Point::ORIGIN, 1), &opts(0.04)).unwrap();
        let mut buf = Vec::new();
        sol.write_boundary_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path,x,y\n"));
        for line in text.lines().skip(1) {
            let v: Vec<f64> = line
                .split(',')
                .skip(1)
                .map(|t| t.parse().unwrap())
                .collect();
            let r = v[0].hypot(v[1]);
            assert!((r - 1.0 / PI.sqrt()).abs() < 0.06, "{r}");
        }
    }
}
