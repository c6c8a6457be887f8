//! Continuum minimizers: the bathtub problem, the constrained flocking
//! functional and the log-gas equilibrium measure.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::fields::{neg_laplacian, rectangle_log_integral, Grid, ScalarField};
use crate::geometry::Point;
use crate::screening::lcp::{ghost_sums, Problem};
use crate::screening::PsorOptions;
use crate::spectral::convolve_offsets;

fn check_feasible(grid: &Grid, rho_max: f64, mass: f64) -> Result<()> {
    if !(rho_max > 0.0) || !(mass >= 0.0) {
        return domain(format!(
            "need ρ_max > 0 and mass ≥ 0, got {rho_max} and {mass}"
        ));
    }
    let cap = rho_max * grid.cell_area() * grid.len() as f64;
    if mass > cap * (1.0 + 1e-12) {
        return Err(Error::Infeasible(format!(
            "mass {mass} exceeds ρ_max × grid area = {cap}"
        )));
    }
    Ok(())
}

/// Fills the lowest levels of `v` to `ρ_max` until the mass is reached; the
/// last level set, if only partly needed, is filled uniformly.
pub fn bathtub_solve(v: &ScalarField, rho_max: f64, mass: f64) -> Result<ScalarField> {
    let grid = *v.grid();
    check_feasible(&grid, rho_max, mass)?;
    if v.values().iter().any(|x| !x.is_finite()) {
        return domain("potential has non-finite samples");
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| v.values()[a].total_cmp(&v.values()[b]).then(a.cmp(&b)));
    let cell = grid.cell_area();
    let mut rho = vec![0.0; grid.len()];
    let mut left = mass / cell;
    let mut k = 0;
    while k < order.len() && left > 0.0 {
        let level = v.values()[order[k]];
        let mut end = k;
        while end < order.len() && v.values()[order[end]] == level {
            end += 1;
        }
        let tie = (end - k) as f64;
        let fill = (left / tie).min(rho_max);
        for &c in &order[k..end] {
            rho[c] = fill;
        }
        left -= fill * tie;
        k = end;
    }
    ScalarField::new(grid, rho)
}

/// Euclidean projection onto `{0 ≤ ρ ≤ ρ_max, h²Σρ = mass}`:
/// `clamp(y − s, 0, ρ_max)` with `s` found by bisection.
pub fn project_capped(y: &[f64], cell_area: f64, rho_max: f64, mass: f64) -> Vec<f64> {
    let target = mass / cell_area;
    let total = |s: f64| y.iter().map(|&x| (x - s).clamp(0.0, rho_max)).sum::<f64>();
    let lo0 = y.iter().copied().fold(f64::INFINITY, f64::min) - rho_max;
    let hi0 = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = if (total(lo) - target).abs() <= (total(hi) - target).abs() {
        lo
    } else {
        hi
    };
    y.iter().map(|&x| (x - s).clamp(0.0, rho_max)).collect()
}

/// Radial pair interaction `w(|x − y|)`.
pub struct Interaction {
    kernel: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    positive_type: bool,
    name: String,
}

impl std::fmt::Debug for Interaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Interaction")
            .field("name", &self.name)
            .field("positive_type", &self.positive_type)
            .finish()
    }
}

impl Interaction {
    /// `amplitude·exp(−r²/(2·width²))`; of positive type for `amplitude > 0`.
    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !amplitude.is_finite() {
            return domain("gaussian interaction needs width > 0 and finite amplitude");
        }
        Ok(Interaction {
            kernel: Box::new(move |r| amplitude * (-r * r / (2.0 * width * width)).exp()),
            positive_type: amplitude > 0.0,
            name: format!("gaussian(amplitude={amplitude}, width={width})"),
        })
    }

    pub fn radial(
        name: impl Into<String>,
        kernel: impl Fn(f64) -> f64 + Send + Sync + 'static,
        positive_type: bool,
    ) -> Self {
        Interaction {
            kernel: Box::new(kernel),
            positive_type,
            name: name.into(),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.kernel)(r)
    }

    pub fn positive_type(&self) -> bool {
        self.positive_type
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Debug)]
pub struct FlockingProblem {
    pub v: ScalarField,
    pub w: Interaction,
    pub lambda: f64,
    pub rho_max: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlockingOptions {
    pub max_iterations: usize,
    /// Stop when `max|ρ − P(ρ − ∇E)|/ρ_max` falls below this.
    pub tolerance: f64,
    pub armijo: f64,
}

impl Default for FlockingOptions {
    fn default() -> Self {
        FlockingOptions {
            max_iterations: 20_000,
            tolerance: 1e-6,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlockingSolution {
    pub density: ScalarField,
    pub energy: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after each accepted step, starting from the warm start.
    pub energy_trace: Vec<f64>,
}

/// Cells with `ρ > 0` whose four neighbors all have `ρ > 0`.
fn interior_support(grid: &Grid, rho: &[f64]) -> Vec<bool> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = vec![false; rho.len()];
    for j in 1..ny.saturating_sub(1) {
        for i in 1..nx.saturating_sub(1) {
            let k = grid.index(i, j);
            out[k] = rho[k] > 0.0
                && rho[k - 1] > 0.0
                && rho[k + 1] > 0.0
                && rho[k - nx] > 0.0
                && rho[k + nx] > 0.0;
        }
    }
    out
}

impl FlockingSolution {
    /// `h²·#{ρ > 0}`.
    pub fn support_area(&self) -> f64 {
        let g = self.density.grid();
        self.density.values().iter().filter(|&&r| r > 0.0).count() as f64 * g.cell_area()
    }

    /// Fraction of support cells away from the interface with `ρ ≥ 0.99·ρ_max`.
    pub fn saturation_fraction(&self, rho_max: f64) -> f64 {
        let rho = self.density.values();
        let inner = interior_support(self.density.grid(), rho);
        let n = inner.iter().filter(|&&b| b).count();
        if n == 0 {
            return 0.0;
        }
        let sat = inner
            .iter()
            .zip(rho)
            .filter(|&(&b, &r)| b && r >= 0.99 * rho_max)
            .count();
        sat as f64 / n as f64
    }
}

impl FlockingProblem {
    fn validate(&self) -> Result<()> {
        check_feasible(self.v.grid(), self.rho_max, self.mass)?;
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return domain(format!(
                "coupling λ must be finite and ≥ 0, got {}",
                self.lambda
            ));
        }
        let g = self.v.grid();
        let reach = g.h() * (g.nx().max(g.ny()) as f64) * std::f64::consts::SQRT_2;
        for s in 0..=64 {
            let r = reach * s as f64 / 64.0;
            if !self.w.eval(r).is_finite() {
                return domain(format!(
                    "interaction {} is singular at r = {r}",
                    self.w.name()
                ));
            }
        }
        Ok(())
    }

    /// `h²Σ w(x_k − x_m) ρ_m` at every cell.
    fn interaction_potential(&self, rho: &[f64]) -> Vec<f64> {
        let g = self.v.grid();
        let h = g.h();
        let conv = convolve_offsets(rho, g.nx(), g.ny(), |di, dj| {
            self.w.eval(h * ((di * di + dj * dj) as f64).sqrt())
        });
        conv.into_iter().map(|c| c * g.cell_area()).collect()
    }

    /// `h²Σ vρ + (λ/2) h²Σ ρ·(w ⋆ ρ)` and the gradient per unit area.
    pub fn energy_and_gradient(&self, rho: &[f64]) -> (f64, Vec<f64>) {
        let cell = self.v.grid().cell_area();
        let v = self.v.values();
        if self.lambda == 0.0 {
            let e = v.iter().zip(rho).map(|(a, b)| a * b).sum::<f64>() * cell;
            return (e, v.to_vec());
        }
        let wr = self.interaction_potential(rho);
        let mut e = 0.0;
        let mut grad = Vec::with_capacity(rho.len());
        for k in 0..rho.len() {
            e += rho[k] * (v[k] + 0.5 * self.lambda * wr[k]);
            grad.push(v[k] + self.lambda * wr[k]);
        }
        (e * cell, grad)
    }

    pub fn energy(&self, rho: &[f64]) -> f64 {
        self.energy_and_gradient(rho).0
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        project_capped(y, self.v.grid().cell_area(), self.rho_max, self.mass)
    }

    fn kkt(&self, rho: &[f64], grad: &[f64]) -> f64 {
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1.0);
        // unit step measured against the gradient scale
        let step = self.rho_max / scale;
        let y: Vec<f64> = rho.iter().zip(grad).map(|(r, g)| r - step * g).collect();
        let p = self.project(&y);
        p.iter()
            .zip(rho)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / self.rho_max
    }
}

/// Projected gradient with backtracking from the bathtub solution.
pub fn flocking_solve(
    problem: &FlockingProblem,
    opts: &FlockingOptions,
) -> Result<FlockingSolution> {
    problem.validate()?;
    let grid = *problem.v.grid();
    let mut rho = bathtub_solve(&problem.v, problem.rho_max, problem.mass)?.into_values();
    let (mut e, mut grad) = problem.energy_and_gradient(&rho);
    let mut trace = vec![e];
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1.0);
    let mut alpha = problem.rho_max / scale;
    let mut kkt = problem.kkt(&rho, &grad);
    let mut it = 0;
    while kkt > opts.tolerance && it < opts.max_iterations {
        it += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let y: Vec<f64> = rho.iter().zip(&grad).map(|(r, g)| r - alpha * g).collect();
            let trial = problem.project(&y);
            let decrease: f64 = trial
                .iter()
                .zip(&rho)
                .zip(&grad)
                .map(|((t, r), g)| g * (t - r))
                .sum::<f64>()
                * grid.cell_area();
            let (et, gt) = problem.energy_and_gradient(&trial);
            if et <= e + opts.armijo * decrease {
                rho = trial;
                e = et;
                grad = gt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(e);
        alpha *= 2.0;
        kkt = problem.kkt(&rho, &grad);
    }
    Ok(FlockingSolution {
        density: ScalarField::new(grid, rho)?,
        energy: e,
        kkt_residual: kkt,
        iterations: it,
        converged: kkt <= opts.tolerance,
        energy_trace: trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    pub psor: PsorOptions,
    /// Relative mass tolerance of the outer search on the Lagrange constant.
    pub mass_tolerance: f64,
    pub max_outer: usize,
    /// Boundary data are refreshed until they move by less than this.
    pub boundary_tolerance: f64,
    pub max_boundary_updates: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            psor: PsorOptions {
                tolerance: 1e-9,
                ..PsorOptions::default()
            },
            mass_tolerance: 1e-6,
            max_outer: 80,
            boundary_tolerance: 1e-5,
            max_boundary_updates: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub density: ScalarField,
    /// Lagrange constant `F`: `v + C⋆ρ = F` on the support.
    pub constant: f64,
    pub mass: f64,
    pub support_area: f64,
    pub residual: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Potential `C ⋆ ρ` at ghost centers just outside the grid.
fn log_potential(grid: &Grid, rho: &[f64], x: Point) -> f64 {
    let half = Point::new(0.5 * grid.h(), 0.5 * grid.h());
    grid.centers()
        .filter(|&(k, _)| rho[k] > 0.0)
        .map(|(k, c)| -rho[k] * rectangle_log_integral(x, c - half, c + half))
        .sum()
}

fn ghost_points(grid: &Grid) -> Vec<Point> {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let mut out = Vec::new();
    for i in 0..nx {
        out.push(grid.cell_center_signed(i, -1));
        out.push(grid.cell_center_signed(i, ny));
    }
    for j in 0..ny {
        out.push(grid.cell_center_signed(-1, j));
        out.push(grid.cell_center_signed(nx, j));
    }
    out
}

fn key(p: Point) -> (i64, i64) {
    ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64)
}

/// Log-gas equilibrium measure of unit mass in the external potential `v`.
///
/// With `u = v + C⋆ρ − F ≥ 0`, `ρ = (−Δu + Δv)/(2π)` and `u·ρ = 0`, this is
/// the obstacle problem `u ≥ 0, −Δ_h u − Δ_h v ≥ 0` with Dirichlet data
/// `u = v + C⋆ρ − F` outside the grid. `F` is tuned until the mass is 1 and
/// the boundary data are refreshed from the current `ρ`.
pub fn meanfield_equilibrium(
    v: &(dyn Fn(Point) -> f64 + Sync),
    grid: Grid,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumSolution> {
    let vv: Vec<f64> = grid.centers().map(|(_, p)| v(p)).collect();
    if vv.iter().any(|x| !x.is_finite()) {
        return domain("potential has non-finite samples on the grid");
    }
    let ghosts = ghost_points(&grid);
    let vmin = vv.iter().copied().fold(f64::INFINITY, f64::min);
    let vb_min = ghosts.iter().map(|&p| v(p)).fold(f64::INFINITY, f64::min);
    if !(vb_min > vmin) {
        return Err(Error::NonConfining(format!(
            "min v on the boundary ({vb_min}) does not exceed min v inside ({vmin})"
        )));
    }
    // q = −Δu − f = 2πρ needs f = −Δv
    let f: Vec<f64> = neg_laplacian(&grid, &vv, v);
    let cell = grid.cell_area();

    // initial boundary potential: unit charge at the minimizer of v
    let kmin = vv
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|x| x.0)
        .unwrap_or(0);
    let c0 = grid.cell_center(grid.coords(kmin).0, grid.coords(kmin).1);
    let mut phi_b: std::collections::HashMap<(i64, i64), f64> =
        ghosts.iter().map(|&p| (key(p), -p.dist(c0).ln())).collect();

    let mut u = vec![0.0; grid.len()];
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    let mut rho = vec![0.0; grid.len()];
    let mut mass = 0.0;

    let solve = |fconst: f64,
                 phi_b: &std::collections::HashMap<(i64, i64), f64>,
                 u: &mut Vec<f64>|
     -> (Vec<f64>, f64, f64, usize) {
        let ghost = ghost_sums(&grid, |p| {
            v(p) + phi_b.get(&key(p)).copied().unwrap_or(0.0) - fconst
        });
        let problem = Problem {
            grid: &grid,
            f: f.clone(),
            ghost,
        };
        let rep = problem.solve(u, &opts.psor);
        let q = problem.slack(u);
        let r: Vec<f64> = q
            .iter()
            .zip(u.iter())
            .map(|(&qk, &uk)| {
                if uk == 0.0 {
                    qk.max(0.0) / (2.0 * PI)
                } else {
                    0.0
                }
            })
            .collect();
        let m = r.iter().sum::<f64>() * cell;
        (r, m, rep.residual, rep.sweeps)
    };

    let mut fconst = f64::NAN;
    for _ in 0..opts.max_boundary_updates {
        let mut eval = |fc: f64, u: &mut Vec<f64>| {
            let (r, m, res, sw) = solve(fc, &phi_b, u);
            sweeps += sw;
            (r, m, res)
        };
        // bracket F; the mass is non-decreasing in F
        let (mut lo, mut hi) = if fconst.is_finite() {
            (fconst - 0.01, fconst + 0.01)
        } else {
            let fmin = vmin + phi_b.values().copied().fold(f64::INFINITY, f64::min);
            (fmin - 1.0, fmin + 1.0)
        };
        let (mut r_lo, mut m_lo, mut res_lo) = eval(lo, &mut u);
        let mut guard = 0;
        while m_lo > 1.0 && guard < 60 {
            hi = lo;
            lo -= 2.0 * (hi - lo).abs().max(0.01) * (guard + 1) as f64;
            (r_lo, m_lo, res_lo) = eval(lo, &mut u);
            guard += 1;
        }
        let (mut r_hi, mut m_hi, mut res_hi) = eval(hi, &mut u);
        while m_hi < 1.0 && guard < 60 {
            lo = hi;
            (r_lo, m_lo, res_lo) = (r_hi.clone(), m_hi, res_hi);
            hi += (hi - lo).abs().max(0.01) * 2.0 * (guard + 1) as f64;
            (r_hi, m_hi, res_hi) = eval(hi, &mut u);
            guard += 1;
        }
        // Illinois regula falsi on m(F) − 1
        let (mut side, mut best) = (0i8, (r_hi, m_hi, res_hi, hi));
        if (m_lo - 1.0).abs() < (best.1 - 1.0).abs() {
            best = (r_lo, m_lo, res_lo, lo);
        }
        let (mut g_lo, mut g_hi) = (m_lo - 1.0, m_hi - 1.0);
        for _ in 0..opts.max_outer {
            if (best.1 - 1.0).abs() <= opts.mass_tolerance || g_hi == g_lo {
                break;
            }
            let fc = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
            let (r, m, res) = eval(fc, &mut u);
            if (m - 1.0).abs() < (best.1 - 1.0).abs() {
                best = (r, m, res, fc);
            }
            if m > 1.0 {
                hi = fc;
                g_hi = m - 1.0;
                if side == 1 {
                    g_lo *= 0.5;
                }
                side = 1;
            } else {
                lo = fc;
                g_lo = m - 1.0;
                if side == -1 {
                    g_hi *= 0.5;
                }
                side = -1;
            }
        }
        (rho, mass, residual, fconst) = best;
        // refresh the boundary potential from the current density
        let mut change: f64 = 0.0;
        for &p in &ghosts {
            let new = log_potential(&grid, &rho, p) / mass.max(1e-300);
            let old = phi_b.insert(key(p), new).unwrap_or(new);
            change = change.max((new - old).abs());
        }
        if change < opts.boundary_tolerance {
            let support_area = rho.iter().filter(|&&r| r > 0.0).count() as f64 * cell;
            return finish(
                grid,
                rho,
                fconst,
                mass,
                support_area,
                residual,
                sweeps,
                opts,
            );
        }
    }
    let support_area = rho.iter().filter(|&&r| r > 0.0).count() as f64 * cell;
    finish(
        grid,
        rho,
        f64::NAN,
        mass,
        support_area,
        residual,
        sweeps,
        opts,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    grid: Grid,
    rho: Vec<f64>,
    fconst: f64,
    mass: f64,
    support_area: f64,
    residual: f64,
    sweeps: usize,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumSolution> {
    let touches = grid
        .centers()
        .any(|(k, p)| rho[k] > 0.0 && grid.distance_to_boundary(p) < 2.0 * grid.h());
    if touches {
        return Err(Error::NonConfining(
            "equilibrium support reaches the grid boundary".into(),
        ));
    }
    Ok(EquilibriumSolution {
        density: ScalarField::new(grid, rho)?,
        constant: fconst,
        mass,
        support_area,
        residual,
        sweeps,
        converged: residual <= opts.psor.tolerance
            && (mass - 1.0).abs() <= opts.mass_tolerance
            && fconst.is_finite(),
    })
}
