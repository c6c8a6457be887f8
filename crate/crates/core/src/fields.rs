//! Coulomb kernel, grids and grid fields, closed-form potentials of disks and
//! rectangles, charge smearing, and the finite-box renormalized energy.
//!
//! Sign convention throughout: the potential generated by a charge density
//! `f` is `C ⋆ f` with `C(x) = −log|x|`, so that `−Δ(C ⋆ f) = 2π f`.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{domain, Error, Result};
use crate::geometry::{Point, PointConfiguration};
use crate::spectral;

/// `∬_{[0,1]²×[0,1]²} log|x − y| dx dy`.
pub const UNIT_SQUARE_MEAN_LOG: f64 = -25.0 / 12.0 + PI / 3.0 + std::f64::consts::LN_2 / 3.0;

/// The 2D Coulomb kernel `C(r) = −log r`.
pub fn coulomb_kernel(r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return domain(format!("Coulomb kernel is singular at r = {r}"));
    }
    Ok(-r.ln())
}

/// Potential at `x` of a uniform disk of charge density `density`.
///
/// Outside the disk this is the point-charge value `−q log d` with
/// `q = πr²ρ` (Newton's theorem); inside it is `πρ(r²/2 − d²/2 − r² log r)`.
pub fn disk_potential(center: Point, radius: f64, density: f64, x: Point) -> Result<f64> {
    if !(radius > 0.0) || !(density >= 0.0) {
        return domain(format!(
            "disk potential needs radius > 0 and density >= 0 (got {radius}, {density})"
        ));
    }
    Ok(disk_potential_unchecked(center, radius, density, x))
}

pub(crate) fn disk_potential_unchecked(center: Point, radius: f64, density: f64, x: Point) -> f64 {
    let d = x.dist(center);
    let r2 = radius * radius;
    if d >= radius {
        -PI * r2 * density * d.ln()
    } else {
        PI * density * (0.5 * r2 - 0.5 * d * d - r2 * radius.ln())
    }
}

/// Radial derivative `dΦ/dd` of [`disk_potential`] at distance `d` from the center.
pub(crate) fn disk_potential_radial_derivative(radius: f64, density: f64, d: f64) -> f64 {
    if d >= radius {
        -PI * radius * radius * density / d
    } else {
        -PI * density * d
    }
}

fn log_antiderivative(u: f64, v: f64) -> f64 {
    // ∂²G/∂u∂v = log√(u² + v²)
    let r2 = u * u + v * v;
    let mut g = -1.5 * u * v;
    if r2 > 0.0 {
        g += 0.5 * u * v * r2.ln();
    }
    if u != 0.0 {
        g += 0.5 * u * u * (v / u).atan();
    }
    if v != 0.0 {
        g += 0.5 * v * v * (u / v).atan();
    }
    g
}

fn log_antiderivative_du(u: f64, v: f64) -> f64 {
    let r2 = u * u + v * v;
    let mut g = -v;
    if v != 0.0 && r2 > 0.0 {
        g += 0.5 * v * r2.ln();
    }
    if u != 0.0 {
        g += u * (v / u).atan();
    }
    g
}

/// `∫_{[lo, hi]} log|p − y| dy` over the axis-aligned rectangle `[lo, hi]`.
pub fn rectangle_log_integral(p: Point, lo: Point, hi: Point) -> f64 {
    let (ua, ub) = (p.x - lo.x, p.x - hi.x);
    let (vc, vd) = (p.y - lo.y, p.y - hi.y);
    log_antiderivative(ua, vc) - log_antiderivative(ub, vc) - log_antiderivative(ua, vd)
        + log_antiderivative(ub, vd)
}

/// Gradient in `p` of [`rectangle_log_integral`].
pub fn rectangle_log_gradient(p: Point, lo: Point, hi: Point) -> Point {
    let (ua, ub) = (p.x - lo.x, p.x - hi.x);
    let (vc, vd) = (p.y - lo.y, p.y - hi.y);
    let gx = log_antiderivative_du(ua, vc)
        - log_antiderivative_du(ub, vc)
        - log_antiderivative_du(ua, vd)
        + log_antiderivative_du(ub, vd);
    // G is symmetric in (u, v), so ∂G/∂v(u, v) = ∂G/∂u(v, u).
    let gy = log_antiderivative_du(vc, ua)
        - log_antiderivative_du(vc, ub)
        - log_antiderivative_du(vd, ua)
        + log_antiderivative_du(vd, ub);
    Point::new(gx, gy)
}

/// Uniform cell-centered rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    origin: Point,
    h: f64,
    nx: usize,
    ny: usize,
}

impl Grid {
    pub fn new(origin: Point, h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return domain(format!("grid spacing must be positive, got {h}"));
        }
        if nx < 2 || ny < 2 {
            return domain(format!("grid needs at least 2×2 cells, got {nx}×{ny}"));
        }
        if !origin.is_finite() {
            return domain("grid origin must be finite");
        }
        Ok(Grid { origin, h, nx, ny })
    }

    /// Square grid centered at `center` covering at least `[−half_width, half_width]²`,
    /// with an even cell count per side.
    pub fn square(center: Point, half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return domain(format!("half width must be positive, got {half_width}"));
        }
        let mut n = (2.0 * half_width / h).ceil() as usize;
        n += n % 2;
        let n = n.max(2);
        let side = n as f64 * h;
        Grid::new(center - Point::new(0.5 * side, 0.5 * side), h, n, n)
    }

    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }
    pub fn upper(&self) -> Point {
        self.origin + Point::new(self.nx as f64 * self.h, self.ny as f64 * self.h)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    /// Center of the (possibly out-of-range) cell `(i, j)`.
    #[inline]
    pub fn cell_center_signed(&self, i: isize, j: isize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.h,
            self.origin.y + (j as f64 + 0.5) * self.h,
        )
    }

    pub fn cell_containing(&self, p: Point) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// Distance from `p` to the outer edge of the grid rectangle (negative outside).
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        let up = self.upper();
        (p.x - self.origin.x)
            .min(up.x - p.x)
            .min(p.y - self.origin.y)
            .min(up.y - p.y)
    }

    /// Bilinear interpolation between cell centers; `None` outside the hull of centers.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Option<f64> {
        let fx = (p.x - self.origin.x) / self.h - 0.5;
        let fy = (p.y - self.origin.y) / self.h - 0.5;
        if fx < 0.0 || fy < 0.0 || fx > (self.nx - 1) as f64 || fy > (self.ny - 1) as f64 {
            return None;
        }
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let v00 = values[self.index(i, j)];
        let v10 = values[self.index(i + 1, j)];
        let v01 = values[self.index(i, j + 1)];
        let v11 = values[self.index(i + 1, j + 1)];
        Some(
            (1.0 - tx) * (1.0 - ty) * v00
                + tx * (1.0 - ty) * v10
                + (1.0 - tx) * ty * v01
                + tx * ty * v11,
        )
    }

    pub fn centers(&self) -> impl Iterator<Item = (usize, Point)> + '_ {
        (0..self.len()).map(move |k| {
            let (i, j) = self.coords(k);
            (k, self.cell_center(i, j))
        })
    }
}

/// A real value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return domain(format!(
                "field has {} values for a grid of {} cells",
                values.len(),
                grid.len()
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("field value at cell {k} is not finite"));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = grid.centers().map(|(_, p)| f(p)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn l1_distance(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return domain("L1 distance between fields on different grids");
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_area())
    }

    /// Writes the field as CSV behind a three-line grid header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write_grid_header(&mut w, &self.grid)?;
        writeln!(w, "i,j,x,y,value")?;
        for (k, p) in self.grid.centers() {
            let (i, j) = self.grid.coords(k);
            writeln!(w, "{i},{j},{},{},{}", p.x, p.y, self.values[k])?;
        }
        Ok(())
    }
}

pub(crate) fn write_grid_header<W: Write>(w: &mut W, grid: &Grid) -> std::io::Result<()> {
    writeln!(w, "origin,{},{}", grid.origin.x, grid.origin.y)?;
    writeln!(w, "h,{}", grid.h)?;
    writeln!(w, "n,{},{}", grid.nx, grid.ny)
}

/// Five-point `−Δ_h` of `values`, with out-of-grid neighbors taken from `ghost`.
pub fn neg_laplacian(grid: &Grid, values: &[f64], ghost: impl Fn(Point) -> f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let inv_h2 = 1.0 / grid.cell_area();
    let at = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= nx || j >= ny {
            ghost(grid.cell_center_signed(i, j))
        } else {
            values[grid.index(i as usize, j as usize)]
        }
    };
    let mut out = vec![0.0; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            let c = at(i, j);
            out[grid.index(i as usize, j as usize)] =
                (4.0 * c - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1)) * inv_h2;
        }
    }
    out
}

/// Radial shape of a smearing profile, normalized on the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileShape {
    /// `σ(s) = (3/π)(1 − s)`: continuous, vanishing at the rim.
    Tent,
    /// `σ(s) = 1/π` on the unit disk.
    Disk,
}

/// A radial smearing profile of radius η and unit mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmearingProfile {
    radius: f64,
    shape: ProfileShape,
}

impl SmearingProfile {
    pub fn new(shape: ProfileShape, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("smearing radius must be positive, got {radius}"));
        }
        Ok(SmearingProfile { radius, shape })
    }

    pub fn tent(radius: f64) -> Result<Self> {
        Self::new(ProfileShape::Tent, radius)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn shape(&self) -> ProfileShape {
        self.shape
    }

    /// Unit-radius profile `σ(s)`, supported in `s ≤ 1`.
    pub fn unit_density(shape: ProfileShape, s: f64) -> f64 {
        if s > 1.0 {
            return 0.0;
        }
        match shape {
            ProfileShape::Tent => 3.0 / PI * (1.0 - s),
            ProfileShape::Disk => 1.0 / PI,
        }
    }

    /// `η⁻² σ(r/η)`.
    pub fn density(&self, r: f64) -> f64 {
        Self::unit_density(self.shape, r / self.radius) / (self.radius * self.radius)
    }
}

/// Counter-term constants of the renormalized energy in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormConstants {
    pub kappa2: f64,
    pub gamma2: f64,
    pub c2: f64,
}

impl RenormConstants {
    /// `κ₂ = c₂ = 2π`; `γ₂ = 2π ∬ σ C σ` computed by radial quadrature.
    pub fn for_shape(shape: ProfileShape) -> Self {
        let c2 = 2.0 * PI;
        RenormConstants {
            kappa2: c2,
            gamma2: c2 * unit_self_energy(shape),
            c2,
        }
    }
}

/// `∬ σ(x) (−log|x − y|) σ(y) dx dy` for the unit-radius profile.
///
/// Newton's theorem reduces this to 1D: the potential of the radial profile
/// is `φ(r) = −Q(r) log r − ∫_r^1 2πsσ(s) log s ds` with `Q` the enclosed
/// mass, and the energy is `∫ 2πrσ(r) φ(r) dr`.
fn unit_self_energy(shape: ProfileShape) -> f64 {
    const M: usize = 200_000;
    let ds = 1.0 / M as f64;
    let nodes: Vec<f64> = (0..M).map(|k| (k as f64 + 0.5) * ds).collect();
    let mass: Vec<f64> = nodes
        .iter()
        .map(|&s| 2.0 * PI * s * SmearingProfile::unit_density(shape, s) * ds)
        .collect();
    // tail[k] = Σ_{m > k} mass[m]·log s_m, enclosed[k] = Σ_{m < k} mass[m] + mass[k]/2
    let mut tail = vec![0.0; M];
    let mut acc = 0.0;
    for k in (0..M).rev() {
        tail[k] = acc + 0.5 * mass[k] * nodes[k].ln();
        acc += mass[k] * nodes[k].ln();
    }
    let mut enclosed = 0.0;
    let mut energy = 0.0;
    for k in 0..M {
        let q = enclosed + 0.5 * mass[k];
        let phi = -q * nodes[k].ln() - tail[k];
        energy += mass[k] * phi;
        enclosed += mass[k];
    }
    energy
}

/// Deposits each charge as a smeared bump onto `grid`.
///
/// Each bump is sampled at cell centers and rescaled so that its discrete mass
/// equals the multiplicity exactly.
pub fn mollify_points(
    config: &PointConfiguration,
    grid: &Grid,
    profile: &SmearingProfile,
) -> Result<ScalarField> {
    let mut values = vec![0.0; grid.len()];
    for (idx, (p, m)) in config.iter().enumerate() {
        deposit(&mut values, grid, profile, p, m as f64).map_err(|e| match e {
            Error::BoundaryClipping { x, y, margin, .. } => Error::BoundaryClipping {
                index: idx,
                x,
                y,
                margin,
            },
            other => other,
        })?;
    }
    ScalarField::new(*grid, values)
}

pub(crate) fn deposit(
    values: &mut [f64],
    grid: &Grid,
    profile: &SmearingProfile,
    p: Point,
    charge: f64,
) -> Result<()> {
    let eta = profile.radius();
    if grid.distance_to_boundary(p) < eta {
        return Err(Error::BoundaryClipping {
            index: 0,
            x: p.x,
            y: p.y,
            margin: eta,
        });
    }
    let h = grid.h();
    let o = grid.origin();
    let i0 = (((p.x - eta - o.x) / h).floor() as isize).max(0) as usize;
    let j0 = (((p.y - eta - o.y) / h).floor() as isize).max(0) as usize;
    let i1 = (((p.x + eta - o.x) / h).ceil() as usize).min(grid.nx() - 1);
    let j1 = (((p.y + eta - o.y) / h).ceil() as usize).min(grid.ny() - 1);
    let mut cells = Vec::new();
    let mut total = 0.0;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let w = profile.density(grid.cell_center(i, j).dist(p));
            if w > 0.0 {
                cells.push((grid.index(i, j), w));
                total += w;
            }
        }
    }
    if total > 0.0 {
        let scale = charge / (total * grid.cell_area());
        for (k, w) in cells {
            values[k] += w * scale;
        }
    } else {
        let (i, j) = grid
            .cell_containing(p)
            .ok_or_else(|| Error::Domain("charge outside the grid".into()))?;
        values[grid.index(i, j)] += charge / grid.cell_area();
    }
    Ok(())
}

/// Options of the finite-box renormalized energy estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormOptions {
    /// Lower-left corner of the square box `K_R`.
    pub origin: Point,
    /// Side length `R` of the box.
    pub side: f64,
    /// Smearing profile (shape and η).
    pub profile: SmearingProfile,
    /// Grid cells per smearing radius.
    pub cells_per_eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenormEstimate {
    /// `⨍_{K_R} |E_η|² − ρ(κ₂ C(η) + γ₂)`.
    pub value: f64,
    pub mean_field_energy: f64,
    pub counter_term: f64,
    pub h: f64,
    /// Set when η is at least half the minimal pair distance, where smearing
    /// changes the pair interactions.
    pub overlap_warning: bool,
}

/// Finite-box, finite-η renormalized jellium energy per unit area.
///
/// Solves `−Δh_η = 2π(Σ δ_p^(η) − ρ)` on `K_R` with periodic closure (the
/// right-hand side is made mean-zero), and averages `|∇h_η|²` computed on cell
/// edges so that the discrete Dirichlet energy matches the discrete Poisson
/// problem exactly.
pub fn renormalized_energy_estimate(
    points: &[Point],
    background: f64,
    opts: &RenormOptions,
) -> Result<RenormEstimate> {
    if !(background >= 0.0) {
        return domain(format!("background density must be >= 0, got {background}"));
    }
    if !(opts.side > 0.0) || !(opts.cells_per_eta > 0.0) {
        return domain("box side and resolution must be positive");
    }
    let eta = opts.profile.radius();
    let n = ((opts.side * opts.cells_per_eta / eta).ceil() as usize).max(4);
    let h = opts.side / n as f64;
    let grid = Grid::new(opts.origin, h, n, n)?;

    let mut f = vec![0.0; grid.len()];
    for (idx, &p) in points.iter().enumerate() {
        deposit(&mut f, &grid, &opts.profile, p, 1.0).map_err(|e| match e {
            Error::BoundaryClipping { x, y, margin, .. } => Error::BoundaryClipping {
                index: idx,
                x,
                y,
                margin,
            },
            other => other,
        })?;
    }
    let two_pi = 2.0 * PI;
    for v in f.iter_mut() {
        *v = two_pi * (*v - background);
    }
    let pot = spectral::poisson_periodic(&f, n, n, h);
    let mut dirichlet = 0.0;
    for j in 0..n {
        for i in 0..n {
            let c = pot[grid.index(i, j)];
            let ex = pot[grid.index((i + 1) % n, j)] - c;
            let ey = pot[grid.index(i, (j + 1) % n)] - c;
            dirichlet += ex * ex + ey * ey;
        }
    }
    // Σ |D⁺h|²/h² · h² over the box, divided by the box area.
    let mean_field_energy = dirichlet / (opts.side * opts.side);

    let consts = RenormConstants::for_shape(opts.profile.shape());
    let counter_term = background * (consts.kappa2 * (-eta.ln()) + consts.gamma2);

    let mut min_pair = f64::INFINITY;
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            min_pair = min_pair.min(points[a].dist(points[b]));
        }
    }
    Ok(RenormEstimate {
        value: mean_field_energy - counter_term,
        mean_field_energy,
        counter_term,
        h,
        overlap_warning: eta >= 0.5 * min_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(coulomb_kernel(1.0).unwrap(), 0.0);
        assert!((coulomb_kernel(std::f64::consts::E).unwrap() + 1.0).abs() < 1e-15);
        assert!(coulomb_kernel(0.0).is_err());
        assert!(coulomb_kernel(-1.0).is_err());
    }

    #[test]
    fn disk_potential_examples() {
        let r = 1.0 / PI.sqrt();
        let c = Point::new(0.3, -0.2);
        assert!(
            disk_potential(c, r, 1.0, c + Point::new(1.0, 0.0))
                .unwrap()
                .abs()
                < 1e-15
        );
        // 2π ∫₀^r (−log s) s ds evaluated by composite Simpson, independent of the closed form.
        let m = 20_000;
        let ds = r / m as f64;
        let f = |s: f64| if s == 0.0 { 0.0 } else { -s.ln() * s };
        let mut simpson = f(0.0) + f(r);
        for k in 1..m {
            simpson += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * ds);
        }
        let center_value = 2.0 * PI * simpson * ds / 3.0;
        let v = disk_potential(c, r, 1.0, c).unwrap();
        assert!((v - center_value).abs() < 1e-8, "{v} vs {center_value}");
        assert!((v - (0.5 * PI.ln() + 0.5)).abs() < 1e-12);
        for &d in &[1.3, 2.0, 7.5] {
            let rr = 0.9;
            let v = disk_potential(Point::ORIGIN, rr, 1.0, Point::new(0.0, d)).unwrap();
            assert!((v - PI * rr * rr * (-d.ln())).abs() < 1e-12);
        }
        assert!(disk_potential(c, 0.0, 1.0, c).is_err());
        assert!(disk_potential(c, 1.0, -1.0, c).is_err());
    }

    #[test]
    fn disk_potential_continuous_at_rim() {
        let r = 0.7;
        let inside = disk_potential(Point::ORIGIN, r, 2.0, Point::new(r - 1e-12, 0.0)).unwrap();
        let outside = disk_potential(Point::ORIGIN, r, 2.0, Point::new(r + 1e-12, 0.0)).unwrap();
        assert!((inside - outside).abs() < 1e-10);
    }

    #[test]
    fn discrete_laplacian_of_disk_potential() {
        // −Δ_h of the disk potential equals 2π·density inside the disk, to O(h²).
        let (r, rho) = (1.0, 1.5);
        let grid = Grid::square(Point::ORIGIN, 1.5, 0.01).unwrap();
        let phi = ScalarField::from_fn(grid, |p| disk_potential(Point::ORIGIN, r, rho, p).unwrap())
            .unwrap();
        let lap = neg_laplacian(&grid, phi.values(), |p| {
            disk_potential(Point::ORIGIN, r, rho, p).unwrap()
        });
        for (k, p) in grid.centers() {
            let d = p.norm();
            if d < r - 0.03 {
                assert!(
                    (lap[k] - 2.0 * PI * rho).abs() < 1e-6,
                    "inside {d}: {}",
                    lap[k]
                );
            } else if d > r + 0.03 {
                assert!(
                    lap[k].abs() < 50.0 * grid.h() * grid.h(),
                    "outside {d}: {}",
                    lap[k]
                );
            }
        }
    }

    #[test]
    fn newton_exterior_identity_for_radial_profiles() {
        // Potential of a radial charge at distance d ≥ r equals −q log d:
        // integrate the tent profile's potential by 2D quadrature at an exterior point.
        let profile = SmearingProfile::tent(0.5).unwrap();
        let target = Point::new(0.8, 0.3);
        let (m, r) = (800usize, 0.5);
        let h = 2.0 * r / m as f64;
        let mut pot = 0.0;
        let mut mass = 0.0;
        for j in 0..m {
            for i in 0..m {
                let y = Point::new(-r + (i as f64 + 0.5) * h, -r + (j as f64 + 0.5) * h);
                let w = profile.density(y.norm()) * h * h;
                mass += w;
                pot += w * -(target.dist(y)).ln();
            }
        }
        let expected = -mass * target.norm().ln();
        assert!((pot - expected).abs() < 1e-8, "{pot} vs {expected}");
    }

    #[test]
    fn rectangle_integral_matches_quadrature() {
        let lo = Point::new(-0.5, -1.0);
        let hi = Point::new(1.5, 0.25);
        for &p in &[
            Point::new(0.1, -0.2),
            Point::new(3.0, 2.0),
            Point::new(-0.55, 0.0),
        ] {
            let m = 1000;
            let (dx, dy) = ((hi.x - lo.x) / m as f64, (hi.y - lo.y) / m as f64);
            let mut s = 0.0;
            for j in 0..m {
                for i in 0..m {
                    let y = Point::new(lo.x + (i as f64 + 0.5) * dx, lo.y + (j as f64 + 0.5) * dy);
                    s += p.dist(y).ln() * dx * dy;
                }
            }
            let exact = rectangle_log_integral(p, lo, hi);
            assert!((s - exact).abs() < 2e-5, "{s} vs {exact}");
            let e = 1e-6;
            let gx = (rectangle_log_integral(p + Point::new(e, 0.0), lo, hi)
                - rectangle_log_integral(p - Point::new(e, 0.0), lo, hi))
                / (2.0 * e);
            let gy = (rectangle_log_integral(p + Point::new(0.0, e), lo, hi)
                - rectangle_log_integral(p - Point::new(0.0, e), lo, hi))
                / (2.0 * e);
            let g = rectangle_log_gradient(p, lo, hi);
            assert!(
                (g.x - gx).abs() < 1e-7 && (g.y - gy).abs() < 1e-7,
                "{g:?} vs {gx} {gy} at {p:?}"
            );
        }
    }

    #[test]
    fn unit_square_constant() {
        // ∫_{unit square} of the rectangle potential, by midpoint rule.
        let m = 400;
        let h = 1.0 / m as f64;
        let mut s = 0.0;
        for j in 0..m {
            for i in 0..m {
                let p = Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                s += rectangle_log_integral(p, Point::ORIGIN, Point::new(1.0, 1.0)) * h * h;
            }
        }
        assert!((s - UNIT_SQUARE_MEAN_LOG).abs() < 1e-5);
    }

    #[test]
    fn gamma2_for_known_profiles() {
        // Closed forms: tent ∬σCσ = 31/60, uniform disk 1/4.
        let tent = RenormConstants::for_shape(ProfileShape::Tent);
        assert!(
            (tent.gamma2 - 2.0 * PI * 31.0 / 60.0).abs() < 1e-7,
            "{}",
            tent.gamma2
        );
        let disk = RenormConstants::for_shape(ProfileShape::Disk);
        assert!((disk.gamma2 - 2.0 * PI * 0.25).abs() < 1e-7);
        assert_eq!(tent.c2, 2.0 * PI);
        assert_eq!(tent.kappa2, tent.c2);
    }

    #[test]
    fn mollification_mass() {
        let grid = Grid::square(Point::ORIGIN, 2.0, 0.05).unwrap();
        let profile = SmearingProfile::tent(0.2).unwrap();
        let one = PointConfiguration::new(vec![Point::new(0.013, -0.27)]).unwrap();
        let f = mollify_points(&one, &grid, &profile).unwrap();
        assert!((f.integral() - 1.0).abs() < 1e-12);
        let many = PointConfiguration::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.3),
            Point::new(-1.2, 0.9),
        ])
        .unwrap();
        assert!((mollify_points(&many, &grid, &profile).unwrap().integral() - 3.0).abs() < 1e-12);

        let double =
            PointConfiguration::with_multiplicities(vec![Point::new(0.3, 0.1)], vec![2]).unwrap();
        let twice =
            PointConfiguration::new(vec![Point::new(0.3, 0.1), Point::new(0.3, 0.1)]).unwrap();
        let a = mollify_points(&double, &grid, &profile).unwrap();
        let b = mollify_points(&twice, &grid, &profile).unwrap();
        assert!(a.l1_distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn mollification_mass_independent_of_offset() {
        let profile = SmearingProfile::tent(0.07).unwrap();
        for k in 0..20 {
            let off = Point::new(0.0137 * k as f64, -0.0071 * k as f64);
            let grid = Grid::new(Point::new(-1.0, -1.0) + off, 0.02, 100, 100).unwrap();
            let c = PointConfiguration::new(vec![Point::new(0.11, 0.05)]).unwrap();
            let m = mollify_points(&c, &grid, &profile).unwrap().integral();
            assert!((m - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mollified_bump_is_radially_symmetric() {
        let grid = Grid::square(Point::ORIGIN, 1.0, 0.01).unwrap();
        let profile = SmearingProfile::tent(0.2).unwrap();
        let c = PointConfiguration::new(vec![Point::ORIGIN]).unwrap();
        let f = mollify_points(&c, &grid, &profile).unwrap();
        // compare against the exact profile scaled by the renormalization factor
        let peak = f.max();
        let exact_peak = profile.density(0.005f64.hypot(0.005));
        let scale = peak / exact_peak;
        for (k, p) in grid.centers() {
            let expect = profile.density(p.norm()) * scale;
            assert!((f.values()[k] - expect).abs() < 1e-9 * peak.max(1.0));
        }
    }

    #[test]
    fn mollification_rejects_clipping() {
        let grid = Grid::square(Point::ORIGIN, 1.0, 0.05).unwrap();
        let profile = SmearingProfile::tent(0.2).unwrap();
        let c = PointConfiguration::new(vec![Point::ORIGIN, Point::new(0.9, 0.0)]).unwrap();
        match mollify_points(&c, &grid, &profile) {
            Err(Error::BoundaryClipping { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected clipping error, got {other:?}"),
        }
    }

    #[test]
    fn renormalized_energy_of_empty_box_is_zero() {
        let opts = RenormOptions {
            origin: Point::ORIGIN,
            side: 4.0,
            profile: SmearingProfile::tent(0.25).unwrap(),
            cells_per_eta: 4.0,
        };
        let est = renormalized_energy_estimate(&[], 0.0, &opts).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn renormalized_energy_flags_overlap() {
        let opts = RenormOptions {
            origin: Point::ORIGIN,
            side: 2.0,
            profile: SmearingProfile::tent(0.3).unwrap(),
            cells_per_eta: 4.0,
        };
        let pts = [Point::new(0.5, 1.0), Point::new(1.0, 1.0)];
        assert!(
            renormalized_energy_estimate(&pts, 0.5, &opts)
                .unwrap()
                .overlap_warning
        );
        let pts = [Point::new(0.5, 1.0), Point::new(1.5, 1.0)];
        assert!(
            !renormalized_energy_estimate(&pts, 0.5, &opts)
                .unwrap()
                .overlap_warning
        );
    }

    #[test]
    fn field_csv_has_grid_header() {
        let grid = Grid::new(Point::new(-1.0, 0.5), 0.25, 2, 3).unwrap();
        let f = ScalarField::from_fn(grid, |p| p.x + p.y).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "origin,-1,0.5");
        assert_eq!(lines[1], "h,0.25");
        assert_eq!(lines[2], "n,2,3");
        assert_eq!(lines[3], "i,j,x,y,value");
        assert_eq!(lines.len(), 4 + 6);
    }
}
