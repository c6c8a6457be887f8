//! Projected SOR for the discrete obstacle problem
//!
//! ```text
//! u ≥ 0,   q := −Δ_h u − f ≥ 0,   u·q = 0
//! ```
//!
//! on a cell-centered grid with Dirichlet ghost values outside it.

use crate::fields::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    RedBlack,
    Lexicographic,
    ReverseLexicographic,
}

impl SweepOrder {
    pub fn name(&self) -> &'static str {
        match self {
            SweepOrder::RedBlack => "red-black",
            SweepOrder::Lexicographic => "lexicographic",
            SweepOrder::ReverseLexicographic => "reverse-lexicographic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "red-black" => Some(SweepOrder::RedBlack),
            "lexicographic" => Some(SweepOrder::Lexicographic),
            "reverse-lexicographic" => Some(SweepOrder::ReverseLexicographic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsorOptions {
    pub omega: f64,
    /// Stop when `max|min(u, h²q/4)| ≤ tolerance·max(u)`.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub order: SweepOrder,
    /// Sweeps between residual evaluations.
    pub check_every: usize,
}

impl Default for PsorOptions {
    fn default() -> Self {
        PsorOptions {
            omega: 1.9,
            tolerance: 1e-10,
            max_sweeps: 200_000,
            order: SweepOrder::RedBlack,
            check_every: 10,
        }
    }
}

/// One obstacle problem on a grid.
pub(crate) struct Problem<'a> {
    pub grid: &'a Grid,
    pub f: Vec<f64>,
    /// Sum of Dirichlet ghost values over each cell's out-of-grid neighbors.
    pub ghost: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsorReport {
    pub sweeps: usize,
    pub residual: f64,
    pub converged: bool,
}

pub(crate) fn ghost_sums(grid: &Grid, ghost: impl Fn(crate::geometry::Point) -> f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let mut out = vec![0.0; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            let mut s = 0.0;
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= nx || b >= ny {
                    s += ghost(grid.cell_center_signed(a, b));
                }
            }
            out[grid.index(i as usize, j as usize)] = s;
        }
    }
    out
}

impl Problem<'_> {
    #[inline]
    fn neighbor_sum(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let g = self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let k = g.index(i, j);
        let mut s = self.ghost[k];
        if i > 0 {
            s += u[k - 1];
        }
        if i + 1 < nx {
            s += u[k + 1];
        }
        if j > 0 {
            s += u[k - nx];
        }
        if j + 1 < ny {
            s += u[k + nx];
        }
        s
    }

    #[inline]
    fn relax(&self, u: &mut [f64], i: usize, j: usize, omega: f64, h2: f64) {
        let k = self.grid.index(i, j);
        let gs = 0.25 * (self.neighbor_sum(u, i, j) + h2 * self.f[k]);
        u[k] = ((1.0 - omega) * u[k] + omega * gs).max(0.0);
    }

    fn sweep(&self, u: &mut [f64], opts: &PsorOptions) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let h2 = self.grid.cell_area();
        let w = opts.omega;
        match opts.order {
            SweepOrder::RedBlack => {
                for color in 0..2 {
                    for j in 0..ny {
                        let mut i = (j + color) % 2;
                        while i < nx {
                            self.relax(u, i, j, w, h2);
                            i += 2;
                        }
                    }
                }
            }
            SweepOrder::Lexicographic => {
                for j in 0..ny {
                    for i in 0..nx {
                        self.relax(u, i, j, w, h2);
                    }
                }
            }
            SweepOrder::ReverseLexicographic => {
                for j in (0..ny).rev() {
                    for i in (0..nx).rev() {
                        self.relax(u, i, j, w, h2);
                    }
                }
            }
        }
    }

    /// `q = −Δ_h u − f` per cell.
    pub fn slack(&self, u: &[f64]) -> Vec<f64> {
        let h2 = self.grid.cell_area();
        let mut q = vec![0.0; u.len()];
        for j in 0..self.grid.ny() {
            for i in 0..self.grid.nx() {
                let k = self.grid.index(i, j);
                q[k] = (4.0 * u[k] - self.neighbor_sum(u, i, j)) / h2 - self.f[k];
            }
        }
        q
    }

    /// `max|min(u, h²q/4)|` relative to `max(u)`.
    pub fn residual(&self, u: &[f64]) -> f64 {
        let h2 = self.grid.cell_area();
        let q = self.slack(u);
        let mut worst: f64 = 0.0;
        for k in 0..u.len() {
            worst = worst.max(u[k].min(0.25 * h2 * q[k]).abs());
        }
        let scale = u.iter().copied().fold(0.0, f64::max);
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    pub fn solve(&self, u: &mut [f64], opts: &PsorOptions) -> PsorReport {
        let mut sweeps = 0;
        let check = opts.check_every.max(1);
        loop {
            let r = self.residual(u);
            if r <= opts.tolerance {
                return PsorReport {
                    sweeps,
                    residual: r,
                    converged: true,
                };
            }
            if sweeps >= opts.max_sweeps {
                return PsorReport {
                    sweeps,
                    residual: r,
                    converged: false,
                };
            }
            for _ in 0..check {
                self.sweep(u, opts);
            }
            sweeps += check;
        }
    }
}

/// Piecewise-constant prolongation from an `n × m` grid to `2n × 2m`.
pub(crate) fn prolong(coarse: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let (fx, fy) = (2 * nx, 2 * ny);
    let mut fine = vec![0.0; fx * fy];
    for j in 0..fy {
        for i in 0..fx {
            fine[j * fx + i] = coarse[(j / 2) * nx + i / 2];
        }
    }
    fine
}
