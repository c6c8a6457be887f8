//! The ℓ = 1 Laughlin one-point density, rescaled by `1/√N`, against the
//! mean-field equilibrium of `v(y) = |y|²/4`, both averaged on 0.2 cells.

use jellium::fields::Grid;
use jellium::geometry::Point;
use jellium::meanfield::{meanfield_equilibrium, EquilibriumOptions};
use jellium::plasma::laughlin_hamiltonian;
use jellium::sampler::{
    density_estimate, metropolis_chains, pooled_samples, rescale, SampleOptions,
};

#[test]
fn sampled_density_approaches_mean_field() {
    let n = 64;
    let h = laughlin_hamiltonian(1.0, 1, &[]).unwrap();
    let opts = SampleOptions {
        sweeps: 3000,
        seed: 64,
        ..SampleOptions::default()
    };
    let runs = metropolis_chains(&h, n, &opts, 4, false).unwrap();
    let samples = rescale(&pooled_samples(&runs), 1.0 / (n as f64).sqrt());

    let coarse = Grid::square(Point::ORIGIN, 2.4, 0.2).unwrap();
    let mc = density_estimate(&samples, &coarse, 1).unwrap();

    let fine = Grid::square(Point::ORIGIN, 2.4, 0.04).unwrap();
    let mf = meanfield_equilibrium(
        &|p: Point| 0.25 * p.norm2(),
        fine,
        &EquilibriumOptions::default(),
    )
    .unwrap();
    assert!(mf.converged);
    assert!((mf.mass - 1.0).abs() < 1e-5);
    assert!(mf.density.values().iter().all(|&x| x >= 0.0));

    // 5 × 5 blocks of fine cells make one coarse cell.
    let mut block = vec![0.0; coarse.len()];
    for (k, p) in fine.centers() {
        let (i, j) = coarse.cell_containing(p).unwrap();
        block[coarse.index(i, j)] += mf.density.values()[k] / 25.0;
    }
    let l1: f64 = block
        .iter()
        .zip(&mc.values)
        .map(|(a, b)| (a - b / n as f64).abs())
        .sum::<f64>()
        * coarse.cell_area();
    println!("L1(MC, MF) on 0.2 cells = {l1:.4}");
    assert!(l1 <= 0.1, "L1 = {l1}");
}
