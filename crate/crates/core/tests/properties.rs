use jellium::cli::parse_config;
use jellium::fields::{Grid, ScalarField};
use jellium::geometry::{Point, PointConfiguration};
use jellium::meanfield::{bathtub_solve, project_capped};
use jellium::plasma::PlasmaHamiltonian;
use jellium::sampler::{acceptance_probability, wilson_interval};
use jellium::screening::{partial_balayage, BalayageOptions};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #[test]
    fn bathtub_respects_cap_and_mass(vals in prop::collection::vec(-5.0..5.0f64, 64), frac in 0.05..0.95f64) {
        let grid = Grid::new(Point::ORIGIN, 0.5, 8, 8).unwrap();
        let v = ScalarField::new(grid, vals.clone()).unwrap();
        let cap = 2.0;
        let mass = frac * cap * 64.0 * grid.cell_area();
        let rho = bathtub_solve(&v, cap, mass).unwrap();
        prop_assert!((rho.integral() - mass).abs() <= 1e-9 * mass);
        prop_assert!(rho.values().iter().all(|&r| (0.0..=cap + 1e-12).contains(&r)));
        // Filled cells sit below empty ones.
        let filled = (0..64).filter(|&k| rho.values()[k] > 0.0).map(|k| vals[k]).fold(f64::NEG_INFINITY, f64::max);
        let empty = (0..64).filter(|&k| rho.values()[k] == 0.0).map(|k| vals[k]).fold(f64::INFINITY, f64::min);
        prop_assert!(filled <= empty);
    }

    #[test]
    fn capped_projection_is_feasible_and_idempotent(y in prop::collection::vec(-2.0..3.0f64, 1..60), frac in 0.05..0.95f64) {
        let cap = 1.5;
        let area = 0.25;
        let mass = frac * cap * y.len() as f64 * area;
        let p = project_capped(&y, area, cap, mass);
        prop_assert!(p.iter().all(|&r| (-1e-12..=cap + 1e-12).contains(&r)));
        prop_assert!((p.iter().sum::<f64>() * area - mass).abs() <= 1e-8 * mass.max(1.0));
        let q = project_capped(&p, area, cap, mass);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn energy_change_matches_full_recomputation(pts in prop::collection::vec(point(), 2..12), j in 0usize..12, to in point()) {
        let j = j % pts.len();
        let mut moved = pts.clone();
        moved[j] = to;
        let apart = |x: &[Point]| (0..x.len()).all(|a| (a + 1..x.len()).all(|b| x[a].dist(x[b]) > 1e-3));
        prop_assume!(apart(&pts) && apart(&moved));
        let h = PlasmaHamiltonian::jellium(Vec::new()).unwrap();
        let before = h.energy(&pts).unwrap();
        let after = h.energy(&moved).unwrap();
        let d = h.delta_energy(&pts, j, to).unwrap();
        prop_assert!((d - (after - before)).abs() <= 1e-9 * (1.0 + before.abs()));
    }

    #[test]
    fn acceptance_is_a_probability(delta in -50.0..50.0f64, t in 0.01..10.0f64) {
        let a = acceptance_probability(delta, t);
        prop_assert!((0.0..=1.0).contains(&a));
        if delta <= 0.0 { prop_assert_eq!(a, 1.0); }
    }

    #[test]
    fn wilson_interval_brackets_the_estimate(n in 1usize..5000, frac in 0.0..=1.0f64) {
        let s = ((n as f64) * frac).round() as usize;
        let (lo, hi) = wilson_interval(s, n, 1.96);
        let p = s as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn config_values_survive_parsing(key in "[a-z_]{1,12}", value in "[ -~&&[^#]]{0,30}") {
        let text = format!("[s]\n{key} = {value}\n");
        let cfg = parse_config(&text).unwrap();
        prop_assert_eq!(&cfg.section("s").unwrap().get(&key).unwrap().value, value.trim());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Area equals total charge, for single and doubled charges alike.
    #[test]
    fn balayage_area_is_total_charge(pts in prop::collection::vec((point(), 1u32..=2), 1..4)) {
        let cfg = PointConfiguration::with_multiplicities(
            pts.iter().map(|p| p.0 * 0.4).collect(),
            pts.iter().map(|p| p.1).collect(),
        ).unwrap();
        let sol = partial_balayage(&cfg, &BalayageOptions { h: 0.04, ..Default::default() }).unwrap();
        let k = cfg.total_charge() as f64;
        prop_assert!(sol.converged);
        prop_assert!((sol.area - k).abs() <= 0.02 * k, "area {} vs {}", sol.area, k);
        prop_assert!(sol.phi.values().iter().all(|&x| x >= 0.0));
    }
}
