//! Dispatch of validated experiments to the numerical modules.

use std::f64::consts::PI;
use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::schema::Experiment;
use crate::error::{Error, Result};
use crate::fields::{
    renormalized_energy_estimate, Grid, ProfileShape, RenormOptions, ScalarField, SmearingProfile,
};
use crate::geometry::{Point, PointConfiguration};
use crate::groundstate::{
    energy_per_volume_scan, min_pair_distance, minimize, DomainBoundary, MinimizeOptions,
    SEPARATION_DELTA,
};
use crate::io::{write_configuration, write_stream, ConfigurationRecord};
use crate::meanfield::{
    flocking_solve, meanfield_equilibrium, EquilibriumOptions, FlockingOptions, FlockingProblem,
    Interaction,
};
use crate::parallel::{map_tasks, split_seed};
use crate::plasma::{laughlin_density, laughlin_hamiltonian, PlasmaHamiltonian, QuasiHole};
use crate::sampler::{
    density_estimate, metropolis_chains, pooled_samples, SampleOptions, BATCHES,
    BOOTSTRAP_REPLICATES, MIN_SAMPLES, TARGET_ACCEPTANCE, TUNE_WINDOW_SWEEPS,
};
use crate::screening::{
    exclusion_check, partial_balayage, BalayageOptions, PsorOptions, SweepOrder,
    CHARGE_RADIUS_CELLS,
};
use crate::verify::{Verifier, VerifyOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Everything an experiment produces besides the manifest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    /// File name and contents, in write order.
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
    /// Fixed numerical constants the run depended on.
    pub constants: Vec<(&'static str, f64)>,
}

impl Outputs {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

pub struct RunContext {
    pub serial: bool,
    pub verbose: bool,
}

fn field_csv(f: &ScalarField) -> String {
    let mut buf = Vec::new();
    f.write_csv(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn holes(exp: &Experiment) -> Result<Vec<QuasiHole>> {
    exp.points("holes")
        .iter()
        .map(|&(p, c)| QuasiHole::new(p, c))
        .collect()
}

fn configuration(pts: &[(Point, f64)]) -> Result<PointConfiguration> {
    let mut mult = Vec::new();
    for &(_, m) in pts {
        if m < 1.0 || m.fract() != 0.0 {
            return Err(Error::Domain(format!(
                "multiplicity must be a positive integer, got {m}"
            )));
        }
        mult.push(m as u32);
    }
    PointConfiguration::with_multiplicities(pts.iter().map(|p| p.0).collect(), mult)
}

fn single_point(exp: &Experiment, key: &str) -> Result<Point> {
    match exp.points(key) {
        [(p, _)] => Ok(*p),
        other => Err(Error::Domain(format!(
            "'{key}' must hold exactly one point, got {}",
            other.len()
        ))),
    }
}

fn minimize_options(exp: &Experiment, seed: u64, serial: bool) -> MinimizeOptions {
    MinimizeOptions {
        multistart: exp.int("multistart"),
        seed,
        max_iterations: exp.int("max_iterations"),
        tolerance: exp.float("tolerance"),
        armijo: exp.float("armijo"),
        max_displacement: exp.float("max_displacement"),
        serial,
        record_trace: false,
    }
}

fn psor_options(exp: &Experiment) -> Result<PsorOptions> {
    Ok(PsorOptions {
        omega: exp.float("omega"),
        tolerance: exp.float("psor_tolerance"),
        max_sweeps: exp.int("max_sweeps"),
        order: SweepOrder::parse(exp.choice("order")).expect("schema restricts the order"),
        check_every: exp.int("check_every"),
    })
}

fn potential(exp: &Experiment) -> Result<impl Fn(Point) -> f64 + Sync> {
    let c = single_point(exp, "center")?;
    let a = exp.float("strength");
    let quartic = exp.choice("potential") == "quartic";
    Ok(move |p: Point| {
        let r2 = (p - c).norm2();
        if quartic {
            a * r2 * r2
        } else {
            a * r2
        }
    })
}

pub fn execute(exp: &Experiment, ctx: &RunContext) -> Result<Outputs> {
    let mut out = Outputs::default();
    match exp.kind.as_str() {
        "ground-state" => ground_state(exp, ctx, &mut out)?,
        "sample" => sample(exp, ctx, &mut out)?,
        "balayage" => balayage(exp, &mut out)?,
        "exclusion" => exclusion(exp, ctx, &mut out)?,
        "meanfield" => meanfield(exp, &mut out)?,
        "flocking" => flocking(exp, &mut out)?,
        "thermo-scan" => thermo_scan(exp, ctx, &mut out)?,
        "renorm-energy" => renorm_energy(exp, &mut out)?,
        "verify-all" => verify_all(exp, ctx, &mut out)?,
        k => return Err(Error::Domain(format!("unknown experiment kind '{k}'"))),
    }
    Ok(out)
}

fn ground_state(exp: &Experiment, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let h = PlasmaHamiltonian::new(exp.float("beta"), exp.float("g"), holes(exp)?)?;
    let m = minimize(
        &h,
        exp.int("n"),
        &minimize_options(exp, exp.seed, ctx.serial),
    )?;
    out.file(
        "minimizer.txt",
        write_configuration(&ConfigurationRecord::new(m.config.clone(), &h)),
    );
    let mut runs = String::from("run,seed,energy,gradient_norm,iterations,converged,best\n");
    for (i, r) in m.runs.iter().enumerate() {
        let _ = writeln!(
            runs,
            "{i},{},{},{},{},{},{}",
            r.seed,
            r.energy,
            r.gradient_norm,
            r.iterations,
            r.converged,
            i == m.best_run
        );
    }
    out.file("runs.csv", runs);
    out.check(
        "converged",
        m.converged,
        format!("energy {}, gradient norm {:.3e}", m.energy, m.gradient_norm),
    );
    if exp.flag("check_separation") {
        let t = exp.float("separation_threshold");
        let rep = min_pair_distance(&m.config, &DomainBoundary::ConvexHull, SEPARATION_DELTA, t);
        out.check(
            "separation",
            rep.violations.is_empty(),
            format!(
                "bulk nearest neighbor {:.4} over {} bulk points, threshold {t}",
                rep.distance, rep.bulk_count
            ),
        );
    }
    out.constants.push(("separation_margin", SEPARATION_DELTA));
    Ok(())
}

fn sample(exp: &Experiment, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let n = exp.int("n");
    let (b, ell) = (exp.float("b"), exp.int("ell") as u32);
    let h = laughlin_hamiltonian(b, ell, &holes(exp)?)?;
    let thinning = exp.int("thinning");
    let opts = SampleOptions {
        temperature: exp.float("temperature"),
        sweeps: exp.int("sweeps"),
        burn_in: exp.float("burn_in"),
        thinning: (thinning > 0).then_some(thinning),
        seed: exp.seed,
        initial_step: exp.float("initial_step"),
        energy_check_every: exp.int("energy_check_every"),
    };
    let runs = metropolis_chains(&h, n, &opts, exp.int("chains"), ctx.serial)?;
    let mut chains = String::from("chain,seed,acceptance,final_step,samples,max_energy_drift\n");
    let tol = exp.float("drift_tolerance");
    let mut drift: f64 = 0.0;
    for (i, r) in runs.iter().enumerate() {
        drift = drift.max(r.max_energy_drift);
        let _ = writeln!(
            chains,
            "{i},{},{},{},{},{}",
            split_seed(exp.seed, i as u64),
            r.acceptance,
            r.state.step,
            r.samples.len(),
            r.max_energy_drift
        );
    }
    out.file("chains.csv", chains);
    let samples = pooled_samples(&runs);
    let rho = laughlin_density(b, ell);
    let mut half = exp.float("grid_half_width");
    if half <= 0.0 {
        half = 1.3 * (n as f64 / (PI * rho)).sqrt();
    }
    let grid = Grid::square(Point::ORIGIN, half, exp.float("grid_h"))?;
    let est = density_estimate(&samples, &grid, 1)?;
    let mut csv = String::new();
    let _ = writeln!(csv, "origin,{},{}", grid.origin().x, grid.origin().y);
    let _ = writeln!(csv, "h,{}", grid.h());
    let _ = writeln!(csv, "n,{},{}", grid.nx(), grid.ny());
    csv.push_str("i,j,x,y,value,std_error\n");
    for (k, p) in grid.centers() {
        let (i, j) = grid.coords(k);
        let _ = writeln!(
            csv,
            "{i},{j},{},{},{},{}",
            p.x, p.y, est.values[k], est.std_errors[k]
        );
    }
    out.file("density.csv", csv);
    if exp.flag("write_samples") {
        let recs: Vec<ConfigurationRecord> = samples
            .iter()
            .map(|s| PointConfiguration::new(s.clone()).map(|c| ConfigurationRecord::new(c, &h)))
            .collect::<Result<_>>()?;
        out.file("samples.txt", write_stream(&recs));
    }
    out.check(
        "energy_drift",
        drift <= tol,
        format!("max relative drift {drift:.2e}, tolerance {tol:e}"),
    );
    out.constants.extend([
        ("batches", BATCHES as f64),
        ("min_samples", MIN_SAMPLES as f64),
        ("target_acceptance_low", TARGET_ACCEPTANCE.0),
        ("target_acceptance_high", TARGET_ACCEPTANCE.1),
        ("tune_window_sweeps", TUNE_WINDOW_SWEEPS as f64),
        ("background_density", rho),
    ]);
    Ok(())
}

fn balayage_options(exp: &Experiment) -> Result<BalayageOptions> {
    Ok(BalayageOptions {
        h: exp.float("h"),
        padding: exp.float("padding"),
        psor: psor_options(exp)?,
        theta: exp.float("theta"),
        max_enlargements: exp.int("max_enlargements"),
        coarsest_cells: exp.int("coarsest_cells"),
    })
}

fn balayage(exp: &Experiment, out: &mut Outputs) -> Result<()> {
    let cfg = configuration(exp.points("points"))?;
    let sol = partial_balayage(&cfg, &balayage_options(exp)?)?;
    out.file("phi.csv", field_csv(&sol.phi));
    out.file("fill.csv", field_csv(&sol.fill));
    out.file("sigma.csv", field_csv(&sol.sigma));
    let mut boundary = Vec::new();
    sol.write_boundary_csv(&mut boundary)
        .expect("writing to memory");
    out.file(
        "boundary.csv",
        String::from_utf8(boundary).expect("csv is utf-8"),
    );
    let mut summary = String::from("quantity,value\n");
    let k = cfg.total_charge() as f64;
    for (name, v) in [
        ("total_charge", k),
        ("area", sol.area),
        ("support_radius", sol.support_radius),
        ("residual", sol.residual),
        ("sweeps", sol.iterations as f64),
        ("enlargements", sol.enlargements as f64),
        ("exterior_ratio", sol.exterior_ratio(2)),
    ] {
        let _ = writeln!(summary, "{name},{v}");
    }
    out.file("summary.csv", summary);
    out.check(
        "converged",
        sol.converged,
        format!(
            "residual {:.2e} after {} sweeps",
            sol.residual, sol.iterations
        ),
    );
    let tol = exp.float("mass_tolerance");
    out.check(
        "mass_law",
        (sol.area - k).abs() <= tol * k,
        format!("area {:.5} vs total charge {k}", sol.area),
    );
    out.constants
        .push(("charge_radius_cells", CHARGE_RADIUS_CELLS));
    Ok(())
}

fn exclusion(exp: &Experiment, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let n = exp.int("n");
    let h = PlasmaHamiltonian::jellium(Vec::new())?;
    let m = minimize(&h, n, &minimize_options(exp, exp.seed, ctx.serial))?;
    out.file(
        "minimizer.txt",
        write_configuration(&ConfigurationRecord::new(m.config.clone(), &h)),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(exp.seed, 1));
    let subsets: Vec<Vec<usize>> = (0..exp.int("subsets"))
        .map(|_| {
            let size = rng.random_range(1..n.max(2));
            let mut idx: Vec<usize> = (0..n).collect();
            for i in 0..size {
                let j = rng.random_range(i..n);
                idx.swap(i, j);
            }
            let mut s = idx[..size].to_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let opts = BalayageOptions {
        h: exp.float("h"),
        ..BalayageOptions::default()
    };
    let reports = map_tasks(subsets.len(), ctx.serial, |i| {
        exclusion_check(&m.config, &subsets[i], &opts)
    });
    let mut csv = String::from("subset,size,area,converged,violations\n");
    let mut total = 0;
    for (i, r) in reports.into_iter().enumerate() {
        let r = r?;
        total += r.violations.len();
        let v: Vec<String> = r.violations.iter().map(usize::to_string).collect();
        let _ = writeln!(
            csv,
            "{i},{},{},{},{}",
            subsets[i].len(),
            r.subset_area,
            r.converged,
            v.join(" ")
        );
    }
    out.file("exclusion.csv", csv);
    out.check(
        "minimizer_converged",
        m.converged,
        format!("energy {}", m.energy),
    );
    out.check(
        "exclusion",
        total == 0,
        format!("{total} violations over {} subsets", subsets.len()),
    );
    out.constants
        .push(("charge_radius_cells", CHARGE_RADIUS_CELLS));
    Ok(())
}

fn meanfield(exp: &Experiment, out: &mut Outputs) -> Result<()> {
    let v = potential(exp)?;
    let grid = Grid::square(Point::ORIGIN, exp.float("half_width"), exp.float("h"))?;
    let opts = EquilibriumOptions {
        psor: psor_options(exp)?,
        mass_tolerance: exp.float("mass_tolerance"),
        max_outer: exp.int("max_outer"),
        boundary_tolerance: exp.float("boundary_tolerance"),
        max_boundary_updates: exp.int("max_boundary_updates"),
    };
    let sol = meanfield_equilibrium(&v, grid, &opts)?;
    out.file("density.csv", field_csv(&sol.density));
    let mut summary = String::from("quantity,value\n");
    for (name, x) in [
        ("mass", sol.mass),
        ("constant", sol.constant),
        ("support_area", sol.support_area),
        ("residual", sol.residual),
        ("sweeps", sol.sweeps as f64),
    ] {
        let _ = writeln!(summary, "{name},{x}");
    }
    out.file("summary.csv", summary);
    out.check(
        "converged",
        sol.converged,
        format!("residual {:.2e}", sol.residual),
    );
    out.check(
        "unit_mass",
        (sol.mass - 1.0).abs() <= 10.0 * opts.mass_tolerance,
        format!("mass {}", sol.mass),
    );
    Ok(())
}

fn flocking(exp: &Experiment, out: &mut Outputs) -> Result<()> {
    let grid = Grid::square(Point::ORIGIN, exp.float("half_width"), exp.float("h"))?;
    let v = ScalarField::from_fn(grid, potential(exp)?)?;
    let rho_max = exp.float("rho_max");
    let problem = FlockingProblem {
        v,
        w: Interaction::gaussian(exp.float("amplitude"), exp.float("width"))?,
        lambda: exp.float("lambda"),
        rho_max,
        mass: exp.float("mass"),
    };
    let opts = FlockingOptions {
        max_iterations: exp.int("max_iterations"),
        tolerance: exp.float("tolerance"),
        armijo: exp.float("armijo"),
    };
    let sol = flocking_solve(&problem, &opts)?;
    out.file("density.csv", field_csv(&sol.density));
    let mut trace = String::from("step,energy\n");
    for (i, e) in sol.energy_trace.iter().enumerate() {
        let _ = writeln!(trace, "{i},{e}");
    }
    out.file("trace.csv", trace);
    let mut summary = String::from("quantity,value\n");
    for (name, x) in [
        ("energy", sol.energy),
        ("kkt_residual", sol.kkt_residual),
        ("iterations", sol.iterations as f64),
        ("support_area", sol.support_area()),
        ("saturation_fraction", sol.saturation_fraction(rho_max)),
    ] {
        let _ = writeln!(summary, "{name},{x}");
    }
    out.file("summary.csv", summary);
    out.check(
        "converged",
        sol.converged,
        format!("KKT residual {:.2e}", sol.kkt_residual),
    );
    Ok(())
}

fn thermo_scan(exp: &Experiment, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let opts = minimize_options(exp, exp.seed, ctx.serial);
    let shapes: &[(&str, bool)] = match exp.choice("shape") {
        "square" => &[("square", false)],
        "disk" => &[("disk", true)],
        _ => &[("square", false), ("disk", true)],
    };
    let mut csv = String::from("shape,side,n,min_energy,self_energy,energy_per_area,converged\n");
    let mut all = true;
    for &(name, disk) in shapes {
        for p in energy_per_volume_scan(exp.float("density"), exp.floats("sides"), disk, &opts)? {
            all &= p.converged;
            let _ = writeln!(
                csv,
                "{name},{},{},{},{},{},{}",
                p.side, p.n, p.min_energy, p.self_energy, p.energy_per_area, p.converged
            );
        }
    }
    out.file("scan.csv", csv);
    out.check("converged", all, "every box minimizer converged");
    Ok(())
}

fn renorm_energy(exp: &Experiment, out: &mut Outputs) -> Result<()> {
    let origin = single_point(exp, "origin")?;
    let side = exp.float("side");
    let lattice = exp.int("lattice");
    let points: Vec<Point> = if lattice > 0 {
        let a = side / lattice as f64;
        (0..lattice * lattice)
            .map(|k| {
                origin
                    + Point::new(
                        ((k % lattice) as f64 + 0.5) * a,
                        ((k / lattice) as f64 + 0.5) * a,
                    )
            })
            .collect()
    } else {
        let cfg = configuration(exp.points("points"))?;
        cfg.iter()
            .flat_map(|(p, m)| std::iter::repeat_n(p, m as usize))
            .collect()
    };
    let shape = match exp.choice("profile") {
        "disk" => ProfileShape::Disk,
        _ => ProfileShape::Tent,
    };
    let mut csv = String::from("eta,h,value,mean_field_energy,counter_term,overlap_warning\n");
    let mut overlap = false;
    for &eta in exp.floats("etas") {
        let opts = RenormOptions {
            origin,
            side,
            profile: SmearingProfile::new(shape, eta)?,
            cells_per_eta: exp.float("cells_per_eta"),
        };
        let e = renormalized_energy_estimate(&points, exp.float("background"), &opts)?;
        overlap |= e.overlap_warning;
        let _ = writeln!(
            csv,
            "{eta},{},{},{},{},{}",
            e.h, e.value, e.mean_field_energy, e.counter_term, e.overlap_warning
        );
    }
    out.file("estimates.csv", csv);
    out.check(
        "no_overlap",
        !overlap,
        "smearing disks of distinct charges stay disjoint",
    );
    Ok(())
}

fn verify_all(exp: &Experiment, ctx: &RunContext, out: &mut Outputs) -> Result<()> {
    let mut ids = Vec::new();
    for &x in exp.floats("criteria") {
        if x.fract() != 0.0 || !(1.0..=15.0).contains(&x) {
            return Err(Error::Domain(format!(
                "criteria are integers 1 to 15, got {x}"
            )));
        }
        ids.push(x as u32);
    }
    let mut v = Verifier::new(VerifyOptions {
        seed: exp.seed,
        serial: ctx.serial,
    });
    let mut report = String::new();
    let mut csv = String::from("id,name,status,detail\n");
    let mut metrics = String::from("id,metric,value\n");
    for id in ids {
        let c = v.run(id);
        if ctx.verbose {
            eprintln!("{} ({:.1} s)", c.line(), c.elapsed.as_secs_f64());
        }
        let _ = writeln!(report, "{}", c.line());
        let _ = writeln!(
            csv,
            "{},{},{},\"{}\"",
            c.id,
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail.replace('"', "\"\"")
        );
        for (k, x) in &c.metrics {
            let _ = writeln!(metrics, "{},{k},{x}", c.id);
        }
        out.check(
            format!("criterion {} {}", c.id, c.name),
            c.passed,
            c.detail.clone(),
        );
    }
    out.file("report.txt", report);
    out.file("report.csv", csv);
    out.file("metrics.csv", metrics);
    out.constants.extend([
        ("separation_margin", SEPARATION_DELTA),
        ("charge_radius_cells", CHARGE_RADIUS_CELLS),
        ("batches", BATCHES as f64),
        ("bootstrap_replicates", BOOTSTRAP_REPLICATES as f64),
        ("min_samples", MIN_SAMPLES as f64),
    ]);
    Ok(())
}
