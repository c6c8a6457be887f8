//! Per-experiment key schemas, typed values and validation.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::config::{parse_error, ConfigFile, Entry};
use crate::error::Result;
use crate::geometry::Point;

pub const KINDS: [&str; 9] = [
    "ground-state",
    "sample",
    "balayage",
    "exclusion",
    "meanfield",
    "flocking",
    "thermo-scan",
    "renorm-energy",
    "verify-all",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueType {
    Int,
    Float,
    Bool,
    /// Whitespace-separated numbers.
    FloatList,
    /// `x y [w]; x y [w]; ...` with the third column defaulting to `third`.
    PointList {
        third: f64,
    },
    Choice(&'static [&'static str]),
}

impl ValueType {
    fn describe(&self) -> String {
        match self {
            ValueType::Int => "integer".into(),
            ValueType::Float => "float".into(),
            ValueType::Bool => "bool".into(),
            ValueType::FloatList => "float list".into(),
            ValueType::PointList { .. } => "point list 'x y [w]; ...'".into(),
            ValueType::Choice(opts) => format!("one of {}", opts.join("|")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeySpec {
    pub key: &'static str,
    pub ty: ValueType,
    pub unit: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn key(
    key: &'static str,
    ty: ValueType,
    unit: &'static str,
    default: &'static str,
    doc: &'static str,
) -> KeySpec {
    KeySpec {
        key,
        ty,
        unit,
        default,
        doc,
    }
}

use ValueType::*;

const HOLES: KeySpec = key(
    "holes",
    PointList { third: 2.0 },
    "length",
    "",
    "quasi-hole positions and coefficients 'x y c; ...' (c defaults to 2)",
);
const MINIMIZER: [KeySpec; 5] = [
    key("multistart", Int, "", "8", "independent random starts"),
    key(
        "max_iterations",
        Int,
        "",
        "50000",
        "gradient steps per start",
    ),
    key(
        "tolerance",
        Float,
        "",
        "1e-8",
        "stop when |grad| <= tolerance * max(1, |E|)",
    ),
    key(
        "armijo",
        Float,
        "",
        "1e-4",
        "sufficient-decrease constant of the line search",
    ),
    key(
        "max_displacement",
        Float,
        "length",
        "0.5",
        "largest single-point move of a trial step",
    ),
];
const PSOR: [KeySpec; 4] = [
    key("omega", Float, "", "1.9", "PSOR over-relaxation factor"),
    key("max_sweeps", Int, "", "200000", "PSOR sweep limit"),
    key(
        "order",
        Choice(&["red-black", "lexicographic", "reverse-lexicographic"]),
        "",
        "red-black",
        "PSOR sweep order",
    ),
    key(
        "check_every",
        Int,
        "",
        "10",
        "sweeps between residual evaluations",
    ),
];

/// The `[run]` section shared by every config file.
pub const RUN_KEYS: [KeySpec; 2] = [
    key("kind", Choice(&KINDS), "", "", "experiment kind"),
    key(
        "seed",
        Int,
        "",
        "20240917",
        "base seed; --seed overrides it",
    ),
];

pub fn schema(kind: &str) -> Option<Vec<KeySpec>> {
    let mut keys = match kind {
        "ground-state" => {
            let mut k = vec![
                key("n", Int, "", "16", "number of charges"),
                key("beta", Float, "", "1.5707963267948966", "confinement strength of the one-body term beta|x|^2"),
                key("g", Float, "", "1", "pair coupling"),
                HOLES,
                key("check_separation", Bool, "", "false", "assert the bulk separation bound"),
                key("separation_threshold", Float, "length", "0.5341895835477563", "minimal accepted bulk nearest-neighbor distance"),
            ];
            k.extend(MINIMIZER);
            k
        }
        "sample" => vec![
            key("n", Int, "", "64", "number of charges"),
            key("b", Float, "1/length^2", "1", "magnetic field strength"),
            key("ell", Int, "", "1", "Laughlin exponent"),
            HOLES,
            key("temperature", Float, "", "1", "Metropolis temperature T"),
            key("sweeps", Int, "", "2000", "sweeps of N moves per chain, burn-in included"),
            key("burn_in", Float, "fraction", "0.2", "fraction of sweeps discarded"),
            key("thinning", Int, "moves", "0", "moves between recorded samples; 0 means N"),
            key("chains", Int, "", "4", "independent chains"),
            key("initial_step", Float, "length", "0.5", "initial Gaussian proposal width"),
            key("energy_check_every", Int, "sweeps", "100", "sweeps between full energy rechecks"),
            key("drift_tolerance", Float, "", "1e-8", "accepted relative drift of the incremental energy"),
            key("grid_half_width", Float, "length", "0", "density grid half width; 0 picks 1.3 droplet radii"),
            key("grid_h", Float, "length", "0.25", "density grid spacing"),
            key("write_samples", Bool, "", "false", "also write every recorded sample"),
        ],
        "balayage" => {
            let mut k = vec![
                key("points", PointList { third: 1.0 }, "length", "0 0", "charges 'x y [multiplicity]; ...'"),
                key("h", Float, "length", "0.02", "grid spacing"),
                key("padding", Float, "length", "0.25", "box padding beyond the estimated support"),
                key("psor_tolerance", Float, "", "1e-10", "relative complementarity tolerance"),
                key("theta", Float, "", "0.5", "fill-fraction threshold of the region indicator"),
                key("max_enlargements", Int, "", "3", "box enlargements when the region nears the wall"),
                key("coarsest_cells", Int, "", "32", "cells per side of the coarsest initialization grid"),
                key("mass_tolerance", Float, "fraction", "0.01", "accepted relative error of area against total charge"),
            ];
            k.extend(PSOR);
            k
        }
        "exclusion" => {
            let mut k = vec![
                key("n", Int, "", "64", "size of the jellium minimizer"),
                key("subsets", Int, "", "50", "random subsets checked"),
                key("h", Float, "length", "0.04", "balayage grid spacing"),
            ];
            k.extend(MINIMIZER);
            k
        }
        "meanfield" => {
            let mut k = vec![
                key("potential", Choice(&["quadratic", "quartic"]), "", "quadratic", "v = strength|x - c|^2 or strength|x - c|^4"),
                key("strength", Float, "", "0.25", "prefactor of v"),
                key("center", PointList { third: 0.0 }, "length", "0 0", "center c of v"),
                key("half_width", Float, "length", "2.4", "grid half width"),
                key("h", Float, "length", "0.04", "grid spacing"),
                key("psor_tolerance", Float, "", "1e-9", "relative complementarity tolerance"),
                key("mass_tolerance", Float, "", "1e-6", "relative mass tolerance of the Lagrange constant search"),
                key("max_outer", Int, "", "80", "Lagrange constant iterations"),
                key("boundary_tolerance", Float, "", "1e-5", "boundary data refresh tolerance"),
                key("max_boundary_updates", Int, "", "20", "boundary data refresh limit"),
            ];
            k.extend(PSOR);
            k
        }
        "flocking" => vec![
            key("potential", Choice(&["quadratic", "quartic"]), "", "quadratic", "v = strength|x - c|^2 or strength|x - c|^4"),
            key("strength", Float, "", "1", "prefactor of v"),
            key("center", PointList { third: 0.0 }, "length", "0.013 0.007", "center c of v"),
            key("half_width", Float, "length", "6", "grid half width"),
            key("h", Float, "length", "0.1", "grid spacing"),
            key("amplitude", Float, "", "1", "Gaussian interaction amplitude"),
            key("width", Float, "length", "1", "Gaussian interaction width"),
            key("lambda", Float, "", "0.05", "interaction strength"),
            key("rho_max", Float, "1/length^2", "0.15915494309189535", "density cap"),
            key("mass", Float, "", "10", "total mass"),
            key("max_iterations", Int, "", "20000", "projected gradient iterations"),
            key("tolerance", Float, "", "1e-6", "KKT residual tolerance"),
            key("armijo", Float, "", "1e-4", "sufficient-decrease constant"),
        ],
        "thermo-scan" => {
            let mut k = vec![
                key("density", Float, "1/length^2", "1", "background density"),
                key("sides", FloatList, "length", "4 8 16", "box sides L"),
                key("shape", Choice(&["square", "disk", "both"]), "", "both", "container shapes"),
            ];
            k.extend(MINIMIZER);
            k
        }
        "renorm-energy" => vec![
            key("points", PointList { third: 1.0 }, "length", "", "charges 'x y [multiplicity]; ...'"),
            key("lattice", Int, "", "10", "if positive, use the lattice x lattice square lattice filling the box instead of points"),
            key("background", Float, "1/length^2", "1", "background density"),
            key("origin", PointList { third: 0.0 }, "length", "0 0", "lower-left corner of the box"),
            key("side", Float, "length", "10", "box side"),
            key("profile", Choice(&["tent", "disk"]), "", "tent", "smearing profile"),
            key("etas", FloatList, "length", "0.4 0.2 0.1", "smearing radii"),
            key("cells_per_eta", Float, "", "4", "grid cells per smearing radius"),
        ],
        "verify-all" => vec![key(
            "criteria",
            FloatList,
            "",
            "1 2 3 4 5 6 7 8 9 10 11 12 13 14 15",
            "acceptance checks to run",
        )],
        _ => return None,
    };
    keys.sort_by_key(|k| k.key);
    Some(keys)
}

pub fn describe(kind: &str) -> Option<String> {
    let keys = schema(kind)?;
    let mut s = String::new();
    let _ = writeln!(s, "[run]");
    for k in &RUN_KEYS {
        let _ = writeln!(
            s,
            "  {:<22} {:<28} default {:?}  {}",
            k.key,
            k.ty.describe(),
            k.default,
            k.doc
        );
    }
    let _ = writeln!(s, "[{kind}]");
    for k in &keys {
        let unit = if k.unit.is_empty() {
            String::new()
        } else {
            format!(" [{}]", k.unit)
        };
        let _ = writeln!(
            s,
            "  {:<22} {:<28} default {:?}{}  {}",
            k.key,
            k.ty.describe(),
            k.default,
            unit,
            k.doc
        );
    }
    Some(s)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    Bool(bool),
    FloatList(Vec<f64>),
    Points(Vec<(Point, f64)>),
    Choice(String),
}

fn parse_value(ty: ValueType, text: &str) -> std::result::Result<Value, String> {
    let t = text.trim();
    let float = |w: &str| -> std::result::Result<f64, String> {
        match w.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(format!("expected a finite number, got '{w}'")),
        }
    };
    Ok(match ty {
        Int => Value::Int(
            t.parse()
                .map_err(|_| format!("expected a non-negative integer, got '{t}'"))?,
        ),
        Float => Value::Float(float(t)?),
        Bool => match t {
            "true" | "yes" | "1" => Value::Bool(true),
            "false" | "no" | "0" => Value::Bool(false),
            _ => return Err(format!("expected true or false, got '{t}'")),
        },
        FloatList => Value::FloatList(
            t.split_whitespace()
                .map(float)
                .collect::<std::result::Result<_, _>>()?,
        ),
        PointList { third } => {
            let mut out = Vec::new();
            for item in t.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let w: Vec<&str> = item.split_whitespace().collect();
                if !(2..=3).contains(&w.len()) {
                    return Err(format!("expected 'x y' or 'x y w', got '{item}'"));
                }
                let p = Point::new(float(w[0])?, float(w[1])?);
                let z = if w.len() == 3 { float(w[2])? } else { third };
                out.push((p, z));
            }
            Value::Points(out)
        }
        Choice(opts) => {
            if !opts.contains(&t) {
                return Err(format!("expected one of {}, got '{t}'", opts.join("|")));
            }
            Value::Choice(t.to_string())
        }
    })
}

/// A validated experiment: every schema key resolved to a typed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub kind: String,
    pub seed: u64,
    pub values: BTreeMap<&'static str, Value>,
    /// Resolved values as text, for the manifest.
    pub raw: BTreeMap<&'static str, String>,
}

impl Experiment {
    fn value(&self, k: &str) -> &Value {
        self.values
            .get(k)
            .unwrap_or_else(|| panic!("key '{k}' missing from the {} schema", self.kind))
    }
    pub fn int(&self, k: &str) -> usize {
        match self.value(k) {
            Value::Int(v) => *v as usize,
            v => panic!("key '{k}' is {v:?}, not an integer"),
        }
    }
    pub fn float(&self, k: &str) -> f64 {
        match self.value(k) {
            Value::Float(v) => *v,
            v => panic!("key '{k}' is {v:?}, not a float"),
        }
    }
    pub fn flag(&self, k: &str) -> bool {
        match self.value(k) {
            Value::Bool(v) => *v,
            v => panic!("key '{k}' is {v:?}, not a bool"),
        }
    }
    pub fn floats(&self, k: &str) -> &[f64] {
        match self.value(k) {
            Value::FloatList(v) => v,
            v => panic!("key '{k}' is {v:?}, not a float list"),
        }
    }
    pub fn points(&self, k: &str) -> &[(Point, f64)] {
        match self.value(k) {
            Value::Points(v) => v,
            v => panic!("key '{k}' is {v:?}, not a point list"),
        }
    }
    pub fn choice(&self, k: &str) -> &str {
        match self.value(k) {
            Value::Choice(v) => v,
            v => panic!("key '{k}' is {v:?}, not a choice"),
        }
    }
}

fn resolve_entry(spec: &KeySpec, entry: Option<&Entry>) -> Result<Value> {
    match entry {
        Some(e) => parse_value(spec.ty, &e.value)
            .or_else(|m| parse_error(e.line, e.value_column, format!("{}: {m}", spec.key))),
        None => Ok(parse_value(spec.ty, spec.default).expect("schema defaults parse")),
    }
}

/// Checks sections and keys against the schemas and fills in defaults.
pub fn validate(cfg: &ConfigFile) -> Result<Experiment> {
    let Some(run) = cfg.section("run") else {
        return parse_error(1, 1, "missing [run] section");
    };
    let Some(kind_entry) = run.get("kind") else {
        return parse_error(run.line, 1, "missing 'kind' in [run]");
    };
    let kind = kind_entry.value.clone();
    let Some(keys) = schema(&kind) else {
        return parse_error(
            kind_entry.line,
            kind_entry.value_column,
            format!("unknown experiment kind '{kind}'"),
        );
    };
    for e in &run.entries {
        if !RUN_KEYS.iter().any(|k| k.key == e.key) {
            return parse_error(
                e.line,
                e.key_column,
                format!("unknown key '{}' in [run]", e.key),
            );
        }
    }
    let seed = match resolve_entry(&RUN_KEYS[1], run.get("seed"))? {
        Value::Int(s) => s,
        _ => unreachable!("seed is an integer key"),
    };
    for s in &cfg.sections {
        if s.name != "run" && s.name != kind {
            return parse_error(
                s.line,
                2,
                format!("section [{}] does not belong to a {kind} run", s.name),
            );
        }
    }
    let section = cfg.section(&kind);
    if let Some(s) = section {
        for e in &s.entries {
            if !keys.iter().any(|k| k.key == e.key) {
                return parse_error(
                    e.line,
                    e.key_column,
                    format!("unknown key '{}' in [{kind}]", e.key),
                );
            }
        }
    }
    let mut values = BTreeMap::new();
    let mut raw = BTreeMap::new();
    for spec in &keys {
        let entry = section.and_then(|s| s.get(spec.key));
        values.insert(spec.key, resolve_entry(spec, entry)?);
        raw.insert(
            spec.key,
            entry.map_or(spec.default.to_string(), |e| e.value.clone()),
        );
    }
    Ok(Experiment {
        kind,
        seed,
        values,
        raw,
    })
}
