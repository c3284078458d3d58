use crate::report::Outcome;
use crate::*;
use num_rational::BigRational;
use popdiff::analysis::{
    abstract_atom_distribution, gowers_norm, linear_quadratic_distribution, pattern_count,
    pattern_tuple_distribution, popular_search, Backend, GowersMode,
};
use popdiff::counterexample::{
    ap3_free_set, cex_report, core_expectation_table, dress_and_measure, dressed_function,
    eight_tuple_distribution, final_assembly, hypergraph_expectations, Ap3Method, CexCore,
    DressingParams, Hypergraphon,
};
use popdiff::ffalg::{FpMatrix, PrimeField};
use popdiff::gridfn::{fn_read, fn_write, read_from, write_to, GridFunction, GridShape, Rational};
use popdiff::patterns::{check_admissible, check_spectral, constraint_spaces, PatternSpec};
use popdiff::threept::{
    bohr_set, derived_bohr, exp2_growth, lift_to_interval, popular_3pt_search,
    regularity_decompose, smoothed_3pt_count, CountMethod, Group, ThreePointSpec,
};
use popdiff::{Error, Guard, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn outcome(name: &str, result: Value, ok: bool) -> Result<Outcome> {
    Ok(Outcome {
        name: name.to_string(),
        result,
        ok,
    })
}

/// Inline JSON if it looks like JSON, otherwise a path to read.
fn text_or_file(s: &str) -> Result<String> {
    let t = s.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(s.to_string())
    } else {
        Ok(std::fs::read_to_string(s)?)
    }
}

fn parse_json<T: for<'de> serde::Deserialize<'de>>(s: &str) -> Result<T> {
    Ok(serde_json::from_str(&text_or_file(s)?)?)
}

/// "3/10", "0.3" or "1" as an exact rational.
fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Invalid(format!("cannot read {s:?} as a rational"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if b == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let neg = int.starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.abs() * den + frac;
        return Ok(Rational::new(if neg { -num } else { num }, den));
    }
    Ok(Rational::from_integer(s.parse().map_err(|_| bad())?))
}

fn backend(g: &Global) -> Backend {
    match g.backend {
        BackendArg::Exact => Backend::Exact,
        BackendArg::Float => Backend::Float,
    }
}

fn load_fn(path: &std::path::Path, g: &Global) -> Result<GridFunction> {
    let f = fn_read(path)?;
    match g.backend {
        BackendArg::Exact => Ok(f),
        BackendArg::Float if f.rational_values().is_some() => f.to_float(),
        BackendArg::Float => Ok(f),
    }
}

fn pattern_spec(s: &str) -> Result<PatternSpec> {
    PatternSpec::from_json(&text_or_file(s)?)
}

fn unit(n: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0u32; n];
    v[i] = 1;
    v
}

fn method(s: &str) -> Result<Ap3Method> {
    Ap3Method::parse(s).ok_or_else(|| Error::Invalid(format!("unknown method {s}")))
}

fn seed_list(start: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| start.wrapping_add(i)).collect()
}

fn rat_json(q: &BigRational) -> Value {
    json!(popdiff::gridfn::rational_string(q))
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    let guard = Guard::new(g.guard);
    match &cli.command {
        Command::Check { spec } => {
            let spec = pattern_spec(spec)?;
            let admissible = check_admissible(&spec)?;
            let (spectral, j) = if spec.m1().is_invertible() {
                (Some(check_spectral(&spec)?), Some(spec.j()?.to_i64_rows()))
            } else {
                (None, None)
            };
            outcome(
                "check",
                json!({
                    "p": spec.p(),
                    "k": spec.k(),
                    "admissible": admissible,
                    "spectral": spectral,
                    "J": j,
                }),
                true,
            )
        }
        Command::Subspaces { spec } => {
            let spec = pattern_spec(spec)?;
            let j = spec.j()?;
            let cs = constraint_spaces(&j)?;
            outcome(
                "subspaces",
                json!({
                    "J": j.to_i64_rows(),
                    "dims": {
                        "xi": cs.xi.dim(),
                        "lambda": cs.lambda.dim(),
                        "lambda_prime": cs.lambda_prime.dim(),
                        "psi": cs.psi.dim(),
                        "omega": cs.omega.dim(),
                        "omega_prime": cs.omega_prime.dim(),
                    },
                    "spaces": serde_json::to_value(&cs)?,
                }),
                true,
            )
        }
        Command::Count { spec, func, d, points } => {
            let spec = pattern_spec(spec)?;
            let f = load_fn(func, g)?;
            let shape = f.shape();
            let rows: Vec<Vec<i64>> = parse_json(d)?;
            let dm = FpMatrix::from_rows(shape.field(), &rows)?;
            let point = shape.decode(shape.encode(&dm)?);
            let v = pattern_count(&f, &spec, &point, *points, backend(g))?;
            outcome(
                "count",
                json!({"points": points, "d": point.x.to_i64_rows(), "value": v.to_json(), "value_f64": v.to_f64()}),
                true,
            )
        }
        Command::Popular { spec, func, eps, points } => {
            let spec = pattern_spec(spec)?;
            let f = load_fn(func, g)?;
            let r = popular_search(&f, &spec, *eps, *points, backend(g), &guard)?;
            outcome("popular", r.to_json(&f.shape()), true)
        }
        Command::Gowers { func, s, mode } => {
            let f = fn_read(func)?;
            let m = match mode {
                GowersArg::Direct => GowersMode::Direct,
                GowersArg::Recursive => GowersMode::Recursive,
            };
            let v = gowers_norm(&f, *s, m, &guard)?;
            outcome("gowers", json!({"s": s, "norm": v}), true)
        }
        Command::Equidist { factor, kind, spec, restrict_h, k } => {
            let factor = popdiff::gridfn::QuadraticFactor::from_json(&text_or_file(factor)?)?;
            let r = match kind {
                EquidistKind::LinearQuadratic => linear_quadratic_distribution(
                    factor.field(),
                    factor.n(),
                    factor.linear(),
                    factor.sym(),
                    &guard,
                )?,
                EquidistKind::Tuple => {
                    let spec = spec
                        .as_deref()
                        .ok_or_else(|| Error::Invalid("--spec is required for tuple".into()))?;
                    let j = pattern_spec(spec)?.j()?;
                    pattern_tuple_distribution(&factor, &j, *restrict_h, &guard)?
                }
                EquidistKind::Atoms => abstract_atom_distribution(&factor, *k, &guard)?,
            };
            let ok = r.support_ok;
            outcome("equidist", r.to_json(), ok)
        }
        Command::Cex { cmd } => cex(cmd, g, &guard),
        Command::Threept { cmd } => threept(cmd, g, &guard),
        Command::Fnio { cmd } => fnio(cmd, g),
    }
}

fn cex(cmd: &CexCmd, g: &Global, guard: &Guard) -> Result<Outcome> {
    let core = CexCore::new();
    match cmd {
        CexCmd::Core => {
            let t = core_expectation_table(&core);
            let mut v = t.to_json();
            v["strict"] = json!(t.below_alpha4);
            outcome("cex core", v, t.below_alpha4)
        }
        CexCmd::EightTuple { n, a, b } => {
            if *n < 2 {
                return Err(Error::Invalid("need n ≥ 2".into()));
            }
            let a: Vec<u32> = match a {
                Some(s) => parse_json(s)?,
                None => unit(*n, 0),
            };
            let b: Vec<u32> = match b {
                Some(s) => parse_json(s)?,
                None => unit(*n, 1),
            };
            let r = eight_tuple_distribution(&a, &b, guard)?;
            let ok = r.support_ok;
            let mut v = r.to_json();
            v["a"] = json!(a);
            v["b"] = json!(b);
            outcome("cex eight-tuple", v, ok)
        }
        CexCmd::Hypergraph { l, method: m } => {
            let lambda = ap3_free_set(*l, method(m)?)?;
            let h = Hypergraphon::new(*l, lambda)?;
            let r = hypergraph_expectations(&h, guard)?;
            let ok = r.pattern_a_ok() && r.pattern_b_ok() && r.unique_triangles;
            outcome("cex hypergraph", r.to_json(), ok)
        }
        CexCmd::Dress { n, l, seeds, method: m } => {
            let h = Hypergraphon::new(*l, ap3_free_set(*l, method(m)?)?)?;
            let mut minus = unit(*n, 0);
            minus[0] = 4;
            // b = a, b = −a and a generic pair.
            let diffs = vec![
                (unit(*n, 0), unit(*n, 1)),
                (unit(*n, 0), unit(*n, 0)),
                (unit(*n, 0), minus),
            ];
            let r = dress_and_measure(&core, &h, *n, &seed_list(g.seed, *seeds), &diffs, guard)?;
            outcome("cex dress", r.to_json(), true)
        }
        CexCmd::Assemble { n, l, gamma, seeds } => {
            let lambda = ap3_free_set(*l, if *l <= 30 { Ap3Method::ExhaustiveMax } else { Ap3Method::Behrend })?;
            let h = Hypergraphon::new(*l, lambda)?;
            let hf = dressed_function(&core, &h, *n, g.seed, guard)?;
            let diffs = vec![
                (unit(*n, 0), unit(*n, 1)),
                (vec![0; *n], unit(*n, 0)),
                (unit(*n, 0), vec![0; *n]),
            ];
            let r = final_assembly(&hf, *gamma, &seed_list(g.seed ^ 0x5eed, *seeds), &diffs, guard)?;
            let ok = r.four_ap_free && r.exponent_ok;
            outcome("cex assemble", r.to_json(), ok)
        }
        CexCmd::Report { n, l, gamma, seeds } => {
            let params = DressingParams::new(g.seed, *n, *l, *gamma)?;
            let r = cex_report(params, *seeds, guard)?;
            let ok = r.core_ratio < BigRational::from_integer(1.into())
                && r.hypergraph.pattern_a_ok()
                && r.hypergraph.pattern_b_ok()
                && r.four_ap_free
                && r.exponent_ok;
            let mut v = r.to_json();
            v["core_ratio_exact"] = rat_json(&r.core_ratio);
            outcome("cex report", v, ok)
        }
    }
}

fn threept(cmd: &ThreeptCmd, g: &Global, guard: &Guard) -> Result<Outcome> {
    match cmd {
        ThreeptCmd::Bohr { spec, modulus, chars, delta, derived } => {
            let spec = spec
                .as_deref()
                .map(|s| ThreePointSpec::from_json(&text_or_file(s)?))
                .transpose()?;
            let group = match (&spec, modulus) {
                (Some(s), _) => s.group(),
                (None, Some(m)) => Group::cyclic(*m)?,
                (None, None) => return Err(Error::Invalid("give --spec or --modulus".into())),
            };
            let chars: Vec<Vec<u32>> = parse_json(chars)?;
            let b = bohr_set(&group, &chars, parse_rational(delta)?)?;
            let mut v = b.to_json();
            let mut ok = true;
            if *derived {
                let spec = spec
                    .as_ref()
                    .ok_or_else(|| Error::Invalid("--derived needs --spec".into()))?;
                let d = derived_bohr(&b, spec)?;
                ok = d.matches_direct;
                v["derived"] = d.set.to_json();
                v["derived_matches_direct"] = json!(d.matches_direct);
            }
            outcome("threept bohr", v, ok)
        }
        ThreeptCmd::Count { spec, func, chars, delta, method } => {
            let spec = ThreePointSpec::from_json(&text_or_file(spec)?)?;
            let f = load_fn(func, g)?;
            let chars: Vec<Vec<u32>> = parse_json(chars)?;
            let b = bohr_set(&spec.group(), &chars, parse_rational(delta)?)?;
            let run = |m| smoothed_3pt_count(&f, &spec, &b, m, guard);
            let mut v = json!({"bohr_size": b.size(), "spec": spec.to_json()});
            let mut ok = true;
            match method {
                CountArg::Direct => v["direct"] = run(CountMethod::Direct)?.to_json(),
                CountArg::Fourier => v["fourier"] = run(CountMethod::Fourier)?.to_json(),
                CountArg::Both => {
                    let d = run(CountMethod::Direct)?;
                    let h = run(CountMethod::Fourier)?;
                    let diff = (d.to_f64() - h.to_f64()).abs();
                    ok = diff <= 1e-9;
                    v["direct"] = d.to_json();
                    v["fourier"] = h.to_json();
                    v["difference"] = json!(diff);
                    v["agree"] = json!(ok);
                }
            }
            outcome("threept count", v, ok)
        }
        ThreeptCmd::Decompose { func, eps, delta, s0, growth } => {
            let f = load_fn(func, g)?;
            let s0: Vec<Vec<u32>> = parse_json(s0)?;
            let linear = |x: f64| x;
            let w: &dyn Fn(f64) -> f64 = match growth {
                GrowthArg::Exp2 => &exp2_growth,
                GrowthArg::Linear => &linear,
            };
            let d = regularity_decompose(&f, *eps, *delta, &s0, w, w, guard)?;
            let ok = d.contracts.all_hold();
            outcome("threept decompose", d.to_json(), ok)
        }
        ThreeptCmd::Search { spec, func, eps } => {
            let spec = ThreePointSpec::from_json(&text_or_file(spec)?)?;
            let f = load_fn(func, g)?;
            let r = popular_3pt_search(&f, &spec, *eps, backend(g), guard)?;
            let ok = r.threshold_hits > 0;
            outcome("threept search", r.to_json(&f.shape()), ok)
        }
        ThreeptCmd::Lift { n, m1, m2, eps, set, density, set_file } => {
            let m1: Vec<Vec<i64>> = parse_json(m1)?;
            let m2: Vec<Vec<i64>> = parse_json(m2)?;
            let k = m1.len();
            let a: Vec<Vec<u64>> = match set_file {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => box_points(*n, k, *set, *density, g.seed, guard)?,
            };
            let r = lift_to_interval(&a, *n, &m1, &m2, *eps, guard)?;
            let ok = r.audit_ok();
            outcome("threept lift", r.to_json(), ok)
        }
    }
}

fn box_points(n: u64, k: usize, set: SetArg, density: f64, seed: u64, guard: &Guard) -> Result<Vec<Vec<u64>>> {
    guard.check("point set", (n as f64).powi(k as i32))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = (n as usize).pow(k as u32);
    let mut out = Vec::new();
    for mut i in 0..total {
        let mut x = vec![0u64; k];
        for c in x.iter_mut() {
            *c = (i % n as usize) as u64;
            i /= n as usize;
        }
        let keep = match set {
            SetArg::All => true,
            SetArg::Even => x.iter().all(|c| c % 2 == 0),
            SetArg::Random => rng.gen_bool(density.clamp(0.0, 1.0)),
        };
        if keep {
            out.push(x);
        }
    }
    Ok(out)
}

fn random_function(shape: GridShape, kind: FnKind, density: f64, seed: u64) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = shape.len();
    match kind {
        FnKind::Rational => GridFunction::rational(
            shape,
            (0..len).map(|_| Rational::new(rng.gen_range(0..=20), 20)).collect(),
        ),
        FnKind::Indicator => GridFunction::rational(
            shape,
            (0..len)
                .map(|_| Rational::from_integer(rng.gen_bool(density.clamp(0.0, 1.0)) as i64))
                .collect(),
        ),
        FnKind::Float => GridFunction::float(shape, (0..len).map(|_| rng.gen::<f64>()).collect()),
        FnKind::Complex => GridFunction::complex(
            shape,
            (0..len)
                .map(|_| num_complex::Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU))
                .collect(),
        ),
    }
}

fn fnio(cmd: &FnioCmd, g: &Global) -> Result<Outcome> {
    match cmd {
        FnioCmd::Random { p, k, n, kind, density, out } => {
            let shape = GridShape::with_guard(PrimeField::new(*p)?, *k, *n, &Guard::new(g.guard))?;
            let f = random_function(shape, *kind, *density, g.seed)?;
            fn_write(&f, out)?;
            outcome(
                "fnio random",
                json!({"path": out, "len": f.len(), "kind": f.kind().name()}),
                true,
            )
        }
        FnioCmd::Roundtrip { func } => {
            let bytes = std::fs::read(func)?;
            let f = read_from(&bytes[..])?;
            let mut again = Vec::new();
            write_to(&f, &mut again)?;
            let g2 = read_from(&again[..])?;
            let same_value = f == g2;
            let same_bytes = again == bytes;
            outcome(
                "fnio roundtrip",
                json!({"len": f.len(), "kind": f.kind().name(), "values_equal": same_value, "bytes_equal": same_bytes}),
                same_value && same_bytes,
            )
        }
        FnioCmd::Info { func } => {
            let f = fn_read(func)?;
            let s = f.shape();
            let mean = match f.kind() {
                popdiff::gridfn::ValueKind::Complex => {
                    let m = f.mean_complex();
                    json!([m.re, m.im])
                }
                _ => json!(f.mean_f64()),
            };
            outcome(
                "fnio info",
                json!({"p": s.p(), "k": s.k(), "n": s.n(), "len": f.len(), "kind": f.kind().name(), "mean": mean}),
                true,
            )
        }
    }
}
