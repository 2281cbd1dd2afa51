use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use vornav::cvpp::{self, phase_c_constant, PreprocessedLattice, SolverOptions};
use vornav::io;
use vornav::lattice::{random_rational_basis, LatticeBasis, LatticePoint, DEFAULT_ENUM_CAP};
use vornav::navigation::{
    deterministic_line, iterative_slicer, mv_walk, randomized_straight_line, PathTrace, RslResult,
};
use vornav::oracle::{cvp_bruteforce, graph_ball, graph_distance_bfs};
use vornav::rational::{self, format_scalar, Scalar};
use vornav::sampling::{SamplerConfig, SamplerMethod, UniformSampler};
use vornav::voronoi::VoronoiCellData;
use vornav::Error;

use crate::args::{
    CrossingsArgs, Format, GenArgs, GenKind, Global, GraphdistArgs, PreprocessArgs, SamplerChoice,
    SolveArgs, Start, Strategy,
};
use crate::manifest::RunManifest;
use crate::{load_basis, load_cell, load_target, output, CliError, CliResult};

/// A flat record whose field order is kept in both CSV and JSON output.
struct Record(Vec<(&'static str, Value)>);

impl Record {
    fn new() -> Self {
        Record(Vec::new())
    }

    fn put(mut self, key: &'static str, value: impl Into<Value>) -> Self {
        self.0.push((key, value.into()));
        self
    }

    fn header(&self) -> Vec<&'static str> {
        self.0.iter().map(|(k, _)| *k).collect()
    }

    fn cells(&self) -> Vec<String> {
        self.0.iter().map(|(_, v)| cell_text(v)).collect()
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.0 {
            m.insert((*k).to_string(), v.clone());
        }
        Value::Object(m)
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell_text).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

fn strings(xs: &[Scalar]) -> Value {
    Value::Array(xs.iter().map(|x| Value::String(format_scalar(x))).collect())
}

fn ints(xs: &[i64]) -> Value {
    json!(xs)
}

fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Record]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    w.flush()?;
    Ok(())
}

fn write_single(g: &Global, record: Record, default: Format) -> CliResult<()> {
    let mut out = output(g)?;
    match g.format.unwrap_or(default) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &record.to_json())?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        Format::Csv => write_csv(out, &record.header(), &[record])?,
    }
    Ok(())
}

fn finish_manifest(g: &Global, manifest: &RunManifest) -> CliResult<()> {
    if let Some(p) = &g.out {
        manifest.write_beside(p)?;
    }
    Ok(())
}

fn millis(d: std::time::Duration) -> f64 {
    d.as_micros() as f64 / 1e3
}

fn check_dim(g: &Global, n: usize) -> CliResult<()> {
    if n > g.dim_cap {
        return Err(Error::DimensionCap { n, cap: g.dim_cap }.into());
    }
    Ok(())
}

pub fn gen(g: &Global, a: &GenArgs) -> CliResult<()> {
    let need_n = || {
        a.n.ok_or_else(|| CliError::Input("--n is required for this kind".into()))
    };
    let mut manifest = RunManifest::new("gen", g.seed);
    let basis = match a.kind {
        GenKind::IntegerIdentity => {
            let n = need_n()?;
            check_dim(g, n)?;
            manifest = manifest.set("kind", "integer-identity").set("n", n);
            LatticeBasis::identity(n)?
        }
        GenKind::RandomRational => {
            let n = need_n()?;
            check_dim(g, n)?;
            manifest = manifest
                .set("kind", "random-rational")
                .set("n", n)
                .set("num_bound", a.num_bound)
                .set("den_bound", a.den_bound);
            let mut rng = ChaCha20Rng::seed_from_u64(g.seed);
            random_rational_basis(&mut rng, n, a.num_bound, a.den_bound)?
        }
        GenKind::FromFile => {
            let path = a
                .input
                .as_ref()
                .ok_or_else(|| CliError::Input("--input is required for from-file".into()))?;
            let b = load_basis(path)?;
            check_dim(g, b.dim())?;
            manifest = manifest.set("kind", "from-file").input(path)?;
            b
        }
    };
    let file = io::basis_to_file(&basis);
    let value = json!({
        "n": file.n,
        "basis": file.basis,
        "manifest_hash": manifest.hash,
    });
    let mut out = output(g)?;
    serde_json::to_writer_pretty(&mut out, &value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    finish_manifest(g, &manifest)
}

pub fn preprocess(g: &Global, a: &PreprocessArgs) -> CliResult<()> {
    let manifest = RunManifest::new("preprocess", g.seed)
        .set("dim_cap", g.dim_cap)
        .input(&a.lattice.basis)?;
    let started = Instant::now();
    let (basis, cell) = load_cell(g, &a.lattice)?;
    let n = basis.dim();
    let pre = PreprocessedLattice::from_cell(cell)?;
    let elapsed = started.elapsed();
    let bound = 2 * ((1usize << n) - 1);
    let count = pre.cell().len();
    let record = Record::new()
        .put("basis_hash", io::basis_hash(&basis))
        .put("n", n)
        .put("vr_count", count)
        .put("vr_bound", bound)
        .put("vr_bound_ok", count <= bound)
        .put("lambda1_sq", format_scalar(pre.cell().lambda1_sq()))
        .put("mu_upper_sq", format_scalar(&pre.mu_upper_sq()))
        .put(
            "cache",
            a.lattice.cache.as_ref().map(|p| p.display().to_string()),
        )
        .put("wall_clock_ms", millis(elapsed))
        .put("manifest_hash", manifest.hash.clone());
    write_single(g, record, Format::Json)?;
    finish_manifest(g, &manifest)
}

fn sampler_config(
    g: &Global,
    n: usize,
    choice: Option<SamplerChoice>,
    steps: Option<u64>,
) -> SamplerConfig {
    let mut cfg = SamplerConfig::new(g.seed, n);
    cfg.precision_bits = g.precision_bits;
    if let Some(c) = choice {
        cfg.method = match c {
            SamplerChoice::Rejection => SamplerMethod::Rejection,
            SamplerChoice::HitAndRun => SamplerMethod::HitAndRun,
        };
    }
    cfg.step_budget = steps;
    cfg
}

struct Solved {
    point: LatticePoint,
    trace: PathTrace,
    restarts: u32,
    total_edges: usize,
    alpha: Option<Scalar>,
}

pub fn solve(g: &Global, a: &SolveArgs) -> CliResult<()> {
    let mut manifest = RunManifest::new("solve", g.seed)
        .set("strategy", a.strategy.name())
        .set("start", a.start.name())
        .set("target", &a.target)
        .set("precision_bits", g.precision_bits)
        .set("restart_constant", a.restart_constant)
        .set("check", g.check)
        .input(&a.lattice.basis)?;
    if let Some(m) = a.max_edges {
        manifest = manifest.set("max_edges", m);
    }
    let (basis, cell) = load_cell(g, &a.lattice)?;
    let n = basis.dim();
    let t = load_target(&a.target, n)?;
    let pre = PreprocessedLattice::from_cell(cell)?;
    let cell = pre.cell();
    let start = match a.start {
        Start::Rounded => cvpp::round_to_start(&pre, &t)?,
        Start::Origin => basis.origin(),
    };
    let budget = a.max_edges.unwrap_or(usize::MAX);
    let started = Instant::now();
    let solved = match a.strategy {
        Strategy::Rsl => {
            let cfg = sampler_config(g, n, None, None);
            let opts = SolverOptions {
                restart_constant: a.restart_constant,
                ..SolverOptions::default()
            };
            let r = cvpp::query_stream(&pre, &t, &cfg, 0, &opts)?;
            Solved {
                point: r.point,
                trace: r.trace,
                restarts: r.restarts,
                total_edges: r.total_edges,
                alpha: Some(r.params.alpha),
            }
        }
        Strategy::Slicer => {
            let r = iterative_slicer(cell, &t.coords, &start);
            Solved {
                total_edges: r.trace.len(),
                point: r.end,
                trace: r.trace,
                restarts: 0,
                alpha: None,
            }
        }
        Strategy::Mv => {
            let (point, trace) = mv_walk(cell, &t.coords, &start, budget)?;
            Solved {
                total_edges: trace.len(),
                point,
                trace,
                restarts: 0,
                alpha: None,
            }
        }
        Strategy::DeterministicLine => {
            let (walk, trace) = deterministic_line(cell, &start, &t.coords, a.max_edges)?;
            if walk.truncated {
                return Err(Error::EdgeBudget { max_edges: budget }.into());
            }
            Solved {
                total_edges: trace.len(),
                point: walk.end,
                trace,
                restarts: 0,
                alpha: None,
            }
        }
    };
    let elapsed = started.elapsed();
    let certified = cvpp::certify(&pre, &t, &solved.point);
    if !certified {
        return Err(CliError::Internal(format!(
            "{} ended outside the cell of the target",
            a.strategy.name()
        )));
    }
    let dist_sq = rational::norm_sq(&rational::sub(&t.coords, solved.point.coords()));
    let oracle_match = if g.check {
        let oracle = cvp_bruteforce(&basis, &t, DEFAULT_ENUM_CAP)?;
        Some(oracle.dist_sq == dist_sq)
    } else {
        None
    };
    if let Some(path) = &a.trace {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        io::write_trace(f, cell, &solved.trace)?;
    }
    let record = Record::new()
        .put("strategy", a.strategy.name())
        .put("n", n)
        .put("target", strings(&t.coords))
        .put("point_coeffs", ints(solved.point.coeffs()))
        .put("point", strings(solved.point.coords()))
        .put("dist_sq", format_scalar(&dist_sq))
        .put("certified", certified)
        .put("start_coeffs", ints(start.coeffs()))
        .put("restarts", solved.restarts)
        .put("total_edges", solved.total_edges)
        .put("phase_b", solved.trace.phase_b)
        .put("phase_c", solved.trace.phase_c)
        .put("alpha", solved.alpha.as_ref().map(format_scalar))
        .put("seed", g.seed)
        .put("oracle-match", oracle_match)
        .put("wall_clock_ms", millis(elapsed))
        .put("manifest_hash", manifest.hash.clone());
    write_single(g, record, Format::Json)?;
    finish_manifest(g, &manifest)?;
    if oracle_match == Some(false) {
        return Err(CliError::Internal(
            "answer disagrees with the enumeration oracle".into(),
        ));
    }
    Ok(())
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `mean <= bound + 3 SE`.
pub fn bound_satisfied(mean: f64, se: f64, bound: f64) -> bool {
    mean <= bound + 3.0 * se
}

struct Trial {
    phase_b: usize,
    phase_c: usize,
    resamples: u32,
    micros: u64,
}

fn run_trial(
    cell: &VoronoiCellData,
    sampler: &UniformSampler<'_>,
    x: &LatticePoint,
    t: &[Scalar],
    alpha: &Scalar,
    rng: &mut impl Rng,
) -> vornav::Result<Trial> {
    let started = Instant::now();
    let mut resamples = 0;
    loop {
        let z = sampler.sample(rng)?;
        match randomized_straight_line(cell, x, t, &z, alpha, usize::MAX) {
            Ok(o) => {
                debug_assert!(matches!(o.result, RslResult::Reached(_)));
                return Ok(Trial {
                    phase_b: o.trace.phase_b,
                    phase_c: o.trace.phase_c,
                    resamples,
                    micros: started.elapsed().as_micros() as u64,
                });
            }
            Err(Error::TieDetected { .. }) => resamples += 1,
            Err(e) => return Err(e),
        }
    }
}

pub fn crossings(g: &Global, a: &CrossingsArgs) -> CliResult<()> {
    let alpha = rational::parse_scalar(&a.alpha)?;
    if !(alpha > Scalar::from_integer(0.into()) && alpha <= Scalar::from_integer(1.into())) {
        return Err(CliError::Input(format!(
            "alpha must lie in (0, 1], got {}",
            a.alpha
        )));
    }
    let sampler_name = match a.sampler {
        SamplerChoice::Rejection => "rejection",
        SamplerChoice::HitAndRun => "hit-and-run",
    };
    let start_name = a.start.name();
    let mut manifest = RunManifest::new("crossings", g.seed)
        .set("trials", a.trials)
        .set("target", &a.target)
        .set("alpha", format_scalar(&alpha))
        .set("start", start_name)
        .set("sampler", sampler_name)
        .set("precision_bits", g.precision_bits)
        .input(&a.lattice.basis)?;
    if let Some(s) = a.steps {
        manifest = manifest.set("steps", s);
    }
    let (basis, cell) = load_cell(g, &a.lattice)?;
    let n = basis.dim();
    let t = load_target(&a.target, n)?;
    let x = match a.start {
        Start::Origin => basis.origin(),
        Start::Rounded => cvpp::round_to_start(&PreprocessedLattice::from_cell(cell.clone())?, &t)?,
    };
    let cfg = sampler_config(g, n, Some(a.sampler), a.steps);
    let sampler = UniformSampler::new(&cell, cfg.clone())?;
    let dist = cell.voronoi_norm(&rational::sub(&t.coords, x.coords()));
    let bound_b = n as f64 / 2.0 * rational::to_f64(&dist);
    let bound_c = phase_c_constant() * n as f64 * (2.0 + (4.0 / rational::to_f64(&alpha)).ln());
    let lattice_hash = io::basis_hash(&basis);

    let trials: Vec<Trial> = (0..a.trials)
        .into_par_iter()
        .map(|i| run_trial(&cell, &sampler, &x, &t.coords, &alpha, &mut cfg.rng(i)))
        .collect::<vornav::Result<_>>()?;

    let rows: Vec<Record> = trials
        .iter()
        .enumerate()
        .map(|(i, tr)| {
            Record::new()
                .put("trial", i)
                .put("lattice_hash", lattice_hash.clone())
                .put("n", n)
                .put("target", strings(&t.coords))
                .put("strategy", "rsl")
                .put("start", ints(x.coeffs()))
                .put("phase_b", tr.phase_b)
                .put("phase_c", tr.phase_c)
                .put("bound_b", bound_b)
                .put("bound_c", bound_c)
                .put("alpha", format_scalar(&alpha))
                .put("seed", g.seed)
                .put("stream", i)
                .put("sampler", sampler_name)
                .put("resamples", tr.resamples)
                .put("wall_clock_us", tr.micros)
                .put("manifest_hash", manifest.hash.clone())
        })
        .collect();

    let summary = if trials.is_empty() {
        None
    } else {
        let bs: Vec<f64> = trials.iter().map(|t| t.phase_b as f64).collect();
        let cs: Vec<f64> = trials.iter().map(|t| t.phase_c as f64).collect();
        let (bm, bse) = mean_se(&bs);
        let (cm, cse) = mean_se(&cs);
        Some(json!({
            "trials": trials.len(),
            "mean_phase_b": bm,
            "se_phase_b": bse,
            "bound_b": bound_b,
            "phase_b_ok": bound_satisfied(bm, bse, bound_b),
            "mean_phase_c": cm,
            "se_phase_c": cse,
            "bound_c": bound_c,
            "phase_c_ok": bound_satisfied(cm, cse, bound_c),
            "sampler": sampler_name,
            "exploratory": a.sampler == SamplerChoice::HitAndRun,
            "manifest_hash": manifest.hash,
        }))
    };

    let header = [
        "trial",
        "lattice_hash",
        "n",
        "target",
        "strategy",
        "start",
        "phase_b",
        "phase_c",
        "bound_b",
        "bound_c",
        "alpha",
        "seed",
        "stream",
        "sampler",
        "resamples",
        "wall_clock_us",
        "manifest_hash",
    ];
    let mut out = output(g)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            write_csv(&mut out, &header, &rows)?;
            if let Some(s) = &summary {
                let text = serde_json::to_string_pretty(s)? + "\n";
                match &a.summary {
                    Some(p) => std::fs::write(p, text)?,
                    None => eprint!("{text}"),
                }
            }
        }
        Format::Json => {
            let value = json!({
                "manifest": manifest,
                "records": rows.iter().map(Record::to_json).collect::<Vec<_>>(),
                "summary": summary,
            });
            serde_json::to_writer_pretty(&mut out, &value)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    finish_manifest(g, &manifest)
}

/// `x;y|x;y|...` with comma-separated coefficients.
fn parse_pairs(spec: &str, n: usize) -> CliResult<Vec<(Vec<i64>, Vec<i64>)>> {
    let vector = |s: &str| -> CliResult<Vec<i64>> {
        let v = s
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<i64>()
                    .map_err(|e| CliError::Input(format!("{c:?}: {e}")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        if v.len() != n {
            return Err(CliError::Input(format!(
                "pair entry {s:?} needs {n} coefficients"
            )));
        }
        Ok(v)
    };
    spec.split('|')
        .map(|p| {
            let (x, y) = p
                .split_once(';')
                .ok_or_else(|| CliError::Input(format!("pair {p:?} must look like x;y")))?;
            Ok((vector(x)?, vector(y)?))
        })
        .collect()
}

type Pair = (Vec<i64>, Vec<i64>, Option<Option<u32>>);

pub fn graphdist(g: &Global, a: &GraphdistArgs) -> CliResult<()> {
    let manifest = RunManifest::new("graphdist", g.seed)
        .set("pairs", &a.pairs)
        .set("cap", a.cap)
        .input(&a.lattice.basis)?;
    let (basis, cell) = load_cell(g, &a.lattice)?;
    let n = basis.dim();

    // Each pair carries d_G when it is known without a separate search.
    let pairs: Vec<Pair> = if a.pairs == "ball" {
        let ball = graph_ball(&cell, a.cap);
        let mut ys: Vec<(Vec<i64>, u32)> = ball.into_iter().collect();
        ys.sort();
        ys.into_iter()
            .map(|(y, d)| (vec![0; n], y, Some(Some(d))))
            .collect()
    } else if let Some(k) = a.pairs.strip_prefix("random:") {
        let k: usize = k
            .parse()
            .map_err(|e| CliError::Input(format!("random:{k}: {e}")))?;
        let mut rng = ChaCha20Rng::seed_from_u64(g.seed);
        (0..k)
            .map(|_| {
                let x: Vec<i64> = (0..n).map(|_| rng.random_range(-2..=2)).collect();
                let y: Vec<i64> = (0..n).map(|_| rng.random_range(-2..=2)).collect();
                (x, y, None)
            })
            .collect()
    } else {
        parse_pairs(&a.pairs, n)?
            .into_iter()
            .map(|(x, y)| (x, y, None))
            .collect()
    };

    let half_n = Scalar::new((n as i64).into(), 2.into());
    let rows: Vec<(Record, bool)> = pairs
        .into_par_iter()
        .enumerate()
        .map(|(i, (xc, yc, known))| {
            let x = basis.point(xc);
            let y = basis.point(yc);
            let d = known.unwrap_or_else(|| graph_distance_bfs(&cell, &x, &y, a.cap));
            let nv = cell.voronoi_norm(&rational::sub(y.coords(), x.coords()));
            let (lower, upper) = match d {
                Some(d) => {
                    let d = Scalar::from_integer(d.into());
                    (
                        Some(&nv / Scalar::from_integer(2.into()) <= d),
                        Some(d <= &half_n * &nv),
                    )
                }
                None => (None, None),
            };
            let violated = lower == Some(false) || upper == Some(false);
            let r = Record::new()
                .put("pair", i)
                .put("x", ints(x.coeffs()))
                .put("y", ints(y.coeffs()))
                .put("d_g", d)
                .put("voronoi_norm", format_scalar(&nv))
                .put("voronoi_norm_f64", rational::to_f64(&nv))
                .put("lower_ok", lower)
                .put("upper_ok", upper)
                .put("capped", d.is_none())
                .put("manifest_hash", manifest.hash.clone());
            (r, violated)
        })
        .collect();
    let violations = rows.iter().filter(|(_, v)| *v).count();
    let capped = rows
        .iter()
        .filter(|(r, _)| {
            r.0.iter()
                .any(|(k, v)| *k == "capped" && v == &Value::Bool(true))
        })
        .count();
    let rows: Vec<Record> = rows.into_iter().map(|(r, _)| r).collect();
    let header = [
        "pair",
        "x",
        "y",
        "d_g",
        "voronoi_norm",
        "voronoi_norm_f64",
        "lower_ok",
        "upper_ok",
        "capped",
        "manifest_hash",
    ];
    let mut out = output(g)?;
    match g.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&mut out, &header, &rows)?,
        Format::Json => {
            let value = json!({
                "manifest": manifest,
                "records": rows.iter().map(Record::to_json).collect::<Vec<_>>(),
                "summary": {"pairs": rows.len(), "capped": capped, "violations": violations},
            });
            serde_json::to_writer_pretty(&mut out, &value)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    finish_manifest(g, &manifest)?;
    if violations > 0 {
        return Err(CliError::Internal(format!(
            "{violations} pairs violate the distance sandwich"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_uses_three_standard_errors() {
        assert!(bound_satisfied(4.0, 0.0, 4.0));
        assert!(bound_satisfied(4.3, 0.1, 4.0));
        assert!(!bound_satisfied(4.31, 0.1, 4.0));
    }

    #[test]
    fn pair_specs() {
        let p = parse_pairs("0,0;1,1|2,-1;0,3", 2).unwrap();
        assert_eq!(p, vec![(vec![0, 0], vec![1, 1]), (vec![2, -1], vec![0, 3])]);
        assert!(parse_pairs("0,0", 2).is_err());
        assert!(parse_pairs("0;1", 2).is_err());
    }

    #[test]
    fn csv_cells_flatten_arrays() {
        let r = Record::new()
            .put("a", ints(&[1, -2]))
            .put("b", Value::Null)
            .put("c", "x");
        assert_eq!(r.cells(), vec!["1 -2", "", "x"]);
        assert_eq!(r.header(), vec!["a", "b", "c"]);
    }
}
