//! End-to-end acceptance checks at full budgets. Prints one line per
//! criterion and exits non-zero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use raimi::geometry::{Angle, Omega, SurfaceSpec};
use raimi::hypotheses::{archimedes_pushforward, base_angle_uniformity, equivariance, rotation_invariance, round_trip};
use raimi::lang::SetExpr;
use raimi::measures::{disintegration_check, Execution, RngStream, Surface, TestFunction};

const EXEC: Execution = Execution::Parallel;
const SEED: u64 = 7;

fn cylinder(n: usize) -> SurfaceSpec {
    let d = n - 2;
    SurfaceSpec::cylinder(n, 1.0, Omega::new(SetExpr::whole(d), vec![(0.0, 1.0); d]).unwrap()).unwrap()
}

fn surfaces() -> Vec<SurfaceSpec> {
    let mut all: Vec<SurfaceSpec> = (3..=5).map(|n| SurfaceSpec::sphere(n).unwrap()).collect();
    for (n, k) in [(3, 1.0), (3, 2.0), (4, 2.0), (3, 0.5)] {
        all.push(SurfaceSpec::power(n, k, 1.0).unwrap());
    }
    all.extend([cylinder(3), cylinder(4)]);
    all
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn corpus() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(configs().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    files
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("raimi-acceptance-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

struct Run {
    code: Option<i32>,
    stderr: String,
    report: Vec<u8>,
}

fn verify(config: &Path, report: &Path, threads: Option<usize>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_raimi"));
    cmd.args(["verify", "--config"]).arg(config).arg("--report").arg(report);
    if let Some(n) = threads {
        cmd.env("RAIMI_THREADS", n.to_string());
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        report: fs::read(report).unwrap_or_default(),
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().unwrap().to_string_lossy().into_owned()
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed < limit {
        Ok(format!("{detail}, {:.1}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("{detail}, but took {:.1}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()))
    }
}

fn equivariance_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (i, spec) in surfaces().into_iter().enumerate() {
        let r = equivariance(&Surface::new(spec.clone()), 100_000, RngStream::new(SEED, 100 + i as u64), EXEC)
            .map_err(|e| e.to_string())?;
        if !r.pass {
            return Err(format!("{spec}: max error {:.3e}", r.max_error));
        }
        worst = worst.max(r.max_error);
    }
    within(start.elapsed(), Duration::from_secs(30), format!("9 surfaces, max error {worst:.3e}"))
}

fn round_trip_suite() -> Outcome {
    let mut worst = 0.0f64;
    for (i, spec) in surfaces().into_iter().enumerate() {
        let r = round_trip(&Surface::new(spec.clone()), 100_000, RngStream::new(SEED, 200 + i as u64), EXEC)
            .map_err(|e| e.to_string())?;
        if !r.pass {
            return Err(format!("{spec}: angle {:.3e}, fibre {:.3e}", r.max_angle_error, r.max_fiber_error));
        }
        worst = worst.max(r.max_angle_error).max(r.max_fiber_error);
    }
    Ok(format!("9 surfaces, max error {worst:.3e}"))
}

fn disintegration_suite() -> Outcome {
    let start = Instant::now();
    let specs = [SurfaceSpec::sphere(3).unwrap(), SurfaceSpec::power(3, 2.0, 1.0).unwrap(), cylinder(3)];
    let mut rows = 0;
    for (i, spec) in specs.into_iter().enumerate() {
        let fns = TestFunction::standard_corpus(&spec);
        let surface = Surface::new(spec.clone());
        let result = disintegration_check(&surface, &fns, 1_000_000, RngStream::new(SEED, 300 + i as u64), 3.0, EXEC)
            .map_err(|e| e.to_string())?;
        if let Some(bad) = result.iter().find(|r| !r.pass) {
            return Err(format!("{spec}: {} lhs {:.5} rhs {:.5}", bad.function, bad.lhs.mean, bad.rhs.mean));
        }
        rows += result.len();
    }
    within(start.elapsed(), Duration::from_secs(300), format!("{rows} rows within 3 sigma"))
}

fn pushforward() -> Outcome {
    let r = archimedes_pushforward(1_000_000, RngStream::new(SEED, 400), EXEC).map_err(|e| e.to_string())?;
    let detail = format!("chi-square {:.2}, p = {:.4}", r.statistic, r.p_value);
    if r.p_value > 0.01 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uniformity() -> Outcome {
    let mut lowest = 1.0f64;
    for (i, spec) in surfaces().into_iter().enumerate() {
        let r =
            base_angle_uniformity(&Surface::new(spec.clone()), 100_000, RngStream::new(SEED, 5000 + i as u64), EXEC)
                .map_err(|e| e.to_string())?;
        if r.p_value <= 0.01 {
            return Err(format!("{spec}: KS p = {:.4}", r.p_value));
        }
        lowest = lowest.min(r.p_value);
    }
    Ok(format!("9 surfaces, smallest KS p = {lowest:.4}"))
}

fn invariance() -> Outcome {
    let triples: [(SurfaceSpec, &str, f64); 12] = [
        (SurfaceSpec::sphere(3).unwrap(), "cap[(1,0,0),0.6]", 0.25),
        (SurfaceSpec::sphere(3).unwrap(), "sector[0,0.3) & x3 > 0", 0.4),
        (SurfaceSpec::sphere(4).unwrap(), "x1 > 0.3 | x4 < -0.5", 0.125),
        (SurfaceSpec::sphere(5).unwrap(), "cap[(0,1,0,0,0),0.8] & !(x5 > 0.2)", 0.7),
        (SurfaceSpec::power(3, 1.0, 1.0).unwrap(), "x1 > 0.2 & x3 < 0.8", 0.33),
        (SurfaceSpec::power(3, 2.0, 1.0).unwrap(), "sector[0.1,0.35) | x2 > 0.5", 0.5),
        (SurfaceSpec::power(4, 2.0, 1.0).unwrap(), "halfspace[(1,1,0,0),0.4]", 0.9),
        (SurfaceSpec::power(3, 0.5, 1.0).unwrap(), "digit[2,1,1] & x3 > 0.6", 0.61),
        (cylinder(3), "x1 > 0 & x3 < 0.5", 0.2),
        (cylinder(3), "sector[0.8,0.1) \\ (x3 > 0.7)", 0.45),
        (cylinder(4), "x2 < -0.4 | x4 > 0.9", 0.77),
        (cylinder(4), "cap[(1,0,0,0),0.5] & x3 < 0.6", 0.05),
    ];
    let mut worst = 0.0f64;
    for (i, (spec, text, alpha)) in triples.into_iter().enumerate() {
        let set = SetExpr::parse(text, spec.dim()).map_err(|e| format!("{text}: {e}"))?;
        let surface = Surface::new(spec.clone());
        let r = rotation_invariance(
            &surface,
            &set,
            Angle::new(alpha),
            200_000,
            RngStream::new(SEED, 600 + i as u64),
            3.0,
            EXEC,
        )
        .map_err(|e| e.to_string())?;
        let gap = (r.original.mean - r.rotated.mean).abs() / r.original.std_err.hypot(r.rotated.std_err);
        if !r.pass {
            return Err(format!("{spec} {text} by {alpha}: {:.5} vs {:.5}", r.original.mean, r.rotated.mean));
        }
        worst = worst.max(gap);
    }
    Ok(format!("12 triples, largest gap {worst:.2} sigma"))
}

fn check_report(name: &str, run: &Run) -> Result<serde_json::Value, String> {
    if run.code != Some(0) {
        return Err(format!("{name}: exit {:?}: {}", run.code, run.stderr.trim()));
    }
    let json: serde_json::Value = serde_json::from_slice(&run.report).map_err(|e| format!("{name}: {e}"))?;
    let v = &json["verification"];
    if v["certified"] != true {
        return Err(format!("{name}: not certified"));
    }
    for e in v["intersections"].as_array().unwrap() {
        let (mean, se) = (e["mean"].as_f64().unwrap(), e["std_err"].as_f64().unwrap());
        if mean <= 3.0 * se {
            return Err(format!("{name}: intersection {mean:.5} within 3 std errors of zero"));
        }
    }
    if v["audit_passed"] != true {
        return Err(format!("{name}: inequality audit failed"));
    }
    Ok(json)
}

fn certification_corpus() -> Outcome {
    let files = corpus();
    let dir = scratch("corpus");
    let start = Instant::now();
    let mut lowest = f64::INFINITY;
    for cfg in &files {
        let name = stem(cfg);
        let json = check_report(&name, &verify(cfg, &dir.join(format!("{name}.json")), None))?;
        for e in json["verification"]["intersections"].as_array().unwrap() {
            lowest = lowest.min(e["mean"].as_f64().unwrap() / e["std_err"].as_f64().unwrap());
        }
    }
    let elapsed = start.elapsed();
    fs::remove_dir_all(dir).unwrap();
    if files.len() < 20 {
        return Err(format!("only {} experiments", files.len()));
    }
    within(
        elapsed,
        Duration::from_secs(600),
        format!("{} experiments certified, smallest mean/se {lowest:.1}", files.len()),
    )
}

fn exact_case() -> Outcome {
    let dir = scratch("exact");
    let cfg = dir.join("sphere_r2t2.toml");
    fs::copy(configs().join("sphere_r2t2.toml"), &cfg).unwrap();
    let json = check_report("sphere_r2t2", &verify(&cfg, &dir.join("report.json"), None));
    fs::remove_dir_all(dir).unwrap();
    let v = &json?["verification"];
    let theta0 = v["chosen_theta0"].as_f64().unwrap();
    if (theta0 - 0.25).abs() > 1.0 / 2048.0 {
        return Err(format!("theta0 = {theta0}"));
    }
    for e in v["intersections"].as_array().unwrap() {
        let (mean, se) = (e["mean"].as_f64().unwrap(), e["std_err"].as_f64().unwrap());
        if (mean - 0.25).abs() > 3.0 * se {
            return Err(format!("intersection {mean:.5} ± {se:.5} misses 0.25"));
        }
    }
    Ok(format!("theta0 = {theta0:.6}, intersections within 3 sigma of 1/4"))
}

fn determinism() -> Outcome {
    let files = corpus();
    let runs: Vec<(usize, PathBuf)> = [1, 4, 16].into_iter().map(|n| (n, scratch(&format!("threads{n}")))).collect();
    for (n, dir) in &runs {
        for cfg in &files {
            let run = verify(cfg, &dir.join(format!("{}.json", stem(cfg))), Some(*n));
            if run.code != Some(0) {
                return Err(format!("{} with {n} workers: exit {:?}", stem(cfg), run.code));
            }
        }
    }
    let mut result = Ok(format!("{} reports identical under 1, 4 and 16 workers", files.len()));
    'outer: for cfg in &files {
        let name = format!("{}.json", stem(cfg));
        let first = fs::read(runs[0].1.join(&name)).unwrap();
        for (n, dir) in &runs[1..] {
            if fs::read(dir.join(&name)).unwrap() != first {
                result = Err(format!("{name} differs between 1 and {n} workers"));
                break 'outer;
            }
        }
    }
    for (_, dir) in runs {
        fs::remove_dir_all(dir).unwrap();
    }
    result
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("equivariance", equivariance_suite),
        ("round trip", round_trip_suite),
        ("disintegration", disintegration_suite),
        ("pushforward to the ball", pushforward),
        ("base-angle uniformity", uniformity),
        ("rotation invariance", invariance),
        ("certification corpus", certification_corpus),
        ("quarter-turn halves", exact_case),
        ("determinism across workers", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
