//! Exit criteria for the library, one test per criterion. Each prints a
//! single `PASS`/`FAIL` line with the measured values before asserting.
//!
//! Randomized criteria use fixed seeds: trial generators start from
//! `ChaCha8Rng::seed_from_u64` with the seed named in each test, and every
//! benchmark sweep uses adaptive seed 0 with Monte Carlo seed 1.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mwsparse::bench::{run_experiment, Experiment, ExperimentConfig};
use mwsparse::csolve::{basis_pursuit, chebyshev_points, legendre_system, rip_constant};
use mwsparse::mwbasis::{BasisKind, MwBasis};
use mwsparse::quadrature::GaussRule;

/// Writes to the stdout handle directly so the line survives libtest's
/// output capture for passing tests too.
fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("criterion {id} [{name}]: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

struct Sweep {
    cfg: ExperimentConfig,
    exp: Experiment,
    elapsed: Duration,
    files: BTreeMap<String, Vec<u8>>,
    _dir: tempfile::TempDir,
}

impl Sweep {
    fn last(&self) -> &mwsparse::bench::ReportRow {
        self.exp.rows.last().unwrap()
    }

    fn first(&self) -> &mwsparse::bench::ReportRow {
        self.exp.rows.first().unwrap()
    }
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn config(model: &str, n0: usize, n_s: usize, cs: &[f64], dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        model: model.into(),
        n0,
        n_s,
        cs: cs.to_vec(),
        seed: 0,
        mc_samples: 100_000,
        mc_seed: 1,
        out_dir: Some(dir.to_path_buf()),
        timing: false,
        ..Default::default()
    }
}

fn run_sweep(model: &str, n0: usize, n_s: usize, cs: &[f64]) -> Sweep {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(model, n0, n_s, cs, dir.path());
    let start = Instant::now();
    let exp = run_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    Sweep {
        files: read_dir(dir.path()),
        cfg,
        exp,
        elapsed,
        _dir: dir,
    }
}

const LINE_CS: [f64; 5] = [5e-2, 1e-2, 5e-3, 1e-3, 5e-4];
const FULL_CS: [f64; 6] = [5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4];

fn line_sweep() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| run_sweep("line_singularity", 2, 8, &LINE_CS))
}

fn absorption_sweep() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| run_sweep("surface_absorption", 3, 14, &FULL_CS))
}

fn diffusion_sweep() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| run_sweep("diffusion", 3, 6, &FULL_CS))
}

#[test]
fn criterion_1_basis_orthonormality_and_moments() {
    let start = Instant::now();
    let rule = GaussRule::new(16);
    let mut worst_gram = 0.0f64;
    let mut worst_moment = 0.0f64;
    for n0 in 0..=6 {
        let basis = MwBasis::new(n0).unwrap();
        let funcs: Vec<_> = [BasisKind::Scaling, BasisKind::Wavelet]
            .into_iter()
            .flat_map(|kind| (0..=n0).map(move |i| (kind, i)))
            .map(|(kind, i)| basis.function(kind, i).clone())
            .collect();
        // Both halves separately so the breakpoint never sits inside a rule.
        let integrate = |f: &dyn Fn(f64) -> f64| rule.integrate(0.0, 0.5, f) + rule.integrate(0.5, 1.0, f);
        for (i, f) in funcs.iter().enumerate() {
            for (j, g) in funcs.iter().enumerate() {
                let v = integrate(&|x| f.eval(x) * g.eval(x));
                let target = if i == j { 1.0 } else { 0.0 };
                worst_gram = worst_gram.max((v - target).abs());
            }
        }
        for i in 0..=n0 {
            let psi = basis.function(BasisKind::Wavelet, i);
            for k in 0..=n0 {
                let m = integrate(&|x| x.powi(k as i32) * psi.eval(x));
                worst_moment = worst_moment.max(m.abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_gram <= 1e-10 && worst_moment <= 1e-10 && elapsed < Duration::from_secs(1);
    report(
        1,
        "basis correctness",
        pass,
        &format!("max Gram error {worst_gram:.2e}, max moment {worst_moment:.2e}, {elapsed:.2?}"),
    );
    assert!(pass);
}

fn sparse_vector(rng: &mut ChaCha8Rng, p: usize, s: usize) -> DVector<f64> {
    let mut c = DVector::zeros(p);
    let mut placed = 0;
    while placed < s {
        let i = rng.gen_range(0..p);
        if c[i] == 0.0 {
            let mag = rng.gen_range(0.5..2.0);
            c[i] = if rng.gen::<bool>() { mag } else { -mag };
            placed += 1;
        }
    }
    c
}

#[test]
fn criterion_2_sparse_recovery() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut exact = 0;
    for _ in 0..50 {
        let points = chebyshev_points(&mut rng, 30);
        let a = legendre_system(&points, 60, true);
        let c_star = sparse_vector(&mut rng, 60, 3);
        let b = &a * &c_star;
        let rec = basis_pursuit(&a, &b, 1e-9, 20_000).unwrap();
        if (DVector::from_vec(rec.coefficients) - &c_star).norm() <= 1e-6 {
            exact += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = exact >= 48 && elapsed < Duration::from_secs(30);
    report(2, "sparse recovery", pass, &format!("{exact}/50 exact, {elapsed:.2?}"));
    assert!(pass);
}

/// Extreme eigenvalues of the 2×2 Gram matrix of two columns, in closed form.
fn pair_deviation(a: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let (ci, cj) = (a.column(i), a.column(j));
    let (p, q, r) = (ci.dot(&ci), ci.dot(&cj), cj.dot(&cj));
    let mid = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    ((mid + rad) - 1.0).max(1.0 - (mid - rad))
}

#[test]
fn criterion_3_rip_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = DMatrix::from_fn(8, 12, |_, _| if rng.gen::<bool>() { 1.0 } else { -1.0 }) / 8f64.sqrt();
        let mut oracle = 0.0f64;
        for i in 0..12 {
            for j in i + 1..12 {
                oracle = oracle.max(pair_deviation(&a, i, j));
            }
        }
        worst = worst.max((rip_constant(&a, 2).unwrap() - oracle).abs());
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && elapsed < Duration::from_secs(10);
    report(3, "RIP oracle equivalence", pass, &format!("max deviation {worst:.2e}, {elapsed:.2?}"));
    assert!(pass);
}

struct Bands {
    mean: f64,
    mean_tol: f64,
    variance: f64,
    variance_tol: f64,
    mse_max: f64,
    n_sb: (usize, usize),
    runtime: Duration,
}

fn check_bands(id: u32, name: &str, sweep: &Sweep, bands: Bands) {
    let row = sweep.last();
    let checks = [
        ((row.mean - bands.mean).abs() <= bands.mean_tol, format!("mean {:.6}", row.mean)),
        (
            (row.variance - bands.variance).abs() <= bands.variance_tol,
            format!("variance {:.7}", row.variance),
        ),
        (row.mse <= bands.mse_max, format!("mse {:.3e}", row.mse)),
        (
            (bands.n_sb.0..=bands.n_sb.1).contains(&row.n_sb),
            format!("N_sb {}", row.n_sb),
        ),
        (sweep.elapsed < bands.runtime, format!("{:.2?}", sweep.elapsed)),
    ];
    let detail = checks
        .iter()
        .map(|(ok, s)| format!("{s} {}", if *ok { "ok" } else { "out of band" }))
        .collect::<Vec<_>>()
        .join(", ");
    let pass = checks.iter().all(|(ok, _)| *ok);
    report(id, name, pass, &format!("C = {:e}: {detail}", row.c));
    assert!(pass);
}

#[test]
fn criterion_4_line_singularity() {
    let pi2 = std::f64::consts::PI.powi(2);
    check_bands(
        4,
        "line singularity",
        line_sweep(),
        Bands {
            mean: 1.0 / pi2,
            mean_tol: 2e-3,
            variance: 0.052234,
            variance_tol: 2e-3,
            mse_max: 5e-6,
            n_sb: (30, 90),
            runtime: Duration::from_secs(120),
        },
    );
}

#[test]
fn criterion_5_surface_absorption() {
    check_bands(
        5,
        "surface absorption",
        absorption_sweep(),
        Bands {
            mean: 0.35039,
            mean_tol: 2e-3,
            variance: 0.11033,
            variance_tol: 2e-3,
            mse_max: 1e-6,
            n_sb: (120, 350),
            runtime: Duration::from_secs(600),
        },
    );
}

#[test]
fn criterion_6_diffusion() {
    check_bands(
        6,
        "diffusion",
        diffusion_sweep(),
        Bands {
            mean: 0.196424,
            mean_tol: 5e-4,
            variance: 0.0054355,
            variance_tol: 1e-4,
            mse_max: 5e-9,
            n_sb: (4, 18),
            runtime: Duration::from_secs(60),
        },
    );
}

#[test]
fn criterion_7_error_decay() {
    let sweeps = [
        ("line_singularity", line_sweep()),
        ("surface_absorption", absorption_sweep()),
        ("diffusion", diffusion_sweep()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s) in sweeps {
        let ratio = s.first().mse / s.last().mse;
        pass &= ratio >= 10.0;
        parts.push(format!("{name} {ratio:.1}x"));
    }
    report(7, "monotone error decay", pass, &parts.join(", "));
    assert!(pass);
}

#[test]
fn criterion_8_refinement_localization() {
    let sweep = line_sweep();
    let tree = sweep.exp.trees.last().unwrap();
    let near_strip = |(lo, hi): (f64, f64)| lo <= 0.625 && hi >= 0.375;
    let hits = tree
        .leaves
        .iter()
        .filter(|l| l.part.bounds().iter().any(|&b| near_strip(b)))
        .count();
    let share = hits as f64 / tree.n_sb() as f64;
    let pass = share >= 0.6;
    report(
        8,
        "refinement localization",
        pass,
        &format!("{hits}/{} leaves touch the strips ({:.0}%)", tree.n_sb(), 100.0 * share),
    );
    assert!(pass);
}

#[test]
fn criterion_9_determinism() {
    let mut pass = true;
    let mut parts = Vec::new();
    for sweep in [line_sweep(), absorption_sweep(), diffusion_sweep()] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = sweep.cfg.clone();
        cfg.out_dir = Some(dir.path().to_path_buf());
        run_experiment(&cfg).unwrap();
        let again = read_dir(dir.path());
        let same = again == sweep.files && !again.is_empty();
        pass &= same;
        parts.push(format!(
            "{} {} files {}",
            cfg.model,
            again.len(),
            if same { "identical" } else { "differ" }
        ));
    }
    report(9, "determinism", pass, &parts.join(", "));
    assert!(pass);
}
