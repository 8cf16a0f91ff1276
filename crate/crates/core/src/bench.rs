//! Experiment harness: Monte Carlo reference, surrogate error, sweeps over the
//! refinement constant, and file output for tables and plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::adapt::{adapt_loop, AdaptConfig, PartitionTree, Sampling};
use crate::csolve::RecoveryConfig;
use crate::models::{model_by_name, StochasticModel};
use crate::rng;
use crate::{Error, Result};

pub const RESULTS_HEADER: &str = "C,N_sb,mean,variance,mse,model_evals,wall_time_s";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: String,
    pub n0: usize,
    pub n_s: usize,
    /// Refinement constants, strictly decreasing.
    pub cs: Vec<f64>,
    pub seed: u64,
    pub mc_samples: usize,
    pub mc_seed: u64,
    pub out_dir: Option<PathBuf>,
    pub sampling: Sampling,
    pub epsilon: f64,
    pub max_depth: u32,
    pub sample_cap: Option<usize>,
    /// Record wall time per row; off gives byte-reproducible result tables.
    pub timing: bool,
    pub histogram_bins: usize,
    /// Points per side of the error grid for 2D models.
    pub grid_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: "line_singularity".into(),
            n0: 2,
            n_s: 8,
            cs: vec![5e-2],
            seed: 0,
            mc_samples: 100_000,
            mc_seed: 1,
            out_dir: None,
            sampling: Sampling::Uniform,
            epsilon: 1e-8,
            max_depth: 8,
            sample_cap: None,
            timing: true,
            histogram_bins: 50,
            grid_points: 201,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl ExperimentConfig {
    /// Sets one field from its configuration-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = value.trim().to_string(),
            "n0" => self.n0 = parse(key, value)?,
            "ns" | "n_s" => self.n_s = parse(key, value)?,
            "c" | "C" => {
                self.cs = value
                    .split(|ch: char| ch == ',' || ch.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| parse(key, t))
                    .collect::<Result<_>>()?
            }
            "seed" => self.seed = parse(key, value)?,
            "mc_samples" => self.mc_samples = parse(key, value)?,
            "mc_seed" => self.mc_seed = parse(key, value)?,
            "out" | "out_dir" => self.out_dir = Some(PathBuf::from(value.trim())),
            "sampling" => self.sampling = value.trim().parse()?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "max_depth" => self.max_depth = parse(key, value)?,
            "sample_cap" => self.sample_cap = Some(parse(key, value)?),
            "timing" => self.timing = parse_bool(key, value)?,
            "histogram_bins" => self.histogram_bins = parse(key, value)?,
            "grid_points" => self.grid_points = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_kv_str(text)?;
        Ok(cfg)
    }

    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.cs.is_empty() {
            return Err(Error::Config("at least one C value is required".into()));
        }
        if self.cs.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::Config(format!("C values must be strictly decreasing: {:?}", self.cs)));
        }
        if self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be at least 1".into()));
        }
        if self.histogram_bins == 0 || self.grid_points < 2 {
            return Err(Error::Config("histogram needs ≥ 1 bin and the error grid ≥ 2 points".into()));
        }
        for &c in &self.cs {
            self.adapt_config(c).validate()?;
        }
        Ok(())
    }

    pub fn recovery(&self) -> RecoveryConfig {
        if self.epsilon == 0.0 {
            RecoveryConfig::equality()
        } else {
            RecoveryConfig::residual(self.epsilon)
        }
    }

    pub fn adapt_config(&self, c: f64) -> AdaptConfig {
        AdaptConfig {
            c,
            n0: self.n0,
            n_s: self.n_s,
            max_depth: self.max_depth,
            sampling: self.sampling,
            seed: self.seed,
            recovery: self.recovery(),
            sample_cap: self.sample_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub c: f64,
    pub n_sb: usize,
    pub mean: f64,
    pub variance: f64,
    pub mse: f64,
    pub model_evals: usize,
    pub wall_time_s: f64,
}

impl ReportRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.12e},{:.12e},{:.12e},{},{:.6}",
            format_c(self.c),
            self.n_sb,
            self.mean,
            self.variance,
            self.mse,
            self.model_evals,
            self.wall_time_s
        )
    }
}

/// Compact scientific form used in tables and file names, e.g. `5e-4`.
pub fn format_c(c: f64) -> String {
    format!("{c:e}")
}

#[derive(Debug, Clone)]
pub struct McResult {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

/// Sample mean and `1/(N − 1)` variance, summed in index order about the
/// first value so that constant data gives exactly zero variance.
pub fn sample_moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let shift = values[0];
    let (s1, s2) = values.iter().fold((0.0, 0.0), |(s1, s2), v| {
        let d = v - shift;
        (s1 + d, s2 + d * d)
    });
    let mean = shift + s1 / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    (mean, ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0))
}

/// `n` uniform points in the model box with their model values.
pub fn run_mc(model: &dyn StochasticModel, n: usize, seed: u64) -> Result<McResult> {
    if n == 0 {
        return Err(Error::Config("Monte Carlo needs at least one sample".into()));
    }
    let bx = model.input_box().to_vec();
    let mut rng = rng::stream(seed, [u64::MAX]);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| bx.iter().map(|&(a, b)| a + (b - a) * rng.gen::<f64>()).collect())
        .collect();
    let values = points
        .par_iter()
        .map(|x| model.evaluate(x))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, variance) = sample_moments(&values);
    Ok(McResult {
        points,
        values,
        mean,
        variance,
    })
}

/// Mean squared difference.
pub fn mse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(Error::Contract(format!(
            "mse of {} predictions against {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let s: f64 = predictions.iter().zip(truths).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(s / predictions.len() as f64)
}

pub fn predict(tree: &PartitionTree, x: &[f64]) -> Result<f64> {
    tree.predict(x)
}

/// Surrogate values at every point, in order.
pub fn predict_all(tree: &PartitionTree, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points.par_iter().map(|x| tree.predict(x)).collect()
}

/// Total cost `n_s · N_sb · scc` for a per-sample cost `scc`.
pub fn cost_estimate(n_s: usize, n_sb: usize, scc_seconds: f64) -> f64 {
    n_s as f64 * n_sb as f64 * scc_seconds
}

#[derive(Debug)]
pub struct Experiment {
    pub rows: Vec<ReportRow>,
    pub trees: Vec<PartitionTree>,
    pub mc: McResult,
}

/// Runs the sweep for a registered model and writes outputs if an output
/// directory is configured. On failure, rows completed so far are flushed to
/// the results table before the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let model = model_by_name(&cfg.model)?;
    run_experiment_with(model.as_ref(), cfg)
}

pub fn run_experiment_with(model: &dyn StochasticModel, cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let mc = run_mc(model, cfg.mc_samples, cfg.mc_seed)?;
    log::info!("Monte Carlo reference: mean {:.8}, variance {:.8}", mc.mean, mc.variance);
    let mut rows = Vec::new();
    let mut trees = Vec::new();
    for &c in &cfg.cs {
        match sweep_row(model, cfg, c, &mc) {
            Ok((row, tree)) => {
                log::info!("C = {}: N_sb = {}, mse = {:e}", format_c(c), row.n_sb, row.mse);
                rows.push(row);
                trees.push(tree);
            }
            Err(e) => {
                if let Some(dir) = &cfg.out_dir {
                    write_results(dir, &rows)?;
                }
                return Err(e);
            }
        }
    }
    let exp = Experiment { rows, trees, mc };
    if let Some(dir) = &cfg.out_dir {
        emit_outputs(dir, model, cfg, &exp)?;
    }
    Ok(exp)
}

fn sweep_row(
    model: &dyn StochasticModel,
    cfg: &ExperimentConfig,
    c: f64,
    mc: &McResult,
) -> Result<(ReportRow, PartitionTree)> {
    let start = Instant::now();
    let tree = adapt_loop(model, &cfg.adapt_config(c))?;
    let (mean, variance) = tree.statistics()?;
    let wall = start.elapsed().as_secs_f64();
    let predictions = predict_all(&tree, &mc.points)?;
    let row = ReportRow {
        c,
        n_sb: tree.n_sb(),
        mean,
        variance,
        mse: mse(&predictions, &mc.values)?,
        model_evals: tree.model_evals,
        wall_time_s: if cfg.timing { wall } else { 0.0 },
    };
    Ok((row, tree))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn results_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

fn write_results(dir: &Path, rows: &[ReportRow]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("results.csv"), &results_csv(rows))
}

/// Leaf boxes, one row per leaf: `leaf,depth,lower_1,upper_1,…,mean,variance`.
pub fn partition_csv(tree: &PartitionTree) -> String {
    let n = tree.root.dims();
    let mut out = String::from("leaf,depth");
    for j in 1..=n {
        write!(out, ",lower_{j},upper_{j}").unwrap();
    }
    out.push_str(",mean,variance\n");
    for (id, leaf) in tree.leaves.iter().enumerate() {
        write!(out, "{id},{}", leaf.part.depth()).unwrap();
        for (a, b) in leaf.part.bounds() {
            write!(out, ",{a:.17e},{b:.17e}").unwrap();
        }
        writeln!(out, ",{:.17e},{:.17e}", leaf.solution.mean, leaf.solution.variance).unwrap();
    }
    out
}

/// Sample points of every final leaf: `leaf,x_1,…,x_n`.
pub fn samples_csv(tree: &PartitionTree) -> String {
    let mut out = String::from("leaf");
    for j in 1..=tree.root.dims() {
        write!(out, ",x_{j}").unwrap();
    }
    out.push('\n');
    for (id, leaf) in tree.leaves.iter().enumerate() {
        for x in &leaf.samples {
            write!(out, "{id}").unwrap();
            for v in x {
                write!(out, ",{v:.17e}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// `|truth − prediction|` on a `g × g` grid over a 2D box: `x_1,x_2,abs_error`.
pub fn error_grid_csv(model: &dyn StochasticModel, tree: &PartitionTree, g: usize) -> Result<String> {
    let bx = model.input_box();
    let points: Vec<Vec<f64>> = (0..g)
        .flat_map(|i| {
            (0..g).map(move |k| {
                let t = |n: usize, (a, b): (f64, f64)| a + (b - a) * n as f64 / (g - 1) as f64;
                vec![t(i, bx[0]), t(k, bx[1])]
            })
        })
        .collect();
    let errs = points
        .par_iter()
        .map(|x| Ok((model.evaluate(x)? - tree.predict(x)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = String::from("x_1,x_2,abs_error\n");
    for (x, e) in points.iter().zip(errs) {
        writeln!(out, "{:.17e},{:.17e},{e:.17e}", x[0], x[1]).unwrap();
    }
    Ok(out)
}

/// Equal-width histogram of Monte Carlo values: `bin_lower,bin_upper,count,density`.
pub fn histogram_csv(values: &[f64], bins: usize) -> String {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut out = String::from("bin_lower,bin_upper,count,density\n");
    for (b, &n) in counts.iter().enumerate() {
        let a = lo + b as f64 * width;
        let density = n as f64 / (values.len() as f64 * width);
        writeln!(out, "{a:.17e},{:.17e},{n},{density:.17e}", a + width).unwrap();
    }
    out
}

/// Writes `results.csv`, `histogram.csv`, and per-C `tree_C<c>.txt`,
/// `partition_C<c>.csv`, `samples_C<c>.csv` and, for 2D models,
/// `error_grid_C<c>.csv`.
pub fn emit_outputs(dir: &Path, model: &dyn StochasticModel, cfg: &ExperimentConfig, exp: &Experiment) -> Result<()> {
    write_results(dir, &exp.rows)?;
    write_file(&dir.join("histogram.csv"), &histogram_csv(&exp.mc.values, cfg.histogram_bins))?;
    for (row, tree) in exp.rows.iter().zip(&exp.trees) {
        let tag = format_c(row.c);
        write_file(&dir.join(format!("tree_C{tag}.txt")), &tree.dump())?;
        write_file(&dir.join(format!("partition_C{tag}.csv")), &partition_csv(tree))?;
        write_file(&dir.join(format!("samples_C{tag}.csv")), &samples_csv(tree))?;
        if model.dimension() == 2 {
            let grid = error_grid_csv(model, tree, cfg.grid_points)?;
            write_file(&dir.join(format!("error_grid_C{tag}.csv")), &grid)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnModel;
    use crate::tensor::parse_leaf_records;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn cost_examples() {
        assert!((cost_estimate(14, 210, 0.01) - 29.4).abs() < 1e-12);
        assert_eq!(cost_estimate(0, 50, 3.0), 0.0);
        assert_eq!(cost_estimate(3, 20, 0.5), 2.0 * cost_estimate(3, 10, 0.5));
    }

    #[test]
    fn constant_mc() {
        let m = FnModel::new("c", vec![(0.0, 1.0), (0.0, 20.0)], |_: &[f64]| Ok(0.35));
        let r = run_mc(&m, 1000, 3).unwrap();
        assert_eq!(r.variance, 0.0);
        assert_eq!(r.mean, 0.35);
    }

    #[test]
    fn line_singularity_mc_mean() {
        let m = model_by_name("line_singularity").unwrap();
        let r = run_mc(m.as_ref(), 1_000_000, 5).unwrap();
        let sd = (1.0f64 / 16.0 - 1.0 / std::f64::consts::PI.powi(4)).sqrt();
        let band = 3.0 * sd / 1000.0;
        assert!((r.mean - 1.0 / std::f64::consts::PI.powi(2)).abs() <= band);
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_kv_str(
            "model = surface_absorption\n# comment\nn0 = 3\nns = 14\nc = 5e-2, 1e-2, 1e-4\nsampling = chebyshev\n",
        )
        .unwrap();
        assert_eq!(cfg.model, "surface_absorption");
        assert_eq!(cfg.cs, vec![5e-2, 1e-2, 1e-4]);
        assert_eq!(cfg.sampling, Sampling::Chebyshev);
        cfg.validate().unwrap();
        let mut bad = cfg.clone();
        bad.cs = vec![1e-2, 5e-2];
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_kv_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_kv_str("n0 = x").is_err());
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_c(5e-4), "5e-4");
        assert_eq!(format_c(1e-2), "1e-2");
        assert_eq!(format_c(0.05), "5e-2");
    }

    #[test]
    fn predict_on_single_leaf_and_faces() {
        let m = FnModel::new("c", vec![(0.0, 1.0), (0.0, 1.0)], |_: &[f64]| Ok(0.35));
        let tree = adapt_loop(&m, &AdaptConfig::default()).unwrap();
        // Residual mode shrinks the constant term by at most ε = 1e-8.
        assert!((predict(&tree, &[0.3, 0.9]).unwrap() - 0.35).abs() < 2e-8);
        assert!((predict(&tree, &[1.0, 1.0]).unwrap() - 0.35).abs() < 2e-8);

        let step = FnModel::new("s", vec![(0.0, 1.0), (0.0, 1.0)], |x: &[f64]| {
            Ok(if x[0] < 0.5 { 0.0 } else { 1.0 })
        });
        let cfg = AdaptConfig {
            n0: 1,
            c: 1e-3,
            ..Default::default()
        };
        let tree = adapt_loop(&step, &cfg).unwrap();
        let leaf = tree.locate(&[0.5, 0.3]).unwrap();
        assert_eq!(leaf.part.bounds()[0].0, 0.5);
    }

    #[test]
    fn end_to_end_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            cs: vec![5e-2, 1e-2],
            mc_samples: 2000,
            grid_points: 21,
            timing: false,
            out_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        let exp = run_experiment(&cfg).unwrap();
        let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), RESULTS_HEADER);
        assert_eq!(csv.lines().count(), 3);
        let tree_text = fs::read_to_string(dir.path().join("tree_C5e-2.txt")).unwrap();
        assert_eq!(parse_leaf_records(&tree_text).unwrap().len(), exp.rows[0].n_sb);
        let grid = fs::read_to_string(dir.path().join("error_grid_C1e-2.csv")).unwrap();
        assert_eq!(grid.lines().count(), 1 + 21 * 21);
        // The reported error is exactly the error of the surrogate at the MC points.
        let pred = predict_all(&exp.trees[1], &exp.mc.points).unwrap();
        assert_eq!(mse(&pred, &exp.mc.values).unwrap(), exp.rows[1].mse);
        for (row, tree) in exp.rows.iter().zip(&exp.trees) {
            assert_eq!(row.model_evals, cfg.n_s * tree.fit_calls);
        }
    }
}
