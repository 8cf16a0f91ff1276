//! Adaptive partitioning of the input box.
//!
//! Each round fits every newly created leaf from fresh samples, flags the
//! dimensions whose detail energy is large relative to the leaf variance, and
//! bisects flagged leaves along all flagged dimensions. Untouched leaves are
//! never refitted.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::csolve::{self, RecoveryConfig};
use crate::models::StochasticModel;
use crate::mwbasis::{MwBasis, MAX_ORDER};
use crate::rng;
use crate::tensor::{
    aggregate_statistics, enumerate_indices, eval_expansion_local, to_local_coords, write_leaf_record, IndexSet,
    LeafSolution, SubPartition,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Uniform per coordinate, no preconditioning.
    #[default]
    Uniform,
    /// Chebyshev (arcsine) per coordinate with the matching row weights.
    Chebyshev,
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Sampling::Uniform),
            "chebyshev" => Ok(Sampling::Chebyshev),
            _ => Err(Error::Config(format!("unknown sampling scheme {s:?}"))),
        }
    }
}

impl std::fmt::Display for Sampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sampling::Uniform => "uniform",
            Sampling::Chebyshev => "chebyshev",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    /// Refinement threshold constant.
    pub c: f64,
    pub n0: usize,
    /// Samples per leaf.
    pub n_s: usize,
    pub max_depth: u32,
    pub sampling: Sampling,
    pub seed: u64,
    pub recovery: RecoveryConfig,
    /// Upper bound on total model evaluations, if any.
    pub sample_cap: Option<usize>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            c: 5e-2,
            n0: 2,
            n_s: 8,
            max_depth: 8,
            sampling: Sampling::Uniform,
            seed: 0,
            recovery: RecoveryConfig::default(),
            sample_cap: None,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if self.n_s == 0 {
            return Err(Error::Config("n_s must be at least 1".into()));
        }
        if self.n0 > MAX_ORDER {
            return Err(Error::Config(format!("n0 must be at most {MAX_ORDER}, got {}", self.n0)));
        }
        self.recovery.validate()
    }
}

/// Relative floor below which a leaf variance counts as zero.
pub const VARIANCE_FLOOR: f64 = 1e-14;

/// `n_s` points in `part`, drawn from a stream keyed by the seed and the
/// leaf's dyadic address.
pub fn draw_samples(part: &SubPartition, n_s: usize, sampling: Sampling, seed: u64) -> Vec<Vec<f64>> {
    let path = part
        .levels()
        .iter()
        .zip(part.shifts())
        .flat_map(|(&l, &s)| [l as u64, s]);
    let mut rng = rng::stream(seed, path);
    (0..n_s)
        .map(|_| {
            let zeta: Vec<f64> = (0..part.dims())
                .map(|_| {
                    let u: f64 = rng.gen();
                    match sampling {
                        Sampling::Uniform => u,
                        Sampling::Chebyshev => 0.5 * (1.0 + (std::f64::consts::PI * u).cos()),
                    }
                })
                .collect();
            part.from_local(&zeta)
        })
        .collect()
}

/// A fitted leaf with the data it was fitted from.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub part: SubPartition,
    pub solution: LeafSolution,
    pub samples: Vec<Vec<f64>>,
    pub solver_iterations: usize,
    pub duality_gap: f64,
}

/// Samples `part`, evaluates the model, and recovers the local expansion.
pub fn fit_leaf(model: &dyn StochasticModel, part: &SubPartition, cfg: &AdaptConfig) -> Result<Leaf> {
    let idx = enumerate_indices(cfg.n0, part.dims())?;
    let bases = MwBasis::new(cfg.n0)?;
    fit_leaf_with(model, part, cfg, &idx, &bases)
}

pub(crate) fn fit_leaf_with(
    model: &dyn StochasticModel,
    part: &SubPartition,
    cfg: &AdaptConfig,
    idx: &IndexSet,
    bases: &MwBasis,
) -> Result<Leaf> {
    let samples = draw_samples(part, cfg.n_s, cfg.sampling, cfg.seed);
    let values = samples
        .iter()
        .map(|x| {
            model.evaluate(x).map_err(|e| match e {
                Error::Model { message, .. } => Error::Model {
                    point: x.clone(),
                    message,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut sys = csolve::assemble(&samples, &values, idx, bases, part)?;
    if cfg.sampling == Sampling::Chebyshev {
        sys = csolve::precondition(&sys);
    }
    let rec = recover_leaf(&sys, &cfg.recovery)?;
    let solution = LeafSolution::from_coefficients(rec.coefficients, idx, cfg.n_s)?;
    Ok(Leaf {
        part: part.clone(),
        solution,
        samples,
        solver_iterations: rec.iterations,
        duality_gap: rec.duality_gap,
    })
}

/// Recovery that tolerates singular leaf systems. When the samples make the
/// system inconsistent (e.g. fewer than `n0 + 1` points in one half of a
/// direction), the residual bound is widened to the least-squares floor.
fn recover_leaf(sys: &csolve::MeasurementSystem, cfg: &RecoveryConfig) -> Result<csolve::Recovery> {
    match csolve::recover(sys, cfg) {
        Err(err @ Error::Recovery { .. }) => {
            let bound = (sys.samples() as f64).sqrt() * cfg.epsilon;
            let floor = csolve::least_squares_residual(&sys.matrix, &sys.rhs);
            if floor <= bound + cfg.solver_tol * sys.rhs.norm() {
                return Err(err);
            }
            log::warn!("inconsistent leaf system, widening residual bound to {floor:e}");
            let delta = floor * (1.0 + 1e-6) + bound;
            csolve::basis_pursuit_denoise(&sys.matrix, &sys.rhs, delta, cfg.solver_tol, cfg.max_iter)
        }
        other => other,
    }
}

/// Dimensions `j` (ascending, 0-based) with `σ_j² / σ² ≥ C / sqrt(Vol)`,
/// where `Vol` is the leaf volume relative to the root box.
pub fn needs_refinement(sol: &LeafSolution, part: &SubPartition, c: f64) -> Vec<usize> {
    let var = sol.variance;
    if var <= VARIANCE_FLOOR * sol.mean.powi(2).max(1.0) {
        return Vec::new();
    }
    let threshold = c / part.normalized_volume().sqrt();
    sol.dir_variance
        .iter()
        .enumerate()
        .filter(|(_, s)| **s / var >= threshold)
        .map(|(j, _)| j)
        .collect()
}

/// Bisects `part` along each of `dims` in turn; all children sit one level
/// below the parent.
pub fn split(part: &SubPartition, dims: &[usize]) -> Result<Vec<SubPartition>> {
    let mut parts = vec![part.clone()];
    for &j in dims {
        let mut next = Vec::with_capacity(2 * parts.len());
        for p in &parts {
            let (lo, hi) = p.split(j)?;
            next.push(lo);
            next.push(hi);
        }
        parts = next;
    }
    Ok(parts
        .into_iter()
        .map(|p| p.with_depth(part.depth() + 1))
        .collect())
}

/// One bisection event: the parent box and the dimensions it was split along.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvent {
    pub round: usize,
    pub parent: Vec<(f64, f64)>,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PartitionTree {
    pub root: SubPartition,
    pub index_set: IndexSet,
    pub basis: MwBasis,
    pub leaves: Vec<Leaf>,
    pub history: Vec<SplitEvent>,
    pub rounds: usize,
    pub fit_calls: usize,
    pub model_evals: usize,
}

impl PartitionTree {
    pub fn n_sb(&self) -> usize {
        self.leaves.len()
    }

    /// Global mean and variance aggregated over the leaves.
    pub fn statistics(&self) -> Result<(f64, f64)> {
        aggregate_statistics(
            self.leaves.iter().map(|l| (&l.part, &l.solution)),
            self.root.volume(),
        )
    }

    /// The leaf containing `x` under the half-open convention.
    pub fn locate(&self, x: &[f64]) -> Result<&Leaf> {
        self.leaves
            .iter()
            .find(|l| l.part.contains(x))
            .ok_or_else(|| Error::Partition(format!("no leaf contains {x:?}")))
    }

    /// Evaluates the surrogate at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let leaf = self.locate(x)?;
        let zeta = to_local_coords(&leaf.part, x)?;
        Ok(eval_expansion_local(
            &self.index_set,
            &self.basis,
            &leaf.solution.coefficients,
            &zeta,
        ))
    }

    /// Checks that leaf volumes sum to the root volume and, for up to 256
    /// leaves, that no two leaves overlap.
    pub fn check_tiling(&self) -> Result<()> {
        let total: f64 = self.leaves.iter().map(|l| l.part.volume()).sum();
        let vol = self.root.volume();
        if ((total - vol) / vol).abs() > 1e-9 {
            return Err(Error::Partition(format!("leaf volumes sum to {total}, root volume is {vol}")));
        }
        if self.leaves.len() <= 256 {
            for (i, a) in self.leaves.iter().enumerate() {
                for b in &self.leaves[i + 1..] {
                    let overlap = a
                        .part
                        .bounds()
                        .iter()
                        .zip(b.part.bounds())
                        .all(|(&(a0, a1), &(b0, b1))| a0.max(b0) < a1.min(b1));
                    if overlap {
                        return Err(Error::Partition(format!(
                            "leaves {:?} and {:?} overlap",
                            a.part.bounds(),
                            b.part.bounds()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Leaf records in the shared coefficient format followed by the split
    /// history, one `split <round> dims <j…> bounds <a b …>` line per event.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, leaf) in self.leaves.iter().enumerate() {
            write_leaf_record(&mut out, id, &leaf.part, &self.index_set, &leaf.solution);
        }
        for ev in &self.history {
            write!(out, "split {} dims", ev.round).unwrap();
            for j in &ev.dims {
                write!(out, " {}", j + 1).unwrap();
            }
            out.push_str(" bounds");
            for (a, b) in &ev.parent {
                write!(out, " {a:.17e} {b:.17e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the adaptive loop from the model's full input box.
pub fn adapt_loop(model: &dyn StochasticModel, cfg: &AdaptConfig) -> Result<PartitionTree> {
    cfg.validate()?;
    let root = SubPartition::root(model.input_box())?;
    let index_set = enumerate_indices(cfg.n0, root.dims())?;
    let basis = MwBasis::new(cfg.n0)?;
    let mut tree = PartitionTree {
        root: root.clone(),
        index_set,
        basis,
        leaves: Vec::new(),
        history: Vec::new(),
        rounds: 0,
        fit_calls: 0,
        model_evals: 0,
    };
    let mut pending = vec![root];
    while !pending.is_empty() {
        if let Some(cap) = cfg.sample_cap {
            let requested = tree.model_evals + pending.len() * cfg.n_s;
            if requested > cap {
                return Err(Error::Budget {
                    requested,
                    cap,
                    partial: Box::new(tree),
                });
            }
        }
        let fitted: Vec<Result<Leaf>> = pending
            .par_iter()
            .map(|p| fit_leaf_with(model, p, cfg, &tree.index_set, &tree.basis))
            .collect();
        tree.fit_calls += pending.len();
        tree.model_evals += pending.len() * cfg.n_s;
        let round = tree.rounds;
        tree.rounds += 1;

        let mut next = Vec::new();
        for leaf in fitted {
            let leaf = leaf?;
            let flags = if leaf.part.depth() < cfg.max_depth {
                needs_refinement(&leaf.solution, &leaf.part, cfg.c)
            } else {
                Vec::new()
            };
            if flags.is_empty() {
                tree.leaves.push(leaf);
            } else {
                log::debug!("round {round}: splitting {:?} along {:?}", leaf.part.bounds(), flags);
                next.extend(split(&leaf.part, &flags)?);
                tree.history.push(SplitEvent {
                    round,
                    parent: leaf.part.bounds().to_vec(),
                    dims: flags,
                });
            }
        }
        pending = next;
    }
    log::info!(
        "adaptive loop finished: {} leaves, {} rounds, {} model evaluations",
        tree.n_sb(),
        tree.rounds,
        tree.model_evals
    );
    Ok(tree)
}
