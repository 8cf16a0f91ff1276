//! Multi-dimensional index sets, sub-partitions and the local mixed basis.
//!
//! On a leaf with local coordinates `ζ ∈ [0, 1]^n` the expansion is
//!
//! ```text
//! u(ζ) ≈ Σ_{|ι| ≤ n0} u_ι Π_j Φ_{ι_j}(ζ_j) + Σ_{j=1}^{n} Σ_{i=0}^{n0} u_{j,i} Ψ_i(ζ_j)
//! ```
//!
//! Detail terms are univariate: `Ψ_i` acts along one direction and is constant
//! in the others. All terms are orthonormal under the uniform measure on the
//! leaf, so the mean is the coefficient of the zero index and the variance is
//! the sum of the remaining squared coefficients.

use std::fmt::{self, Write as _};

use crate::mwbasis::MwBasis;
use crate::{Error, Result};

/// Per-dimension polynomial degrees `ι = (ι_1, …, ι_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("phi(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

/// A univariate detail term: wavelet `member` along dimension `dim` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Detail {
    pub dim: usize,
    pub member: usize,
}

/// Ordered enumeration of the local basis: the scaling part (total degree
/// `≤ n0`, graded, with the zero index first), then details by `(dim, member)`.
///
/// Within one total degree, multi-indices are ordered lexicographically with
/// larger leading entries first, e.g. `(1,0)` before `(0,1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    n0: usize,
    n: usize,
    scaling: Vec<MultiIndex>,
    details: Vec<Detail>,
}

impl IndexSet {
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn dims(&self) -> usize {
        self.n
    }

    pub fn scaling_part(&self) -> &[MultiIndex] {
        &self.scaling
    }

    pub fn detail_part(&self) -> &[Detail] {
        &self.details
    }

    /// Total number of basis terms `P`.
    pub fn len(&self) -> usize {
        self.scaling.len() + self.details.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of a detail term in the coefficient vector.
    pub fn detail_position(&self, dim: usize, member: usize) -> usize {
        self.scaling.len() + dim * (self.n0 + 1) + member
    }

    pub fn scaling_position(&self, index: &MultiIndex) -> Option<usize> {
        self.scaling.iter().position(|m| m == index)
    }

    /// Printable labels in coefficient order: `phi(1,0)` or `psi_x2(1)` (the
    /// dimension number is 1-based in labels).
    pub fn labels(&self) -> Vec<String> {
        self.scaling
            .iter()
            .map(|m| m.to_string())
            .chain(
                self.details
                    .iter()
                    .map(|d| format!("psi_x{}({})", d.dim + 1, d.member)),
            )
            .collect()
    }

    fn check_len(&self, coefficients: &[f64]) -> Result<()> {
        if coefficients.len() != self.len() {
            return Err(Error::Contract(format!(
                "coefficient vector has length {}, index set has {}",
                coefficients.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// `(n + n0)! / (n! n0!) + n (n0 + 1)`.
pub fn basis_size(n0: usize, n: usize) -> usize {
    let mut binom: usize = 1;
    for k in 1..=n0 {
        binom = binom * (n + k) / k;
    }
    binom + n * (n0 + 1)
}

fn push_with_total(prefix: &mut Vec<u32>, remaining_dims: usize, total: u32, out: &mut Vec<MultiIndex>) {
    if remaining_dims == 1 {
        prefix.push(total);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        push_with_total(prefix, remaining_dims - 1, total - first, out);
        prefix.pop();
    }
}

pub fn enumerate_indices(n0: usize, n: usize) -> Result<IndexSet> {
    if n == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let mut scaling = Vec::new();
    for total in 0..=n0 as u32 {
        push_with_total(&mut Vec::with_capacity(n), n, total, &mut scaling);
    }
    let details = (0..n)
        .flat_map(|dim| (0..=n0).map(move |member| Detail { dim, member }))
        .collect();
    Ok(IndexSet {
        n0,
        n,
        scaling,
        details,
    })
}

/// An axis-aligned box of the input space together with its dyadic address
/// relative to the root box: along dimension `j` the box is the `shifts[j]`-th
/// of `2^levels[j]` equal slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SubPartition {
    bounds: Vec<(f64, f64)>,
    levels: Vec<u32>,
    shifts: Vec<u64>,
    depth: u32,
}

impl SubPartition {
    pub fn root(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("input box has no dimensions".into()));
        }
        for (j, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Config(format!(
                    "interval {j} of the input box is empty or not finite: [{a}, {b}]"
                )));
            }
        }
        Ok(SubPartition {
            bounds: bounds.to_vec(),
            levels: vec![0; bounds.len()],
            shifts: vec![0; bounds.len()],
            depth: 0,
        })
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn shifts(&self) -> &[u64] {
        &self.shifts
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|(a, b)| b - a).product()
    }

    /// Volume in the frame where the root box has volume 1.
    pub fn normalized_volume(&self) -> f64 {
        (-(self.levels.iter().sum::<u32>() as f64)).exp2()
    }

    /// Whether `dim`'s upper face lies on the upper face of the root box.
    fn upper_is_global(&self, dim: usize) -> bool {
        self.shifts[dim] + 1 == 1u64 << self.levels[dim]
    }

    /// Half-open membership `[a, b)`, closed on the root box's upper faces.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && self.bounds.iter().enumerate().all(|(j, &(a, b))| {
                x[j] >= a && (x[j] < b || (x[j] == b && self.upper_is_global(j)))
            })
    }

    /// Bisects along `dim`; children have depth `depth + 1`.
    pub fn split(&self, dim: usize) -> Result<(SubPartition, SubPartition)> {
        if dim >= self.dims() {
            return Err(Error::Contract(format!(
                "split dimension {dim} out of range for {} dimensions",
                self.dims()
            )));
        }
        let (a, b) = self.bounds[dim];
        let mid = 0.5 * (a + b);
        let mut lower = self.clone();
        let mut upper = self.clone();
        lower.bounds[dim] = (a, mid);
        upper.bounds[dim] = (mid, b);
        lower.levels[dim] += 1;
        upper.levels[dim] += 1;
        lower.shifts[dim] *= 2;
        upper.shifts[dim] = 2 * self.shifts[dim] + 1;
        lower.depth += 1;
        upper.depth += 1;
        Ok((lower, upper))
    }

    pub(crate) fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth;
        self
    }

    /// Maps a local point `ζ ∈ [0, 1]^n` to the input space.
    pub fn from_local(&self, zeta: &[f64]) -> Vec<f64> {
        self.bounds
            .iter()
            .zip(zeta)
            .map(|(&(a, b), z)| a + (b - a) * z)
            .collect()
    }
}

const COORD_SLACK: f64 = 1e-12;

/// `ζ_j = (x_j − a_j) / (b_j − a_j)`, accepting points within a `1e-12` slack
/// of the box (scaled by the interval width) and clamping them into `[0, 1]`.
pub fn to_local_coords(part: &SubPartition, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != part.dims() {
        return Err(Error::Contract(format!(
            "point has {} coordinates, partition has {}",
            x.len(),
            part.dims()
        )));
    }
    part.bounds
        .iter()
        .zip(x)
        .enumerate()
        .map(|(dim, (&(a, b), &v))| {
            let width = b - a;
            let z = (v - a) / width;
            let slack = COORD_SLACK * width.abs().max(1.0) / width;
            if !(z >= -slack && z <= 1.0 + slack) {
                return Err(Error::Domain {
                    dim,
                    value: v,
                    lower: a,
                    upper: b,
                });
            }
            Ok(z.clamp(0.0, 1.0))
        })
        .collect()
}

/// Evaluates all `P` basis terms at local coordinates `zeta` into `out`.
///
/// `scratch` must hold `2 n (n0 + 1)` values.
pub fn eval_row_local(idx: &IndexSet, bases: &MwBasis, zeta: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    let m = idx.n0 + 1;
    let n = idx.n;
    let (phi, psi) = scratch.split_at_mut(n * m);
    for (j, &z) in zeta.iter().enumerate() {
        bases.scaling.eval_all(z, &mut phi[j * m..(j + 1) * m]);
        bases.wavelets.eval_all(z, &mut psi[j * m..(j + 1) * m]);
    }
    let ns = idx.scaling.len();
    for (o, mi) in out[..ns].iter_mut().zip(&idx.scaling) {
        *o = mi
            .0
            .iter()
            .enumerate()
            .map(|(j, &e)| phi[j * m + e as usize])
            .product();
    }
    for (o, d) in out[ns..].iter_mut().zip(&idx.details) {
        *o = psi[d.dim * m + d.member];
    }
}

/// Basis row at an input-space point of `part`.
pub fn eval_row(idx: &IndexSet, bases: &MwBasis, part: &SubPartition, x: &[f64]) -> Result<Vec<f64>> {
    let zeta = to_local_coords(part, x)?;
    let mut out = vec![0.0; idx.len()];
    let mut scratch = vec![0.0; 2 * idx.n * (idx.n0 + 1)];
    eval_row_local(idx, bases, &zeta, &mut out, &mut scratch);
    Ok(out)
}

/// Value of the local expansion at local coordinates.
pub fn eval_expansion_local(idx: &IndexSet, bases: &MwBasis, coefficients: &[f64], zeta: &[f64]) -> f64 {
    let mut row = vec![0.0; idx.len()];
    let mut scratch = vec![0.0; 2 * idx.n * (idx.n0 + 1)];
    eval_row_local(idx, bases, zeta, &mut row, &mut scratch);
    row.iter().zip(coefficients).map(|(r, c)| r * c).sum()
}

pub fn local_mean(coefficients: &[f64], idx: &IndexSet) -> Result<f64> {
    idx.check_len(coefficients)?;
    Ok(coefficients[0])
}

/// Total variance and per-direction detail energies `σ_j² = Σ_i u_{j,i}²`.
pub fn local_variance(coefficients: &[f64], idx: &IndexSet) -> Result<(f64, Vec<f64>)> {
    idx.check_len(coefficients)?;
    let ns = idx.scaling.len();
    let scaling_part: f64 = coefficients[1..ns].iter().map(|c| c * c).sum();
    let mut dir = vec![0.0; idx.n];
    for (d, c) in idx.details.iter().zip(&coefficients[ns..]) {
        dir[d.dim] += c * c;
    }
    let variance = scaling_part + dir.iter().sum::<f64>();
    Ok((variance, dir))
}

/// Recovered expansion on one leaf with its local moments.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafSolution {
    pub coefficients: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub dir_variance: Vec<f64>,
    pub samples_used: usize,
}

impl LeafSolution {
    pub fn from_coefficients(coefficients: Vec<f64>, idx: &IndexSet, samples_used: usize) -> Result<Self> {
        let mean = local_mean(&coefficients, idx)?;
        let (variance, dir_variance) = local_variance(&coefficients, idx)?;
        Ok(LeafSolution {
            coefficients,
            mean,
            variance,
            dir_variance,
            samples_used,
        })
    }
}

/// Global mean and variance from leaf moments under the uniform input
/// measure: with `w_i = Vol(Ω_i) / Vol(Ω)`,
/// `mean = Σ w_i E_i` and `variance = Σ w_i (E_i² + σ_i²) − mean²`.
pub fn aggregate_statistics<'a, I>(leaves: I, domain_volume: f64) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = (&'a SubPartition, &'a LeafSolution)>,
{
    let mut covered = 0.0;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (part, sol) in leaves {
        let w = part.volume() / domain_volume;
        covered += w;
        mean += w * sol.mean;
        second += w * (sol.mean * sol.mean + sol.variance);
    }
    if (covered - 1.0).abs() > 1e-9 {
        return Err(Error::Partition(format!(
            "leaf volumes cover {covered} of the domain instead of 1"
        )));
    }
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// Writes one leaf record of the line-oriented coefficient format:
///
/// ```text
/// leaf <id> depth <d>
/// bounds <a_1> <b_1> ... <a_n> <b_n>
/// labels <label_1> ... <label_P>
/// coefficients <u_1> ... <u_P>
/// mean <E>
/// variance <σ²>
/// dir_variance <σ_1²> ... <σ_n²>
/// samples <n_s>
/// end
/// ```
pub fn write_leaf_record(out: &mut String, id: usize, part: &SubPartition, idx: &IndexSet, sol: &LeafSolution) {
    writeln!(out, "leaf {id} depth {}", part.depth()).unwrap();
    out.push_str("bounds");
    for (a, b) in part.bounds() {
        write!(out, " {a:.17e} {b:.17e}").unwrap();
    }
    out.push_str("\nlabels");
    for l in idx.labels() {
        write!(out, " {l}").unwrap();
    }
    out.push_str("\ncoefficients");
    for c in &sol.coefficients {
        write!(out, " {c:.17e}").unwrap();
    }
    writeln!(out, "\nmean {:.17e}", sol.mean).unwrap();
    writeln!(out, "variance {:.17e}", sol.variance).unwrap();
    out.push_str("dir_variance");
    for v in &sol.dir_variance {
        write!(out, " {v:.17e}").unwrap();
    }
    writeln!(out, "\nsamples {}", sol.samples_used).unwrap();
    out.push_str("end\n");
}

/// One parsed leaf record.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafRecord {
    pub id: usize,
    pub depth: u32,
    pub bounds: Vec<(f64, f64)>,
    pub labels: Vec<String>,
    pub coefficients: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub dir_variance: Vec<f64>,
    pub samples: usize,
}

/// Parses every leaf record in `text`; unknown record types are ignored so
/// that dumps carrying extra sections remain readable.
pub fn parse_leaf_records(text: &str) -> Result<Vec<LeafRecord>> {
    let bad = |n: usize, what: &str| Error::Contract(format!("leaf record line {}: {what}", n + 1));
    let floats = |toks: &[&str], n: usize| -> Result<Vec<f64>> {
        toks.iter()
            .map(|t| t.parse::<f64>().map_err(|_| bad(n, "malformed number")))
            .collect()
    };
    let mut out = Vec::new();
    let mut cur: Option<LeafRecord> = None;
    for (n, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some(&head) = toks.first() else { continue };
        if head == "leaf" {
            if toks.len() != 4 || toks[2] != "depth" {
                return Err(bad(n, "bad leaf header"));
            }
            cur = Some(LeafRecord {
                id: toks[1].parse().map_err(|_| bad(n, "bad id"))?,
                depth: toks[3].parse().map_err(|_| bad(n, "bad depth"))?,
                bounds: Vec::new(),
                labels: Vec::new(),
                coefficients: Vec::new(),
                mean: 0.0,
                variance: 0.0,
                dir_variance: Vec::new(),
                samples: 0,
            });
            continue;
        }
        let Some(rec) = cur.as_mut() else { continue };
        match head {
            "bounds" => {
                let v = floats(&toks[1..], n)?;
                if v.len() % 2 != 0 {
                    return Err(bad(n, "odd number of bounds"));
                }
                rec.bounds = v.chunks(2).map(|c| (c[0], c[1])).collect();
            }
            "labels" => rec.labels = toks[1..].iter().map(|s| s.to_string()).collect(),
            "coefficients" => rec.coefficients = floats(&toks[1..], n)?,
            "mean" => rec.mean = floats(&toks[1..2], n)?[0],
            "variance" => rec.variance = floats(&toks[1..2], n)?[0],
            "dir_variance" => rec.dir_variance = floats(&toks[1..], n)?,
            "samples" => rec.samples = toks[1].parse().map_err(|_| bad(n, "bad sample count"))?,
            "end" => out.push(cur.take().unwrap()),
            _ => {}
        }
    }
    Ok(out)
}
