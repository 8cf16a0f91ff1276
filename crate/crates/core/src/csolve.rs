//! Sampled measurement systems and sparse recovery by ℓ1 minimization.
//!
//! Both recovery problems are posed as conic programs and handed to an
//! interior-point solver:
//!
//! * basis pursuit, `min ‖c‖₁ s.t. A c = b`, as a linear program;
//! * basis pursuit denoising, `min ‖c‖₁ s.t. ‖A c − b‖₂ ≤ δ`, with one
//!   second-order cone for the residual ball.
//!
//! The interior point is then *polished*: the KKT system restricted to its
//! leading entries is solved in closed form and the candidate is accepted once
//! a dual certificate closes the duality gap to the requested tolerance. This
//! yields exact zeros off the support, which the refinement statistics rely
//! on. When ℓ1 minimizers are not unique the returned one is the first
//! certified support, largest first.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus, ZeroConeT,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::mwbasis::MwBasis;
use crate::quadrature::legendre_probabilists_into;
use crate::tensor::{eval_row_local, to_local_coords, IndexSet, SubPartition};
use crate::{Error, Result};

/// `A c ≈ b` with rows `A[i][λ] = Ψ̂_λ(x_i)`, optionally row-weighted.
#[derive(Debug, Clone)]
pub struct MeasurementSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Diagonal row weights when the system has been preconditioned.
    pub weights: Option<Vec<f64>>,
    pub sample_points: Vec<Vec<f64>>,
    /// Sample points in the leaf's local coordinates.
    pub local_points: Vec<Vec<f64>>,
}

impl MeasurementSystem {
    pub fn samples(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn terms(&self) -> usize {
        self.matrix.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryMode {
    /// Basis pursuit: exact data match.
    Equality,
    /// Basis pursuit denoising: `‖A c − b‖₂ ≤ sqrt(n_s) ε`.
    Residual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub mode: RecoveryMode,
    /// Per-sample noise level `ε`, in model output units.
    pub epsilon: f64,
    pub solver_tol: f64,
    pub max_iter: usize,
    /// The solver starts from the zero vector and draws no random numbers;
    /// no warm-started variant exists, so this must stay `true`.
    pub seedless: bool,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            mode: RecoveryMode::Residual,
            epsilon: 1e-8,
            solver_tol: 1e-9,
            max_iter: 20_000,
            seedless: true,
        }
    }
}

impl RecoveryConfig {
    pub fn equality() -> Self {
        RecoveryConfig {
            mode: RecoveryMode::Equality,
            epsilon: 0.0,
            ..Default::default()
        }
    }

    pub fn residual(epsilon: f64) -> Self {
        RecoveryConfig {
            mode: RecoveryMode::Residual,
            epsilon,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be finite and ≥ 0, got {}", self.epsilon)));
        }
        match self.mode {
            RecoveryMode::Equality if self.epsilon != 0.0 => {
                return Err(Error::Config("equality mode requires epsilon = 0".into()))
            }
            RecoveryMode::Residual if self.epsilon == 0.0 => {
                return Err(Error::Config("residual mode requires epsilon > 0".into()))
            }
            _ => {}
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::Config("solver_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !self.seedless {
            return Err(Error::Config("only the seedless (zero-start) solver is available".into()));
        }
        Ok(())
    }
}

/// Output of a recovery solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub coefficients: Vec<f64>,
    /// `‖A c − b‖₂` of the returned vector.
    pub residual: f64,
    pub iterations: usize,
    /// Primal ℓ1 norm minus the best dual objective found (≥ 0 up to rounding).
    pub duality_gap: f64,
}

pub fn assemble(
    points: &[Vec<f64>],
    observations: &[f64],
    idx: &IndexSet,
    bases: &MwBasis,
    part: &SubPartition,
) -> Result<MeasurementSystem> {
    if points.is_empty() || points.len() != observations.len() {
        return Err(Error::Contract(format!(
            "{} sample points for {} observations",
            points.len(),
            observations.len()
        )));
    }
    let p = idx.len();
    let mut matrix = DMatrix::zeros(points.len(), p);
    let mut row = vec![0.0; p];
    let mut scratch = vec![0.0; 2 * idx.dims() * (idx.n0() + 1)];
    let mut local_points = Vec::with_capacity(points.len());
    for (i, x) in points.iter().enumerate() {
        let zeta = to_local_coords(part, x)?;
        eval_row_local(idx, bases, &zeta, &mut row, &mut scratch);
        for (k, v) in row.iter().enumerate() {
            matrix[(i, k)] = *v;
        }
        local_points.push(zeta);
    }
    Ok(MeasurementSystem {
        matrix,
        rhs: DVector::from_column_slice(observations),
        weights: None,
        sample_points: points.to_vec(),
        local_points,
    })
}

/// Lower clamp for Chebyshev preconditioner weights.
pub const WEIGHT_FLOOR: f64 = 1e-6;

/// `(π/2)^{1/2} (1 − t²)^{1/4}` for `t ∈ [−1, 1]`, clamped at [`WEIGHT_FLOOR`].
pub fn chebyshev_weight(t: f64) -> f64 {
    let w = std::f64::consts::FRAC_PI_2.sqrt() * (1.0 - t * t).max(0.0).powf(0.25);
    w.max(WEIGHT_FLOOR)
}

/// Scales each row and observation by the product over dimensions of the
/// Chebyshev weight at `t = 2ζ − 1`.
pub fn precondition(sys: &MeasurementSystem) -> MeasurementSystem {
    let mut out = sys.clone();
    let mut weights = Vec::with_capacity(sys.samples());
    for (i, zeta) in sys.local_points.iter().enumerate() {
        let mut w = 1.0;
        for &z in zeta {
            let t = 2.0 * z - 1.0;
            let wt = chebyshev_weight(t);
            if wt == WEIGHT_FLOOR {
                log::warn!("preconditioner weight clamped at t = {t} for sample {i}");
            }
            w *= wt;
        }
        out.matrix.row_mut(i).scale_mut(w);
        out.rhs[i] *= w;
        weights.push(w);
    }
    out.weights = Some(weights);
    out
}

/// Dispatches on the configured recovery mode.
pub fn recover(sys: &MeasurementSystem, cfg: &RecoveryConfig) -> Result<Recovery> {
    cfg.validate()?;
    match cfg.mode {
        RecoveryMode::Equality => solve_bp(sys, cfg),
        RecoveryMode::Residual => solve_bpdn(sys, cfg.epsilon, cfg),
    }
}

pub fn solve_bp(sys: &MeasurementSystem, cfg: &RecoveryConfig) -> Result<Recovery> {
    basis_pursuit(&sys.matrix, &sys.rhs, cfg.solver_tol, cfg.max_iter)
}

pub fn solve_bpdn(sys: &MeasurementSystem, epsilon: f64, cfg: &RecoveryConfig) -> Result<Recovery> {
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("epsilon must be ≥ 0, got {epsilon}")));
    }
    let delta = (sys.samples() as f64).sqrt() * epsilon;
    basis_pursuit_denoise(&sys.matrix, &sys.rhs, delta, cfg.solver_tol, cfg.max_iter)
}

fn l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * 1e-12 * a.nrows().max(a.ncols()) as f64;
    svd.pseudo_inverse(eps.max(f64::MIN_POSITIVE))
        .expect("SVD computed with both factors")
}

/// Candidate supports read off an iterate: its nonzero set when small
/// enough, then the `k` largest entries for `k = min(nnz, max_len)` down to 1.
fn candidate_supports(v: &DVector<f64>, max_len: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0.0).collect();
    order.sort_by(|&i, &j| v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for k in (1..=order.len().min(max_len)).rev() {
        let mut s = order[..k].to_vec();
        s.sort_unstable();
        out.push(s);
    }
    out
}

/// Supports read off a dual vector: the columns with the largest `|Aᵀy|`,
/// which equal one exactly on the optimal support. Used when primal entries
/// near the noise floor are too close to rank.
fn dual_supports(a: &DMatrix<f64>, y: &DVector<f64>, max_len: usize) -> Vec<Vec<usize>> {
    let aty = a.transpose() * y;
    let mut order: Vec<usize> = (0..aty.len()).collect();
    order.sort_by(|&i, &j| aty[j].abs().total_cmp(&aty[i].abs()).then(i.cmp(&j)));
    (1..=order.len().min(max_len))
        .rev()
        .map(|k| {
            let mut s = order[..k].to_vec();
            s.sort_unstable();
            s
        })
        .collect()
}

fn columns(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |i, k| a[(i, cols[k])])
}

/// Full-column-rank solve data for a candidate support, kept as a thin QR
/// factorization so ill-conditioned supports avoid the normal equations.
struct SupportSystem {
    cols: Vec<usize>,
    a_s: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl SupportSystem {
    fn new(a: &DMatrix<f64>, cols: Vec<usize>) -> Option<Self> {
        if cols.is_empty() || cols.len() > a.nrows() {
            return None;
        }
        let a_s = columns(a, &cols);
        let qr = a_s.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let sv = r.singular_values();
        let (lo, hi) = sv
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        if !(lo > 1e-6 * hi) {
            return None;
        }
        Some(SupportSystem { cols, a_s, q, r })
    }

    /// `(A_SᵀA_S)⁻¹ v` as `R⁻¹ R⁻ᵀ v`.
    fn gram_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let w = self.r.tr_solve_upper_triangular(v).expect("nonsingular R");
        self.r.solve_upper_triangular(&w).expect("nonsingular R")
    }

    /// `A_S (A_SᵀA_S)⁻¹ v` as `Q R⁻ᵀ v`, skipping the cancellation in
    /// forming `A_S` times a large `(A_SᵀA_S)⁻¹ v`.
    fn range_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.q * self.r.tr_solve_upper_triangular(v).expect("nonsingular R")
    }

    /// Least-squares coefficients with one step of iterative refinement.
    fn least_squares(&self, b: &DVector<f64>) -> DVector<f64> {
        let solve = |rhs: &DVector<f64>| {
            self.r
                .solve_upper_triangular(&(self.q.transpose() * rhs))
                .expect("nonsingular R")
        };
        let c = solve(b);
        let dc = solve(&(b - &self.a_s * &c));
        c + dc
    }

    fn scatter(&self, values: &DVector<f64>, p: usize) -> DVector<f64> {
        let mut c = DVector::zeros(p);
        for (k, &i) in self.cols.iter().enumerate() {
            c[i] = values[k];
        }
        c
    }
}

/// Best dual objective of `max bᵀy s.t. ‖Aᵀy‖∞ ≤ 1` over rescaled candidates.
fn bp_dual_value(a: &DMatrix<f64>, b: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let inf = (a.transpose() * y).amax();
    if inf == 0.0 {
        return 0.0;
    }
    b.dot(y) / inf.max(1.0)
}

struct Candidate {
    c: DVector<f64>,
    residual: f64,
    gap: f64,
    /// Roundoff level below which `gap` carries no information.
    floor: f64,
}

impl Candidate {
    fn certified(&self, feasible: f64, tol: f64) -> bool {
        self.residual <= feasible && self.gap <= tol * l1(&self.c).max(f64::MIN_POSITIVE) + self.floor
    }
}

/// Attainable accuracy of a denoising certificate. The dual carries the part
/// of `b` outside the support's range divided by the `δ`-ball scale, so an
/// absolute error of `ε‖b‖` there becomes `ε‖b‖‖y‖/δ` in `y` and about
/// `ε‖b‖²‖y‖/δ` in the dual objective.
fn certificate_floor(b: &DVector<f64>, y: &DVector<f64>, delta: f64) -> f64 {
    8.0 * f64::EPSILON * b.norm_squared() * y.norm() / delta
}

/// Closed-form equality solve on `cols`, certified by the sign-matching dual
/// vector nearest to `y_hint` (or to zero, whichever certifies better).
fn polish_bp(a: &DMatrix<f64>, b: &DVector<f64>, cols: Vec<usize>, y_hint: &DVector<f64>) -> Option<Candidate> {
    let sys = SupportSystem::new(a, cols)?;
    let c_s = sys.least_squares(b);
    let c = sys.scatter(&c_s, a.ncols());
    let residual = (a * &c - b).norm();
    let signs = c_s.map(|v| v.signum());
    let mut best = f64::NEG_INFINITY;
    for hint in [y_hint.clone(), DVector::zeros(a.nrows())] {
        let correction = &signs - sys.a_s.transpose() * &hint;
        let y = hint + sys.range_solve(&correction);
        best = best.max(bp_dual_value(a, b, &y));
    }
    Some(Candidate {
        gap: l1(&c) - best,
        c,
        residual,
        floor: 0.0,
    })
}

fn first_certified(
    candidates: impl IntoIterator<Item = Option<Candidate>>,
    accept: impl Fn(&Candidate) -> bool,
) -> Option<Candidate> {
    candidates.into_iter().flatten().find(|c| accept(c))
}

/// Interior-point settings tried in turn. Leaf systems can be
/// ill-conditioned with large duals, and which combination of scaling and
/// step length reaches the vertex cleanly varies from system to system.
struct Profile {
    equilibrate: bool,
    step_fraction: f64,
}

const PROFILES: [Profile; 3] = [
    Profile { equilibrate: false, step_fraction: 0.99 },
    Profile { equilibrate: true, step_fraction: 0.99 },
    Profile { equilibrate: false, step_fraction: 0.9 },
];

/// Interior-point solve of `min ‖c‖₁` over `A c = b` (`delta = None`) or
/// `‖A c − b‖₂ ≤ δ`, posed with `c, t` and `−t ≤ c ≤ t`. Returns the primal
/// point, a dual vector for the data rows oriented so that `bᵀy ≥ 0`, and
/// the iteration count.
fn conic_l1(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    delta: Option<f64>,
    max_iter: usize,
    profile: &Profile,
) -> (DVector<f64>, DVector<f64>, usize, SolverStatus) {
    let (m, p) = a.shape();
    let offset = usize::from(delta.is_some());
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut rhs = vec![0.0; offset + m + 2 * p];
    if let Some(d) = delta {
        rhs[0] = d;
    }
    for i in 0..m {
        rhs[offset + i] = b[i];
        for j in 0..p {
            if a[(i, j)] != 0.0 {
                rows.push(offset + i);
                cols.push(j);
                vals.push(a[(i, j)]);
            }
        }
    }
    let base = offset + m;
    for j in 0..p {
        rows.extend([base + 2 * j, base + 2 * j, base + 2 * j + 1, base + 2 * j + 1]);
        cols.extend([j, p + j, j, p + j]);
        vals.extend([1.0, -1.0, -1.0, -1.0]);
    }
    let constraints = CscMatrix::new_from_triplets(rhs.len(), 2 * p, rows, cols, vals);
    let objective = CscMatrix::zeros((2 * p, 2 * p));
    let mut q = vec![0.0; 2 * p];
    q[p..].fill(1.0);
    let data_cone = match delta {
        Some(_) => SecondOrderConeT(m + 1),
        None => ZeroConeT(m),
    };
    let cones = [data_cone, NonnegativeConeT(2 * p)];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(max_iter.min(u32::MAX as usize) as u32)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .equilibrate_enable(profile.equilibrate)
        .max_step_fraction(profile.step_fraction)
        .static_regularization_constant(1e-12)
        .build()
        .expect("valid solver settings");
    let mut solver = DefaultSolver::new(&objective, &q, &constraints, &rhs, &cones, settings)
        .expect("well-formed conic problem");
    solver.solve();
    let sol = &solver.solution;
    let c = DVector::from_column_slice(&sol.x[..p]);
    let mut y = DVector::from_column_slice(&sol.z[offset..offset + m]);
    if b.dot(&y) < 0.0 {
        y.neg_mut();
    }
    (c, y, sol.iterations as usize, sol.status)
}

/// `min ‖c‖₁ s.t. A c = b`.
pub fn basis_pursuit(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64, max_iter: usize) -> Result<Recovery> {
    let (m, p) = a.shape();
    if b.len() != m {
        return Err(Error::Contract(format!("{} observations for {m} rows", b.len())));
    }
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return Ok(Recovery {
            coefficients: vec![0.0; p],
            residual: 0.0,
            iterations: 0,
            duality_gap: 0.0,
        });
    }
    let feasible_tol = tol * bnorm;
    let floor = least_squares_residual(a, b);
    if floor > feasible_tol.max(1e-12 * bnorm) * 10.0 {
        return Err(Error::Recovery {
            iterations: 0,
            residual: floor,
            message: "equality constraints are inconsistent".into(),
        });
    }
    let accept = |cand: &Candidate| cand.certified(feasible_tol, tol);

    let mut iterations = 0;
    let mut last = None;
    for profile in &PROFILES {
        let (c, y, its, status) = conic_l1(a, b, None, max_iter, profile);
        iterations += its;
        let tries = candidate_supports(&c, m)
            .into_iter()
            .chain(dual_supports(a, &y, m))
            .map(|cols| polish_bp(a, b, cols, &y));
        if let Some(cand) = first_certified(tries, accept) {
            return Ok(Recovery {
                coefficients: cand.c.iter().copied().collect(),
                residual: cand.residual,
                iterations,
                duality_gap: cand.gap,
            });
        }
        last = Some((c, y, status));
    }
    let (c, y, status) = last.expect("at least one profile");
    // No certified support: accept the interior point only if its own gap certifies it.
    let residual = (a * &c - b).norm();
    let duality_gap = l1(&c) - bp_dual_value(a, b, &y);
    if residual > feasible_tol.max(1e-12 * bnorm) || duality_gap > tol * l1(&c).max(1.0) {
        return Err(Error::Recovery {
            iterations,
            residual,
            message: format!("basis pursuit ended {status:?} with duality gap {duality_gap:e}"),
        });
    }
    Ok(Recovery {
        duality_gap,
        coefficients: c.iter().copied().collect(),
        residual,
        iterations,
    })
}

/// Dual objective `bᵀy − δ‖y‖` after rescaling `y` to `‖Aᵀy‖∞ = 1`.
fn bpdn_dual_value(a: &DMatrix<f64>, b: &DVector<f64>, delta: f64, r: &DVector<f64>) -> f64 {
    let inf = (a.transpose() * r).amax();
    if inf == 0.0 {
        return 0.0;
    }
    (b.dot(r) - delta * r.norm()) / inf
}

/// Closed-form KKT solve on `cols` with the signs of `z`:
/// `c_S = c_LS − t G s` with `G = (A_SᵀA_S)⁻¹` and `t` putting the residual
/// on the `δ`-sphere. The dual `y = h + r_LS / t` (`h = A_S G s`) satisfies
/// `A_Sᵀy = s` exactly and avoids forming `b − A c`.
fn polish_bpdn(a: &DMatrix<f64>, b: &DVector<f64>, delta: f64, cols: Vec<usize>, z: &DVector<f64>) -> Option<Candidate> {
    let sys = SupportSystem::new(a, cols)?;
    let signs = DVector::from_iterator(sys.cols.len(), sys.cols.iter().map(|&i| z[i].signum()));
    let c_ls = sys.least_squares(b);
    let mut r_ls = b - &sys.a_s * &c_ls;
    if sys.cols.len() == a.nrows() {
        // A square support spans the data space, so r_LS is pure roundoff.
        r_ls.fill(0.0);
    }
    let r2 = r_ls.norm_squared();
    if r2 > delta * delta {
        return None;
    }
    let g = sys.gram_solve(&signs);
    let h = sys.range_solve(&signs);
    let t = ((delta * delta - r2) / h.norm_squared()).sqrt();
    let c_s = c_ls - &g * t;
    if c_s.iter().zip(signs.iter()).any(|(v, s)| v.signum() != *s || *v == 0.0) {
        return None;
    }
    let c = sys.scatter(&c_s, a.ncols());
    let y = h + r_ls / t;
    let aty = a.transpose() * &y;
    let scale = aty.amax().max(1.0);
    let r = b - a * &c;
    // bᵀy evaluated as cᵀAᵀy + rᵀy to avoid cancellation.
    let dual = (c.dot(&aty) + r.dot(&y) - delta * y.norm()) / scale;
    Some(Candidate {
        gap: l1(&c) - dual,
        residual: r.norm(),
        floor: certificate_floor(b, &(y / scale), delta),
        c,
    })
}

/// `min ‖c‖₁ s.t. ‖A c − b‖₂ ≤ δ`; `δ = 0` is basis pursuit.
pub fn basis_pursuit_denoise(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    delta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Recovery> {
    let (m, p) = a.shape();
    if b.len() != m {
        return Err(Error::Contract(format!("{} observations for {m} rows", b.len())));
    }
    if delta == 0.0 {
        return basis_pursuit(a, b, tol, max_iter);
    }
    let bnorm = b.norm();
    if bnorm <= delta {
        return Ok(Recovery {
            coefficients: vec![0.0; p],
            residual: bnorm,
            iterations: 0,
            duality_gap: 0.0,
        });
    }
    let feasible = delta + tol * bnorm;
    let floor = least_squares_residual(a, b);
    if floor > feasible {
        return Err(Error::Recovery {
            iterations: 0,
            residual: floor,
            message: format!("infeasible: least-squares residual exceeds bound {delta:e}"),
        });
    }
    let accept = |cand: &Candidate| cand.certified(feasible, tol);

    let mut iterations = 0;
    let mut last = None;
    for profile in &PROFILES {
        let (c, y, its, status) = conic_l1(a, b, Some(delta), max_iter, profile);
        iterations += its;
        let tries = candidate_supports(&c, m)
            .into_iter()
            .chain(dual_supports(a, &y, m))
            .map(|cols| polish_bpdn(a, b, delta, cols, &c));
        if let Some(cand) = first_certified(tries, accept) {
            return Ok(Recovery {
                coefficients: cand.c.iter().copied().collect(),
                residual: cand.residual,
                iterations,
                duality_gap: cand.gap,
            });
        }
        last = Some((c, y, status));
    }
    let (c, y, status) = last.expect("at least one profile");
    // Pull a marginally infeasible interior point back into the ball.
    let rc = b - a * &c;
    let rcn = rc.norm();
    let c = if rcn > delta {
        &c + pseudo_inverse(a) * &rc * (1.0 - delta / rcn)
    } else {
        c
    };
    let res = b - a * &c;
    let dual = bpdn_dual_value(a, b, delta, &y).max(bpdn_dual_value(a, b, delta, &res));
    let y_unit = &y / (a.transpose() * &y).amax().max(f64::MIN_POSITIVE);
    let cand = Candidate {
        gap: l1(&c) - dual,
        residual: res.norm(),
        floor: certificate_floor(b, &y_unit, delta),
        c,
    };
    if !cand.certified(feasible, tol) {
        return Err(Error::Recovery {
            iterations,
            residual: cand.residual,
            message: format!("denoising solve ended {status:?} with duality gap {:e}", cand.gap),
        });
    }
    Ok(Recovery {
        duality_gap: cand.gap,
        coefficients: cand.c.iter().copied().collect(),
        residual: cand.residual,
        iterations,
    })
}

/// Smallest achievable residual ‖b − Ac‖₂ over all c.
pub fn least_squares_residual(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    (b - a * (pseudo_inverse(a) * b)).norm()
}

/// Largest number of columns accepted by [`rip_constant`].
pub const RIP_MAX_COLUMNS: usize = 16;
/// Largest sparsity accepted by [`rip_constant`].
pub const RIP_MAX_SPARSITY: usize = 4;

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(pos) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..k {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

/// Smallest `δ_s` with `(1 − δ) ‖x‖² ≤ ‖A x‖² ≤ (1 + δ) ‖x‖²` for every
/// `s`-sparse `x`, by exhaustive search over column subsets.
pub fn rip_constant(a: &DMatrix<f64>, s: usize) -> Result<f64> {
    if a.ncols() > RIP_MAX_COLUMNS || s > RIP_MAX_SPARSITY {
        return Err(Error::Config(format!(
            "exhaustive RIP search limited to {RIP_MAX_COLUMNS} columns and s ≤ {RIP_MAX_SPARSITY} \
             (got {} columns, s = {s})",
            a.ncols()
        )));
    }
    if s == 0 || s > a.ncols() {
        return Err(Error::Config(format!("sparsity {s} invalid for {} columns", a.ncols())));
    }
    let mut delta = 0.0f64;
    for_each_subset(a.ncols(), s, |cols| {
        let a_s = columns(a, cols);
        let eig = SymmetricEigen::new(a_s.transpose() * a_s);
        for &e in eig.eigenvalues.iter() {
            delta = delta.max((e - 1.0).abs());
        }
    });
    Ok(delta)
}

/// `ceil(C / δ² · K² · s · ln⁴ m)`, the sample count suggested by the RIP
/// estimate for bounded orthonormal systems. Informational only.
pub fn sample_bound(s: usize, m: usize, k: f64, delta: f64, c: f64) -> Result<u64> {
    if s == 0 || m < 2 || !(delta > 0.0 && delta <= 1.0) || !(k >= 1.0) || !(c > 0.0) {
        return Err(Error::Config(format!(
            "sample_bound needs s ≥ 1, m ≥ 2, 0 < δ ≤ 1, K ≥ 1, C > 0 (got s={s}, m={m}, K={k}, δ={delta}, C={c})"
        )));
    }
    let raw = sample_bound_raw(s, m, k, delta, c);
    Ok(raw.ceil() as u64)
}

pub(crate) fn sample_bound_raw(s: usize, m: usize, k: f64, delta: f64, c: f64) -> f64 {
    c / (delta * delta) * k * k * s as f64 * (m as f64).ln().powi(4)
}

/// Points `t = cos(π u)` with `u` uniform on `[0, 1]`: the Chebyshev
/// (arcsine) measure on `[−1, 1]`.
pub fn chebyshev_points<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| (std::f64::consts::PI * rng.gen::<f64>()).cos())
        .collect()
}

/// `n × m` matrix of Legendre polynomials `sqrt(2k + 1) P_k(t_j)` (orthonormal
/// for the uniform probability measure), optionally preconditioned by the
/// Chebyshev weights.
pub fn legendre_system(points: &[f64], m: usize, preconditioned: bool) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(points.len(), m);
    let mut row = vec![0.0; m];
    for (j, &t) in points.iter().enumerate() {
        legendre_probabilists_into(t, &mut row);
        let w = if preconditioned { chebyshev_weight(t) } else { 1.0 };
        for (k, v) in row.iter().enumerate() {
            a[(j, k)] = w * v;
        }
    }
    a
}
