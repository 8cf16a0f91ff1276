//! One-dimensional scaling functions and Alpert multi-wavelets on `[0, 1]`.
//!
//! The scaling family of order `n0` is the shifted Legendre family
//! `Φ_i(ζ) = sqrt(2i + 1) P_i(2ζ − 1)`, `i = 0..=n0`, orthonormal under
//! `∫_0^1 f g dζ`.
//!
//! The wavelet family `Ψ_0..Ψ_{n0}` spans the orthogonal complement of the
//! degree-`n0` polynomials inside the piecewise polynomials of degree `≤ n0` on
//! `[0, 1/2)` and `[1/2, 1]`. The complement is split into a nested chain:
//! `Ψ_i` is additionally orthogonal to `ζ^{n0+1}, …, ζ^{n0+i}`, which pins each
//! function down to a sign (Alpert's construction; the functions alternate
//! between even and odd symmetry about `1/2`). The sign is chosen so that
//! `Ψ_i(0) > 0`; for `n0 = 0` this gives the Haar function `+1` on the left
//! half and `−1` on the right half.
//!
//! Polynomial pieces store monomial coefficients in the piece-local variable
//! `s = (ζ − left) / (right − left) ∈ [0, 1]`.

use std::fmt::Write as _;

use crate::quadrature::{legendre, legendre_probabilists_into, GaussRule};
use crate::{Error, Result};

/// Largest supported polynomial order.
pub const MAX_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    pieces: Vec<Vec<f64>>,
    degree: usize,
}

impl PiecewisePolynomial {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Vec<f64>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::Contract("need at least two breakpoints".into()));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::Contract("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Contract("breakpoints must be strictly increasing".into()));
        }
        if pieces.len() != breakpoints.len() - 1 {
            return Err(Error::Contract(format!(
                "{} pieces for {} intervals",
                pieces.len(),
                breakpoints.len() - 1
            )));
        }
        if pieces.iter().any(|p| p.is_empty()) {
            return Err(Error::Contract("empty polynomial piece".into()));
        }
        let degree = pieces.iter().map(|p| p.len() - 1).max().unwrap_or(0);
        Ok(PiecewisePolynomial {
            breakpoints,
            pieces,
            degree,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Monomial coefficients per interval, lowest power first, in the
    /// piece-local variable.
    pub fn pieces(&self) -> &[Vec<f64>] {
        &self.pieces
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Value at `x`; zero outside `[0, 1]`. Intervals are half-open except the
    /// last one, which includes `1`.
    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let last = self.pieces.len() - 1;
        let i = self.breakpoints[1..=last]
            .iter()
            .take_while(|&&b| b <= x)
            .count();
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        horner(&self.pieces[i], (x - a) / (b - a))
    }
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

/// `∫_0^1 f g dζ`, exact up to rounding: Gauss–Legendre on every interval of
/// the merged breakpoint set with enough nodes for `deg f + deg g`.
pub fn inner_product(f: &PiecewisePolynomial, g: &PiecewisePolynomial) -> f64 {
    let mut cuts: Vec<f64> = f
        .breakpoints
        .iter()
        .chain(&g.breakpoints)
        .copied()
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = GaussRule::exact_for(f.degree + g.degree);
    cuts.windows(2)
        .map(|w| rule.integrate(w[0], w[1], |x| f.eval(x) * g.eval(x)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Scaling,
    Wavelet,
}

impl BasisKind {
    fn tag(self) -> &'static str {
        match self {
            BasisKind::Scaling => "scaling",
            BasisKind::Wavelet => "wavelet",
        }
    }
}

/// Orthonormal shifted Legendre polynomials `Φ_0..Φ_{n0}` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ScalingBasis {
    order: usize,
    functions: Vec<PiecewisePolynomial>,
}

impl ScalingBasis {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn functions(&self) -> &[PiecewisePolynomial] {
        &self.functions
    }

    /// `out[i] = Φ_i(x)` for `i ≤ order`; zero outside `[0, 1]`.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        let out = &mut out[..=self.order];
        if !(0.0..=1.0).contains(&x) {
            out.fill(0.0);
            return;
        }
        legendre_probabilists_into(2.0 * x - 1.0, out);
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        self.functions[i].eval(x)
    }
}

/// Alpert multi-wavelets `Ψ_0..Ψ_{n0}` with a single breakpoint at `1/2`.
#[derive(Debug, Clone)]
pub struct WaveletBasis {
    order: usize,
    functions: Vec<PiecewisePolynomial>,
}

impl WaveletBasis {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn functions(&self) -> &[PiecewisePolynomial] {
        &self.functions
    }

    /// `out[i] = Ψ_i(x)` for `i ≤ order`; zero outside `[0, 1]`.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.functions) {
            *o = f.eval(x);
        }
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        self.functions[i].eval(x)
    }
}

fn check_order(n0: usize) -> Result<()> {
    if n0 > MAX_ORDER {
        return Err(Error::Config(format!(
            "polynomial order {n0} outside 0..={MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Monomial coefficients of `sqrt(2n + 1) P_n(2s − 1)` in `s`.
fn scaling_monomials(n: usize) -> Vec<f64> {
    let norm = (2.0 * n as f64 + 1.0).sqrt();
    let mut binom_n = 1.0; // C(n, k)
    let mut binom_nk = 1.0; // C(n + k, k)
    (0..=n)
        .map(|k| {
            if k > 0 {
                binom_n *= (n - k + 1) as f64 / k as f64;
                binom_nk *= (n + k) as f64 / k as f64;
            }
            let sign = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
            norm * sign * binom_n * binom_nk
        })
        .collect()
}

fn scaling_value(n: usize, x: f64) -> f64 {
    (2.0 * n as f64 + 1.0).sqrt() * legendre(n, 2.0 * x - 1.0)
}

pub fn build_scaling(n0: usize) -> Result<ScalingBasis> {
    check_order(n0)?;
    let functions = (0..=n0)
        .map(|i| PiecewisePolynomial::new(vec![0.0, 1.0], vec![scaling_monomials(i)]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingBasis {
        order: n0,
        functions,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthogonalizes `v` against the orthonormal set `against` (two passes).
fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in against {
            let c = dot(v, q);
            axpy(-c, q, v);
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Works in the orthonormal coordinates `φ^L_k(ζ) = √2 Φ_k(2ζ)` on the left
/// half and `φ^R_k(ζ) = √2 Φ_k(2ζ − 1)` on the right half, where the `L2`
/// inner product is the Euclidean one.
pub fn build_wavelets(n0: usize) -> Result<WaveletBasis> {
    check_order(n0)?;
    let n = n0 + 1;
    let dim = 2 * n;
    let rule = GaussRule::exact_for(3 * n0 + 1);

    // Coordinates of the global polynomial Φ_p in the half-interval basis.
    let coords_of = |p: usize| -> Vec<f64> {
        let mut c = vec![0.0; dim];
        for k in 0..n {
            c[k] = rule.integrate(0.0, 1.0, |s| scaling_value(p, 0.5 * s) * scaling_value(k, s))
                / std::f64::consts::SQRT_2;
            c[n + k] = rule
                .integrate(0.0, 1.0, |s| scaling_value(p, 0.5 + 0.5 * s) * scaling_value(k, s))
                / std::f64::consts::SQRT_2;
        }
        c
    };

    let mut span: Vec<Vec<f64>> = (0..n).map(coords_of).collect();
    let mut complement: Vec<Vec<f64>> = Vec::with_capacity(n);
    for e in 0..dim {
        if complement.len() == n {
            break;
        }
        let mut v = vec![0.0; dim];
        v[e] = 1.0;
        orthogonalize(&mut v, &span);
        if normalize(&mut v) > 1e-6 {
            orthogonalize(&mut v, &span);
            normalize(&mut v);
            span.push(v.clone());
            complement.push(v);
        }
    }
    if complement.len() != n {
        return Err(Error::Config(format!(
            "wavelet complement has dimension {} instead of {n}",
            complement.len()
        )));
    }

    // Moment vectors: m_p[q] = <w_q, Φ_{n+p}> for p = 0..n0.
    let mut chain: Vec<Vec<f64>> = Vec::with_capacity(n);
    for p in 0..n0 {
        let mu = coords_of(n + p);
        let mut m: Vec<f64> = complement.iter().map(|w| dot(w, &mu)).collect();
        orthogonalize(&mut m, &chain);
        if normalize(&mut m) < 1e-10 {
            return Err(Error::Config(format!(
                "degenerate moment {} in wavelet construction for order {n0}",
                n + p
            )));
        }
        chain.push(m);
    }
    // Complete the chain with the direction orthogonal to every moment.
    let last = (0..n)
        .map(|e| {
            let mut v = vec![0.0; n];
            v[e] = 1.0;
            orthogonalize(&mut v, &chain);
            v
        })
        .max_by(|a, b| dot(a, a).total_cmp(&dot(b, b)))
        .expect("non-empty complement");
    let mut last = last;
    normalize(&mut last);
    orthogonalize(&mut last, &chain);
    normalize(&mut last);
    chain.push(last);

    let root2 = std::f64::consts::SQRT_2;
    let monomials: Vec<Vec<f64>> = (0..n).map(scaling_monomials).collect();
    let mut functions = Vec::with_capacity(n);
    for q in &chain {
        let mut coords = vec![0.0; dim];
        for (qi, w) in q.iter().zip(&complement) {
            axpy(*qi, w, &mut coords);
        }
        // Ψ(0) = √2 Σ a_k Φ_k(0), Φ_k(0) = (−1)^k sqrt(2k + 1).
        let mut at_zero: f64 = (0..n).map(|k| coords[k] * root2 * scaling_value(k, 0.0)).sum();
        if at_zero.abs() < 1e-10 {
            at_zero = (0..n).map(|k| coords[k] * root2 * scaling_value(k, 0.5)).sum();
        }
        if at_zero < 0.0 {
            coords.iter_mut().for_each(|c| *c = -*c);
        }
        let piece = |offset: usize| -> Vec<f64> {
            let mut poly = vec![0.0; n];
            for k in 0..n {
                axpy(root2 * coords[offset + k], &monomials[k], &mut poly[..=k]);
            }
            poly
        };
        functions.push(PiecewisePolynomial::new(
            vec![0.0, 0.5, 1.0],
            vec![piece(0), piece(n)],
        )?);
    }
    Ok(WaveletBasis {
        order: n0,
        functions,
    })
}

/// Scaling and wavelet families of one order, built together.
#[derive(Debug, Clone)]
pub struct MwBasis {
    pub scaling: ScalingBasis,
    pub wavelets: WaveletBasis,
}

impl MwBasis {
    pub fn new(n0: usize) -> Result<Self> {
        Ok(MwBasis {
            scaling: build_scaling(n0)?,
            wavelets: build_wavelets(n0)?,
        })
    }

    pub fn order(&self) -> usize {
        self.scaling.order
    }

    pub fn function(&self, kind: BasisKind, member: usize) -> &PiecewisePolynomial {
        match kind {
            BasisKind::Scaling => &self.scaling.functions[member],
            BasisKind::Wavelet => &self.wavelets.functions[member],
        }
    }
}

/// Identifies the translate/dilate `2^{k/2} B_j(2^k ζ − l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DilationKey {
    pub kind: BasisKind,
    pub member: usize,
    pub level: u32,
    pub shift: u64,
}

impl DilationKey {
    pub fn new(kind: BasisKind, member: usize, level: u32, shift: u64) -> Result<Self> {
        if level >= 63 || shift >= 1u64 << level {
            return Err(Error::Contract(format!(
                "shift {shift} invalid at level {level}"
            )));
        }
        Ok(DilationKey {
            kind,
            member,
            level,
            shift,
        })
    }

    /// Closed support `[2^{-k} l, 2^{-k} (l + 1)]`.
    pub fn support(&self) -> (f64, f64) {
        let h = (-(self.level as f64)).exp2();
        (h * self.shift as f64, h * (self.shift + 1) as f64)
    }
}

pub fn eval_dilated(basis: &MwBasis, key: DilationKey, x: f64) -> f64 {
    let scale = (key.level as f64).exp2();
    let local = scale * x - key.shift as f64;
    if !(0.0..=1.0).contains(&local) {
        return 0.0;
    }
    scale.sqrt() * basis.function(key.kind, key.member).eval(local)
}

/// Sup-norm constants used by the sample-count estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformBound {
    /// `K = 2^{n/2}` for `n` random dimensions.
    pub k: f64,
    /// Measured `max_i sup |Φ_i|` on the diagnostic grid.
    pub scaling_sup: f64,
    /// Measured `max_i sup |Ψ_i|` on the diagnostic grid.
    pub wavelet_sup: f64,
    /// Measured sup over the whole local tensor basis in `n` dimensions.
    pub tensor_sup: f64,
}

/// Points in the diagnostic sup-norm grid.
pub const SUP_GRID_POINTS: usize = 100_000;

// K = 2^{n/2} is reported even though the measured wavelet sup can exceed it
// for larger n0; the measured values are returned next to it.
pub fn uniform_bound(n0: usize, n: usize) -> Result<UniformBound> {
    if n == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    let basis = MwBasis::new(n0)?;
    let mut phi = vec![0.0; n0 + 1];
    let mut psi = vec![0.0; n0 + 1];
    let mut scaling_sup = vec![0.0f64; n0 + 1];
    let mut wavelet_sup = 0.0f64;
    for g in 0..=SUP_GRID_POINTS {
        let x = g as f64 / SUP_GRID_POINTS as f64;
        basis.scaling.eval_all(x, &mut phi);
        basis.wavelets.eval_all(x, &mut psi);
        for (s, v) in scaling_sup.iter_mut().zip(&phi) {
            *s = s.max(v.abs());
        }
        wavelet_sup = psi.iter().fold(wavelet_sup, |m, v| m.max(v.abs()));
    }
    let phi_max = scaling_sup.iter().copied().fold(0.0, f64::max);
    let tensor_sup = best_product(&scaling_sup, n, n0).max(wavelet_sup);
    Ok(UniformBound {
        k: (n as f64 / 2.0).exp2(),
        scaling_sup: phi_max,
        wavelet_sup,
        tensor_sup,
    })
}

/// Largest `Π_j sups[ι_j]` over multi-indices of length `dims` with `|ι| ≤ budget`.
fn best_product(sups: &[f64], dims: usize, budget: usize) -> f64 {
    if dims == 0 {
        return 1.0;
    }
    (0..=budget)
        .map(|d| sups[d] * best_product(sups, dims - 1, budget - d))
        .fold(0.0, f64::max)
}

/// Text serialization of a basis family.
///
/// ```text
/// mwbasis <scaling|wavelet> order <n0> count <n0+1>
/// function <i> degree <d>
/// piece <left> <right> <c_0> ... <c_d>
/// end
/// ```
///
/// Coefficients are monomial coefficients in the piece-local variable, lowest
/// power first, written with 17 significant digits.
pub fn dump_basis(kind: BasisKind, order: usize, functions: &[PiecewisePolynomial]) -> String {
    let mut out = String::new();
    writeln!(out, "mwbasis {} order {} count {}", kind.tag(), order, functions.len()).unwrap();
    for (i, f) in functions.iter().enumerate() {
        writeln!(out, "function {} degree {}", i, f.degree).unwrap();
        for (w, piece) in f.breakpoints.windows(2).zip(&f.pieces) {
            write!(out, "piece {:.17e} {:.17e}", w[0], w[1]).unwrap();
            for c in piece {
                write!(out, " {c:.17e}").unwrap();
            }
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

impl ScalingBasis {
    pub fn dump(&self) -> String {
        dump_basis(BasisKind::Scaling, self.order, &self.functions)
    }
}

impl WaveletBasis {
    pub fn dump(&self) -> String {
        dump_basis(BasisKind::Wavelet, self.order, &self.functions)
    }
}

/// Parses the output of [`dump_basis`].
pub fn parse_basis_dump(text: &str) -> Result<(BasisKind, usize, Vec<PiecewisePolynomial>)> {
    let bad = |line: usize, what: &str| Error::Contract(format!("basis dump line {}: {what}", line + 1));
    let num = |tok: &str, line: usize| -> Result<f64> {
        tok.parse::<f64>().map_err(|_| bad(line, "malformed number"))
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| bad(0, "empty dump"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 || h[0] != "mwbasis" || h[2] != "order" || h[4] != "count" {
        return Err(bad(hl, "bad header"));
    }
    let kind = match h[1] {
        "scaling" => BasisKind::Scaling,
        "wavelet" => BasisKind::Wavelet,
        _ => return Err(bad(hl, "unknown basis kind")),
    };
    let order: usize = h[3].parse().map_err(|_| bad(hl, "bad order"))?;
    let count: usize = h[5].parse().map_err(|_| bad(hl, "bad count"))?;

    let mut functions = Vec::with_capacity(count);
    let mut current: Option<(Vec<f64>, Vec<Vec<f64>>)> = None;
    let finish = |cur: Option<(Vec<f64>, Vec<Vec<f64>>)>, out: &mut Vec<PiecewisePolynomial>| -> Result<()> {
        if let Some((bps, pieces)) = cur {
            out.push(PiecewisePolynomial::new(bps, pieces)?);
        }
        Ok(())
    };
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "function" => {
                finish(current.take(), &mut functions)?;
                current = Some((Vec::new(), Vec::new()));
            }
            "piece" => {
                let (bps, pieces) = current.as_mut().ok_or_else(|| bad(ln, "piece outside function"))?;
                if toks.len() < 4 {
                    return Err(bad(ln, "short piece record"));
                }
                let a = num(toks[1], ln)?;
                let b = num(toks[2], ln)?;
                if bps.is_empty() {
                    bps.push(a);
                } else if *bps.last().unwrap() != a {
                    return Err(bad(ln, "pieces are not contiguous"));
                }
                bps.push(b);
                pieces.push(toks[3..].iter().map(|t| num(t, ln)).collect::<Result<_>>()?);
            }
            "end" => {
                finish(current.take(), &mut functions)?;
                break;
            }
            _ => return Err(bad(ln, "unknown record")),
        }
    }
    if functions.len() != count {
        return Err(Error::Contract(format!(
            "basis dump declares {count} functions, found {}",
            functions.len()
        )));
    }
    Ok((kind, order, functions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::legendre_orthonormal;

    const TOL: f64 = 1e-10;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Gram–Schmidt on monomials using the exact moments ∫ζ^k = 1/(k+1).
    fn monomial_gram_schmidt(n: usize) -> Vec<Vec<f64>> {
        let ip = |a: &[f64], b: &[f64]| -> f64 {
            let mut s = 0.0;
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    s += x * y / (i + j + 1) as f64;
                }
            }
            s
        };
        let mut out: Vec<Vec<f64>> = Vec::new();
        for d in 0..=n {
            let mut v = vec![0.0; n + 1];
            v[d] = 1.0;
            for q in &out {
                let c = ip(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
            let norm = ip(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
        out
    }

    #[test]
    fn scaling_examples() {
        let b = build_scaling(2).unwrap();
        for x in [0.0, 0.1, 0.37, 0.5, 0.93, 1.0] {
            assert_close(b.eval(0, x), 1.0, 1e-15);
            assert_close(b.eval(1, x), 3f64.sqrt() * (2.0 * x - 1.0), 1e-14);
            assert_close(b.eval(2, x), 5f64.sqrt() * (6.0 * x * x - 6.0 * x + 1.0), 1e-13);
        }
        let oracle = monomial_gram_schmidt(2);
        for (f, want) in b.functions().iter().zip(&oracle) {
            let got = &f.pieces()[0];
            for (g, w) in got.iter().zip(want) {
                assert_close(*g, *w, 1e-12);
            }
        }
    }

    #[test]
    fn scaling_degree_and_leading_sign() {
        let b = build_scaling(7).unwrap();
        for (i, f) in b.functions().iter().enumerate() {
            assert_eq!(f.degree(), i);
            assert!(*f.pieces()[0].last().unwrap() > 0.0);
        }
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(build_scaling(13), Err(Error::Config(_))));
        assert!(matches!(build_wavelets(13), Err(Error::Config(_))));
    }

    #[test]
    fn haar_case() {
        let w = build_wavelets(0).unwrap();
        assert_close(w.eval(0, 0.0), 1.0, 1e-15);
        assert_close(w.eval(0, 0.3), 1.0, 1e-15);
        assert_close(w.eval(0, 0.5), -1.0, 1e-15);
        assert_close(w.eval(0, 0.9), -1.0, 1e-15);
    }

    #[test]
    fn linear_wavelets_have_vanishing_moments() {
        let w = build_wavelets(1).unwrap();
        let rule = GaussRule::new(10);
        for f in w.functions() {
            let m0 = rule.integrate(0.0, 0.5, |x| f.eval(x)) + rule.integrate(0.5, 1.0, |x| f.eval(x));
            let m1 = rule.integrate(0.0, 0.5, |x| x * f.eval(x))
                + rule.integrate(0.5, 1.0, |x| x * f.eval(x));
            assert_close(m0, 0.0, 1e-14);
            assert_close(m1, 0.0, 1e-14);
        }
    }

    #[test]
    fn cubic_wavelet_gram_is_identity() {
        // 20-point rule per half is exact far beyond degree 6.
        let w = build_wavelets(3).unwrap();
        let rule = GaussRule::new(20);
        for i in 0..4 {
            for j in 0..4 {
                let (fi, fj) = (&w.functions()[i], &w.functions()[j]);
                let g = rule.integrate(0.0, 0.5, |x| fi.eval(x) * fj.eval(x))
                    + rule.integrate(0.5, 1.0, |x| fi.eval(x) * fj.eval(x));
                assert_close(g, if i == j { 1.0 } else { 0.0 }, 1e-12);
            }
        }
    }

    #[test]
    fn joint_gram_and_moments_up_to_order_six() {
        for n0 in 0..=6 {
            let b = MwBasis::new(n0).unwrap();
            let all: Vec<&PiecewisePolynomial> = b
                .scaling
                .functions()
                .iter()
                .chain(b.wavelets.functions())
                .collect();
            for (i, f) in all.iter().enumerate() {
                for (j, g) in all.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_close(inner_product(f, g), want, TOL);
                }
            }
            let rule = GaussRule::new(2 * n0 + 2);
            for f in b.wavelets.functions() {
                for p in 0..=n0 {
                    let m = rule.integrate(0.0, 0.5, |x| x.powi(p as i32) * f.eval(x))
                        + rule.integrate(0.5, 1.0, |x| x.powi(p as i32) * f.eval(x));
                    assert_close(m, 0.0, TOL);
                }
            }
        }
    }

    #[test]
    fn nested_extra_moments_and_parity() {
        let n0 = 4;
        let w = build_wavelets(n0).unwrap();
        let rule = GaussRule::new(12);
        for (i, f) in w.functions().iter().enumerate() {
            for p in n0 + 1..=n0 + i {
                let m = rule.integrate(0.0, 0.5, |x| scaling_value(p, x) * f.eval(x))
                    + rule.integrate(0.5, 1.0, |x| scaling_value(p, x) * f.eval(x));
                assert_close(m, 0.0, 1e-10);
            }
            // Definite parity about 1/2.
            let probes = [0.05, 0.13, 0.31, 0.44];
            let even = probes.iter().all(|&x| (f.eval(x) - f.eval(1.0 - x)).abs() < 1e-10);
            let odd = probes.iter().all(|&x| (f.eval(x) + f.eval(1.0 - x)).abs() < 1e-10);
            assert!(even ^ odd, "Ψ_{i} has no definite parity");
            assert!(f.eval(0.0) > 0.0);
        }
    }

    #[test]
    fn higher_orders_stay_orthonormal() {
        for n0 in [8, 10, 12] {
            let b = MwBasis::new(n0).unwrap();
            let fs = b.wavelets.functions();
            for i in 0..=n0 {
                for j in 0..=n0 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_close(inner_product(&fs[i], &fs[j]), want, 1e-7);
                }
                assert_close(inner_product(&fs[i], &b.scaling.functions()[0]), 0.0, 1e-7);
            }
        }
    }

    #[test]
    fn dilated_examples() {
        let b = MwBasis::new(2).unwrap();
        let k = DilationKey::new(BasisKind::Scaling, 0, 1, 0).unwrap();
        assert_close(eval_dilated(&b, k, 0.25), 2f64.sqrt(), 1e-15);
        let b0 = MwBasis::new(0).unwrap();
        let k = DilationKey::new(BasisKind::Wavelet, 0, 0, 0).unwrap();
        assert_close(eval_dilated(&b0, k, 0.75), -1.0, 1e-15);
        let k = DilationKey::new(BasisKind::Wavelet, 0, 2, 1).unwrap();
        assert_eq!(eval_dilated(&b0, k, 0.9), 0.0);
        assert_eq!(k.support(), (0.25, 0.5));
        assert!(DilationKey::new(BasisKind::Wavelet, 0, 2, 4).is_err());
    }

    #[test]
    fn dilation_preserves_norm() {
        let b = MwBasis::new(3).unwrap();
        let rule = GaussRule::new(8);
        for level in 0..=4u32 {
            for shift in 0..(1u64 << level) {
                for kind in [BasisKind::Scaling, BasisKind::Wavelet] {
                    for member in 0..=3 {
                        let key = DilationKey::new(kind, member, level, shift).unwrap();
                        let (a, c) = key.support();
                        let m = 0.5 * (a + c);
                        let norm = rule.integrate(a, m, |x| eval_dilated(&b, key, x).powi(2))
                            + rule.integrate(m, c, |x| eval_dilated(&b, key, x).powi(2));
                        assert_close(norm, 1.0, TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn inner_product_examples() {
        let b = MwBasis::new(2).unwrap();
        let phi = b.scaling.functions();
        let psi = b.wavelets.functions();
        assert_close(inner_product(&phi[0], &phi[0]), 1.0, 1e-15);
        assert_close(inner_product(&psi[0], &phi[0]), 0.0, 1e-15);
        // Φ_1 Φ_2 is odd about 1/2, so its integral vanishes exactly.
        assert_close(inner_product(&phi[1], &phi[2]), 0.0, 1e-14);
    }

    #[test]
    fn scaling_maximum_at_endpoints() {
        let b = build_scaling(8).unwrap();
        for f in b.functions() {
            let mut best = (0.0, 0.0);
            for g in 0..=SUP_GRID_POINTS {
                let x = g as f64 / SUP_GRID_POINTS as f64;
                let v = f.eval(x).abs();
                if v > best.0 {
                    best = (v, x);
                }
            }
            assert!(best.1 == 0.0 || best.1 == 1.0, "max at {}", best.1);
        }
    }

    #[test]
    fn legendre_sup_and_preconditioned_bound() {
        let grid = 20_001;
        let bound = 2.0 / std::f64::consts::PI.sqrt();
        for k in 0..=20 {
            let mut sup = 0.0f64;
            let mut weighted = 0.0f64;
            for g in 0..grid {
                let x = -1.0 + 2.0 * g as f64 / (grid - 1) as f64;
                let v = legendre_orthonormal(k, x).abs();
                sup = sup.max(v);
                weighted = weighted.max((1.0 - x * x).powf(0.25) * v);
            }
            assert_close(sup, (k as f64 + 0.5).sqrt(), 1e-6);
            assert!(weighted <= bound, "k={k}: {weighted}");
        }
    }

    #[test]
    fn uniform_bound_examples() {
        assert_close(uniform_bound(1, 2).unwrap().k, 2.0, 1e-15);
        assert_close(uniform_bound(1, 1).unwrap().k, 2f64.sqrt(), 1e-15);
        let u = uniform_bound(0, 1).unwrap();
        assert_close(u.wavelet_sup, 1.0, 1e-15);
        assert_close(u.scaling_sup, 1.0, 1e-15);
    }

    #[test]
    fn dump_round_trip() {
        let b = MwBasis::new(3).unwrap();
        let text = b.wavelets.dump();
        let (kind, order, fs) = parse_basis_dump(&text).unwrap();
        assert_eq!(kind, BasisKind::Wavelet);
        assert_eq!(order, 3);
        assert_eq!(fs.as_slice(), b.wavelets.functions());
        assert!(parse_basis_dump("mwbasis scaling order 1 count 3\nend\n").is_err());
    }

    #[test]
    fn piecewise_rejects_bad_breakpoints() {
        assert!(PiecewisePolynomial::new(vec![0.0, 0.6, 0.4, 1.0], vec![vec![1.0]; 3]).is_err());
        assert!(PiecewisePolynomial::new(vec![0.1, 1.0], vec![vec![1.0]]).is_err());
        let p = PiecewisePolynomial::new(vec![0.0, 1.0], vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!(p.eval(-0.1), 0.0);
        assert_eq!(p.eval(1.1), 0.0);
        assert_close(p.eval(1.0), 3.0, 1e-15);
    }
}
