//! Drifted Laplacian `Δ_f u = Δu − ⟨∇f, ∇u⟩` on boxes `[−L, L]ⁿ` with the
//! weighted-Neumann condition, discretized as a lumped finite-difference form.

mod lanczos;

use crate::catalog::SolitonInstance;
use crate::error::{Error, Result};
use crate::expr::Expression;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat, Par, Side};
use lanczos::{dot, norm};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

pub use lanczos::RITZ_TOLERANCE;

/// Largest supported box dimension.
pub const MAX_SPECTRAL_DIM: usize = 2;
/// Fewest grid points per axis.
pub const MIN_POINTS: usize = 51;
/// Boundary weight `e^{−f}` below which truncation is considered negligible.
pub const BOUNDARY_WEIGHT: f64 = 1e-12;
/// Shift used for the factorization `B + σI`.
pub const SHIFT: f64 = 1e-2;
/// Box half-widths of the truncation-stability series.
pub const TRUNCATION_WIDTHS: [f64; 3] = [6.0, 8.0, 10.0];

const SEED: u64 = 0x5eed_1a2c;

#[derive(Clone, Debug, Serialize)]
pub struct SpectralProblem {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
    pub f: Expression,
}

impl SpectralProblem {
    pub fn new(dim: usize, half_width: f64, points: usize, f: Expression) -> Result<Self> {
        if points % 2 == 0 || points < MIN_POINTS {
            return Err(Error::Invalid(format!("grid points per axis must be odd and >= {MIN_POINTS}, got {points}")));
        }
        Self::unchecked(dim, half_width, points, f)
    }

    fn unchecked(dim: usize, half_width: f64, points: usize, f: Expression) -> Result<Self> {
        if dim == 0 || dim > MAX_SPECTRAL_DIM {
            return Err(Error::Invalid(format!("spectral dimension must be 1..={MAX_SPECTRAL_DIM}, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Invalid(format!("half width must be positive, got {half_width}")));
        }
        if f.arity() > dim {
            return Err(Error::DimensionMismatch { expected: dim, got: f.arity() });
        }
        Ok(SpectralProblem { dim, half_width, points, f })
    }

    /// Problem for an instance's potential on its own dimension.
    pub fn for_instance(s: &SolitonInstance, half_width: f64, points: usize) -> Result<Self> {
        Self::new(s.dim(), half_width, points, s.f.clone())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn unknowns(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Coordinates of a node from its flat index (axis 0 varies fastest).
    pub fn node(&self, index: usize) -> Vec<f64> {
        let h = self.spacing();
        let mut rest = index;
        (0..self.dim)
            .map(|_| {
                let i = rest % self.points;
                rest /= self.points;
                -self.half_width + i as f64 * h
            })
            .collect()
    }

    /// Largest `e^{−f}` over boundary nodes.
    pub fn boundary_weight(&self) -> Result<f64> {
        let last = self.points - 1;
        let mut worst: f64 = 0.0;
        for a in 0..self.unknowns() {
            let mut rest = a;
            let on_boundary = (0..self.dim).any(|_| {
                let i = rest % self.points;
                rest /= self.points;
                i == 0 || i == last
            });
            if on_boundary {
                worst = worst.max((-self.f.eval(&self.node(a))?).exp());
            }
        }
        Ok(worst)
    }

    /// Same potential on a nested grid with twice the spacing.
    fn coarse(&self) -> Result<Self> {
        Self::unchecked(self.dim, self.half_width, self.points.div_ceil(2), self.f.clone())
    }

    fn with_half_width(&self, half_width: f64) -> Result<Self> {
        Self::new(self.dim, half_width, self.points, self.f.clone())
    }
}

/// Smallest half-width in steps of 0.5 up to 50 whose boundary weight is at
/// most [`BOUNDARY_WEIGHT`], judged on a 51-point grid.
pub fn confining_half_width(dim: usize, f: &Expression) -> Result<Option<f64>> {
    for k in 2..=100 {
        let l = 0.5 * k as f64;
        let p = SpectralProblem::new(dim, l, MIN_POINTS, f.clone())?;
        if p.boundary_weight()? <= BOUNDARY_WEIGHT {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

/// Stiffness `K` (CSR, both triangles) and lumped mass of the weighted form
/// `Σ_edges e^{−f(mid)} h^{n−2} (u_a − u_b)²`.
#[derive(Clone, Debug)]
pub struct Operator {
    pub dim: usize,
    pub points: usize,
    pub mass: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

pub fn assemble(p: &SpectralProblem) -> Result<Operator> {
    let n = p.dim;
    let np = p.points;
    let h = p.spacing();
    let last = np - 1;
    let total = p.unknowns();
    let strides: Vec<usize> = (0..n).map(|k| np.pow(k as u32)).collect();
    let index_of = |a: usize| -> [usize; MAX_SPECTRAL_DIM] {
        let mut idx = [0; MAX_SPECTRAL_DIM];
        let mut rest = a;
        for slot in idx.iter_mut().take(n) {
            *slot = rest % np;
            rest /= np;
        }
        idx
    };
    let boundary_factor = |idx: &[usize; MAX_SPECTRAL_DIM], skip: usize| -> f64 {
        (0..n)
            .filter(|&j| j != skip && (idx[j] == 0 || idx[j] == last))
            .fold(1.0, |acc, _| acc * 0.5)
    };

    // per node: lumped mass and forward edge weights along each axis
    let cells: Vec<(f64, [f64; MAX_SPECTRAL_DIM])> = (0..total)
        .into_par_iter()
        .map(|a| -> Result<(f64, [f64; MAX_SPECTRAL_DIM])> {
            let idx = index_of(a);
            let x: Vec<f64> = (0..n).map(|k| -p.half_width + idx[k] as f64 * h).collect();
            let mass = (-p.f.eval(&x)?).exp() * h.powi(n as i32) * boundary_factor(&idx, usize::MAX);
            let mut edges = [0.0; MAX_SPECTRAL_DIM];
            for k in 0..n {
                if idx[k] < last {
                    let mut mid = x.clone();
                    mid[k] = -p.half_width + (idx[k] as f64 + 0.5) * h;
                    edges[k] = (-p.f.eval(&mid)?).exp() * h.powi(n as i32 - 2) * boundary_factor(&idx, k);
                }
            }
            Ok((mass, edges))
        })
        .collect::<Result<_>>()?;

    let mut row_ptr = Vec::with_capacity(total + 1);
    let mut cols = Vec::with_capacity(total * (2 * n + 1));
    let mut vals = Vec::with_capacity(total * (2 * n + 1));
    row_ptr.push(0);
    for a in 0..total {
        let idx = index_of(a);
        let mut diag = 0.0;
        for k in (0..n).rev() {
            if idx[k] > 0 {
                let b = a - strides[k];
                let w = cells[b].1[k];
                cols.push(b);
                vals.push(-w);
                diag += w;
            }
        }
        for k in 0..n {
            if idx[k] < last {
                diag += cells[a].1[k];
            }
        }
        cols.push(a);
        vals.push(diag);
        for k in 0..n {
            if idx[k] < last {
                cols.push(a + strides[k]);
                vals.push(-cells[a].1[k]);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(Operator {
        dim: n,
        points: np,
        mass: cells.into_iter().map(|c| c.0).collect(),
        row_ptr,
        cols,
        vals,
    })
}

impl Operator {
    pub fn unknowns(&self) -> usize {
        self.mass.len()
    }

    /// `K u`.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.unknowns())
            .into_par_iter()
            .map(|a| {
                (self.row_ptr[a]..self.row_ptr[a + 1])
                    .map(|e| self.vals[e] * u[self.cols[e]])
                    .sum()
            })
            .collect()
    }

    /// `−Δ_f u ≈ M⁻¹ K u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness_apply(u)
            .into_iter()
            .zip(&self.mass)
            .map(|(k, m)| k / m)
            .collect()
    }

    /// `uᵀ K v`.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(&self.stiffness_apply(v), u)
    }

    /// `Σ m u v`.
    pub fn weighted_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    /// Largest `|K_ab − K_ba|` relative to the largest diagonal entry.
    pub fn asymmetry(&self) -> f64 {
        let entry = |a: usize, b: usize| -> f64 {
            let row = &self.cols[self.row_ptr[a]..self.row_ptr[a + 1]];
            row.binary_search(&b)
                .map(|e| self.vals[self.row_ptr[a] + e])
                .unwrap_or(0.0)
        };
        let mut scale: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for a in 0..self.unknowns() {
            for e in self.row_ptr[a]..self.row_ptr[a + 1] {
                let b = self.cols[e];
                if a == b {
                    scale = scale.max(self.vals[e].abs());
                } else {
                    worst = worst.max((self.vals[e] - entry(b, a)).abs());
                }
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    /// Grid Rayleigh quotient `uᵀKu / Σ m (u − ū)²`.
    pub fn rayleigh(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.unknowns() {
            return Err(Error::DimensionMismatch { expected: self.unknowns(), got: u.len() });
        }
        let total: f64 = self.mass.iter().sum();
        let mean = self.weighted_inner(u, &vec![1.0; u.len()]) / total;
        let centered: Vec<f64> = u.iter().map(|x| x - mean).collect();
        let den = self.weighted_inner(&centered, &centered);
        if den < 1e-14 {
            return Err(Error::DegenerateTestFunction);
        }
        Ok(self.form(u, u) / den)
    }

    /// `‖M⁻¹Ku − μu‖_M / ‖u‖_M`.
    pub fn residual(&self, u: &[f64], mu: f64) -> f64 {
        let r: Vec<f64> = self.apply(u).iter().zip(u).map(|(a, b)| a - mu * b).collect();
        (self.weighted_inner(&r, &r) / self.weighted_inner(u, u)).sqrt()
    }

    fn shifted_factor(&self, shift: f64) -> Result<ShiftedFactor> {
        let n = self.unknowns();
        let root: Vec<f64> = self.mass.iter().map(|m| m.sqrt()).collect();
        let mut triplets = Vec::with_capacity(self.vals.len() / 2 + n);
        for a in 0..n {
            for e in self.row_ptr[a]..self.row_ptr[a + 1] {
                let b = self.cols[e];
                if b > a {
                    break;
                }
                let mut v = self.vals[e] / (root[a] * root[b]);
                if a == b {
                    v += shift;
                }
                triplets.push(Triplet::new(a, b, v));
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let factor_err = |e: &dyn std::fmt::Debug| Error::Factorization(format!("{e:?}"));
        // simplicial: single right-hand-side solves dominate the cost
        let symbolic = factorize_symbolic_cholesky(
            mat.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams {
                supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SIMPLICIAL,
                ..Default::default()
            },
        )
        .map_err(|e| factor_err(&e))?;
        let mut values = vec![0.0; symbolic.len_val()];
        let mut buf = MemBuffer::new(symbolic.factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default()));
        symbolic
            .factorize_numeric_llt(
                &mut values,
                mat.as_ref(),
                Side::Lower,
                Default::default(),
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| factor_err(&e))?;
        let scratch = MemBuffer::new(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        Ok(ShiftedFactor { symbolic, values, scratch })
    }
}

struct ShiftedFactor {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    scratch: MemBuffer,
}

impl ShiftedFactor {
    fn solve_in_place(&mut self, rhs: faer::MatMut<'_, f64>) {
        LltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            rhs,
            Par::Seq,
            MemStack::new(&mut self.scratch),
        );
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
    pub unknowns: usize,
    /// `λ₀ ≤ λ₁ ≤ …`; `λ₀` belongs to the constants.
    pub eigenvalues: Vec<f64>,
    /// Weighted residual norms, one per eigenvalue.
    pub residuals: Vec<f64>,
    /// Coefficient of variation of the `λ₀` eigenvector.
    pub constant_variation: f64,
    /// `λ₁` on the nested grid with twice the spacing.
    pub coarse_lambda1: Option<f64>,
    /// `|λ₁(N) − λ₁(N')|`, a conservative bound on the discretization error
    /// of `λ₁` (Richardson puts the error near a third of it).
    pub refinement_error: Option<f64>,
    pub iterations: usize,
    pub boundary_weight: f64,
    pub warnings: Vec<String>,
    /// Node values, normalized in the weighted norm.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectralResult {
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// Eigenvector `k` along the axis-0 line through the box center.
    pub fn write_slice_csv(&self, k: usize, mut out: impl Write) -> Result<()> {
        let u = self
            .eigenvectors
            .get(k)
            .ok_or_else(|| Error::Invalid(format!("no eigenvector {k}")))?;
        let mid = self.points / 2;
        let offset: usize = (1..self.dim).map(|j| mid * self.points.pow(j as u32)).sum();
        let h = 2.0 * self.half_width / (self.points - 1) as f64;
        writeln!(out, "x1,u{k}")?;
        for i in 0..self.points {
            writeln!(out, "{},{}", -self.half_width + i as f64 * h, u[offset + i])?;
        }
        Ok(())
    }
}

struct Spectrum {
    values: Vec<f64>,
    residuals: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    constant_variation: f64,
    iterations: usize,
}

fn solve(op: &Operator, m: usize) -> Result<Spectrum> {
    let n = op.unknowns();
    if m < 2 || m > n {
        return Err(Error::Invalid(format!("need 2 <= m <= {n} eigenpairs, got {m}")));
    }
    let root: Vec<f64> = op.mass.iter().map(|x| x.sqrt()).collect();
    let scale = norm(&root);
    let q: Vec<f64> = root.iter().map(|x| x / scale).collect();
    let mut llt = op.shifted_factor(SHIFT)?;
    let max_iterations = (10.0 * m as f64 * (n as f64).sqrt()).ceil() as usize;
    let mut rhs = Mat::<f64>::zeros(n, 1);
    let shift_invert = |x: &[f64], y: &mut [f64]| -> Result<()> {
        for (i, v) in x.iter().enumerate() {
            rhs[(i, 0)] = *v;
        }
        llt.solve_in_place(rhs.as_mut());
        for (i, v) in y.iter_mut().enumerate() {
            *v = rhs[(i, 0)];
        }
        Ok(())
    };
    let pairs = lanczos::largest(shift_invert, n, m - 1, &q, max_iterations, SEED)?;

    let to_nodes = |y: &[f64]| -> Vec<f64> {
        let mut u: Vec<f64> = y.iter().zip(&root).map(|(a, r)| a / r).collect();
        let s = op.weighted_inner(&u, &u).sqrt();
        let pivot = u.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let s = if pivot < 0.0 { -s } else { s };
        u.iter_mut().for_each(|v| *v /= s);
        u
    };
    let u0 = to_nodes(&q);
    let mean = u0.iter().sum::<f64>() / n as f64;
    let var = u0.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let mut values = vec![op.form(&u0, &u0)];
    let mut vectors = vec![u0];
    for (theta, y) in pairs.values.iter().zip(&pairs.vectors) {
        values.push(1.0 / theta - SHIFT);
        vectors.push(to_nodes(y));
    }
    // Ritz values come out descending in θ, i.e. ascending in λ; keep the
    // order stable if rounding swaps near-equal values
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let vectors: Vec<Vec<f64>> = order.iter().map(|&i| vectors[i].clone()).collect();
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(mu, u)| op.residual(u, *mu))
        .collect();
    Ok(Spectrum {
        values,
        residuals,
        vectors,
        constant_variation: var.sqrt() / mean.abs(),
        iterations: pairs.iterations,
    })
}

/// The `m` lowest eigenpairs (including `λ₀`) of `−Δ_f`, with a refinement
/// estimate for `λ₁` from the nested coarse grid.
pub fn smallest_nonzero(p: &SpectralProblem, m: usize) -> Result<SpectralResult> {
    let op = assemble(p)?;
    let spectrum = solve(&op, m)?;
    let coarse_lambda1 = {
        let cp = p.coarse()?;
        let cop = assemble(&cp)?;
        Some(solve(&cop, 2)?.values[1])
    };
    let boundary_weight = p.boundary_weight()?;
    let mut warnings = Vec::new();
    if boundary_weight > BOUNDARY_WEIGHT {
        warnings.push(format!(
            "boundary weight e^-f = {boundary_weight:.3e} exceeds {BOUNDARY_WEIGHT:e}; truncation is not negligible"
        ));
    }
    Ok(SpectralResult {
        dim: p.dim,
        half_width: p.half_width,
        points: p.points,
        unknowns: op.unknowns(),
        refinement_error: coarse_lambda1.map(|c| (spectrum.values[1] - c).abs()),
        coarse_lambda1,
        eigenvalues: spectrum.values,
        residuals: spectrum.residuals,
        constant_variation: spectrum.constant_variation,
        iterations: spectrum.iterations,
        boundary_weight,
        warnings,
        eigenvectors: spectrum.vectors,
    })
}

/// Grid Rayleigh quotient of a test function.
pub fn rayleigh(p: &SpectralProblem, u: &Expression) -> Result<f64> {
    if u.arity() > p.dim {
        return Err(Error::DimensionMismatch { expected: p.dim, got: u.arity() });
    }
    let op = assemble(p)?;
    let values = (0..p.unknowns())
        .map(|a| u.eval(&p.node(a)))
        .collect::<Result<Vec<f64>>>()?;
    op.rayleigh(&values)
}

/// Eigenvalues whose consecutive differences are at most this fraction of
/// the larger one are treated as one cluster.
pub const CLUSTER_TOLERANCE: f64 = 0.02;

#[derive(Clone, Debug, Serialize)]
pub struct TruncationRun {
    pub half_width: f64,
    pub eigenvalues: Vec<f64>,
    /// Distinct cluster values and the gaps between consecutive clusters.
    pub clusters: Vec<f64>,
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    pub boundary_weight: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem12Report {
    pub entry: String,
    pub dim: usize,
    /// The bound `λ` of the instance.
    pub lambda: f64,
    pub lambda1: f64,
    pub margin: f64,
    pub refinement_error: f64,
    /// `λ₁ ≥ λ − ε`.
    pub holds: bool,
    /// `|λ₁ − λ| ≤ 0.01·max(λ, 1e-3)`.
    pub equality: bool,
    pub result: SpectralResult,
    pub truncation: Vec<TruncationRun>,
    /// Every cluster gap in the truncation series is at least `0.1·λ`.
    pub gaps_bounded: bool,
    /// `λ₁` at the widest box fell below 3/4 of its value at the narrowest.
    pub no_spectral_gap: bool,
    pub findings: Vec<String>,
}

fn clusters(values: &[f64]) -> Vec<f64> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some(c) if (v - c[c.len() - 1]).abs() <= CLUSTER_TOLERANCE * v.abs().max(1e-12) => c.push(v),
            _ => out.push(vec![v]),
        }
    }
    out.iter().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Metric coefficients are literally `δ_ij`.
pub fn is_euclidean_background(s: &SolitonInstance) -> bool {
    let n = s.dim();
    (0..n).all(|i| (0..n).all(|j| s.metric.coefficient(i, j).is_literal(if i == j { 1.0 } else { 0.0 })))
}

/// Spectral-gap audit: `λ₁ ≥ λ` on `p`, plus cluster gaps and `λ₁` across
/// the truncation series [`TRUNCATION_WIDTHS`] on the same number of points.
pub fn theorem12_audit(s: &SolitonInstance, p: &SpectralProblem) -> Result<Theorem12Report> {
    if !is_euclidean_background(s) {
        return Err(Error::Invalid(format!("`{}` does not have a Euclidean background metric", s.id)));
    }
    if s.dim() != p.dim {
        return Err(Error::DimensionMismatch { expected: s.dim(), got: p.dim });
    }
    let m = 7;
    let result = smallest_nonzero(p, m)?;
    let lambda1 = result.lambda1();
    let eps = result.refinement_error.unwrap_or(0.0);
    let mut truncation = Vec::new();
    for &l in &TRUNCATION_WIDTHS {
        let q = p.with_half_width(l)?;
        let eigenvalues = if l == p.half_width {
            result.eigenvalues.clone()
        } else {
            solve(&assemble(&q)?, m)?.values
        };
        let cl = clusters(&eigenvalues);
        let gaps: Vec<f64> = cl.windows(2).map(|w| w[1] - w[0]).collect();
        truncation.push(TruncationRun {
            half_width: l,
            min_gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
            eigenvalues,
            clusters: cl,
            gaps,
            boundary_weight: q.boundary_weight()?,
        });
    }
    let gaps_bounded = truncation.iter().all(|t| t.min_gap >= 0.1 * s.lambda);
    let first = truncation[0].eigenvalues[1];
    let last = truncation[truncation.len() - 1].eigenvalues[1];
    let no_spectral_gap = last < 0.75 * first;
    let margin = lambda1 - s.lambda;
    let mut findings = result.warnings.clone();
    if no_spectral_gap {
        findings.push(format!(
            "no spectral gap: lambda1 drops from {first:.6} (L = {}) to {last:.6} (L = {})",
            TRUNCATION_WIDTHS[0],
            TRUNCATION_WIDTHS[TRUNCATION_WIDTHS.len() - 1]
        ));
    }
    if !gaps_bounded {
        findings.push(format!("eigenvalue gaps fall below 0.1*lambda = {}", 0.1 * s.lambda));
    }
    Ok(Theorem12Report {
        entry: s.id.clone(),
        dim: p.dim,
        lambda: s.lambda,
        lambda1,
        margin,
        refinement_error: eps,
        holds: lambda1 >= s.lambda - eps,
        equality: margin.abs() <= 0.01 * s.lambda.max(1e-3),
        result,
        truncation,
        gaps_bounded,
        no_spectral_gap,
        findings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clusters_merge_repeated_values() {
        let c = clusters(&[0.0, 1.0, 1.0005, 2.0, 2.001, 1.999 + 0.002, 3.0]);
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn neumann_interval() {
        let p = SpectralProblem::new(1, std::f64::consts::FRAC_PI_2, 201, Expression::constant(0.0)).unwrap();
        let r = smallest_nonzero(&p, 3).unwrap();
        assert!((r.lambda1() - 1.0).abs() < 1e-3, "{:?}", r.eigenvalues);
        assert!((r.eigenvalues[2] - 4.0).abs() < 1e-2, "{:?}", r.eigenvalues);
    }
}
