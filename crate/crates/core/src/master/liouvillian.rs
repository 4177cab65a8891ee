use faer::linalg::solvers::Solve;
use faer::Mat;
use nalgebra::DMatrix;

use super::{hermitian_error, DissipatorSpec};
use crate::error::{Error, Result};
use crate::C64;

/// Pivot ratio below which the trace-constrained system is treated as
/// singular.
const PIVOT_RATIO_FLOOR: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-9;

/// Column-major vectorization: `vec(rho)[i + n j] = rho[i, j]`.
pub fn vec(rho: &DMatrix<C64>) -> Vec<C64> {
    rho.as_slice().to_vec()
}

pub fn unvec(v: &[C64], n: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(n, n, v)
}

/// Lindblad superoperator on column-major `vec(rho)`, in compressed sparse
/// row form:
///
/// `-i (1 ⊗ H - H^T ⊗ 1) + sum_k gamma_k (conj(L_k) ⊗ L_k
///  - (1 ⊗ K_k + K_k^T ⊗ 1) / 2)`, with `K_k = L_k^dagger L_k`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl Liouvillian {
    pub fn new(h: &DMatrix<C64>, d: &DissipatorSpec) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || d.dim != n {
            return Err(Error::Domain(format!(
                "Hamiltonian is {}x{} but the dissipator acts on dimension {}",
                h.nrows(),
                h.ncols(),
                d.dim
            )));
        }
        for op in &d.operators {
            if !op.rate.is_finite() || op.rate < 0.0 {
                return Err(Error::Domain(format!(
                    "collapse operator `{}` has rate {}",
                    op.label, op.rate
                )));
            }
            if op.entries.iter().any(|&(r, c, _)| r >= n || c >= n) {
                return Err(Error::Domain(format!(
                    "collapse operator `{}` exceeds dimension {n}",
                    op.label
                )));
            }
        }
        let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
        let minus_i = C64::new(0.0, -1.0);
        // non-Hermitian effective Hamiltonian G = -i H - K / 2 enters as
        // 1 ⊗ G + conj(G)^T ⊗ 1
        let k = d.loss_matrix();
        let g = h.map(|z| z * minus_i) - k * C64::new(0.5, 0.0);
        for a in 0..n {
            for b in 0..n {
                let v = g[(a, b)];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    triplets.push((a + n * j, b + n * j, v));
                }
                // rho G^dagger: (G^dagger)^T = conj(G)
                for i in 0..n {
                    triplets.push((i + n * a, i + n * b, v.conj()));
                }
            }
        }
        for op in &d.operators {
            if op.rate == 0.0 {
                continue;
            }
            for &(r1, c1, v1) in &op.entries {
                for &(r2, c2, v2) in &op.entries {
                    // L rho L^dagger: element (r1, r2) gains L[r1,c1] rho[c1,c2] conj(L[r2,c2])
                    triplets.push((r1 + n * r2, c1 + n * c2, v1 * v2.conj() * op.rate));
                }
            }
        }
        Ok(Self::from_triplets(n, triplets))
    }

    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let dim = n * n;
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("merged entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Liouvillian {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Hilbert-space dimension `n`; the superoperator is `n² × n²`.
    pub fn hilbert_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    pub fn apply_to(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(rho.as_slice(), &mut out);
        unvec(&out, self.n)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Nonzero entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// `sum_i L[(i + n i), col]`, the trace functional applied to each
    /// column. Vanishes for a trace-preserving generator.
    pub fn trace_covector_residual(&self) -> f64 {
        let mut acc = vec![C64::new(0.0, 0.0); self.dim()];
        for i in 0..self.n {
            let r = i + self.n * i;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc[self.col_idx[k]] += self.values[k];
            }
        }
        acc.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn liouvillian(h: &DMatrix<C64>, d: &DissipatorSpec) -> Result<Liouvillian> {
    Liouvillian::new(h, d)
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DMatrix<C64>,
    /// `‖L vec(rho)‖₂ / ‖L‖_F`.
    pub residual: f64,
    /// Smallest over largest pivot magnitude of the LU factorization.
    pub pivot_ratio: f64,
    /// Largest `|rho - rho^dagger|` element before symmetrization.
    pub hermiticity_error: f64,
}

/// Unique trace-one zero of the Liouvillian, from a dense LU solve of the
/// system with the first population equation replaced by the trace
/// constraint.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    let n = l.hilbert_dim();
    let dim = l.dim();
    let mut m = Mat::<C64>::zeros(dim, dim);
    for (r, c, v) in l.triplets() {
        if r != 0 {
            m[(r, c)] = v;
        }
    }
    for i in 0..n {
        m[(0, i + n * i)] = C64::new(1.0, 0.0);
    }
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..dim {
        let p = u[(k, k)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if pivot_ratio.is_nan() || pivot_ratio <= PIVOT_RATIO_FLOOR {
        return Err(Error::Solver {
            reason: "trace-constrained Liouvillian is singular; the steady state is not unique".into(),
            dim,
            min_pivot: lo,
        });
    }
    let mut rhs = Mat::<C64>::zeros(dim, 1);
    rhs[(0, 0)] = C64::new(1.0, 0.0);
    lu.solve_in_place(&mut rhs);
    let x: Vec<C64> = (0..dim).map(|k| rhs[(k, 0)]).collect();
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Solver {
            reason: "non-finite solution".into(),
            dim,
            min_pivot: lo,
        });
    }
    let mut lx = vec![C64::new(0.0, 0.0); dim];
    l.apply(&x, &mut lx);
    let norm = l.frobenius_norm().max(f64::MIN_POSITIVE);
    let residual = lx.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / norm;
    if residual > RESIDUAL_TOL {
        return Err(Error::Solver {
            reason: format!("residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}"),
            dim,
            min_pivot: lo,
        });
    }
    let raw = unvec(&x, n);
    let hermiticity_error = hermitian_error(&raw);
    let rho = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
    Ok(SteadyState {
        rho,
        residual,
        pivot_ratio,
        hermiticity_error,
    })
}

/// `(1/2) ‖a - b‖₁` for Hermitian `a`, `b`.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a - b;
    let d = (&d + d.adjoint()) * C64::new(0.5, 0.0);
    0.5 * d.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>()
}
