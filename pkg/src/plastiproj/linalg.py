"""Sparse symmetric storage and Jacobi-preconditioned conjugate gradients.

``SparseSym`` keeps plain CSR buffers (row offsets, column indices, values)
with the symmetry stored fully.  Matrix-vector products and sum/scale reuse
scipy.sparse on zero-copy views of the same buffers; the CG iteration itself
is written out so iteration counts and residual reporting stay under our
control and fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass
class SparseSym:
    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @classmethod
    def from_coo(cls, n: int, rows, cols, vals) -> "SparseSym":
        m = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(n, m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseSym":
        m = sp.csr_matrix(np.asarray(a, dtype=float))
        m.sort_indices()
        return cls(a.shape[0], m.indptr, m.indices, m.data)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def __add__(self, other: "SparseSym") -> "SparseSym":
        m = (self.to_scipy() + other.to_scipy()).tocsr()
        m.sort_indices()
        return SparseSym(self.n, m.indptr, m.indices, m.data)

    def scaled(self, c: float) -> "SparseSym":
        return SparseSym(self.n, self.indptr, self.indices, self.data * c)


def spmv(a: SparseSym, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (a.n,):
        raise ValueError(f"dimension mismatch: matrix {a.n}, vector {x.shape}")
    return a.to_scipy() @ x


@dataclass
class CGResult:
    x: np.ndarray
    iters: int
    residual: float
    converged: bool


def cg_solve(
    a: SparseSym,
    b: np.ndarray,
    tol: float = 1e-12,
    max_iter: int | None = None,
) -> CGResult:
    """Jacobi-preconditioned CG for SPD systems.

    Convergence metric is the relative preconditioned residual, with an
    absolute fallback when ||b|| = 0.  Non-convergence is reported in the
    result, never silent.
    """
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    b = np.asarray(b, dtype=float)
    if b.shape != (a.n,):
        raise ValueError(f"dimension mismatch: matrix {a.n}, rhs {b.shape}")
    if max_iter is None:
        max_iter = max(10 * a.n, 100)

    dinv = a.diagonal().copy()
    dinv[dinv == 0.0] = 1.0
    dinv = 1.0 / dinv

    mat = a.to_scipy()
    x = np.zeros(a.n)
    r = b.copy()
    z = dinv * r
    rz = float(r @ z)
    b_norm = np.sqrt(float((dinv * b) @ b))
    if b_norm == 0.0:
        return CGResult(x=x, iters=0, residual=0.0, converged=True)
    p = z.copy()
    it = 0
    while it < max_iter:
        if np.sqrt(rz) / b_norm <= tol:
            return CGResult(x=x, iters=it, residual=np.sqrt(rz) / b_norm, converged=True)
        q = mat @ p
        alpha = rz / float(p @ q)
        x += alpha * p
        r -= alpha * q
        z = dinv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    res = np.sqrt(max(rz, 0.0)) / b_norm
    return CGResult(x=x, iters=it, residual=res, converged=res <= tol)
