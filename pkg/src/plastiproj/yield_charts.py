"""Isometric charts for the deviatoric ball and brute-force projection oracles.

The constraint set {A : |A^D| <= R} in R^{dxd} is the image of
``(lam, x) -> chart_sph(lam) + chart_dev(x)`` with |x| <= R, where

* ``chart_sph(lam) = (lam/sqrt(d)) * I`` spans the spherical line,
* ``chart_dev(x)`` spans the trace-free matrices via the orthonormal basis
  of diagonal deviators e_i = diag(1,..,1,-i,0,..)/sqrt(i(i+1)) together
  with the single-entry off-diagonal matrices E_ij (i != j).

Both maps are linear isometries with mutually orthogonal ranges, so
distances split coordinate-wise.  The chart covers all of R^{dxd}, not just
symmetric matrices; symmetric inputs decompose with b_ij = b_ji.

These charts back two independent checks of the closed-form projection in
``tensor_core``:

* ``argmin_oracle`` samples the constraint set through the chart and
  verifies by brute force that no sample beats the projected point.
* ``inclusion_equivalence_check`` verifies that the projected stress update
  satisfies the variational inequality (F - sigma_b, tau - sigma_b) <= 0
  against random witnesses tau in the shifted set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor_core import (
    SymMat,
    frob_inner,
    frob_norm,
    project_constraint,
    trace,
)


@dataclass(frozen=True)
class DevCoords:
    """Chart coordinates: spherical lam plus d^2-1 deviatoric coordinates.

    x is laid out as the d-1 diagonal coefficients a_i followed by the
    off-diagonal entries b_ij for i != j in row-major (i, j) order.
    """

    lam: float
    x: np.ndarray

    @property
    def dim(self) -> int:
        return int(round(math.sqrt(len(self.x) + 1)))


def _offdiag_pairs(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d) for j in range(d) if i != j]


def dev_basis(d: int) -> np.ndarray:
    """Orthonormal basis of the trace-free matrices, shape (d*d-1, d, d)."""
    mats = []
    for i in range(1, d):
        e = np.zeros((d, d))
        for k in range(i):
            e[k, k] = 1.0
        e[i, i] = -float(i)
        mats.append(e / math.sqrt(i * (i + 1)))
    for i, j in _offdiag_pairs(d):
        e = np.zeros((d, d))
        e[i, j] = 1.0
        mats.append(e)
    return np.stack(mats)


def psi1(lam: float, d: int) -> SymMat:
    """Spherical chart, (lam/sqrt(d)) * identity; an isometry of R."""
    return (lam / math.sqrt(d)) * SymMat.identity(d)


def psi2(x: np.ndarray, d: int) -> np.ndarray:
    """Deviatoric chart; maps R^{d*d-1} isometrically onto trace-free matrices."""
    x = np.asarray(x, dtype=float)
    if x.shape != (d * d - 1,):
        raise ValueError(f"expected {d * d - 1} coordinates, got shape {x.shape}")
    return np.einsum("k,kij->ij", x, dev_basis(d))


def decompose(a: np.ndarray) -> DevCoords:
    """Unique chart coordinates of any d x d matrix."""
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    lam = np.trace(a) / math.sqrt(d)
    dev = a - (np.trace(a) / d) * np.eye(d)
    x = np.einsum("kij,ij->k", dev_basis(d), dev)
    return DevCoords(lam=float(lam), x=x)


def kr_contains_via_chart(a: SymMat, radius: float) -> bool:
    """Membership in {A : |A^D| <= radius}, decided in chart coordinates."""
    if radius < 0.0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    coords = decompose(a.to_matrix())
    return float(np.linalg.norm(coords.x)) <= radius


def _ball_samples(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    """Uniform samples in the radius ball of R^dim, shape (n, dim)."""
    if radius == 0.0:
        return np.zeros((n, dim))
    z = rng.standard_normal((n, dim))
    z /= np.maximum(np.linalg.norm(z, axis=1, keepdims=True), 1e-300)
    r = radius * rng.random(n) ** (1.0 / dim)
    return z * r[:, None]


def argmin_oracle(
    f: SymMat, radius: float, n_samples: int, seed: int
) -> tuple[np.ndarray, float]:
    """Brute-force nearest point to f over chart samples of the constraint set.

    lam is drawn from a uniform 101-point grid on
    [tr f/sqrt(d) - 2|f|, tr f/sqrt(d) + 2|f|] (the true minimizer's lam is
    interior to that interval), x uniform in the radius ball.  Deterministic
    per seed.  Returns (best sampled matrix, its Frobenius distance to f).
    """
    if radius < 0.0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    d = f.dim
    rng = np.random.default_rng(seed)
    center = trace(f) / math.sqrt(d)
    half = 2.0 * max(frob_norm(f), 1e-12)
    lam_grid = np.linspace(center - half, center + half, 101)
    lam = lam_grid[rng.integers(0, len(lam_grid), size=n_samples)]
    xs = _ball_samples(rng, n_samples, d * d - 1, radius)

    basis = dev_basis(d)
    mats = (lam[:, None, None] / math.sqrt(d)) * np.eye(d) + np.einsum(
        "nk,kij->nij", xs, basis
    )
    diff = mats - f.to_matrix()
    dists = np.sqrt(np.einsum("nij,nij->n", diff, diff))
    best = int(np.argmin(dists))
    return mats[best], float(dists[best])


def sample_constraint_set(
    rng: np.random.Generator, n: int, p: SymMat, g: float, lam_scale: float
) -> list[SymMat]:
    """Random symmetric witnesses tau with |(tau+p)^D| <= g.

    Sampled through the chart with paired off-diagonal coordinates
    (b_ij = b_ji), then shifted by -p.
    """
    d = p.dim
    # independent coordinates of the symmetric trace-free subspace
    m = d * (d + 1) // 2 - 1
    out = []
    lam = lam_scale * rng.standard_normal(n)
    coords = rng.standard_normal((n, m))
    # chart norm of a symmetric deviator with paired entries c: a-part counts
    # once, each off-diagonal pair twice
    weights = np.ones(m)
    weights[d - 1 :] = 2.0
    norms = np.sqrt((coords**2 * weights).sum(axis=1))
    radii = g * rng.random(n) ** (1.0 / m)
    basis = dev_basis(d)
    pairs = _offdiag_pairs(d)
    for k in range(n):
        c = coords[k] * (radii[k] / max(norms[k], 1e-300))
        x = np.zeros(d * d - 1)
        x[: d - 1] = c[: d - 1]
        # paired off-diagonals: same value in the (i,j) and (j,i) slots
        upper = [(i, j) for i, j in pairs if i < j]
        for idx, (i, j) in enumerate(upper):
            v = c[d - 1 + idx]
            x[d - 1 + pairs.index((i, j))] = v
            x[d - 1 + pairs.index((j, i))] = v
        mat = psi1(lam[k], d).to_matrix() + np.einsum("k,kij->ij", x, basis)
        out.append(SymMat.from_matrix(mat) - p)
    return out


@dataclass(frozen=True)
class InclusionReport:
    sigma_b: SymMat
    max_violation: float
    n_witnesses: int


def inclusion_equivalence_check(
    sigma_a: SymMat,
    v_strain: SymMat,
    h: SymMat,
    p: SymMat,
    g: float,
    dt: float,
    n_witnesses: int,
    seed: int,
) -> InclusionReport:
    """Check the projected stress update against its variational inequality.

    sigma_b is computed by the projection formula from the trial stress
    F = sigma_a + dt*(v_strain + h); the report carries the largest value of
    (F - sigma_b, tau - sigma_b) over random witnesses tau in the shifted
    constraint set, which must be <= 0 up to roundoff.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if g < 0.0:
        raise ValueError(f"g must be >= 0, got {g}")
    f_trial = sigma_a + dt * (v_strain + h)
    sigma_b = project_constraint(f_trial, p, g)
    rng = np.random.default_rng(seed)
    lam_scale = 1.0 + frob_norm(f_trial)
    worst = -math.inf
    for tau in sample_constraint_set(rng, n_witnesses, p, g, lam_scale):
        v = frob_inner(f_trial - sigma_b, tau - sigma_b)
        if v > worst:
            worst = v
    return InclusionReport(sigma_b=sigma_b, max_violation=worst, n_witnesses=n_witnesses)
