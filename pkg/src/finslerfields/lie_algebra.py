"""Finite-dimensional Lie algebras by structure constants.

Provides the Killing form, solvability via the derived series and via the
Cartan criterion, the Killing-form radical, semisimplicity and nilpotency of
adjoint maps, and the compact-type decomposition into derived algebra plus
center.  All rank decisions use a relative singular-value threshold so that
dimension counts are auditable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ClosureFailure, IdealCheckError

RANK_TOL = 1e-8
ANTISYM_TOL = 1e-10
JACOBI_TOL = 1e-8


class LieAlgebraSC:
    """Lie algebra with [e_i, e_j] = sum_k constants[i, j, k] e_k."""

    def __init__(self, constants):
        constants = np.asarray(constants, dtype=float)
        if constants.ndim != 3 or len(set(constants.shape)) != 1:
            raise ValueError("structure constants must form an (n, n, n) array")
        self.constants = constants
        self.dim = constants.shape[0]
        anti = float(np.max(np.abs(constants + constants.transpose(1, 0, 2)))) if self.dim else 0.0
        if anti > ANTISYM_TOL:
            raise ValueError(f"antisymmetry residual {anti:.3e} exceeds {ANTISYM_TOL:.0e}")
        jac = self.jacobi_residual()
        if jac > JACOBI_TOL:
            raise ValueError(f"Jacobi residual {jac:.3e} exceeds {JACOBI_TOL:.0e}")

    def jacobi_residual(self):
        c = self.constants
        term = np.einsum("jkm,iml->ijkl", c, c)
        total = term + np.einsum("kim,jml->ijkl", c, c) + np.einsum("ijm,kml->ijkl", c, c)
        return float(np.max(np.abs(total))) if self.dim else 0.0

    def bracket(self, u, v):
        return np.einsum("i,j,ijk->k", u, v, self.constants)

    def to_dict(self):
        entries = []
        c = self.constants
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                for k in range(self.dim):
                    if c[i, j, k] != 0.0:
                        entries.append([i, j, k, float(c[i, j, k])])
        return {"dim": self.dim, "entries": entries}

    @classmethod
    def from_dict(cls, data):
        n = int(data["dim"])
        c = np.zeros((n, n, n))
        for i, j, k, val in data["entries"]:
            c[i, j, k] = float(val)
            c[j, i, k] = -float(val)
        return cls(c)


def ad_matrix(algebra, u):
    """Matrix of the map w -> [u, w] in the defining basis."""
    u = np.asarray(u, dtype=float)
    return np.einsum("i,ijk->kj", u, algebra.constants)


def killing_form(algebra, u, w):
    """tr(ad(u) ad(w)); symmetric, bilinear, and bracket-associative."""
    return float(np.trace(ad_matrix(algebra, u) @ ad_matrix(algebra, w)))


def killing_gram(algebra):
    ads = [ad_matrix(algebra, e) for e in np.eye(algebra.dim)]
    gram = np.zeros((algebra.dim, algebra.dim))
    for i in range(algebra.dim):
        for j in range(i, algebra.dim):
            val = float(np.trace(ads[i] @ ads[j]))
            gram[i, j] = gram[j, i] = val
    return gram


def _orth_basis(vectors, tol=RANK_TOL):
    """Orthonormal basis (rows) of the span of a stack of row vectors."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.size == 0:
        return np.zeros((0, vectors.shape[-1] if vectors.ndim == 2 else 0))
    _, svals, vt = np.linalg.svd(vectors, full_matrices=False)
    if svals.size == 0 or svals[0] == 0.0:
        return np.zeros((0, vectors.shape[1]))
    rank = int((svals > tol * svals[0]).sum())
    return vt[:rank]


def _bracket_span(algebra, basis_a, basis_b):
    brackets = [algebra.bracket(u, v) for u in basis_a for v in basis_b]
    if not brackets:
        return np.zeros((0, algebra.dim))
    return _orth_basis(np.stack(brackets))


def derived_series(algebra):
    """Dimensions of g, [g, g], [[g, g], [g, g]], ... until stabilization."""
    current = np.eye(algebra.dim)
    dims = [algebra.dim]
    while True:
        nxt = _bracket_span(algebra, current, current)
        dims.append(nxt.shape[0])
        if nxt.shape[0] == 0 or nxt.shape[0] == current.shape[0]:
            return dims
        current = nxt


def is_solvable(algebra):
    return derived_series(algebra)[-1] == 0


def derived_subspace(algebra):
    return _bracket_span(algebra, np.eye(algebra.dim), np.eye(algebra.dim))


def cartan_solvability(algebra, tol=RANK_TOL):
    """Solvability via B(g, [g, g]) = 0."""
    derived = derived_subspace(algebra)
    if derived.shape[0] == 0:
        return True
    gram = killing_gram(algebra)
    worst = float(np.max(np.abs(gram @ derived.T)))
    return worst <= tol


def killing_radical(algebra, tol=RANK_TOL):
    """Kernel of the Killing form, verified to be a solvable ideal.

    Returns an orthonormal row basis; raises IdealCheckError when the kernel
    fails the ideal property, which signals broken input constants.
    """
    gram = killing_gram(algebra)
    svals = np.linalg.svd(gram, compute_uv=False)
    smax = float(svals[0]) if svals.size else 0.0
    if smax == 0.0:
        radical = np.eye(algebra.dim)
    else:
        _, svals, vt = np.linalg.svd(gram)
        dim = int((svals < tol * smax).sum())
        radical = vt[algebra.dim - dim:] if dim > 0 else np.zeros((0, algebra.dim))
    if radical.shape[0] not in (0, algebra.dim):
        proj = radical.T @ radical
        worst = 0.0
        for e in np.eye(algebra.dim):
            for r in radical:
                b = algebra.bracket(e, r)
                worst = max(worst, float(np.max(np.abs(b - proj @ b))))
        if worst > tol:
            raise IdealCheckError(f"Killing-form kernel is not an ideal (residual {worst:.3e})")
    if radical.shape[0] > 0:
        sub, _ = subalgebra_constants(algebra, radical)
        if not is_solvable(sub):
            raise IdealCheckError("Killing-form kernel failed the solvability check")
    return radical


def subalgebra_constants(algebra, basis, tol=1e-8):
    """Structure constants of the span of the given (row) basis vectors."""
    basis = np.asarray(basis, dtype=float)
    m = basis.shape[0]
    constants = np.zeros((m, m, m))
    worst = 0.0
    pinv = np.linalg.pinv(basis.T)
    for i in range(m):
        for j in range(i + 1, m):
            b = algebra.bracket(basis[i], basis[j])
            coeffs = pinv @ b
            worst = max(worst, float(np.max(np.abs(basis.T @ coeffs - b))))
            constants[i, j, :] = coeffs
            constants[j, i, :] = -coeffs
    if worst > tol:
        raise ClosureFailure(worst, "span is not closed under the bracket")
    return LieAlgebraSC(constants), worst


def ad_semisimple(algebra, u, tol=RANK_TOL):
    """Whether ad(u) is diagonalizable over C.

    Eigenvalues are clustered with radius tol * smax; each cluster must have
    geometric multiplicity equal to its size.  A warning is emitted when the
    clustering is ambiguous (distinct eigenvalues within 10x of the radius).
    """
    mat = ad_matrix(algebra, u)
    smax = float(np.linalg.norm(mat, 2))
    if smax <= 1e-300:
        return True
    radius = tol * smax
    eigs = np.linalg.eigvals(mat)
    clusters = []
    for lam in sorted(eigs, key=lambda z: (z.real, z.imag)):
        for cluster in clusters:
            if abs(lam - cluster[0] / cluster[1]) <= radius:
                cluster[0] += lam
                cluster[1] += 1
                break
        else:
            clusters.append([lam, 1])
    centers = [c[0] / c[1] for c in clusters]
    if len(centers) > 1:
        gaps = [
            abs(a - b) for idx, a in enumerate(centers) for b in centers[idx + 1:]
        ]
        if min(gaps) < 10.0 * radius:
            warnings.warn("eigenvalue clusters of ad(u) are within 10x of the tolerance radius")
    n = algebra.dim
    for center, count in ((c[0] / c[1], c[1]) for c in clusters):
        shifted = mat - center * np.eye(n)
        svals = np.linalg.svd(shifted, compute_uv=False)
        rank = int((svals > radius).sum())
        if rank != n - count:
            return False
    return True


def ad_nilpotent(algebra, u, tol=RANK_TOL):
    """Whether ad(u)^n vanishes relative to |ad(u)|^n."""
    mat = ad_matrix(algebra, u)
    norm = float(np.linalg.norm(mat, 2))
    if norm <= 1e-300:
        return True
    power = np.linalg.matrix_power(mat, algebra.dim)
    return float(np.linalg.norm(power, 2)) <= tol * norm**algebra.dim


def center_basis(algebra, tol=RANK_TOL):
    """Orthonormal basis of {u : [u, g] = 0}."""
    n = algebra.dim
    stacked = algebra.constants.transpose(0, 1, 2).reshape(n, n * n)
    svals = np.linalg.svd(stacked, compute_uv=False)
    smax = float(svals[0]) if svals.size else 0.0
    if smax == 0.0:
        return np.eye(n)
    u, svals, _ = np.linalg.svd(stacked)
    dim = int((svals < tol * smax).sum()) + (n - len(svals))
    return u[:, n - dim:].T if dim > 0 else np.zeros((0, n))


@dataclass
class CompactDecompositionReport:
    """Outcome of the compact-type check g = [g, g] + center."""

    compact_type: bool
    max_gram_eigenvalue: float
    derived_dim: int
    center_dim: int
    direct_sum: bool
    kernel_equals_center: bool


def compact_decomposition_check(algebra, tol=RANK_TOL):
    """For negative-semidefinite Killing form, verify g = [g, g] (+) center.

    When the Killing form has a positive eigenvalue the report only records
    that the algebra is not of compact type.
    """
    gram = killing_gram(algebra)
    eigs = np.linalg.eigvalsh(gram)
    scale = max(float(np.max(np.abs(eigs))), 1e-300)
    compact = bool(eigs[-1] <= tol * scale)
    derived = derived_subspace(algebra)
    center = center_basis(algebra)
    if not compact:
        return CompactDecompositionReport(
            compact_type=False,
            max_gram_eigenvalue=float(eigs[-1]),
            derived_dim=derived.shape[0],
            center_dim=center.shape[0],
            direct_sum=False,
            kernel_equals_center=False,
        )
    stacked = np.vstack([derived, center]) if derived.size or center.size else np.zeros((0, algebra.dim))
    joint_rank = _orth_basis(stacked).shape[0] if stacked.size else 0
    direct_sum = (derived.shape[0] + center.shape[0] == algebra.dim) and joint_rank == algebra.dim
    kernel = killing_radical(algebra)
    same_dim = kernel.shape[0] == center.shape[0]
    if same_dim and kernel.shape[0] > 0:
        cosines = np.linalg.svd(kernel @ center.T, compute_uv=False)
        kernel_equals_center = bool(np.min(cosines) > 1.0 - 1e-8)
    else:
        kernel_equals_center = same_dim
    return CompactDecompositionReport(
        compact_type=True,
        max_gram_eigenvalue=float(eigs[-1]),
        derived_dim=derived.shape[0],
        center_dim=center.shape[0],
        direct_sum=direct_sum,
        kernel_equals_center=kernel_equals_center,
    )


def killing_signature(algebra, tol=RANK_TOL):
    """(positive, negative, zero) eigenvalue counts of the Killing-form Gram matrix."""
    eigs = np.linalg.eigvalsh(killing_gram(algebra))
    scale = max(float(np.max(np.abs(eigs))), 1e-300)
    pos = int((eigs > tol * scale).sum())
    neg = int((eigs < -tol * scale).sum())
    return pos, neg, algebra.dim - pos - neg


# ---------------------------------------------------------------------------
# reference algebras used across the test and acceptance suites


def rotation_algebra():
    """[e1, e2] = e3 cyclically; Killing form -2 I."""
    c = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[i, j, k] = 1.0
        c[j, i, k] = -1.0
    return LieAlgebraSC(c)


def affine_algebra():
    """Two-dimensional algebra [x, y] = y."""
    c = np.zeros((2, 2, 2))
    c[0, 1, 1] = 1.0
    c[1, 0, 1] = -1.0
    return LieAlgebraSC(c)


def abelian_algebra(n):
    return LieAlgebraSC(np.zeros((n, n, n)))


def direct_sum(first, second):
    n = first.dim + second.dim
    c = np.zeros((n, n, n))
    c[: first.dim, : first.dim, : first.dim] = first.constants
    c[first.dim:, first.dim:, first.dim:] = second.constants
    return LieAlgebraSC(c)
