"""Indicatrix quadrature and the averaged Euclidean norm of a Minkowski norm.

The unit level set {F = 1} carries the volume measure of the Hessian metric;
averaging the fundamental tensor against that measure produces an inner
product.  The construction commutes with positive scalings and linear maps
that intertwine two norms, which is what ``verify_equivariance`` checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvexityViolation, HypothesisViolation
from .norm_core import EuclideanNorm

NODE_TOL = 1e-10


@dataclass(frozen=True)
class IndicatrixQuadrature:
    """Nodes on {F = 1} with weights for the Hessian-metric surface measure."""

    points: np.ndarray
    weights: np.ndarray
    resolution: int

    @property
    def total_weight(self):
        return float(self.weights.sum())

    def to_table(self):
        """Rows of (node coordinates..., weight) for debugging exports."""
        return np.hstack([self.points, self.weights[:, None]])


@dataclass(frozen=True)
class AveragedNorm:
    """Inner-product matrix produced by indicatrix averaging."""

    matrix: np.ndarray

    def norm(self):
        return EuclideanNorm(self.matrix)


def _project_to_indicatrix(norm, u):
    f = np.asarray(norm(u), dtype=float)
    return u / f[..., None], f


def sample_indicatrix(norm, resolution):
    """Quadrature nodes and weights on the indicatrix of a 2-D or 3-D norm.

    Nodes are radial projections u/F(u) of a reference-sphere grid; the
    weight at a node is sqrt(det G) times the reference cell measure, where
    G is the Gram matrix of the indicatrix tangent basis in the fundamental
    tensor at that node.
    """
    n = norm.dim
    if n == 2:
        if resolution < 16:
            raise ValueError("resolution must be >= 16 for n = 2")
        step = 2.0 * np.pi / resolution
        theta = np.arange(resolution) * step
        u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        du = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
        y, f = _project_to_indicatrix(norm, u)
        grad = norm.gradient_batch(u)
        df = np.einsum("mi,mi->m", grad, du)
        dy = du / f[:, None] - u * (df / f**2)[:, None]
        g = norm.tensor_batch(y)
        gram = np.einsum("mi,mij,mj->m", dy, g, dy)
        if np.min(gram) <= 0.0:
            raise ConvexityViolation(float(np.min(gram)),
                                     "indicatrix tangent has non-positive length")
        weights = np.sqrt(gram) * step
    elif n == 3:
        if resolution < 256:
            raise ValueError("resolution must be >= 256 for n = 3")
        n_theta = max(8, int(round(np.sqrt(resolution / 2.0))))
        n_phi = 2 * n_theta
        dtheta = np.pi / n_theta
        dphi = 2.0 * np.pi / n_phi
        theta = (np.arange(n_theta) + 0.5) * dtheta
        phi = np.arange(n_phi) * dphi
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        tt, pp = tt.ravel(), pp.ravel()
        st, ct = np.sin(tt), np.cos(tt)
        sp, cp = np.sin(pp), np.cos(pp)
        u = np.stack([st * cp, st * sp, ct], axis=1)
        du_t = np.stack([ct * cp, ct * sp, -st], axis=1)
        du_p = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=1)
        y, f = _project_to_indicatrix(norm, u)
        grad = norm.gradient_batch(u)
        df_t = np.einsum("mi,mi->m", grad, du_t)
        df_p = np.einsum("mi,mi->m", grad, du_p)
        dy_t = du_t / f[:, None] - u * (df_t / f**2)[:, None]
        dy_p = du_p / f[:, None] - u * (df_p / f**2)[:, None]
        g = norm.tensor_batch(y)
        g_tt = np.einsum("mi,mij,mj->m", dy_t, g, dy_t)
        g_pp = np.einsum("mi,mij,mj->m", dy_p, g, dy_p)
        g_tp = np.einsum("mi,mij,mj->m", dy_t, g, dy_p)
        det = g_tt * g_pp - g_tp**2
        if np.min(det) <= 0.0:
            raise ConvexityViolation(float(np.min(det)),
                                     "indicatrix tangent Gram matrix is not positive definite")
        weights = np.sqrt(det) * dtheta * dphi
    else:
        raise ValueError("indicatrix sampling is implemented for n = 2 and n = 3")

    if np.any(weights <= 0.0):
        raise ValueError("non-positive quadrature weight encountered")
    node_err = float(np.max(np.abs(np.asarray(norm(y)) - 1.0)))
    if node_err > NODE_TOL:
        raise ValueError(f"indicatrix node residual {node_err:.3e} exceeds {NODE_TOL:.0e}")
    return IndicatrixQuadrature(points=y, weights=weights, resolution=int(resolution))


def averaged_norm(norm, quadrature):
    """Weight-averaged fundamental tensor over an indicatrix quadrature."""
    on_level = float(np.max(np.abs(np.asarray(norm(quadrature.points)) - 1.0)))
    if on_level > 1e-8:
        raise ValueError("quadrature was not built from this norm")
    g = norm.tensor_batch(quadrature.points)
    total = quadrature.weights.sum()
    mat = np.einsum("m,mij->ij", quadrature.weights, g) / total
    mat = 0.5 * (mat + mat.T)
    if np.linalg.eigvalsh(mat)[0] <= 0.0:
        raise ValueError("averaged matrix is not positive definite")
    return AveragedNorm(matrix=mat)


def average(norm, resolution):
    """Convenience wrapper: sample the indicatrix and average in one call."""
    return averaged_norm(norm, sample_indicatrix(norm, resolution))


def verify_equivariance(norm1, norm2, lmap, c, resolution=1024,
                        hypothesis_samples=64, hypothesis_tol=1e-8):
    """Residual of the identity (averaged F1) = c^2 l^T (averaged F2) l.

    The caller asserts F1 = c * F2 o l; that hypothesis is sampled first and
    a violation raises.  The returned residual is the max-abs entry of the
    matrix identity, which must vanish up to quadrature error.
    """
    if norm1.dim != norm2.dim:
        raise ValueError("norms must have equal dimension")
    lmap = np.asarray(lmap, dtype=float)
    c = float(c)
    theta = np.arange(hypothesis_samples) * (2.0 * np.pi / hypothesis_samples) + 0.1
    if norm1.dim == 2:
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    else:
        rng = np.random.default_rng(7)
        dirs = rng.standard_normal((hypothesis_samples, norm1.dim))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    lhs = np.asarray(norm1(dirs), dtype=float)
    rhs = c * np.asarray(norm2(dirs @ lmap.T), dtype=float)
    worst = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)))
    if worst > hypothesis_tol:
        raise HypothesisViolation(f"sampled F1 != c*F2(l .): relative residual {worst:.3e}")

    q1 = average(norm1, resolution).matrix
    q2 = average(norm2, resolution).matrix
    return float(np.max(np.abs(q1 - c**2 * (lmap.T @ q2 @ lmap))))
