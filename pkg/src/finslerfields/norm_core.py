"""Minkowski norms on R^n: evaluation, derivatives, and convexity diagnostics.

A Minkowski norm is positive away from the origin, positively 1-homogeneous,
and strongly convex in the sense that the Hessian of F^2/2 is positive
definite at every nonzero vector.  Three families are provided: Euclidean
norms sqrt(y^T Q y), Randers norms sqrt(y^T a y) + b.y, and a generic wrapper
around a user-supplied callable with optional analytic derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvexityViolation, DegenerateVector, InadmissibleNorm

DEGENERATE_FLOOR = 1e-8
DEFAULT_FD_STEP = 1e-5
PD_RATIO = 1e-8


def _as_vector(y, dim):
    y = np.asarray(y, dtype=float)
    if y.shape != (dim,):
        raise ValueError(f"expected vector of length {dim}, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("vector has non-finite entries")
    return y


def _check_spd(mat, name):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.T)) > 1e-10 * scale:
        raise ValueError(f"{name} must be symmetric")
    mat = 0.5 * (mat + mat.T)
    if np.linalg.eigvalsh(mat)[0] <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return mat


def central_gradient(func, y, step):
    """Second-order central difference gradient of a scalar function."""
    y = np.asarray(y, dtype=float)
    n = y.size
    grad = np.zeros(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        grad[i] = (func(y + e) - func(y - e)) / (2.0 * step)
    return grad


def central_hessian(func, y, step):
    """Second-order central difference Hessian of a scalar function."""
    y = np.asarray(y, dtype=float)
    n = y.size
    hess = np.zeros((n, n))
    f0 = func(y)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = step
        hess[i, i] = (func(y + ei) - 2.0 * f0 + func(y - ei)) / step**2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = step
            cross = (
                func(y + 0.5 * (ei + ej))
                - func(y + 0.5 * (ei - ej))
                - func(y - 0.5 * (ei - ej))
                + func(y - 0.5 * (ei + ej))
            ) / step**2
            hess[i, j] = cross
            hess[j, i] = cross
    return hess


@dataclass(frozen=True)
class FundamentalTensor:
    """Hessian inner product of F^2/2 at a fixed nonzero base vector."""

    base: np.ndarray
    matrix: np.ndarray

    def inner(self, u, v=None):
        u = np.asarray(u, dtype=float)
        v = u if v is None else np.asarray(v, dtype=float)
        return float(u @ self.matrix @ v)


class MinkowskiNorm:
    """Base interface; concrete families override the value/derivative hooks."""

    dim: int

    def __call__(self, y):
        raise NotImplementedError

    def gradient(self, y, step=DEFAULT_FD_STEP):
        """Gradient of F at a nonzero vector (finite differences by default)."""
        y = _as_vector(y, self.dim)
        self._require_nondegenerate(y)
        h = step * max(1.0, float(np.linalg.norm(y)))
        return central_gradient(lambda v: float(self(v)), y, h)

    def gradient_batch(self, ys, step=DEFAULT_FD_STEP):
        ys = np.asarray(ys, dtype=float)
        return np.array([self.gradient(y, step=step) for y in ys])

    def _tensor_matrix(self, y):
        """Analytic Hessian of F^2/2, or None when the family has no closed form."""
        return None

    def _tensor_matrix_fd(self, y, step):
        h = step * max(1.0, float(np.linalg.norm(y)))
        return central_hessian(lambda v: 0.5 * float(self(v)) ** 2, y, h)

    def _tensor_matrix_any(self, y, scheme="auto", step=DEFAULT_FD_STEP):
        """Tensor matrix without the positive-definiteness gate."""
        y = _as_vector(y, self.dim)
        self._require_nondegenerate(y)
        if scheme not in ("auto", "analytic", "fd"):
            raise ValueError(f"unknown scheme {scheme!r}")
        if scheme in ("auto", "analytic"):
            mat = self._tensor_matrix(y)
            if mat is not None:
                return mat
            if scheme == "analytic":
                raise ValueError("no analytic fundamental tensor for this norm")
        return self._tensor_matrix_fd(y, step)

    def fundamental_tensor(self, y, scheme="auto", step=DEFAULT_FD_STEP):
        """Fundamental tensor at y, verified positive definite.

        Parameters
        ----------
        y : array_like
            Nonzero base vector.
        scheme : {"auto", "analytic", "fd"}
            "auto" uses the closed form when the family has one and falls back
            to central finite differences of F^2/2 otherwise.
        step : float
            Relative finite-difference step (scaled by |y|).

        Raises
        ------
        DegenerateVector
            If |y| is below the degeneracy floor.
        ConvexityViolation
            If the resulting matrix is not positive definite; the offending
            eigenvalue is attached to the exception.
        """
        mat = self._tensor_matrix_any(y, scheme=scheme, step=step)
        mat = 0.5 * (mat + mat.T)
        eigs = np.linalg.eigvalsh(mat)
        if eigs[0] <= PD_RATIO * max(abs(eigs[-1]), 1e-300):
            raise ConvexityViolation(eigs[0])
        return FundamentalTensor(base=np.array(y, dtype=float), matrix=mat)

    def tensor_batch(self, ys, scheme="auto", step=DEFAULT_FD_STEP):
        ys = np.asarray(ys, dtype=float)
        return np.array([self._tensor_matrix_any(y, scheme=scheme, step=step) for y in ys])

    def _require_nondegenerate(self, y):
        if float(np.linalg.norm(y)) < DEGENERATE_FLOOR:
            raise DegenerateVector(f"|y| = {np.linalg.norm(y):.3e} below floor {DEGENERATE_FLOOR:.0e}")

    def to_dict(self):
        raise ValueError("this norm family is not serializable")


class EuclideanNorm(MinkowskiNorm):
    """F(y) = sqrt(y^T Q y) for symmetric positive-definite Q."""

    def __init__(self, matrix):
        self.matrix = _check_spd(matrix, "Q")
        self.dim = self.matrix.shape[0]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        q = np.einsum("...i,ij,...j->...", y, self.matrix, y)
        return np.sqrt(np.maximum(q, 0.0))

    def gradient(self, y, step=DEFAULT_FD_STEP):
        y = _as_vector(y, self.dim)
        self._require_nondegenerate(y)
        return (self.matrix @ y) / float(self(y))

    def gradient_batch(self, ys, step=DEFAULT_FD_STEP):
        ys = np.asarray(ys, dtype=float)
        return (ys @ self.matrix) / self(ys)[..., None]

    def _tensor_matrix(self, y):
        return self.matrix.copy()

    def tensor_batch(self, ys, scheme="auto", step=DEFAULT_FD_STEP):
        ys = np.asarray(ys, dtype=float)
        return np.broadcast_to(self.matrix, (len(ys),) + self.matrix.shape).copy()

    def to_dict(self):
        return {"family": "euclidean", "dim": self.dim, "q": self.matrix.tolist()}


class RandersNorm(MinkowskiNorm):
    """F(y) = sqrt(y^T a y) + b.y with the a-dual norm of b strictly below 1."""

    def __init__(self, a, b):
        self.a = _check_spd(a, "a")
        self.b = np.asarray(b, dtype=float)
        self.dim = self.a.shape[0]
        if self.b.shape != (self.dim,):
            raise ValueError("b must match the dimension of a")
        dual = float(np.sqrt(self.b @ np.linalg.solve(self.a, self.b)))
        if dual >= 1.0:
            raise InadmissibleNorm(f"a-dual norm of b is {dual:.6f} >= 1")
        self.dual_norm = dual

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        alpha = np.sqrt(np.maximum(np.einsum("...i,ij,...j->...", y, self.a, y), 0.0))
        return alpha + y @ self.b

    def gradient(self, y, step=DEFAULT_FD_STEP):
        y = _as_vector(y, self.dim)
        self._require_nondegenerate(y)
        alpha = float(np.sqrt(y @ self.a @ y))
        return (self.a @ y) / alpha + self.b

    def gradient_batch(self, ys, step=DEFAULT_FD_STEP):
        ys = np.asarray(ys, dtype=float)
        alpha = np.sqrt(np.einsum("...i,ij,...j->...", ys, self.a, ys))
        return (ys @ self.a) / alpha[..., None] + self.b

    def _tensor_matrix(self, y):
        y = np.asarray(y, dtype=float)
        alpha = float(np.sqrt(y @ self.a @ y))
        ell = (self.a @ y) / alpha
        grad = ell + self.b
        fval = alpha + float(y @ self.b)
        return (fval / alpha) * (self.a - np.outer(ell, ell)) + np.outer(grad, grad)

    def tensor_batch(self, ys, scheme="auto", step=DEFAULT_FD_STEP):
        ys = np.asarray(ys, dtype=float)
        alpha = np.sqrt(np.einsum("...i,ij,...j->...", ys, self.a, ys))
        ell = (ys @ self.a) / alpha[:, None]
        grad = ell + self.b
        fval = alpha + ys @ self.b
        core = self.a[None, :, :] - np.einsum("mi,mj->mij", ell, ell)
        return (fval / alpha)[:, None, None] * core + np.einsum("mi,mj->mij", grad, grad)

    def to_dict(self):
        return {"family": "randers", "dim": self.dim, "a": self.a.tolist(), "b": self.b.tolist()}


class GenericNorm(MinkowskiNorm):
    """Norm from a plain callable, with optional analytic gradient and Hessian of F."""

    def __init__(self, dim, func, grad=None, hess=None):
        self.dim = int(dim)
        self.func = func
        self.grad = grad
        self.hess = hess

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            return float(self.func(y))
        return np.array([self.func(v) for v in y.reshape(-1, self.dim)]).reshape(y.shape[:-1])

    def gradient(self, y, step=DEFAULT_FD_STEP):
        if self.grad is not None:
            y = _as_vector(y, self.dim)
            self._require_nondegenerate(y)
            return np.asarray(self.grad(y), dtype=float)
        return super().gradient(y, step=step)

    def _tensor_matrix(self, y):
        if self.grad is None or self.hess is None:
            return None
        fval = float(self(y))
        g = np.asarray(self.grad(y), dtype=float)
        h = np.asarray(self.hess(y), dtype=float)
        return fval * h + np.outer(g, g)


def norm_from_dict(data):
    """Rebuild a closed-form norm from its serialized record."""
    family = data["family"]
    if family == "euclidean":
        return EuclideanNorm(np.array(data["q"], dtype=float))
    if family == "randers":
        return RandersNorm(np.array(data["a"], dtype=float), np.array(data["b"], dtype=float))
    raise ValueError(f"unknown norm family {family!r}")


def scale_norm(norm, c):
    """Return the norm c*F, staying inside the closed-form families when possible."""
    c = float(c)
    if c <= 0.0:
        raise ValueError("scale factor must be positive")
    if isinstance(norm, EuclideanNorm):
        return EuclideanNorm(c**2 * norm.matrix)
    if isinstance(norm, RandersNorm):
        return RandersNorm(c**2 * norm.a, c * norm.b)
    return GenericNorm(
        norm.dim,
        lambda y: c * float(norm(y)),
        grad=(lambda y: c * norm.gradient(y)),
    )


@dataclass
class AxiomReport:
    """Sampled verification of positivity, homogeneity, and strong convexity."""

    samples: int
    min_norm: float
    max_homogeneity_residual: float
    min_tensor_eigenvalue: float
    max_tensor_eigenvalue: float
    positivity_pass: bool
    homogeneity_pass: bool
    convexity_pass: bool
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return self.positivity_pass and self.homogeneity_pass and self.convexity_pass


def check_axioms(norm, samples=200, seed=0, homogeneity_tol=1e-10,
                 pd_ratio=PD_RATIO, positivity_floor=1e-12, scheme="auto"):
    """Sample directions and report how far the norm is from the axioms.

    Failures are recorded in the report rather than raised, so degenerate
    inputs (e.g. quartic pseudo-norms) can be diagnosed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((samples, norm.dim))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    # canonical directions are checked deterministically: degeneracies of
    # non-convex candidates often sit exactly on the axes
    axes = np.vstack([np.eye(norm.dim), -np.eye(norm.dim)])
    dirs = np.vstack([axes, dirs])

    values = np.array([float(norm(d)) for d in dirs])
    min_norm = float(values.min())

    lams = np.array([0.5, 2.0, 7.0])
    max_resid = 0.0
    for d, f in zip(dirs, values):
        for lam in lams:
            scaled = float(norm(lam * d))
            max_resid = max(max_resid, abs(scaled - lam * f) / max(lam * f, 1e-300))

    min_eig = np.inf
    max_eig = -np.inf
    failures = []
    for d in dirs:
        try:
            mat = norm._tensor_matrix_any(d, scheme=scheme)
        except Exception as exc:  # pragma: no cover - diagnostic path
            failures.append(f"tensor evaluation failed at {d}: {exc}")
            continue
        eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
        min_eig = min(min_eig, float(eigs[0]))
        max_eig = max(max_eig, float(eigs[-1]))

    positivity_pass = min_norm > positivity_floor
    homogeneity_pass = max_resid <= homogeneity_tol
    convexity_pass = bool(min_eig > pd_ratio * max(max_eig, 1e-300))
    if not positivity_pass:
        failures.append(f"min F over samples is {min_norm:.3e}")
    if not homogeneity_pass:
        failures.append(f"homogeneity residual {max_resid:.3e}")
    if not convexity_pass:
        failures.append(f"fundamental tensor eigenvalue {min_eig:.3e} (max {max_eig:.3e})")
    return AxiomReport(
        samples=samples,
        min_norm=min_norm,
        max_homogeneity_residual=max_resid,
        min_tensor_eigenvalue=float(min_eig),
        max_tensor_eigenvalue=float(max_eig),
        positivity_pass=positivity_pass,
        homogeneity_pass=homogeneity_pass,
        convexity_pass=convexity_pass,
        failures=failures,
    )


def _golden_max(fn, a, b, iters=90):
    """Golden-section maximization on [a, b]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = fn(x1)
    return max(f1, f2)


def _fibonacci_sphere(count):
    i = np.arange(count)
    t = 1.0 - 2.0 * (i + 0.5) / count
    golden = np.pi * (3.0 - np.sqrt(5.0))
    r = np.sqrt(np.maximum(1.0 - t * t, 0.0))
    return np.stack([r * np.cos(golden * i), r * np.sin(golden * i), t], axis=1)


def reversibility_sup(norm, resolution=256):
    """Largest ratio F(y)/F(-y) over directions, symmetrized to be >= 1.

    In dimension two the grid maximum is refined by golden-section search;
    higher dimensions use the direction grid alone.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    if norm.dim == 1:
        r = float(norm(np.array([1.0]))) / float(norm(np.array([-1.0])))
        return max(r, 1.0 / r)
    if norm.dim == 2:
        def ratio(theta):
            u = np.array([np.cos(theta), np.sin(theta)])
            return float(norm(u)) / float(norm(-u))

        thetas = np.arange(resolution) * (2.0 * np.pi / resolution)
        vals = np.array([ratio(t) for t in thetas])
        k = int(np.argmax(vals))
        span = 2.0 * np.pi / resolution
        best = _golden_max(ratio, thetas[k] - span, thetas[k] + span)
        return max(best, 1.0 / best)
    dirs = _fibonacci_sphere(max(resolution, 8))
    vals = np.array([float(norm(d)) / float(norm(-d)) for d in dirs])
    return float(max(vals.max(), 1.0 / vals.min()))
