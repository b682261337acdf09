"""Model manifolds (circle, flat torus, round 2-sphere) and Finsler fields on them.

Points on the sphere are chart-tagged: chart 0 is the stereographic chart
covering everything but the north pole, chart 1 the antipodal one, and the
transition p -> R^2 p / |p|^2 is its own inverse.  Vector fields on the
sphere are stored as complex-coefficient polynomials in (z, conj(z)) in
chart 0 and pushed through the transition differential where needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartDomainError, DegenerateVector
from .norm_core import EuclideanNorm, GenericNorm, RandersNorm, scale_norm
from .averaging import average

CHART_ASSIGN_FACTOR = 1.5


# ---------------------------------------------------------------------------
# manifolds and points


@dataclass(frozen=True)
class ChartPoint:
    chart: int
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))


@dataclass(frozen=True)
class Circle:
    length: float = 2.0 * np.pi

    dim = 1

    def wrap(self, x):
        return float(x) % self.length

    def sample_points(self, count):
        return [i * self.length / count for i in range(count)]


class FlatTorus:
    """R^2 modulo the lattice spanned by the columns of ``lattice``."""

    dim = 2

    def __init__(self, lattice=None):
        self.lattice = np.eye(2) if lattice is None else np.asarray(lattice, dtype=float)
        if abs(np.linalg.det(self.lattice)) < 1e-12:
            raise ValueError("lattice basis is degenerate")
        self.inv_lattice = np.linalg.inv(self.lattice)

    def frac(self, x):
        return self.inv_lattice @ np.asarray(x, dtype=float)

    def wrap(self, x):
        return self.lattice @ (self.frac(x) % 1.0)

    def grid_points(self, per_axis, offset=(0.31, 0.47)):
        pts = []
        for i in range(per_axis):
            for j in range(per_axis):
                xi = np.array([(i + offset[0]) / per_axis, (j + offset[1]) / per_axis])
                pts.append(self.lattice @ xi)
        return pts


class Sphere2:
    """Round 2-sphere of radius R in two stereographic charts."""

    dim = 2

    def __init__(self, radius=1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    # chart transition (an involution)
    def transition(self, p):
        p = np.asarray(p, dtype=float)
        u = float(p @ p)
        if u == 0.0:
            raise ChartDomainError("transition undefined at the chart origin (pole)")
        return self.radius**2 * p / u

    def transition_jacobian(self, p):
        p = np.asarray(p, dtype=float)
        u = float(p @ p)
        return self.radius**2 * (np.eye(2) * u - 2.0 * np.outer(p, p)) / u**2

    def transition_hessian(self, p):
        """H[i, j, k] = d^2 T_i / dp_j dp_k for the transition map."""
        p = np.asarray(p, dtype=float)
        u = float(p @ p)
        eye = np.eye(2)
        h = np.zeros((2, 2, 2))
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    h[i, j, k] = (
                        2.0 * (eye[i, j] * p[k] - eye[i, k] * p[j] - eye[j, k] * p[i]) / u**2
                        - 4.0 * p[k] * (eye[i, j] * u - 2.0 * p[i] * p[j]) / u**3
                    )
        return self.radius**2 * h

    def chart_point(self, numerator, denominator=1.0 + 0.0j):
        """Point from the projective pair (P : Q) with z = P/Q in chart 0."""
        p, q = complex(numerator), complex(denominator)
        if p == 0 and q == 0:
            raise ChartDomainError("projective pair (0, 0) is not a point")
        if abs(p) <= CHART_ASSIGN_FACTOR * self.radius * abs(q):
            z = p / q
            return ChartPoint(0, np.array([z.real, z.imag]))
        w = self.radius**2 * (q / p).conjugate()
        return ChartPoint(1, np.array([w.real, w.imag]))

    def to_complex(self, pt):
        return complex(pt.coords[0], pt.coords[1])

    def projective_pair(self, pt):
        """(P, Q) with z = P/Q; valid in either chart, including the pole w = 0."""
        if pt.chart == 0:
            return self.to_complex(pt), 1.0 + 0.0j
        return complex(self.radius**2, 0.0), self.to_complex(pt).conjugate()

    def convert(self, pt, chart):
        if pt.chart == chart:
            return pt
        return ChartPoint(chart, self.transition(pt.coords))

    def conformal_factor(self, pt):
        u = float(pt.coords @ pt.coords)
        return 2.0 * self.radius**2 / (self.radius**2 + u)

    def conformal_factor_grad(self, pt):
        u = float(pt.coords @ pt.coords)
        lam = 2.0 * self.radius**2 / (self.radius**2 + u)
        return -lam * 2.0 * pt.coords / (self.radius**2 + u)

    def ambient(self, pt):
        """Unit-sphere-scale ambient position (|n| = R)."""
        r2 = self.radius**2
        u = float(pt.coords @ pt.coords)
        d = r2 + u
        horizontal = 2.0 * r2 * pt.coords / d
        vertical = self.radius * (u - r2) / d
        if pt.chart == 1:
            vertical = -vertical
        return np.array([horizontal[0], horizontal[1], vertical])

    def ambient_jacobian(self, pt):
        """dn/dcoords, a 3x2 matrix."""
        r2 = self.radius**2
        p = pt.coords
        u = float(p @ p)
        d = r2 + u
        jac = np.zeros((3, 2))
        for i in range(2):
            for j in range(2):
                jac[i, j] = 2.0 * r2 * ((1.0 if i == j else 0.0) * d - 2.0 * p[i] * p[j]) / d**2
        jac[2, :] = 4.0 * self.radius * r2 * p / d**2
        if pt.chart == 1:
            jac[2, :] = -jac[2, :]
        return jac

    def from_ambient(self, n):
        n = np.asarray(n, dtype=float)
        norm = float(np.linalg.norm(n))
        if abs(norm - self.radius) > 1e-8 * self.radius:
            raise ChartDomainError(f"|n| = {norm:.6f} is not on the sphere of radius {self.radius}")
        denom = self.radius - n[2]
        if abs(denom) > 1e-300:
            return self.chart_point(complex(n[0], n[1]) * self.radius, complex(denom, 0.0))
        return ChartPoint(1, np.zeros(2))

    def fibonacci_points(self, count):
        i = np.arange(count)
        t = 1.0 - 2.0 * (i + 0.5) / count
        golden = np.pi * (3.0 - np.sqrt(5.0))
        r = np.sqrt(np.maximum(1.0 - t * t, 0.0))
        pts = np.stack([r * np.cos(golden * i), r * np.sin(golden * i), t], axis=1) * self.radius
        return [self.from_ambient(n) for n in pts]


# ---------------------------------------------------------------------------
# scalar fields


class ConstantScalar:
    def __init__(self, value):
        self._value = float(value)

    def value(self, pt):
        return self._value

    def grad(self, pt):
        return np.zeros(2)


class TorusFourierScalar:
    """const + sum of cos/sin modes exp(2 pi i k . xi) in lattice coordinates."""

    def __init__(self, torus, const=0.0, terms=()):
        self.torus = torus
        self.const = float(const)
        self.terms = [(np.array(k, dtype=float), float(a), float(b)) for k, a, b in terms]

    def value(self, x):
        xi = self.torus.frac(x)
        out = self.const
        for k, a, b in self.terms:
            psi = 2.0 * np.pi * float(k @ xi)
            out += a * np.cos(psi) + b * np.sin(psi)
        return out

    def grad(self, x):
        xi = self.torus.frac(x)
        out = np.zeros(2)
        for k, a, b in self.terms:
            psi = 2.0 * np.pi * float(k @ xi)
            dpsi = 2.0 * np.pi * (self.torus.inv_lattice.T @ k)
            out += (-a * np.sin(psi) + b * np.cos(psi)) * dpsi
        return out


class AmbientPolyScalar:
    """Polynomial of degree <= 2 in the ambient coordinates, restricted to the sphere."""

    def __init__(self, sphere, const=0.0, linear=None, quadratic=None):
        self.sphere = sphere
        self.const = float(const)
        self.linear = np.zeros(3) if linear is None else np.asarray(linear, dtype=float)
        q = np.zeros((3, 3)) if quadratic is None else np.asarray(quadratic, dtype=float)
        self.quadratic = 0.5 * (q + q.T)

    def value(self, pt):
        n = self.sphere.ambient(pt)
        return self.const + float(self.linear @ n) + float(n @ self.quadratic @ n)

    def grad(self, pt):
        n = self.sphere.ambient(pt)
        dn = self.sphere.ambient_jacobian(pt)
        return (self.linear + 2.0 * self.quadratic @ n) @ dn


class CircleFourierScalar:
    """const + sum of cos/sin harmonics on a circle of given length."""

    def __init__(self, circle, const=0.0, terms=()):
        self.circle = circle
        self.const = float(const)
        self.terms = [(int(n), float(a), float(b)) for n, a, b in terms]

    def value(self, x):
        out = self.const
        for n, a, b in self.terms:
            psi = 2.0 * np.pi * n * x / self.circle.length
            out += a * np.cos(psi) + b * np.sin(psi)
        return out


# ---------------------------------------------------------------------------
# vector fields


class TorusFourierVectorField:
    """Fourier scalar times a coordinate field, or a general two-component field."""

    def __init__(self, torus, components):
        self.manifold = torus
        self.components = components  # pair of TorusFourierScalar / ConstantScalar

    @classmethod
    def coordinate(cls, torus, index, scalar=None):
        scalar = ConstantScalar(1.0) if scalar is None else scalar
        zero = ConstantScalar(0.0)
        comps = (scalar, zero) if index == 0 else (zero, scalar)
        return cls(torus, comps)

    def value(self, x):
        return np.array([self.components[0].value(x), self.components[1].value(x)])

    def jacobian(self, x):
        return np.stack([self.components[0].grad(x), self.components[1].grad(x)])


class SpherePolyVectorField:
    """Vector field on the sphere given by f(z, conj z) d/dz + conj in chart 0.

    ``coeffs`` maps (j, k) to the complex coefficient of z^j conj(z)^k.
    Holomorphic entries (k = 0, degree <= 2) extend to the whole sphere;
    antiholomorphic monomials are smooth away from the north pole only, which
    is all the solver's ansatz needs.
    """

    def __init__(self, sphere, coeffs):
        self.manifold = sphere
        self.coeffs = {tuple(key): complex(val) for key, val in coeffs.items()}

    def _f(self, z):
        return sum(c * z**j * z.conjugate() ** k for (j, k), c in self.coeffs.items())

    def _fz(self, z):
        return sum(
            j * c * z ** (j - 1) * z.conjugate() ** k
            for (j, k), c in self.coeffs.items()
            if j > 0
        )

    def _fzbar(self, z):
        return sum(
            k * c * z**j * z.conjugate() ** (k - 1)
            for (j, k), c in self.coeffs.items()
            if k > 0
        )

    def _chart0_value(self, coords):
        f = self._f(complex(coords[0], coords[1]))
        return np.array([f.real, f.imag])

    def _chart0_jacobian(self, coords):
        z = complex(coords[0], coords[1])
        fz, fzbar = self._fz(z), self._fzbar(z)
        dfdx = fz + fzbar
        dfdy = 1j * (fz - fzbar)
        return np.array([[dfdx.real, dfdy.real], [dfdx.imag, dfdy.imag]])

    def value(self, pt):
        if pt.chart == 0:
            return self._chart0_value(pt.coords)
        sphere = self.manifold
        p = sphere.transition(pt.coords)  # chart-0 coords of the same point
        return sphere.transition_jacobian(p) @ self._chart0_value(p)

    def jacobian(self, pt):
        if pt.chart == 0:
            return self._chart0_jacobian(pt.coords)
        sphere = self.manifold
        p = sphere.transition(pt.coords)
        v = self._chart0_value(p)
        jv = self._chart0_jacobian(p)
        jq = sphere.transition_jacobian(pt.coords)  # dp/dq
        jp = sphere.transition_jacobian(p)
        hess = sphere.transition_hessian(p)
        term1 = np.einsum("ijk,j,kl->il", hess, v, jq)
        return term1 + jp @ jv @ jq


class CombinationVectorField:
    """Linear combination of basis fields with fixed coefficients."""

    def __init__(self, elements, coefficients):
        if not elements:
            raise ValueError("need at least one element")
        self.manifold = elements[0].manifold
        self.elements = list(elements)
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.shape != (len(self.elements),):
            raise ValueError("coefficient count must match element count")

    def value(self, pt):
        out = np.zeros(2)
        for c, el in zip(self.coefficients, self.elements):
            if c != 0.0:
                out += c * el.value(pt)
        return out

    def jacobian(self, pt):
        out = np.zeros((2, 2))
        for c, el in zip(self.coefficients, self.elements):
            if c != 0.0:
                out += c * el.jacobian(pt)
        return out


def sphere_rotation_generators(sphere):
    """The three Killing fields of the round metric, cyclic so(3) brackets."""
    r = sphere.radius
    return [
        SpherePolyVectorField(sphere, {(0, 0): 0.5j * r, (2, 0): -0.5j / r}),
        SpherePolyVectorField(sphere, {(0, 0): 0.5 * r, (2, 0): 0.5 / r}),
        SpherePolyVectorField(sphere, {(1, 0): 1j}),
    ]


def sphere_gradient_generators(sphere):
    """Gradient-type conformal fields (non-Killing) completing the conformal algebra."""
    r = sphere.radius
    return [
        SpherePolyVectorField(sphere, {(0, 0): 0.5 * r, (2, 0): -0.5 / r}),
        SpherePolyVectorField(sphere, {(0, 0): -0.5j * r, (2, 0): -0.5j / r}),
        SpherePolyVectorField(sphere, {(1, 0): 1.0}),
    ]


# ---------------------------------------------------------------------------
# diffeomorphisms


class TorusTranslation:
    def __init__(self, torus, shift):
        self.manifold = torus
        self.shift = np.asarray(shift, dtype=float)

    def apply(self, x):
        return self.manifold.wrap(np.asarray(x, dtype=float) + self.shift)

    def differential(self, x):
        return np.eye(2)


_SIGMA = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1j], [1j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)

_FLIP = np.array([[1.0, 0.0], [0.0, -1.0]])


def _conformal_matrix(alpha):
    return np.array([[alpha.real, -alpha.imag], [alpha.imag, alpha.real]])


class MobiusMap:
    """Fractional linear map z -> (az + b)/(cz + d) on the chart-0 coordinate."""

    def __init__(self, sphere, matrix):
        self.manifold = sphere
        self.matrix = np.asarray(matrix, dtype=complex)
        if abs(np.linalg.det(self.matrix)) < 1e-14:
            raise ValueError("Mobius matrix is singular")

    @classmethod
    def rotation_about_pole(cls, sphere, angle):
        return cls(sphere, [[np.exp(1j * angle), 0.0], [0.0, 1.0]])

    @classmethod
    def rotation(cls, sphere, axis, angle):
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        su2 = np.cos(angle / 2.0) * np.eye(2, dtype=complex) + 1j * np.sin(angle / 2.0) * (
            axis[0] * _SIGMA[0] + axis[1] * _SIGMA[1] + axis[2] * _SIGMA[2]
        )
        r = sphere.radius
        scale = np.array([[r, 0.0], [0.0, 1.0]], dtype=complex)
        unscale = np.array([[1.0 / r, 0.0], [0.0, 1.0]], dtype=complex)
        return cls(sphere, scale @ su2 @ unscale)

    @classmethod
    def translation(cls, sphere, b):
        return cls(sphere, [[1.0, complex(b)], [0.0, 1.0]])

    @classmethod
    def scaling(cls, sphere, s):
        return cls(sphere, [[complex(s), 0.0], [0.0, 1.0]])

    def apply(self, pt):
        p, q = self.manifold.projective_pair(pt)
        (a, b), (c, d) = self.matrix
        return self.manifold.chart_point(a * p + b * q, c * p + d * q)

    def _effective(self, in_chart, out_chart):
        r2 = self.manifold.radius**2
        swap = np.array([[0.0, r2], [1.0, 0.0]], dtype=complex)
        mat = self.matrix
        if in_chart == 1:
            mat = mat @ swap
        if out_chart == 1:
            mat = swap @ mat
        return mat

    def differential(self, pt):
        """Real 2x2 differential from the chart of ``pt`` to the chart of its image."""
        image = self.apply(pt)
        mat = self._effective(pt.chart, image.chart)
        zeta = self.manifold.to_complex(pt)
        if pt.chart == 1:
            zeta = zeta.conjugate()
        (a, b), (c, d) = mat
        denom = c * zeta + d
        if abs(denom) < 1e-14:
            raise ChartDomainError("Mobius differential evaluated at a pole of the chart map")
        deriv = (a * d - b * c) / denom**2
        jac = _conformal_matrix(deriv)
        if pt.chart == 1:
            jac = jac @ _FLIP
        if image.chart == 1:
            jac = _FLIP @ jac
        return jac


# ---------------------------------------------------------------------------
# Finsler fields


class FinslerField:
    """Chart-based assignment of a Minkowski norm to each tangent space."""

    manifold = None

    def eval(self, pt, y):
        raise NotImplementedError

    def grad_x(self, pt, y):
        raise NotImplementedError

    def grad_y(self, pt, y):
        raise NotImplementedError

    def norm_at(self, pt):
        raise NotImplementedError


class ConstantNormField(FinslerField):
    """The same Minkowski norm on every tangent space of a flat torus."""

    def __init__(self, torus, norm):
        self.manifold = torus
        self.norm = norm

    def eval(self, pt, y):
        return float(self.norm(np.asarray(y, dtype=float)))

    def grad_x(self, pt, y):
        return np.zeros(2)

    def grad_y(self, pt, y):
        return self.norm.gradient(np.asarray(y, dtype=float))

    def norm_at(self, pt):
        return self.norm


class RoundSphereField(FinslerField):
    """The round metric of a 2-sphere in stereographic charts."""

    def __init__(self, sphere):
        self.manifold = sphere

    def eval(self, pt, y):
        return self.manifold.conformal_factor(pt) * float(np.linalg.norm(y))

    def grad_x(self, pt, y):
        return self.manifold.conformal_factor_grad(pt) * float(np.linalg.norm(y))

    def grad_y(self, pt, y):
        y = np.asarray(y, dtype=float)
        ny = float(np.linalg.norm(y))
        if ny < 1e-12:
            raise DegenerateVector("grad_y undefined at y = 0")
        return self.manifold.conformal_factor(pt) * y / ny

    def norm_at(self, pt):
        lam = self.manifold.conformal_factor(pt)
        return EuclideanNorm(lam**2 * np.eye(2))


class ConformalRescaleField(FinslerField):
    """rho(x) * F(x, y) for a positive scalar field rho."""

    def __init__(self, base, rho):
        self.manifold = base.manifold
        self.base = base
        self.rho = rho

    def eval(self, pt, y):
        return self.rho.value(pt) * self.base.eval(pt, y)

    def grad_x(self, pt, y):
        return (
            np.asarray(self.rho.grad(pt), dtype=float) * self.base.eval(pt, y)
            + self.rho.value(pt) * self.base.grad_x(pt, y)
        )

    def grad_y(self, pt, y):
        return self.rho.value(pt) * self.base.grad_y(pt, y)

    def norm_at(self, pt):
        return scale_norm(self.base.norm_at(pt), self.rho.value(pt))


class CircleNormField(FinslerField):
    """One-dimensional field F(x, y) = p(x) y for y > 0, q(x) |y| for y < 0."""

    def __init__(self, circle, forward, backward):
        self.manifold = circle
        self.forward = forward
        self.backward = backward

    def eval(self, x, y):
        y = float(np.asarray(y).reshape(()))
        if y >= 0.0:
            return self.forward.value(x) * y
        return self.backward.value(x) * (-y)

    def ratio(self, x):
        """max(F(x, +1)/F(x, -1), F(x, -1)/F(x, +1))."""
        plus = self.eval(x, 1.0)
        minus = self.eval(x, -1.0)
        return max(plus / minus, minus / plus)


def pull_norm(norm, jac):
    """The norm y -> F(J y), staying in closed form for the built-in families."""
    jac = np.asarray(jac, dtype=float)
    if isinstance(norm, EuclideanNorm):
        return EuclideanNorm(jac.T @ norm.matrix @ jac)
    if isinstance(norm, RandersNorm):
        return RandersNorm(jac.T @ norm.a @ jac, jac.T @ norm.b)
    return GenericNorm(norm.dim, lambda y: float(norm(jac @ np.asarray(y, dtype=float))))


class PullbackField(FinslerField):
    """(f^*F)(x, y) = F(f(x), df(x) y) for a built-in diffeomorphism f."""

    def __init__(self, base, diffeo):
        self.manifold = base.manifold
        self.base = base
        self.diffeo = diffeo

    def eval(self, pt, y):
        image = self.diffeo.apply(pt)
        jac = self.diffeo.differential(pt)
        return self.base.eval(image, jac @ np.asarray(y, dtype=float))

    def grad_y(self, pt, y):
        image = self.diffeo.apply(pt)
        jac = self.diffeo.differential(pt)
        return jac.T @ self.base.grad_y(image, jac @ np.asarray(y, dtype=float))

    def norm_at(self, pt):
        image = self.diffeo.apply(pt)
        return pull_norm(self.base.norm_at(image), self.diffeo.differential(pt))


class PointwiseAveragedField(FinslerField):
    """Riemannian field obtained by averaging each tangent-space norm."""

    def __init__(self, source, resolution):
        self.manifold = source.manifold
        self.source = source
        self.resolution = int(resolution)

    def matrix_at(self, pt):
        if isinstance(self.manifold, Circle):
            fwd = self.source.eval(pt, 1.0)
            bwd = self.source.eval(pt, -1.0)
            return np.array([[0.5 * (fwd**2 + bwd**2)]])
        return average(self.source.norm_at(pt), self.resolution).matrix

    def norm_at(self, pt):
        return EuclideanNorm(self.matrix_at(pt))

    def eval(self, pt, y):
        return float(self.norm_at(pt)(np.asarray(y, dtype=float)))

    def grad_y(self, pt, y):
        return self.norm_at(pt).gradient(np.asarray(y, dtype=float))


# ---------------------------------------------------------------------------
# operations


def lie_derivative(field, vector_field, pt, y):
    """(L_V F)(x, y) through the complete lift of V.

    Equals V^i dF/dx^i + y^j (dV^i/dx^j) dF/dy^i; the x-derivatives of F are
    analytic for every built-in field kind.
    """
    y = np.asarray(y, dtype=float)
    if float(np.linalg.norm(y)) < 1e-12:
        raise DegenerateVector("Lie derivative undefined at y = 0")
    v = vector_field.value(pt)
    jac = vector_field.jacobian(pt)
    return float(v @ field.grad_x(pt, y) + (jac @ y) @ field.grad_y(pt, y))


def pullback_metric(field, diffeo):
    return PullbackField(field, diffeo)


def averaged_metric_field(field, resolution):
    return PointwiseAveragedField(field, resolution)


def sample_points(manifold, count, seed=0):
    """Deterministic sample points for residual sweeps."""
    if isinstance(manifold, Circle):
        return manifold.sample_points(count)
    if isinstance(manifold, FlatTorus):
        rng = np.random.default_rng(seed)
        return [manifold.lattice @ rng.uniform(size=2) for _ in range(count)]
    if isinstance(manifold, Sphere2):
        return manifold.fibonacci_points(count)
    raise ValueError(f"unsupported manifold {manifold!r}")


def isometry_ratio_invariance(field, diffeo, samples=32, seed=0):
    """Max deviation of F(x,y)/F(x,y') from its value at the mapped data.

    Conformal maps preserve per-point norm ratios, so this residual should
    vanish for any built-in conformal diffeomorphism of the field.
    """
    rng = np.random.default_rng(seed)
    pts = sample_points(field.manifold, samples, seed=seed)
    worst = 0.0
    for pt in pts:
        angles = rng.uniform(0.0, 2.0 * np.pi, size=2)
        y1 = np.array([np.cos(angles[0]), np.sin(angles[0])])
        y2 = np.array([np.cos(angles[1]), np.sin(angles[1])])
        image = diffeo.apply(pt)
        jac = diffeo.differential(pt)
        ratio = field.eval(pt, y1) / field.eval(pt, y2)
        mapped = field.eval(image, jac @ y1) / field.eval(image, jac @ y2)
        worst = max(worst, abs(ratio - mapped))
    return worst


@dataclass
class LambdaProfile:
    xs: np.ndarray
    values: np.ndarray
    spread: float
    constant: bool
    tol: float

    def to_csv(self, path):
        lines = ["x,value"]
        lines += [f"{x:.12e},{v:.12e}" for x, v in zip(self.xs, self.values)]
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
        return path


def circle_lambda_profile(field, grid=256, tol=1e-10):
    """Reversibility ratio along a circle field and a constancy flag."""
    if not isinstance(field.manifold, Circle):
        raise ValueError("lambda profile is defined for circle fields")
    xs = np.array(field.manifold.sample_points(grid))
    values = np.array([field.ratio(x) for x in xs])
    spread = float(values.max() - values.min())
    return LambdaProfile(xs=xs, values=values, spread=spread, constant=spread <= tol, tol=tol)
