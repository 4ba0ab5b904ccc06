"""Divergence-free vector fields on R^3 and their potential representations.

A divergence-free field can be written through two scalar potentials
out of a triple (F1, F2, F3):

    a1 = d2 F3 - d3 F2,   a2 = d3 F1 - d1 F3,   a3 = d1 F2 - d2 F1.

Extraction normalizes one potential of the triple to zero and builds the
other two by line integrals from the origin (the classical construction).
For linear trace-free fields everything stays closed-form quadratic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import quadcalc
from .errors import QuadratureFailureError, UnknownFieldError

__all__ = [
    "ScalarPotential",
    "PotentialTriple",
    "Field3",
    "LinearField",
    "field_from_potentials",
    "extract_potentials",
    "linear_potentials",
    "abc_potentials",
    "builtin",
    "from_spec",
    "potentials_for",
    "divergence_fd",
    "FD_STEP",
]

#: Central-difference step scale, the usual optimal-order choice.
FD_STEP = float(np.cbrt(np.finfo(float).eps))


class ScalarPotential:
    """Scalar field R^3 -> R with first partials.

    Wraps either a plain callable (gradient by central differences unless
    an analytic one is supplied) or an exact quadratic form restricted to
    the symbols x1..x3.
    """

    def __init__(self, fn, grad=None, name: str = "", quad: quadcalc.QuadForm | None = None):
        self._fn = fn
        self._grad = grad
        self.name = name
        self.quad = quad

    @classmethod
    def from_quadform(cls, q: quadcalc.QuadForm, name: str = "") -> "ScalarPotential":
        bad = q.symbols_used() - {1, 2, 3}
        if bad:
            raise ValueError(f"potential quadratic uses uppercase symbols {sorted(bad)}")

        def fn(x):
            s = np.zeros(quadcalc.NSYM)
            s[:3] = np.asarray(x, dtype=float)
            return q.eval(s)

        def grad(x):
            s = np.zeros(quadcalc.NSYM)
            s[:3] = np.asarray(x, dtype=float)
            return q.Q[:3, :3] @ s[:3] + q.b[:3]

        return cls(fn, grad, name=name, quad=q)

    @classmethod
    def zero(cls) -> "ScalarPotential":
        return cls.from_quadform(quadcalc.QuadForm.zero(), name="0")

    def value(self, x) -> float:
        return float(self._fn(np.asarray(x, dtype=float)))

    __call__ = value

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._grad is not None:
            return np.asarray(self._grad(x), dtype=float)
        h = FD_STEP * (1.0 + float(np.linalg.norm(x)))
        g = np.zeros(3)
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            g[i] = (self._fn(x + e) - self._fn(x - e)) / (2.0 * h)
        return g

    def partial(self, i: int, x) -> float:
        """First partial with respect to coordinate i (1-based)."""
        return float(self.grad(x)[i - 1])


@dataclass(frozen=True)
class PotentialTriple:
    """The triple (F1, F2, F3); a None entry is the zero potential."""

    F1: ScalarPotential | None = None
    F2: ScalarPotential | None = None
    F3: ScalarPotential | None = None

    def get(self, i: int) -> ScalarPotential:
        p = (self.F1, self.F2, self.F3)[i - 1]
        return p if p is not None else ScalarPotential.zero()


class Field3:
    """A vector field on R^3 with optional analytic Jacobian.

    ``linear`` carries the matrix when the field is linear; ``potentials``
    caches potential triples keyed by the normalized axis pair.
    Instances are immutable in use: evaluation functions must be
    re-entrant so trajectories can be advanced concurrently.
    """

    def __init__(self, a, jac=None, name: str = "", linear: "LinearField | None" = None):
        self._a = a
        self._jac = jac
        self.name = name
        self.linear = linear
        self.potentials: dict[tuple[int, int], PotentialTriple] = {}

    def a(self, x) -> np.ndarray:
        return np.asarray(self._a(np.asarray(x, dtype=float)), dtype=float)

    __call__ = a

    def jac(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._jac is not None:
            return np.asarray(self._jac(x), dtype=float)
        h = FD_STEP * (1.0 + float(np.linalg.norm(x)))
        J = np.zeros((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            J[:, j] = (self.a(x + e) - self.a(x - e)) / (2.0 * h)
        return J


@dataclass(frozen=True)
class LinearField:
    """Linear divergence-free field x -> A x with trace-free A."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float).reshape(3, 3)
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        scale = 1.0 + float(np.linalg.norm(A))
        if abs(np.trace(A)) > 1e-12 * scale:
            raise ValueError(f"matrix trace {np.trace(A):.3e} is not zero")

    def field3(self) -> Field3:
        A = self.A
        f = Field3(lambda x: A @ x, jac=lambda x: A, name="linear", linear=self)
        f.potentials[(1, 3)] = linear_potentials(self, axis_pair=(1, 3))
        f.potentials[(1, 2)] = linear_potentials(self, axis_pair=(1, 2))
        return f


def field_from_potentials(p: PotentialTriple, name: str = "from-potentials") -> Field3:
    """Assemble the divergence-free field generated by a potential triple."""
    F1, F2, F3 = p.get(1), p.get(2), p.get(3)

    def a(x):
        g1, g2, g3 = F1.grad(x), F2.grad(x), F3.grad(x)
        return np.array([g3[1] - g2[2], g1[2] - g3[0], g2[0] - g1[1]])

    f = Field3(a, name=name)
    pair = _normalize_pair_from_triple(p)
    if pair is not None:
        f.potentials[pair] = p
    return f


def _normalize_pair_from_triple(p: PotentialTriple):
    zero = [i for i in (1, 2, 3) if (p.F1, p.F2, p.F3)[i - 1] is None]
    if 2 in zero:
        return (1, 3)
    if 3 in zero:
        return (1, 2)
    return None


def _quad_1d(fn, upper: float) -> float:
    if upper == 0.0:
        return 0.0
    val, err = integrate.quad(fn, 0.0, upper, epsabs=1e-10, epsrel=1e-10, limit=200)
    if err > 1e-7 * (1.0 + abs(val)):
        raise QuadratureFailureError(
            f"quadrature error estimate {err:.3e} too large for value {val:.3e}"
        )
    return float(val)


def extract_potentials(f: Field3, axis_pair: tuple[int, int] = (1, 3)) -> PotentialTriple:
    """Recover a potential triple from a divergence-free field.

    With the default pair (1, 3) the middle potential is normalized to
    zero and

        F3(x) = int_0^{x2} a1(x1, s, x3) ds
        F1(x) = -int_0^{x2} a3(x1, s, x3) ds + int_0^{x3} a2(x1, 0, s) ds.

    The (1, 2) pair instead normalizes F3 = 0 and integrates along x3.
    Gauge is fixed by anchoring all line integrals at 0.
    """
    if axis_pair == (1, 3):

        def F3(x):
            return _quad_1d(lambda s: f.a([x[0], s, x[2]])[0], x[1])

        def F1(x):
            part_a = -_quad_1d(lambda s: f.a([x[0], s, x[2]])[2], x[1])
            part_b = _quad_1d(lambda s: f.a([x[0], 0.0, s])[1], x[2])
            return part_a + part_b

        return PotentialTriple(F1=ScalarPotential(F1, name="F1"),
                               F2=None,
                               F3=ScalarPotential(F3, name="F3"))

    if axis_pair == (1, 2):

        def F2(x):
            return -_quad_1d(lambda s: f.a([x[0], x[1], s])[0], x[2])

        def F1(x):
            part_a = _quad_1d(lambda s: f.a([x[0], x[1], s])[1], x[2])
            part_b = -_quad_1d(lambda s: f.a([x[0], s, 0.0])[2], x[1])
            return part_a + part_b

        return PotentialTriple(F1=ScalarPotential(F1, name="F1"),
                               F2=ScalarPotential(F2, name="F2"),
                               F3=None)

    raise ValueError(f"unsupported axis pair {axis_pair!r}; use (1, 3) or (1, 2)")


def linear_potentials(L: LinearField, axis_pair: tuple[int, int] = (1, 3)) -> PotentialTriple:
    """Closed-form quadratic potentials of a linear field.

    Runs the same line-integral construction as :func:`extract_potentials`
    but symbolically, so reconstruction is exact.
    """
    A = L.A
    x1, x2, x3 = (quadcalc.symbol(i) for i in (1, 2, 3))
    rows = [A[i, 0] * x1 + A[i, 1] * x2 + A[i, 2] * x3 for i in range(3)]

    if axis_pair == (1, 3):
        F3 = quadcalc.antiderivative(rows[0], 2)
        a2_on_axis = A[1, 0] * x1 + A[1, 2] * x3  # a2 at x2 = 0
        F1 = -1.0 * quadcalc.antiderivative(rows[2], 2) + quadcalc.antiderivative(a2_on_axis, 3)
        return PotentialTriple(F1=ScalarPotential.from_quadform(F1, "F1"),
                               F2=None,
                               F3=ScalarPotential.from_quadform(F3, "F3"))

    if axis_pair == (1, 2):
        F2 = -1.0 * quadcalc.antiderivative(rows[0], 3)
        a3_on_axis = A[2, 0] * x1 + A[2, 1] * x2  # a3 at x3 = 0
        F1 = quadcalc.antiderivative(rows[1], 3) - quadcalc.antiderivative(a3_on_axis, 2)
        return PotentialTriple(F1=ScalarPotential.from_quadform(F1, "F1"),
                               F2=ScalarPotential.from_quadform(F2, "F2"),
                               F3=None)

    raise ValueError(f"unsupported axis pair {axis_pair!r}; use (1, 3) or (1, 2)")


def abc_potentials(A: float, B: float, C: float,
                   axis_pair: tuple[int, int] = (1, 3)) -> PotentialTriple:
    """Analytic potential triples of the ABC flow (both normalizations)."""

    def F1(x):
        return C * (np.cos(x[1]) - 1.0) - B * x[1] * np.cos(x[0]) \
            + B * x[2] * np.sin(x[0]) + A * np.sin(x[2])

    def F1_grad(x):
        return np.array([
            B * x[1] * np.sin(x[0]) + B * x[2] * np.cos(x[0]),
            -C * np.sin(x[1]) - B * np.cos(x[0]),
            B * np.sin(x[0]) + A * np.cos(x[2]),
        ])

    f1 = ScalarPotential(F1, F1_grad, name="F1")

    if axis_pair == (1, 3):

        def F3(x):
            return A * x[1] * np.sin(x[2]) + C * np.sin(x[1])

        def F3_grad(x):
            return np.array([
                0.0,
                A * np.sin(x[2]) + C * np.cos(x[1]),
                A * x[1] * np.cos(x[2]),
            ])

        return PotentialTriple(F1=f1, F2=None,
                               F3=ScalarPotential(F3, F3_grad, name="F3"))

    if axis_pair == (1, 2):

        def F2(x):
            return A * (np.cos(x[2]) - 1.0) - C * x[2] * np.cos(x[1])

        def F2_grad(x):
            return np.array([
                0.0,
                C * x[2] * np.sin(x[1]),
                -A * np.sin(x[2]) - C * np.cos(x[1]),
            ])

        return PotentialTriple(F1=f1,
                               F2=ScalarPotential(F2, F2_grad, name="F2"),
                               F3=None)

    raise ValueError(f"unsupported axis pair {axis_pair!r}; use (1, 3) or (1, 2)")


def builtin(name: str, **params) -> Field3:
    """Construct a named test field: "linear" (matrix=...) or "abc" (A=, B=, C=)."""
    if name == "linear":
        if "matrix" not in params:
            raise UnknownFieldError("builtin 'linear' needs matrix=3x3 array")
        return LinearField(np.asarray(params["matrix"], dtype=float)).field3()
    if name == "abc":
        A = float(params.get("A", 1.0))
        B = float(params.get("B", 1.0))
        C = float(params.get("C", 1.0))

        def a(x):
            return np.array([
                A * np.sin(x[2]) + C * np.cos(x[1]),
                B * np.sin(x[0]) + A * np.cos(x[2]),
                C * np.sin(x[1]) + B * np.cos(x[0]),
            ])

        def jac(x):
            return np.array([
                [0.0, -C * np.sin(x[1]), A * np.cos(x[2])],
                [B * np.cos(x[0]), 0.0, -A * np.sin(x[2])],
                [-B * np.sin(x[0]), C * np.cos(x[1]), 0.0],
            ])

        f = Field3(a, jac=jac, name="abc")
        f.potentials[(1, 3)] = abc_potentials(A, B, C, (1, 3))
        f.potentials[(1, 2)] = abc_potentials(A, B, C, (1, 2))
        return f
    raise UnknownFieldError(f"unknown builtin field {name!r}")


def from_spec(spec: dict) -> Field3:
    """Build a field from its JSON specification dictionary."""
    kind = spec.get("type")
    if kind == "linear":
        return builtin("linear", matrix=spec["matrix"])
    if kind == "abc":
        return builtin("abc", A=spec.get("A", 1.0), B=spec.get("B", 1.0),
                       C=spec.get("C", 1.0))
    if kind == "quad-potentials":
        triple = {}
        for key in ("F1", "F2", "F3"):
            if key in spec and spec[key] is not None:
                q = quadcalc.QuadForm.from_serial(spec[key])
                triple[key] = ScalarPotential.from_quadform(q, name=key)
        if not triple:
            raise UnknownFieldError("quad-potentials spec needs at least one of F1, F2, F3")
        return field_from_potentials(PotentialTriple(**triple), name="quad-potentials")
    raise UnknownFieldError(f"unknown field type {kind!r}")


def potentials_for(f: Field3, axis_pair: tuple[int, int]) -> PotentialTriple:
    """Potential triple for a field, preferring attached analytic ones."""
    if axis_pair in f.potentials:
        return f.potentials[axis_pair]
    triple = extract_potentials(f, axis_pair)
    f.potentials[axis_pair] = triple
    return triple


def divergence_fd(f: Field3, x, h: float | None = None) -> float:
    """Central-difference divergence at a point."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = FD_STEP * (1.0 + float(np.linalg.norm(x)))
    div = 0.0
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        div += (f.a(x + e)[i] - f.a(x - e)[i]) / (2.0 * h)
    return float(div)
