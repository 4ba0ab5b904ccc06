"""Exact calculus of quadratic polynomials over six canonical symbols.

The symbols are, in order, (x1, x2, x3, X1, X2, X3) with 1-based indices
1..6 at the API.  An AffineExpr is degree <= 1, a QuadForm degree <= 2
with value q(s) = 1/2 s^T Q s + b.s + c and Q kept exactly symmetric.
Everything here is plain float coefficient manipulation: differentiation,
substitution, antiderivatives and linear solving are exact up to
round-off, which is what the constructive potential derivations need.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCoefficientError, SelfReferenceError

__all__ = [
    "NSYM",
    "SYMBOLS",
    "AffineExpr",
    "QuadForm",
    "symbol",
    "constant",
    "partial",
    "substitute",
    "solve_linear",
    "antiderivative",
    "evaluate",
    "product",
    "relabel",
]

NSYM = 6
SYMBOLS = ("x1", "x2", "x3", "X1", "X2", "X3")

#: Default relative floor under which a pivot coefficient counts as zero.
DEGENERACY_RTOL = 1e-10


def _check_sym(sym: int) -> int:
    if not 1 <= int(sym) <= NSYM:
        raise ValueError(f"symbol index must be in 1..{NSYM}, got {sym}")
    return int(sym)


@dataclass(frozen=True)
class AffineExpr:
    """Affine expression c0 + sum_k coeffs[k] * s_k over the six symbols."""

    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(NSYM))
    const: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(NSYM)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "const", float(self.const))

    def eval(self, s) -> float:
        s = np.asarray(s, dtype=float).reshape(NSYM)
        return float(self.coeffs @ s + self.const)

    def coeff(self, sym: int) -> float:
        return float(self.coeffs[_check_sym(sym) - 1])

    def __add__(self, other):
        if isinstance(other, AffineExpr):
            return AffineExpr(self.coeffs + other.coeffs, self.const + other.const)
        return AffineExpr(self.coeffs, self.const + float(other))

    __radd__ = __add__

    def __neg__(self):
        return AffineExpr(-self.coeffs, -self.const)

    def __sub__(self, other):
        return self + (-other if isinstance(other, AffineExpr) else -float(other))

    def __rsub__(self, other):
        return (-self) + float(other)

    def __mul__(self, scalar: float):
        return AffineExpr(self.coeffs * float(scalar), self.const * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        return self * (1.0 / float(scalar))

    def substitute(self, sym: int, e: "AffineExpr") -> "AffineExpr":
        """Replace symbol sym by the affine expression e."""
        k = _check_sym(sym) - 1
        if e.coeffs[k] != 0.0:
            raise SelfReferenceError(f"substitution for {SYMBOLS[k]} references itself")
        w = float(self.coeffs[k])
        coeffs = self.coeffs.copy()
        coeffs[k] = 0.0
        return AffineExpr(coeffs + w * e.coeffs, self.const + w * e.const)

    def solve_for(self, sym: int, rtol: float = DEGENERACY_RTOL) -> "AffineExpr":
        """The affine expression for sym that makes self identically zero."""
        k = _check_sym(sym) - 1
        pivot = float(self.coeffs[k])
        scale = max(float(np.max(np.abs(self.coeffs))), abs(self.const))
        if scale == 0.0 or abs(pivot) <= rtol * scale:
            raise DegenerateCoefficientError(
                f"coefficient of {SYMBOLS[k]} ({pivot:.3e}) is degenerate "
                f"relative to expression scale {scale:.3e}"
            )
        coeffs = -self.coeffs / pivot
        coeffs[k] = 0.0
        return AffineExpr(coeffs, -self.const / pivot)

    def __repr__(self):
        terms = [
            f"{c:+g}*{SYMBOLS[k]}" for k, c in enumerate(self.coeffs) if c != 0.0
        ]
        if self.const != 0.0 or not terms:
            terms.append(f"{self.const:+g}")
        return "AffineExpr(" + " ".join(terms) + ")"


def symbol(sym: int) -> AffineExpr:
    """The basis expression s_sym."""
    k = _check_sym(sym) - 1
    coeffs = np.zeros(NSYM)
    coeffs[k] = 1.0
    return AffineExpr(coeffs, 0.0)


def constant(c: float) -> AffineExpr:
    return AffineExpr(np.zeros(NSYM), float(c))


@dataclass(frozen=True)
class QuadForm:
    """Quadratic polynomial q(s) = 1/2 s^T Q s + b.s + c, Q symmetric."""

    Q: np.ndarray = field(default_factory=lambda: np.zeros((NSYM, NSYM)))
    b: np.ndarray = field(default_factory=lambda: np.zeros(NSYM))
    c: float = 0.0

    def __post_init__(self):
        Q = np.array(self.Q, dtype=float).reshape(NSYM, NSYM)
        Q = 0.5 * (Q + Q.T)
        Q.setflags(write=False)
        b = np.array(self.b, dtype=float).reshape(NSYM)
        b.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))

    def eval(self, s) -> float:
        s = np.asarray(s, dtype=float).reshape(NSYM)
        return float(0.5 * s @ self.Q @ s + self.b @ s + self.c)

    def partial(self, sym: int) -> AffineExpr:
        """Exact first partial derivative with respect to a symbol."""
        k = _check_sym(sym) - 1
        return AffineExpr(self.Q[k].copy(), float(self.b[k]))

    def second_partial(self, sym_i: int, sym_j: int) -> float:
        return float(self.Q[_check_sym(sym_i) - 1, _check_sym(sym_j) - 1])

    def substitute(self, sym: int, e: AffineExpr) -> "QuadForm":
        """Replace symbol sym by the affine expression e, exactly."""
        k = _check_sym(sym) - 1
        if e.coeffs[k] != 0.0:
            raise SelfReferenceError(f"substitution for {SYMBOLS[k]} references itself")
        # s -> T s + t with row k of T replaced by e's coefficients.
        T = np.eye(NSYM)
        T[k, :] = e.coeffs
        t = np.zeros(NSYM)
        t[k] = e.const
        Q = T.T @ self.Q @ T
        b = T.T @ (self.Q @ t) + T.T @ self.b
        c = 0.5 * t @ self.Q @ t + self.b @ t + self.c
        return QuadForm(Q, b, c)

    def symbols_used(self, tol: float = 0.0) -> set[int]:
        used = set()
        for k in range(NSYM):
            if np.any(np.abs(self.Q[k]) > tol) or abs(self.b[k]) > tol:
                used.add(k + 1)
        return used

    def __add__(self, other):
        if isinstance(other, QuadForm):
            return QuadForm(self.Q + other.Q, self.b + other.b, self.c + other.c)
        if isinstance(other, AffineExpr):
            return QuadForm(self.Q, self.b + other.coeffs, self.c + other.const)
        return QuadForm(self.Q, self.b, self.c + float(other))

    __radd__ = __add__

    def __neg__(self):
        return QuadForm(-self.Q, -self.b, -self.c)

    def __sub__(self, other):
        if isinstance(other, (QuadForm, AffineExpr)):
            return self + (-other)
        return self + (-float(other))

    def __mul__(self, scalar: float):
        s = float(scalar)
        return QuadForm(self.Q * s, self.b * s, self.c * s)

    __rmul__ = __mul__

    def to_serial(self) -> list[float]:
        """Flat list: 21 upper-triangle Q entries row-major, 6 linear, 1 constant."""
        upper = [float(self.Q[i, j]) for i in range(NSYM) for j in range(i, NSYM)]
        return upper + [float(v) for v in self.b] + [float(self.c)]

    @classmethod
    def from_serial(cls, values) -> "QuadForm":
        values = [float(v) for v in values]
        if len(values) != 28:
            raise ValueError(f"expected 28 values, got {len(values)}")
        Q = np.zeros((NSYM, NSYM))
        it = iter(values[:21])
        for i in range(NSYM):
            for j in range(i, NSYM):
                Q[i, j] = Q[j, i] = next(it)
        return cls(Q, np.array(values[21:27]), values[27])

    @classmethod
    def zero(cls) -> "QuadForm":
        return cls()


def partial(q: QuadForm, sym: int) -> AffineExpr:
    return q.partial(sym)


def substitute(q: QuadForm, sym: int, e: AffineExpr) -> QuadForm:
    return q.substitute(sym, e)


def solve_linear(e: AffineExpr, sym: int, rtol: float = DEGENERACY_RTOL) -> AffineExpr:
    return e.solve_for(sym, rtol=rtol)


def antiderivative(e: AffineExpr, sym: int) -> QuadForm:
    """Antiderivative of e with respect to sym, integration constant zero."""
    k = _check_sym(sym) - 1
    Q = np.zeros((NSYM, NSYM))
    # Cross terms a_j s_j s_k need Q[j,k] = Q[k,j] = a_j; the pure term
    # a_k s_k^2/2 needs Q[k,k] = a_k.
    Q[k, :] = e.coeffs
    Q[:, k] += e.coeffs
    Q[k, k] = e.coeffs[k]
    b = np.zeros(NSYM)
    b[k] = e.const
    return QuadForm(Q, b, 0.0)


def evaluate(q: QuadForm, s) -> float:
    return q.eval(s)


def product(e1: AffineExpr, e2: AffineExpr) -> QuadForm:
    """Exact product of two affine expressions."""
    Q = np.outer(e1.coeffs, e2.coeffs) + np.outer(e2.coeffs, e1.coeffs)
    b = e1.const * e2.coeffs + e2.const * e1.coeffs
    return QuadForm(Q, b, e1.const * e2.const)


def relabel(q: QuadForm, p) -> QuadForm:
    """Rename symbols x_i -> x_{p(i)} and X_i -> X_{p(i)} simultaneously.

    The returned form r satisfies r(s) = q(t) with t[x_i] = s[x_{p(i)}].
    """
    pi = [p(i) - 1 for i in (1, 2, 3)]
    T = np.zeros((NSYM, NSYM))
    for i in range(3):
        T[i, pi[i]] = 1.0
        T[3 + i, 3 + pi[i]] = 1.0
    return QuadForm(T.T @ q.Q @ T, T.T @ q.b, q.c)
