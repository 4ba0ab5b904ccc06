"""The generic implicit map engine.

Two scalar potentials phi, Phi on R^3 together with a sign eps define a
map (y1,y2,y3) -> (Y1,Y2,Y3) implicitly by

    d2 phi(Y3, y2, y3)                          = y1
    d3 Phi(Y3, Y2, y3) + eps * d1 phi(Y3, y2, y3) = 0
    Y1 = d2 Phi(Y3, Y2, y3)

The system is triangular: the first equation is a scalar root find for
Y3 (which sits in slot 1 of phi), the second a scalar root find for Y2
(slot 2 of Phi), the third explicit.  Well-posedness needs the twist
quantities d21 phi and d32 Phi nonzero along the solve.  A permutation
pair (sigma, Sigma) conjugates the base map onto any coordinate roles,
and the adjoint construction yields the exact inverse map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadcalc
from .errors import NewtonDivergenceError, TwistViolationError
from .perm3 import Permutation, act_vec, compose, inverse

__all__ = [
    "PotentialFn",
    "GeneratingFormSpec",
    "SolverConfig",
    "TwistReport",
    "newton_scalar",
    "base_step",
    "permuted_step",
    "adjoint",
    "twist_report",
]

_FD_STEP = float(np.cbrt(np.finfo(float).eps))
_MACHINE_EPS = float(np.finfo(float).eps)
#: Floor under which a Newton derivative counts as a violated twist condition.
TWIST_FLOOR = 1e-13


class PotentialFn:
    """Scalar potential of three slot variables with first and second partials.

    ``grad`` returns the three first partials; ``hess`` the 3x3 second
    partials, falling back to central differences of the gradient.
    """

    def __init__(self, value, grad, hess=None, fd_step: float = _FD_STEP):
        self._value = value
        self._grad = grad
        self._hess = hess
        self._fd = fd_step

    @classmethod
    def from_quadform(cls, q: quadcalc.QuadForm, slots: tuple[int, int, int]) -> "PotentialFn":
        """Exact potential from a quadratic form.

        ``slots`` lists the symbol index (1..6) feeding each of the three
        slot arguments.  The form must not involve any other symbol.
        """
        slots = tuple(int(s) for s in slots)
        extra = q.symbols_used(tol=1e-300) - set(slots)
        if extra:
            raise ValueError(f"quadratic form uses symbols {sorted(extra)} outside slots {slots}")
        idx = [s - 1 for s in slots]
        Qs = q.Q[np.ix_(idx, idx)]
        bs = q.b[idx]

        def value(y):
            y = np.asarray(y, dtype=float)
            return float(0.5 * y @ Qs @ y + bs @ y + q.c)

        def grad(y):
            return Qs @ np.asarray(y, dtype=float) + bs

        def hess(y):
            return Qs

        fn = cls(value, grad, hess)
        fn.quad = q
        fn.slots = slots
        return fn

    def value(self, y) -> float:
        return float(self._value(np.asarray(y, dtype=float)))

    __call__ = value

    def grad(self, y) -> np.ndarray:
        return np.asarray(self._grad(np.asarray(y, dtype=float)), dtype=float)

    def hess(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self._hess is not None:
            return np.asarray(self._hess(y), dtype=float)
        h = self._fd * (1.0 + float(np.linalg.norm(y)))
        H = np.zeros((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            H[:, j] = (self.grad(y + e) - self.grad(y - e)) / (2.0 * h)
        return 0.5 * (H + H.T)


@dataclass(frozen=True)
class GeneratingFormSpec:
    """Everything that determines one implicit volume-preserving map."""

    phi: PotentialFn
    Phi: PotentialFn
    eps: int
    sigma: Permutation
    Sigma: Permutation

    def __post_init__(self):
        if self.eps not in (-1, 1):
            raise ValueError(f"eps must be +1 or -1, got {self.eps}")


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-12
    max_iter: int = 50
    fd_step: float = _FD_STEP
    bracket_fallback: bool = True

    def __post_init__(self):
        if self.newton_tol <= 0 or self.max_iter < 1:
            raise ValueError("newton_tol must be positive and max_iter >= 1")


DEFAULT_CONFIG = SolverConfig()


def newton_scalar(g, dg, x0: float, cfg: SolverConfig, equation: str, point) -> tuple[float, int]:
    """Solve g(x) = 0 by Newton from x0; returns (root, iterations).

    ``dg`` may be None, in which case the derivative is a central
    difference of g.  After the residual passes the tolerance one extra
    polish iteration is taken so downstream finite-difference Jacobians
    do not see solver quantization.  Stalls fall back to bisection on an
    expanding bracket when enabled.
    """

    def deriv(x):
        if dg is not None:
            return dg(x)
        h = cfg.fd_step * (1.0 + abs(x))
        return (g(x + h) - g(x - h)) / (2.0 * h)

    def fallback():
        if cfg.bracket_fallback:
            return _bisect_expanding(g, float(x0), cfg)
        return None

    x = float(x0)
    scale = 1.0 + abs(x)
    converged = False
    best_x, best_g = x, float("inf")
    for it in range(cfg.max_iter + 1):
        gx = g(x)
        if not math.isfinite(gx):
            break
        if abs(gx) < best_g:
            best_x, best_g = x, abs(gx)
        if abs(gx) <= cfg.newton_tol:
            if converged:
                return x, it
            converged = True  # one polish pass
        d = deriv(x)
        if abs(d) < TWIST_FLOOR * max(1.0, abs(gx)):
            if converged:
                return x, it
            root = fallback()
            if root is not None:
                return root, it
            raise TwistViolationError(equation, point, d)
        step = gx / d
        if not math.isfinite(step) or abs(step) > 1e12 * scale:
            break
        if abs(step) <= 4.0 * _MACHINE_EPS * (1.0 + abs(x)) and abs(gx) <= 1e3 * cfg.newton_tol:
            # Stagnation at the attainable accuracy (e.g. finite-difference
            # noise in the residual); further iterations cannot improve.
            return x, it
        x -= step
    if math.isfinite(x) and abs(g(x)) <= cfg.newton_tol:
        return x, cfg.max_iter
    if best_g <= 1e3 * cfg.newton_tol:
        # Oscillation at the attainable accuracy, e.g. finite-difference
        # noise in the residual itself.
        return best_x, cfg.max_iter
    root = fallback()
    if root is not None:
        return root, cfg.max_iter
    residual = abs(g(x)) if math.isfinite(x) else float("inf")
    raise NewtonDivergenceError(equation, point, cfg.max_iter, residual)


def _bisect_expanding(g, x0: float, cfg: SolverConfig):
    """Bisection on a bracket grown by width doubling around x0."""
    w = 1e-6 * (1.0 + abs(x0))
    lo = hi = x0
    glo = ghi = g(x0)
    for _ in range(60):
        lo, hi = x0 - w, x0 + w
        glo, ghi = g(lo), g(hi)
        if not (math.isfinite(glo) and math.isfinite(ghi)):
            return None
        if glo == 0.0:
            return lo
        if ghi == 0.0:
            return hi
        if glo * ghi < 0.0:
            break
        w *= 2.0
    else:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= cfg.newton_tol:
            return mid
        if glo * gm < 0.0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    return None


def base_step(phi: PotentialFn, Phi: PotentialFn, eps: int, y, cfg: SolverConfig = DEFAULT_CONFIG,
              init: tuple[float, float] | None = None, counts: list | None = None) -> np.ndarray:
    """Solve the defining equations at y; returns (Y1, Y2, Y3).

    ``init`` optionally seeds the two scalar solves (Y3, then Y2); the
    defaults are (y3, y2).
    """
    y = np.asarray(y, dtype=float)
    y1, y2, y3 = y
    Y3_0, Y2_0 = (y3, y2) if init is None else init

    def g1(Y3):
        return phi.grad([Y3, y2, y3])[1] - y1

    def dg1(Y3):
        return phi.hess([Y3, y2, y3])[0, 1]

    Y3, it1 = newton_scalar(g1, dg1, Y3_0, cfg, "determining equation 1 (phi)", y)

    c = eps * phi.grad([Y3, y2, y3])[0]

    def g2(Y2):
        return Phi.grad([Y3, Y2, y3])[2] + c

    def dg2(Y2):
        return Phi.hess([Y3, Y2, y3])[1, 2]

    Y2, it2 = newton_scalar(g2, dg2, Y2_0, cfg, "determining equation 2 (Phi)", y)

    Y1 = Phi.grad([Y3, Y2, y3])[1]
    if counts is not None:
        counts.extend([it1, it2])
    return np.array([Y1, Y2, Y3])


def permuted_step(spec: GeneratingFormSpec, x, cfg: SolverConfig = DEFAULT_CONFIG) -> np.ndarray:
    """One step of the conjugated map x -> base(x . sigma) . Sigma^{-1}."""
    y = act_vec(x, spec.sigma)
    # The h -> 0 limit of a consistent scheme has Y_i ~ y_{tau(i)}; seed
    # the two solves there.
    tau = compose(inverse(spec.sigma), spec.Sigma)
    init = (y[tau(3) - 1], y[tau(2) - 1])
    Y = base_step(spec.phi, spec.Phi, spec.eps, y, cfg, init=init)
    return act_vec(Y, inverse(spec.Sigma))


def _reverse_args(p: PotentialFn) -> PotentialFn:
    """The potential with first and last slots exchanged."""

    def value(y):
        return p.value(y[::-1])

    def grad(y):
        return p.grad(y[::-1])[::-1]

    def hess(y):
        return p.hess(y[::-1])[::-1, ::-1]

    return PotentialFn(value, grad, hess)


def adjoint(spec: GeneratingFormSpec) -> GeneratingFormSpec:
    """The spec generating the exact inverse map.

    Swap the potentials with their arguments reversed and swap the
    permutation pair; the sign is unchanged.
    """
    return GeneratingFormSpec(
        phi=_reverse_args(spec.Phi),
        Phi=_reverse_args(spec.phi),
        eps=spec.eps,
        sigma=spec.Sigma,
        Sigma=spec.sigma,
    )


@dataclass(frozen=True)
class TwistReport:
    """Twist diagnostics at a solved point."""

    d21_phi: float
    d32_Phi: float
    newton_iterations: tuple[int, int]
    degenerate: bool


def twist_report(spec: GeneratingFormSpec, x, cfg: SolverConfig = DEFAULT_CONFIG) -> TwistReport:
    """Solve one step and report the twist quantities found there."""
    y = act_vec(x, spec.sigma)
    tau = compose(inverse(spec.sigma), spec.Sigma)
    counts: list[int] = []
    try:
        Y = base_step(spec.phi, spec.Phi, spec.eps, y, cfg,
                      init=(y[tau(3) - 1], y[tau(2) - 1]), counts=counts)
        Y3, Y2 = Y[2], Y[1]
    except TwistViolationError:
        # Report the quantities at the initial guesses instead.
        Y3, Y2 = y[tau(3) - 1], y[tau(2) - 1]
        counts = [0, 0]
    d21 = float(spec.phi.hess([Y3, y[1], y[2]])[0, 1])
    d32 = float(spec.Phi.hess([Y3, Y2, y[2]])[1, 2])
    floor = 1e-12
    return TwistReport(
        d21_phi=d21,
        d32_Phi=d32,
        newton_iterations=(counts[0], counts[1]) if len(counts) == 2 else (0, 0),
        degenerate=(abs(d21) <= floor or abs(d32) <= floor),
    )
