"""Numerical verification toolkit: Jacobians, determinants, references, orders.

Volume preservation is tested as a unit Jacobian determinant: exactly
for affine steps, by central differences otherwise (which caps the
achievable defect around 1e-6).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "jacobian_fd",
    "det3",
    "expm3",
    "rk4_reference",
    "reference_endpoint",
    "OrderReport",
    "observed_order",
    "VolumeAudit",
    "volume_audit",
]

_FD_EPS = float(np.cbrt(np.finfo(float).eps))


def _as_step(scheme):
    """Accept a SchemeHandle, an affine map, or a bare callable."""
    step = getattr(scheme, "step", None)
    return step if callable(step) else scheme


def jacobian_fd(map_fn, x, eps: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of a map R^3 -> R^3 at x."""
    step = _as_step(map_fn)
    x = np.asarray(x, dtype=float)
    if eps is None:
        eps = _FD_EPS * (1.0 + float(np.linalg.norm(x)))
    J = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = eps
        J[:, j] = (np.asarray(step(x + e), float) - np.asarray(step(x - e), float)) / (2.0 * eps)
    return J


def det3(M) -> float | np.ndarray:
    """Determinant of a 3x3 matrix by cofactor expansion.

    Accepts stacked input of shape (..., 3, 3) and broadcasts.
    """
    M = np.asarray(M, dtype=float)
    d = (
        M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
        - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
        + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0])
    )
    return float(d) if d.ndim == 0 else d


def expm3(A, t: float = 1.0) -> np.ndarray:
    """exp(t A) for a 3x3 matrix by scaling and squaring a Taylor kernel.

    The argument is scaled to norm <= 1/2, summed until the next term
    falls below 1e-20 relative, then squared back up.
    """
    B = t * np.asarray(A, dtype=float).reshape(3, 3)
    norm = float(np.linalg.norm(B, 1))
    squarings = 0
    if norm > 0.5:
        squarings = int(np.ceil(np.log2(norm / 0.5)))
        B = B / (2.0 ** squarings)
    E = np.eye(3)
    term = np.eye(3)
    for k in range(1, 40):
        term = term @ B / k
        E = E + term
        if float(np.abs(term).max()) < 1e-20 * max(1.0, float(np.abs(E).max())):
            break
    for _ in range(squarings):
        E = E @ E
    return E


def rk4_reference(field, x0, T: float, n_steps: int) -> np.ndarray:
    """Endpoint of classical RK4 with n_steps over [0, T]."""
    f = field.a if hasattr(field, "a") else field
    x = np.asarray(x0, dtype=float)
    h = float(T) / int(n_steps)
    for _ in range(int(n_steps)):
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def reference_endpoint(field, x0, T: float) -> np.ndarray:
    """High-accuracy flow endpoint: matrix exponential when the field is
    linear, otherwise RK4 with a step-halving self-consistency guard."""
    linear = getattr(field, "linear", None)
    if linear is not None:
        return expm3(linear.A, T) @ np.asarray(x0, dtype=float)
    n = 1000
    prev = rk4_reference(field, x0, T, n)
    for _ in range(8):
        n *= 2
        cur = rk4_reference(field, x0, T, n)
        if float(np.linalg.norm(cur - prev)) < 1e-10:
            return cur
        prev = cur
    return prev


@dataclass(frozen=True)
class OrderReport:
    """Global errors at a fixed horizon over a ladder of step sizes."""

    h_values: tuple[float, ...]
    errors: tuple[float, ...]
    pairwise_orders: tuple[float, ...]
    slope: float

    def to_text(self) -> str:
        lines = [f"{'h':>12}  {'error':>24}  {'order':>8}"]
        for i, (h, e) in enumerate(zip(self.h_values, self.errors)):
            order = f"{self.pairwise_orders[i - 1]:8.4f}" if i > 0 else " " * 8
            lines.append(f"{h:12.6g}  {e:24.16e}  {order}")
        lines.append(f"fitted slope: {self.slope:.4f}")
        return "\n".join(lines)


def observed_order(scheme_factory, field, x0, T: float, h_list) -> OrderReport:
    """Errors of a one-step method against the reference flow.

    ``scheme_factory`` maps a step size h to a step (handle or callable).
    Each requested h is snapped to the nearest divisor T/n of the horizon
    so the endpoint lands exactly at T; the report carries the effective
    steps.  The slope is the least-squares fit of log error against log h.
    """
    x0 = np.asarray(x0, dtype=float)
    ref = reference_endpoint(field, x0, T)
    errors = []
    hs = []
    for h in h_list:
        n = max(1, int(round(T / float(h))))
        h_eff = float(T) / n
        hs.append(h_eff)
        step = _as_step(scheme_factory(h_eff))
        x = x0
        for _ in range(n):
            x = np.asarray(step(x), dtype=float)
        errors.append(float(np.linalg.norm(x - ref)))
    orders = []
    for i in range(1, len(hs)):
        if errors[i] > 0.0 and errors[i - 1] > 0.0:
            orders.append(float(np.log(errors[i - 1] / errors[i]) / np.log(hs[i - 1] / hs[i])))
        else:
            orders.append(float("nan"))
    if len(hs) >= 2 and all(e > 0.0 for e in errors):
        slope = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
    else:
        slope = float("nan")
    return OrderReport(tuple(hs), tuple(errors), tuple(orders), slope)


@dataclass(frozen=True)
class VolumeAudit:
    """Per-point |det J - 1| of a step map over a sample of points."""

    points: np.ndarray
    defects: np.ndarray
    fd_eps: float

    def __post_init__(self):
        object.__setattr__(self, "points", np.array(self.points, dtype=float))
        object.__setattr__(self, "defects", np.array(self.defects, dtype=float))

    @property
    def max_defect(self) -> float:
        return float(self.defects.max()) if self.defects.size else 0.0

    @property
    def mean_defect(self) -> float:
        return float(self.defects.mean()) if self.defects.size else 0.0

    def to_csv(self) -> str:
        lines = ["point,defect"]
        for i, d in enumerate(self.defects):
            lines.append(f"{i},{d:.16e}")
        return "\n".join(lines) + "\n"


def volume_audit(scheme, points, eps: float | None = None) -> VolumeAudit:
    """Audit |det(step Jacobian) - 1| at each point.

    Affine schemes are audited exactly through their matrix; everything
    else by finite-difference Jacobian.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    M = getattr(scheme, "M", None)
    if M is None:
        affine = getattr(scheme, "affine", None)
        M = None if affine is None else affine.M
    if M is not None and np.shape(M) == (3, 3):
        defect = abs(det3(M) - 1.0)
        defects = np.full(len(points), defect)
        return VolumeAudit(points, defects, 0.0)
    used_eps = eps if eps is not None else _FD_EPS
    defects = np.array([
        abs(det3(jacobian_fd(scheme, p, eps=eps)) - 1.0) for p in points
    ])
    return VolumeAudit(points, defects, used_eps)
