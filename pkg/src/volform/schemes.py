"""Integrator factories for the five classes of generating one-forms.

Three families are built for general potential-split fields (symplectic
Euler pairs and the two discrete-Lagrangian combinations); the two
special classes S1 and S2 are built for linear trace-free fields by
mechanized constructive derivations over quadratic forms, one based on
the volume correction method and one on a forward-Euler seed.  Every
linear-field scheme materializes as an exact affine map plus an engine
spec, so the implicit-solver route and the assembled linear algebra can
be checked against each other.

Sign conventions follow the worked per-class update equations: the
written equations carry eps = sign(tau) in the engine normalization,
and the discrete-Lagrangian substeps use the momentum form

    p_new = p_old - h dH/dq(q_old, p_new),  q_new = q_old + h dH/dp(q_old, p_new)

which is the sign combination that passes the local-error O(h^2) test.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateCoefficientError,
    LegendreFailureError,
    NewtonDivergenceError,
    StepTooLargeError,
    TwistDegenerateError,
)
from .fields import Field3, LinearField, ScalarPotential, potentials_for
from .genmap import (
    DEFAULT_CONFIG,
    GeneratingFormSpec,
    PotentialFn,
    SolverConfig,
    newton_scalar,
    permuted_step,
)
from .perm3 import Permutation, classify, sign
from .quadcalc import AffineExpr, QuadForm, antiderivative, product, solve_linear, symbol

__all__ = [
    "AffineMap3",
    "DiscreteLagrangian",
    "SchemeHandle",
    "SCHEME_NAMES",
    "legendre",
    "make_se_se",
    "make_dl_se",
    "make_dl_dl",
    "make_s1",
    "make_s2",
    "make_euler",
    "make_rk4",
    "make_scheme",
    "derive_s1_potentials",
    "derive_s2_potentials",
    "quispel_semi_implicit",
    "quispel_corrected_step",
    "assemble_affine",
    "spec_from_quadforms",
    "scheme_pair",
]

#: Matrix entries required nonzero by a construction must exceed this.
MIN_TWIST = 1e-8
#: Step sizes within this band of a denominator zero are rejected.
DENOM_BAND = 1e-8

SCHEME_NAMES = (
    "se-se", "dl-se", "dl-dl",
    "s1-quispel", "s1-az", "s2-quispel", "quispel-corrected",
    "euler", "rk4",
)

#: Role permutations of the worked cases: the lowercase sigma is shared
#: by every family, the uppercase Sigma selects the class.
_SIGMA_LOWER = Permutation((3, 2, 1))
_SIGMA_UPPER = {
    "se-se": Permutation((1, 2, 3)),
    "dl-se": Permutation((1, 3, 2)),
    "dl-dl": Permutation((3, 1, 2)),
    "s1": Permutation((3, 2, 1)),
    "s2": Permutation((2, 3, 1)),
}


def scheme_pair(name: str) -> tuple[Permutation, Permutation]:
    """The (sigma, Sigma) pair realized by a named scheme family."""
    key = {"s1-quispel": "s1", "s1-az": "s1", "s2-quispel": "s2"}.get(name, name)
    if key not in _SIGMA_UPPER:
        raise ConfigError(f"scheme {name!r} has no generating pair")
    return _SIGMA_LOWER, _SIGMA_UPPER[key]


@dataclass(frozen=True)
class AffineMap3:
    """Affine map X = M x + d with exact determinant access."""

    M: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        M = np.array(self.M, dtype=float).reshape(3, 3)
        M.setflags(write=False)
        d = np.array(self.d, dtype=float).reshape(3)
        d.setflags(write=False)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "d", d)

    def __call__(self, x) -> np.ndarray:
        return self.M @ np.asarray(x, dtype=float) + self.d

    def det(self) -> float:
        M = self.M
        return float(
            M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
            - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
            + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0])
        )

    def inverse(self) -> "AffineMap3":
        Minv = np.linalg.inv(self.M)
        return AffineMap3(Minv, -Minv @ self.d)

    @classmethod
    def identity(cls) -> "AffineMap3":
        return cls(np.eye(3), np.zeros(3))


@dataclass
class SchemeHandle:
    """A ready-to-run one-step method.

    ``affine`` is set (and preferred for stepping) whenever the field is
    linear; ``spec`` carries the generating data for the implicit engine
    when the construction admits one.  Handles are immutable in use and
    ``step`` is pure, so disjoint trajectories may be advanced
    concurrently.
    """

    label: str
    h: float
    field: Field3 | None = None
    spec: GeneratingFormSpec | None = None
    affine: AffineMap3 | None = None
    cfg: SolverConfig = dc_field(default_factory=SolverConfig)
    step_fn: object = None

    def step(self, x) -> np.ndarray:
        if self.affine is not None:
            return self.affine(x)
        if self.step_fn is not None:
            return np.asarray(self.step_fn(x), dtype=float)
        return self.engine_step(x)

    def engine_step(self, x) -> np.ndarray:
        if self.spec is None:
            raise ConfigError(f"scheme {self.label!r} carries no generating spec")
        return permuted_step(self.spec, x, self.cfg)

    def __call__(self, x) -> np.ndarray:
        return self.step(x)


# ---------------------------------------------------------------------------
# Quadratic-potential plumbing shared by the linear-field constructions.


def _display_slots(sigma: Permutation, Sigma: Permutation):
    """Symbol indices of (X-, xo, x-) and (X-, Xo, x-)."""
    xm, xo = sigma(3), sigma(2)
    Xm, Xo = 3 + Sigma(3), 3 + Sigma(2)
    return (Xm, xo, xm), (Xm, Xo, xm)


def spec_from_quadforms(phi_q: QuadForm, Phi_q: QuadForm,
                        sigma: Permutation, Sigma: Permutation) -> GeneratingFormSpec:
    """Engine spec for quadratic potentials written in display variables.

    The written equations state the third condition as
    X+ = -sign(tau) d[Xo] Phi, so the engine potential is -sign(tau) Phi
    and eps = sign(tau).
    """
    tau_sign = sign(classify(sigma, Sigma).tau)
    phi_slots, Phi_slots = _display_slots(sigma, Sigma)
    return GeneratingFormSpec(
        phi=PotentialFn.from_quadform(phi_q, phi_slots),
        Phi=PotentialFn.from_quadform((-float(tau_sign)) * Phi_q, Phi_slots),
        eps=tau_sign,
        sigma=sigma,
        Sigma=Sigma,
    )


def assemble_affine(phi_q: QuadForm, Phi_q: QuadForm,
                    sigma: Permutation, Sigma: Permutation) -> AffineMap3:
    """Assemble the affine map defined by quadratic potentials.

    Solves the three determining conditions in sequence by exact linear
    algebra over the coefficient arrays.
    """
    (Xm, xo, xm), (_, Xo, _) = _display_slots(sigma, Sigma)
    xp = sigma(1)
    tau_sign = sign(classify(sigma, Sigma).tau)

    e1 = phi_q.partial(xo) - symbol(xp)
    Xm_expr = solve_linear(e1, Xm)

    e2 = phi_q.partial(Xm) - Phi_q.partial(xm)
    Xo_expr = solve_linear(e2, Xo).substitute(Xm, Xm_expr)

    Xp_expr = ((-float(tau_sign)) * Phi_q.partial(Xo)) \
        .substitute(Xm, Xm_expr).substitute(Xo, Xo_expr)

    M = np.zeros((3, 3))
    d = np.zeros(3)
    for coord, expr in ((Sigma(3), Xm_expr), (Sigma(2), Xo_expr), (Sigma(1), Xp_expr)):
        if np.any(expr.coeffs[3:] != 0.0):
            raise RuntimeError("assembled row still references new coordinates")
        M[coord - 1, :] = expr.coeffs[:3]
        d[coord - 1] = expr.const
    return AffineMap3(M, d)


def _linear_rows(A: np.ndarray, args: tuple[AffineExpr, AffineExpr, AffineExpr], i: int) -> AffineExpr:
    """Row i of A applied to a symbolic argument triple."""
    return A[i, 0] * args[0] + A[i, 1] * args[1] + A[i, 2] * args[2]


# ---------------------------------------------------------------------------
# Legendre transform and discrete Lagrangians.


def legendre(F: ScalarPotential, param: float, q: float, v: float,
             cfg: SolverConfig = DEFAULT_CONFIG, seed: float = 0.0) -> float:
    """Solve dF/dp(param, q, p) = v for the momentum p.

    Closed form for quadratic potentials; Newton from ``seed`` otherwise.
    """
    if F.quad is not None:
        e = F.quad.partial(3)
        c3 = e.coeff(3)
        scale = max(1.0, float(np.max(np.abs(e.coeffs))))
        if abs(c3) < MIN_TWIST * scale:
            raise LegendreFailureError(
                f"d2F/dp2 = {c3:.3e} is degenerate; momentum inversion ill-posed"
            )
        return (v - e.const - e.coeff(1) * param - e.coeff(2) * q) / c3

    def g(p):
        return F.partial(3, [param, q, p]) - v

    try:
        p, _ = newton_scalar(g, None, seed, cfg, "momentum inversion", (param, q, v))
    except NewtonDivergenceError as exc:
        raise LegendreFailureError(str(exc)) from exc
    return p


class DiscreteLagrangian:
    """Time discretization h * L(param, q, (Q - q)/h) of a sub-Hamiltonian.

    ``F`` is the scalar potential whose third argument is the momentum;
    ``q_slot`` says which of F's first two arguments is the discretized
    coordinate (the other is carried as a parameter); ``ham_sign`` is +1
    when the sub-Hamiltonian is +F and -1 when it is -F.  First partials
    use the envelope identities, so no derivative of the inner momentum
    inversion is needed.
    """

    def __init__(self, F: ScalarPotential, h: float, q_slot: int = 2, ham_sign: int = 1,
                 cfg: SolverConfig = DEFAULT_CONFIG):
        if q_slot not in (1, 2):
            raise ValueError("q_slot must be 1 or 2")
        self.F = F
        self.h = float(h)
        self.q_slot = q_slot
        self.ham_sign = int(ham_sign)
        self.cfg = cfg
        # legendre expects argument order (param, q, p)
        self._F_ordered = _swap12(F) if q_slot == 1 else F

    def _args(self, param: float, q: float, p: float):
        return (param, q, p) if self.q_slot == 2 else (q, param, p)

    def momentum(self, param: float, q: float, v: float, seed: float = 0.0) -> float:
        """Invert v = ham_sign * dF/dp at frozen (param, q)."""
        return legendre(self._F_ordered, param, q, self.ham_sign * v, self.cfg, seed)

    def ld(self, param: float, q: float, Q: float) -> float:
        v = (Q - q) / self.h
        p = self.momentum(param, q, v, seed=0.0)
        return self.h * (p * v - self.ham_sign * self.F.value(self._args(param, q, p)))

    def d_q(self, param: float, q: float, Q: float) -> float:
        v = (Q - q) / self.h
        p = self.momentum(param, q, v, seed=0.0)
        gF = self.F.grad(self._args(param, q, p))
        return -self.h * self.ham_sign * gF[self.q_slot - 1] - p

    def d_Q(self, param: float, q: float, Q: float) -> float:
        v = (Q - q) / self.h
        return self.momentum(param, q, v, seed=0.0)

    def d_param(self, param: float, q: float, Q: float) -> float:
        v = (Q - q) / self.h
        p = self.momentum(param, q, v, seed=0.0)
        gF = self.F.grad(self._args(param, q, p))
        return -self.h * self.ham_sign * gF[2 - self.q_slot]


def _swap12(F: ScalarPotential) -> ScalarPotential:
    if F.quad is None:
        return ScalarPotential(lambda x: F.value([x[1], x[0], x[2]]), name=F.name)
    s1, s2 = symbol(1), symbol(2)
    # Route through a spare symbol to exchange x1 and x2 exactly.
    q = F.quad.substitute(1, symbol(4)).substitute(2, s1).substitute(4, s2)
    return ScalarPotential.from_quadform(q, name=F.name)


def _ld1_quadform(F1: ScalarPotential, h: float) -> QuadForm:
    """L_d for the (x2, x3) sub-Hamiltonian F1, over symbols (x1, x2, X2)."""
    v = (symbol(5) - symbol(2)) / h
    e = F1.quad.partial(3) - v
    try:
        p = solve_linear(e, 3)
    except DegenerateCoefficientError as exc:
        raise LegendreFailureError(str(exc)) from exc
    return h * (product(p, v) - F1.quad.substitute(3, p))


def _ld2_quadform(F2: ScalarPotential, h: float) -> QuadForm:
    """L_d for the (x1, x3) sub-Hamiltonian -F2 with the x2 slot renamed X2.

    Result is over symbols (x1, X1, X2).
    """
    F2X = F2.quad.substitute(2, symbol(5))
    v = (symbol(4) - symbol(1)) / h
    e = (-1.0) * F2X.partial(3) - v
    try:
        p = solve_linear(e, 3)
    except DegenerateCoefficientError as exc:
        raise LegendreFailureError(str(exc)) from exc
    return h * (product(p, v) + F2X.substitute(3, p))


# ---------------------------------------------------------------------------
# Splitting factories (general potential-split fields).


def _zero_if_none(F: ScalarPotential | None) -> ScalarPotential:
    return F if F is not None else ScalarPotential.zero()


def make_se_se(F1: ScalarPotential | None, F3: ScalarPotential | None, h: float,
               cfg: SolverConfig = DEFAULT_CONFIG, field: Field3 | None = None) -> SchemeHandle:
    """Two-substep symplectic Euler scheme from the potentials (F1, F3).

    Update (each line an implicit scalar relation in its new variable):

        X3 = x3 - h d2 F1(x1, x2, X3)
        X2 = x2 + h d3 F1(x1, x2, X3) - h d1 F3(x1, X2, X3)
        X1 = x1 + h d2 F3(x1, X2, X3)
    """
    F1, F3 = _zero_if_none(F1), _zero_if_none(F3)
    h = float(h)
    sigma, Sigma = scheme_pair("se-se")

    spec = None
    affine = None
    if F1.quad is not None and F3.quad is not None:
        phi_q = product(symbol(2), symbol(6)) + h * F1.quad.substitute(3, symbol(6))
        Phi_q = product(symbol(1), symbol(5)) \
            + h * F3.quad.substitute(2, symbol(5)).substitute(3, symbol(6))
        spec = spec_from_quadforms(phi_q, Phi_q, sigma, Sigma)
        affine = assemble_affine(phi_q, Phi_q, sigma, Sigma)
    else:
        spec = _se_se_callable_spec(F1, F3, h, sigma, Sigma)

    def step(x):
        x1, x2, x3 = (float(v) for v in x)

        def g1(X3):
            return X3 - x3 + h * F1.partial(2, [x1, x2, X3])

        X3, _ = newton_scalar(g1, None, x3, cfg, "determining equation 1 (phi)", x)
        c = h * F1.partial(3, [x1, x2, X3])

        def g2(X2):
            return X2 - x2 - c + h * F3.partial(1, [x1, X2, X3])

        X2, _ = newton_scalar(g2, None, x2, cfg, "determining equation 2 (Phi)", x)
        X1 = x1 + h * F3.partial(2, [x1, X2, X3])
        return np.array([X1, X2, X3])

    return SchemeHandle("se-se", h, field=field, spec=spec, affine=affine,
                        cfg=cfg, step_fn=step)


def _se_se_callable_spec(F1, F3, h, sigma, Sigma) -> GeneratingFormSpec:
    """Engine potentials phi = x2 X3 + h F1, Phi = x1 X2 + h F3 for callables."""

    def phi_value(y):
        u, v, w = y
        return v * u + h * F1.value([w, v, u])

    def phi_grad(y):
        u, v, w = y
        g = F1.grad([w, v, u])
        return np.array([v + h * g[2], u + h * g[1], h * g[0]])

    def Phi_value(y):
        u, v, w = y
        return w * v + h * F3.value([w, v, u])

    def Phi_grad(y):
        u, v, w = y
        g = F3.grad([w, v, u])
        return np.array([h * g[2], w + h * g[1], v + h * g[0]])

    return GeneratingFormSpec(
        phi=PotentialFn(phi_value, phi_grad),
        Phi=PotentialFn(Phi_value, Phi_grad),
        eps=-1,
        sigma=sigma,
        Sigma=Sigma,
    )


def _dl_step_fn(F1: ScalarPotential, F2: ScalarPotential, h: float, cfg: SolverConfig):
    """Momentum-form update shared by the two discrete-Lagrangian schemes.

    The first substep advances the (x2, x3) pair with Hamiltonian F1, the
    second the (x1, x3) pair with Hamiltonian -F2 (x2 frozen at X2):

        xt3 = x3 - h d2 F1(x1, x2, xt3);  X2 = x2 + h d3 F1(x1, x2, xt3)
        X3 = xt3 + h d1 F2(x1, X2, X3);   X1 = x1 - h d3 F2(x1, X2, X3)
    """

    def step(x):
        x1, x2, x3 = (float(v) for v in x)

        def g1(p):
            return p - x3 + h * F1.partial(2, [x1, x2, p])

        xt3, _ = newton_scalar(g1, None, x3, cfg, "momentum substep (F1)", x)
        X2 = x2 + h * F1.partial(3, [x1, x2, xt3])

        def g2(p):
            return p - xt3 - h * F2.partial(1, [x1, X2, p])

        X3, _ = newton_scalar(g2, None, xt3, cfg, "momentum substep (F2)", x)
        X1 = x1 - h * F2.partial(3, [x1, X2, X3])
        return np.array([X1, X2, X3])

    return step


def make_dl_se(F1: ScalarPotential | None, F2: ScalarPotential | None, h: float,
               cfg: SolverConfig = DEFAULT_CONFIG, field: Field3 | None = None) -> SchemeHandle:
    """Discrete-Lagrangian substep for F1 composed with a symplectic Euler for F2.

    phi = -L_d(x1, x2, X2) built from F1, Phi = -x1 X3 + h F2(x1, X2, X3).
    """
    F1, F2 = _zero_if_none(F1), _zero_if_none(F2)
    h = float(h)
    sigma, Sigma = scheme_pair("dl-se")

    spec = None
    affine = None
    if F1.quad is not None and F2.quad is not None:
        try:
            phi_q = -1.0 * _ld1_quadform(F1, h)
            Phi_q = -1.0 * product(symbol(1), symbol(6)) \
                + h * F2.quad.substitute(2, symbol(5)).substitute(3, symbol(6))
            spec = spec_from_quadforms(phi_q, Phi_q, sigma, Sigma)
            affine = assemble_affine(phi_q, Phi_q, sigma, Sigma)
        except LegendreFailureError:
            pass  # momentum-form stepping below is still well-posed

    return SchemeHandle("dl-se", h, field=field, spec=spec, affine=affine, cfg=cfg,
                        step_fn=_dl_step_fn(F1, F2, h, cfg))


def make_dl_dl(F1: ScalarPotential | None, F2: ScalarPotential | None, h: float,
               cfg: SolverConfig = DEFAULT_CONFIG, field: Field3 | None = None) -> SchemeHandle:
    """Two discrete-Lagrangian substeps, for F1 and for F2.

    phi = -L_d1(x1, x2, X2), Phi = +L_d2(x1, X1, X2).  The composed
    update coincides with the dl-se one (a variational substep and a
    symplectic Euler substep are the same map); the generating data and
    its permutation pair differ.
    """
    F1, F2 = _zero_if_none(F1), _zero_if_none(F2)
    h = float(h)
    sigma, Sigma = scheme_pair("dl-dl")

    spec = None
    affine = None
    if F1.quad is not None and F2.quad is not None:
        try:
            phi_q = -1.0 * _ld1_quadform(F1, h)
            Phi_q = _ld2_quadform(F2, h)
            spec = spec_from_quadforms(phi_q, Phi_q, sigma, Sigma)
            affine = assemble_affine(phi_q, Phi_q, sigma, Sigma)
        except LegendreFailureError:
            pass

    return SchemeHandle("dl-dl", h, field=field, spec=spec, affine=affine, cfg=cfg,
                        step_fn=_dl_step_fn(F1, F2, h, cfg))


# ---------------------------------------------------------------------------
# The correction-method map and the S1/S2 constructions (linear fields).


def _as_matrix(L) -> np.ndarray:
    if isinstance(L, LinearField):
        return L.A
    if isinstance(L, Field3):
        if L.linear is None:
            raise ConfigError("scheme requires a linear field")
        return L.linear.A
    return LinearField(np.asarray(L, dtype=float)).A


def _guard_denominator(name: str, value: float):
    if abs(value) < DENOM_BAND:
        raise StepTooLargeError(f"denominator {name} = {value:.3e} is inside the "
                                f"exclusion band {DENOM_BAND:g}")


def quispel_semi_implicit(L, h: float, corrected: bool = True,
                          orientation: str = "s1") -> AffineMap3:
    """The semi-implicit three-equation update, optionally volume corrected.

    Orientation "s1" solves the middle equation implicitly:

        X1 = x1 + h a1(x1, X2, x3)
        X2 = x2 + h a2(x1, X2, x3) - gamma (X2 - const)
        X3 = x3 + h a3(X1, X2, x3)

    with gamma = h^2 a11 a33 and const = h (a21 x1 + a23 x3)/(1 - h a22);
    gamma = 0 gives the uncorrected map.  Orientation "s2" is the analogue
    with the roles of the coordinates rotated (X3 implicit, gamma =
    h^2 a11 a22, const = h (a31 x1 + a32 x2)/(1 - h a33)).
    """
    A = _as_matrix(L)
    h = float(h)
    x1, x2, x3 = (symbol(i) for i in (1, 2, 3))

    if orientation == "s1":
        base = 1.0 - h * A[1, 1]
        _guard_denominator("1 - h*a22", base)
        gamma = h * h * A[0, 0] * A[2, 2] if corrected else 0.0
        k1 = base + gamma
        _guard_denominator("k1", k1)
        k2 = 1.0 + gamma / base
        X2e = (x2 + (h * A[1, 0] * x1 + h * A[1, 2] * x3) * k2) / k1
        X1e = x1 + h * (A[0, 0] * x1 + A[0, 1] * X2e + A[0, 2] * x3)
        X3e = x3 + h * (A[2, 0] * X1e + A[2, 1] * X2e + A[2, 2] * x3)
        rows = (X1e, X2e, X3e)
    elif orientation == "s2":
        base = 1.0 - h * A[2, 2]
        _guard_denominator("1 - h*a33", base)
        gamma = h * h * A[0, 0] * A[1, 1] if corrected else 0.0
        m1 = base + gamma
        _guard_denominator("m1", m1)
        m2 = 1.0 + gamma / base
        X3e = (x3 + (h * A[2, 0] * x1 + h * A[2, 1] * x2) * m2) / m1
        X1e = x1 + h * (A[0, 0] * x1 + A[0, 1] * x2 + A[0, 2] * X3e)
        X2e = x2 + h * (A[1, 0] * X1e + A[1, 1] * x2 + A[1, 2] * X3e)
        rows = (X1e, X2e, X3e)
    else:
        raise ValueError(f"unknown orientation {orientation!r}")

    M = np.zeros((3, 3))
    d = np.zeros(3)
    for i, expr in enumerate(rows):
        M[i, :] = expr.coeffs[:3]
        d[i] = expr.const
    return AffineMap3(M, d)


def quispel_corrected_step(L, h: float, x) -> np.ndarray:
    """One step of the volume-corrected semi-implicit update."""
    return quispel_semi_implicit(L, h, corrected=True, orientation="s1")(x)


def derive_s1_potentials(L, h: float, variant: str = "quispel") -> tuple[QuadForm, QuadForm]:
    """Constructive derivation of the class-S1 quadratic potentials.

    Both variants return (phi, Phi) over the display variables
    phi(x1, x2, X1), Phi(x1, X1, X2) satisfying

        x3 = d[x2] phi,   d[X1] phi = d[x1] Phi,   X3 = -d[X2] Phi.

    "quispel" inverts the volume-corrected semi-implicit map; "az" seeds
    the first coordinate with a forward Euler step.  The gauge term of
    phi is fixed to zero; Phi's pure-x1/X1 part is pinned by the
    compatibility condition (the "quispel" route makes it an exact
    identity, the "az" route matches the x1 and x3 coefficients of a
    consistent second coordinate).
    """
    A = _as_matrix(L)
    h = float(h)
    if abs(A[0, 2]) < MIN_TWIST:
        raise TwistDegenerateError(f"a13 = {A[0, 2]:.3e}: first determining "
                                   "equation cannot be solved for X1")
    x1, x2, x3, X1s, X2s, X3s = (symbol(i) for i in range(1, 7))

    if variant == "quispel":
        corrected = quispel_semi_implicit(A, h, corrected=True, orientation="s1")
        X2e = AffineExpr(np.concatenate([corrected.M[1], np.zeros(3)]), corrected.d[1])
        X1e = AffineExpr(np.concatenate([corrected.M[0], np.zeros(3)]), corrected.d[0])
        X3e_of_x = AffineExpr(np.concatenate([corrected.M[2], np.zeros(3)]), corrected.d[2])

        try:
            xt3 = solve_linear(X1s - X1e, 3)
        except DegenerateCoefficientError as exc:
            raise StepTooLargeError(f"x3 coefficient of the first update degenerated: {exc}") from exc
        phi_q = antiderivative(xt3, 2)

        # x3 resolved from the first update alone, as a function of (x1, X1, X2).
        xhat3 = solve_linear(
            X1s - (x1 + h * _linear_rows(A, (x1, X2s, x3), 0)), 3)
        X3hat = xhat3 + h * _linear_rows(A, (X1s, X2s, xhat3), 2)
        Phi0 = -1.0 * antiderivative(X3hat, 5)

        # Compatibility: d[X1] phi - d[x1] Phi0 must equal d[x1] of the
        # gauge term as an identity along the map, so eliminate X2 and x3.
        X2_of = X2e.substitute(3, xt3)
        resid = (phi_q.partial(4) - Phi0.partial(1)).substitute(5, X2_of)
        scale = max(1.0, float(np.max(np.abs(resid.coeffs))))
        if abs(resid.coeff(2)) > 1e-9 * scale:
            raise RuntimeError("compatibility residual unexpectedly depends on x2")
        coeffs = resid.coeffs.copy()
        coeffs[1] = 0.0
        Ct = antiderivative(AffineExpr(coeffs, resid.const), 1)
        return phi_q, Phi0 + Ct

    if variant == "az":
        X1_fe = x1 + h * _linear_rows(A, (x1, x2, x3), 0)
        try:
            xt3 = solve_linear(X1s - X1_fe, 3)
        except DegenerateCoefficientError as exc:
            raise StepTooLargeError(str(exc)) from exc
        phi_q = antiderivative(xt3, 2)

        x3r = xt3.substitute(2, X2s)
        rhs = x3r + h * _linear_rows(A, (x1, X2s, x3r), 2)
        ratio = A[0, 1] / A[0, 2]
        # Cancel the spurious -h (a12/a13) a2 carried inside x3r; the
        # momentum of the second coordinate is taken at (x1, X2, X3).
        e = X3s - rhs - (h * ratio) * (A[1, 0] * x1 + A[1, 1] * X2s + A[1, 2] * X3s)
        l1 = 1.0 - h * ratio * A[1, 2]
        _guard_denominator("l1", l1)
        X3_expr = solve_linear(e, 6)
        Phi0 = -1.0 * antiderivative(X3_expr, 5)

        # Pin the gauge so the second coordinate solved from the
        # compatibility condition is consistent: match its x1 and x3
        # coefficients against x2 + h a2(x) exactly.
        e2 = phi_q.partial(4) - Phi0.partial(1)
        beta = e2.coeff(5)
        if abs(beta) < MIN_TWIST:
            raise StepTooLargeError(f"X2 coefficient {beta:.3e} of the compatibility "
                                    "condition is degenerate")
        X2_0 = solve_linear(e2, 5)
        G = X2_0  # no X1 dependence enters before the gauge term
        target = x2 + h * _linear_rows(A, (x1, x2, x3), 1)
        c2 = beta * (target.coeff(3) - G.coeff(3)) / (h * A[0, 2])
        c1 = beta * (target.coeff(1) - G.coeff(1)) - c2 * (1.0 + h * A[0, 0])
        Q = np.zeros((6, 6))
        Q[0, 0] = c1
        Q[0, 3] = Q[3, 0] = c2
        return phi_q, Phi0 + QuadForm(Q, np.zeros(6), 0.0)

    raise ValueError(f"unknown S1 variant {variant!r}")


def derive_s2_potentials(L, h: float) -> tuple[QuadForm, QuadForm]:
    """Constructive derivation of the class-S2 quadratic potentials.

    Returns (phi, Phi) over phi(x1, x2, X1), Phi(x1, X1, X3) satisfying

        x3 = d[x2] phi,   d[X1] phi = d[x1] Phi,   X2 = +d[X3] Phi.

    Built by inverting the volume-corrected map in its rotated
    orientation.  Note the construction needs a13 != 0 as well as the
    a12 != 0 twist of the class itself.
    """
    A = _as_matrix(L)
    h = float(h)
    if abs(A[0, 1]) < MIN_TWIST:
        raise TwistDegenerateError(f"a12 = {A[0, 1]:.3e}: second coordinate "
                                   "cannot be resolved from the first update")
    if abs(A[0, 2]) < MIN_TWIST:
        raise TwistDegenerateError(f"a13 = {A[0, 2]:.3e}: first determining "
                                   "equation cannot be solved for X1")
    x1, x2, x3, X1s, X2s, X3s = (symbol(i) for i in range(1, 7))

    corrected = quispel_semi_implicit(A, h, corrected=True, orientation="s2")
    X3e = AffineExpr(np.concatenate([corrected.M[2], np.zeros(3)]), corrected.d[2])
    X1e = AffineExpr(np.concatenate([corrected.M[0], np.zeros(3)]), corrected.d[0])

    try:
        xt3 = solve_linear(X1s - X1e, 3)
    except DegenerateCoefficientError as exc:
        raise StepTooLargeError(f"x3 coefficient of the first update degenerated: {exc}") from exc
    phi_q = antiderivative(xt3, 2)

    # x2 resolved from the first update alone, as a function of (x1, X1, X3).
    xhat2 = solve_linear(X1s - (x1 + h * _linear_rows(A, (x1, x2, X3s), 0)), 2)
    X2hat = xhat2 + h * _linear_rows(A, (X1s, xhat2, X3s), 1)
    Phi0 = antiderivative(X2hat, 6)

    X3_of = X3e.substitute(3, xt3)
    resid = (phi_q.partial(4) - Phi0.partial(1)).substitute(6, X3_of)
    scale = max(1.0, float(np.max(np.abs(resid.coeffs))))
    if abs(resid.coeff(2)) > 1e-9 * scale:
        raise RuntimeError("compatibility residual unexpectedly depends on x2")
    coeffs = resid.coeffs.copy()
    coeffs[1] = 0.0
    Ct = antiderivative(AffineExpr(coeffs, resid.const), 1)
    return phi_q, Phi0 + Ct


def make_s1(L, h: float, variant: str = "quispel",
            cfg: SolverConfig = DEFAULT_CONFIG, field: Field3 | None = None) -> SchemeHandle:
    """First-order volume-preserving scheme of the first special class.

    Linear fields only; needs a13 != 0.  The zero matrix yields the
    identity step (the generating pair degenerates in that limit, so no
    spec is attached).
    """
    A = _as_matrix(L)
    label = f"s1-{variant}"
    if not np.any(A):
        return SchemeHandle(label, float(h), field=field, affine=AffineMap3.identity(), cfg=cfg)
    phi_q, Phi_q = derive_s1_potentials(A, h, variant)
    sigma, Sigma = scheme_pair(label)
    return SchemeHandle(
        label, float(h), field=field,
        spec=spec_from_quadforms(phi_q, Phi_q, sigma, Sigma),
        affine=assemble_affine(phi_q, Phi_q, sigma, Sigma),
        cfg=cfg,
    )


def make_s2(L, h: float, cfg: SolverConfig = DEFAULT_CONFIG,
            field: Field3 | None = None) -> SchemeHandle:
    """First-order volume-preserving scheme of the second special class.

    Linear fields only; needs a12 != 0 (and a13 != 0, see
    :func:`derive_s2_potentials`).  The zero matrix yields the identity.
    """
    A = _as_matrix(L)
    if not np.any(A):
        return SchemeHandle("s2-quispel", float(h), field=field,
                            affine=AffineMap3.identity(), cfg=cfg)
    phi_q, Phi_q = derive_s2_potentials(A, h)
    sigma, Sigma = scheme_pair("s2-quispel")
    return SchemeHandle(
        "s2-quispel", float(h), field=field,
        spec=spec_from_quadforms(phi_q, Phi_q, sigma, Sigma),
        affine=assemble_affine(phi_q, Phi_q, sigma, Sigma),
        cfg=cfg,
    )


def make_quispel_corrected(L, h: float, cfg: SolverConfig = DEFAULT_CONFIG,
                           field: Field3 | None = None) -> SchemeHandle:
    return SchemeHandle("quispel-corrected", float(h), field=field,
                        affine=quispel_semi_implicit(L, h, corrected=True), cfg=cfg)


# ---------------------------------------------------------------------------
# Non-preserving baselines.


def make_euler(field: Field3, h: float, cfg: SolverConfig = DEFAULT_CONFIG) -> SchemeHandle:
    """Explicit Euler; the volume-defect negative control."""
    h = float(h)
    if field.linear is not None:
        return SchemeHandle("euler", h, field=field,
                            affine=AffineMap3(np.eye(3) + h * field.linear.A, np.zeros(3)),
                            cfg=cfg)
    return SchemeHandle("euler", h, field=field, cfg=cfg,
                        step_fn=lambda x: np.asarray(x, float) + h * field.a(x))


def make_rk4(field: Field3, h: float, cfg: SolverConfig = DEFAULT_CONFIG) -> SchemeHandle:
    """Classical fourth-order Runge-Kutta baseline."""
    h = float(h)
    if field.linear is not None:
        A = field.linear.A
        M = np.eye(3)
        term = np.eye(3)
        for k in range(1, 5):
            term = term @ (h * A) / k
            M = M + term
        return SchemeHandle("rk4", h, field=field, affine=AffineMap3(M, np.zeros(3)), cfg=cfg)

    def step(x):
        x = np.asarray(x, dtype=float)
        k1 = field.a(x)
        k2 = field.a(x + 0.5 * h * k1)
        k3 = field.a(x + 0.5 * h * k2)
        k4 = field.a(x + h * k3)
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return SchemeHandle("rk4", h, field=field, cfg=cfg, step_fn=step)


# ---------------------------------------------------------------------------
# Registry.


def make_scheme(name: str, field: Field3, h: float,
                cfg: SolverConfig = DEFAULT_CONFIG) -> SchemeHandle:
    """Build a named scheme for a field, choosing the potential pair it needs."""
    if name == "se-se":
        triple = potentials_for(field, (1, 3))
        return make_se_se(triple.F1, triple.F3, h, cfg, field=field)
    if name == "dl-se":
        triple = potentials_for(field, (1, 2))
        return make_dl_se(triple.F1, triple.F2, h, cfg, field=field)
    if name == "dl-dl":
        triple = potentials_for(field, (1, 2))
        return make_dl_dl(triple.F1, triple.F2, h, cfg, field=field)
    if name in ("s1-quispel", "s1-az"):
        return make_s1(field, h, variant=name.split("-", 1)[1], cfg=cfg, field=field)
    if name == "s2-quispel":
        return make_s2(field, h, cfg=cfg, field=field)
    if name == "quispel-corrected":
        return make_quispel_corrected(field, h, cfg=cfg, field=field)
    if name == "euler":
        return make_euler(field, h, cfg)
    if name == "rk4":
        return make_rk4(field, h, cfg)
    raise ConfigError(f"unknown scheme {name!r}; known: {', '.join(SCHEME_NAMES)}")
