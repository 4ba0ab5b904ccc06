"""The implicit engine: solves, conjugation, adjoints, diagnostics."""

import numpy as np
import pytest

from volform.errors import NewtonDivergenceError, TwistViolationError
from volform.fields import LinearField
from volform.genmap import (
    GeneratingFormSpec,
    PotentialFn,
    SolverConfig,
    adjoint,
    base_step,
    permuted_step,
    twist_report,
)
from volform.perm3 import IDENTITY, Permutation
from volform.schemes import make_scheme, make_s1
from volform.verify import det3, jacobian_fd
from tests.conftest import admissible_tracefree


def bilinear_uv():
    """phi(u, v, w) = u v."""
    return PotentialFn(
        lambda y: y[0] * y[1],
        lambda y: np.array([y[1], y[0], 0.0]),
        lambda y: np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    )


def bilinear_vw():
    """Phi(u, v, w) = v w."""
    return PotentialFn(
        lambda y: y[1] * y[2],
        lambda y: np.array([0.0, y[2], y[1]]),
        lambda y: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
    )


def test_base_step_reversal_example(rng):
    y = rng.uniform(-2, 2, 3)
    Y = base_step(bilinear_uv(), bilinear_vw(), -1, y)
    assert np.allclose(Y, y[::-1], atol=1e-12)


def test_permuted_step_identity_pair_equals_base(rng):
    spec = GeneratingFormSpec(bilinear_uv(), bilinear_vw(), -1, IDENTITY, IDENTITY)
    y = rng.uniform(-2, 2, 3)
    assert np.allclose(permuted_step(spec, y),
                       base_step(spec.phi, spec.Phi, spec.eps, y), atol=1e-14)


def test_se_pair_with_zero_potentials_is_identity(rng):
    spec = GeneratingFormSpec(bilinear_uv(), bilinear_vw(), -1,
                              Permutation((3, 2, 1)), IDENTITY)
    x = rng.uniform(-2, 2, 3)
    assert np.allclose(permuted_step(spec, x), x, atol=1e-14)


def test_engine_matches_assembled_affine_s1(rng, test_matrix):
    handle = make_s1(LinearField(test_matrix), 0.1)
    for _ in range(10):
        x = rng.uniform(-1, 1, 3)
        assert np.abs(permuted_step(handle.spec, x) - handle.affine(x)).max() < 1e-10


def test_volume_preservation_fd(rng, test_field):
    from volform.fields import builtin

    abc = builtin("abc", A=1.0, B=0.7, C=0.43)
    for field, tol in ((test_field, 1e-10), (abc, 1e-6)):
        handle = make_scheme("se-se", field, 0.05)
        for _ in range(5):
            x = rng.uniform(-1, 1, 3)
            J = jacobian_fd(lambda p: permuted_step(handle.spec, p), x)
            assert abs(det3(J) - 1.0) < tol


def test_adjoint_inverts(rng):
    for _ in range(5):
        A = admissible_tracefree(rng)
        handle = make_scheme("se-se", LinearField(A).field3(), 0.1)
        adj = adjoint(handle.spec)
        x = rng.uniform(-1, 1, 3)
        y = permuted_step(handle.spec, x)
        assert np.abs(permuted_step(adj, y) - x).max() <= 10 * handle.cfg.newton_tol


def test_adjoint_involution(rng, test_matrix):
    handle = make_s1(LinearField(test_matrix), 0.1)
    spec2 = adjoint(adjoint(handle.spec))
    for _ in range(5):
        x = rng.uniform(-1, 1, 3)
        assert np.allclose(permuted_step(spec2, x), permuted_step(handle.spec, x),
                           atol=1e-11)


def test_adjoint_of_identity_generator(rng):
    spec = GeneratingFormSpec(bilinear_uv(), bilinear_vw(), -1,
                              Permutation((3, 2, 1)), IDENTITY)
    adj = adjoint(spec)
    x = rng.uniform(-2, 2, 3)
    assert np.allclose(permuted_step(adj, x), x, atol=1e-13)


def test_adjoint_affine_matrices_are_inverse(rng, test_matrix):
    """Adjoint of an se-se spec steps with the inverse matrix."""
    handle = make_scheme("se-se", LinearField(test_matrix).field3(), 0.1)
    adj = adjoint(handle.spec)
    J_fwd = handle.affine.M
    J_adj = jacobian_fd(lambda p: permuted_step(adj, p), rng.uniform(-0.5, 0.5, 3))
    assert np.allclose(J_adj @ J_fwd, np.eye(3), atol=1e-6)
    assert abs(det3(J_fwd) - 1.0) < 1e-12


def test_base_level_inverse_property(rng, test_field):
    """The swapped-and-reversed potentials invert the base map directly."""
    handle = make_scheme("s2-quispel", test_field, 0.1)
    spec, adj = handle.spec, adjoint(handle.spec)
    for _ in range(10):
        y = rng.uniform(-1, 1, 3)
        Y = base_step(spec.phi, spec.Phi, spec.eps, y, handle.cfg)
        back = base_step(adj.phi, adj.Phi, adj.eps, Y, handle.cfg)
        assert np.abs(back - y).max() <= 10 * handle.cfg.newton_tol


def test_relabeling_conjugation_of_specs(rng, test_field):
    """With potentials fixed, conjugating the pair by (rho, rho) equals
    composing rho onto the left of both permutations."""
    from volform.perm3 import ALL_PERMUTATIONS, act_vec, compose, inverse as p_inv

    handle = make_scheme("se-se", test_field, 0.1)
    spec = handle.spec
    x = rng.uniform(-1, 1, 3)
    for rho in ALL_PERMUTATIONS:
        conjugated = GeneratingFormSpec(
            spec.phi, spec.Phi, spec.eps,
            compose(rho, spec.sigma), compose(rho, spec.Sigma))
        lhs = permuted_step(conjugated, x, handle.cfg)
        rhs = act_vec(permuted_step(spec, act_vec(x, rho), handle.cfg), p_inv(rho))
        assert np.abs(lhs - rhs).max() < 1e-12


def test_relabeled_spec_consistent_with_relabeled_field(rng, test_matrix):
    """The conjugated spec integrates the relabeled field at first order."""
    from volform.perm3 import Permutation, act_vec, compose
    from volform.verify import observed_order

    rho = Permutation((2, 3, 1))
    R = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])  # act_vec matrix
    assert np.array_equal(R @ np.array([7.0, 8.0, 9.0]), act_vec([7, 8, 9], rho))
    A_rel = R.T @ test_matrix @ R  # the (rho, rho)-conjugated linear field
    rel_field = LinearField(A_rel).field3()

    def factory(h):
        base = make_scheme("se-se", LinearField(test_matrix).field3(), h)
        spec = GeneratingFormSpec(
            base.spec.phi, base.spec.Phi, base.spec.eps,
            compose(rho, base.spec.sigma), compose(rho, base.spec.Sigma))
        return lambda x: permuted_step(spec, x, base.cfg)

    rep = observed_order(factory, rel_field, [0.3, -0.2, 0.5], 1.0,
                         [0.1, 0.05, 0.025])
    assert 0.85 <= rep.slope <= 1.15


def test_twist_report_healthy():
    spec = GeneratingFormSpec(bilinear_uv(), bilinear_vw(), -1, IDENTITY, IDENTITY)
    rep = twist_report(spec, [0.3, 0.4, 0.5])
    assert rep.d21_phi == pytest.approx(1.0)
    assert rep.d32_Phi == pytest.approx(1.0)
    assert not rep.degenerate


def test_twist_report_degenerate():
    flat = PotentialFn(
        lambda y: 0.5 * y[1] ** 2,
        lambda y: np.array([0.0, y[1], 0.0]),
        lambda y: np.diag([0.0, 1.0, 0.0]),
    )
    spec = GeneratingFormSpec(flat, bilinear_vw(), -1, IDENTITY, IDENTITY)
    rep = twist_report(spec, [0.3, 0.4, 0.5])
    assert rep.d21_phi == 0.0
    assert rep.degenerate


def test_twist_blowup_as_h_shrinks(test_matrix):
    """The special-class twist scales like 1/h near the identity limit."""
    L = LinearField(test_matrix)
    values = {}
    for h in (0.1, 0.01):
        rep = twist_report(make_s1(L, h).spec, [0.2, 0.1, -0.3])
        values[h] = abs(rep.d21_phi)
    assert values[0.01] / values[0.1] == pytest.approx(10.0, rel=0.3)


def test_twist_violation_raised():
    flat = PotentialFn(
        lambda y: 0.5 * y[1] ** 2,
        lambda y: np.array([0.0, y[1], 0.0]),
        lambda y: np.diag([0.0, 1.0, 0.0]),
    )
    cfg = SolverConfig(bracket_fallback=False)
    with pytest.raises(TwistViolationError) as err:
        base_step(flat, bilinear_vw(), -1, [1.0, 0.4, 0.5], cfg)
    assert "phi" in str(err.value)


def test_newton_divergence_raised():
    # d2 phi(u, 1, w) = u^3 - 2u + 2 two-cycles Newton between 0 and 1;
    # with the bracket fallback disabled the iteration budget runs out.
    cycler = PotentialFn(
        lambda y: y[1] * (y[0] ** 3 - 2.0 * y[0] + 2.0),
        lambda y: np.array([
            y[1] * (3.0 * y[0] ** 2 - 2.0),
            y[0] ** 3 - 2.0 * y[0] + 2.0,
            0.0,
        ]),
    )
    cfg = SolverConfig(max_iter=20, bracket_fallback=False)
    with pytest.raises(NewtonDivergenceError) as err:
        base_step(cycler, bilinear_vw(), -1, [0.0, 1.0, 0.0], cfg)
    assert "equation 1" in str(err.value)


def test_bracket_fallback_solves_flat_newton():
    # g(u) = u^3 - y1 stalls plain Newton at the inflection; the
    # expanding-bracket bisection still finds the root.
    cubic = PotentialFn(
        lambda y: 0.25 * y[0] ** 3 * y[1],
        lambda y: np.array([0.75 * y[0] ** 2 * y[1], 0.25 * y[0] ** 3, 0.0]),
    )
    cfg = SolverConfig(max_iter=4, bracket_fallback=True, newton_tol=1e-9)
    Y = base_step(cubic, bilinear_vw(), -1, [2.0, 1.0, 0.0], cfg)
    assert 0.25 * Y[2] ** 3 == pytest.approx(2.0, abs=1e-8)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(newton_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        GeneratingFormSpec(bilinear_uv(), bilinear_vw(), 2, IDENTITY, IDENTITY)


def test_potentialfn_fd_hessian_matches_analytic(rng):
    p = bilinear_uv()
    fd = PotentialFn(p._value, p._grad)  # no analytic hessian
    y = rng.uniform(-1, 1, 3)
    assert np.allclose(fd.hess(y), p.hess(y), atol=1e-5)
