"""Group algebra, classification, and condition rendering."""

import itertools

import numpy as np
import pytest

from volform.perm3 import (
    ALL_PERMUTATIONS,
    FLIP,
    IDENTITY,
    Permutation,
    act_vec,
    classify,
    compose,
    enumerate_classes,
    inverse,
    permact,
    render_conditions,
    sign,
)

P = Permutation


def test_compose_examples():
    assert compose(FLIP, FLIP) == IDENTITY
    p = P((2, 3, 1))
    assert compose(p, IDENTITY) == p
    assert compose(p, p) == P((3, 1, 2))


def test_inverse_examples():
    assert inverse(IDENTITY) == IDENTITY
    assert inverse(P((2, 3, 1))) == P((3, 1, 2))
    assert inverse(FLIP) == FLIP


def test_inverse_involution_and_cancellation():
    for p in ALL_PERMUTATIONS:
        assert inverse(inverse(p)) == p
        assert compose(p, inverse(p)) == IDENTITY


def test_sign_examples():
    assert sign(IDENTITY) == 1
    assert sign(P((3, 2, 1))) == -1
    assert sign(P((2, 3, 1))) == 1


def test_act_vec_examples():
    assert np.array_equal(act_vec([7, 8, 9], FLIP), [9, 8, 7])
    x = np.array([0.3, -1.2, 2.5])
    assert np.array_equal(act_vec(x, IDENTITY), x)
    assert np.array_equal(act_vec([1, 2, 3], P((2, 3, 1))), [2, 3, 1])


def test_associativity_all_triples():
    for p, q, r in itertools.product(ALL_PERMUTATIONS, repeat=3):
        assert compose(compose(p, q), r) == compose(p, compose(q, r))


def test_action_composition_all_pairs(rng):
    x = rng.uniform(-5, 5, 3)
    for p, q in itertools.product(ALL_PERMUTATIONS, repeat=2):
        lhs = act_vec(act_vec(x, p), q)
        rhs = act_vec(x, compose(p, q))
        assert np.array_equal(lhs, rhs)


def test_permact_identity_pair(rng):
    f = lambda x: np.array([x[0] ** 2, x[1] + x[2], np.sin(x[2])])
    g = permact(IDENTITY, IDENTITY, f)
    x = rng.uniform(-2, 2, 3)
    assert np.array_equal(g(x), f(x))


def test_permact_on_identity_map(rng):
    for p in ALL_PERMUTATIONS:
        g = permact(p, p, lambda x: x)
        x = rng.uniform(-2, 2, 3)
        assert np.array_equal(g(x), x)


def test_permact_linear_flip_is_reversal_conjugation(rng):
    M = rng.uniform(-1, 1, (3, 3))
    R = np.fliplr(np.eye(3))
    g = permact(FLIP, FLIP, lambda x: M @ x)
    x = rng.uniform(-2, 2, 3)
    assert np.allclose(g(x), (R @ M @ R) @ x, atol=1e-14)


def test_permact_algebra_exact(rng):
    """Conjugating by (rho, rho) composes onto the left of both slots."""
    M = rng.uniform(-1, 1, (3, 3))
    f = lambda x: M @ x
    x = rng.uniform(-2, 2, 3)
    for rho, sigma, Sigma in itertools.product(ALL_PERMUTATIONS, repeat=3):
        lhs = permact(rho, rho, permact(sigma, Sigma, f))(x)
        rhs = permact(compose(rho, sigma), compose(rho, Sigma), f)(x)
        assert np.array_equal(lhs, rhs)


def test_classify_worked_cases():
    sigma = P((3, 2, 1))
    se = classify(sigma, IDENTITY)
    assert se.label == "SE" and sign(se.tau) == -1
    sedl = classify(sigma, P((1, 3, 2)))
    assert sedl.label == "SEDL" and sign(sedl.tau) == 1
    assert classify(sigma, sigma).label == "S1"
    assert classify(sigma, P((3, 1, 2))).label == "DL"
    assert classify(sigma, P((2, 3, 1))).label == "S2"
    for p in ALL_PERMUTATIONS:
        assert classify(p, p).label == "S1"


def test_classify_sign_by_label():
    for sigma, Sigma in itertools.product(ALL_PERMUTATIONS, repeat=2):
        pc = classify(sigma, Sigma)
        if pc.label in ("SE", "DL", "S2"):
            assert sign(pc.tau) == -1
        else:
            assert sign(pc.tau) == 1


def test_classify_left_relabeling_invariance():
    for rho, sigma, Sigma in itertools.product(ALL_PERMUTATIONS, repeat=3):
        a = classify(sigma, Sigma)
        b = classify(compose(rho, sigma), compose(rho, Sigma))
        assert a.label == b.label and a.tau == b.tau


def test_classify_adjunction_symmetry():
    for sigma, Sigma in itertools.product(ALL_PERMUTATIONS, repeat=2):
        assert classify(sigma, Sigma).label == classify(Sigma, sigma).label


def test_reduction_recipe_reaches_canonical_representative():
    from volform.perm3 import CANONICAL_TAU

    for sigma, Sigma in itertools.product(ALL_PERMUTATIONS, repeat=2):
        pc = classify(sigma, Sigma)
        s, S = (Sigma, sigma) if pc.adjoint_flag else (sigma, Sigma)
        rho = pc.relabel
        assert compose(rho, s) == IDENTITY
        assert compose(rho, S) == CANONICAL_TAU[pc.label]


def test_enumerate_classes_partition():
    part = enumerate_classes()
    sizes = {label: len(pairs) for label, pairs in part.items()}
    assert sizes == {"S1": 6, "SE": 6, "DL": 6, "S2": 6, "SEDL": 12}
    assert sum(sizes.values()) == 36
    # The rotation class is exactly the pairs whose tau is a 3-cycle.
    for sigma, Sigma in part["SEDL"]:
        tau = compose(inverse(sigma), Sigma)
        assert tau.image in ((2, 3, 1), (3, 1, 2))
    # Each class is closed under simultaneous left multiplication.
    for label, pairs in part.items():
        pair_set = set(pairs)
        for rho in ALL_PERMUTATIONS:
            for sigma, Sigma in pairs:
                assert (compose(rho, sigma), compose(rho, Sigma)) in pair_set


def test_render_conditions_se_pair():
    block = render_conditions(P((3, 2, 1)), IDENTITY)
    assert "x3 = d[x2] phi(x1, x2, X3)" in block
    assert "X1 = d[X2] Phi(x1, X2, X3)" in block
    assert "d[X3] phi(x1, x2, X3) = d[x1] Phi(x1, X2, X3)" in block


def test_render_conditions_s1_pair():
    block = render_conditions(P((3, 2, 1)), P((3, 2, 1)))
    assert "x3 = d[x2] phi(x1, x2, X1)" in block
    assert "d[X1] phi(x1, x2, X1) = d[x1] Phi(x1, X1, X2)" in block
    assert "X3 = -d[X2] Phi(x1, X1, X2)" in block
    assert "lambda = phi(x1, x2, X1) dx1 + Phi(x1, X1, X2) dX1" in block


def test_render_conditions_s2_pair():
    block = render_conditions(P((3, 2, 1)), P((2, 3, 1)))
    assert "x3 = d[x2] phi(x1, x2, X1)" in block
    assert "X2 = d[X3] Phi(x1, X1, X3)" in block


def test_permutation_parsing():
    assert Permutation.from_string("3,2,1") == FLIP
    with pytest.raises(ValueError):
        Permutation.from_string("1,1,2")
    with pytest.raises(ValueError):
        Permutation.from_string("1,2")
    with pytest.raises(ValueError):
        Permutation.from_string("a,b,c")
    with pytest.raises(ValueError):
        Permutation((1, 1, 2))
