"""Shared fixtures: admissible linear fields and seeded samplers."""

import numpy as np
import pytest

from volform.fields import LinearField


def tracefree(rng, norm=1.0):
    """Random trace-free matrix scaled to the given spectral norm."""
    A = rng.uniform(-1.0, 1.0, (3, 3))
    A[2, 2] = -(A[0, 0] + A[1, 1])
    return A / np.linalg.norm(A, 2) * norm


def admissible_tracefree(rng, h=0.1, norm=1.0, min_a13=0.1, min_a12=0.1):
    """Trace-free matrix admissible for every linear-field scheme at step h.

    Enforces the twist entries a13 and a12 and keeps all construction
    denominators (k1, l1, m1, 1 - h a22, 1 - h a33) away from zero.
    """
    while True:
        A = tracefree(rng, norm=norm)
        if abs(A[0, 2]) < min_a13 or abs(A[0, 1]) < min_a12:
            continue
        k1 = 1.0 - h * A[1, 1] + h * h * A[0, 0] * A[2, 2]
        m1 = 1.0 - h * A[2, 2] + h * h * A[0, 0] * A[1, 1]
        l1 = 1.0 - h * (A[0, 1] / A[0, 2]) * A[1, 2]
        denominators = (k1, m1, l1, 1.0 - h * A[1, 1], 1.0 - h * A[2, 2])
        if min(abs(d) for d in denominators) < 0.1:
            continue
        return A


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture
def test_matrix():
    """A fixed admissible trace-free matrix (a13, a12, a23 all nonzero)."""
    A = np.array([
        [0.3, 0.8, 0.7],
        [0.5, -0.1, 0.6],
        [0.4, 0.9, -0.2],
    ])
    return A / np.linalg.norm(A, 2) * 0.9


@pytest.fixture
def test_field(test_matrix):
    return LinearField(test_matrix).field3()
