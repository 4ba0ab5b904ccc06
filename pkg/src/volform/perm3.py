"""The symmetric group on {1,2,3} and the case-reduction algebra.

A pair of permutations (sigma, Sigma) selects which coordinates play the
three roles in the defining equations of an implicit one-step map.  All
36 pairs fall into five classes under simultaneous relabeling and
adjunction; this module computes the class, the reduction recipe, and a
readable rendering of the determining/compatibility/twist conditions for
any pair.

Role convention: a permutation maps role slot -> coordinate index, with
slots ordered (+, o, -) = (1, 2, 3).  Under this encoding the worked
splitting case has sigma = (3,2,1) ("minus role on coordinate 1") and
Sigma = identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Permutation",
    "PairClass",
    "IDENTITY",
    "FLIP",
    "ALL_PERMUTATIONS",
    "compose",
    "inverse",
    "sign",
    "act_vec",
    "permact",
    "classify",
    "enumerate_classes",
    "render_conditions",
    "CLASS_LABELS",
]

CLASS_LABELS = ("S1", "SE", "DL", "S2", "SEDL")


@dataclass(frozen=True)
class Permutation:
    """A bijection of {1,2,3}, stored as the image tuple (p(1), p(2), p(3))."""

    image: tuple[int, int, int]

    def __post_init__(self):
        if sorted(self.image) != [1, 2, 3]:
            raise ValueError(f"{self.image!r} is not a permutation of (1, 2, 3)")
        object.__setattr__(self, "image", tuple(int(i) for i in self.image))

    def __call__(self, i: int) -> int:
        """Image of the 1-based index i."""
        return self.image[i - 1]

    def __repr__(self):
        return f"Permutation({self.image[0]},{self.image[1]},{self.image[2]})"

    def __str__(self):
        return ",".join(str(i) for i in self.image)

    @classmethod
    def from_string(cls, text: str) -> "Permutation":
        """Parse the textual form "a,b,c", e.g. "3,2,1"."""
        try:
            parts = tuple(int(p) for p in text.split(","))
        except ValueError:
            raise ValueError(f"cannot parse permutation from {text!r}") from None
        if len(parts) != 3 or sorted(parts) != [1, 2, 3]:
            raise ValueError(f"{text!r} is not a permutation of 1,2,3")
        return cls(parts)


IDENTITY = Permutation((1, 2, 3))
#: The argument reversal u <-> w; the only relabeling used by adjunction.
FLIP = Permutation((3, 2, 1))

ALL_PERMUTATIONS = tuple(
    Permutation(img) for img in itertools.permutations((1, 2, 3))
)


def compose(p: Permutation, q: Permutation) -> Permutation:
    """(p o q)(i) = p(q(i))."""
    return Permutation(tuple(p(q(i)) for i in (1, 2, 3)))


def inverse(p: Permutation) -> Permutation:
    img = [0, 0, 0]
    for i in (1, 2, 3):
        img[p(i) - 1] = i
    return Permutation(tuple(img))


def sign(p: Permutation) -> int:
    """Parity: +1 for even permutations, -1 for odd."""
    inversions = sum(
        1
        for i, j in itertools.combinations((1, 2, 3), 2)
        if p(i) > p(j)
    )
    return -1 if inversions % 2 else 1


def act_vec(x, p: Permutation) -> np.ndarray:
    """Right action on points: (x . p)_i = x_{p(i)}."""
    x = np.asarray(x, dtype=float)
    return np.array([x[p(1) - 1], x[p(2) - 1], x[p(3) - 1]])


def permact(p: Permutation, P: Permutation, f):
    """Conjugate a map f: R^3 -> R^3 by the pair (p, P).

    The returned map sends x to f(x . p) . P^{-1}.
    """
    P_inv = inverse(P)

    def conjugated(x):
        return act_vec(f(act_vec(x, p)), P_inv)

    return conjugated


# tau -> class label.  The identity is the trivial class; the reversal
# (3,2,1) fixes the middle role; (1,3,2) fixes role + and (2,1,3) fixes
# role -; the two 3-cycles are a single class because adjunction maps
# each onto the other.
_LABEL_OF_TAU = {
    (1, 2, 3): "S1",
    (3, 2, 1): "SE",
    (1, 3, 2): "DL",
    (2, 1, 3): "S2",
    (2, 3, 1): "SEDL",
    (3, 1, 2): "SEDL",
}

#: Canonical (identity, tau*) representative per class.
CANONICAL_TAU = {
    "S1": Permutation((1, 2, 3)),
    "SE": Permutation((3, 2, 1)),
    "DL": Permutation((1, 3, 2)),
    "S2": Permutation((2, 1, 3)),
    "SEDL": Permutation((2, 3, 1)),
}


@dataclass(frozen=True)
class PairClass:
    """Classification of a pair (sigma, Sigma) with its reduction recipe.

    ``tau`` is sigma^{-1} o Sigma, the relabeling invariant.  ``relabel``
    is the rho with (rho sigma, rho Sigma) equal to the canonical
    representative; when ``adjoint_flag`` is set the pair is first swapped
    to (Sigma, sigma) (the adjoint method) before relabeling.
    """

    label: str
    tau: Permutation
    relabel: Permutation
    adjoint_flag: bool


def classify(sigma: Permutation, Sigma: Permutation) -> PairClass:
    """Assign (sigma, Sigma) to one of the five classes."""
    tau = compose(inverse(sigma), Sigma)
    label = _LABEL_OF_TAU[tau.image]
    adjoint_flag = tau.image == (3, 1, 2)
    relabel = inverse(Sigma) if adjoint_flag else inverse(sigma)
    return PairClass(label=label, tau=tau, relabel=relabel, adjoint_flag=adjoint_flag)


def enumerate_classes() -> dict[str, list[tuple[Permutation, Permutation]]]:
    """Partition all 36 pairs by class label."""
    partition: dict[str, list[tuple[Permutation, Permutation]]] = {
        label: [] for label in CLASS_LABELS
    }
    for sigma in ALL_PERMUTATIONS:
        for Sigma in ALL_PERMUTATIONS:
            partition[classify(sigma, Sigma).label].append((sigma, Sigma))
    return partition


def _role_names(sigma: Permutation, Sigma: Permutation):
    """Variable names filling the six roles (x+, xo, x-, X+, Xo, X-)."""
    xs = tuple(f"x{sigma(i)}" for i in (1, 2, 3))
    Xs = tuple(f"X{Sigma(i)}" for i in (1, 2, 3))
    return xs, Xs


def _sorted_args(names):
    """Display order: lowercase variables by index, then uppercase."""
    return ", ".join(sorted(names, key=lambda s: (s[0].isupper(), s[1])))


def render_conditions(sigma: Permutation, Sigma: Permutation) -> str:
    """Human-readable equation block for the pair's implicit map.

    Lists the generating one-form, the two determining conditions, the
    compatibility condition, and the twist conditions, with the potential
    arguments spelled out in the permuted coordinates.
    """
    (xp, xo, xm), (Xp, Xo, Xm) = _role_names(sigma, Sigma)
    tau_sign = sign(classify(sigma, Sigma).tau)
    phi_args = _sorted_args((xm, xo, Xm))
    Phi_args = _sorted_args((xm, Xm, Xo))
    sgn = "-" if tau_sign > 0 else ""
    lines = [
        f"lambda = phi({phi_args}) d{xm} + Phi({Phi_args}) d{Xm}",
        f"{xp} = d[{xo}] phi({phi_args})",
        f"d[{Xm}] phi({phi_args}) = d[{xm}] Phi({Phi_args})",
        f"{Xp} = {sgn}d[{Xo}] Phi({Phi_args})",
        f"twist: d2[{xo},{Xm}] phi != 0,  d2[{xm},{Xo}] Phi != 0",
    ]
    return "\n".join(lines)
