"""Published closed-form coefficient expressions for the S1/S2 potentials.

These are verbatim transcriptions of the printed formulas, kept only as
a comparison fixture: the constructive pipelines in :mod:`.schemes` are
the ground truth, and several printed coefficients are known to disagree
with the derivations (apparent typographical slips, e.g. an a33 where
the construction yields a13, and a dropped factor on one X1*x1 term).
:func:`compare_with_pipeline` reports every discrepancy without judging
the build on it.
"""

from __future__ import annotations

import numpy as np

from .quadcalc import NSYM, QuadForm
from .schemes import derive_s1_potentials, derive_s2_potentials, _as_matrix

__all__ = [
    "s1_quispel_printed",
    "s1_az_printed",
    "s2_quispel_printed",
    "compare_with_pipeline",
    "format_report",
]


def _qf(terms: dict[tuple[int, int], float]) -> QuadForm:
    """Quadratic form from monomial coefficients {(i, j): coeff of s_i s_j}."""
    Q = np.zeros((NSYM, NSYM))
    for (i, j), c in terms.items():
        a, b = i - 1, j - 1
        if a == b:
            Q[a, a] += 2.0 * c
        else:
            Q[a, b] += c
            Q[b, a] += c
    return QuadForm(Q, np.zeros(NSYM), 0.0)


def s1_quispel_printed(L, h: float) -> tuple[QuadForm, QuadForm]:
    """The printed correction-method potentials of class S1, as published."""
    a = _as_matrix(L)
    k1 = 1.0 + h * h * a[0, 0] * a[2, 2] - h * a[1, 1]
    k2 = 1.0 + h * h * a[0, 0] * a[2, 2] / (1.0 - h * a[1, 1])
    # As printed: k3 = h a13 (h a13 + (k2/k1) h a12 a23); the derivation
    # carries h^2 on the second summand instead.
    k3 = h * a[0, 2] * (h * a[0, 2] + (k2 / k1) * h * a[0, 1] * a[1, 2])
    den = h * a[0, 2] + h * h * a[1, 2] * a[0, 1] * k2 / k1
    phi = _qf({
        (2, 4): 1.0 / den,
        (1, 2): -(1.0 + h * a[0, 0] + h * h * a[1, 0] * a[0, 1] * k2 / k1) / den,
        (2, 2): -a[0, 1] / (2.0 * (k1 * a[0, 2] + h * a[1, 2] * a[0, 1] * k2)),
    })
    Phi = _qf({
        (4, 5): -(1.0 + h * a[2, 2]) / (h * a[0, 2]) - h * a[2, 0],
        (1, 5): (1.0 + h * a[0, 0]) * (1.0 + h * a[2, 2]) / (h * a[0, 2]),
        (5, 5): -h * a[2, 1] / 2.0 + a[0, 1] * (1.0 + h * a[2, 2]) / (2.0 * a[0, 2]),
        (1, 4): -1.0 / k3,
        (1, 1): ((1.0 + h * a[0, 0]) * h * a[1, 2] * k2
                 - h * h * a[0, 2] * a[1, 0] * k2) / (2.0 * k3),
    })
    return phi, Phi


def s1_az_printed(L, h: float) -> tuple[QuadForm, QuadForm]:
    """The printed forward-Euler-seeded potentials of class S1, as published.

    Transcribed literally, including the a33 denominators; raises
    ZeroDivisionError when a33 = 0, which is itself evidence of the slip.
    """
    a = _as_matrix(L)
    if a[2, 2] == 0.0:
        raise ZeroDivisionError("printed form divides by a33")
    l1 = 1.0 - h * (a[0, 1] / a[0, 2]) * a[1, 2]
    ratio = a[0, 1] / a[0, 2]
    phi = _qf({
        (2, 4): 1.0 / (h * a[0, 2]),
        (1, 2): -(1.0 + h * a[0, 0]) / (h * a[0, 2]),
        (2, 2): -a[0, 1] / (2.0 * a[0, 2]),
    })
    inner = {
        (4, 5): (1.0 + h * a[2, 2]) / (h * a[2, 2]),
        (1, 5): -(1.0 + h * a[2, 2]) * (1.0 + h * a[0, 0]) / (h * a[2, 2]) + h * a[2, 0],
        (5, 5): -(1.0 + h * a[2, 2]) * ratio / 2.0 + h * a[2, 1] / 2.0 + h * ratio * a[1, 1] / 2.0,
        (1, 4): h * ratio * a[1, 0],
    }
    Phi = _qf({key: -val / l1 for key, val in inner.items()}) + _qf({
        (1, 1): h * a[1, 0] / 2.0 - a[1, 2] * (1.0 + h * a[0, 0]) / (2.0 * a[0, 2]),
        (1, 4): a[1, 2] / a[0, 2],
    })
    return phi, Phi


def s2_quispel_printed(L, h: float) -> tuple[QuadForm, QuadForm]:
    """The printed correction-method potentials of class S2, as published."""
    a = _as_matrix(L)
    m1 = 1.0 - h * a[2, 2] + h * h * a[0, 0] * a[1, 1]
    m2 = 1.0 + h * h * a[0, 0] * a[1, 1] / (1.0 - h * a[2, 2])
    phi = _qf({
        (2, 4): m1 / (h * a[0, 2]),
        (1, 2): (-m1 * (1.0 + h * a[0, 0]) - h * h * a[2, 0] * a[0, 2] * m2) / (h * a[0, 2]),
        (2, 2): -m1 * a[0, 1] / (2.0 * a[0, 2]) - h * a[2, 1] * m2 / 2.0,
    })
    Phi = _qf({
        (4, 6): (1.0 + h * a[1, 1]) / (h * a[0, 1]) + h * a[1, 0],
        (1, 6): -(1.0 + h * a[1, 1]) * (1.0 + h * a[0, 0]) / (h * a[0, 1]),
        (6, 6): -a[0, 2] * (1.0 + h * a[1, 1]) / (2.0 * a[0, 1]) + h * a[1, 2] / 2.0,
        (1, 4): m1 / (h * h * a[0, 1] * a[0, 2]),
        (1, 1): -m1 * (1.0 + h * a[0, 0]) / (2.0 * h * h * a[0, 1] * a[0, 2]),
    })
    return phi, Phi


def _coeff_diff(q1: QuadForm, q2: QuadForm) -> float:
    scale = max(1.0, float(np.abs(q1.Q).max()), float(np.abs(q2.Q).max()))
    dq = float(np.abs(q1.Q - q2.Q).max())
    db = float(np.abs(q1.b - q2.b).max())
    return max(dq, db, abs(q1.c - q2.c)) / scale


def compare_with_pipeline(L, h: float, rtol: float = 1e-9) -> dict:
    """Coefficient-level diff of the printed formulas against the pipelines.

    Returns one entry per variant with the relative deviations of phi and
    Phi and a ``matches`` flag; a variant whose printed form is singular
    for this matrix is reported as such.
    """
    report: dict[str, dict] = {}
    cases = {
        "s1-quispel": (s1_quispel_printed, lambda: derive_s1_potentials(L, h, "quispel")),
        "s1-az": (s1_az_printed, lambda: derive_s1_potentials(L, h, "az")),
        "s2-quispel": (s2_quispel_printed, lambda: derive_s2_potentials(L, h)),
    }
    for name, (printed_fn, pipeline_fn) in cases.items():
        entry: dict = {}
        try:
            phi_p, Phi_p = printed_fn(L, h)
        except ZeroDivisionError as exc:
            entry["singular"] = str(exc)
            report[name] = entry
            continue
        phi_d, Phi_d = pipeline_fn()
        entry["phi_dev"] = _coeff_diff(phi_p, phi_d)
        entry["Phi_dev"] = _coeff_diff(Phi_p, Phi_d)
        entry["matches"] = entry["phi_dev"] <= rtol and entry["Phi_dev"] <= rtol
        report[name] = entry
    return report


def format_report(report: dict) -> str:
    lines = ["printed-vs-derived potential coefficients:"]
    for name, entry in report.items():
        if "singular" in entry:
            lines.append(f"  {name}: printed form singular ({entry['singular']})")
            continue
        status = "match" if entry["matches"] else "MISMATCH"
        lines.append(
            f"  {name}: phi dev {entry['phi_dev']:.3e}, "
            f"Phi dev {entry['Phi_dev']:.3e} -> {status}"
        )
    return "\n".join(lines)
