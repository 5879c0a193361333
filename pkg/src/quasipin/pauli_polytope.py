"""Generalized Pauli constraints for three fermions in six and seven modes.

A constraint is an affine functional ``kappa0 + sum_i kappa_i lambda_i`` with
integer coefficients that is non-negative on every compatible (ordered,
normalized) spectrum.  The ``(3, 6)`` setting additionally pins three sums of
occupations to one.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import json
import math
from typing import NamedTuple

import numpy as np

from quasipin.spectrum import Spectrum

VALIDITY_TOLERANCE = 1e-10
REDUCTION_RESIDUAL_LIMIT = 0.01


@dataclass(frozen=True)
class LinearConstraint:
    """``kappa0 + kappa . lambda >= 0`` (or ``== 0`` inside ``equalities``)."""

    kappa0: int
    kappa: tuple
    label: str = ""

    def __post_init__(self):
        kappa = tuple(self.kappa)
        for value in (self.kappa0,) + kappa:
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise TypeError("constraint coefficients must be integers")
        kappa = tuple(int(k) for k in kappa)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "kappa0", int(self.kappa0))
        nonzero = [abs(k) for k in (self.kappa0,) + kappa if k]
        if not nonzero:
            raise ValueError("constraint has no nonzero coefficient")
        if math.gcd(*nonzero) != 1:
            raise ValueError("coefficients must be coprime (canonical scaling)")

    @property
    def d(self) -> int:
        return len(self.kappa)

    @property
    def norm(self) -> float:
        """Euclidean norm of ``(kappa_1, ..., kappa_d)``."""
        return math.sqrt(sum(k * k for k in self.kappa))

    def __call__(self, values):
        """Evaluate on the first ``d`` entries of ``values`` (missing ones are zero).

        Works for floats and for exact rationals.
        """
        total = self.kappa0
        for k, v in zip(self.kappa, values):
            if k:
                total = total + k * v
        return total

    def pattern_value(self, occupied) -> int:
        """Eigenvalue of ``kappa0 + sum kappa_k N_k`` on a determinant with the
        given (1-based) occupied orbitals."""
        return self.kappa0 + sum(self.kappa[k - 1] for k in occupied if k <= self.d)

    def to_dict(self):
        return {"label": self.label, "kappa0": self.kappa0, "kappa": list(self.kappa)}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["kappa0"]), tuple(int(k) for k in data["kappa"]), data.get("label", ""))

    def __str__(self):
        terms = [str(self.kappa0)] if self.kappa0 else []
        for i, k in enumerate(self.kappa, start=1):
            if k:
                sign = "+" if k > 0 else "-"
                mag = "" if abs(k) == 1 else f"{abs(k)}*"
                terms.append(f"{sign} {mag}l{i}")
        text = " ".join(terms).lstrip("+ ")
        return f"{self.label}: {text}" if self.label else text


def _unit_constraint(kappa0, plus=(), minus=(), d=6, label=""):
    kappa = [0] * d
    for i in plus:
        kappa[i - 1] += 1
    for i in minus:
        kappa[i - 1] -= 1
    return LinearConstraint(kappa0, tuple(kappa), label)


@dataclass(frozen=True)
class ConstraintSet:
    N: int
    d: int
    constraints: tuple
    equalities: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "equalities", tuple(self.equalities))
        for c in self.constraints + self.equalities:
            if c.d != self.d:
                raise ValueError(f"constraint {c.label!r} has length {c.d}, expected {self.d}")

    def __getitem__(self, label) -> LinearConstraint:
        for c in self.constraints + self.equalities:
            if c.label == label:
                return c
        raise KeyError(label)

    @property
    def labels(self):
        return [c.label for c in self.constraints]

    def to_json(self) -> str:
        doc = {
            "N": self.N,
            "d": self.d,
            "constraints": [c.to_dict() for c in self.constraints],
        }
        if self.equalities:
            doc["equalities"] = [c.to_dict() for c in self.equalities]
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ConstraintSet":
        doc = json.loads(text)
        return cls(
            int(doc["N"]),
            int(doc["d"]),
            tuple(LinearConstraint.from_dict(c) for c in doc["constraints"]),
            tuple(LinearConstraint.from_dict(c) for c in doc.get("equalities", ())),
        )


# lambda_5 + lambda_6 - lambda_4 >= 0
D6 = _unit_constraint(0, plus=(5, 6), minus=(4,), label="D6")
# Same facet written without the pinned equalities: 2 - (l1 + l2 + l4) >= 0.
D6_TRUNCATED = _unit_constraint(2, minus=(1, 2, 4), label="D6")

BORLAND_DENNIS = ConstraintSet(
    N=3,
    d=6,
    constraints=(D6,),
    equalities=(
        _unit_constraint(-1, plus=(1, 6), label="E16"),
        _unit_constraint(-1, plus=(2, 5), label="E25"),
        _unit_constraint(-1, plus=(3, 4), label="E34"),
    ),
)

D7_CONSTRAINTS = (
    _unit_constraint(2, minus=(1, 2, 5, 6), d=7, label="D7_1"),
    _unit_constraint(2, minus=(1, 3, 4, 6), d=7, label="D7_2"),
    _unit_constraint(2, minus=(2, 3, 4, 5), d=7, label="D7_3"),
    _unit_constraint(2, minus=(1, 2, 4, 7), d=7, label="D7_4"),
)
SEVEN_MODE = ConstraintSet(N=3, d=7, constraints=D7_CONSTRAINTS)

# Leading terms of a constraint of the infinite-dimensional setting.
D_INFINITY_PREFIX = _unit_constraint(2, minus=(1, 2, 4, 7, 11, 16), d=16, label="Dinf")


def constraint_set(N: int, d: int) -> ConstraintSet:
    if (N, d) == (3, 6):
        return BORLAND_DENNIS
    if (N, d) == (3, 7):
        return SEVEN_MODE
    raise ValueError(f"no hard-coded constraint set for (N, d) = ({N}, {d})")


@dataclass(frozen=True)
class ValidityReport:
    ordered: bool
    in_range: bool
    normalized: bool
    long_enough: bool
    order_violation: float
    range_violation: float
    trace_error: float

    @property
    def valid(self) -> bool:
        return self.ordered and self.in_range and self.normalized and self.long_enough


def validate_spectrum(spec: Spectrum, d: int, tol: float = VALIDITY_TOLERANCE) -> ValidityReport:
    """Check ``1 >= l1 >= l2 >= ... >= 0``, ``sum = N`` and ``len >= d``."""
    v = np.asarray(spec.values, dtype=float)
    order_violation = float(max(0.0, np.max(np.diff(v), initial=0.0)))
    range_violation = float(max(0.0, np.max(v - 1.0, initial=0.0), np.max(-v, initial=0.0)))
    trace_error = float(abs(v.sum() - spec.particle_count))
    return ValidityReport(
        ordered=order_violation <= tol,
        in_range=range_violation <= tol,
        normalized=trace_error <= tol,
        long_enough=len(v) >= d,
        order_violation=order_violation,
        range_violation=range_violation,
        trace_error=trace_error,
    )


class FacetDistance(NamedTuple):
    label: str
    value: float
    euclidean: float


def _fit_length(values, d):
    v = np.zeros(d)
    m = min(d, len(values))
    v[:m] = values[:m]
    return v


def evaluate_distances(spec: Spectrum, cset: ConstraintSet) -> list:
    """Raw constraint values ``D`` and Euclidean facet distances ``D / |kappa|``.

    The spectrum is truncated to its ``d`` largest entries or zero padded.
    """
    if spec.particle_count != cset.N:
        raise ValueError(f"spectrum has N={spec.particle_count}, constraint set N={cset.N}")
    v = _fit_length(spec.values, cset.d)
    out = []
    for c in cset.constraints:
        value = float(c(v))
        out.append(FacetDistance(c.label, value, value / c.norm))
    return out


@dataclass(frozen=True)
class ReducedPoint:
    """``(lambda_4, lambda_5, lambda_6)`` of a Borland-Dennis spectrum."""

    coords: tuple
    residual: float
    tail: float = 0.0


VERTICES = {
    "a": (Fraction(0), Fraction(0), Fraction(0)),
    "b": (Fraction(1, 2), Fraction(1, 2), Fraction(0)),
    "c": (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)),
    "d": (Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)),
}


def reduced_d6(coords) -> float:
    """``D6`` in reduced coordinates: ``lambda_5 + lambda_6 - lambda_4``."""
    l4, l5, l6 = coords
    return l5 + l6 - l4


def reduce_to_polytope_coords(spec: Spectrum) -> ReducedPoint:
    if len(spec) < 6:
        raise ValueError("need at least six occupation numbers")
    v = spec.values
    residual = float(max(abs(v[0] + v[5] - 1), abs(v[1] + v[4] - 1), abs(v[2] + v[3] - 1)))
    tail = float(np.max(np.abs(v[6:]), initial=0.0))
    if residual > REDUCTION_RESIDUAL_LIMIT:
        raise ValueError(f"pinned-sum residual {residual:.3g} too large for the six-mode reduction")
    if tail > REDUCTION_RESIDUAL_LIMIT:
        raise ValueError(f"occupations beyond lambda_6 reach {tail:.3g}")
    return ReducedPoint((float(v[3]), float(v[4]), float(v[5])), residual, tail)


def embed_with_zeros(spec: Spectrum, d_target: int) -> Spectrum:
    if d_target < len(spec):
        raise ValueError("target dimension smaller than the spectrum")
    return Spectrum(_fit_length(spec.values, d_target), spec.particle_count)


class Restriction(NamedTuple):
    constraint: LinearConstraint
    dropped: tuple  # (index, coefficient) pairs removed, 1-based

    def tail_bound(self, next_occupation: float) -> float:
        """Bound on ``|D - D_restricted|`` given the largest neglected occupation."""
        return sum(abs(k) for _, k in self.dropped) * next_occupation


def restrict_constraint(c: LinearConstraint, d: int) -> Restriction:
    """Restrict a constraint to spectra whose entries beyond ``d`` vanish."""
    if d >= c.d:
        return Restriction(c, ())
    dropped = tuple((i + 1, k) for i, k in enumerate(c.kappa[d:], start=d) if k)
    return Restriction(LinearConstraint(c.kappa0, c.kappa[:d], c.label), dropped)

