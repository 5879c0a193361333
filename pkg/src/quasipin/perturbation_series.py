"""Weak-coupling expansion of the N = 3 occupation numbers in exact rationals.

Only even powers of ``delta`` occur and the table stops at ``delta^8``;
``lambda_8`` and beyond are ``O(delta^10)`` and therefore zero here.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import json
import numbers
import warnings

from quasipin.pauli_polytope import D6, SEVEN_MODE, LinearConstraint
from quasipin.spectrum import Spectrum

MAX_ORDER = 8
SMALL_COUPLING = Fraction(1, 2)

# delta^8 coefficients of the five pinning distances.
EXPECTED_ZETA = {
    "D6": Fraction(4510, 59049),
    "D7_1": Fraction(20, 2187),
    "D7_2": Fraction(10, 243),
    "D7_3": Fraction(50, 2187),
    "D7_4": Fraction(2890, 59049),
}


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, numbers.Rational):
        return Fraction(value)
    return Fraction(float(value))


@dataclass(frozen=True)
class RationalSeries:
    """``constant + sum_p coefficients[p] * delta**p`` with even ``p <= 8``."""

    constant: Fraction = Fraction(0)
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "constant", _as_fraction(self.constant))
        clean = {}
        for power, coeff in self.coefficients.items():
            power = int(power)
            if power <= 0 or power % 2 or power > MAX_ORDER:
                raise ValueError(f"exponent {power} not an even power in 2..{MAX_ORDER}")
            coeff = _as_fraction(coeff)
            if coeff:
                clean[power] = coeff
        object.__setattr__(self, "coefficients", dict(sorted(clean.items())))

    def coefficient(self, power: int) -> Fraction:
        if power == 0:
            return self.constant
        return self.coefficients.get(power, Fraction(0))

    @property
    def leading_exponent(self):
        """Smallest power with a nonzero coefficient (``None`` for a constant)."""
        return min(self.coefficients) if self.coefficients else None

    def __call__(self, delta) -> Fraction:
        x = _as_fraction(delta)
        return self.constant + sum((c * x**p for p, c in self.coefficients.items()), Fraction(0))

    def _combine(self, other, sign):
        if isinstance(other, numbers.Rational):
            other = RationalSeries(Fraction(other))
        powers = set(self.coefficients) | set(other.coefficients)
        return RationalSeries(
            self.constant + sign * other.constant,
            {p: self.coefficient(p) + sign * other.coefficient(p) for p in powers},
        )

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return RationalSeries(Fraction(other)) - self

    def __neg__(self):
        return 0 - self

    def __mul__(self, scalar):
        if not isinstance(scalar, numbers.Rational):
            return NotImplemented
        s = Fraction(scalar)
        return RationalSeries(self.constant * s, {p: c * s for p, c in self.coefficients.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, RationalSeries):
            return NotImplemented
        return self.constant == other.constant and self.coefficients == other.coefficients

    def __hash__(self):
        return hash((self.constant, tuple(self.coefficients.items())))

    def __str__(self):
        terms = []
        if self.constant or not self.coefficients:
            terms.append(str(self.constant))
        for p, c in self.coefficients.items():
            sign = "-" if c < 0 else "+"
            terms.append(f"{sign} {abs(c)} * delta^{p}")
        return " ".join(terms).lstrip("+ ")

    def to_dict(self):
        return {
            "constant": [self.constant.numerator, self.constant.denominator],
            "terms": {str(p): [c.numerator, c.denominator] for p, c in self.coefficients.items()},
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            Fraction(*data["constant"]),
            {int(p): Fraction(*nd) for p, nd in data["terms"].items()},
        )


def _series(*terms):
    return RationalSeries(0, {4 + 2 * i: Fraction(t) for i, t in enumerate(terms) if t})


# Coefficients of delta^4, delta^6, delta^8.  The first three rows are
# tabulated as 1 - lambda_k and converted once here.
_TABLE = (
    1 - _series(0, "40/729", "-1390/59049"),
    1 - _series("2/9", "-232/729", "3926/10935"),
    1 - _series("2/9", "-64/243", "81902/295245"),
    _series("2/9", "-64/243", "73802/295245"),
    _series("2/9", "-232/729", "3976/10935"),
    _series(0, "40/729", "-2200/59049"),
    _series(0, 0, "80/2187"),
    RationalSeries(),
)


def spectrum_series_table() -> tuple:
    """Series for ``lambda_1 ... lambda_8`` of the three-fermion ground state."""
    return _TABLE


def eval_spectrum_series(delta) -> Spectrum:
    """Evaluate the table at ``delta`` exactly, then convert to floats.

    No renormalization: the truncated spectrum sums to 3 only up to
    ``O(delta^10)``.
    """
    x = _as_fraction(delta)
    if abs(x) > SMALL_COUPLING:
        warnings.warn(f"|delta| = {float(abs(x))} lies outside the weak-coupling regime |delta| <= 1/2")
    return Spectrum([float(s(x)) for s in _TABLE], 3)


def constraint_series(constraint: LinearConstraint, table=None) -> RationalSeries:
    """Substitute the occupation series into ``kappa0 + sum kappa_i lambda_i``."""
    table = spectrum_series_table() if table is None else table
    if constraint.d > len(table):
        raise ValueError(f"constraint needs {constraint.d} occupations, table has {len(table)}")
    total = RationalSeries(constraint.kappa0)
    for k, series in zip(constraint.kappa, table):
        if k:
            total = total + k * series
    return total


def pinning_constraints() -> tuple:
    """The five constraints whose distances start at ``delta^8``."""
    return (D6,) + SEVEN_MODE.constraints


def hierarchy_exponent(k: int) -> int:
    """Leading power of ``delta`` in ``lambda_k`` for ``4 <= k <= 8``."""
    if not 4 <= k <= 8:
        raise ValueError("hierarchy exponent defined for 4 <= k <= 8")
    return max(4, 2 * k - 6)


def series_json(table=None) -> str:
    table = spectrum_series_table() if table is None else table
    return json.dumps(
        {"series": [dict(label=f"l{k}", **s.to_dict()) for k, s in enumerate(table, start=1)]},
        indent=2,
    )

