"""Finite fermionic spaces: Slater determinants, 1-RDMs and natural orbitals.

Orbitals are labelled ``1..d``.  A determinant is stored under its strictly
increasing index tuple; building a state from unsorted tuples applies the
permutation sign once, at construction, and :func:`one_rdm` applies the signs
of ``a_l^dagger a_k``.  Those two places are the only sources of fermionic
signs.

The one-particle density matrix is ``rho[k, l] = <Psi| a_l^dagger a_k |Psi>``
so that its diagonal holds ``lambda_k = sum_{i contains k} |c_i|^2``.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import itertools
import json
import math
from typing import NamedTuple, Optional

import numpy as np

from quasipin.pauli_polytope import BORLAND_DENNIS, D6, LinearConstraint
from quasipin.spectrum import Spectrum

NORM_TOLERANCE = 1e-10
ALIGNMENT_TOLERANCE = 1e-8
DEGENERACY_GAP = 1e-8
BOUND_SLACK = 1e-12
STRUCTURE_TOLERANCE = 1e-10
THEOREM4_MARGIN = 1e-9

# Determinants of the three-fermion, six-mode space with one orbital from
# each of {1,6}, {2,5}, {3,4}, keyed by the amplitude names of the standard
# parameterization.  "eta" is the |2,3,6> amplitude (often written delta,
# renamed to keep it apart from the coupling).
BD_FAMILY = {
    "alpha": (1, 2, 3),
    "beta": (1, 2, 4),
    "gamma": (1, 3, 5),
    "eta": (2, 3, 6),
    "nu": (1, 4, 5),
    "mu": (2, 4, 6),
    "xi": (3, 5, 6),
    "zeta": (4, 5, 6),
}
PINNED_FAMILY = ((1, 2, 3), (1, 4, 5), (2, 4, 6))


def permutation_sign(seq) -> int:
    """Sign of the permutation sorting ``seq``; zero if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class SlaterBasis:
    N: int
    d: int

    def __post_init__(self):
        if not 1 <= self.N <= self.d:
            raise ValueError("need 1 <= N <= d")

    @cached_property
    def index_tuples(self) -> tuple:
        return tuple(itertools.combinations(range(1, self.d + 1), self.N))

    @cached_property
    def position(self) -> dict:
        return {t: i for i, t in enumerate(self.index_tuples)}

    def __len__(self):
        return math.comb(self.d, self.N)

    def index(self, occupied) -> int:
        return self.position[tuple(occupied)]

    @cached_property
    def _transitions(self):
        # rho[k, l] += sign * c[src] * conj(c[dst]) with dst = src - {k} + {l}.
        src, dst, slot, sign = [], [], [], []
        for i, occ in enumerate(self.index_tuples):
            for p, k in enumerate(occ):
                rest = occ[:p] + occ[p + 1:]
                for l in range(1, self.d + 1):
                    if l in rest:
                        continue
                    q = sum(1 for r in rest if r < l)
                    target = tuple(sorted(rest + (l,)))
                    src.append(i)
                    dst.append(self.position[target])
                    slot.append((k - 1) * self.d + (l - 1))
                    sign.append(-1.0 if (p + q) % 2 else 1.0)
        incidence = np.zeros((len(src), self.d * self.d))
        incidence[np.arange(len(src)), slot] = 1.0
        return np.array(src), np.array(dst), np.array(sign), incidence

    @cached_property
    def _minor_index(self):
        t = np.array(self.index_tuples) - 1
        return t[:, None, :, None], t[None, :, None, :]


@lru_cache(maxsize=None)
def slater_basis(N: int, d: int) -> SlaterBasis:
    return SlaterBasis(N, d)


@dataclass(frozen=True)
class WedgeState:
    """``sum_i c_i |i>`` with ``coefficients`` aligned to ``basis.index_tuples``."""

    basis: SlaterBasis
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        if c.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_amplitudes(cls, basis: SlaterBasis, amplitudes: dict, normalize: bool = False):
        """Build from ``{orbital tuple: amplitude}``; unsorted tuples pick up
        their permutation sign."""
        c = np.zeros(len(basis), dtype=complex)
        for occ, amp in amplitudes.items():
            occ = tuple(int(k) for k in occ)
            sign = permutation_sign(occ)
            if sign == 0:
                raise ValueError(f"orbital tuple {occ} repeats an orbital")
            c[basis.index(sorted(occ))] += sign * amp
        if normalize:
            c = c / np.linalg.norm(c)
        return cls(basis, c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def amplitude(self, occupied) -> complex:
        occ = tuple(occupied)
        sign = permutation_sign(occ)
        return sign * self.coefficients[self.basis.index(sorted(occ))] if sign else 0.0

    def weight(self, tuples) -> float:
        """Total ``|c_i|^2`` over the given sorted tuples."""
        idx = [self.basis.index(t) for t in tuples]
        return float(np.sum(np.abs(self.coefficients[idx]) ** 2))

    def to_json(self) -> str:
        amps = [
            {"tuple": list(t), "re": float(c.real), "im": float(c.imag)}
            for t, c in zip(self.basis.index_tuples, self.coefficients)
            if c != 0
        ]
        return json.dumps({"N": self.basis.N, "d": self.basis.d, "amplitudes": amps})

    @classmethod
    def from_json(cls, text: str) -> "WedgeState":
        doc = json.loads(text)
        basis = slater_basis(int(doc["N"]), int(doc["d"]))
        return cls.from_amplitudes(
            basis, {tuple(a["tuple"]): complex(a["re"], a["im"]) for a in doc["amplitudes"]}
        )


@dataclass(frozen=True)
class OneRdm:
    matrix: np.ndarray
    N: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if np.abs(m - m.conj().T).max(initial=0.0) > 1e-13:
            raise ValueError("1-RDM is not Hermitian")
        if abs(np.trace(m).real - self.N) > 1e-12:
            raise ValueError(f"1-RDM trace {np.trace(m).real} differs from N={self.N}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def occupations(self) -> np.ndarray:
        """Diagonal entries ``<k|rho|k>``."""
        return np.diag(self.matrix).real.copy()

    @property
    def off_diagonal(self) -> float:
        m = self.matrix
        return float(np.abs(m - np.diag(np.diag(m))).max(initial=0.0))


def one_rdm(state: WedgeState) -> OneRdm:
    norm = state.norm
    if abs(norm - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"state norm {norm!r} differs from 1")
    basis = state.basis
    c = state.coefficients / norm
    src, dst, sign, incidence = basis._transitions
    flat = (sign * c[src] * np.conj(c[dst])) @ incidence
    m = flat.reshape(basis.d, basis.d)
    m = 0.5 * (m + m.conj().T)
    return OneRdm(m, basis.N)


def exterior_power(matrix: np.ndarray, basis: SlaterBasis) -> np.ndarray:
    """Compound matrix: entry ``[J, I]`` is the minor ``det(matrix[J, I])``."""
    rows, cols = basis._minor_index
    return np.linalg.det(np.asarray(matrix)[rows, cols])


class Alignment(NamedTuple):
    state: WedgeState
    spectrum: Spectrum
    unitary: np.ndarray  # row k = conj of natural orbital k in the old basis
    degenerate_pairs: tuple  # 1-based (k, k+1) with gap < DEGENERACY_GAP

    @property
    def degenerate(self) -> bool:
        return bool(self.degenerate_pairs)


def natural_orbital_align(state: WedgeState) -> Alignment:
    rdm = one_rdm(state)
    m = rdm.matrix
    if rdm.off_diagonal == 0.0:
        diag = rdm.occupations
        order = np.argsort(-diag, kind="stable")
        eigenvalues = diag[order]
        vectors = np.eye(len(diag), dtype=complex)[:, order]
    else:
        eigenvalues, vectors = np.linalg.eigh(m)
        eigenvalues, vectors = eigenvalues[::-1], vectors[:, ::-1]
        pivots = np.abs(vectors).argmax(axis=0)
        phases = vectors[pivots, np.arange(vectors.shape[1])]
        vectors = vectors * (np.conj(phases) / np.abs(phases))
    unitary = vectors.conj().T
    coefficients = exterior_power(unitary, state.basis) @ (state.coefficients / state.norm)
    gaps = -np.diff(eigenvalues)
    pairs = tuple((k + 1, k + 2) for k in np.flatnonzero(gaps < DEGENERACY_GAP))
    return Alignment(
        WedgeState(state.basis, coefficients),
        Spectrum(np.clip(eigenvalues, 0.0, None), state.basis.N),
        unitary,
        pairs,
    )


def _aligned(state_or_alignment, *, reject_degenerate: bool):
    """Return ``(state, occupations)`` after checking the state is aligned."""
    if isinstance(state_or_alignment, Alignment):
        if reject_degenerate and state_or_alignment.degenerate:
            raise ValueError(
                f"degenerate natural occupations at {state_or_alignment.degenerate_pairs}; "
                "natural basis is gauge-ambiguous"
            )
        state = state_or_alignment.state
    else:
        state = state_or_alignment
    rdm = one_rdm(state)
    if rdm.off_diagonal > ALIGNMENT_TOLERANCE:
        raise ValueError(f"state not in its natural-orbital basis (off-diagonal {rdm.off_diagonal:.2e})")
    occupations = rdm.occupations
    if np.any(np.diff(occupations) > ALIGNMENT_TOLERANCE):
        raise ValueError("natural orbitals not in descending occupation order")
    return state, occupations


@dataclass(frozen=True)
class SelectionReport:
    eigenvalues: np.ndarray  # constraint-operator eigenvalue per basis tuple
    allowed: tuple
    forbidden_mass: float
    constraint_value: float  # D(lambda) on the diagonal occupations


def selection_rule_support(constraint: LinearConstraint, state) -> SelectionReport:
    """Split the expansion into determinants annihilated by the constraint
    operator and the rest."""
    state, occupations = _aligned(state, reject_degenerate=False)
    basis = state.basis
    if constraint.d != basis.d:
        raise ValueError(f"constraint acts on {constraint.d} modes, state on {basis.d}")
    eig = np.array([constraint.pattern_value(t) for t in basis.index_tuples])
    weights = np.abs(state.coefficients) ** 2
    allowed = tuple(t for t, e in zip(basis.index_tuples, eig) if e == 0)
    return SelectionReport(
        eigenvalues=eig,
        allowed=allowed,
        forbidden_mass=float(weights[eig != 0].sum()),
        constraint_value=float(constraint(occupations)),
    )


def allowed_determinants(basis: SlaterBasis, constraints) -> tuple:
    """Determinants on which every constraint operator vanishes."""
    return tuple(
        t for t in basis.index_tuples if all(c.pattern_value(t) == 0 for c in constraints)
    )


def pinned_family_state(alpha, beta, gamma) -> WedgeState:
    """``alpha|1,2,3> + beta|1,4,5> + gamma|2,4,6>`` with D6 exactly zero."""
    a, b, g = (abs(complex(z)) ** 2 for z in (alpha, beta, gamma))
    if abs(a + b + g - 1.0) > NORM_TOLERANCE:
        raise ValueError("|alpha|^2 + |beta|^2 + |gamma|^2 must be 1")
    if not (a >= b >= g and a >= b + g - 1e-15):
        raise ValueError("need |alpha|^2 >= |beta|^2 >= |gamma|^2 and |alpha|^2 >= |beta|^2 + |gamma|^2")
    basis = slater_basis(3, 6)
    return WedgeState.from_amplitudes(basis, dict(zip(PINNED_FAMILY, (alpha, beta, gamma))))


@dataclass(frozen=True)
class StructureReport:
    amplitudes: dict
    family_mass: float
    nonfamily_mass: float
    d6: float
    d6_from_amplitudes: float
    orthogonality: float

    @property
    def eq_residual(self) -> float:
        return abs(self.d6 - self.d6_from_amplitudes)

    @property
    def passed(self) -> bool:
        return (
            self.nonfamily_mass <= STRUCTURE_TOLERANCE
            and self.eq_residual <= STRUCTURE_TOLERANCE
            and self.orthogonality <= STRUCTURE_TOLERANCE
        )


def bd_structure_check(state) -> StructureReport:
    """Check the eight-determinant form of an aligned three-fermion, six-mode state."""
    state, occupations = _aligned(state, reject_degenerate=True)
    if (state.basis.N, state.basis.d) != (3, 6):
        raise ValueError("structure check applies to three fermions in six modes")
    amps = {name: complex(state.coefficients[state.basis.index(t)]) for name, t in BD_FAMILY.items()}
    w = {name: abs(z) ** 2 for name, z in amps.items()}
    family_mass = sum(w.values())
    outside = np.ones(len(state.basis), dtype=bool)
    outside[[state.basis.index(t) for t in BD_FAMILY.values()]] = False
    d6 = float(D6(occupations))
    from_amps = -w["beta"] + w["gamma"] + w["eta"] + 2 * w["xi"] + w["zeta"]
    orth = (
        np.conj(amps["alpha"]) * amps["beta"]
        + np.conj(amps["gamma"]) * amps["nu"]
        + np.conj(amps["eta"]) * amps["mu"]
        + np.conj(amps["xi"]) * amps["zeta"]
    )
    return StructureReport(
        amplitudes=amps,
        family_mass=family_mass,
        nonfamily_mass=float(np.sum(np.abs(state.coefficients[outside]) ** 2)),
        d6=d6,
        d6_from_amplitudes=from_amps,
        orthogonality=float(abs(orth)),
    )


@dataclass(frozen=True)
class BoundReport:
    """``lower <= value <= upper``; ``slack`` is the smaller margin (negative
    when violated)."""

    delta_l: float
    value: float
    lower: float
    upper: float
    skipped: bool = False
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        if self.skipped:
            return math.inf
        return min(self.value - self.lower, self.upper - self.value)

    @property
    def holds(self) -> bool:
        return self.skipped or self.slack >= -BOUND_SLACK


def lemma3_bounds(state) -> BoundReport:
    """``1 - dL <= |c_(1..N)|^2 <= 1 - dL/N`` with ``dL = N - (l_1 + ... + l_N)``."""
    state, occupations = _aligned(state, reject_degenerate=False)
    n = state.basis.N
    delta_l = float(n - occupations[:n].sum())
    overlap = float(abs(state.coefficients[0]) ** 2)
    if n < len(occupations) and occupations[n - 1] - occupations[n] < DEGENERACY_GAP:
        return BoundReport(delta_l, overlap, 1 - delta_l, 1 - delta_l / n, skipped=True,
                           note="lambda_N = lambda_N+1: reference determinant gauge-ambiguous")
    return BoundReport(delta_l, overlap, 1 - delta_l, 1 - delta_l / n)


class OutOfDomainError(ValueError):
    """Theorem hypothesis ``dL < 1/4`` not met."""


def theorem4_bounds(state) -> BoundReport:
    """``1 - chi D6 <= |P Psi|^2 <= 1 - D6/2`` with ``chi = (1+2dL)/(1-4dL)``.

    ``P`` projects onto the span of |1,2,3>, |1,4,5>, |2,4,6>.
    """
    state, occupations = _aligned(state, reject_degenerate=False)
    if (state.basis.N, state.basis.d) != (3, 6):
        raise ValueError("theorem applies to three fermions in six modes")
    delta_l = float(3 - occupations[:3].sum())
    if delta_l > 0.25 - THEOREM4_MARGIN:
        raise OutOfDomainError(f"delta_L = {delta_l:.6g} not below 1/4")
    d6 = float(D6(occupations))
    chi = (1 + 2 * delta_l) / (1 - 4 * delta_l)
    projected = state.weight(PINNED_FAMILY)
    skipped = bool(np.any(-np.diff(occupations) < DEGENERACY_GAP))
    return BoundReport(
        delta_l, projected, 1 - chi * d6, 1 - 0.5 * d6,
        skipped=skipped,
        note="degenerate occupations" if skipped else "",
        extra={"chi": chi, "d6": d6},
    )


def random_state(basis: SlaterBasis, seed) -> WedgeState:
    """Haar-random state: i.i.d. standard complex Gaussians, normalized.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts; audits pass
    ``(seed, sample_index)`` so every sample is reproducible on its own.
    """
    rng = np.random.default_rng(seed)
    dim = len(basis)
    c = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return WedgeState(basis, c / np.linalg.norm(c))


def perturbed_state(center: WedgeState, scale: float, seed) -> WedgeState:
    """``center + scale * g`` normalized, with ``g`` a unit-variance complex Gaussian."""
    rng = np.random.default_rng(seed)
    dim = len(center.basis)
    g = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / math.sqrt(2)
    c = center.coefficients + scale * g
    return WedgeState(center.basis, c / np.linalg.norm(c))


def slater_state(basis: SlaterBasis, occupied: Optional[tuple] = None) -> WedgeState:
    occupied = tuple(range(1, basis.N + 1)) if occupied is None else tuple(occupied)
    return WedgeState.from_amplitudes(basis, {occupied: 1.0})


def borland_dennis_family() -> tuple:
    """The eight determinants allowed by the three pinned sums."""
    return allowed_determinants(slater_basis(3, 6), BORLAND_DENNIS.equalities)

