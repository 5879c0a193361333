"""Natural occupation numbers of the trapped-fermion ground state.

The one-particle reduced density operator is discretized in a basis of
Hermite functions.  With ``g_i(y) = int dx phi_i(x) Psi(x, y)`` (``y`` the
remaining ``N - 1`` coordinates) the matrix elements are

    G_ij = N int dy g_i(y) g_j(y)

and both integrals run on one tensor Gauss-Hermite grid.  The eigenvalues of
``G``, renormalized to sum to ``N``, are the occupation numbers.
"""

from dataclasses import dataclass, field, replace
import math
from typing import Optional

import numpy as np

from quasipin.harmonic_model import (
    ModelParams,
    delta_from_params,
    ground_state_amplitude,
    params_from_delta,
)
from quasipin.spectrum import Spectrum

NEGATIVE_EIGENVALUE_TOLERANCE = 1e-10
CONVERGENCE_PROBE_STEP = 16


@dataclass(frozen=True)
class SolverConfig:
    """Discretization settings.

    ``basis_length_scale=None`` means ``sqrt(l * l_tilde)`` of the model
    being solved.
    """

    basis_size: int = 24
    quadrature_order: int = 96
    basis_length_scale: Optional[float] = None
    trace_tolerance: float = 1e-8

    def __post_init__(self):
        if self.basis_size < 1:
            raise ValueError("basis_size must be positive")
        if self.quadrature_order < 2 * self.basis_size:
            raise ValueError(
                f"quadrature_order={self.quadrature_order} must be at least "
                f"2 * basis_size={2 * self.basis_size}"
            )
        if self.basis_length_scale is not None and not self.basis_length_scale > 0:
            raise ValueError("basis_length_scale must be positive")
        if not self.trace_tolerance > 0:
            raise ValueError("trace_tolerance must be positive")

    def resolved(self, params: ModelParams) -> "SolverConfig":
        if self.basis_length_scale is not None:
            return self
        scales = delta_from_params(params)
        return replace(self, basis_length_scale=math.sqrt(scales.l * scales.l_tilde))


class HermiteBasis:
    """First ``size`` orthonormal Hermite functions at length scale ``b``.

    phi_k(x) = (2^k k! sqrt(pi) b)^(-1/2) H_k(x/b) exp(-x^2 / 2b^2),
    evaluated with the normalized three-term recurrence.
    """

    def __init__(self, size: int, length_scale: float = 1.0):
        if size < 1:
            raise ValueError("size must be positive")
        if not length_scale > 0:
            raise ValueError("length_scale must be positive")
        self.size = int(size)
        self.length_scale = float(length_scale)

    def __call__(self, x) -> np.ndarray:
        """Values ``phi_k(x)`` with shape ``(size,) + x.shape``."""
        x = np.asarray(x, dtype=float)
        return _hermite_functions(self.size, x / self.length_scale) / math.sqrt(self.length_scale)

    def __repr__(self):
        return f"HermiteBasis(size={self.size}, length_scale={self.length_scale!r})"


def _hermite_functions(count: int, t: np.ndarray) -> np.ndarray:
    out = np.empty((count,) + t.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * t * t)
    if count > 1:
        out[1] = math.sqrt(2.0) * t * out[0]
    for k in range(2, count):
        out[k] = math.sqrt(2.0 / k) * t * out[k - 1] - math.sqrt((k - 1) / k) * out[k - 2]
    return out


def gauss_hermite_rule(order: int, length_scale: float = 1.0):
    """Nodes and weights for ``int f(x) dx`` on the real line.

    The Gaussian weight is folded into the returned weights, which are
    computed from the Christoffel function ``1 / sum_j psi_j(t)^2`` so that no
    ``exp(t^2)`` overflow occurs at large orders.
    """
    t, _ = np.polynomial.hermite.hermgauss(order)
    stripped = 1.0 / (_hermite_functions(order, t) ** 2).sum(axis=0)
    return length_scale * t, length_scale * stripped


def build_hermite_basis(config: SolverConfig) -> HermiteBasis:
    if config.basis_size > config.quadrature_order / 2:
        raise ValueError("basis_size must not exceed quadrature_order / 2")
    b = 1.0 if config.basis_length_scale is None else config.basis_length_scale
    return HermiteBasis(config.basis_size, b)


@dataclass(frozen=True)
class RdmGram:
    """Discretized one-particle reduced density matrix.

    ``trace_drift`` is the relative change of the trace when the quadrature
    order is raised by 16; ``converged`` compares it with
    ``config.trace_tolerance``.
    """

    matrix: np.ndarray
    config: SolverConfig
    params: ModelParams
    trace_raw: float
    trace_drift: float = 0.0
    converged: bool = True
    full_norm: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("gram matrix must be square")
        scale = max(np.abs(matrix).max(), np.finfo(float).tiny)
        if np.abs(matrix - matrix.T).max() > 1e-13 * scale:
            raise ValueError("gram matrix is not symmetric")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)


def _contract(params: ModelParams, config: SolverConfig) -> tuple[np.ndarray, float]:
    n = params.particle_count
    basis = build_hermite_basis(config)
    nodes, weights = gauss_hermite_rule(config.quadrature_order, basis.length_scale)
    q = len(nodes)

    grids = np.meshgrid(*([nodes] * n), indexing="ij")
    psi = ground_state_amplitude(params, np.stack(grids, axis=-1))

    # g[i, y...] = sum_x w_x phi_i(x) psi(x, y...)
    projector = basis(nodes) * weights
    g = np.tensordot(projector, psi, axes=(1, 0)).reshape(basis.size, q ** (n - 1))

    rest = weights
    for _ in range(n - 2):
        rest = np.multiply.outer(rest, weights)
    rest = rest.reshape(-1)

    gram = n * (g * rest) @ g.T
    gram = 0.5 * (gram + gram.T)

    full = psi**2
    for _ in range(n):
        full = np.tensordot(weights, full, axes=(0, 0))
    return gram, n * float(full)


def rdm_gram(params: ModelParams, config: SolverConfig = SolverConfig(), *,
             probe: bool = True) -> RdmGram:
    """Density-matrix elements ``G_ij`` in the Hermite basis.

    With ``probe`` the trace is recomputed at quadrature order ``Q + 16`` and
    the relative change recorded; set it to False to halve the cost when the
    discretization is known to be adequate.
    """
    if params.particle_count not in (2, 3):
        raise ValueError("rdm_gram supports N = 2 and N = 3 only")
    config = config.resolved(params)
    gram, full_norm = _contract(params, config)
    trace = float(np.trace(gram))

    drift = 0.0
    if probe:
        finer = replace(config, quadrature_order=config.quadrature_order + CONVERGENCE_PROBE_STEP)
        finer_gram, _ = _contract(params, finer)
        drift = abs(float(np.trace(finer_gram)) - trace) / abs(trace) if trace else math.inf
    return RdmGram(
        matrix=gram,
        config=config,
        params=params,
        trace_raw=trace,
        trace_drift=drift,
        converged=drift <= config.trace_tolerance,
        full_norm=full_norm,
    )


def natural_occupations(gram: RdmGram) -> Spectrum:
    """Eigenvalues of ``gram`` in descending order, scaled to sum to ``N``.

    Negative eigenvalues down to ``-1e-10 * trace`` are discretization noise
    and clipped to zero; anything more negative raises.
    """
    trace = gram.trace_raw
    if not trace > 0:
        raise ValueError("gram matrix has non-positive trace; cannot renormalize")
    eigenvalues = np.linalg.eigvalsh(gram.matrix)
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    floor = -NEGATIVE_EIGENVALUE_TOLERANCE * trace
    if eigenvalues[-1] < floor:
        raise ValueError(
            f"eigenvalue {eigenvalues[-1]:.3e} below {floor:.3e}: discretization failure"
        )
    eigenvalues = np.where(eigenvalues < 0, 0.0, eigenvalues)
    n = gram.params.particle_count
    return Spectrum(eigenvalues * (n / eigenvalues.sum()), n)


def occupation_numbers(delta: float, particle_count: int = 3,
                       config: SolverConfig = SolverConfig(), *, probe: bool = False) -> Spectrum:
    """Shortcut: occupations at coupling ``delta`` with ``m = w = 1``."""
    return natural_occupations(rdm_gram(params_from_delta(delta, particle_count), config, probe=probe))
