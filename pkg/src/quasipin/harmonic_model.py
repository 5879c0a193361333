"""Harmonically interacting fermions in a harmonic trap.

The Hamiltonian is

    H = sum_i (p_i^2 / 2m + m w^2 x_i^2 / 2) + (D/2) sum_{i,j} (x_i - x_j)^2

in units with hbar = 1.  Its ground state is the Vandermonde product times a
Gaussian with two length scales: ``l`` for the centre of mass and ``l_tilde``
for the relative motion.  The coupling enters only through
``N D / (m w^2)``, conveniently parameterized by ``delta = ln(l / l_tilde)``.
"""

from dataclasses import dataclass
import math

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    particle_count: int
    mass: float = 1.0
    trap_frequency: float = 1.0
    pair_coupling: float = 0.0

    def __post_init__(self):
        if int(self.particle_count) != self.particle_count or self.particle_count < 2:
            raise ValueError("particle_count must be an integer >= 2")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.trap_frequency > 0:
            raise ValueError("trap_frequency must be positive")
        if not math.isfinite(self.pair_coupling):
            raise ValueError("pair_coupling must be finite")
        if not 1.0 + self.relative_coupling > 0:
            raise ValueError(
                "1 + N D / (m w^2) must be positive; the attractive coupling "
                f"{self.pair_coupling} has no bound ground state"
            )

    @property
    def relative_coupling(self) -> float:
        """``N D / (m w^2)``, the only combination the spectrum depends on."""
        return self.particle_count * self.pair_coupling / (self.mass * self.trap_frequency**2)


@dataclass(frozen=True)
class LengthScales:
    l: float
    l_tilde: float
    delta: float


def delta_from_params(params: ModelParams) -> LengthScales:
    """Length scales of the centre-of-mass and relative modes.

    >>> round(delta_from_params(ModelParams(3, pair_coupling=5.0)).delta, 12)
    0.693147180560
    """
    delta = 0.25 * math.log1p(params.relative_coupling)
    l = 1.0 / math.sqrt(params.mass * params.trap_frequency)
    return LengthScales(l=l, l_tilde=l * math.exp(-delta), delta=delta)


def params_from_delta(delta: float, particle_count: int = 3, mass: float = 1.0,
                      trap_frequency: float = 1.0) -> ModelParams:
    """Inverse of :func:`delta_from_params` at fixed ``N``, ``m`` and ``w``."""
    coupling = mass * trap_frequency**2 * math.expm1(4.0 * delta) / particle_count
    return ModelParams(particle_count, mass, trap_frequency, coupling)


def ground_state_amplitude(params: ModelParams, x) -> np.ndarray:
    """Unnormalized ground-state wave function.

    ``x`` has shape ``(..., N)``; the last axis holds the particle coordinates.
    The Vandermonde factor is ordered as ``prod_{i<j} (x_i - x_j)``.
    """
    x = np.asarray(x, dtype=float)
    n = params.particle_count
    if x.shape[-1] != n:
        raise ValueError(f"expected {n} coordinates on the last axis, got {x.shape[-1]}")
    scales = delta_from_params(params)
    inv_l2 = 1.0 / scales.l**2
    inv_lt2 = 1.0 / scales.l_tilde**2

    vandermonde = np.ones(x.shape[:-1])
    for i in range(n):
        for j in range(i + 1, n):
            vandermonde = vandermonde * (x[..., i] - x[..., j])
    com = x.sum(axis=-1)
    exponent = -(inv_l2 - inv_lt2) / (2 * n) * com**2 - 0.5 * inv_lt2 * (x**2).sum(axis=-1)
    return vandermonde * np.exp(exponent)
