"""Occupation-number spectra shared by the solver, polytope and wedge code."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Spectrum:
    """Occupation numbers ``lambda_1, lambda_2, ...`` of an ``N``-fermion state.

    The container does not enforce ordering or normalization; use
    :func:`quasipin.pauli_polytope.validate_spectrum` for that.  Index ``k``
    of ``values`` holds ``lambda_{k+1}``.
    """

    values: np.ndarray
    particle_count: int

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("spectrum values must be one-dimensional")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if int(self.particle_count) < 1:
            raise ValueError("particle_count must be positive")
        object.__setattr__(self, "particle_count", int(self.particle_count))

    def __len__(self):
        return len(self.values)

    def __getitem__(self, item):
        return self.values[item]

    def __iter__(self):
        return iter(self.values)

    def lam(self, k: int) -> float:
        """Return ``lambda_k`` (1-based); zero beyond the stored length."""
        if k < 1:
            raise IndexError("occupation labels start at 1")
        return float(self.values[k - 1]) if k <= len(self.values) else 0.0

    def head(self, n: int) -> np.ndarray:
        """First ``n`` occupations, zero padded."""
        out = np.zeros(n)
        m = min(n, len(self.values))
        out[:m] = self.values[:m]
        return out
