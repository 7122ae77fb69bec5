"""Normalized-trace estimation from sampled diagonal elements.

For ``O = V^dag D V`` with Haar-typical ``V`` and ``N_minus`` eigenvalues
equal to -1, the diagonal elements satisfy

    E[O_qq]   = (N - 2 N_minus) / N
    E[O_qq^2] = 1/(N+1) + (N - 2 N_minus)^2 / (N (N+1))

The estimator inverts the second relation for ``N_minus`` and uses the sign
of the sample mean of ``O_qq`` to pick between the two roots.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bch import EffectiveHamiltonian
from .pauli import diagonal_entries


@dataclass(frozen=True)
class HaarMoments:
    """Second and fourth moments of Haar-unitary matrix elements."""

    N: int

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two >= 2")

    @property
    def abs2(self) -> float:
        return 1 / self.N

    @property
    def abs4(self) -> float:
        return 2 / (self.N * (self.N + 1))

    @property
    def cross(self) -> float:
        """``E|v_ij|^2 |v_ij'|^2`` for ``j != j'``."""
        return 1 / (self.N * (self.N + 1))


def _check_range(N: int, N_minus: float) -> None:
    if N < 1:
        raise ValueError("N must be positive")
    if not 0 <= N_minus <= N:
        raise ValueError(f"N_minus must be in [0, {N}], got {N_minus}")


def expected_Oqq(N: int, N_minus: float) -> float:
    _check_range(N, N_minus)
    return (N - 2 * N_minus) / N


def expected_Pq(N: int, N_minus: float) -> float:
    _check_range(N, N_minus)
    return 1 / (N + 1) + (N - 2 * N_minus) ** 2 / (N * (N + 1))


@dataclass
class TraceEstimate:
    tau_hat: float
    mean_Oqq: float
    mean_Pq: float
    N_minus_roots: tuple[float, float]
    chosen_root: float
    sample_count: int
    stderr: float
    N: int

    def to_json(self, phi: float = 0.0, seed=None) -> dict:
        tau_r, tau_i = apply_global_phase(self, phi)
        return {
            "schema": 1,
            "tau_hat": self.tau_hat,
            "tau_r": tau_r,
            "tau_i": tau_i,
            "mean_Oqq": self.mean_Oqq,
            "mean_Pq": self.mean_Pq,
            "roots": list(self.N_minus_roots),
            "chosen_root": self.chosen_root,
            "samples": self.sample_count,
            "stderr": self.stderr,
            "seed": seed,
        }


def sample_indices(n_qubits: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct uniformly random basis indices (all of them if ``count >= 2^n``)."""
    N = 1 << n_qubits
    if count >= N:
        return np.arange(N, dtype=np.uint64)
    return np.sort(rng.choice(N, size=count, replace=False)).astype(np.uint64)


def sample_diagonals(h2: EffectiveHamiltonian, indices) -> np.ndarray:
    """``O_qq = 1 - (2/pi) Re <q|H2|q>`` without forming any dense matrix."""
    if h2.kind != "H2":
        raise ValueError("diagonal sampling needs a principal-branch (H2) Hamiltonian")
    vals = diagonal_entries(h2.h, indices).real
    return 1.0 - (2 / math.pi) * vals


def estimate_trace(samples: Sequence[float], N: int, tol: float = 1e-9) -> TraceEstimate:
    """Invert the second-moment parabola for ``N_minus``.

    The discriminant ``(N - 2 N_minus)^2`` is clamped at zero when sampling
    noise pushes ``mean(O_qq^2)`` under the parabola's minimum.
    """
    s = np.asarray(samples, dtype=float).reshape(-1)
    if len(s) == 0:
        raise ValueError("need at least one sample")
    mean_o = float(s.mean())
    mean_p = float((s * s).mean())
    if mean_p > 1 + tol:
        raise ValueError(f"mean O_qq^2 = {mean_p} exceeds 1; samples are not from an involution")
    disc = max(0.0, mean_p * N * (N + 1) - N)
    root = math.sqrt(disc)
    lo, hi = (N - root) / 2, (N + root) / 2
    chosen = lo if mean_o >= 0 else hi
    stderr = float(s.std(ddof=1) / math.sqrt(len(s))) if len(s) > 1 else 0.0
    return TraceEstimate(
        tau_hat=(N - 2 * chosen) / N,
        mean_Oqq=mean_o,
        mean_Pq=mean_p,
        N_minus_roots=(lo, hi),
        chosen_root=chosen,
        sample_count=len(s),
        stderr=stderr,
        N=N,
    )


def apply_global_phase(estimate: TraceEstimate, phi: float) -> tuple[float, float]:
    """Real and imaginary parts of the normalized trace of ``exp(i phi) O``."""
    return math.cos(phi) * estimate.tau_hat, math.sin(phi) * estimate.tau_hat


def estimate_from_hamiltonian(h2: EffectiveHamiltonian, samples: int = 500,
                              rng: np.random.Generator | None = None) -> TraceEstimate:
    """Sample ``samples`` random diagonals of ``O`` and estimate its trace."""
    rng = rng if rng is not None else np.random.default_rng()
    n = h2.h.n_qubits
    idx = sample_indices(n, samples, rng)
    return estimate_trace(sample_diagonals(h2, idx), 1 << n)
