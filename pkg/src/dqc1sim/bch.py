"""Effective Hamiltonians of sandwich circuits by layer-wise conjugation.

For ``O = V^dag D V`` with ``V = L_m ... L_1`` and ``L_j = exp(i G_j)``,
both Hamiltonians are grown from the centre outwards::

    B <- exp(-i G_j) B exp(i G_j),    j = m, m-1, ..., 1

``H1`` starts from the sum of the diagonal gates' generators, so
``exp(i H1) = O`` but its spectrum is {0, pi} only modulo 2 pi.  ``H2``
starts from the principal-branch diagonal Hamiltonian ``(pi/2)(I - D)``,
which gives the affine identity ``O = I - (2/pi) H2``.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .circuits import Layer, LayeredCircuit, diagonal_operator
from .pauli import (
    DEFAULT_THRESHOLD,
    PauliString,
    PauliSum,
    add_scaled,
    anticommuting_mask,
    commutator,
    product,
    strings_commute,
)

MODES = ("series", "exact_single_pauli")


@dataclass(frozen=True)
class BchConfig:
    """``order`` caps the nested-commutator series; ``mode`` picks series
    expansion or closed-form rotations where the generator allows it."""

    order: int = 60
    truncation_threshold: float = DEFAULT_THRESHOLD
    conjugation_mode: str = "series"
    d_term_budget: int = 1 << 16
    verify_limit: int = 12

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("BCH order must be >= 1")
        if self.conjugation_mode not in MODES:
            raise ValueError(f"conjugation_mode must be one of {MODES}")
        if self.truncation_threshold < 0:
            raise ValueError("truncation_threshold must be non-negative")


@dataclass
class EffectiveHamiltonian:
    h: PauliSum
    kind: str
    provenance: dict = field(default_factory=dict)
    verified: bool | None = None
    eps_u: float | None = None

    @property
    def term_count(self) -> int:
        return len(self.h)

    def sidecar(self) -> dict:
        cfg = self.provenance.get("config", {})
        return {
            "schema": 1,
            "kind": self.kind,
            "order": cfg.get("order"),
            "threshold": cfg.get("truncation_threshold"),
            "mode": cfg.get("conjugation_mode"),
            "term_count": self.term_count,
            "eps_u": self.eps_u,
            "verified": self.verified,
            "circuit": self.provenance.get("circuit"),
        }


def _series(b: PauliSum, a: PauliSum, cfg: BchConfig) -> PauliSum:
    # exp(-iA) B exp(iA) = sum_k ad^k(B) / k!,  ad(x) = [-iA, x]
    gen = a.scaled(-1j)
    total = b
    running = b
    for k in range(1, cfg.order + 1):
        running = commutator(gen, running, cfg.truncation_threshold).scaled(1.0 / k)
        if len(running) == 0:
            break
        total = add_scaled(total, running, 1.0, cfg.truncation_threshold)
        if running.max_abs() < cfg.truncation_threshold:
            break
    return total


def _rotate(b: PauliSum, p: PauliString, theta: float, threshold: float) -> PauliSum:
    """``exp(-i theta P) B exp(i theta P)`` for a single string ``P``."""
    anti = anticommuting_mask(b, p)
    if not anti.any():
        return b
    keep = PauliSum(b.n_qubits, b.x[~anti], b.z[~anti], b.coeffs[~anti], _merged=True)
    moved = PauliSum(b.n_qubits, b.x[anti], b.z[anti], b.coeffs[anti], _merged=True)
    # anticommuting Q: Q exp(2i theta P) = cos(2 theta) Q + i sin(2 theta) Q P
    pp = PauliSum(b.n_qubits, [p.x], [p.z], [1.0])
    turned = product(moved, pp, threshold=0.0).scaled(1j * math.sin(2 * theta))
    out = add_scaled(keep, moved, math.cos(2 * theta), threshold=0.0)
    return add_scaled(out, turned, 1.0, threshold)


def _involution_conjugate(b: PauliSum, k: PauliSum, theta: float, threshold: float) -> PauliSum:
    """``exp(-i theta K) B exp(i theta K)`` for ``K^2 = I``."""
    c, s = math.cos(theta), math.sin(theta)
    out = b.scaled(c * c)
    if abs(s * c) > 0:
        out = add_scaled(out, commutator(b, k, threshold=0.0), 1j * s * c, threshold=0.0)
    if abs(s) > 0:
        out = add_scaled(out, product(product(k, b, 0.0), k, 0.0), s * s, threshold=0.0)
    return out.truncated(threshold)


def _exact(b: PauliSum, a: PauliSum, cfg: BchConfig) -> PauliSum | None:
    """Closed-form conjugation, or ``None`` when ``a`` has no simple form."""
    _, g = a.without_identity()
    if len(g) == 0:
        return b
    if g.max_imag() > 1e-12:
        return None
    if strings_commute(g):
        out = b
        for p, c in g:
            out = _rotate(out, p, c.real, cfg.truncation_threshold)
        return out
    g2 = product(g, g)
    c0, rest = g2.without_identity()
    if rest.max_abs() <= 1e-12 and c0.real > 0:
        theta = math.sqrt(c0.real)
        return _involution_conjugate(b, g.scaled(1 / theta), theta, cfg.truncation_threshold)
    return None


def conjugate(b: PauliSum, a: PauliSum, cfg: BchConfig = BchConfig()) -> PauliSum:
    """``exp(-i a) b exp(i a)`` as a Pauli sum.

    In series mode the nested-commutator expansion runs to ``cfg.order``
    terms, stopping early once the running term falls below the threshold.
    In ``exact_single_pauli`` mode generators whose strings commute (or
    that are a multiple of an involution) are applied in closed form.
    """
    if b.n_qubits != a.n_qubits:
        raise ValueError(f"qubit count mismatch: {b.n_qubits} vs {a.n_qubits}")
    if len(a) == 0:
        return b
    if cfg.conjugation_mode == "exact_single_pauli":
        out = _exact(b, a, cfg)
        if out is not None:
            return out
    return _series(b, a, cfg)


def conjugate_layer(b: PauliSum, layer: Layer, cfg: BchConfig = BchConfig()) -> PauliSum:
    """Conjugate through one layer of commuting gates."""
    n = b.n_qubits
    if cfg.conjugation_mode == "series":
        return conjugate(b, layer.generator_sum(n), cfg)
    # gates of a layer commute, so their conjugations can be applied one by one
    for g in layer.gates:
        b = conjugate(b, g.generator(n), cfg)
    return b


def _check_sandwich(circuit: LayeredCircuit) -> None:
    if circuit.structure != "sandwich":
        raise ValueError("effective Hamiltonians need a sandwich (V^dag D V) circuit")


def _conjugate_outward(b: PauliSum, circuit: LayeredCircuit, cfg: BchConfig) -> PauliSum:
    for layer in reversed(circuit.layers):
        b = conjugate_layer(b, layer, cfg)
    return b


def _provenance(circuit: LayeredCircuit, cfg: BchConfig, circuit_id) -> dict:
    return {"circuit": circuit_id, "n": circuit.n_qubits, "m": circuit.m, "config": asdict(cfg)}


def build_h1(circuit: LayeredCircuit, cfg: BchConfig = BchConfig(), circuit_id=None) -> EffectiveHamiltonian:
    """Truncated-BCH Hamiltonian with ``exp(i H1) ~ O``."""
    _check_sandwich(circuit)
    n = circuit.n_qubits
    b = PauliSum.zero(n)
    for g in circuit.diagonal_block:
        b = b + g.generator(n)
    h = _conjugate_outward(b, circuit, cfg)
    return EffectiveHamiltonian(h, "H1", _provenance(circuit, cfg, circuit_id))


def diagonal_hamiltonian(circuit: LayeredCircuit, cfg: BchConfig = BchConfig()) -> PauliSum:
    """``(pi/2)(I - D)`` for the circuit's diagonal block."""
    n = circuit.n_qubits
    d = diagonal_operator(circuit.diagonal_block, n, budget=cfg.d_term_budget)
    return add_scaled(PauliSum.identity(n), d, -1.0).scaled(math.pi / 2)


def build_h2(circuit: LayeredCircuit, cfg: BchConfig = BchConfig(), circuit_id=None,
             verify: bool = False) -> EffectiveHamiltonian:
    """Principal-branch Hamiltonian satisfying ``O = I - (2/pi) H2``.

    Raises ``OverflowError`` when the diagonal operator exceeds
    ``cfg.d_term_budget`` strings.  With ``verify`` (and ``n`` within
    ``cfg.verify_limit``) the result is checked against the dense circuit.
    """
    _check_sandwich(circuit)
    h = _conjugate_outward(diagonal_hamiltonian(circuit, cfg), circuit, cfg).real()
    eh = EffectiveHamiltonian(h, "H2", _provenance(circuit, cfg, circuit_id))
    if verify and circuit.n_qubits <= cfg.verify_limit:
        eh.verified = verify_h2(eh.h, circuit).passed
    return eh


@dataclass
class H2Check:
    affine_error: float
    spectrum_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.affine_error <= self.tol and self.spectrum_error <= self.tol


def verify_h2(h: PauliSum, circuit: LayeredCircuit, tol: float = 1e-8) -> H2Check:
    """Dense check of ``O = I - (2/pi) H2`` and of the {0, pi} spectrum."""
    from . import oracle

    o = oracle.materialize(circuit, include_phase=False)
    hd = oracle.to_dense(h)
    affine = np.abs(o - (np.eye(len(o)) - (2 / math.pi) * hd)).max()
    w = np.linalg.eigvalsh((hd + hd.conj().T) / 2)
    spec = np.minimum(np.abs(w), np.abs(w - math.pi)).max() if len(w) else 0.0
    return H2Check(float(affine), float(spec), tol)


def q3_nearest_rank(values: Sequence[int]) -> int:
    ordered = sorted(values)
    return ordered[math.ceil(0.75 * len(ordered)) - 1]


def term_count_stats(hamiltonians: Sequence[EffectiveHamiltonian | int]) -> dict:
    """Q3 (nearest rank), median and max of term counts."""
    if not hamiltonians:
        raise ValueError("term_count_stats needs at least one Hamiltonian")
    counts = [h if isinstance(h, (int, np.integer)) else h.term_count for h in hamiltonians]
    counts = [int(c) for c in counts]
    return {"Q3": q3_nearest_rank(counts), "median": statistics.median(counts), "max": max(counts)}
