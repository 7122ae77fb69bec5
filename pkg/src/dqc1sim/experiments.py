"""Seeded experiments behind the command-line runner.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns plain
rows (lists of dicts) plus, where useful, a JSON-ready summary.  Per-seed
work is independent and fans out over a process pool when
``cfg.workers > 1``; rows always come back in seed order.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import oracle
from .bch import BchConfig, EffectiveHamiltonian, build_h1, build_h2, term_count_stats, verify_h2
from .circuits import (
    GATE_SETS,
    LayeredCircuit,
    generate_hermitian_circuit,
    generate_random_circuit,
)
from .estimator import estimate_from_hamiltonian, expected_Pq

EXPERIMENTS = ("haar_scatter", "layered_scatter", "bch_convergence", "trace_benchmark",
               "term_scaling", "verify")

# desk-scale defaults; anything not listed falls back to the dataclass default
DEFAULTS: dict[str, dict[str, Any]] = {
    "haar_scatter": {"n": [8], "seed_count": 20},
    "layered_scatter": {"n": [8], "m": [4, 8, 12], "seed_count": 20},
    "bch_convergence": {"n": [6], "m": [2], "order": [1, 5, 10, 20, 40, 60],
                        "gate_set": ["clifford_t", "toffoli_h"], "seed_count": 100,
                        "mode": "series"},
    "trace_benchmark": {"n": [10], "m": [4], "seed_count": 50, "samples": 500},
    "term_scaling": {"n": [4, 5, 6, 7, 8], "m": [4], "samples": 100},
    "verify": {"n": [6], "m": [3], "counts": (3, 3, 3), "seed_count": 20},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    n: list[int] = field(default_factory=lambda: [8])
    m: list[int] = field(default_factory=lambda: [4])
    order: list[int] = field(default_factory=lambda: [60])
    gate_set: list[str] = field(default_factory=lambda: ["clifford_t"])
    counts: tuple[int, int, int] = (6, 6, 6)
    samples: int = 500
    seed_start: int = 0
    seed_count: int = 20
    output_dir: str = "results"
    mode: str = "exact_single_pauli"
    threshold: float = 1e-12
    step: int | None = None
    alpha: list[float] = field(default_factory=lambda: [0.2, 1.0])
    phase: float = 0.0
    dense_limit: int = oracle.DENSE_LIMIT
    verify_limit: int = 10
    baseline_limit: int = 8
    d_term_budget: int = 1 << 16
    circuit: str | None = None
    dump: bool = False
    strict: bool = False
    workers: int = 1

    # fields that do not change results and stay out of the config hash
    _NON_RESULT = ("output_dir", "workers", "dump")

    @classmethod
    def build(cls, experiment: str, values: dict[str, Any]) -> "ExperimentConfig":
        if experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        known = {f.name for f in dataclasses.fields(cls)}
        merged = dict(DEFAULTS[experiment])
        for key, value in values.items():
            if key not in known or key == "experiment":
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                merged[key] = value
        for key in ("n", "m", "order", "gate_set", "alpha"):
            if key in merged and not isinstance(merged[key], (list, tuple)):
                merged[key] = [merged[key]]
        try:
            cfg = cls(experiment=experiment, **merged)
            cfg.n = [int(v) for v in cfg.n]
            cfg.m = [int(v) for v in cfg.m]
            cfg.order = [int(v) for v in cfg.order]
            cfg.alpha = [float(v) for v in cfg.alpha]
            cfg.gate_set = [str(v) for v in cfg.gate_set]
            cfg.counts = tuple(int(v) for v in cfg.counts)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(all(v >= 1 for v in self.n), "n must be positive")
        need(all(v >= 0 for v in self.m), "m must be non-negative")
        need(all(v >= 1 for v in self.order), "order must be >= 1")
        need(len(self.counts) == 3 and min(self.counts) >= 0, "counts must be three non-negative integers")
        need(all(g in GATE_SETS for g in self.gate_set), f"gate_set must be from {sorted(GATE_SETS)}")
        need(self.samples >= 1, "samples must be positive")
        need(self.seed_count >= 1, "seed_count must be positive")
        need(self.workers >= 1, "workers must be positive")
        need(self.mode in ("series", "exact_single_pauli"), "mode must be series or exact_single_pauli")
        need(all(0 < a <= 1 for a in self.alpha), "alpha must be in (0, 1]")
        if self.counts[0]:
            need(min(self.n) >= 3, "CCZ gates need n >= 3")
        if self.experiment in ("haar_scatter", "layered_scatter", "bch_convergence", "verify"):
            need(max(self.n) <= self.dense_limit,
                 f"{self.experiment} needs n <= dense limit {self.dense_limit}")
        if self.step is not None:
            need(self.step >= 1, "step must be positive")

    @property
    def seeds(self) -> range:
        return range(self.seed_start, self.seed_start + self.seed_count)

    def bch(self, order: int | None = None, mode: str | None = None) -> BchConfig:
        return BchConfig(order=order or max(self.order), truncation_threshold=self.threshold,
                         conjugation_mode=mode or self.mode, d_term_budget=self.d_term_budget,
                         verify_limit=self.verify_limit)

    def as_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["counts"] = list(self.counts)
        return d

    def digest(self) -> str:
        d = {k: v for k, v in self.as_dict().items() if k not in self._NON_RESULT}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def fan_out(fn: Callable, items: Sequence, workers: int) -> list:
    """``[fn(x) for x in items]``, optionally over a process pool, in order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- Haar scatter ----------------------------------------------------------------

def _sweep(N: int, step: int | None) -> list[int]:
    step = step or max(1, N // 16)
    points = list(range(0, N + 1, step))
    if points[-1] != N:
        points.append(N)
    return points


def _haar_rows(args):
    n, seed, points = args
    N = 1 << n
    rows = []
    for k in points:
        rng = np.random.default_rng([seed, k])
        o = oracle.haar_zero_discord(n, k, rng=rng)
        rows.append({"N_minus": k, "seed": seed, "Pq_observed": float(abs(o[0, 0]) ** 2),
                     "Pq_expected": expected_Pq(N, k)})
    return rows


def run_haar_scatter(cfg: ExperimentConfig) -> list[dict]:
    """P_q at q = 0 for Haar-conjugated +-1 diagonals, swept over N_minus."""
    rows = []
    for n in cfg.n:
        points = _sweep(1 << n, cfg.step)
        per_seed = fan_out(_haar_rows, [(n, s, points) for s in cfg.seeds], cfg.workers)
        rows += sorted((r for chunk in per_seed for r in chunk), key=lambda r: (r["N_minus"], r["seed"]))
    return rows


# -- layered scatter --------------------------------------------------------------

def _layered_rows(args):
    n, m, seed, points, gate_set = args
    N = 1 << n
    rows = []
    for k in points:
        rng = np.random.default_rng([seed, k, m])
        d = np.ones(N)
        d[rng.permutation(N)[:k]] = -1.0
        v = generate_random_circuit(n, m, seed=rng, padding=gate_set)
        e0 = np.zeros(N, dtype=np.complex128)
        e0[0] = 1.0
        col = oracle.apply_circuit(e0, v)  # V|0>, so O_00 = sum_k d_k |V_k0|^2
        o00 = float(np.sum(d * np.abs(col) ** 2))
        rows.append({"N_minus": k, "seed": seed, "m": m, "Pq_observed": o00 * o00,
                     "Pq_expected": expected_Pq(N, k)})
    return rows


def run_layered_scatter(cfg: ExperimentConfig) -> dict[int, list[dict]]:
    """Same sweep as the Haar scatter, with ``V`` built from ``m`` random layers."""
    out = {}
    for m in cfg.m:
        rows = []
        for n in cfg.n:
            points = _sweep(1 << n, cfg.step)
            jobs = [(n, m, s, points, cfg.gate_set[0]) for s in cfg.seeds]
            chunks = fan_out(_layered_rows, jobs, cfg.workers)
            rows += sorted((r for c in chunks for r in c), key=lambda r: (r["N_minus"], r["seed"]))
        out[m] = rows
    return out


def scatter_deviation(rows: list[dict]) -> float:
    """Mean squared deviation of observed P_q from the expected parabola."""
    return float(np.mean([(r["Pq_observed"] - r["Pq_expected"]) ** 2 for r in rows]))


# -- BCH convergence ----------------------------------------------------------------

def _bch_rows(args):
    cfg, gate_set, n, m, seed = args
    circuit = generate_hermitian_circuit(n, m, cfg.counts, seed=seed, padding=gate_set)
    u = oracle.materialize(circuit, include_phase=False)
    rows = []
    for order in cfg.order:
        h1 = build_h1(circuit, cfg.bch(order=order))
        rows.append({"seed": seed, "n": n, "m": m, "order": order, "gate_set": gate_set,
                     "eps_u": oracle.epsilon_u(u, h1.h), "terms": h1.term_count})
    return rows


def run_bch_convergence(cfg: ExperimentConfig) -> list[dict]:
    """Frobenius error of ``exp(i H1)`` against the dense circuit, per truncation order."""
    jobs = [(cfg, g, n, m, s) for g in cfg.gate_set for n in cfg.n for m in cfg.m for s in cfg.seeds]
    return [r for chunk in fan_out(_bch_rows, jobs, cfg.workers) for r in chunk]


# -- trace benchmark ----------------------------------------------------------------

def _load_or_generate(cfg: ExperimentConfig, n: int, m: int, seed: int) -> LayeredCircuit:
    if cfg.circuit:
        with open(cfg.circuit) as fh:
            return LayeredCircuit.loads(fh.read())
    return generate_hermitian_circuit(n, m, cfg.counts, seed=seed, padding=cfg.gate_set[0],
                                      global_phase=cfg.phase)


def _trace_row(args):
    cfg, n, m, seed = args
    circuit = _load_or_generate(cfg, n, m, seed)
    n, m = circuit.n_qubits, circuit.m
    spec = circuit.diagonal_spec()
    row = {"seed": seed, "n": n, "m": m, "tau_true": spec.tau}
    try:
        h2 = build_h2(circuit, cfg.bch(), circuit_id=f"seed-{seed}")
    except OverflowError as exc:
        row.update(status="skipped", reason=str(exc))
        return row, None, None
    est = estimate_from_hamiltonian(h2, cfg.samples, np.random.default_rng([seed, 1]))
    verified = None
    if n <= cfg.verify_limit:
        verified = verify_h2(h2.h, circuit).passed
        h2.verified = verified
    row.update(tau_hat=est.tau_hat, stderr=est.stderr, abs_err=abs(est.tau_hat - spec.tau),
               mean_Oqq=est.mean_Oqq, mean_abs_err=abs(est.mean_Oqq - spec.tau),
               h2_terms=h2.term_count, verified=verified, status="ok", reason="")
    return row, est.to_json(circuit.global_phase, seed), (circuit, h2)


def run_trace_benchmark(cfg: ExperimentConfig, keep_artifacts: bool = False):
    """Estimate normalized traces of random Hermitian circuits from sampled diagonals.

    Returns ``(rows, summary, artifacts)``; artifacts are ``(circuit, H2)``
    pairs, kept only on request.
    """
    jobs = [(cfg, n, m, s) for n in cfg.n for m in cfg.m for s in cfg.seeds]
    results = fan_out(_trace_row, jobs, cfg.workers)
    rows = [r for r, _, _ in results]
    ok = [r for r in rows if r["status"] == "ok"]
    within = [r for r in ok if r["abs_err"] <= 3 * r["stderr"]]
    within_mean = [r for r in ok if r["mean_abs_err"] <= 3 * r["stderr"]]
    summary = {
        "schema": 1,
        "experiment": "trace_benchmark",
        "config": cfg.as_dict(),
        "runs": len(rows),
        "ok": len(ok),
        "skipped": len(rows) - len(ok),
        "fraction_within_3se": len(within) / len(ok) if ok else None,
        "fraction_mean_within_3se": len(within_mean) / len(ok) if ok else None,
        "estimates": [e for _, e, _ in results if e is not None],
    }
    artifacts = [a for _, _, a in results if a is not None] if keep_artifacts else []
    return rows, summary, artifacts


# -- term scaling --------------------------------------------------------------------

def _hermitian_counts(args):
    cfg, n, m, seed = args
    circuit = generate_hermitian_circuit(n, m, cfg.counts, seed=seed, padding=cfg.gate_set[0])
    bcfg = cfg.bch()
    h1 = build_h1(circuit, bcfg).term_count
    try:
        h2 = build_h2(circuit, bcfg).term_count
    except OverflowError:
        h2 = None
    return h1, h2


def random_circuit_term_count(n: int, seed, gate_set: str = "clifford_t", tol: float = 1e-10) -> int:
    """Pauli terms in the principal log of a random ``2n + 1``-layer circuit."""
    circuit = generate_random_circuit(n, 2 * n + 1, seed=seed, padding=gate_set)
    h = oracle.principal_log(oracle.materialize(circuit))
    return len(oracle.pauli_decompose(h, threshold=tol))


def _random_count(args):
    n, seed, gate_set = args
    return random_circuit_term_count(n, seed, gate_set)


def run_term_scaling(cfg: ExperimentConfig) -> list[dict]:
    """Q3 / median / max of Hamiltonian term counts versus n."""
    rows = []
    seeds = range(cfg.seed_start, cfg.seed_start + cfg.samples)
    for n in cfg.n:
        for m in cfg.m:
            pairs = fan_out(_hermitian_counts, [(cfg, n, m, s) for s in seeds], cfg.workers)
            for idx, kind in ((0, "H1"), (1, "H2")):
                counts = [p[idx] for p in pairs if p[idx] is not None]
                if counts:
                    rows.append({"n": n, "m": m, "kind": kind, **term_count_stats(counts),
                                 "samples": len(counts)})
        if n <= min(cfg.baseline_limit, cfg.dense_limit):
            counts = fan_out(_random_count, [(n, s, cfg.gate_set[0]) for s in seeds], cfg.workers)
            rows.append({"n": n, "m": 2 * n + 1, "kind": "random", **term_count_stats(counts),
                         "samples": len(counts)})
    return rows


# -- verification bundle ----------------------------------------------------------------

def verify_circuit(circuit: LayeredCircuit, cfg: ExperimentConfig, h2=None, seed: int = 0) -> dict:
    """Dense consistency checks for one sandwich circuit.

    ``h2`` overrides the built principal-branch Hamiltonian (used for
    negative controls).
    """
    n = circuit.n_qubits
    N = 1 << n
    o = oracle.materialize(circuit, include_phase=False)
    eye = np.eye(N)
    if h2 is None:
        h2 = build_h2(circuit, cfg.bch()).h
    hd = oracle.to_dense(h2)
    checks = {}

    def record(name, value, tol):
        checks[name] = {"value": float(value), "tol": tol, "pass": bool(value <= tol)}

    record("hermitian", np.abs(o - o.conj().T).max(), 1e-10)
    record("involution", np.abs(o @ o - eye).max(), 1e-10)
    record("affine_identity", np.abs(o - (eye - (2 / math.pi) * hd)).max(), 1e-8)
    w = np.linalg.eigvalsh((hd + hd.conj().T) / 2)
    record("h2_spectrum", np.minimum(np.abs(w), np.abs(w - math.pi)).max(), 1e-8)
    tau_dense = oracle.exact_normalized_trace(o)
    spec = circuit.diagonal_spec()
    record("trace_vs_diagonal_spec", abs(tau_dense - spec.tau), 1e-10)
    diag_h2 = 1 - (2 / math.pi) * np.real(h2.coeff("I" * n))
    record("trace_vs_h2", abs(tau_dense - diag_h2), 1e-8)
    for a in cfg.alpha:
        x, y = oracle.dqc1_expectations(oracle.DQC1Model(a, o))
        record(f"dqc1_alpha_{a}", max(abs(x / a - tau_dense.real), abs(y / a - tau_dense.imag)), 1e-10)
    if n >= 2:
        psi = o[:, 0]
        rank = oracle.schmidt_rank(psi, n // 2, 1e-10)
        checks["schmidt_rank"] = {"value": rank, "bound": len(h2) + 1, "pass": rank <= len(h2) + 1}
    est = estimate_from_hamiltonian(EffectiveHamiltonian(h2, "H2"), cfg.samples,
                                    np.random.default_rng([seed, 1]))
    return {"seed": seed, "n": n, "m": circuit.m, "tau_true": spec.tau, "tau_hat": est.tau_hat,
            "stderr": est.stderr, "mean_Oqq": est.mean_Oqq,
            "h2_terms": len(h2), "checks": checks, "pass": all(c["pass"] for c in checks.values())}


def _verify_one(args):
    cfg, n, m, seed = args
    return verify_circuit(_load_or_generate(cfg, n, m, seed), cfg, seed=seed)


def run_verify(cfg: ExperimentConfig) -> dict:
    jobs = [(cfg, n, m, s) for n in cfg.n for m in cfg.m for s in cfg.seeds]
    results = fan_out(_verify_one, jobs, cfg.workers)
    return {"schema": 1, "experiment": "verify", "config": cfg.as_dict(),
            "all_pass": all(r["pass"] for r in results), "results": results}
