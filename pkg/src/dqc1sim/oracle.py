"""Dense-matrix ground truth for small registers.

Everything here materializes ``2^n x 2^n`` matrices and refuses to run
above ``DENSE_LIMIT`` qubits.  Basis index convention matches
:mod:`dqc1sim.pauli`: qubit 0 is the least significant bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg

from .circuits import Gate, LayeredCircuit
from .pauli import PauliString, PauliSum

DENSE_LIMIT = 12

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SINGLE_QUBIT = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


def check_dense(n_qubits: int, limit: int = DENSE_LIMIT) -> None:
    if n_qubits > limit:
        raise ValueError(f"dense oracle refuses n={n_qubits} > limit {limit}")


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Kronecker product of textbook single-qubit matrices."""
    # np.kron puts its first factor on the most significant bit
    return reduce(np.kron, [SINGLE_QUBIT[ch] for ch in reversed(p.label)])


def kron_dense(h: PauliSum) -> np.ndarray:
    """Dense matrix of ``h`` by summing Kronecker products (slow, simple)."""
    check_dense(h.n_qubits)
    out = np.zeros((1 << h.n_qubits,) * 2, dtype=np.complex128)
    for p, c in h:
        out += c * pauli_matrix(p)
    return out


def _fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 0 (length 2^k)."""
    a = np.array(a, dtype=np.complex128, copy=True)
    n = a.shape[0]
    h = 1
    while h < n:
        a = a.reshape((n // (2 * h), 2, h) + a.shape[1:])
        lo, hi = a[:, 0].copy(), a[:, 1].copy()
        a[:, 0], a[:, 1] = lo + hi, lo - hi
        a = a.reshape((n,) + a.shape[3:])
        h *= 2
    return a


def to_dense(h: PauliSum) -> np.ndarray:
    """Dense matrix of ``h``.

    Terms are grouped by X-mask; each group's Z-part is a diagonal obtained
    with one Walsh-Hadamard transform, placed on the permuted diagonal.
    """
    check_dense(h.n_qubits)
    N = 1 << h.n_qubits
    out = np.zeros((N, N), dtype=np.complex128)
    if len(h) == 0:
        return out
    q = np.arange(N)
    ys = np.bitwise_count(h.x & h.z).astype(np.int64) % 4
    coeffs = h.coeffs * np.array([1, 1j, -1, -1j])[ys]
    for xm in np.unique(h.x):
        sel = h.x == xm
        spectrum = np.zeros(N, dtype=np.complex128)
        np.add.at(spectrum, h.z[sel].astype(np.int64), coeffs[sel])
        # column q of X^x Z^z carries (-1)^{z.q} in row q ^ x
        diag = _fwht(spectrum)
        out[q ^ int(xm), q] += diag
    return out


def pauli_decompose(m: np.ndarray, threshold: float = 0.0) -> PauliSum:
    """Pauli-string expansion ``m = sum_P c_P P`` with ``c_P = Tr(P m) / N``."""
    N = m.shape[0]
    n = N.bit_length() - 1
    if m.shape != (N, N) or (1 << n) != N:
        raise ValueError("matrix must be square with power-of-two size")
    check_dense(n)
    q = np.arange(N)
    xs, zs, cs = [], [], []
    for xm in range(N):
        walsh = _fwht(m[q ^ xm, q]) / N
        z = np.arange(N, dtype=np.uint64)
        phase = np.array([1, -1j, -1, 1j])[np.bitwise_count(np.uint64(xm) & z).astype(np.int64) % 4]
        xs.append(np.full(N, xm, dtype=np.uint64))
        zs.append(z)
        cs.append(walsh * phase)
    return PauliSum(n, np.concatenate(xs), np.concatenate(zs), np.concatenate(cs),
                    threshold=threshold)


def expm_hermitian(h: np.ndarray, t: complex = 1j) -> np.ndarray:
    """``exp(t * h)`` for Hermitian ``h`` via eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(t * w)) @ v.conj().T


def principal_log(u: np.ndarray) -> np.ndarray:
    """Hermitian ``H`` with ``exp(iH) = u`` and spectrum in ``(-pi, pi]``."""
    t, z = scipy.linalg.schur(u, output="complex")
    theta = np.angle(np.diag(t))
    theta[np.isclose(theta, -math.pi)] = math.pi
    return (z * theta) @ z.conj().T


# -- circuit materialization ---------------------------------------------------

def gate_matrix(gate: Gate) -> np.ndarray:
    """Native-arity matrix of a gate, local qubit 0 least significant."""
    return expm_hermitian(kron_dense(gate.local_generator()))


_GATE_CACHE: dict[tuple[str, bool], np.ndarray] = {}


def _cached_gate_matrix(gate: Gate) -> np.ndarray:
    key = (gate.name, gate.adjoint)
    if key not in _GATE_CACHE:
        _GATE_CACHE[key] = gate_matrix(gate)
    return _GATE_CACHE[key]


def apply_gate(state: np.ndarray, gate: Gate, n_qubits: int) -> np.ndarray:
    """Left-multiply ``state`` (vector or matrix with 2^n rows) by a gate."""
    k = len(gate.qubits)
    g = _cached_gate_matrix(gate).reshape((2,) * (2 * k))
    rest = state.shape[1:]
    psi = state.reshape((2,) * n_qubits + rest)
    # tensor axis a <-> qubit n-1-a; local gate axis a <-> local qubit k-1-a
    axes = [n_qubits - 1 - gate.qubits[k - 1 - a] for a in range(k)]
    psi = np.tensordot(g, psi, axes=(list(range(k, 2 * k)), axes))
    psi = np.moveaxis(psi, list(range(k)), axes)
    return psi.reshape(state.shape)


def apply_circuit(state: np.ndarray, circuit: LayeredCircuit, include_phase: bool = True) -> np.ndarray:
    out = state
    for g in circuit.all_gates():
        out = apply_gate(out, g, circuit.n_qubits)
    if include_phase and circuit.global_phase:
        out = out * np.exp(1j * circuit.global_phase)
    return out


def materialize(circuit: LayeredCircuit, include_phase: bool = True,
                limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense unitary of a circuit, ``exp(i*phase)`` times the gate product."""
    check_dense(circuit.n_qubits, limit)
    eye = np.eye(1 << circuit.n_qubits, dtype=np.complex128)
    return apply_circuit(eye, circuit, include_phase)


def exact_normalized_trace(u: np.ndarray) -> complex:
    return complex(np.trace(u) / u.shape[0])


# -- Haar sampling -------------------------------------------------------------

def haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``N x N`` unitary: QR of a Ginibre matrix, R-phases fixed."""
    g = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_zero_discord(n: int, N_minus: int, seed=None, rng: np.random.Generator | None = None,
                      limit: int = DENSE_LIMIT) -> np.ndarray:
    """``V^dag D V`` with Haar ``V`` and ``D = diag(-1 x N_minus, +1 x rest)``."""
    check_dense(n, limit)
    N = 1 << n
    if not 0 <= N_minus <= N:
        raise ValueError(f"N_minus must be in [0, {N}]")
    if N_minus == 0:
        return np.eye(N, dtype=np.complex128)
    rng = rng if rng is not None else np.random.default_rng(seed)
    v = haar_unitary(N, rng)
    d = np.ones(N)
    d[:N_minus] = -1.0
    return (v.conj().T * d) @ v


# -- DQC1 ----------------------------------------------------------------------

@dataclass
class DQC1Model:
    alpha: float
    u: np.ndarray

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")


def dqc1_output_blocks(model: DQC1Model) -> list[list[np.ndarray]]:
    """2x2 block form of the output state over (clean qubit, register)."""
    u = model.u
    N = u.shape[0]
    eye = np.eye(N, dtype=np.complex128)
    s = 1 / (2 * N)
    return [[s * eye, s * model.alpha * u.conj().T],
            [s * model.alpha * u, s * eye]]


def dqc1_expectations(model: DQC1Model) -> tuple[float, float]:
    """``(<X>, <Y>)`` on the clean qubit, by partial trace of the output state."""
    blocks = dqc1_output_blocks(model)
    rho_top = np.array([[np.trace(blocks[i][j]) for j in range(2)] for i in range(2)])
    return float(np.trace(rho_top @ _X).real), float(np.trace(rho_top @ _Y).real)


# -- error metrics ---------------------------------------------------------------

def epsilon_u(u: np.ndarray, h: PauliSum) -> float:
    """Frobenius norm of ``u - exp(i h)``."""
    if u.shape[0] != 1 << h.n_qubits:
        raise ValueError("dimension mismatch between unitary and Hamiltonian")
    return float(np.linalg.norm(u - expm_hermitian(to_dense(h))))


def schmidt_rank(state: np.ndarray, cut: int, tol: float = 1e-10) -> int:
    """Schmidt rank across qubits ``{0..cut-1} | {cut..n-1}``."""
    N = state.shape[0]
    n = N.bit_length() - 1
    if (1 << n) != N:
        raise ValueError("state length must be a power of two")
    if not 0 < cut < n:
        raise ValueError(f"cut must be in [1, {n - 1}]")
    s = np.linalg.svd(state.reshape(1 << (n - cut), 1 << cut), compute_uv=False)
    return int(np.count_nonzero(s > tol))
