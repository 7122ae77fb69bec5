"""Gates as exponentials of Pauli-sum generators, commuting layers, and
random Hermitian ("sandwich") circuits.

Every gate is ``exp(i G)`` for a real-coefficient Pauli sum ``G``.  Gate
lists are in time order, so the unitary of ``[g1, g2, g3]`` is
``g3 @ g2 @ g1``.  A sandwich circuit is, in time order,

    L_1, ..., L_m, D, L_m^dag, ..., L_1^dag

which as an operator is ``V^dag D V`` with ``V = L_m ... L_1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString, PauliSum, commutator, product

GATE_ARITY = {"Hd": 1, "T": 1, "Z": 1, "CNOT": 2, "CZ": 2, "CCZ": 3, "Toffoli": 3}
DIAGONAL_GATES = frozenset({"Z", "CZ", "CCZ"})
# gates equal to their own inverse; their adjoint is the same gate
SELF_INVERSE = frozenset({"Hd", "Z", "CNOT", "CZ", "CCZ", "Toffoli"})

GATE_SETS = {
    "clifford_t": ("Hd", "T", "CNOT"),
    "toffoli_h": ("Toffoli", "Hd"),
}

FORMAT_VERSION = 1


def _one_minus(op: str) -> PauliSum:
    """Single-qubit ``I - P``."""
    return PauliSum.from_terms(1, [("I", 1.0), (op, -1.0)])


def _tensor(*factors: PauliSum) -> PauliSum:
    """Tensor product; factor k acts on local qubit k."""
    n = len(factors)
    out = PauliSum.identity(n)
    for k, f in enumerate(factors):
        out = product(out, f.embed([k], n))
    return out


@lru_cache(maxsize=None)
def _local_generator(name: str) -> PauliSum:
    pi = math.pi
    if name == "Hd":
        s = 1 / math.sqrt(2)
        return PauliSum.from_terms(1, [("I", pi / 2), ("X", -pi / 2 * s), ("Z", -pi / 2 * s)])
    if name == "T":
        return _one_minus("Z").scaled(pi / 8)
    if name == "Z":
        return _one_minus("Z").scaled(pi / 2)
    if name == "CNOT":
        return _tensor(_one_minus("Z"), _one_minus("X")).scaled(pi / 4)
    if name == "CZ":
        return _tensor(_one_minus("Z"), _one_minus("Z")).scaled(pi / 4)
    if name == "CCZ":
        return _tensor(_one_minus("Z"), _one_minus("Z"), _one_minus("Z")).scaled(pi / 8)
    if name == "Toffoli":
        return _tensor(_one_minus("Z"), _one_minus("Z"), _one_minus("X")).scaled(pi / 8)
    raise ValueError(f"unknown gate {name!r}")


def local_generator(name: str, adjoint: bool = False) -> PauliSum:
    """Generator of a gate on its own qubits (local qubit k = k-th operand)."""
    g = _local_generator(name)
    return -g if adjoint else g


def _check_qubits(name: str, qubits: Sequence[int], n_qubits: int | None) -> None:
    if name not in GATE_ARITY:
        raise ValueError(f"unknown gate {name!r}")
    if len(qubits) != GATE_ARITY[name]:
        raise ValueError(f"{name} acts on {GATE_ARITY[name]} qubit(s), got {len(qubits)}")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit indices {list(qubits)} for {name}")
    if any(q < 0 for q in qubits) or (n_qubits is not None and any(q >= n_qubits for q in qubits)):
        raise ValueError(f"qubits {list(qubits)} out of range")


def gate_generator(name: str, qubits: Sequence[int], n_qubits: int | None = None,
                   adjoint: bool = False) -> PauliSum:
    """Pauli-sum ``G`` with ``exp(i G)`` equal to the gate on ``qubits``.

    ``n_qubits`` defaults to ``max(qubits) + 1``.  With ``adjoint`` the
    generator of the inverse gate, ``-G``, is returned.
    """
    qubits = list(qubits)
    _check_qubits(name, qubits, n_qubits)
    if n_qubits is None:
        n_qubits = max(qubits) + 1
    return local_generator(name, adjoint).embed(qubits, n_qubits)


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    adjoint: bool = False

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        _check_qubits(self.name, self.qubits, None)
        if self.adjoint and self.name in SELF_INVERSE:
            object.__setattr__(self, "adjoint", False)

    @property
    def is_diagonal(self) -> bool:
        return self.name in DIAGONAL_GATES

    @property
    def label(self) -> str:
        return self.name + ("dg" if self.adjoint else "")

    def dagger(self) -> "Gate":
        return Gate(self.name, self.qubits, not self.adjoint)

    def generator(self, n_qubits: int) -> PauliSum:
        return gate_generator(self.name, self.qubits, n_qubits, self.adjoint)

    def local_generator(self) -> PauliSum:
        return local_generator(self.name, self.adjoint)

    @classmethod
    def parse(cls, label: str, qubits: Iterable[int]) -> "Gate":
        adjoint = label.endswith("dg")
        return cls(label[:-2] if adjoint else label, tuple(qubits), adjoint)


def gates_commute(a: Gate, b: Gate) -> bool:
    if not set(a.qubits) & set(b.qubits):
        return True
    n = max(a.qubits + b.qubits) + 1
    return len(commutator(a.generator(n), b.generator(n))) == 0


@dataclass(frozen=True)
class Layer:
    """Gates with pairwise-commuting generators."""

    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    def generator_sum(self, n_qubits: int) -> PauliSum:
        out = PauliSum.zero(n_qubits)
        for g in self.gates:
            out = out + g.generator(n_qubits)
        return out

    def dagger(self) -> "Layer":
        return Layer(tuple(g.dagger() for g in self.gates))

    def is_commuting(self) -> bool:
        return all(gates_commute(a, b) for i, a in enumerate(self.gates) for b in self.gates[i + 1:])


def group_into_layers(gates: Sequence[Gate]) -> list[Layer]:
    """Greedy commuting-layer packing that preserves the gate product.

    Each gate moves back to the earliest layer such that it commutes with
    every gate of that layer and of all later layers.
    """
    layers: list[list[Gate]] = []
    for g in gates:
        target = len(layers)
        for j in range(len(layers) - 1, -1, -1):
            if all(gates_commute(g, h) for h in layers[j]):
                target = j
            else:
                break
        if target == len(layers):
            layers.append([g])
        else:
            layers[target].append(g)
    return [Layer(tuple(layer)) for layer in layers]


@dataclass(frozen=True)
class DiagonalSpec:
    gates: tuple[Gate, ...]
    n_qubits: int
    N_minus: int

    @property
    def N(self) -> int:
        return 1 << self.n_qubits

    @property
    def N_plus(self) -> int:
        return self.N - self.N_minus

    @property
    def tau(self) -> float:
        return (self.N_plus - self.N_minus) / self.N


def diagonal_signs(block: Sequence[Gate], n_qubits: int) -> np.ndarray:
    """Dense +-1 diagonal of a block of Z/CZ/CCZ gates (qubit 0 = LSB)."""
    q = np.arange(1 << n_qubits, dtype=np.int64)
    flips = np.zeros(len(q), dtype=bool)
    for g in block:
        if not g.is_diagonal:
            raise ValueError(f"non-diagonal gate {g.name} in diagonal block")
        mask = sum(1 << j for j in g.qubits)
        flips ^= (q & mask) == mask
    return np.where(flips, -1, 1).astype(np.int8)


def diagonal_operator(block: Sequence[Gate], n_qubits: int, budget: int | None = None) -> PauliSum:
    """The diagonal block as a product of Z-string expansions.

    Raises ``OverflowError`` when an intermediate product exceeds ``budget``
    strings.
    """
    out = PauliSum.identity(n_qubits)
    for g in block:
        if not g.is_diagonal:
            raise ValueError(f"non-diagonal gate {g.name} in diagonal block")
        # exp(iG) = I - (2/pi) G  for generators with eigenvalues in {0, pi}
        factor = PauliSum.identity(n_qubits) - g.generator(n_qubits).scaled(2 / math.pi)
        out = product(out, factor)
        if budget is not None and len(out) > budget:
            raise OverflowError(f"diagonal operator exceeds {budget} Pauli strings")
    return out.real()


def diagonal_spec_of(block: Sequence[Gate], n_qubits: int, method: str = "dense") -> DiagonalSpec:
    """Count the -1 entries of a diagonal block.

    ``method="dense"`` evaluates the sign vector (n <= 26); ``"symbolic"``
    reads the trace off the identity coefficient of the Z-string product.
    """
    block = tuple(block)
    if method == "dense":
        if n_qubits > 26:
            raise ValueError("dense diagonal evaluation limited to n <= 26")
        n_minus = int(np.count_nonzero(diagonal_signs(block, n_qubits) < 0))
    elif method == "symbolic":
        d = diagonal_operator(block, n_qubits)
        tau = d.coeff(PauliString(n_qubits)).real
        n_minus = int(round((1 - tau) * (1 << n_qubits) / 2))
    else:
        raise ValueError(f"unknown method {method!r}")
    return DiagonalSpec(block, n_qubits, n_minus)


@dataclass(frozen=True)
class LayeredCircuit:
    """A layered circuit.

    ``structure="sandwich"``: ``layers`` are the left padding layers in time
    order, ``diagonal_block`` is the centre, and the right side is implied
    as the adjoint layers in reverse.  ``structure="general"``: just
    ``layers`` in time order.  ``global_phase`` multiplies the whole
    unitary by ``exp(i*phase)``.
    """

    n_qubits: int
    layers: tuple[Layer, ...] = ()
    diagonal_block: tuple[Gate, ...] = ()
    global_phase: float = 0.0
    structure: str = "sandwich"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "diagonal_block", tuple(self.diagonal_block))
        if self.structure not in ("sandwich", "general"):
            raise ValueError(f"unknown structure {self.structure!r}")
        if self.structure == "general" and self.diagonal_block:
            raise ValueError("general circuits have no diagonal block")
        for g in self.all_gates():
            if max(g.qubits) >= self.n_qubits:
                raise ValueError(f"gate {g} outside {self.n_qubits} qubits")
        if any(not g.is_diagonal for g in self.diagonal_block):
            raise ValueError("diagonal block may hold only Z/CZ/CCZ")

    @property
    def m(self) -> int:
        return len(self.layers)

    def right_layers(self) -> tuple[Layer, ...]:
        if self.structure != "sandwich":
            return ()
        return tuple(layer.dagger() for layer in reversed(self.layers))

    def blocks(self) -> list[tuple[str, int, Layer]]:
        """All blocks in time order as ``(side, index, layer)``."""
        out = [("L", k, layer) for k, layer in enumerate(self.layers)]
        if self.structure == "sandwich":
            out.append(("C", 0, Layer(self.diagonal_block)))
            out += [("R", self.m - 1 - k, layer) for k, layer in enumerate(self.right_layers())]
        return out

    def all_gates(self) -> list[Gate]:
        """Every gate in time order."""
        out = [g for layer in self.layers for g in layer.gates]
        if self.structure == "sandwich":
            out += list(self.diagonal_block)
            out += [g for layer in self.right_layers() for g in layer.gates]
        return out

    def diagonal_spec(self, method: str = "dense") -> DiagonalSpec:
        return diagonal_spec_of(self.diagonal_block, self.n_qubits, method)

    def gate_count(self) -> int:
        return len(self.all_gates())

    # -- text format --------------------------------------------------------

    def dumps(self) -> str:
        lines = [
            f"# dqc1sim-circuit v{FORMAT_VERSION}",
            f"qubits {self.n_qubits}",
            f"phase {self.global_phase!r}",
            f"structure {self.structure}",
        ]
        for side, k, layer in self.blocks():
            for g in layer.gates:
                qs = " ".join(str(q) for q in g.qubits)
                lines.append(f"LAYER {k} | GATE {g.label} {qs} | side {side}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "LayeredCircuit":
        header: dict[str, str] = {}
        left: dict[int, list[Gate]] = {}
        right: dict[int, list[Gate]] = {}
        centre: list[Gate] = []
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# dqc1sim-circuit v"):
            raise ValueError("missing circuit header")
        version = int(lines[0].rsplit("v", 1)[1])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported circuit format version {version}")
        for lineno, line in enumerate(lines[1:], 2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not line.startswith("LAYER"):
                key, _, value = line.partition(" ")
                header[key] = value.strip()
                continue
            try:
                layer_part, gate_part, side_part = (p.split() for p in line.split("|"))
                k = int(layer_part[1])
                gate = Gate.parse(gate_part[1], (int(q) for q in gate_part[2:]))
                side = side_part[1]
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: malformed gate line: {exc}") from None
            if side == "L":
                left.setdefault(k, []).append(gate)
            elif side == "R":
                right.setdefault(k, []).append(gate)
            elif side == "C":
                centre.append(gate)
            else:
                raise ValueError(f"line {lineno}: unknown side {side!r}")
        if sorted(left) != list(range(len(left))):
            raise ValueError("left layer indices must be 0..m-1")
        circuit = cls(
            n_qubits=int(header["qubits"]),
            layers=tuple(Layer(tuple(left[k])) for k in range(len(left))),
            diagonal_block=tuple(centre),
            global_phase=float(header.get("phase", "0.0")),
            structure=header.get("structure", "sandwich"),
        )
        if circuit.structure == "sandwich":
            expected = {k: list(circuit.layers[k].dagger().gates) for k in range(circuit.m)}
            if right != expected:
                raise ValueError("right-hand layers are not the adjoints of the left-hand layers")
        elif right:
            raise ValueError("general circuits have no right-hand side")
        return circuit


@dataclass
class PaddingConfig:
    """How random padding layers are drawn.

    ``weights`` are relative gate-type probabilities (uniform by default);
    ``fill`` is the fraction of qubits each layer tries to cover with
    disjoint gates (1.0 = maximal packing).
    """

    gate_set: str = "clifford_t"
    weights: dict[str, float] | None = None
    fill: float = 1.0

    def __post_init__(self):
        if self.gate_set not in GATE_SETS:
            raise ValueError(f"unknown gate set {self.gate_set!r}; choose from {sorted(GATE_SETS)}")
        if not 0 < self.fill <= 1:
            raise ValueError("fill must be in (0, 1]")
        if self.weights is not None:
            unknown = set(self.weights) - set(GATE_SETS[self.gate_set])
            if unknown:
                raise ValueError(f"weights for gates outside {self.gate_set}: {sorted(unknown)}")


def random_layer(n_qubits: int, rng: np.random.Generator, padding: PaddingConfig) -> Layer:
    """One layer of gates on disjoint qubit sets (so they commute trivially)."""
    names = GATE_SETS[padding.gate_set]
    w = padding.weights or {}
    weights = np.array([w.get(g, 1.0) for g in names])
    perm = [int(q) for q in rng.permutation(n_qubits)]
    budget = max(1, int(round(padding.fill * n_qubits)))
    gates = []
    used = 0
    while used < budget:
        fits = np.array([GATE_ARITY[g] <= budget - used for g in names]) & (weights > 0)
        if not fits.any():
            break
        p = np.where(fits, weights, 0.0)
        name = names[int(rng.choice(len(names), p=p / p.sum()))]
        k = GATE_ARITY[name]
        gates.append(Gate(name, tuple(perm[used:used + k])))
        used += k
    return Layer(tuple(gates))


def random_diagonal_block(n_qubits: int, counts: tuple[int, int, int],
                          rng: np.random.Generator) -> tuple[Gate, ...]:
    n_ccz, n_cz, n_z = counts
    if min(counts) < 0:
        raise ValueError("gate counts must be non-negative")
    if n_ccz and n_qubits < 3:
        raise ValueError("CCZ gates need n >= 3")
    if n_cz and n_qubits < 2:
        raise ValueError("CZ gates need n >= 2")
    block = []
    for name, count in (("CCZ", n_ccz), ("CZ", n_cz), ("Z", n_z)):
        k = GATE_ARITY[name]
        for _ in range(count):
            qs = rng.choice(n_qubits, size=k, replace=False)
            block.append(Gate(name, tuple(sorted(int(q) for q in qs))))
    return tuple(block)


def generate_hermitian_circuit(n: int, m: int, counts: tuple[int, int, int] = (6, 6, 6),
                               seed: int | Sequence[int] | None = 0,
                               padding: PaddingConfig | str = "clifford_t",
                               global_phase: float = 0.0) -> LayeredCircuit:
    """Random efficiently-implementable Hermitian unitary ``V^dag D V``.

    ``D`` holds ``counts = (n_ccz, n_cz, n_z)`` randomly placed diagonal
    gates; ``V`` is ``m`` random padding layers.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if m < 0:
        raise ValueError("m must be non-negative")
    if isinstance(padding, str):
        padding = PaddingConfig(padding)
    rng = np.random.default_rng(seed)
    block = random_diagonal_block(n, tuple(counts), rng)
    layers = tuple(random_layer(n, rng, padding) for _ in range(m))
    return LayeredCircuit(n, layers, block, global_phase, "sandwich")


def generate_random_circuit(n: int, m: int, seed: int | Sequence[int] | None = 0,
                            padding: PaddingConfig | str = "clifford_t") -> LayeredCircuit:
    """Unstructured circuit of ``m`` random commuting layers."""
    if isinstance(padding, str):
        padding = PaddingConfig(padding)
    rng = np.random.default_rng(seed)
    layers = tuple(random_layer(n, rng, padding) for _ in range(m))
    return LayeredCircuit(n, layers, (), 0.0, "general")
