"""Sparse Pauli-string operator algebra.

An n-qubit Pauli string is stored as two bitmasks ``x`` and ``z``: bit ``j``
of ``x`` (``z``) is set when X (Z) acts on qubit ``j``.  A qubit with both
bits set carries the textbook ``Y = i X Z``, so a string denotes

    P(x, z) = i^{popcount(x & z)} X^x Z^z

and is Hermitian.  Strings carry no phase; phases produced by products are
returned separately and folded into coefficients.  Basis index convention:
qubit 0 is the least significant bit of a computational-basis index.

A :class:`PauliSum` keeps its terms as three parallel numpy arrays
(``x``, ``z``, ``coeffs``), sorted by ``(x, z)`` with duplicates merged, so
products and commutators of whole sums vectorize over term pairs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

DEFAULT_THRESHOLD = 1e-12
MAX_QUBITS = 64

_I_POWERS = np.array([1, 1j, -1, -1j], dtype=np.complex128)
_PAULI_CHARS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_CHAR_BITS = {v: k for k, v in _PAULI_CHARS.items()}

# pairwise products are chunked to bound peak memory
_CHUNK = 1 << 21


def _popcount(a):
    return np.bitwise_count(a).astype(np.int64)


def _check_n(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


@dataclass(frozen=True, slots=True)
class PauliString:
    """A phase-free Pauli string on ``n_qubits`` qubits."""

    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        _check_n(self.n_qubits)
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("x/z bits exceed n_qubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse a word over ``IXYZ`` with qubit 0 leftmost."""
        x = z = 0
        for j, ch in enumerate(label.upper()):
            try:
                bx, bz = _CHAR_BITS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli character {ch!r} in {label!r}") from None
            x |= bx << j
            z |= bz << j
        return cls(len(label), x, z)

    @classmethod
    def single(cls, n_qubits: int, ops: dict[int, str]) -> "PauliString":
        """Build a string from a ``{qubit: 'X'|'Y'|'Z'}`` mapping."""
        x = z = 0
        for q, ch in ops.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for n={n_qubits}")
            bx, bz = _CHAR_BITS[ch.upper()]
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z)

    @property
    def label(self) -> str:
        return "".join(
            _PAULI_CHARS[((self.x >> j) & 1, (self.z >> j) & 1)] for j in range(self.n_qubits)
        )

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_diagonal(self) -> bool:
        return self.x == 0

    @property
    def support(self) -> int:
        return self.x | self.z

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def commutes_with(self, other: "PauliString") -> bool:
        _same_n(self.n_qubits, other.n_qubits)
        return ((self.x & other.z).bit_count() + (self.z & other.x).bit_count()) % 2 == 0

    def __str__(self) -> str:
        return self.label


def _same_n(a: int, b: int) -> None:
    if a != b:
        raise ValueError(f"qubit count mismatch: {a} vs {b}")


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, product)`` with ``a @ b == phase * product``.

    ``phase`` is one of ``1, 1j, -1, -1j``.
    """
    _same_n(a.n_qubits, b.n_qubits)
    x, z = a.x ^ b.x, a.z ^ b.z
    e = (
        (a.x & a.z).bit_count()
        + (b.x & b.z).bit_count()
        - (x & z).bit_count()
        + 2 * (a.z & b.x).bit_count()
    )
    return complex(_I_POWERS[e % 4]), PauliString(a.n_qubits, x, z)


def diagonal_entry(p: PauliString, q: int) -> complex:
    """The ``(q, q)`` matrix element of ``p``."""
    if not 0 <= q < (1 << p.n_qubits):
        raise IndexError(f"basis index {q} out of range for n={p.n_qubits}")
    if p.x:
        return 0.0
    return -1.0 if (p.z & q).bit_count() % 2 else 1.0


def _product_arrays(x1, z1, x2, z2):
    """Elementwise string products; returns (x, z, phase)."""
    x, z = x1 ^ x2, z1 ^ z2
    e = _popcount(x1 & z1) + _popcount(x2 & z2) - _popcount(x & z) + 2 * _popcount(z1 & x2)
    return x, z, _I_POWERS[e % 4]


def _anticommutes(x1, z1, x2, z2):
    return (_popcount((x1 & z2) ^ (z1 & x2)) & 1).astype(bool)


def _merge(x, z, c, threshold):
    if len(c) == 0:
        return x, z, c
    order = np.lexsort((z, x))
    x, z, c = x[order], z[order], c[order]
    new = np.empty(len(c), dtype=bool)
    new[0] = True
    np.not_equal(x[1:], x[:-1], out=new[1:])
    new[1:] |= z[1:] != z[:-1]
    starts = np.flatnonzero(new)
    c = np.add.reduceat(c, starts)
    x, z = x[starts], z[starts]
    keep = np.abs(c) >= threshold if threshold > 0 else c != 0
    return x[keep], z[keep], c[keep]


class PauliSum:
    """An immutable weighted sum of Pauli strings.

    Terms with ``|coeff| < threshold`` are dropped at construction (and after
    every algebra operation); exact zeros are always dropped.
    """

    __slots__ = ("n_qubits", "x", "z", "coeffs")

    def __init__(self, n_qubits: int, x=(), z=(), coeffs=(), *, threshold: float = DEFAULT_THRESHOLD,
                 _merged: bool = False):
        _check_n(n_qubits)
        x = np.asarray(x, dtype=np.uint64).reshape(-1)
        z = np.asarray(z, dtype=np.uint64).reshape(-1)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if not (len(x) == len(z) == len(coeffs)):
            raise ValueError("x, z and coeffs must have equal length")
        if not _merged:
            if n_qubits < 64 and len(x) and (int((x | z).max()) >> n_qubits):
                raise ValueError("x/z bits exceed n_qubits")
            x, z, coeffs = _merge(x, z, coeffs, threshold)
        for arr in (x, z, coeffs):
            arr.flags.writeable = False
        self.n_qubits = n_qubits
        self.x, self.z, self.coeffs = x, z, coeffs

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, [0], [0], [coeff])

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[PauliString | str, complex]],
                   threshold: float = DEFAULT_THRESHOLD) -> "PauliSum":
        xs, zs, cs = [], [], []
        for p, c in terms:
            if isinstance(p, str):
                p = PauliString.from_label(p)
            _same_n(n_qubits, p.n_qubits)
            xs.append(p.x)
            zs.append(p.z)
            cs.append(c)
        return cls(n_qubits, xs, zs, cs, threshold=threshold)

    @classmethod
    def from_dict(cls, n_qubits: int, terms: dict) -> "PauliSum":
        return cls.from_terms(n_qubits, terms.items())

    # -- views --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def term_count(self) -> int:
        return len(self.coeffs)

    def __iter__(self) -> Iterator[tuple[PauliString, complex]]:
        for x, z, c in zip(self.x.tolist(), self.z.tolist(), self.coeffs.tolist()):
            yield PauliString(self.n_qubits, x, z), c

    @property
    def terms(self) -> dict[PauliString, complex]:
        return dict(iter(self))

    def coeff(self, p: PauliString | str) -> complex:
        if isinstance(p, str):
            p = PauliString.from_label(p)
        hit = np.flatnonzero((self.x == np.uint64(p.x)) & (self.z == np.uint64(p.z)))
        return complex(self.coeffs[hit[0]]) if len(hit) else 0j

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if len(self) else 0.0

    def max_imag(self) -> float:
        return float(np.abs(self.coeffs.imag).max()) if len(self) else 0.0

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.max_imag() <= tol

    def is_diagonal(self) -> bool:
        return not np.any(self.x)

    def support(self) -> int:
        s = np.bitwise_or.reduce(self.x | self.z) if len(self) else 0
        return int(s)

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g})*{p.label}" for p, c in list(self)[:8])
        more = f" + ... ({len(self)} terms)" if len(self) > 8 else ""
        return f"PauliSum(n={self.n_qubits}: {body or '0'}{more})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return (self.n_qubits == other.n_qubits and np.array_equal(self.x, other.x)
                and np.array_equal(self.z, other.z) and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def allclose(self, other: "PauliSum", atol: float = 1e-10) -> bool:
        _same_n(self.n_qubits, other.n_qubits)
        diff = add_scaled(self, other, -1.0, threshold=0.0)
        return diff.max_abs() <= atol

    # -- arithmetic ---------------------------------------------------------

    def scaled(self, s: complex) -> "PauliSum":
        return PauliSum(self.n_qubits, self.x, self.z, self.coeffs * s)

    def real(self) -> "PauliSum":
        return PauliSum(self.n_qubits, self.x, self.z, self.coeffs.real)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return add_scaled(self, other, 1.0)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return add_scaled(self, other, -1.0)

    def __neg__(self) -> "PauliSum":
        return self.scaled(-1.0)

    def __mul__(self, s) -> "PauliSum":
        if isinstance(s, PauliSum):
            return NotImplemented
        return self.scaled(s)

    __rmul__ = __mul__

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return product(self, other)

    def truncated(self, threshold: float) -> "PauliSum":
        return truncate(self, threshold)

    def without_identity(self) -> tuple[complex, "PauliSum"]:
        """Split off the identity coefficient."""
        ident = (self.x == 0) & (self.z == 0)
        c0 = complex(self.coeffs[ident].sum())
        keep = ~ident
        return c0, PauliSum(self.n_qubits, self.x[keep], self.z[keep], self.coeffs[keep], _merged=True)

    def embed(self, qubits: list[int], n_qubits: int) -> "PauliSum":
        """Place this k-qubit sum onto ``qubits`` of an ``n_qubits`` register."""
        if len(qubits) != self.n_qubits:
            raise ValueError("need one target qubit per local qubit")
        x = np.zeros(len(self), dtype=np.uint64)
        z = np.zeros(len(self), dtype=np.uint64)
        for j, q in enumerate(qubits):
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for n={n_qubits}")
            bit = np.uint64(1 << q)
            x |= np.where((self.x >> np.uint64(j)) & np.uint64(1), bit, np.uint64(0))
            z |= np.where((self.z >> np.uint64(j)) & np.uint64(1), bit, np.uint64(0))
        return PauliSum(n_qubits, x, z, self.coeffs)


def add_scaled(a: PauliSum, b: PauliSum, s: complex = 1.0,
               threshold: float = DEFAULT_THRESHOLD) -> PauliSum:
    """``a + s*b``, merged and truncated."""
    _same_n(a.n_qubits, b.n_qubits)
    return PauliSum(
        a.n_qubits,
        np.concatenate([a.x, b.x]),
        np.concatenate([a.z, b.z]),
        np.concatenate([a.coeffs, b.coeffs * s]),
        threshold=threshold,
    )


def truncate(h: PauliSum, threshold: float) -> PauliSum:
    """Drop every term with ``|coeff| < threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    if threshold == 0:
        return h
    keep = np.abs(h.coeffs) >= threshold
    return PauliSum(h.n_qubits, h.x[keep], h.z[keep], h.coeffs[keep], _merged=True)


def _pairs(a: PauliSum, b: PauliSum):
    """Yield chunks of index pairs (ia, ib) covering a x b."""
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        return
    step = max(1, _CHUNK // nb)
    ib_all = np.arange(nb)
    for start in range(0, na, step):
        ia = np.arange(start, min(na, start + step))
        yield np.repeat(ia, nb), np.tile(ib_all, len(ia))


def _reduce_chunks(n, chunks, threshold):
    xs, zs, cs = [], [], []
    for x, z, c in chunks:
        xs.append(x)
        zs.append(z)
        cs.append(c)
    if not xs:
        return PauliSum(n)
    return PauliSum(n, np.concatenate(xs), np.concatenate(zs), np.concatenate(cs), threshold=threshold)


def product(a: PauliSum, b: PauliSum, threshold: float = DEFAULT_THRESHOLD) -> PauliSum:
    """Operator product ``a @ b``."""
    _same_n(a.n_qubits, b.n_qubits)

    def chunks():
        for ia, ib in _pairs(a, b):
            x, z, ph = _product_arrays(a.x[ia], a.z[ia], b.x[ib], b.z[ib])
            yield x, z, ph * a.coeffs[ia] * b.coeffs[ib]

    return _reduce_chunks(a.n_qubits, chunks(), threshold)


def commutator(a: PauliSum, b: PauliSum, threshold: float = DEFAULT_THRESHOLD) -> PauliSum:
    """``[a, b] = ab - ba``.

    Two strings either commute (the pair drops out) or anticommute (the pair
    contributes twice its product).
    """
    _same_n(a.n_qubits, b.n_qubits)

    def chunks():
        for ia, ib in _pairs(a, b):
            xa, za, xb, zb = a.x[ia], a.z[ia], b.x[ib], b.z[ib]
            anti = _anticommutes(xa, za, xb, zb)
            if not anti.any():
                continue
            ia, ib = ia[anti], ib[anti]
            x, z, ph = _product_arrays(xa[anti], za[anti], xb[anti], zb[anti])
            yield x, z, 2.0 * ph * a.coeffs[ia] * b.coeffs[ib]

    return _reduce_chunks(a.n_qubits, chunks(), threshold)


def anticommuting_mask(h: PauliSum, p: PauliString) -> np.ndarray:
    """Boolean mask of the terms of ``h`` that anticommute with ``p``."""
    _same_n(h.n_qubits, p.n_qubits)
    return _anticommutes(h.x, h.z, np.uint64(p.x), np.uint64(p.z))


def strings_commute(h: PauliSum) -> bool:
    """True when every pair of strings in ``h`` commutes."""
    if len(h) < 2:
        return True
    i, j = np.triu_indices(len(h), 1)
    return not _anticommutes(h.x[i], h.z[i], h.x[j], h.z[j]).any()


def diagonal_entry_sum(h: PauliSum, q: int) -> complex:
    """The ``(q, q)`` element of ``h``; linear in the number of terms."""
    if not 0 <= q < (1 << h.n_qubits):
        raise IndexError(f"basis index {q} out of range for n={h.n_qubits}")
    return complex(diagonal_entries(h, np.array([q], dtype=np.uint64))[0])


def diagonal_entries(h: PauliSum, qs) -> np.ndarray:
    """Vectorized :func:`diagonal_entry_sum` over an array of basis indices."""
    qs = np.asarray(qs, dtype=np.uint64).reshape(-1)
    diag = h.x == 0
    z, c = h.z[diag], h.coeffs[diag]
    out = np.zeros(len(qs), dtype=np.complex128)
    if len(c) == 0:
        return out
    step = max(1, _CHUNK // len(c))
    for s in range(0, len(qs), step):
        block = qs[s:s + step]
        signs = 1.0 - 2.0 * (_popcount(block[:, None] & z[None, :]) & 1)
        out[s:s + step] = signs @ c
    return out


# -- text serialization ------------------------------------------------------

def dumps(h: PauliSum) -> str:
    """One term per line: ``<re> <im> <word>``, qubit 0 leftmost."""
    lines = [f"{c.real!r} {c.imag!r} {p.label}" for p, c in h]
    return "\n".join(lines) + ("\n" if lines else "")


def loads(text: str, n_qubits: int | None = None) -> PauliSum:
    terms = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected '<re> <im> <word>'")
        p = PauliString.from_label(parts[2])
        if n_qubits is None:
            n_qubits = p.n_qubits
        terms.append((p, complex(float(parts[0]), float(parts[1]))))
    if n_qubits is None:
        raise ValueError("empty Pauli sum needs an explicit n_qubits")
    return PauliSum.from_terms(n_qubits, terms, threshold=0.0)
