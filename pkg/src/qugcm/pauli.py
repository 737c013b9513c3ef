"""Pauli strings and sums in symplectic (x|z) bit-mask form.

Qubit ``j`` corresponds to bit ``j`` of both masks.  A single-qubit factor is
``I`` (0,0), ``X`` (1,0), ``Z`` (0,1) or ``Y`` (1,1), and a string carries an
extra global factor ``i**phase``.  Products of masks are bitwise XORs; the
phase of a product is accumulated with popcounts, so multiplication is linear
in the qubit count.

:class:`PauliSum` stores its terms column-wise in numpy arrays.  After
canonicalization every stored string is Hermitian (phase folded into the
coefficient), terms are sorted by ``(x, z)`` and duplicates are merged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_QUBITS = 32
DEFAULT_PRUNE_TOL = 1e-12

# i**k for k in Z_4
_IPOW = np.array([1, 1j, -1, -1j], dtype=complex)

_CHAR_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_CHAR = {v: k for k, v in _CHAR_TO_BITS.items()}

# Dense accumulation is used when 4**n fits comfortably in memory.
_DENSE_MERGE_MAX_QUBITS = 11


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


def _popcount(a):
    return np.bitwise_count(a).astype(np.int64)


def _check_n(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis times ``i**phase``."""

    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        _check_n(self.n_qubits)
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("mask has bits beyond n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        """Parse ``"XIZY"`` (qubit 0 leftmost)."""
        x = z = 0
        for j, ch in enumerate(label.upper()):
            try:
                bx, bz = _CHAR_TO_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli character {ch!r} in {label!r}") from None
            x |= bx << j
            z |= bz << j
        return cls(len(label), x, z, phase)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, op: str) -> "PauliString":
        bx, bz = _CHAR_TO_BITS[op]
        return cls(n_qubits, bx << qubit, bz << qubit)

    @property
    def label(self) -> str:
        return "".join(
            _BITS_TO_CHAR[((self.x >> j) & 1, (self.z >> j) & 1)]
            for j in range(self.n_qubits)
        )

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0 and self.phase == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        prefix = ["", "i", "-", "-i"][self.phase]
        return prefix + self.label

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix (basis index bit ``j`` = qubit ``j``)."""
        dim = 1 << self.n_qubits
        b = np.arange(dim, dtype=np.uint64)
        sign = 1 - 2 * (_popcount(b & np.uint64(self.z)) & 1)
        amp = _IPOW[(self.phase + (self.x & self.z).bit_count()) % 4] * sign
        out = np.zeros((dim, dim), dtype=complex)
        out[(b ^ np.uint64(self.x)).astype(np.int64), b.astype(np.int64)] = amp
        return out


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product ``a @ b`` with exact phase tracking."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits} vs {b.n_qubits} qubits")
    x = a.x ^ b.x
    z = a.z ^ b.z
    phase = (
        a.phase
        + b.phase
        + (a.x & a.z).bit_count()
        + (b.x & b.z).bit_count()
        + 2 * (a.z & b.x).bit_count()
        - (x & z).bit_count()
    )
    return PauliString(a.n_qubits, x, z, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff ``a`` and ``b`` commute (even symplectic product)."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits} vs {b.n_qubits} qubits")
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) % 2 == 0


def qwc(a: PauliString, b: PauliString) -> bool:
    """Qubit-wise commutation: factors agree wherever both act nontrivially."""
    if a.n_qubits != b.n_qubits:
        raise DimensionError(f"{a.n_qubits} vs {b.n_qubits} qubits")
    both = (a.x | a.z) & (b.x | b.z)
    return ((a.x ^ b.x) | (a.z ^ b.z)) & both == 0


def _merge(n_qubits, x, z, c, prune_tol):
    """Sort by (x, z), sum duplicates and drop ``|c| <= prune_tol``."""
    if len(c) == 0:
        return x, z, c
    if n_qubits <= _DENSE_MERGE_MAX_QUBITS:
        key = (x.astype(np.int64) << n_qubits) | z.astype(np.int64)
        size = 1 << (2 * n_qubits)
        if len(key) * 4 < size:
            uniq, inv = np.unique(key, return_inverse=True)
            re = np.bincount(inv, weights=c.real, minlength=len(uniq))
            im = np.bincount(inv, weights=c.imag, minlength=len(uniq))
        else:
            re = np.bincount(key, weights=c.real, minlength=size)
            im = np.bincount(key, weights=c.imag, minlength=size)
            uniq = np.flatnonzero((re != 0) | (im != 0))
            re, im = re[uniq], im[uniq]
        cc = re + 1j * im
        keep = np.abs(cc) > prune_tol
        uniq, cc = uniq[keep], cc[keep]
        mask = (1 << n_qubits) - 1
        return (
            (uniq >> n_qubits).astype(np.uint64),
            (uniq & mask).astype(np.uint64),
            cc,
        )
    order = np.lexsort((z, x))
    x, z, c = x[order], z[order], c[order]
    start = np.ones(len(x), dtype=bool)
    start[1:] = (x[1:] != x[:-1]) | (z[1:] != z[:-1])
    idx = np.flatnonzero(start)
    cc = np.add.reduceat(c, idx)
    keep = np.abs(cc) > prune_tol
    return x[idx][keep], z[idx][keep], cc[keep]


@dataclass(frozen=True, eq=False)
class PauliSum:
    """Complex linear combination of Pauli strings, column-stored.

    Construct through :meth:`from_terms`, :meth:`from_labels` or
    :meth:`from_arrays`; those paths canonicalize.  The raw constructor trusts
    its arrays.
    """

    n_qubits: int
    xs: np.ndarray = field(repr=False)
    zs: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_n(self.n_qubits)
        for arr in (self.xs, self.zs, self.coeffs):
            arr.flags.writeable = False

    # -- construction -----------------------------------------------------

    @classmethod
    def from_arrays(cls, n_qubits, xs, zs, coeffs, phases=None,
                    prune_tol: float = DEFAULT_PRUNE_TOL) -> "PauliSum":
        xs = np.asarray(xs, dtype=np.uint64)
        zs = np.asarray(zs, dtype=np.uint64)
        coeffs = np.asarray(coeffs, dtype=complex)
        if phases is not None:
            coeffs = coeffs * _IPOW[np.asarray(phases, dtype=np.int64) % 4]
        x, z, c = _merge(n_qubits, xs, zs, coeffs, prune_tol)
        return cls(n_qubits, x, z, c)

    @classmethod
    def from_terms(cls, n_qubits: int,
                   terms: Iterable[tuple[complex, PauliString]],
                   prune_tol: float = DEFAULT_PRUNE_TOL) -> "PauliSum":
        terms = list(terms)
        for _, p in terms:
            if p.n_qubits != n_qubits:
                raise DimensionError(f"term on {p.n_qubits} qubits in {n_qubits}-qubit sum")
        return cls.from_arrays(
            n_qubits,
            [p.x for _, p in terms],
            [p.z for _, p in terms],
            [c for c, _ in terms],
            [p.phase for _, p in terms],
            prune_tol=prune_tol,
        )

    @classmethod
    def from_labels(cls, items: Sequence[tuple[complex, str]] | dict,
                    prune_tol: float = DEFAULT_PRUNE_TOL) -> "PauliSum":
        if isinstance(items, dict):
            items = [(c, lab) for lab, c in items.items()]
        if not items:
            raise ValueError("cannot infer n_qubits from an empty label list")
        n = len(items[0][1])
        return cls.from_terms(n, [(c, PauliString.from_label(lab)) for c, lab in items],
                              prune_tol=prune_tol)

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        e = np.zeros(0, dtype=np.uint64)
        return cls(n_qubits, e, e.copy(), np.zeros(0, dtype=complex))

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls.from_arrays(n_qubits, [0], [0], [coeff], prune_tol=0.0)

    # -- views --------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self) -> Iterator[tuple[complex, PauliString]]:
        for x, z, c in zip(self.xs, self.zs, self.coeffs):
            yield complex(c), PauliString(self.n_qubits, int(x), int(z))

    @property
    def terms(self) -> list[tuple[complex, PauliString]]:
        return list(self)

    def strings(self) -> list[PauliString]:
        return [p for _, p in self]

    def one_norm(self, skip_identity: bool = False) -> float:
        c = np.abs(self.coeffs)
        if skip_identity:
            c = c[(self.xs != 0) | (self.zs != 0)]
        return float(c.sum())

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        # canonical strings are Hermitian, so the sum is iff every coeff is real
        return bool(np.all(np.abs(self.coeffs.imag) <= tol))

    def is_anti_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.coeffs.real) <= tol))

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self)})"

    def __str__(self) -> str:
        if not len(self):
            return "0"
        return " + ".join(f"({c:.6g})*{p.label}" for c, p in self)

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        b = np.arange(dim, dtype=np.uint64)
        cols = b.astype(np.int64)
        for x, z, c in zip(self.xs, self.zs, self.coeffs):
            sign = 1 - 2 * (_popcount(b & z) & 1)
            y = int(x & z).bit_count()
            out[(b ^ x).astype(np.int64), cols] += c * _IPOW[y % 4] * sign
        return out

    # -- algebra ------------------------------------------------------------

    def _check(self, other: "PauliSum") -> None:
        if self.n_qubits != other.n_qubits:
            raise DimensionError(f"{self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        self._check(other)
        return PauliSum.from_arrays(
            self.n_qubits,
            np.concatenate([self.xs, other.xs]),
            np.concatenate([self.zs, other.zs]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __neg__(self) -> "PauliSum":
        return PauliSum(self.n_qubits, self.xs, self.zs, -self.coeffs)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-other)

    def scale(self, factor: complex) -> "PauliSum":
        if factor == 0:
            return PauliSum.zero(self.n_qubits)
        return PauliSum(self.n_qubits, self.xs, self.zs, self.coeffs * factor)

    def __rmul__(self, factor) -> "PauliSum":
        return self.scale(factor)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            return sum_multiply(self, other)
        return self.scale(other)

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        return sum_multiply(self, other)

    def dagger(self) -> "PauliSum":
        return PauliSum(self.n_qubits, self.xs, self.zs, self.coeffs.conj())

    def equals(self, other: "PauliSum", tol: float = 1e-12) -> bool:
        """Term-wise comparison within ``tol``."""
        diff = canonicalize(self - other, 0.0)
        return bool(np.all(np.abs(diff.coeffs) <= tol))

    # -- serialization --------------------------------------------------------

    def to_json_obj(self) -> list[dict]:
        return [{"pauli": p.label, "coeff": [c.real, c.imag]} for c, p in self]

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_obj(), **kwargs)

    @classmethod
    def from_json_obj(cls, obj: list[dict], n_qubits: int | None = None) -> "PauliSum":
        if not obj:
            if n_qubits is None:
                raise ValueError("empty term list needs an explicit n_qubits")
            return cls.zero(n_qubits)
        items = [(complex(t["coeff"][0], t["coeff"][1]), t["pauli"]) for t in obj]
        out = cls.from_labels(items, prune_tol=0.0)
        if n_qubits is not None and out.n_qubits != n_qubits:
            raise DimensionError(f"JSON sum has {out.n_qubits} qubits, expected {n_qubits}")
        return out

    @classmethod
    def from_json(cls, text: str, n_qubits: int | None = None) -> "PauliSum":
        return cls.from_json_obj(json.loads(text), n_qubits)


def canonicalize(s: PauliSum, prune_tol: float = DEFAULT_PRUNE_TOL) -> PauliSum:
    """Sort, merge and prune; idempotent."""
    if prune_tol < 0:
        raise ValueError("prune_tol must be non-negative")
    x, z, c = _merge(s.n_qubits, s.xs, s.zs, s.coeffs, prune_tol)
    return PauliSum(s.n_qubits, x, z, c)


def _product_arrays(ax, az, ac, bx, bz, bc):
    x = ax[:, None] ^ bx[None, :]
    z = az[:, None] ^ bz[None, :]
    ya = _popcount(ax & az)[:, None]
    yb = _popcount(bx & bz)[None, :]
    ph = ya + yb + 2 * _popcount(az[:, None] & bx[None, :]) - _popcount(x & z)
    c = ac[:, None] * bc[None, :] * _IPOW[ph % 4]
    return x.ravel(), z.ravel(), c.ravel()


# rows of ``a`` per chunk are chosen so a chunk holds about this many products
_CHUNK_PRODUCTS = 1 << 21


def sum_multiply(a: PauliSum, b: PauliSum,
                 prune_tol: float = DEFAULT_PRUNE_TOL) -> PauliSum:
    """Canonical product ``a @ b`` of two Pauli sums."""
    a._check(b)
    n = a.n_qubits
    if not len(a) or not len(b):
        return PauliSum.zero(n)
    rows = max(1, _CHUNK_PRODUCTS // len(b))
    parts_x, parts_z, parts_c = [], [], []
    for start in range(0, len(a), rows):
        sl = slice(start, start + rows)
        x, z, c = _product_arrays(a.xs[sl], a.zs[sl], a.coeffs[sl], b.xs, b.zs, b.coeffs)
        # merge without pruning so cancellations across chunks stay exact
        x, z, c = _merge(n, x, z, c, 0.0)
        parts_x.append(x)
        parts_z.append(z)
        parts_c.append(c)
    x, z, c = _merge(n, np.concatenate(parts_x), np.concatenate(parts_z),
                     np.concatenate(parts_c), prune_tol)
    return PauliSum(n, x, z, c)


@dataclass(frozen=True)
class QwcGrouping:
    """Partition of a sum's term indices into qubit-wise commuting groups.

    ``bases[g]`` is a label over ``{I, X, Y, Z}``: the single-qubit measurement
    basis for group ``g`` (``I`` where no member acts).
    """

    groups: tuple[tuple[int, ...], ...]
    bases: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.groups)


def group_qwc(s: PauliSum) -> QwcGrouping:
    """Greedy first-fit QWC partition in canonical term order."""
    n = len(s)
    if n == 0:
        return QwcGrouping((), ())
    xs = s.xs.astype(np.int64)
    zs = s.zs.astype(np.int64)
    gx = np.zeros(n, dtype=np.int64)
    gz = np.zeros(n, dtype=np.int64)
    n_groups = 0
    assign = np.empty(n, dtype=np.int64)
    for i in range(n):
        x, z = xs[i], zs[i]
        sup = x | z
        if n_groups:
            gsup = gx[:n_groups] | gz[:n_groups]
            clash = ((gx[:n_groups] ^ x) | (gz[:n_groups] ^ z)) & gsup & sup
            hits = np.flatnonzero(clash == 0)
        else:
            hits = ()
        if len(hits):
            g = hits[0]
            gx[g] |= x
            gz[g] |= z
        else:
            g = n_groups
            gx[g], gz[g] = x, z
            n_groups += 1
        assign[i] = g
    groups = tuple(tuple(np.flatnonzero(assign == g).tolist()) for g in range(n_groups))
    bases = tuple(PauliString(s.n_qubits, int(gx[g]), int(gz[g])).label for g in range(n_groups))
    return QwcGrouping(groups, bases)


def pauli_sum_from_matrix(mat: np.ndarray, prune_tol: float = DEFAULT_PRUNE_TOL) -> PauliSum:
    """Pauli decomposition of a dense matrix via ``Tr(P^dag M) / 2**n``.

    Brute force over all ``4**n`` strings; meant for small test operators.
    """
    dim = mat.shape[0]
    n = dim.bit_length() - 1
    if mat.shape != (dim, dim) or 1 << n != dim:
        raise ValueError("matrix must be square with power-of-two dimension")
    b = np.arange(dim, dtype=np.uint64)
    xs, zs, cs = [], [], []
    for x in range(dim):
        rows = (b ^ np.uint64(x)).astype(np.int64)
        # entries M[b^x, b] are the only ones a string with this x-mask sees
        vals = mat[rows, b.astype(np.int64)]
        for z in range(dim):
            sign = 1 - 2 * (_popcount(b & np.uint64(z)) & 1)
            amp = _IPOW[(x & z).bit_count() % 4]
            cs.append(np.sum(np.conj(amp * sign) * vals) / dim)
            xs.append(x)
            zs.append(z)
    return PauliSum.from_arrays(n, xs, zs, cs, prune_tol=prune_tol)
