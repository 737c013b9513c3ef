"""Dense statevector expectations, an expectation cache and a shot-noise model.

Kernel entries are evaluated operator-side: the sandwiched operator is
expanded into a Pauli sum and every string is measured against one fixed
state.  Because the state never changes during a run, an expectation can be
cached under its Pauli string alone.
"""

from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from .pauli import DimensionError, PauliString, PauliSum, QwcGrouping, _IPOW, _popcount

# terms x amplitudes evaluated per vectorized chunk
_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitudes; basis index bit ``j`` is qubit ``j``."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_qubits,):
            raise DimensionError(f"expected {1 << self.n_qubits} amplitudes, got {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, n_qubits: int, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(n_qubits, amps / np.linalg.norm(amps))

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @cached_property
    def digest(self) -> str:
        return hashlib.sha1(self.amplitudes.tobytes()).hexdigest()

    @cached_property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.amplitudes)

    def inner(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _expect_arrays(state: StateVector, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    """<state| sigma(x, z) |state> for Hermitian strings, one value per term."""
    psi = state.amplitudes
    out = np.empty(len(xs), dtype=complex)
    support = state.support
    if len(support) == 1:
        # computational basis state: only diagonal strings survive
        b = np.uint64(support[0])
        sign = 1.0 - 2.0 * (_popcount(zs & b) & 1)
        out[:] = np.where(xs == 0, sign, 0.0)
        return out
    dim = len(psi)
    b = np.arange(dim, dtype=np.uint64)
    step = max(1, _CHUNK // dim)
    for start in range(0, len(xs), step):
        x = xs[start:start + step, None]
        z = zs[start:start + step, None]
        sign = 1.0 - 2.0 * (_popcount(z & b[None, :]) & 1)
        y = _IPOW[_popcount(x & z) % 4]
        bra = psi[(b[None, :] ^ x).astype(np.int64)].conj()
        out[start:start + step] = y[:, 0] * np.sum(bra * psi[None, :] * sign, axis=1)
    return out


def expect_string(state: StateVector, p: PauliString) -> complex:
    """Exact ``<state|p|state>`` including the string's ``i**phase``."""
    if p.n_qubits != state.n_qubits:
        raise DimensionError(f"{p.n_qubits}-qubit string on {state.n_qubits}-qubit state")
    val = _expect_arrays(state, np.array([p.x], dtype=np.uint64),
                         np.array([p.z], dtype=np.uint64))[0]
    return complex(_IPOW[p.phase] * val)


def _pack(xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
    return (xs.astype(np.uint64) << np.uint64(32)) | zs.astype(np.uint64)


class ExpectationCache:
    """Expectation values keyed by canonical Pauli string, for one fixed state.

    Keeps hit/miss counters and per-block tallies of how many strings were
    requested (``total``) and how many distinct strings that was (``unique``).
    Insertions take a lock; values are idempotent so concurrent writers of
    the same key are harmless.
    """

    def __init__(self):
        self._keys = np.zeros(0, dtype=np.uint64)
        self._vals = np.zeros(0, dtype=complex)
        self._block_keys: dict[str, np.ndarray] = {}
        self._block_totals: dict[str, int] = {}
        self._digest: str | None = None
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._keys)

    def _bind(self, state: StateVector) -> None:
        if self._digest is None:
            self._digest = state.digest
        elif self._digest != state.digest:
            raise ValueError("expectation cache is bound to a different state")

    def lookup(self, state: StateVector, xs: np.ndarray, zs: np.ndarray,
               block: str | None = None) -> np.ndarray:
        """Expectations for the given strings, computing and storing misses."""
        self._bind(state)
        keys = _pack(xs, zs)
        with self._lock:
            cur_keys, cur_vals = self._keys, self._vals
        vals = np.empty(len(keys), dtype=complex)
        if len(cur_keys):
            pos = np.minimum(np.searchsorted(cur_keys, keys), len(cur_keys) - 1)
            found = cur_keys[pos] == keys
            vals[found] = cur_vals[pos[found]]
        else:
            found = np.zeros(len(keys), dtype=bool)
        miss = ~found
        if np.any(miss):
            new = _expect_arrays(state, xs[miss], zs[miss])
            vals[miss] = new
            with self._lock:
                all_keys = np.concatenate([self._keys, keys[miss]])
                all_vals = np.concatenate([self._vals, new])
                uk, first = np.unique(all_keys, return_index=True)
                self._keys, self._vals = uk, all_vals[first]
        with self._lock:
            n_hit = int(found.sum())
            self.hits += n_hit
            self.misses += len(keys) - n_hit
            if block is not None:
                prev = self._block_keys.get(block, np.zeros(0, dtype=np.uint64))
                self._block_keys[block] = np.union1d(prev, keys)
                self._block_totals[block] = self._block_totals.get(block, 0) + len(keys)
        return vals

    def stats(self) -> dict[str, dict]:
        """``{block: {"unique", "total", "ratio"}}`` plus an ``"All"`` row."""
        out = {}
        with self._lock:
            blocks = dict(self._block_keys)
            totals = dict(self._block_totals)
        for name, keys in blocks.items():
            t = totals[name]
            out[name] = {"unique": int(len(keys)), "total": int(t),
                         "ratio": len(keys) / t if t else 0.0}
        if blocks:
            keys = np.unique(np.concatenate(list(blocks.values())))
            t = sum(totals.values())
            out["All"] = {"unique": int(len(keys)), "total": int(t),
                          "ratio": len(keys) / t if t else 0.0}
        return out


def expect_sum(state: StateVector, s: PauliSum, cache: ExpectationCache | None = None,
               block: str | None = None) -> complex:
    """``sum_j h_j <state|P_j|state>``, consulting ``cache`` when given."""
    if s.n_qubits != state.n_qubits:
        raise DimensionError(f"{s.n_qubits}-qubit sum on {state.n_qubits}-qubit state")
    if not len(s):
        return 0j
    if cache is None:
        vals = _expect_arrays(state, s.xs, s.zs)
    else:
        vals = cache.lookup(state, s.xs, s.zs, block)
    return complex(np.dot(s.coeffs, vals))


ShotMode = Literal["exact", "max_variance_gaussian"]
ShotConvention = Literal["per_entry", "per_group"]


@dataclass(frozen=True)
class ShotModel:
    """Finite-shot noise at the maximum-variance bound.

    ``convention`` says what ``shots`` counts: all measurements spent on one
    kernel entry (``per_entry``) or measurements of each QWC group
    (``per_group``).
    """

    shots: int = 1000
    mode: ShotMode = "exact"
    seed: int = 0
    convention: ShotConvention = "per_entry"

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be positive")
        if self.mode not in ("exact", "max_variance_gaussian"):
            raise ValueError(f"unknown shot mode {self.mode!r}")
        if self.convention not in ("per_entry", "per_group"):
            raise ValueError(f"unknown shot convention {self.convention!r}")

    @classmethod
    def exact(cls) -> "ShotModel":
        return cls(mode="exact")

    def rng(self, replicate: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, replicate])


def _group_norms(s: PauliSum, grouping: QwcGrouping) -> np.ndarray:
    # sqrt(sum_{i,j in G} |h_i h_j|) == sum_{i in G} |h_i|; the identity string
    # has zero variance and is left out
    nontrivial = (s.xs != 0) | (s.zs != 0)
    a = np.abs(s.coeffs) * nontrivial
    return np.array([a[list(g)].sum() for g in grouping.groups], dtype=float)


def measurement_budget(s: PauliSum, grouping: QwcGrouping) -> float:
    """``sum_G sqrt(sum_{i,j in G} |h_i h_j|)`` (covariances bounded by 1)."""
    return float(_group_norms(s, grouping).sum())


def shot_bound(s: PauliSum, grouping: QwcGrouping, shots: int,
               convention: ShotConvention = "per_entry") -> float:
    """Upper bound on the standard deviation of a finite-shot estimate of ``s``."""
    if shots < 1:
        raise ValueError("shots must be positive")
    norms = _group_norms(s, grouping)
    if convention == "per_entry":
        return float(norms.sum()) / math.sqrt(shots)
    if convention == "per_group":
        return float(np.sqrt(np.sum(norms ** 2))) / math.sqrt(shots)
    raise ValueError(f"unknown shot convention {convention!r}")


def measurements_needed(s: PauliSum, grouping: QwcGrouping, eps: float) -> int:
    """Shots needed to reach standard deviation ``eps``, rounded up."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return math.ceil((measurement_budget(s, grouping) / eps) ** 2)


def sample_kernel_entry(exact: complex, bound: float, model: ShotModel,
                        rng: np.random.Generator | None = None,
                        real: bool = False) -> complex:
    """Perturb ``exact`` by Gaussian noise of standard deviation ``bound``.

    Real and imaginary parts get independent draws; ``real=True`` (Hermitian
    diagonals) perturbs only the real part.
    """
    if model.mode == "exact":
        return exact
    rng = model.rng() if rng is None else rng
    re = rng.normal(0.0, bound)
    im = 0.0 if real else rng.normal(0.0, bound)
    return complex(exact) + complex(re, im)


def apply_sum(s: PauliSum, state: StateVector | np.ndarray) -> np.ndarray:
    """Amplitudes of ``s |state>`` (not normalized)."""
    psi = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, complex)
    if len(psi) != 1 << s.n_qubits:
        raise DimensionError("state and operator sizes differ")
    b = np.arange(len(psi), dtype=np.uint64)
    out = np.zeros(len(psi), dtype=complex)
    for x, z, c in zip(s.xs, s.zs, s.coeffs):
        src = b ^ x
        sign = 1.0 - 2.0 * (_popcount(z & src) & 1)
        out += c * _IPOW[int(x & z).bit_count() % 4] * sign * psi[src.astype(np.int64)]
    return out
