"""Second-quantized operators and their Jordan-Wigner images.

Modes are 0-based spin-orbital indices that coincide with qubit indices.  The
creation operator on mode ``p`` maps to ``Z_0 ... Z_{p-1} (X_p - i Y_p) / 2``,
so an occupied mode is qubit state ``|1>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .pauli import DEFAULT_PRUNE_TOL, PauliSum, sum_multiply
from .simulator import StateVector

ALPHA, BETA = 0, 1


class IntegralSymmetryError(ValueError):
    """Integral arrays violate the required permutational symmetry."""


Ladder = tuple[int, bool]  # (mode, dagger)


@dataclass(frozen=True)
class FermionOperator:
    """Linear combination of products of ladder operators.

    Each term is ``(coefficient, ((mode, dagger), ...))``; products are read
    left to right as written, and the empty product is the identity.
    """

    terms: tuple[tuple[complex, tuple[Ladder, ...]], ...] = ()

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, Sequence[Ladder]]]) -> "FermionOperator":
        return cls(tuple((complex(c), tuple((int(m), bool(d)) for m, d in prod))
                         for c, prod in terms))

    @classmethod
    def identity(cls, coeff: complex = 1.0) -> "FermionOperator":
        return cls(((complex(coeff), ()),))

    @classmethod
    def hopping(cls, p: int, q: int, coeff: complex = 1.0) -> "FermionOperator":
        """``coeff * a_p^dag a_q``."""
        return cls(((complex(coeff), ((p, True), (q, False))),))

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        return FermionOperator(self.terms + other.terms)

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + other.scale(-1)

    def scale(self, factor: complex) -> "FermionOperator":
        return FermionOperator(tuple((c * factor, prod) for c, prod in self.terms))

    def __rmul__(self, factor) -> "FermionOperator":
        return self.scale(factor)

    def __mul__(self, other):
        if isinstance(other, FermionOperator):
            return FermionOperator(tuple(
                (ca * cb, pa + pb) for ca, pa in self.terms for cb, pb in other.terms
            ))
        return self.scale(other)

    def dagger(self) -> "FermionOperator":
        return FermionOperator(tuple(
            (c.conjugate(), tuple((m, not d) for m, d in reversed(prod)))
            for c, prod in self.terms
        ))

    def max_mode(self) -> int:
        modes = [m for _, prod in self.terms for m, _ in prod]
        return max(modes) if modes else -1


@lru_cache(maxsize=4096)
def _ladder_image(mode: int, dagger: bool, n_qubits: int) -> PauliSum:
    low = (1 << mode) - 1
    bit = 1 << mode
    # X_p and Y_p, both carrying the parity string on lower modes
    y_coeff = -0.5j if dagger else 0.5j
    return PauliSum.from_arrays(n_qubits, [bit, bit], [low, low | bit], [0.5, y_coeff],
                                prune_tol=0.0)


def jordan_wigner(f: FermionOperator, n_qubits: int,
                  prune_tol: float = DEFAULT_PRUNE_TOL) -> PauliSum:
    """Jordan-Wigner image of ``f`` on ``n_qubits`` qubits."""
    if f.max_mode() >= n_qubits:
        raise IndexError(f"mode {f.max_mode()} out of range for {n_qubits} qubits")
    if any(m < 0 for _, prod in f.terms for m, _ in prod):
        raise IndexError("negative mode index")
    xs, zs, cs = [], [], []
    for coeff, prod in f.terms:
        if coeff == 0:
            continue
        acc = PauliSum.identity(n_qubits, coeff)
        for mode, dagger in prod:
            acc = sum_multiply(acc, _ladder_image(mode, dagger, n_qubits), 0.0)
        xs.append(acc.xs)
        zs.append(acc.zs)
        cs.append(acc.coeffs)
    if not cs:
        return PauliSum.zero(n_qubits)
    return PauliSum.from_arrays(n_qubits, np.concatenate(xs), np.concatenate(zs),
                                np.concatenate(cs), prune_tol=prune_tol)


def number_operator(n_qubits: int, modes: Iterable[int] | None = None) -> PauliSum:
    """``sum_p a_p^dag a_p`` over ``modes`` (all by default)."""
    modes = range(n_qubits) if modes is None else list(modes)
    f = FermionOperator(tuple((1.0 + 0j, ((p, True), (p, False))) for p in modes))
    return jordan_wigner(f, n_qubits)


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Anti-Hermitian parameter matrix of a one-body U(N) generator.

    The diagonal must be exactly zero.  With anti-Hermitian ``z`` it would only
    contribute a global phase, and rejecting it keeps that convention explicit.
    """

    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=complex)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise ValueError("generator matrix must be square")
        if np.any(np.diag(z) != 0):
            raise ValueError("generator matrix diagonal must be exactly zero")
        if not np.allclose(z.conj().T, -z, atol=1e-12, rtol=0):
            raise ValueError("generator matrix must be anti-Hermitian (z_qp* = -z_pq)")
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def n_modes(self) -> int:
        return self.z.shape[0]

    @classmethod
    def zeros(cls, n_modes: int) -> "GeneratorMatrix":
        return cls(np.zeros((n_modes, n_modes)))

    @classmethod
    def from_excitations(cls, n_modes: int,
                         pairs: Iterable[tuple[int, int]],
                         amplitude: float = 1.0) -> "GeneratorMatrix":
        """``sum (a_a^dag a_i - a_i^dag a_a)`` for each ``(a, i)`` in ``pairs``."""
        z = np.zeros((n_modes, n_modes))
        for a, i in pairs:
            z[a, i] += amplitude
            z[i, a] -= amplitude
        return cls(z)

    def scaled(self, factor: float) -> "GeneratorMatrix":
        return GeneratorMatrix(self.z * factor)

    def to_fermion_operator(self) -> FermionOperator:
        rows, cols = np.nonzero(self.z)
        return FermionOperator(tuple(
            (complex(self.z[p, q]), ((int(p), True), (int(q), False)))
            for p, q in zip(rows, cols)
        ))


def generator_sum(zmat: GeneratorMatrix, n_qubits: int | None = None) -> PauliSum:
    """JW image of ``Gamma(Z) = sum_{p != q} z_pq a_p^dag a_q``."""
    n = zmat.n_modes if n_qubits is None else n_qubits
    return jordan_wigner(zmat.to_fermion_operator(), n)


@dataclass(frozen=True)
class ReferenceState:
    """Occupation pattern of a single determinant (e.g. Hartree-Fock)."""

    n_modes: int
    occupied: frozenset[int]

    def __post_init__(self):
        occ = frozenset(int(p) for p in self.occupied)
        if any(not 0 <= p < self.n_modes for p in occ):
            raise ValueError("occupied mode out of range")
        object.__setattr__(self, "occupied", occ)

    @property
    def n_particles(self) -> int:
        return len(self.occupied)

    @property
    def basis_index(self) -> int:
        return sum(1 << p for p in self.occupied)


def hf_statevector(ref: ReferenceState) -> StateVector:
    """Computational basis state with bit ``p`` set iff mode ``p`` is occupied."""
    amps = np.zeros(1 << ref.n_modes, dtype=complex)
    amps[ref.basis_index] = 1.0
    return StateVector(ref.n_modes, amps)


@dataclass(frozen=True)
class SpinOrbitalLayout:
    """Qubit ``k`` holds spatial orbital ``orbitals[k][0]`` with spin ``orbitals[k][1]``.

    Spin is ``ALPHA`` (0) or ``BETA`` (1).
    """

    orbitals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        orbs = tuple((int(i), int(s)) for i, s in self.orbitals)
        if len(set(orbs)) != len(orbs):
            raise ValueError("duplicate spin-orbital in layout")
        if any(s not in (ALPHA, BETA) for _, s in orbs):
            raise ValueError("spin must be 0 (alpha) or 1 (beta)")
        object.__setattr__(self, "orbitals", orbs)

    @property
    def n_qubits(self) -> int:
        return len(self.orbitals)

    @property
    def spins(self) -> tuple[int, ...]:
        return tuple(s for _, s in self.orbitals)

    def qubit(self, spatial: int, spin: int) -> int:
        return self.orbitals.index((spatial, spin))

    @classmethod
    def occupied_first(cls, n_spatial: int, n_alpha: int, n_beta: int) -> "SpinOrbitalLayout":
        """Occupied alpha, occupied beta, virtual alpha, virtual beta.

        For four spatial orbitals and two electrons of each spin this is the
        H4 numbering used by the built-in scheme: qubits 0-1 occupied alpha,
        2-3 occupied beta, 4-5 virtual alpha, 6-7 virtual beta.
        """
        orbs = [(i, ALPHA) for i in range(n_alpha)]
        orbs += [(i, BETA) for i in range(n_beta)]
        orbs += [(i, ALPHA) for i in range(n_alpha, n_spatial)]
        orbs += [(i, BETA) for i in range(n_beta, n_spatial)]
        return cls(tuple(orbs))

    @classmethod
    def interleaved(cls, n_spatial: int) -> "SpinOrbitalLayout":
        return cls(tuple((i, s) for i in range(n_spatial) for s in (ALPHA, BETA)))

    @classmethod
    def spin_blocked(cls, n_spatial: int) -> "SpinOrbitalLayout":
        return cls(tuple((i, s) for s in (ALPHA, BETA) for i in range(n_spatial)))

    def reference(self, n_alpha: int, n_beta: int) -> ReferenceState:
        """Aufbau determinant: lowest ``n_alpha``/``n_beta`` spatial orbitals filled."""
        occ = {k for k, (i, s) in enumerate(self.orbitals)
               if (s == ALPHA and i < n_alpha) or (s == BETA and i < n_beta)}
        return ReferenceState(self.n_qubits, frozenset(occ))


@dataclass(frozen=True, eq=False)
class IntegralSet:
    """Spatial-orbital integrals in Hartree; two-body in chemists' ``(ij|kl)``."""

    n_spatial: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    n_electrons: int = 0
    ms2: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_spatial
        h = np.asarray(self.one_body, dtype=float)
        g = np.asarray(self.two_body, dtype=float)
        if h.shape != (n, n) or g.shape != (n, n, n, n):
            raise ValueError(f"integral shapes {h.shape}, {g.shape} do not match n_spatial={n}")
        object.__setattr__(self, "one_body", h)
        object.__setattr__(self, "two_body", g)
        self.validate()

    def validate(self, tol: float = 1e-10) -> None:
        h, g = self.one_body, self.two_body
        if not np.allclose(h, h.T, atol=tol, rtol=0):
            raise IntegralSymmetryError("one-body integrals are not symmetric")
        for name, perm in (("(ij|kl)=(ji|kl)", (1, 0, 2, 3)),
                           ("(ij|kl)=(ij|lk)", (0, 1, 3, 2)),
                           ("(ij|kl)=(kl|ij)", (2, 3, 0, 1))):
            dev = np.max(np.abs(g - g.transpose(perm)), initial=0.0)
            if dev > tol:
                raise IntegralSymmetryError(f"two-body integrals violate {name} by {dev:.3e}")

    @property
    def n_alpha(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_electrons - self.ms2) // 2

    def default_layout(self) -> SpinOrbitalLayout:
        return SpinOrbitalLayout.occupied_first(self.n_spatial, self.n_alpha, self.n_beta)


def spin_orbital_integrals(ints: IntegralSet, layout: SpinOrbitalLayout):
    """Expand to spin-orbital ``h[P, Q]`` and chemists' ``g[P, Q, R, S]``."""
    if any(i >= ints.n_spatial for i, _ in layout.orbitals):
        raise ValueError("layout refers to a spatial orbital beyond the integral set")
    sp = np.array([i for i, _ in layout.orbitals])
    spin = np.array(layout.spins)
    same = (spin[:, None] == spin[None, :]).astype(float)
    h = ints.one_body[np.ix_(sp, sp)] * same
    g = ints.two_body[np.ix_(sp, sp, sp, sp)] * same[:, :, None, None] * same[None, None, :, :]
    return h, g


def hamiltonian_fermion_operator(ints: IntegralSet,
                                 layout: SpinOrbitalLayout | None = None,
                                 tol: float = 0.0) -> FermionOperator:
    """``E_core + sum h_PQ a+_P a_Q + 1/2 sum (PQ|RS) a+_P a+_R a_S a_Q``."""
    layout = layout or ints.default_layout()
    h, g = spin_orbital_integrals(ints, layout)
    terms: list[tuple[complex, tuple[Ladder, ...]]] = []
    if ints.core_energy != 0:
        terms.append((complex(ints.core_energy), ()))
    for p, q in zip(*np.nonzero(np.abs(h) > tol)):
        terms.append((complex(h[p, q]), ((int(p), True), (int(q), False))))
    for p, q, r, s in zip(*np.nonzero(np.abs(g) > tol)):
        if p == r or q == s:
            continue  # a+_P a+_P = 0, a_Q a_Q = 0
        terms.append((0.5 * complex(g[p, q, r, s]),
                      ((int(p), True), (int(r), True), (int(s), False), (int(q), False))))
    return FermionOperator(tuple(terms))


def build_hamiltonian(ints: IntegralSet, layout: SpinOrbitalLayout | None = None,
                      prune_tol: float = DEFAULT_PRUNE_TOL) -> PauliSum:
    """Qubit Hamiltonian of an integral set under Jordan-Wigner."""
    ints.validate()
    layout = layout or ints.default_layout()
    f = hamiltonian_fermion_operator(ints, layout)
    if not f.terms:
        return PauliSum.zero(layout.n_qubits)
    return jordan_wigner(f, layout.n_qubits, prune_tol=prune_tol)


def random_integrals(n_spatial: int, n_electrons: int, rng: np.random.Generator,
                     scale: float = 0.5, core_energy: float = 0.0) -> IntegralSet:
    """Random real integrals with full 8-fold symmetry (test and demo data)."""
    h = rng.normal(scale=scale, size=(n_spatial, n_spatial))
    h = 0.5 * (h + h.T)
    g = rng.normal(scale=scale, size=(n_spatial,) * 4)
    for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
        g = 0.5 * (g + g.transpose(perm))
    return IntegralSet(n_spatial, core_energy, h, g, n_electrons=n_electrons)


def spin_squared_operator(layout: SpinOrbitalLayout) -> PauliSum:
    """JW image of ``S^2 = S_- S_+ + S_z (S_z + 1)``."""
    n = layout.n_qubits
    spatial = sorted({i for i, _ in layout.orbitals})
    pairs = [(layout.qubit(i, ALPHA), layout.qubit(i, BETA)) for i in spatial]
    s_plus = FermionOperator(tuple((1.0 + 0j, ((a, True), (b, False))) for a, b in pairs))
    s_minus = s_plus.dagger()
    s_z = FermionOperator(tuple(
        term for a, b in pairs
        for term in ((0.5 + 0j, ((a, True), (a, False))), (-0.5 + 0j, ((b, True), (b, False))))
    ))
    op = s_minus * s_plus + s_z * s_z + s_z
    return jordan_wigner(op, n)
