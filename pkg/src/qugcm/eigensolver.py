"""Generalized eigenproblem ``H f = E S f`` and a sector-restricted FCI oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pauli import PauliSum

HARTREE_TO_EV = 27.211386245988
CHEMICAL_ACCURACY_MHA = 1.5936
DEFAULT_TAU = 1e-8


class EmptySubspaceError(ValueError):
    """No overlap eigenvalue survives the threshold."""


class InsufficientSpectrumError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EigenSolution:
    """Ascending eigenvalues with eigenvectors (columns) in the original basis."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    retained_dim: int
    s_spectrum: np.ndarray = field(repr=False)
    tau: float
    residuals: np.ndarray = field(repr=False)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def to_json_obj(self) -> dict:
        return {
            "eigenvalues": [float(e) for e in self.eigenvalues],
            "retained_dim": int(self.retained_dim),
            "tau": float(self.tau),
            "s_spectrum": [float(s) for s in self.s_spectrum],
            "max_residual": float(np.max(self.residuals, initial=0.0)),
        }


def _hermitian(a: np.ndarray, name: str, tol: float) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square")
    dev = np.max(np.abs(a - a.conj().T), initial=0.0)
    scale = max(1.0, np.max(np.abs(a), initial=0.0))
    if dev > tol * scale:
        raise ValueError(f"{name} is not Hermitian (deviation {dev:.3e})")
    return 0.5 * (a + a.conj().T)


def solve_generalized(H, S=None, tau: float = DEFAULT_TAU,
                      hermitian_tol: float = 1e-8) -> EigenSolution:
    """Canonical orthogonalization followed by a Hermitian eigensolve.

    Overlap eigenpairs below ``tau * max(eig(S))`` are discarded; ``H`` is
    projected onto the remaining orthonormalized directions.  ``H`` may also
    be a :class:`~qugcm.gcm.KernelPair`, in which case ``S`` is taken from it.
    """
    if S is None:
        H, S = H.H, H.S
    if tau < 0:
        raise ValueError("tau must be non-negative")
    H = _hermitian(H, "H", hermitian_tol)
    S = _hermitian(S, "S", hermitian_tol)
    if H.shape != S.shape:
        raise ValueError("H and S shapes differ")
    s, u = np.linalg.eigh(S)
    smax = s[-1] if len(s) else 0.0
    if smax <= 0:
        raise EmptySubspaceError("overlap matrix has no positive eigenvalue")
    keep = s > tau * smax
    if not np.any(keep):
        raise EmptySubspaceError("all overlap eigenvalues fall below the threshold")
    x = u[:, keep] / np.sqrt(s[keep])
    hp = x.conj().T @ H @ x
    e, c = np.linalg.eigh(0.5 * (hp + hp.conj().T))
    f = x @ c
    res = np.linalg.norm(H @ f - (S @ f) * e[None, :], axis=0)
    return EigenSolution(e, f, int(keep.sum()), s, float(tau), res)


def sector_indices(n_qubits: int, n_particles: int | None = None,
                   sz: float | None = None, spins: Sequence[int] | None = None) -> np.ndarray:
    """Basis indices with the given particle count and ``S_z``.

    ``spins[k]`` is 0 (alpha) or 1 (beta) for qubit ``k``; it is needed only
    when ``sz`` is given.
    """
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    keep = np.ones(len(idx), dtype=bool)
    if n_particles is not None:
        keep &= np.bitwise_count(idx) == n_particles
    if sz is not None:
        if spins is None or len(spins) != n_qubits:
            raise ValueError("sz filtering needs one spin label per qubit")
        alpha_mask = sum(1 << k for k, s in enumerate(spins) if s == 0)
        beta_mask = sum(1 << k for k, s in enumerate(spins) if s == 1)
        n_a = np.bitwise_count(idx & alpha_mask)
        n_b = np.bitwise_count(idx & beta_mask)
        keep &= np.isclose(0.5 * (n_a - n_b), sz)
    return idx[keep]


def fci_oracle(hamiltonian: PauliSum, n_particles: int, sz: float | None = None,
               spins: Sequence[int] | None = None, commute_tol: float = 1e-10,
               return_vectors: bool = False):
    """Ascending spectrum of ``hamiltonian`` within a particle-number (and ``S_z``) sector."""
    n = hamiltonian.n_qubits
    dense = hamiltonian.to_matrix()
    num = np.bitwise_count(np.arange(1 << n)).astype(float)
    # N is diagonal, so [H, N]_ij = H_ij (n_j - n_i)
    comm = dense * (num[None, :] - num[:, None])
    if np.max(np.abs(comm), initial=0.0) > commute_tol:
        raise ValueError("Hamiltonian does not conserve particle number")
    idx = sector_indices(n, n_particles, sz, spins)
    if len(idx) == 0:
        raise ValueError("requested sector is empty")
    block = dense[np.ix_(idx, idx)]
    block = 0.5 * (block + block.conj().T)
    if return_vectors:
        e, v = np.linalg.eigh(block)
        full = np.zeros((1 << n, len(e)), dtype=complex)
        full[idx] = v
        return e, full
    return np.linalg.eigvalsh(block)


def fci_spin_filtered(hamiltonian: PauliSum, n_particles: int, sz: float,
                      spins: Sequence[int], s2: PauliSum, s2_value: float = 0.0,
                      tol: float = 1e-6) -> np.ndarray:
    """Sector spectrum keeping only eigenstates with ``<S^2> == s2_value``.

    Degenerate eigenvectors are rotated to diagonalize ``S^2`` within each
    degenerate block before filtering.
    """
    e, v = fci_oracle(hamiltonian, n_particles, sz, spins, return_vectors=True)
    s2m = s2.to_matrix()
    keep = []
    start = 0
    while start < len(e):
        stop = start + 1
        while stop < len(e) and abs(e[stop] - e[start]) < 1e-8:
            stop += 1
        block = v[:, start:stop]
        w = np.linalg.eigvalsh(block.conj().T @ s2m @ block)
        keep.extend(e[start] for val in w if abs(val - s2_value) < tol)
        start = stop
    return np.array(keep)


@dataclass
class SpectrumReport:
    ground_energy: float
    excitation_energies_ev: list[float]
    fci_ground: float | None = None
    ground_delta_mha: float | None = None
    reference_excitations_ev: list[float] | None = None
    excitation_deltas_ev: list[float] | None = None

    def to_json_obj(self) -> dict:
        return dict(self.__dict__)

    def csv_rows(self) -> list[list]:
        rows = [["quantity", "gcm", "reference", "delta"]]
        rows.append(["E0_Ha", self.ground_energy, self.fci_ground,
                     self.ground_delta_mha])
        for k, w in enumerate(self.excitation_energies_ev, start=1):
            ref = delta = None
            if self.reference_excitations_ev and k <= len(self.reference_excitations_ev):
                ref = self.reference_excitations_ev[k - 1]
                delta = self.excitation_deltas_ev[k - 1]
            rows.append([f"omega{k}_eV", w, ref, delta])
        return rows


def spectrum_report(sol: EigenSolution, fci: Sequence[float] | None = None,
                    n_excitations: int | None = None,
                    reference_excitations_ev: Sequence[float] | None = None,
                    hartree_to_ev: float = HARTREE_TO_EV) -> SpectrumReport:
    """Ground energy, excitation energies in eV and deltas against references.

    Up to three excitations are reported by default, fewer if the retained
    spectrum is shorter.  Asking for ``n_excitations`` explicitly makes a
    short spectrum an error.  Reference excitations default to those implied
    by ``fci``; comparison is positional.
    """
    e = np.asarray(sol.eigenvalues, dtype=float)
    if n_excitations is None:
        n_exc = min(3, len(e) - 1)
    else:
        n_exc = n_excitations
        if len(e) < n_exc + 1:
            raise InsufficientSpectrumError(
                f"{n_exc} excitations need {n_exc + 1} eigenvalues, have {len(e)}")
    omega = [float((e[k] - e[0]) * hartree_to_ev) for k in range(1, n_exc + 1)]
    rep = SpectrumReport(float(e[0]), omega)
    if fci is not None and len(fci):
        fci = np.asarray(fci, dtype=float)
        rep.fci_ground = float(fci[0])
        rep.ground_delta_mha = float((e[0] - fci[0]) * 1e3)
        if reference_excitations_ev is None:
            reference_excitations_ev = [float((f - fci[0]) * hartree_to_ev) for f in fci[1:]]
    if reference_excitations_ev is not None:
        refs = [float(r) for r in reference_excitations_ev]
        rep.reference_excitations_ev = refs[:n_exc]
        rep.excitation_deltas_ev = [w - r for w, r in zip(omega, refs)]
    return rep
