import numpy as np
import pytest

from qugcm.eigensolver import (
    HARTREE_TO_EV,
    EmptySubspaceError,
    InsufficientSpectrumError,
    fci_oracle,
    fci_spin_filtered,
    sector_indices,
    solve_generalized,
    spectrum_report,
)
from qugcm.fermion import SpinOrbitalLayout, build_hamiltonian, random_integrals, spin_squared_operator
from qugcm.pauli import PauliSum

from .oracles import generalized_eigvals, molecular_hamiltonian, sector_spectrum


def random_pair(rng, m, cond=10.0):
    a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    H = a + a.conj().T
    q, _ = np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
    S = q @ np.diag(np.geomspace(1.0, 1.0 / cond, m)) @ q.conj().T
    return H, S


def test_matches_scipy_generalized():
    rng = np.random.default_rng(0)
    for m in (1, 3, 6):
        H, S = random_pair(rng, m)
        sol = solve_generalized(H, S)
        assert np.allclose(sol.eigenvalues, generalized_eigvals(H, S), atol=1e-10)
        assert sol.retained_dim == m
        assert np.max(sol.residuals) < 1e-9


def test_identity_overlap_is_ordinary_eigenproblem():
    H = np.diag([3.0, -1.0, 2.0])
    sol = solve_generalized(H, np.eye(3))
    assert np.allclose(sol.eigenvalues, [-1, 2, 3])


def test_threshold_discards_dependent_direction():
    rng = np.random.default_rng(1)
    v = rng.normal(size=(4, 2))
    V = np.column_stack([v, v[:, 0] + v[:, 1]])
    A = rng.normal(size=(4, 4))
    A = A + A.T
    sol = solve_generalized(V.T @ A @ V, V.T @ V, tau=1e-10)
    assert sol.retained_dim == 2
    q, _ = np.linalg.qr(v)
    assert np.allclose(sol.eigenvalues, np.linalg.eigvalsh(q.T @ A @ q), atol=1e-8)


def test_errors():
    with pytest.raises(EmptySubspaceError):
        solve_generalized(np.eye(2), np.zeros((2, 2)))
    with pytest.raises(ValueError, match="Hermitian"):
        solve_generalized(np.array([[0, 1], [0, 0]]), np.eye(2))
    with pytest.raises(ValueError):
        solve_generalized(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        solve_generalized(np.eye(2), np.eye(2), tau=-1)


def test_sector_indices():
    idx = sector_indices(4, 2)
    assert len(idx) == 6
    idx_sz = sector_indices(4, 2, sz=0.0, spins=[0, 1, 0, 1])
    assert sorted(idx_sz.tolist()) == [0b0011, 0b0110, 0b1001, 0b1100]
    with pytest.raises(ValueError):
        sector_indices(4, 2, sz=0.0)


def test_fci_oracle_matches_dense():
    rng = np.random.default_rng(2)
    ints = random_integrals(3, 2, rng)
    layout = SpinOrbitalLayout.occupied_first(3, 1, 1)
    H = build_hamiltonian(ints, layout)
    dense = molecular_hamiltonian(0.0, ints.one_body, ints.two_body, list(layout.orbitals))
    assert np.allclose(fci_oracle(H, 2), sector_spectrum(dense, 6, 2), atol=1e-10)
    e_sz = fci_oracle(H, 2, 0.0, layout.spins)
    assert len(e_sz) == 9


def test_fci_oracle_rejects_number_breaking():
    with pytest.raises(ValueError, match="particle number"):
        fci_oracle(PauliSum.from_labels([(1.0, "XI")]), 1)


def test_spin_filter_keeps_singlets():
    rng = np.random.default_rng(3)
    ints = random_integrals(2, 2, rng)
    layout = SpinOrbitalLayout.occupied_first(2, 1, 1)
    H = build_hamiltonian(ints, layout)
    singlets = fci_spin_filtered(H, 2, 0.0, layout.spins, spin_squared_operator(layout))
    assert len(singlets) == 3


def test_spectrum_report():
    sol = solve_generalized(np.diag([-1.0, -0.9, -0.5]), np.eye(3))
    rep = spectrum_report(sol, fci=[-1.001, -0.9, -0.6])
    assert rep.ground_delta_mha == pytest.approx(1.0)
    assert rep.excitation_energies_ev[0] == pytest.approx(0.1 * HARTREE_TO_EV)
    assert len(rep.excitation_deltas_ev) == 2
    rows = rep.csv_rows()
    assert rows[0] == ["quantity", "gcm", "reference", "delta"] and len(rows) == 4
    with pytest.raises(InsufficientSpectrumError):
        spectrum_report(sol, n_excitations=3)
    single = spectrum_report(solve_generalized(np.array([[-1.0]]), np.eye(1)))
    assert single.excitation_energies_ev == []
