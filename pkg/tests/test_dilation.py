import numpy as np
import pytest

from qugcm.dilation import (
    IllConditionedError,
    amplitude_amplification_phase,
    build_block_encoding,
    build_embedding,
    hadamard_test_probability,
    lcu_decompose,
    qsp_square_map,
    query_cost,
    restrict_pair,
    verify_spectral_property,
    weyl_basis,
)
from qugcm.pauli import PauliSum

from .test_eigensolver import random_pair


def test_block_encoding_is_unitary_with_scaled_inverse():
    rng = np.random.default_rng(0)
    _, S = random_pair(rng, 4)
    U = build_block_encoding(S)
    assert np.allclose(U.conj().T @ U, np.eye(8), atol=1e-10)
    s_inv = np.linalg.inv(S)
    assert np.allclose(U[:4, :4], s_inv / np.linalg.norm(s_inv, 2))


def test_block_encoding_rejects_singular():
    with pytest.raises(IllConditionedError):
        build_block_encoding(np.diag([1.0, 0.0]))


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_weyl_basis_orthogonal_and_complete(m):
    basis = weyl_basis(m)
    gram = np.array([[np.trace(a.conj().T @ b) for b in basis] for a in basis])
    assert np.allclose(gram, m * np.eye(m * m))
    rng = np.random.default_rng(m)
    h = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    c, units = lcu_decompose(h)
    assert np.allclose(sum(ci * u for ci, u in zip(c, units)), h)


def test_identity_overlap_spectrum_is_exact():
    H = np.diag([-2.0, 0.5, 1.5])
    dp = build_embedding(H, np.eye(3), alpha=4.0)
    rep = verify_spectral_property(dp)
    assert rep.contains_pm_E
    k = np.sort(np.linalg.eigvalsh(dp.K))
    nonzero = k[np.abs(k) > 1e-12]
    assert np.allclose(np.sort(nonzero), np.sort(np.concatenate([H.diagonal(), -H.diagonal()]) / 4))


def test_commuting_pair_contains_scaled_eigenvalues():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    H = q @ np.diag(rng.normal(size=4)) @ q.T
    S = q @ np.diag([1.0, 0.7, 0.4, 0.2]) @ q.T
    rep = verify_spectral_property(build_embedding(H, S, alpha=3.0))
    assert rep.contains_pm_E and rep.trace_identity_holds


def test_general_pair_reports_singular_values():
    rng = np.random.default_rng(2)
    H, S = random_pair(rng, 4)
    dp = build_embedding(H, S)
    rep = verify_spectral_property(dp)
    assert dp.lcu_deviation < 1e-12
    assert rep.trace_identity_holds
    # K is the Hermitian dilation of B = PUJP: its spectrum is +-sigma(B)
    b = (dp.P @ dp.U @ dp.J @ dp.P)[:4, :4]
    sv = np.linalg.svd(b, compute_uv=False)
    k = np.linalg.eigvalsh(dp.K)
    for s in sv:
        assert np.min(np.abs(k - s)) < 1e-10 and np.min(np.abs(k + s)) < 1e-10
    assert rep.lcu_coeff_sum == pytest.approx(2 * np.abs(lcu_decompose(H)[0]).sum())


def test_alpha_defaults_to_pauli_norm():
    h = PauliSum.from_labels([(0.5, "ZI"), (-1.5, "XX")])
    dp = build_embedding(np.eye(2), np.eye(2), hamiltonian=h)
    assert dp.alpha == pytest.approx(2.0)


def test_restrict_pair_keeps_spectrum():
    rng = np.random.default_rng(3)
    v = rng.normal(size=(5, 3))
    V = np.column_stack([v, v[:, 0] - v[:, 2]])
    A = rng.normal(size=(5, 5))
    A = A + A.T
    H, S = restrict_pair(V.T @ A @ V, V.T @ V, 1e-10)
    assert H.shape == (3, 3) and np.allclose(S, np.diag(np.diag(S)))
    q, _ = np.linalg.qr(v)
    reduced = np.sort(np.linalg.eigvals(np.linalg.solve(S, H)).real)
    assert np.allclose(reduced, np.linalg.eigvalsh(q.T @ A @ q), atol=1e-8)


def test_hadamard_and_qsp_identities():
    rng = np.random.default_rng(4)
    for _ in range(50):
        z = complex(*rng.uniform(-1, 1, size=2))
        z /= max(1.0, abs(z))
        p = hadamard_test_probability(z)
        assert 0.0 <= p <= 1.0
        assert 2 * p - 1 == pytest.approx(z.real)
        assert qsp_square_map(np.sqrt(p)) == pytest.approx(z.real)
        assert np.cos(amplitude_amplification_phase(z)) ** 2 == pytest.approx(p)


def test_query_cost():
    assert query_cost(2.0, 3.0, 4.0, 0.5) == pytest.approx(2 * 3 * 16 / 0.5)
    with pytest.raises(ValueError):
        query_cost(1, 1, 1, 0)
