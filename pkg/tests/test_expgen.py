import numpy as np
import pytest

from qugcm.expgen import (
    NonCommutingError,
    all_commute,
    exp_commuting,
    exp_single,
    exponentiate,
    product,
    trotter_steps,
    trotterize,
)
from qugcm.pauli import PauliString, PauliSum

from .oracles import expm, label_matrix, random_label


def commuting_sum(rng, n, k):
    """Random anti-Hermitian sum over up to ``k`` pairwise-commuting strings."""
    kept = []
    while len(kept) < k:
        lab = random_label(rng, n)
        m = label_matrix(lab)
        if all(np.allclose(m @ label_matrix(o), label_matrix(o) @ m) for o in kept):
            kept.append(lab)
    return PauliSum.from_labels([(1j * rng.normal(), s) for s in kept])


def test_exp_single_matches_expm():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        lab = random_label(rng, n)
        theta = rng.normal()
        u = exp_single(theta, PauliString.from_label(lab))
        assert np.allclose(u.to_matrix(), expm(1j * theta * label_matrix(lab)), atol=1e-12)


def test_exp_single_negative_string_and_identity():
    p = PauliString.from_label("XZ", phase=2)
    assert np.allclose(exp_single(0.3, p).to_matrix(), expm(-0.3j * label_matrix("XZ")))
    assert np.allclose(exp_single(0.3, PauliString.identity(2)).to_matrix(),
                       np.exp(0.3j) * np.eye(4))
    with pytest.raises(ValueError, match="not Hermitian"):
        exp_single(0.1, PauliString.from_label("X", phase=1))


def test_exp_commuting_matches_expm():
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = commuting_sum(rng, 3, 4)
        assert all_commute(g)
        assert np.allclose(exp_commuting(g).to_matrix(), expm(g.to_matrix()), atol=1e-12)


def test_exp_commuting_rejects():
    g = PauliSum.from_labels([(1j, "X"), (1j, "Z")])
    with pytest.raises(NonCommutingError):
        exp_commuting(g)
    with pytest.raises(ValueError, match="anti-Hermitian"):
        exp_commuting(PauliSum.from_labels([(1.0, "Z")]))


def test_trotter_converges_and_flags_inexact():
    g = PauliSum.from_labels([(0.4j, "XI"), (0.3j, "ZZ"), (-0.2j, "YX")])
    u = trotterize(g, eps=1e-9)
    assert not u.exact and u.plan.order == 2
    assert np.abs(u.to_matrix() - expm(g.to_matrix())).max() < 1e-9
    unitary = u.to_matrix()
    assert np.allclose(unitary.conj().T @ unitary, np.eye(4), atol=1e-10)


def test_trotter_commuting_input_is_exact():
    g = PauliSum.from_labels([(0.4j, "ZI"), (0.3j, "ZZ")])
    u = trotterize(g, steps=3)
    assert u.exact
    assert np.allclose(u.to_matrix(), expm(g.to_matrix()), atol=1e-12)


@pytest.mark.parametrize("order,slope", [(1, -1.0), (2, -2.0)])
def test_trotter_error_slope(order, slope):
    g = PauliSum.from_labels([(0.7j, "X"), (0.5j, "Z")])
    exact = expm(g.to_matrix())
    rs = np.array([8, 16, 32, 64, 128])
    errs = [np.linalg.norm(trotterize(g, order=order, steps=int(r)).to_matrix() - exact, 2)
            for r in rs]
    fit = np.polyfit(np.log(rs), np.log(errs), 1)[0]
    assert abs(fit - slope) < 0.1


def test_trotter_steps_formula():
    assert trotter_steps(1, 5.0, 1e-8) == 1
    assert trotter_steps(4, 0.5, 1e-2) == int(np.ceil(np.sqrt(8.0 / 1e-2)))
    assert trotter_steps(4, 0.5, 1e-2, order=1) == 400
    with pytest.raises(ValueError):
        trotter_steps(2, 1.0, 0.0)


def test_exponentiate_dispatch():
    c = PauliSum.from_labels([(0.2j, "ZI")])
    nc = PauliSum.from_labels([(0.2j, "XI"), (0.1j, "ZI")])
    assert exponentiate(c).plan is None
    assert exponentiate(nc).plan is not None


def test_product_order():
    a = exp_single(0.3, PauliString.from_label("X"))
    b = exp_single(0.5, PauliString.from_label("Z"))
    assert np.allclose(product([a, b]).to_matrix(), a.to_matrix() @ b.to_matrix())
    assert np.allclose(a.dagger().to_matrix(), a.to_matrix().conj().T)


def test_trotter_slope_from_single_step():
    g = PauliSum.from_labels([(0.3j, "X"), (0.4j, "Z")])
    exact = expm(g.to_matrix())
    rs = np.array([1, 2, 4, 8, 16])
    errs = [np.linalg.norm(trotterize(g, steps=int(r)).to_matrix() - exact, 2) for r in rs]
    assert abs(np.polyfit(np.log(rs), np.log(errs), 1)[0] + 2) < 0.1
