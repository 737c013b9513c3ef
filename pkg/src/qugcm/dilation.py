"""Matrix-level dilation of the non-orthogonal eigenproblem.

``S^-1 H f = E f`` is embedded in larger spaces: a unitary ``U`` whose
top-left block is ``S^-1 / ||S^-1||``, the padded Hamiltonian
``J = diag(H / alpha, 0)``, the projector ``P = (I + Z) / 2`` and the Hermitian
anti-diagonal matrix ``K = [[0, PUJP], [P J U^dag P, 0]]``.  Everything here is
dense linear algebra; no circuits are built.

Note that ``spec(K)`` is ``+-`` the singular values of ``PUJP``.  Those equal
``+-E / (||S^-1|| alpha)`` only when ``S^-1 H`` is normal (for instance
``S = I`` or ``[H, S] = 0``); :func:`verify_spectral_property` reports both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigensolver import EigenSolution, solve_generalized
from .pauli import PauliSum

MAX_CONDITION = 1e12


class IllConditionedError(ValueError):
    """The overlap matrix is singular or too badly conditioned to invert."""


def build_block_encoding(S: np.ndarray) -> np.ndarray:
    """Unitary ``[[A, sqrt(I - A A^dag)], [sqrt(I - A^dag A), -A^dag]]``, ``A = S^-1/||S^-1||``."""
    S = np.asarray(S, dtype=complex)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedError(f"overlap condition number {cond:.3e} exceeds {MAX_CONDITION:g}")
    s_inv = np.linalg.inv(S)
    a = s_inv / np.linalg.norm(s_inv, 2)
    m = len(a)
    # one SVD for both square roots keeps the blocks mutually consistent;
    # separate eigensolves put O(sqrt(eps)) noise on the unit singular value
    w, sig, vh = np.linalg.svd(a)
    sig = np.minimum(sig, 1.0)
    c = np.sqrt(np.clip(1.0 - sig ** 2, 0.0, None))
    v = vh.conj().T
    a = (w * sig) @ vh
    u = np.block([
        [a, (w * c) @ w.conj().T],
        [(v * c) @ vh, -a.conj().T],
    ])
    err = np.max(np.abs(u.conj().T @ u - np.eye(2 * m)))
    if err > 1e-10:
        raise IllConditionedError(f"block encoding is not unitary (deviation {err:.2e})")
    return u


def restrict_pair(H: np.ndarray, S: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Project ``(H, S)`` onto overlap eigenvectors above ``tau * max(eig(S))``.

    The reduced overlap is diagonal with condition number at most ``1 / tau``
    and the generalized spectrum on the retained space is unchanged.
    """
    s, u = np.linalg.eigh(0.5 * (S + np.conj(S).T))
    keep = s > tau * s[-1]
    if not np.any(keep):
        raise IllConditionedError("no overlap eigenvalue survives the threshold")
    uk = u[:, keep]
    return uk.conj().T @ H @ uk, np.diag(s[keep]).astype(complex)


def weyl_basis(m: int) -> list[np.ndarray]:
    """The ``m**2`` clock-and-shift unitaries ``X^a Z^b``; orthogonal under ``Tr(A^dag B)``."""
    shift = np.roll(np.eye(m), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(m) / m))
    out = []
    for a in range(m):
        xa = np.linalg.matrix_power(shift, a)
        for b in range(m):
            out.append(xa @ np.linalg.matrix_power(clock, b))
    return out


def lcu_decompose(h: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Coefficients ``c_j`` and unitaries ``W_j`` with ``h = sum_j c_j W_j``."""
    m = len(h)
    basis = weyl_basis(m)
    coeffs = np.array([np.trace(w.conj().T @ h) / m for w in basis])
    return coeffs, basis


@dataclass(frozen=True, eq=False)
class DilationProblem:
    H: np.ndarray
    S: np.ndarray
    alpha: float
    U: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    K_lcu: np.ndarray = field(repr=False)
    lcu_coeff_sum: float
    s_norm: float
    s_inv_norm: float

    @property
    def M(self) -> int:
        return len(self.H)

    @property
    def lcu_deviation(self) -> float:
        return float(np.max(np.abs(self.K - self.K_lcu), initial=0.0))

    @property
    def scale(self) -> float:
        """Factor mapping a generalized eigenvalue ``E`` to ``E / (||S^-1|| alpha)``."""
        return 1.0 / (self.s_inv_norm * self.alpha)


def build_embedding(H: np.ndarray, S: np.ndarray, alpha: float | None = None,
                    hamiltonian: PauliSum | None = None) -> DilationProblem:
    """Assemble ``U, J, P, K`` directly and ``K`` again from its LCU form.

    ``alpha`` defaults to the Pauli 1-norm of ``hamiltonian`` when one is
    given, and otherwise to the 1-norm of the clock-and-shift decomposition of
    ``H`` itself.
    """
    H = np.asarray(H, dtype=complex)
    S = np.asarray(S, dtype=complex)
    if H.shape != S.shape or H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"H {H.shape} and S {S.shape} must be equal square matrices")
    m = len(H)
    coeffs, units = lcu_decompose(H)
    if alpha is None:
        alpha = hamiltonian.one_norm() if hamiltonian is not None else float(np.abs(coeffs).sum())
    if alpha <= 0:
        alpha = 1.0  # H == 0: any normalization gives K == 0
    U = build_block_encoding(S)
    z2 = np.diag([1.0, -1.0])
    i2 = np.eye(2)
    proj0 = np.diag([1.0, 0.0])
    J = np.kron(proj0, H / alpha)
    P = np.kron((i2 + z2) / 2, np.eye(m))
    top = P @ U @ J @ P
    bottom = P @ J @ U.conj().T @ P
    K = np.kron(np.array([[0, 1], [0, 0]]), top) + np.kron(np.array([[0, 0], [1, 0]]), bottom)

    # J = sum_j (h_j / 2)(I (x) W_j + Z (x) W_j) with h_j = c_j / alpha
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    iy = np.array([[0, 1], [-1, 0]], dtype=complex)
    K_lcu = np.zeros((4 * m, 4 * m), dtype=complex)
    for c, w in zip(coeffs / alpha, units):
        for tau in (i2, z2):
            jt = np.kron(tau, w)
            a_top = P @ U @ jt @ P
            a_bot = P @ jt @ U.conj().T @ P
            K_lcu += (c / 4) * (np.kron(x, a_top) + np.kron(iy, a_top)
                                + np.kron(x, a_bot) - np.kron(iy, a_bot))
    # four Pauli factors x two of {I, Z} x |c_j| / 4, in units where J carries H
    lcu_sum = float(2 * np.abs(coeffs).sum())
    s_inv = np.linalg.inv(S)
    return DilationProblem(
        H=H, S=S, alpha=float(alpha), U=U, J=J, P=P, K=K, K_lcu=K_lcu,
        lcu_coeff_sum=lcu_sum,
        s_norm=float(np.linalg.norm(S, 2)),
        s_inv_norm=float(np.linalg.norm(s_inv, 2)),
    )


def query_cost(alpha: float, s_norm: float, s_inv_norm: float, eps: float) -> float:
    """Leading query-count expression ``alpha ||S|| ||S^-1||**2 / eps`` (polylogs dropped)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return alpha * s_norm * s_inv_norm ** 2 / eps


@dataclass
class SpectralReport:
    scaled_eigenvalues: list[float]
    containment_deltas: list[float]
    trace_residuals: list[float]
    singular_value_deltas: list[float]
    lcu_deviation: float
    lcu_coeff_sum: float
    alpha: float
    s_norm: float
    s_inv_norm: float
    query_cost: float
    eps: float
    tol: float

    @property
    def contains_pm_E(self) -> bool:
        return all(d <= self.tol for d in self.containment_deltas)

    @property
    def trace_identity_holds(self) -> bool:
        return all(r <= 1e-10 for r in self.trace_residuals)

    def to_json_obj(self) -> dict:
        return {
            "scaled_eigenvalues": self.scaled_eigenvalues,
            "containment_deltas": self.containment_deltas,
            "contains_pm_E": self.contains_pm_E,
            "trace_residuals": self.trace_residuals,
            "singular_value_deltas": self.singular_value_deltas,
            "lcu_deviation": self.lcu_deviation,
            "lcu_coeff_sum": self.lcu_coeff_sum,
            "alpha": self.alpha,
            "s_norm": self.s_norm,
            "s_inv_norm": self.s_inv_norm,
            "query_cost": self.query_cost,
            "eps": self.eps,
        }


def verify_spectral_property(dp: DilationProblem, reference: EigenSolution | None = None,
                             eps: float = 1.6e-3, tol: float = 1e-8) -> SpectralReport:
    """Compare ``spec(K)`` with the scaled generalized eigenvalues of ``(H, S)``.

    For each eigenpair ``(E, f)`` this records the distance from ``+E`` and
    ``-E`` (scaled) to the nearest eigenvalue of ``K``, the residual of
    ``Tr(K^2 h h^dag) = |E|^2`` for ``h = [0, g]`` built from the normalized
    right eigenvector ``g`` of ``S^-1 H``, and the distance to the matching
    singular value of ``PUJP``.
    """
    if reference is None:
        reference = solve_generalized(dp.H, dp.S, tau=0.0)
    m = dp.M
    k_eigs = np.linalg.eigvalsh(0.5 * (dp.K + dp.K.conj().T))
    scaled = np.asarray(reference.eigenvalues) * dp.scale
    contain = [max(np.min(np.abs(k_eigs - e)), np.min(np.abs(k_eigs + e))) for e in scaled]

    b = (dp.P @ dp.U @ dp.J @ dp.P)[:m, :m]
    svals = np.sort(np.linalg.svd(b, compute_uv=False))
    sv_delta = [float(np.min(np.abs(svals - abs(e)))) for e in scaled]

    trace_res = []
    for k, e in enumerate(scaled):
        g = np.zeros(2 * m, dtype=complex)
        f = reference.eigenvectors[:, k]
        g[:m] = f / np.linalg.norm(f)
        h = np.concatenate([np.zeros(2 * m), g])
        lhs = np.trace(dp.K @ dp.K @ np.outer(h, h.conj())).real
        trace_res.append(float(abs(lhs - e ** 2)))

    return SpectralReport(
        scaled_eigenvalues=[float(e) for e in scaled],
        containment_deltas=[float(d) for d in contain],
        trace_residuals=trace_res,
        singular_value_deltas=sv_delta,
        lcu_deviation=dp.lcu_deviation,
        lcu_coeff_sum=dp.lcu_coeff_sum,
        alpha=dp.alpha,
        s_norm=dp.s_norm,
        s_inv_norm=dp.s_inv_norm,
        query_cost=query_cost(dp.alpha, dp.s_norm, dp.s_inv_norm, eps),
        eps=eps,
        tol=tol,
    )


def hadamard_test_probability(overlap: complex) -> float:
    """``P(0) = (1 + Re<Phi_p|Phi_q>) / 2`` for the overlap Hadamard test."""
    return (1.0 + complex(overlap).real) / 2.0


def qsp_square_map(u: float) -> float:
    """``u -> 2u**2 - 1``; maps ``sqrt(P(0))`` back to ``Re S_pq``."""
    return 2.0 * u * u - 1.0


def amplitude_amplification_phase(overlap: complex) -> float:
    """Rotation angle ``arccos(sqrt((1 + Re S_pq) / 2))`` of the amplified walk."""
    return math.acos(math.sqrt(hadamard_test_probability(overlap)))
