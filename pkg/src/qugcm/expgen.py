"""Exponentials of anti-Hermitian Pauli sums, kept as Pauli sums.

For a Hermitian string ``P`` (``P @ P = I``) the exponential is exactly
``exp(i theta P) = cos(theta) I + i sin(theta) P``.  Sums of mutually commuting
strings factor into such terms; otherwise a symmetric (second-order) product
formula is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pauli import (
    DEFAULT_PRUNE_TOL,
    DimensionError,
    PauliString,
    PauliSum,
    _popcount,
    canonicalize,
    sum_multiply,
)

DEFAULT_TROTTER_EPS = 1e-8


class NonCommutingError(ValueError):
    """Exact exponentiation was asked for a sum with non-commuting strings."""


@dataclass(frozen=True)
class TrotterPlan:
    """Product-formula settings for ``exp(-i sum_l s_l P_l)``."""

    terms: tuple[tuple[float, PauliString], ...]
    order: int
    steps: int
    eps: float
    error_bound: float

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def s_max(self) -> float:
        return max((abs(s) for s, _ in self.terms), default=0.0)


@dataclass(frozen=True, eq=False)
class UnitaryAsPauliSum:
    value: PauliSum
    exact: bool = True
    plan: TrotterPlan | None = field(default=None, repr=False)

    @property
    def n_qubits(self) -> int:
        return self.value.n_qubits

    def dagger(self) -> "UnitaryAsPauliSum":
        return UnitaryAsPauliSum(self.value.dagger(), self.exact, self.plan)

    def to_matrix(self) -> np.ndarray:
        return self.value.to_matrix()

    def __len__(self) -> int:
        return len(self.value)


def _hermitian_string(p: PauliString) -> tuple[int, PauliString]:
    """Split ``p`` into ``sign * P`` with ``P`` phase-free."""
    if p.phase == 0:
        return 1, p
    if p.phase == 2:
        return -1, PauliString(p.n_qubits, p.x, p.z)
    raise ValueError(f"Pauli string {p} is not Hermitian")


def exp_single(theta: float, p: PauliString) -> UnitaryAsPauliSum:
    """``exp(i theta p)`` for a Hermitian Pauli string."""
    sign, q = _hermitian_string(p)
    theta = sign * float(theta)
    n = p.n_qubits
    if q.x == 0 and q.z == 0:
        return UnitaryAsPauliSum(PauliSum.identity(n, complex(math.cos(theta), math.sin(theta))))
    value = PauliSum.from_arrays(n, [0, q.x], [0, q.z],
                                 [math.cos(theta), 1j * math.sin(theta)])
    return UnitaryAsPauliSum(value)


def _angles(g: PauliSum, tol: float) -> np.ndarray:
    if not g.is_anti_hermitian(tol):
        raise ValueError("generator is not anti-Hermitian")
    return g.coeffs.imag.copy()


def all_commute(g: PauliSum) -> bool:
    """Exact pairwise symplectic commutation test over every pair of strings."""
    xs, zs = g.xs, g.zs
    sym = _popcount(xs[:, None] & zs[None, :]) + _popcount(zs[:, None] & xs[None, :])
    return bool(np.all(sym % 2 == 0))


def exp_commuting(g: PauliSum, tol: float = 1e-12,
                  prune_tol: float = DEFAULT_PRUNE_TOL) -> UnitaryAsPauliSum:
    """Exact ``exp(g)`` for anti-Hermitian ``g`` whose strings all commute."""
    if not all_commute(g):
        raise NonCommutingError("strings do not commute; use trotterize()")
    thetas = _angles(g, tol)
    acc = PauliSum.identity(g.n_qubits)
    for theta, (_, p) in zip(thetas, g):
        acc = sum_multiply(acc, exp_single(theta, p).value, prune_tol)
    return UnitaryAsPauliSum(acc)


def _power(base: PauliSum, r: int, prune_tol: float) -> PauliSum:
    out = PauliSum.identity(base.n_qubits)
    while r:
        if r & 1:
            out = sum_multiply(out, base, prune_tol)
        r >>= 1
        if r:
            base = sum_multiply(base, base, prune_tol)
    return out


def trotter_steps(m: int, s: float, eps: float, order: int = 2) -> int:
    """Steps for error ``eps``: ``(m s)^(3/2)/sqrt(eps)`` or ``(m s)^2/eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m <= 1 or s == 0:
        return 1
    if order == 2:
        return max(1, math.ceil(math.sqrt((m * s) ** 3 / eps)))
    if order == 1:
        return max(1, math.ceil((m * s) ** 2 / eps))
    raise ValueError("order must be 1 or 2")


def trotterize(g: PauliSum, eps: float = DEFAULT_TROTTER_EPS, order: int = 2,
               steps: int | None = None, tol: float = 1e-12,
               prune_tol: float = DEFAULT_PRUNE_TOL) -> UnitaryAsPauliSum:
    """Product-formula approximation of ``exp(g)`` for anti-Hermitian ``g``.

    Writing ``g = -i sum_l s_l P_l``, one second-order step is
    ``prod_{l=1..m} exp(-i s_l P_l / 2r) prod_{l=m..1} exp(-i s_l P_l / 2r)``
    and the step is raised to the power ``r``.  ``steps`` overrides the
    ``r`` derived from ``eps``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    thetas = _angles(g, tol)
    strings = g.strings()
    s_vals = -thetas
    m = len(strings)
    s_max = float(np.max(np.abs(s_vals))) if m else 0.0
    r = trotter_steps(m, s_max, eps, order) if steps is None else int(steps)
    if r < 1:
        raise ValueError("steps must be >= 1")
    if order == 2:
        bound = (m * s_max) ** 3 / r ** 2
        half = [exp_single(-s / (2 * r), p).value for s, p in zip(s_vals, strings)]
        seq = half + half[::-1]
    elif order == 1:
        bound = (m * s_max) ** 2 / r
        seq = [exp_single(-s / r, p).value for s, p in zip(s_vals, strings)]
    else:
        raise ValueError("order must be 1 or 2")
    # dropped terms compound over r steps, so prune far below eps / r until the end
    inner = min(prune_tol, 1e-3 * eps / r)
    step = PauliSum.identity(g.n_qubits)
    for factor in seq:
        step = sum_multiply(step, factor, inner)
    plan = TrotterPlan(tuple((float(s), p) for s, p in zip(s_vals, strings)),
                       order, r, eps, bound)
    value = canonicalize(_power(step, r, inner), prune_tol)
    return UnitaryAsPauliSum(value, exact=all_commute(g), plan=plan)


def exponentiate(g: PauliSum, eps: float = DEFAULT_TROTTER_EPS,
                 prune_tol: float = DEFAULT_PRUNE_TOL) -> UnitaryAsPauliSum:
    """Exact exponential when the strings commute, product formula otherwise."""
    if all_commute(g):
        return exp_commuting(g, prune_tol=prune_tol)
    return trotterize(g, eps, prune_tol=prune_tol)


def product(unitaries: Sequence[UnitaryAsPauliSum],
            prune_tol: float = DEFAULT_PRUNE_TOL) -> UnitaryAsPauliSum:
    """Matrix product ``U_0 @ U_1 @ ... @ U_{k-1}`` in the order given.

    The last factor acts on a state first, so ``[exp(G2), exp(G1)]`` is the
    two-exponential product ``exp(G2) exp(G1)``.
    """
    if not unitaries:
        raise ValueError("empty product")
    n = unitaries[0].n_qubits
    if any(u.n_qubits != n for u in unitaries):
        raise DimensionError("factors act on different numbers of qubits")
    acc = unitaries[-1].value
    for u in reversed(unitaries[:-1]):
        acc = sum_multiply(u.value, acc, prune_tol)
    plans = [u.plan for u in unitaries if u.plan is not None]
    return UnitaryAsPauliSum(acc, all(u.exact for u in unitaries),
                             plans[0] if len(plans) == 1 else None)
