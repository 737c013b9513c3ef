"""Sampling schemes, kernel assembly and the random-parameter experiment.

A basis state is an ordered product of exponentials of one-body generators
applied to the reference determinant,
``|Phi_I> = exp(G_k) ... exp(G_1) |Phi>``.  Kernel entries
``H_pq = <Phi|V_p^dag H V_q|Phi>`` and ``S_pq = <Phi|V_p^dag V_q|Phi>`` are
obtained by expanding the sandwiched operators as Pauli sums and measuring
each string on the reference state.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .eigensolver import CHEMICAL_ACCURACY_MHA, DEFAULT_TAU, solve_generalized
from .expgen import DEFAULT_TROTTER_EPS, UnitaryAsPauliSum, exponentiate, product
from .fermion import GeneratorMatrix, ReferenceState, generator_sum, hf_statevector
from .pauli import DEFAULT_PRUNE_TOL, PauliSum, group_qwc, sum_multiply
from .simulator import (
    ExpectationCache,
    ShotModel,
    StateVector,
    apply_sum,
    expect_sum,
    sample_kernel_entry,
)


class KernelConsistencyError(RuntimeError):
    """Exact-mode kernels drifted from Hermitian beyond tolerance."""


@dataclass(frozen=True)
class Factor:
    """``exp(sign * t[t_slot] * Gamma(template))``."""

    template: str
    sign: int = 1
    t_slot: int = 0


@dataclass(frozen=True)
class GeneratorProduct:
    """Ordered factors as written left to right; the rightmost acts first.

    An empty factor list is the bare reference state.
    """

    label: str
    factors: tuple[Factor, ...] = ()

    @property
    def is_identity(self) -> bool:
        return not self.factors


@dataclass(frozen=True, eq=False)
class SamplingScheme:
    n_modes: int
    templates: dict[str, GeneratorMatrix]
    products: tuple[GeneratorProduct, ...]
    t_values: np.ndarray

    def __post_init__(self):
        if not self.products:
            raise ValueError("a scheme needs at least one product")
        t = np.asarray(self.t_values, dtype=float)
        object.__setattr__(self, "t_values", t)
        for prod in self.products:
            for f in prod.factors:
                if f.template not in self.templates:
                    raise KeyError(f"product {prod.label!r} uses unknown template {f.template!r}")
                if not 0 <= f.t_slot < len(t):
                    raise IndexError(f"product {prod.label!r} uses t slot {f.t_slot} "
                                     f"but only {len(t)} values are set")
        for name, g in self.templates.items():
            if g.n_modes != self.n_modes:
                raise ValueError(f"template {name!r} has {g.n_modes} modes, scheme has {self.n_modes}")

    @property
    def M(self) -> int:
        return len(self.products)

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self.products]

    def with_t(self, t_values) -> "SamplingScheme":
        return SamplingScheme(self.n_modes, self.templates, self.products, np.asarray(t_values, float))

    def subset(self, indices: Sequence[int]) -> "SamplingScheme":
        return SamplingScheme(self.n_modes, self.templates,
                              tuple(self.products[i] for i in indices), self.t_values)

    def generator(self, factor: Factor) -> GeneratorMatrix:
        return self.templates[factor.template].scaled(factor.sign * self.t_values[factor.t_slot])

    def to_json_obj(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "templates": {k: {"re": g.z.real.tolist(), "im": g.z.imag.tolist()}
                          for k, g in self.templates.items()},
            "products": [{"label": p.label,
                          "factors": [{"template": f.template, "sign": f.sign, "t_slot": f.t_slot}
                                      for f in p.factors]}
                         for p in self.products],
            "t_values": self.t_values.tolist(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SamplingScheme":
        """Templates may be given as matrices (``re``/``im``) or ``excitations`` pairs."""
        n = int(obj["n_modes"])
        templates = {}
        for name, spec in obj["templates"].items():
            if "excitations" in spec:
                templates[name] = GeneratorMatrix.from_excitations(
                    n, [tuple(e) for e in spec["excitations"]])
            else:
                z = np.asarray(spec["re"], float) + 1j * np.asarray(spec.get("im", 0.0), float)
                templates[name] = GeneratorMatrix(z)
        products = tuple(
            GeneratorProduct(p["label"], tuple(Factor(f["template"], int(f.get("sign", 1)),
                                                      int(f.get("t_slot", 0)))
                                               for f in p.get("factors", [])))
            for p in obj["products"]
        )
        return cls(n, templates, products, np.asarray(obj.get("t_values", []), float))


# Excitation pairs (virtual, occupied), 0-based, for the eight-spin-orbital
# layout: 0-1 occupied alpha, 2-3 occupied beta, 4-5 virtual alpha, 6-7 virtual beta.
H4_TEMPLATES = {
    "R1": [(4, 1), (6, 3)],
    "R2": [(5, 0), (7, 2)],
    "R3": [(5, 1), (7, 3)],
    "R4": [(4, 0), (6, 2)],
}


def h4_scheme(t: Sequence[float]) -> SamplingScheme:
    """The 15-state two-exponential scheme for H4 in STO-3G.

    ``t`` holds ``t1..t7``.  Order: reference; ``exp(+-t_i R_i)`` for
    ``i = 1..4``; ``exp(t5 R3) exp(t5 R4)``; ``exp(t6 R4) exp(t6 R3)``; and
    ``exp(s t7 R2) exp(s' t7 R1)`` for sign pairs ``++, +-, -+, --``.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (7,):
        raise ValueError(f"h4_scheme needs 7 parameters, got shape {t.shape}")
    templates = {k: GeneratorMatrix.from_excitations(8, v) for k, v in H4_TEMPLATES.items()}
    prods = [GeneratorProduct("R0")]
    for i in range(1, 5):
        for sign, tag in ((1, "+"), (-1, "-")):
            prods.append(GeneratorProduct(f"R{i}{tag}", (Factor(f"R{i}", sign, i - 1),)))
    prods.append(GeneratorProduct("R5", (Factor("R3", 1, 4), Factor("R4", 1, 4))))
    prods.append(GeneratorProduct("R6", (Factor("R4", 1, 5), Factor("R3", 1, 5))))
    for s2, s1 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        tag = "+-"[s2 < 0] + "+-"[s1 < 0]
        prods.append(GeneratorProduct(f"R2R1{tag}", (Factor("R2", s2, 6), Factor("R1", s1, 6))))
    return SamplingScheme(8, templates, tuple(prods), t)


def scheme_unitaries(scheme: SamplingScheme, n_qubits: int | None = None,
                     eps: float = DEFAULT_TROTTER_EPS,
                     prune_tol: float = DEFAULT_PRUNE_TOL) -> list[UnitaryAsPauliSum]:
    """``V_I`` for every product, as Pauli sums."""
    n = scheme.n_modes if n_qubits is None else n_qubits
    base = {name: generator_sum(g, n) for name, g in scheme.templates.items()}
    exps: dict[tuple[str, float], UnitaryAsPauliSum] = {}
    out = []
    for prod in scheme.products:
        if prod.is_identity:
            out.append(UnitaryAsPauliSum(PauliSum.identity(n)))
            continue
        factors = []
        for f in prod.factors:
            angle = f.sign * float(scheme.t_values[f.t_slot])
            key = (f.template, angle)
            if key not in exps:
                exps[key] = exponentiate(base[f.template].scale(angle), eps, prune_tol)
            factors.append(exps[key])
        out.append(product(factors, prune_tol))
    return out


def basis_states(scheme: SamplingScheme, ref: ReferenceState,
                 unitaries: Sequence[UnitaryAsPauliSum] | None = None) -> list[StateVector]:
    """Dense ``V_I |Phi>`` for every product in the scheme."""
    if scheme.n_modes != ref.n_modes:
        raise ValueError("scheme and reference act on different mode counts")
    if unitaries is None:
        unitaries = scheme_unitaries(scheme)
    hf = hf_statevector(ref)
    return [StateVector.normalized(ref.n_modes, apply_sum(u.value, hf)) for u in unitaries]


@dataclass(frozen=True, eq=False)
class KernelPair:
    """Hamiltonian and overlap kernels with per-entry measurement budgets.

    ``*_budget`` holds ``sum_G ||h_G||_1`` per entry (the per-entry shot
    convention) and ``*_budget_group`` holds ``sqrt(sum_G ||h_G||_1**2)``
    (per-group convention); either divided by ``sqrt(shots)`` is the
    standard-deviation bound.  Budgets are ``None`` when not computed.
    """

    H: np.ndarray
    S: np.ndarray
    provenance: dict = field(default_factory=dict)
    H_budget: np.ndarray | None = None
    S_budget: np.ndarray | None = None
    H_budget_group: np.ndarray | None = None
    S_budget_group: np.ndarray | None = None
    term_counts: dict | None = None

    @property
    def M(self) -> int:
        return len(self.H)

    def bounds(self, model: ShotModel) -> tuple[np.ndarray, np.ndarray]:
        if self.H_budget is None:
            raise ValueError("kernel pair was assembled without measurement budgets")
        if model.convention == "per_entry":
            hb, sb = self.H_budget, self.S_budget
        else:
            hb, sb = self.H_budget_group, self.S_budget_group
        root = np.sqrt(model.shots)
        return hb / root, sb / root

    def check_hermitian(self, tol: float = 1e-8) -> None:
        for name, a in (("H", self.H), ("S", self.S)):
            dev = np.max(np.abs(a - a.conj().T), initial=0.0)
            if dev > tol:
                raise KernelConsistencyError(f"{name} deviates from Hermitian by {dev:.3e}")

    def to_json_obj(self) -> dict:
        obj = {
            "M": self.M,
            "H_re": self.H.real.tolist(), "H_im": self.H.imag.tolist(),
            "S_re": self.S.real.tolist(), "S_im": self.S.imag.tolist(),
            "provenance": self.provenance,
        }
        if self.H_budget is not None:
            obj["H_budget"] = self.H_budget.tolist()
            obj["S_budget"] = self.S_budget.tolist()
            obj["H_budget_group"] = self.H_budget_group.tolist()
            obj["S_budget_group"] = self.S_budget_group.tolist()
        if self.term_counts is not None:
            obj["term_counts"] = self.term_counts
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "KernelPair":
        H = np.asarray(obj["H_re"], float) + 1j * np.asarray(obj["H_im"], float)
        S = np.asarray(obj["S_re"], float) + 1j * np.asarray(obj["S_im"], float)
        extra = {k: np.asarray(obj[k], float) for k in
                 ("H_budget", "S_budget", "H_budget_group", "S_budget_group") if k in obj}
        return cls(H, S, obj.get("provenance", {}), term_counts=obj.get("term_counts"), **extra)

    def write_csv(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, a in (("H", self.H), ("S", self.S)):
            rows = [",".join(repr(complex(v)).strip("()") for v in row) for row in a]
            (directory / f"{name}.csv").write_text("\n".join(rows) + "\n")


def _budgets(op: PauliSum) -> tuple[float, float]:
    grouping = group_qwc(op)
    nontrivial = (op.xs != 0) | (op.zs != 0)
    a = np.abs(op.coeffs) * nontrivial
    norms = np.array([a[list(g)].sum() for g in grouping.groups]) if len(grouping) else np.zeros(0)
    return float(norms.sum()), float(np.sqrt(np.sum(norms ** 2)))


def assemble_kernels(scheme: SamplingScheme, hamiltonian: PauliSum, ref: ReferenceState,
                     shot_model: ShotModel | None = None,
                     cache: ExpectationCache | None = None,
                     budgets: bool | None = None,
                     unitaries: Sequence[UnitaryAsPauliSum] | None = None,
                     eps: float = DEFAULT_TROTTER_EPS,
                     prune_tol: float = DEFAULT_PRUNE_TOL,
                     hermitian_tol: float = 1e-8) -> KernelPair:
    """Operator-side assembly of ``H`` and ``S``.

    Only ``p <= q`` is computed (``M(M+1)/2`` entries); the rest follows by
    conjugate symmetry.  Shot noise, if requested, is applied to the finished
    exact kernels, so the returned pair carries noise for replicate 0.
    """
    n = hamiltonian.n_qubits
    if scheme.n_modes != n or ref.n_modes != n:
        raise ValueError("scheme, Hamiltonian and reference disagree on qubit count")
    shot_model = shot_model or ShotModel.exact()
    if budgets is None:
        budgets = shot_model.mode != "exact"
    if unitaries is None:
        unitaries = scheme_unitaries(scheme, n, eps, prune_tol)
    hf = hf_statevector(ref)
    M = scheme.M
    H = np.zeros((M, M), dtype=complex)
    S = np.zeros((M, M), dtype=complex)
    hb = np.zeros((M, M)) if budgets else None
    sb = np.zeros((M, M)) if budgets else None
    hbg = np.zeros((M, M)) if budgets else None
    sbg = np.zeros((M, M)) if budgets else None
    h_terms = s_terms = 0
    daggers = [u.value.dagger() for u in unitaries]
    for q in range(M):
        hv = sum_multiply(hamiltonian, unitaries[q].value, prune_tol)
        for p in range(q + 1):
            op_h = sum_multiply(daggers[p], hv, prune_tol)
            op_s = sum_multiply(daggers[p], unitaries[q].value, prune_tol)
            H[p, q] = expect_sum(hf, op_h, cache, "H")
            S[p, q] = expect_sum(hf, op_s, cache, "S")
            h_terms += len(op_h)
            s_terms += len(op_s)
            if budgets:
                hb[p, q], hbg[p, q] = _budgets(op_h)
                sb[p, q], sbg[p, q] = _budgets(op_s)
    for p in range(M):
        for q in range(p):
            H[p, q] = H[q, p].conjugate()
            S[p, q] = S[q, p].conjugate()
            if budgets:
                hb[p, q], hbg[p, q] = hb[q, p], hbg[q, p]
                sb[p, q], sbg[p, q] = sb[q, p], sbg[q, p]
    diag_dev = max(np.max(np.abs(np.diag(H).imag)), np.max(np.abs(np.diag(S).imag)))
    if diag_dev > hermitian_tol:
        raise KernelConsistencyError(f"diagonal kernel entries have imaginary parts {diag_dev:.3e}")
    exact = KernelPair(
        H, S,
        provenance={
            "scheme_labels": scheme.labels,
            "t_values": scheme.t_values.tolist(),
            "n_qubits": n,
            "reference": sorted(ref.occupied),
            "prune_tol": prune_tol,
            "trotter_eps": eps,
            "pairs_computed": M * (M + 1) // 2,
            "hamiltonian_sha1": hashlib.sha1(hamiltonian.to_json().encode()).hexdigest(),
            "version": __version__,
            "shot_model": shot_model.__dict__ | {"replicate": None},
        },
        H_budget=hb, S_budget=sb, H_budget_group=hbg, S_budget_group=sbg,
        term_counts={"H": h_terms, "S": s_terms},
    )
    if shot_model.mode == "exact":
        return exact
    return apply_shot_noise(exact, shot_model, 0)


def apply_shot_noise(kernels: KernelPair, model: ShotModel, replicate: int = 0) -> KernelPair:
    """A noisy copy of exact kernels; Hermiticity is kept by mirroring draws."""
    if model.mode == "exact":
        return kernels
    h_bound, s_bound = kernels.bounds(model)
    rng = model.rng(replicate)
    M = kernels.M
    H = kernels.H.copy()
    S = kernels.S.copy()
    for q in range(M):
        for p in range(q + 1):
            diag = p == q
            H[p, q] = sample_kernel_entry(H[p, q], h_bound[p, q], model, rng, real=diag)
            S[p, q] = sample_kernel_entry(S[p, q], s_bound[p, q], model, rng, real=diag)
            if not diag:
                H[q, p] = H[p, q].conjugate()
                S[q, p] = S[p, q].conjugate()
    prov = dict(kernels.provenance)
    prov["shot_model"] = model.__dict__ | {"replicate": replicate}
    return KernelPair(H, S, prov, kernels.H_budget, kernels.S_budget,
                      kernels.H_budget_group, kernels.S_budget_group, kernels.term_counts)


def dense_kernels(states: Sequence[StateVector], hamiltonian: PauliSum) -> KernelPair:
    """State-side kernels from explicit basis vectors (oracle path)."""
    vecs = np.array([s.amplitudes for s in states]).T
    hvecs = np.array([apply_sum(hamiltonian, s) for s in states]).T
    return KernelPair(vecs.conj().T @ hvecs, vecs.conj().T @ vecs, {"path": "state-side"})


@dataclass
class RandomTSummary:
    range: tuple[float, float]
    errors_mha: list[float]
    t_draws: list[list[float]]

    @property
    def quantiles(self) -> dict[str, float]:
        e = np.asarray(self.errors_mha, dtype=float)
        q = np.quantile(e, [0.0, 0.25, 0.5, 0.75, 1.0])
        return dict(zip(("min", "q1", "median", "q3", "max"), (float(v) for v in q)))

    @property
    def hit_rate(self) -> float:
        e = np.abs(np.asarray(self.errors_mha, dtype=float))
        return float(np.mean(e <= CHEMICAL_ACCURACY_MHA))

    def to_json_obj(self) -> dict:
        return {"range": list(self.range), "errors_mha": self.errors_mha,
                "t_draws": self.t_draws, "quantiles": self.quantiles,
                "hit_rate": self.hit_rate}


def random_t_experiment(ranges: Sequence[tuple[float, float]], draws: int, seed: int,
                        hamiltonian: PauliSum, ref: ReferenceState, fci_ground: float,
                        scheme_factory: Callable[[np.ndarray], SamplingScheme] = h4_scheme,
                        n_params: int = 7, tau: float = DEFAULT_TAU,
                        progress: Callable[[str], None] | None = None) -> list[RandomTSummary]:
    """Ground-state error (mHa) of the GCM estimate for uniform random ``t`` draws."""
    if draws < 1:
        raise ValueError("draws must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for lo, hi in ranges:
        errs, ts = [], []
        for d in range(draws):
            t = rng.uniform(lo, hi, size=n_params)
            start = time.perf_counter()
            kp = assemble_kernels(scheme_factory(t), hamiltonian, ref)
            e0 = solve_generalized(kp, tau=tau).ground_energy
            errs.append(float((e0 - fci_ground) * 1e3))
            ts.append(t.tolist())
            if progress:
                progress(f"range [{lo}, {hi}) draw {d + 1}/{draws}: "
                         f"{errs[-1]:+.4f} mHa ({time.perf_counter() - start:.1f}s)")
        out.append(RandomTSummary((float(lo), float(hi)), errs, ts))
    return out


def config_hash(obj) -> str:
    return hashlib.sha1(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()
