"""Command-line driver: ``ingest``, ``run``, ``experiment`` and ``dilation-verify``.

Every subcommand accepts ``--config file.json``; flags given on the command
line override values from the file.  Artifacts are written to ``--out`` and
carry a provenance block (config hash, seed, versions, input digests).
Exact-mode runs are bit-reproducible.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .dilation import (
    IllConditionedError,
    build_embedding,
    hadamard_test_probability,
    qsp_square_map,
    restrict_pair,
    verify_spectral_property,
)
from .eigensolver import (
    DEFAULT_TAU,
    EmptySubspaceError,
    InsufficientSpectrumError,
    fci_oracle,
    solve_generalized,
    spectrum_report,
)
from .fcidump import FcidumpError
from .fermion import IntegralSymmetryError
from .gcm import (
    KernelConsistencyError,
    KernelPair,
    SamplingScheme,
    apply_shot_noise,
    assemble_kernels,
    config_hash,
    h4_scheme,
    random_t_experiment,
)
from .io import HamiltonianDocument, load_hamiltonian, versions, write_csv, write_json
from .simulator import ExpectationCache, ShotModel

log = logging.getLogger("qugcm")

# beyond this, dense sector diagonalization is skipped
FCI_MAX_QUBITS = 14
DEFAULT_T_RANGES = ((0.0, 1.0), (0.0, 100.0), (100.0, 1000.0))
T_RANGE_LABELS = {(100.0, 1000.0): "best-effort reading"}
QUANTILE_NAMES = ("min", "q1", "median", "q3", "max")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    hamiltonian: str | None = None
    format: str = "fcidump"
    layout: object = None
    electrons: int | None = None
    scheme: str = "h4"
    t: object = None
    shots: object = "exact"
    convention: str = "per_entry"
    replicates: int = 1
    seed: int | None = None
    tau: float = DEFAULT_TAU
    out: str = "qugcm-out"
    t_ranges: list = field(default_factory=lambda: [list(r) for r in DEFAULT_T_RANGES])
    draws: int = 20
    study: str = "both"
    kernels: str | None = None
    alpha: float | None = None
    eps: float = 1.6e-3

    def validate(self, needs_hamiltonian: bool = True) -> None:
        if needs_hamiltonian and not self.hamiltonian:
            raise ConfigError("a Hamiltonian source (--hamiltonian) is required")
        if self.format not in ("fcidump", "pauli-json"):
            raise ConfigError(f"--format must be fcidump or pauli-json, got {self.format!r}")
        if self.replicates < 1:
            raise ConfigError("--replicates must be >= 1")
        random_t = isinstance(self.t, str) and self.t.startswith("random:")
        if (random_t or shot_list(self.shots) != ["exact"]) and self.seed is None:
            raise ConfigError("a --seed is required whenever randomness is requested")

    def provenance(self) -> dict:
        cfg = asdict(self)
        cfg.pop("out")
        return {"config": cfg, "config_hash": config_hash(cfg), "seed": self.seed,
                "versions": versions()}


def shot_list(value) -> list:
    """``"exact"``, an int, or a comma list of ints (sweeps)."""
    if value is None or value == "exact":
        return ["exact"]
    if isinstance(value, int):
        return [value]
    if isinstance(value, list):
        return [int(v) for v in value]
    try:
        return [int(v) for v in str(value).split(",")]
    except ValueError:
        raise ConfigError(f"--shots must be 'exact' or integers, got {value!r}") from None


def parse_t(value, n_params: int, seed: int | None) -> list[np.ndarray]:
    """Fixed vector (comma list) or ``random:lo,hi,draws``; returns the t vectors."""
    if n_params == 0 and value in (None, "", []):
        return [np.zeros(0)]
    if value is None:
        raise ConfigError("--t is required")
    if isinstance(value, str) and value.startswith("random:"):
        try:
            lo, hi, draws = value[len("random:"):].split(",")
            lo, hi, draws = float(lo), float(hi), int(draws)
        except ValueError:
            raise ConfigError(f"--t random form is random:<lo>,<hi>,<draws>, got {value!r}") from None
        if draws < 1 or hi < lo:
            raise ConfigError("random t needs draws >= 1 and lo <= hi")
        rng = np.random.default_rng(seed)
        return [rng.uniform(lo, hi, size=n_params) for _ in range(draws)]
    vals = value if isinstance(value, list) else str(value).split(",")
    try:
        t = np.array([float(v) for v in vals])
    except ValueError:
        raise ConfigError(f"--t must be {n_params} comma-separated numbers, got {value!r}") from None
    if len(t) != n_params:
        raise ConfigError(f"--t needs {n_params} values for this scheme, got {len(t)}")
    return [t]


def scheme_factory(spec: str) -> tuple[Callable[[np.ndarray], SamplingScheme], int, str]:
    """Returns (t -> scheme, number of t parameters, digest of the scheme source)."""
    if spec == "h4":
        return h4_scheme, 7, "builtin-h4"
    if spec.startswith("custom:"):
        path = Path(spec[len("custom:"):])
        text = path.read_text()
        base = SamplingScheme.from_json_obj(json.loads(text))
        n = max([f.t_slot + 1 for p in base.products for f in p.factors] + [len(base.t_values)])
        if len(base.t_values) < n:
            base = base.with_t(np.zeros(n))
        return base.with_t, n, config_hash(text)
    raise ConfigError(f"--scheme must be 'h4' or 'custom:<path>', got {spec!r}")


def _fci(doc: HamiltonianDocument) -> np.ndarray | None:
    if doc.n_electrons is None or doc.n_qubits > FCI_MAX_QUBITS:
        return None
    return fci_oracle(doc.hamiltonian, doc.n_electrons, doc.sz, doc.spins)


def _quantiles(values) -> list[float]:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if not len(v):
        return [float("nan")] * 5
    return [float(q) for q in np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])]


def _solve_e0(kp: KernelPair, tau: float) -> float:
    try:
        return solve_generalized(kp, tau=tau).ground_energy
    except EmptySubspaceError:
        return float("nan")


def _load(cfg: RunConfig) -> HamiltonianDocument:
    doc = load_hamiltonian(cfg.hamiltonian, cfg.format, cfg.layout, cfg.electrons)
    log.info("Hamiltonian: %d qubits, %d terms, alpha %.6f",
             doc.n_qubits, len(doc.hamiltonian), doc.alpha)
    return doc


def cmd_ingest(cfg: RunConfig) -> int:
    cfg.validate()
    doc = _load(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "hamiltonian.json", doc.to_json_obj())
    summary = doc.summary() | {"source": doc.source, "source_sha1": doc.source_sha1}
    write_json(out / "summary.json", summary)
    print(f"qubits={doc.n_qubits} terms={len(doc.hamiltonian)} alpha={doc.alpha:.10g}")
    return 0


def _run_one(cfg: RunConfig, doc: HamiltonianDocument, scheme: SamplingScheme,
             fci: np.ndarray | None, out: Path, prov: dict) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    ref = doc.reference()
    shots = shot_list(cfg.shots)
    if len(shots) != 1:
        raise ConfigError("run takes a single --shots value; use experiment for sweeps")
    noisy = shots[0] != "exact"
    cache = ExpectationCache()
    kp = assemble_kernels(scheme, doc.hamiltonian, ref, cache=cache, budgets=noisy)
    kp.check_hermitian()
    kp_prov = kp.provenance | prov | {"hamiltonian_alpha": doc.alpha}
    kp = KernelPair(kp.H, kp.S, kp_prov, kp.H_budget, kp.S_budget,
                    kp.H_budget_group, kp.S_budget_group, kp.term_counts)
    sol = solve_generalized(kp, tau=cfg.tau)
    rep = spectrum_report(sol, fci)
    write_json(out / "kernels.json", kp.to_json_obj())
    write_json(out / "eigensolution.json", sol.to_json_obj() | {"provenance": prov})
    write_csv(out / "spectrum.csv", rep.csv_rows())
    write_json(out / "cache_stats.json", {"blocks": cache.stats(), "provenance": prov})
    result = {"E0": rep.ground_energy, "delta_mha": rep.ground_delta_mha,
              "retained_dim": sol.retained_dim}
    if noisy:
        model = ShotModel(shots[0], "max_variance_gaussian", cfg.seed, cfg.convention)
        rows = [["replicate", "E0", "delta_mha"]]
        for r in range(cfg.replicates):
            e0 = _solve_e0(apply_shot_noise(kp, model, r), cfg.tau)
            d = None if fci is None else (e0 - fci[0]) * 1e3
            rows.append([r, e0, d])
        write_csv(out / "replicates.csv", rows)
    log.info("E0 = %.10f (retained %d of %d)", rep.ground_energy, sol.retained_dim, scheme.M)
    return result


def cmd_run(cfg: RunConfig) -> int:
    cfg.validate()
    doc = _load(cfg)
    factory, n_params, scheme_digest = scheme_factory(cfg.scheme)
    ts = parse_t(cfg.t, n_params, cfg.seed)
    fci = _fci(doc)
    prov = cfg.provenance() | {"hamiltonian_sha1": doc.source_sha1, "scheme_digest": scheme_digest}
    out = Path(cfg.out)
    if len(ts) == 1:
        res = _run_one(cfg, doc, factory(ts[0]), fci, out, prov)
        print(f"E0={res['E0']:.10f}" + ("" if res["delta_mha"] is None
                                        else f" dE={res['delta_mha']:+.4f} mHa"))
        return 0
    rows = [["draw"] + [f"t{k + 1}" for k in range(n_params)] + ["E0", "delta_mha"]]
    for k, t in enumerate(ts):
        res = _run_one(cfg, doc, factory(t), fci, out / f"draw_{k:03d}", prov | {"draw": k})
        rows.append([k, *map(float, t), res["E0"], res["delta_mha"]])
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "draws.csv", rows)
    write_json(out / "provenance.json", prov)
    print(f"{len(ts)} draws written to {out}")
    return 0


def shot_sweep(kp: KernelPair, shots: list[int], replicates: int, seed: int,
               convention: str, tau: float, reference: float) -> tuple[list, list]:
    """Per-shot-count error quantiles (mHa) over replicates, plus the raw rows."""
    summary = [["shots", "convention", "replicates", "failures", *QUANTILE_NAMES, "mean", "std"]]
    raw = [["shots", "replicate", "E0", "error_mha"]]
    for n in shots:
        model = ShotModel(n, "max_variance_gaussian", seed, convention)
        errs = []
        for r in range(replicates):
            e0 = _solve_e0(apply_shot_noise(kp, model, r), tau)
            errs.append((e0 - reference) * 1e3)
            raw.append([n, r, e0, errs[-1]])
        e = np.asarray(errs)
        ok = e[np.isfinite(e)]
        summary.append([n, convention, replicates, int(len(e) - len(ok)), *_quantiles(e),
                        float(ok.mean()) if len(ok) else float("nan"),
                        float(ok.std()) if len(ok) else float("nan")])
    return summary, raw


def cmd_experiment(cfg: RunConfig) -> int:
    cfg.validate()
    if cfg.seed is None:
        raise ConfigError("experiment needs --seed")
    if cfg.study not in ("shots", "t-ranges", "both"):
        raise ConfigError("--study must be shots, t-ranges or both")
    doc = _load(cfg)
    factory, n_params, scheme_digest = scheme_factory(cfg.scheme)
    fci = _fci(doc)
    prov = cfg.provenance() | {"hamiltonian_sha1": doc.source_sha1, "scheme_digest": scheme_digest}
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    ref = doc.reference()
    if cfg.study in ("shots", "both"):
        shots = shot_list(cfg.shots)
        if shots == ["exact"]:
            raise ConfigError("the shot sweep needs integer --shots (comma list allowed)")
        t = parse_t(cfg.t, n_params, cfg.seed)[0]
        kp = assemble_kernels(factory(t), doc.hamiltonian, ref, budgets=True)
        exact_e0 = solve_generalized(kp, tau=cfg.tau).ground_energy
        reference = exact_e0 if fci is None else float(fci[0])
        summary, raw = shot_sweep(kp, shots, cfg.replicates, cfg.seed, cfg.convention,
                                  cfg.tau, reference)
        write_csv(out / "shot_sweep.csv", summary)
        write_csv(out / "shot_sweep_raw.csv", raw)
        write_json(out / "shot_sweep_meta.json", {
            "t": t.tolist(), "exact_gcm_E0": exact_e0,
            "reference": "fci" if fci is not None else "exact-gcm",
            "reference_E0": reference, "provenance": prov})
        log.info("shot sweep: %d shot counts x %d replicates", len(shots), cfg.replicates)
    if cfg.study in ("t-ranges", "both"):
        if fci is None:
            raise ConfigError("the t-range study needs an FCI reference (electron count and <= "
                              f"{FCI_MAX_QUBITS} qubits)")
        if isinstance(cfg.t, str) and cfg.t.startswith("random:"):
            lo, hi, draws = cfg.t[len("random:"):].split(",")
            ranges, draws = [(float(lo), float(hi))], int(draws)
        else:
            ranges, draws = [tuple(map(float, r)) for r in cfg.t_ranges], cfg.draws
        results = random_t_experiment(ranges, draws, cfg.seed, doc.hamiltonian, ref,
                                      float(fci[0]), factory, n_params, cfg.tau,
                                      progress=log.info)
        summary = [["lo", "hi", "draws", *QUANTILE_NAMES, "hit_rate", "label"]]
        raw = [["lo", "hi", "draw", "error_mha"] + [f"t{k + 1}" for k in range(n_params)]]
        for res in results:
            q = res.quantiles
            summary.append([*res.range, len(res.errors_mha), *(q[k] for k in QUANTILE_NAMES),
                            res.hit_rate, T_RANGE_LABELS.get(res.range, "")])
            for d, (e, t) in enumerate(zip(res.errors_mha, res.t_draws)):
                raw.append([*res.range, d, e, *t])
        write_csv(out / "t_ranges.csv", summary)
        write_csv(out / "t_ranges_raw.csv", raw)
        write_json(out / "t_ranges_meta.json", {"fci_E0": float(fci[0]), "provenance": prov})
    print(f"experiment data written to {out}")
    return 0


def cmd_dilation_verify(cfg: RunConfig) -> int:
    if cfg.kernels:
        cfg.validate(needs_hamiltonian=False)
        kp = KernelPair.from_json_obj(json.loads(Path(cfg.kernels).read_text()))
        alpha = cfg.alpha if cfg.alpha is not None else kp.provenance.get("hamiltonian_alpha")
    else:
        cfg.validate()
        doc = _load(cfg)
        factory, n_params, _ = scheme_factory(cfg.scheme)
        t = parse_t(cfg.t, n_params, cfg.seed)[0]
        kp = assemble_kernels(factory(t), doc.hamiltonian, doc.reference())
        alpha = cfg.alpha if cfg.alpha is not None else doc.alpha
    H, S = restrict_pair(kp.H, kp.S, cfg.tau)
    dp = build_embedding(H, S, alpha=alpha)
    rep = verify_spectral_property(dp, eps=cfg.eps)
    probs = [[hadamard_test_probability(s) for s in row] for row in kp.S]
    hadamard_ok = all(0.0 <= p <= 1.0 and abs(qsp_square_map(np.sqrt(p)) - s.real) < 1e-10
                      for prow, srow in zip(probs, kp.S) for p, s in zip(prow, srow))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "dilation.json", rep.to_json_obj() | {
        "M": kp.M, "retained_dim": dp.M, "trace_identity_holds": rep.trace_identity_holds,
        "hadamard_identity_holds": hadamard_ok, "provenance": cfg.provenance()})
    print(f"M={dp.M} alpha={dp.alpha:.6g} lcu_deviation={rep.lcu_deviation:.2e} "
          f"contains_pm_E={rep.contains_pm_E} trace_identity={rep.trace_identity_holds}")
    return 0


COMMANDS = {"ingest": cmd_ingest, "run": cmd_run, "experiment": cmd_experiment,
            "dilation-verify": cmd_dilation_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qugcm", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with defaults for any flag")
        s.add_argument("--hamiltonian")
        s.add_argument("--format", choices=("fcidump", "pauli-json"))
        s.add_argument("--layout", help="occupied-first, interleaved, spin-blocked or a JSON table")
        s.add_argument("--electrons", type=int, help="electron count for bare Pauli input")
        s.add_argument("--out")
        if name == "ingest":
            continue
        s.add_argument("--scheme", help="h4 or custom:<path>")
        s.add_argument("--t", help="t1,...,tk or random:<lo>,<hi>,<draws>")
        s.add_argument("--tau", type=float)
        s.add_argument("--seed", type=int)
        if name == "dilation-verify":
            s.add_argument("--kernels", help="kernels.json from a previous run")
            s.add_argument("--alpha", type=float)
            s.add_argument("--eps", type=float)
            continue
        s.add_argument("--shots", help="exact, n, or n1,n2,... for experiment sweeps")
        s.add_argument("--convention", choices=("per_entry", "per_group"))
        s.add_argument("--replicates", type=int)
        if name == "experiment":
            s.add_argument("--draws", type=int, help="t draws per range")
            s.add_argument("--study", choices=("shots", "t-ranges", "both"))
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values = json.loads(Path(args.config).read_text())
        unknown = set(values) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in RunConfig.__dataclass_fields__:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(**values)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](config_from_args(args))
    except (EmptySubspaceError, InsufficientSpectrumError, IllConditionedError,
            KernelConsistencyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FcidumpError, IntegralSymmetryError, ConfigError, ValueError, KeyError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
