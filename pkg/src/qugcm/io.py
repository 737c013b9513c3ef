"""Hamiltonian documents, ingestion and small artifact helpers."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .fcidump import read_fcidump
from .fermion import IntegralSet, ReferenceState, SpinOrbitalLayout, build_hamiltonian
from .pauli import PauliSum

DOC_FORMAT = "qugcm-hamiltonian/1"
LAYOUT_NAMES = ("occupied-first", "interleaved", "spin-blocked")


@dataclass(frozen=True, eq=False)
class HamiltonianDocument:
    """A qubit Hamiltonian plus what is needed to pick a reference and an FCI sector.

    ``spins[k]`` is the spin of qubit ``k`` (0 alpha, 1 beta) and ``occupied``
    the reference determinant.  Either may be ``None`` for bare Pauli input.
    """

    hamiltonian: PauliSum
    n_electrons: int | None = None
    ms2: int = 0
    spins: tuple[int, ...] | None = None
    occupied: tuple[int, ...] | None = None
    source: str = ""
    source_sha1: str = ""

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits

    @property
    def alpha(self) -> float:
        return self.hamiltonian.one_norm()

    @property
    def sz(self) -> float | None:
        return None if self.spins is None else self.ms2 / 2

    def reference(self) -> ReferenceState:
        if self.occupied is not None:
            return ReferenceState(self.n_qubits, frozenset(self.occupied))
        if self.n_electrons is None:
            raise ValueError("the Hamiltonian document names neither a reference nor an electron count")
        return ReferenceState(self.n_qubits, frozenset(range(self.n_electrons)))

    def summary(self) -> dict:
        return {"n_qubits": self.n_qubits, "n_terms": len(self.hamiltonian),
                "alpha": self.alpha, "n_electrons": self.n_electrons, "ms2": self.ms2}

    def to_json_obj(self) -> dict:
        return {
            "format": DOC_FORMAT,
            "n_qubits": self.n_qubits,
            "n_electrons": self.n_electrons,
            "ms2": self.ms2,
            "spins": None if self.spins is None else list(self.spins),
            "occupied": None if self.occupied is None else list(self.occupied),
            "source": self.source,
            "source_sha1": self.source_sha1,
            "summary": self.summary(),
            "terms": self.hamiltonian.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj, n_electrons: int | None = None) -> "HamiltonianDocument":
        """Accepts a full document or a bare list of ``{"pauli", "coeff"}`` terms."""
        if isinstance(obj, list):
            return cls(PauliSum.from_json_obj(obj), n_electrons=n_electrons)
        if obj.get("format") != DOC_FORMAT:
            raise ValueError(f"unknown Hamiltonian document format {obj.get('format')!r}")
        ham = PauliSum.from_json_obj(obj["terms"], obj["n_qubits"])
        spins = obj.get("spins")
        occ = obj.get("occupied")
        return cls(ham,
                   n_electrons=obj.get("n_electrons") if n_electrons is None else n_electrons,
                   ms2=int(obj.get("ms2") or 0),
                   spins=None if spins is None else tuple(spins),
                   occupied=None if occ is None else tuple(occ),
                   source=obj.get("source", ""), source_sha1=obj.get("source_sha1", ""))


def file_sha1(path: str | Path) -> str:
    return hashlib.sha1(Path(path).read_bytes()).hexdigest()


def parse_layout(spec, ints: IntegralSet) -> SpinOrbitalLayout:
    """A named layout or an explicit ``[[spatial, spin], ...]`` table (or a path to one)."""
    if spec is None or spec == "occupied-first":
        return ints.default_layout()
    if spec == "interleaved":
        return SpinOrbitalLayout.interleaved(ints.n_spatial)
    if spec == "spin-blocked":
        return SpinOrbitalLayout.spin_blocked(ints.n_spatial)
    if isinstance(spec, str):
        path = Path(spec)
        if not path.exists():
            raise ValueError(f"layout must be one of {LAYOUT_NAMES} or a JSON file, got {spec!r}")
        spec = json.loads(path.read_text())
    table = tuple((int(i), int(s)) for i, s in spec)
    if len(table) != 2 * ints.n_spatial:
        raise ValueError(f"layout table has {len(table)} entries, need {2 * ints.n_spatial}")
    return SpinOrbitalLayout(table)


def document_from_integrals(ints: IntegralSet, layout: SpinOrbitalLayout,
                            source: str = "", source_sha1: str = "") -> HamiltonianDocument:
    ref = layout.reference(ints.n_alpha, ints.n_beta)
    return HamiltonianDocument(build_hamiltonian(ints, layout), ints.n_electrons, ints.ms2,
                               layout.spins, tuple(sorted(ref.occupied)), source, source_sha1)


def load_hamiltonian(path: str | Path, fmt: str = "fcidump", layout=None,
                     n_electrons: int | None = None) -> HamiltonianDocument:
    path = Path(path)
    if fmt == "fcidump":
        ints = read_fcidump(path)
        return document_from_integrals(ints, parse_layout(layout, ints), str(path), file_sha1(path))
    if fmt == "pauli-json":
        doc = HamiltonianDocument.from_json_obj(json.loads(path.read_text()), n_electrons)
        if not doc.source:
            doc = HamiltonianDocument(doc.hamiltonian, doc.n_electrons, doc.ms2, doc.spins,
                                      doc.occupied, str(path), file_sha1(path))
        return doc
    raise ValueError(f"unknown Hamiltonian format {fmt!r} (fcidump or pauli-json)")


def versions() -> dict:
    return {"qugcm": __version__, "numpy": np.__version__, "python": platform.python_version()}


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_csv(path: str | Path, rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])


__all__ = ["HamiltonianDocument", "load_hamiltonian", "parse_layout", "document_from_integrals",
           "write_json", "write_csv", "versions"]
