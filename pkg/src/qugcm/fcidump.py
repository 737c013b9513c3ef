"""FCIDUMP reader and writer.

The header is a Fortran namelist (``&FCI NORB=..., NELEC=..., MS2=...,
ORBSYM=..., ISYM=... &END`` or terminated by ``/``).  Each following line is
``value i j k l`` with 1-based indices: ``i j k l`` all nonzero is the
chemists' two-electron integral ``(ij|kl)``, ``k = l = 0`` a one-electron
integral and all zeros the core energy.  Lines listing orbital energies
(``i > 0``, ``j = k = l = 0``) are accepted and ignored.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .fermion import IntegralSet, IntegralSymmetryError


class FcidumpError(ValueError):
    """Malformed FCIDUMP input; the message names the offending line."""


_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)")


def _parse_namelist(text: str, first_line: int) -> dict:
    body = text.strip()
    if not body.upper().startswith("&FCI"):
        raise FcidumpError(f"line {first_line}: header must start with '&FCI'")
    body = body[4:]
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.IGNORECASE)
    out = {}
    for key, raw in _KEY_RE.findall(body.replace("\n", " ")):
        vals = [v for v in re.split(r"[,\s]+", raw.strip()) if v]
        try:
            nums = [int(v) for v in vals]
        except ValueError:
            where = next((first_line + n for n, ln in enumerate(text.splitlines())
                          if key in ln), first_line)
            raise FcidumpError(f"line {where}: non-integer value for {key}: {raw.strip()!r}") from None
        out[key.upper()] = nums if key.upper() == "ORBSYM" else (nums[0] if nums else None)
    for required in ("NORB", "NELEC"):
        if out.get(required) is None:
            raise FcidumpError(f"line {first_line}: namelist is missing {required}")
    return out


def _eightfold(i, j, k, l):
    seen = set()
    for a, b in ((i, j), (j, i)):
        for c, d in ((k, l), (l, k)):
            for idx in ((a, b, c, d), (c, d, a, b)):
                if idx not in seen:
                    seen.add(idx)
                    yield idx


def read_fcidump(path: str | Path, tol: float = 1e-10) -> IntegralSet:
    """Parse an FCIDUMP file into an :class:`IntegralSet`.

    Entries related by the 8-fold permutational symmetry are filled in; two
    listed entries that are symmetry images of each other must agree within
    ``tol``.
    """
    lines = Path(path).read_text().splitlines()
    header_lines = []
    end = None
    for n, line in enumerate(lines):
        header_lines.append(line)
        up = line.strip().upper()
        if up.endswith("&END") or up == "/" or up.endswith("/") or "&END" in up:
            end = n
            break
    if end is None:
        raise FcidumpError(f"line {len(lines)}: namelist header is not terminated (&END or /)")
    header = _parse_namelist("\n".join(header_lines), 1)
    norb = header["NORB"]
    h1 = np.zeros((norb, norb))
    g = np.zeros((norb,) * 4)
    set1 = np.zeros((norb, norb), dtype=bool)
    set2 = np.zeros((norb,) * 4, dtype=bool)
    core = 0.0
    for n, line in enumerate(lines[end + 1:], start=end + 2):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpError(f"line {n}: expected 'value i j k l', got {line.strip()!r}")
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError:
            raise FcidumpError(f"line {n}: cannot parse {line.strip()!r}") from None
        if any(not 0 <= x <= norb for x in (i, j, k, l)):
            raise FcidumpError(f"line {n}: index out of range 0..{norb}")
        if i == j == k == l == 0:
            core = val
        elif k == 0 and l == 0:
            if j == 0:
                continue  # orbital energy
            for a, b in ((i - 1, j - 1), (j - 1, i - 1)):
                if set1[a, b] and abs(h1[a, b] - val) > tol:
                    raise IntegralSymmetryError(
                        f"line {n}: h[{i},{j}] conflicts with an earlier symmetric entry")
                h1[a, b] = val
                set1[a, b] = True
        elif 0 in (i, j, k, l):
            raise FcidumpError(f"line {n}: partial zero indices {i} {j} {k} {l}")
        else:
            for idx in _eightfold(i - 1, j - 1, k - 1, l - 1):
                if set2[idx] and abs(g[idx] - val) > tol:
                    raise IntegralSymmetryError(
                        f"line {n}: ({i}{j}|{k}{l}) conflicts with an earlier symmetric entry")
                g[idx] = val
                set2[idx] = True
    meta = {"ORBSYM": header.get("ORBSYM"), "ISYM": header.get("ISYM"), "source": str(path)}
    return IntegralSet(norb, core, h1, g, n_electrons=header["NELEC"],
                       ms2=header.get("MS2") or 0, metadata=meta)


def write_fcidump(ints: IntegralSet, path: str | Path, tol: float = 1e-14) -> None:
    """Write unique integrals (``i>=j``, ``k>=l``, ``ij>=kl``)."""
    n = ints.n_spatial
    orbsym = (ints.metadata or {}).get("ORBSYM") or [1] * n
    out = [f"&FCI NORB={n},NELEC={ints.n_electrons},MS2={ints.ms2},",
           " ORBSYM=" + ",".join(str(s) for s in orbsym) + ",",
           f" ISYM={(ints.metadata or {}).get('ISYM') or 1},",
           "&END"]
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(n):
                for l in range(k + 1):
                    if k * (k + 1) // 2 + l > ij:
                        continue
                    v = ints.two_body[i, j, k, l]
                    if abs(v) > tol:
                        out.append(f"{v: .16e} {i + 1:4d} {j + 1:4d} {k + 1:4d} {l + 1:4d}")
    for i in range(n):
        for j in range(i + 1):
            v = ints.one_body[i, j]
            if abs(v) > tol:
                out.append(f"{v: .16e} {i + 1:4d} {j + 1:4d}    0    0")
    out.append(f"{ints.core_energy: .16e}    0    0    0    0")
    Path(path).write_text("\n".join(out) + "\n")

