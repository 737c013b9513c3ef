import numpy as np
import pytest

from qugcm.fcidump import FcidumpError, read_fcidump, write_fcidump
from qugcm.fermion import IntegralSet, IntegralSymmetryError, random_integrals

HEADER = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n"


def write(tmp_path, text, name="x.fcidump"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_roundtrip(tmp_path):
    ints = random_integrals(3, 2, np.random.default_rng(0), core_energy=0.25)
    p = tmp_path / "r.fcidump"
    write_fcidump(ints, p)
    back = read_fcidump(p)
    assert back.n_spatial == 3 and back.n_electrons == 2 and back.ms2 == 0
    assert back.core_energy == pytest.approx(0.25)
    assert np.allclose(back.one_body, ints.one_body, atol=1e-15)
    assert np.allclose(back.two_body, ints.two_body, atol=1e-15)


def test_core_only(tmp_path):
    ints = read_fcidump(write(tmp_path, HEADER + " 1.25 0 0 0 0\n"))
    assert ints.core_energy == 1.25
    assert not ints.one_body.any() and not ints.two_body.any()


def test_eightfold_fill(tmp_path):
    ints = read_fcidump(write(tmp_path, HEADER + " 0.3 2 1 1 1\n 0.1 2 1 0 0\n"))
    g = ints.two_body
    for idx in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]:
        assert g[idx] == 0.3
    assert ints.one_body[0, 1] == ints.one_body[1, 0] == 0.1


def test_slash_terminator_and_fortran_exponent(tmp_path):
    text = "&FCI NORB=1, NELEC=2 /\n 0.5D+00 1 1 1 1\n -1.0d0 1 1 0 0\n"
    ints = read_fcidump(write(tmp_path, text))
    assert ints.two_body[0, 0, 0, 0] == 0.5 and ints.one_body[0, 0] == -1.0


def test_orbital_energy_lines_ignored(tmp_path):
    ints = read_fcidump(write(tmp_path, HEADER + " -0.5 1 0 0 0\n"))
    assert not ints.one_body.any()


def test_malformed_namelist_names_line(tmp_path):
    text = "&FCI NORB=2,\n NELEC=two,\n&END\n"
    with pytest.raises(FcidumpError, match="line 2"):
        read_fcidump(write(tmp_path, text))


def test_missing_norb(tmp_path):
    with pytest.raises(FcidumpError, match="NORB"):
        read_fcidump(write(tmp_path, "&FCI NELEC=2 &END\n"))


def test_unterminated_header(tmp_path):
    with pytest.raises(FcidumpError, match="not terminated"):
        read_fcidump(write(tmp_path, "&FCI NORB=2,NELEC=2,\n"))


def test_bad_body_line(tmp_path):
    with pytest.raises(FcidumpError, match="line 6"):
        read_fcidump(write(tmp_path, HEADER + " 0.1 1 1 1 1\n 0.2 1 1\n"))
    with pytest.raises(FcidumpError, match="out of range"):
        read_fcidump(write(tmp_path, HEADER + " 0.1 3 1 1 1\n"))


def test_conflicting_symmetric_entries(tmp_path):
    with pytest.raises(IntegralSymmetryError, match="line 6"):
        read_fcidump(write(tmp_path, HEADER + " 0.3 2 1 1 1\n 0.4 1 2 1 1\n"))


def test_written_file_has_unique_entries(tmp_path):
    g = np.zeros((2,) * 4)
    g[0, 0, 0, 0] = 1.0
    ints = IntegralSet(2, 0.0, np.zeros((2, 2)), g, n_electrons=2)
    p = tmp_path / "u.fcidump"
    write_fcidump(ints, p)
    body = [ln for ln in p.read_text().splitlines()[4:] if ln.strip()]
    assert len(body) == 2  # (11|11) and the core line
