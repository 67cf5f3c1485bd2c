import json
import random
from importlib import resources

import pytest

from crfund import crmodels as M
from crfund import symcas as S


def test_builtin_names():
    assert M.builtin_models() == ["sp4", "g2", "sp6"]


def test_load_unknown_model():
    with pytest.raises((M.ModelError, FileNotFoundError)):
        M.load_model("sp8")


def test_load_from_file(tmp_path):
    src = resources.files("crfund").joinpath("data/models/sp4.json").read_text()
    p = tmp_path / "mine.json"
    p.write_text(src)
    m = M.load_model(str(p))
    assert m.name == "sp4"
    assert M.verify_frame(m).ok


@pytest.mark.parametrize("name", ["sp4", "g2", "sp6"])
def test_frame_relations(name):
    rep = M.verify_frame(M.load_model(name))
    assert rep.ok, [c.name for c in rep.failed()]


def test_growth_vectors(sp4, g2):
    assert M.verify_frame(sp4).growth_quotient == (2, 3)
    assert M.verify_frame(g2).growth_quotient == (2, 3, 5)


def test_conjugate_labels(sp4):
    assert sp4.conj("L1") == "Lb1"
    assert sp4.conj("Kb11") == "K11"
    assert sp4.field("Lb1") == sp4.field("L1").conjugate()
    with pytest.raises(M.ModelError):
        sp4.field("L7")


@pytest.mark.parametrize("name", ["sp4", "g2", "sp6"])
def test_printed_family_integrable(name):
    res = M.integrability_residuals(M.load_model(name))
    assert res and all(r.vanishes for r in res)


def test_generic_deformation_not_integrable(sp4):
    res = M.integrability_residuals(sp4, {"G11": S.var("z1")})
    assert any(not r.vanishes for r in res)


def test_sp4_printed_pde(sp4):
    assert all(r.vanishes for r in M.printed_pde_residuals(sp4))


def test_g2_printed_pde_disagrees_but_derived_holds(g2):
    assert not all(r.vanishes for r in M.printed_pde_residuals(g2))
    field, c, res = M.derived_pde(g2)
    assert field == "K11"
    assert c == g2.parse("-2*zb1*(zb1*z2 + zb2)/(z1*zb2 + z2)")
    assert all(r.vanishes for r in res)


def test_sp4_W_atoms(sp4):
    W = M.invariant_W_sp4(sp4)
    assert W.vanishes_at_F0
    got, want = M.atom_coefficients(W.value), M.atom_coefficients(W.expected)
    assert set(got) == set(want)
    differ = sorted(k.split("(")[0] for k in got if not (got[k] - want[k]).is_zero())
    assert differ == ["F[2]", "F[4]", "Fb[4]"]


def test_sp4_W_conjugation(sp4):
    W = M.invariant_W_sp4(sp4).value
    assert S.conjugate(W) == M.invariant_W_sp4(sp4, conjugated=True).value


def test_sp4_J_two_paths(sp4):
    J = M.invariant_J_sp4(sp4)
    assert J.vanishes_at_F0
    F = M.random_instantiation(random.Random(7), 4)
    a, b = M.j_two_paths(sp4, F, J.value)
    assert a == b


def test_model_guard(g2):
    with pytest.raises(M.ModelError):
        M.invariant_W_sp4(g2)


def test_twisted_apply_requires_weight(sp4):
    with pytest.raises(M.ModelError):
        M.twisted_apply(sp4, "K", S.ONE, "nonsense")


def test_g2_invariant(g2):
    inv, res = M.invariant_g2(g2)
    assert inv.vanishes_at_F0


def test_sp6_g0_structure(sp6):
    rep = M.sp6_g0_structure(sp6)
    failed = [c.name for c in rep.checks if not c.ok]
    assert failed == ["V12 matches the printed formula"]
    assert "ratio 2" in next(c.detail for c in rep.checks if not c.ok)


def test_sp6_min_selection(sp6):
    res = M.sp6_R_components(sp6)
    assert [r.name for r in res] == list(M.MIN_SELECTION)
    assert [r.matches for r in res] == [False, True, True, True]
    assert all(r.vanishes_at_F0 for r in res)


def test_sp6_bad_label(sp6):
    with pytest.raises(M.ModelError):
        M.sp6_R_components(sp6, selection=["R*[11^1][^1_1]"])


def test_parse_instantiation(sp6, sp4):
    assert M.parse_instantiation(sp6, "zb1") == S.var("t1")
    assert M.parse_instantiation(sp4, "t1*t2") == S.var("t1") * S.var("t2")
    with pytest.raises(M.ModelError):
        M.parse_instantiation(sp4, "t1+")


@pytest.mark.parametrize("name, F, flat", [
    ("sp4", "0", True), ("sp4", "t1", False), ("g2", "0", True), ("g2", "t2", False),
])
def test_flatness(name, F, flat):
    m = M.load_model(name)
    assert M.flatness_check(m, M.parse_instantiation(m, F)) is flat


def test_sp6_flatness(sp6):
    assert M.flatness_check(sp6, S.ZERO)
    assert not M.flatness_check(sp6, M.parse_instantiation(sp6, "zb1"))


def test_model_json_roundtrip():
    for name in M.BUILTIN:
        data = json.loads(resources.files("crfund").joinpath(f"data/models/{name}.json").read_text())
        assert M.load_model(data).name == name
