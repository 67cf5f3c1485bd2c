import pytest

from crfund import grading as G
from crfund.rootsys import SimpleLieType, build_root_system, chevalley_constants


def test_g2_contact_grading():
    g = G.grade(build_root_system("G2"), [1])
    assert g.depth == 3
    assert g.negative_dims() == (2, 1, 2)
    assert g.component_dims[0] == 4


def test_sp6_grading_dims():
    g = G.grade(build_root_system("C3"), [1])
    assert g.negative_dims() == (4, 1)


def test_grading_rejects_empty_and_out_of_range():
    rs = build_root_system("A3")
    with pytest.raises(G.GradingError):
        G.grade(rs, [])
    with pytest.raises(G.GradingError):
        G.grade(rs, [4])


def test_bigrade_sp4_model():
    bg = G.bigrade(build_root_system("C2"), [1], [2])
    assert bg.dim(-1, -1) == bg.dim(-1, 0) == 1
    assert bg.dim(0, 1) == bg.dim(0, -1) == 1
    assert bg.dim(-2, -1) == 1
    assert G.check_model_conditions(bg).ok


def test_conditions_fail_for_depth_one():
    rep = G.check_model_conditions(G.bigrade(build_root_system("C3"), [3], [1]))
    assert not rep.ok
    assert "depth>=2" in rep.failed()


def test_conjugate_bidegree():
    assert G.conjugate_bidegree(-1, -1) == (-1, 0)
    assert G.conjugate_bidegree(0, 1) == (0, -1)
    assert G.conjugate_bidegree(-2, -1) == (-2, -1)


def test_enumerate_small_types():
    assert [(c.sigma1, c.sigma2) for c in G.enumerate_models("G2")] == [((1,), (2,))]
    assert [(c.sigma1, c.sigma2) for c in G.enumerate_models("C3")] == [((1,), (3,)), ((2,), (3,))]


def test_canonical_pair_uses_automorphisms():
    t = SimpleLieType("A", 5)
    canon, orbit = G.canonical_pair(t, (2, 4), (3,))
    assert canon == ((2, 4), (3,))
    canon, orbit = G.canonical_pair(t, (4, 5), (3,))
    assert canon == ((1, 2), (3,))
    assert len(orbit) == 2


@pytest.mark.parametrize("name", ["A3", "A5", "B3", "C4", "D5", "G2", "F4", "E6"])
def test_scan_matches_fixture(name):
    cmp = G.compare_with_tables(name)
    assert cmp.ok, (cmp.missing, cmp.extra)


def test_e7_extra_class_is_reported():
    cmp = G.compare_with_tables("E7")
    assert not cmp.missing
    assert cmp.extra == [((4,), (2,))]


def test_eval_index():
    assert G.eval_index("n-1", {"n": 5}) == 4
    assert G.eval_index("1<r<n-1", {"r": 2, "n": 5})
    assert not G.eval_index("1<r<n-1", {"r": 4, "n": 5})
    with pytest.raises(ValueError):
        G.eval_index("n**2", {"n": 2})


def test_label_maps_roundtrip():
    t = SimpleLieType("E", 7)
    for k in range(1, 8):
        assert G.from_bourbaki(t, G.to_bourbaki(t, [k])) == (k,)


def test_levi_tanaka_data_g2():
    rs = build_root_system("G2")
    lt = G.second_order_lt(G.bigrade(rs, [1], [2]), chevalley_constants(rs))
    assert lt.split == 1
    assert G.kernel_is_antilinear(lt)


def test_levi_tanaka_rejects_non_model():
    rs = build_root_system("C3")
    with pytest.raises(G.GradingError):
        G.second_order_lt(G.bigrade(rs, [3], [1]), chevalley_constants(rs))


def test_genericity():
    assert G.genericity(G.grade(build_root_system("G2"), [1])).value == "Generic"
    assert G.genericity(G.grade(build_root_system("C3"), [1])).value == "Generic"
    assert G.genericity(G.grade(build_root_system("A3"), [1, 3])).value == "NonGeneric"
