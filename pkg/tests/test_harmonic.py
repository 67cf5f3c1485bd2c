from fractions import Fraction

import pytest

from crfund import grading as G
from crfund import harmonic as H
from crfund.rootsys import SimpleLieType, build_root_system, chevalley_constants


def test_g2_single_component():
    rs = build_root_system("G2")
    (hc,) = H.harmonic_pairs(rs, [1])
    assert hc.pair == (1, 2)
    assert hc.homogeneity == 4
    assert hc.lowest_weight == (4, 0)
    assert H.component_dimension(rs, G.grade(rs, [1]), hc) == 5


def test_commuting_pair_listed_once():
    pairs = [hc.pair for hc in H.harmonic_pairs(build_root_system("A3"), [1, 3])]
    assert pairs == [(1, 2), (1, 3), (3, 2)]


def test_classification_of_g2_component():
    rs = build_root_system("G2")
    bg = G.bigrade(rs, [1], [2])
    (hc,) = H.harmonic_pairs(rs, [1])
    assert H.classify(bg, hc) == H.ADMISSIBLE
    assert H.admissible_pairs(bg) == [(1, 2)]


def test_sp6_has_no_admissible_pair():
    assert H.admissible_pairs(G.bigrade(build_root_system("C3"), [1], [3])) == []


def test_flip_involution():
    assert H.flip_involution(SimpleLieType("A", 4)) == (3, 2, 1, 0)
    with pytest.raises(G.GradingError):
        H.flip_involution(SimpleLieType("B", 3))


@pytest.mark.parametrize("t, s1, s2, pairs", [
    ("A3", (1, 3), (2,), [(1, 2), (3, 2)]),
    ("A5", (1, 3), (2,), [(1, 2)]),
    ("B4", (2,), (1,), [(2, 1)]),
    ("C4", (3,), (4,), [(3, 4)]),
    ("C4", (1,), (4,), []),
])
def test_table3_rows(t, s1, s2, pairs):
    rows = [r for r in H.reproduce_table3([SimpleLieType.parse(t)]) if (r.sigma1, r.sigma2) == (s1, s2)]
    assert rows
    for r in rows:
        assert r.computed == pairs
        assert r.ok


def test_oracle_g2():
    rs = build_root_system("G2")
    rep = H.kostant_oracle(chevalley_constants(rs), G.grade(rs, [1]))
    assert [(c.homogeneity, c.dimension, c.lowest_weight) for c in rep.components] == [(4, 5, (4, 0))]
    assert rep.harmonic_dimension == rep.cohomology_dimension == 5
    assert rep.laplacian_psd
    assert H.oracle_matches_pairs(rs, [1], rep)


def test_displayed_codifferential_is_minus_two_adjoint():
    rs = build_root_system("A2")
    rep = H.kostant_oracle(chevalley_constants(rs), G.grade(rs, [1, 2]))
    assert set(rep.codifferential_scale.values()) == {Fraction(-2)}


def test_oracle_scale_guard():
    rs = build_root_system("E6")
    with pytest.raises(H.OracleScaleError):
        H.kostant_oracle(chevalley_constants(rs), G.grade(rs, [1]))


def test_codifferential_rejects_wrong_degree():
    rs = build_root_system("A2")
    with pytest.raises(ValueError):
        H.codifferential(chevalley_constants(rs), G.grade(rs, [1]), H.Cochain(1, {}))
