from fractions import Fraction

import pytest

from crfund.rootsys import (RootSystemError, SimpleLieType, build_root_system, chevalley_constants,
                            diagram_automorphisms, reflect, weyl_dimension)


@pytest.mark.parametrize("name, npos, dim", [
    ("A1", 1, 3), ("A4", 10, 24), ("B3", 9, 21), ("C4", 16, 36), ("D5", 20, 45),
    ("G2", 6, 14), ("F4", 24, 52), ("E6", 36, 78), ("E7", 63, 133), ("E8", 120, 248),
])
def test_counts(name, npos, dim):
    rs = build_root_system(name)
    assert len(rs.positive_roots) == npos
    assert rs.dimension == dim


@pytest.mark.parametrize("name, highest", [
    ("G2", (3, 2)), ("F4", (2, 3, 4, 2)), ("B3", (1, 2, 2)), ("C3", (2, 2, 1)),
    ("E8", (2, 3, 4, 6, 5, 4, 3, 2)),
])
def test_highest_root(name, highest):
    assert build_root_system(name).highest_root == highest


def test_bad_types():
    with pytest.raises(RootSystemError):
        SimpleLieType("D", 2)
    with pytest.raises(RootSystemError):
        SimpleLieType("G", 3)
    with pytest.raises(RootSystemError):
        SimpleLieType.parse("X")


def test_g2_cartan_and_lengths():
    rs = build_root_system("G2")
    assert rs.cartan == ((2, -1), (-3, 2))
    assert rs.inner((1, 0), (1, 0)) == 1
    assert rs.inner((0, 1), (0, 1)) == 3


def test_reflection_of_simple_root():
    rs = build_root_system("A3")
    assert reflect(rs, 0, (1, 0, 0)) == (-1, 0, 0)
    assert reflect(rs, 0, (0, 1, 0)) == (1, 1, 0)


def test_weyl_dimension():
    rs = build_root_system("A2")
    assert weyl_dimension(rs, (1, 0)) == 3
    assert weyl_dimension(rs, (1, 1)) == 8
    assert weyl_dimension(build_root_system("G2"), (1, 0)) == 7
    # adjoint representation of E8
    assert weyl_dimension(build_root_system("E8"), (0, 0, 0, 0, 0, 0, 0, 1)) == 248


def test_automorphism_group_sizes():
    assert len(diagram_automorphisms(SimpleLieType("D", 4))) == 6
    assert len(diagram_automorphisms(SimpleLieType("E", 6))) == 2
    assert len(diagram_automorphisms(SimpleLieType("B", 3))) == 1


@pytest.mark.parametrize("name", ["A2", "B2", "G2", "C3", "D4"])
def test_chevalley_jacobi(name):
    sc = chevalley_constants(build_root_system(name))
    assert sc.check_jacobi()


def test_chevalley_integral_and_antisymmetric():
    sc = chevalley_constants(build_root_system("G2"))
    for (a, b), v in sc.table.items():
        assert all(isinstance(c, int) for c in v.values())
        assert {k: -c for k, c in v.items()} == sc.bracket(b, a)


def test_inner_is_fraction():
    assert isinstance(build_root_system("B2").inner((1, 0), (0, 1)), Fraction)
