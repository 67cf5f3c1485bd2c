import pytest

from crfund import symcas as S

z1, zb1, z2, u1 = (S.var(n) for n in ("z1", "zb1", "z2", "u1"))


def test_arithmetic_normalizes():
    e = (z1 ** 2 - 1) / (z1 - 1)
    assert e == z1 + 1
    assert (e - z1 - 1).is_zero()
    assert S.equals_zero((z1 + zb1) ** 2 - z1 ** 2 - 2 * z1 * zb1 - zb1 ** 2)


def test_i_squares_to_minus_one():
    assert S.I * S.I == -1
    assert S.SQRT2 ** 2 == 2
    assert S.conjugate(S.I) == -S.I
    assert 1 / S.I == -S.I


def test_parse_and_conjugate():
    e = S.parse("(z1^2+i*zb1)/(1+z1*zb1)")
    assert S.conjugate(e) == S.parse("(zb1^2-i*z1)/(1+zb1*z1)")


def test_diff_quotient_rule():
    e = z1 / (1 + z1 * zb1)
    assert S.diff(e, "z1") == 1 / (1 + z1 * zb1) ** 2
    assert S.diff(e, "u1").is_zero()


def test_declared_radical():
    r = S.declare_radical("rTest", S.parse("1+z1*zb1"))
    assert r * r == 1 + z1 * zb1
    assert S.conjugate(r) == r
    assert S.diff(r, "z1") == zb1 / (2 * r)
    with pytest.raises(S.SymcasError):
        S.declare_radical("bad", S.ONE)
    with pytest.raises(S.SymcasError):
        S.declare_radical("rTest", S.parse("2+z1*zb1"))


def test_nonreal_radical_needs_partner():
    with pytest.raises(S.SymcasError):
        S.declare_radical("rNonreal", S.parse("1+z1"))


def test_formal_chain_rule_and_conjugate():
    F = S.formal("F", [z1, zb1 * u1])
    assert S.diff(F, "u1") == zb1 * S.formal("F", [z1, zb1 * u1], [2])
    assert S.conjugate(F) == S.formal("Fb", [zb1, z1 * u1])
    with pytest.raises(S.SymcasError):
        S.formal("H", [z1])
    with pytest.raises(S.SymcasError):
        S.formal("F", [z1], [2])


def test_instantiate_matches_direct_substitution():
    F = S.formal("F", [z1, zb1 * u1])
    e = S.diff(F, "z1") + F * z1
    f = S.parse("t1*t2 + t1^2")
    direct = S.diff(z1 * zb1 * u1 + z1 ** 2, "z1") + (z1 * zb1 * u1 + z1 ** 2) * z1
    assert S.instantiate(e, f, 2) == direct


def test_substitute():
    e = S.parse("(z1 + i*zb1)/(zb1 + 1)")
    assert S.substitute(e, {"z1": S.ONE}) == (1 + S.I * zb1) / (zb1 + 1)


def test_vector_field_bracket():
    X = S.VectorField(("z1", "zb1", "u1"), {"z1": S.ONE, "u1": S.I * zb1})
    Y = X.conjugate()
    assert S.lie_bracket(X, Y) == S.VectorField(X.chart, {"u1": -2 * S.I})
    assert S.lie_bracket(X, X).is_zero()
    with pytest.raises(S.SymcasError):
        S.VectorField(("z1",), {"u1": S.ONE})


def test_span_rank_and_membership():
    assert S.span_rank([[z1, S.ONE], [z1 * z1, z1]]) == 1
    assert S.in_span([z1 * zb1, zb1], [[z1, S.ONE]])
    assert not S.in_span([S.ONE, S.ZERO], [[z1, S.ONE]])


def test_parse_error_position():
    with pytest.raises(S.ParseError) as exc:
        S.parse("1+*2")
    assert exc.value.position == 2


def test_to_str_roundtrip():
    e = S.parse("(z1^2*zb1 + 2*z1 - i*sqrt2*zb1^2)/(z1*zb1 + 1)^2")
    assert S.parse(e.to_str()) == e


def test_many_new_variables_grow_the_context():
    xs = [S.var(f"u{k}") for k in range(900, 1100)]
    total = sum(xs, S.ZERO)
    assert S.diff(total, "u1099") == 1
    assert total.variables() == {f"u{k}" for k in range(900, 1100)}
