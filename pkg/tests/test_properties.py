"""Randomized identities; every suite runs at least 100 cases."""
from fractions import Fraction

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from crfund import symcas as S
from crfund.rootsys import build_root_system, chevalley_constants, reflect

CASES = settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])

SMALL_TYPES = ["A2", "A3", "B2", "B3", "C3", "D4", "G2"]
_SC = {}


def _sc(name):
    if name not in _SC:
        _SC[name] = chevalley_constants(build_root_system(name))
    return _SC[name]


@st.composite
def basis_triples(draw):
    sc = _sc(draw(st.sampled_from(SMALL_TYPES + ["F4"])))
    idx = st.integers(0, sc.dim - 1)
    return sc, draw(idx), draw(idx), draw(idx)


@CASES
@given(basis_triples())
def test_structure_constants_jacobi(t):
    sc, a, b, c = t
    assert sc.jacobiator(a, b, c) == {}


@st.composite
def root_and_reflection(draw):
    rs = build_root_system(draw(st.sampled_from(SMALL_TYPES + ["F4", "E6", "E7", "E8"])))
    return rs, draw(st.sampled_from(rs.roots)), draw(st.integers(0, rs.rank - 1))


@CASES
@given(root_and_reflection())
def test_reflect_involution(t):
    rs, beta, j = t
    img = reflect(rs, j, beta)
    assert rs.is_root(img)
    assert reflect(rs, j, img) == beta
    assert rs.inner(img, img) == rs.inner(beta, beta)


VARS = ["z1", "zb1", "z2", "zb2", "u1"]
coeff = st.fractions(min_value=-4, max_value=4, max_denominator=3)


def _leaf():
    return st.one_of(
        st.sampled_from(VARS).map(S.var),
        coeff.map(S.const),
        st.just(S.I),
        st.just(S.SQRT2),
        st.just(S.formal("F", [S.var("z1"), S.var("zb2") * S.var("u1")])),
    )


def _combine(children):
    pair = st.tuples(children, children)
    return st.one_of(
        pair.map(lambda p: p[0] + p[1]),
        pair.map(lambda p: p[0] - p[1]),
        pair.map(lambda p: p[0] * p[1]),
        pair.filter(lambda p: not p[1].is_zero()).map(lambda p: p[0] / p[1]),
    )


exprs = st.recursive(_leaf(), _combine, max_leaves=6)


@CASES
@given(exprs)
def test_conjugation_involution(e):
    assert S.conjugate(S.conjugate(e)) == e


@CASES
@given(exprs, st.sampled_from(VARS))
def test_diff_commutes_with_conjugation(e, v):
    bar = "zb" + v[1:] if v.startswith("z") and not v.startswith("zb") else \
        "z" + v[2:] if v.startswith("zb") else v
    assert S.conjugate(S.diff(e, v)) == S.diff(S.conjugate(e), bar)


@CASES
@given(exprs)
def test_canonical_form_idempotent(e):
    text = e.to_str()
    again = S.parse(text)
    assert again == e
    assert again.to_str() == text
    assert S.Expr(e._num, e._den) == e
    assert (e * S.ONE + S.ZERO).to_str() == text


CHART = ("z1", "zb1", "u1")
poly_coeffs = st.recursive(
    st.one_of(st.sampled_from(CHART).map(S.var), coeff.map(S.const), st.just(S.I)),
    lambda ch: st.one_of(st.tuples(ch, ch).map(lambda p: p[0] + p[1]),
                         st.tuples(ch, ch).map(lambda p: p[0] * p[1])),
    max_leaves=4,
)
fields = st.fixed_dictionaries({v: poly_coeffs for v in CHART}).map(lambda d: S.VectorField(CHART, d))


@CASES
@given(fields, fields, fields)
def test_lie_bracket_jacobi(X, Y, Z):
    br = S.lie_bracket
    total = br(X, br(Y, Z)) + br(Y, br(Z, X)) + br(Z, br(X, Y))
    assert total.is_zero()
    assert (br(X, Y) + br(Y, X)).is_zero()
