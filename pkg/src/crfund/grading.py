"""Gradings and bigradings of simple Lie algebras by sets of simple roots.

Simple-root indices in this module are 1-based, matching the labels used in
the classification tables; root coordinates stay 0-based tuples.
"""
from __future__ import annotations

import ast
import json
import operator
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from itertools import combinations, product
from typing import Iterable

from .rootsys import (Root, RootSystem, SimpleLieType, StructureConstants, build_root_system,
                      diagram_automorphisms, neg)


class GradingError(ValueError):
    pass


def _norm_sigma(sigma: Iterable[int], rank: int) -> frozenset[int]:
    s = frozenset(int(i) for i in sigma)
    bad = [i for i in s if not 1 <= i <= rank]
    if bad:
        raise GradingError(f"simple-root indices {sorted(bad)} out of range 1..{rank}")
    return s


@dataclass(frozen=True)
class GradingSpec:
    sigma1: frozenset[int]

    def __post_init__(self):
        if not self.sigma1:
            raise GradingError("sigma1 must be nonempty")


@dataclass(frozen=True)
class Grading:
    rs: RootSystem
    sigma1: frozenset[int]
    heights: dict[Root, int] = field(repr=False)
    depth: int
    component_dims: dict[int, int]

    def degree(self, root: Root) -> int:
        return self.heights[root]

    def roots_at(self, a: int) -> list[Root]:
        return [r for r in self.rs.roots if self.heights[r] == a]

    @property
    def levi(self) -> list[int]:
        """0-based simple roots not in sigma1 (the semisimple part of g_0)."""
        return [i for i in range(self.rs.rank) if i + 1 not in self.sigma1]

    def negative_dims(self) -> tuple[int, ...]:
        return tuple(self.component_dims[-i] for i in range(1, self.depth + 1))


def grade(rs: RootSystem, spec: GradingSpec | Iterable[int]) -> Grading:
    sigma1 = spec.sigma1 if isinstance(spec, GradingSpec) else frozenset(spec)
    sigma1 = _norm_sigma(sigma1, rs.rank)
    if not sigma1:
        raise GradingError("sigma1 must be nonempty")
    idx = [i - 1 for i in sigma1]
    heights = {r: sum(r[i] for i in idx) for r in rs.roots}
    dims = Counter(heights.values())
    dims[0] += rs.rank
    depth = sum(rs.highest_root[i] for i in idx)
    return Grading(rs, sigma1, heights, depth, dict(sorted(dims.items())))


@dataclass(frozen=True)
class Bigrading:
    grading: Grading
    sigma2: frozenset[int]
    bidegrees: dict[Root, tuple[int, int]] = field(repr=False)
    component_dims: dict[tuple[int, int], int]

    @property
    def rs(self) -> RootSystem:
        return self.grading.rs

    @property
    def sigma1(self) -> frozenset[int]:
        return self.grading.sigma1

    def dim(self, a: int, b: int) -> int:
        return self.component_dims.get((a, b), 0)

    def roots_at(self, a: int, b: int) -> list[Root]:
        return [r for r in self.rs.roots if self.bidegrees[r] == (a, b)]

    def b_degrees(self, a: int) -> list[int]:
        return sorted({b for (x, b) in self.component_dims if x == a})


def bigrade(rs: RootSystem, spec1: GradingSpec | Iterable[int], sigma2: Iterable[int]) -> Bigrading:
    g = grade(rs, spec1)
    sigma2 = _norm_sigma(sigma2, rs.rank)
    idx2 = [i - 1 for i in sigma2]
    bideg = {r: (g.heights[r], sum(r[i] for i in idx2)) for r in rs.roots}
    dims = Counter(bideg.values())
    dims[(0, 0)] += rs.rank
    return Bigrading(g, sigma2, bideg, dict(sorted(dims.items())))


def conjugate_bidegree(a: int, b: int) -> tuple[int, int]:
    """Bidegree of the conjugate subspace: g_{-1,-1} <-> g_{-1,0}, g_{0,1} <-> g_{0,-1}."""
    return a, a - b


@dataclass
class ModelReport:
    ok: bool
    conditions: dict[str, bool]
    deep_levels: dict[int, list[int]]

    def failed(self) -> list[str]:
        return [k for k, v in self.conditions.items() if not v]


def check_model_conditions(bg: Bigrading) -> ModelReport:
    """Complexified conditions on (sigma1, sigma2) for a second-order Levi-Tanaka model.

    Besides the displayed decompositions of g_0, g_-1 and g_-2 this requires a
    nontrivial Levi kernel (g_{0,1} != 0), a non-abelian g_- (depth >= 2) and
    that the two halves of g_-1 (x) C have equal dimension, as they must for
    conjugate subspaces.  Levels a <= -3 are checked for the same conjugation
    symmetry dim g_{a,b} = dim g_{a,a-b} and their b-degrees are reported.
    """
    g = bg.grading
    cond = {
        "depth>=2": g.depth >= 2,
        "g0=g0,-1+g0,0+g0,1": set(bg.b_degrees(0)) <= {-1, 0, 1},
        "g0,1!=0": bg.dim(0, 1) > 0,
        "g-1=g-1,-1+g-1,0": set(bg.b_degrees(-1)) <= {-1, 0},
        "dim g-1,-1=dim g-1,0": bg.dim(-1, -1) == bg.dim(-1, 0) > 0,
        "g-2=g-2,-1": set(bg.b_degrees(-2)) <= {-1},
    }
    deep = {a: bg.b_degrees(a) for a in range(-g.depth, -2)}
    cond["deep levels conjugation-symmetric"] = all(
        bg.dim(a, b) == bg.dim(*conjugate_bidegree(a, b)) for a in deep for b in deep[a])
    return ModelReport(all(cond.values()), cond, deep)


# ---------------------------------------------------------------------------
# enumeration

def _apply(perm: tuple[int, ...], sigma: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(perm[i - 1] + 1 for i in sigma))


def canonical_pair(t: SimpleLieType, sigma1: Iterable[int], sigma2: Iterable[int]):
    """Lexicographically least image under diagram automorphisms, plus the orbit."""
    orbit = sorted({(_apply(p, sigma1), _apply(p, sigma2)) for p in diagram_automorphisms(t)})
    return orbit[0], orbit


@dataclass(frozen=True)
class ModelCandidate:
    type: SimpleLieType
    sigma1: tuple[int, ...]
    sigma2: tuple[int, ...]
    orbit: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    deep_levels: tuple[tuple[int, tuple[int, ...]], ...] = ()


def enumerate_models(t: SimpleLieType | str, max_sigma2: int = 2) -> list[ModelCandidate]:
    """All (sigma1, sigma2) passing check_model_conditions, one per automorphism orbit."""
    if isinstance(t, str):
        t = SimpleLieType.parse(t)
    rs = build_root_system(t)
    n = t.rank
    found: dict = {}
    for k1 in range(1, n + 1):
        for s1 in combinations(range(1, n + 1), k1):
            g = grade(rs, s1)
            if g.depth < 2:
                continue
            for k2 in range(1, max_sigma2 + 1):
                for s2 in combinations(range(1, n + 1), k2):
                    rep = check_model_conditions(bigrade(rs, s1, s2))
                    if not rep.ok:
                        continue
                    canon, orbit = canonical_pair(t, s1, s2)
                    if canon not in found:
                        deep = tuple((a, tuple(bs)) for a, bs in sorted(rep.deep_levels.items()))
                        found[canon] = ModelCandidate(t, canon[0], canon[1], tuple(orbit), deep)
    return [found[k] for k in sorted(found)]


# ---------------------------------------------------------------------------
# classification fixture

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul}
_CMPOPS = {ast.Lt: operator.lt, ast.LtE: operator.le, ast.Gt: operator.gt, ast.GtE: operator.ge,
           ast.Eq: operator.eq, ast.NotEq: operator.ne}


def eval_index(expr: str, env: dict[str, int]):
    """Evaluate an integer index expression or (chained) comparison from the fixture."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.Compare):
            left = ev(node.left)
            for op, comp in zip(node.ops, node.comparators):
                right = ev(comp)
                if not _CMPOPS[type(op)](left, right):
                    return False
                left = right
            return True
        raise ValueError(f"unsupported fixture expression {expr!r}")

    return ev(ast.parse(expr, mode="eval"))


@lru_cache(maxsize=None)
def load_tables() -> dict:
    return json.loads(resources.files("crfund").joinpath("data/tables.json").read_text())


def to_bourbaki(t: SimpleLieType, labels: Iterable[int]) -> tuple[int, ...]:
    """Translate table labels of exceptional types into Bourbaki labels."""
    m = load_tables()["label_maps"].get(str(t))
    return tuple(sorted(m[i - 1] if m else i for i in labels))


def from_bourbaki(t: SimpleLieType, labels: Iterable[int]) -> tuple[int, ...]:
    m = load_tables()["label_maps"].get(str(t))
    if not m:
        return tuple(sorted(labels))
    inv = {b: a + 1 for a, b in enumerate(m)}
    return tuple(sorted(inv[i] for i in labels))


def _instances(row: dict, n: int, check_restrictions: bool = True):
    """Yield (params, sigma1, sigma2) for a parameterized row at rank n."""
    names = row["params"]
    for vals in product(range(0, 2 * n + 2), repeat=len(names)):
        env = dict(zip(names, vals), n=n)
        if check_restrictions and not all(eval_index(c, env) for c in row["restrictions"]):
            continue
        s1 = [eval_index(e, env) for e in row["sigma1"]]
        s2 = [eval_index(e, env) for e in row["sigma2"]]
        if all(1 <= i <= n for i in s1 + s2):
            yield env, tuple(sorted(set(s1))), tuple(sorted(set(s2)))


def _rank_ok(pattern: str, n: int) -> bool:
    return bool(eval_index(pattern, {"n": n}))


@dataclass(frozen=True)
class TableRow:
    source: str
    real_form_label: str
    sigma1: tuple[int, ...]       # Bourbaki labels
    sigma2: tuple[int, ...]
    conjugation: str = "plain"    # "flip": the real structure acts on roots by the diagram involution


def table_rows(t: SimpleLieType | str) -> list[TableRow]:
    """All fixture instances for one type, in Bourbaki labels."""
    if isinstance(t, str):
        t = SimpleLieType.parse(t)
    tables = load_tables()
    out = []
    for row in tables["classical"]:
        if row["algebra_family"] != t.family or not _rank_ok(row["rank_pattern"], t.rank):
            continue
        for env, s1, s2 in _instances(row, t.rank):
            out.append(TableRow(row["id"], row["real_form_label"], s1, s2, row.get("conjugation", "plain")))
    for row in tables["exceptional"]:
        if row["type"] == str(t):
            out.append(TableRow(str(t), row["real_form_label"], to_bourbaki(t, row["sigma1"]),
                                to_bourbaki(t, row["sigma2"]), row.get("conjugation", "plain")))
    return out


def expected_models(t: SimpleLieType | str) -> dict:
    """Canonical (sigma1, sigma2) -> fixture rows realizing it."""
    if isinstance(t, str):
        t = SimpleLieType.parse(t)
    out: dict = {}
    for row in table_rows(t):
        canon, _ = canonical_pair(t, row.sigma1, row.sigma2)
        out.setdefault(canon, []).append(row)
    return out


@dataclass
class TableComparison:
    type: SimpleLieType
    matched: list
    missing: list          # fixture pairs the scan does not produce
    extra: list            # scan pairs absent from the fixture
    excluded: list         # (row id, params, pair, verdict) for pairs cut by restrictions

    @property
    def ok(self) -> bool:
        return not self.missing and not self.extra and all(v != "passes" for *_, v in self.excluded)


def compare_with_tables(t: SimpleLieType | str, scan: list[ModelCandidate] | None = None) -> TableComparison:
    """Scan against the fixture; also check that each restriction only removes
    pairs that fail the conditions or collide with an admitted pair."""
    if isinstance(t, str):
        t = SimpleLieType.parse(t)
    scan = enumerate_models(t) if scan is None else scan
    found = {(c.sigma1, c.sigma2) for c in scan}
    expected = expected_models(t)
    rs = build_root_system(t)
    excluded = []
    for row in load_tables()["classical"]:
        if row["algebra_family"] != t.family or not _rank_ok(row["rank_pattern"], t.rank):
            continue
        admitted = {(s1, s2) for _, s1, s2 in _instances(row, t.rank)}
        for env, s1, s2 in _instances(row, t.rank, check_restrictions=False):
            if (s1, s2) in admitted:
                continue
            canon, _ = canonical_pair(t, s1, s2)
            if canon in expected:
                verdict = "collides"
            elif check_model_conditions(bigrade(rs, s1, s2)).ok:
                verdict = "passes"
            else:
                verdict = "fails"
            params = {k: v for k, v in env.items() if k != "n"}
            excluded.append((row["id"], params, (s1, s2), verdict))
    return TableComparison(t, sorted(found & set(expected)), sorted(set(expected) - found),
                           sorted(found - set(expected)), excluded)


def table_types() -> list[SimpleLieType]:
    out = []
    for fam, (lo, hi) in load_tables()["scan_ranges"].items():
        out.extend(SimpleLieType(fam, n) for n in range(lo, hi + 1))
    return out


# ---------------------------------------------------------------------------
# second-order Levi-Tanaka data

@dataclass
class LeviTanakaData:
    bigrading: Bigrading
    negative_basis: list[int]          # Chevalley indices spanning g_-
    negative_part: dict                # brackets restricted to g_-
    g_m1: list[int]                    # basis of g_-1: g_{-1,-1} first, then g_{-1,0}
    complex_structure: dict[int, complex]
    kernel_basis: list[int]            # g_{0,1} then g_{0,-1}
    kernel_action: list[list[list[int]]]

    @property
    def split(self) -> int:
        return sum(1 for k in self.g_m1 if self.complex_structure[k] == 1j)


def second_order_lt(bg: Bigrading, sc: StructureConstants) -> LeviTanakaData:
    rep = check_model_conditions(bg)
    if not rep.ok:
        raise GradingError(f"not a model bigrading: fails {rep.failed()}")
    rs = bg.rs
    idx = rs.root_index
    neg_basis = [idx[r] for r in rs.roots if bg.bidegrees[r][0] < 0]
    neg_set = set(neg_basis)
    neg_part = {}
    for a in neg_basis:
        for b in neg_basis:
            v = sc.bracket(a, b)
            if v:
                assert set(v) <= neg_set
                neg_part[(a, b)] = dict(v)
    holo = [idx[r] for r in bg.roots_at(-1, -1)]
    anti = [idx[r] for r in bg.roots_at(-1, 0)]
    g_m1 = holo + anti
    cs = {k: 1j for k in holo}
    cs.update({k: -1j for k in anti})
    # [I X, I Y] = [X, Y] on all basis pairs of g_-1
    for x in g_m1:
        for y in g_m1:
            v = sc.bracket(x, y)
            if v and cs[x] * cs[y] != 1:
                raise GradingError("sign rule [I X, I Y] = [X, Y] unsatisfiable")
    kernel = [idx[r] for r in bg.roots_at(0, 1)] + [idx[r] for r in bg.roots_at(0, -1)]
    pos = {k: p for p, k in enumerate(g_m1)}
    mats = []
    for k in kernel:
        m = [[0] * len(g_m1) for _ in g_m1]
        for col, x in enumerate(g_m1):
            for tgt, c in sc.bracket(k, x).items():
                m[pos[tgt]][col] = c
        mats.append(m)
    return LeviTanakaData(bg, neg_basis, neg_part, g_m1, cs, kernel, mats)


def kernel_is_antilinear(lt: LeviTanakaData) -> bool:
    """g_{0,1} maps g_{-1,-1} into g_{-1,0} and kills g_{-1,0}; g_{0,-1} the other way."""
    h = lt.split
    n1 = lt.bigrading.dim(0, 1)
    for num, m in enumerate(lt.kernel_action):
        upper = num < n1
        for r in range(len(m)):
            for c in range(len(m)):
                if not m[r][c]:
                    continue
                if upper and not (c < h <= r):
                    return False
                if not upper and not (r < h <= c):
                    return False
    return True


# ---------------------------------------------------------------------------
# genericity

@dataclass(frozen=True)
class GenericityVerdict:
    value: str  # Generic | NonGeneric | Undetermined
    reason: str


def genericity(g: Grading, bg: Bigrading | None = None) -> GenericityVerdict:
    if bg is not None and not check_model_conditions(bg).ok:
        raise GradingError("genericity is only defined for model bigradings")
    t = g.rs.type
    dims = g.negative_dims()
    if g.depth == 2 and dims[1] == 1:
        if t.family == "C" and g.sigma1 == frozenset({1}):
            return GenericityVerdict("Generic", "contact grading of C_N with sigma1={1}: k acts transitively")
        return GenericityVerdict("NonGeneric", "k=2, dim g_-2=1 outside (Sp(2N), P_1): the unitary part does not "
                                               "act transitively on antilinear derivations")
    if t.family == "A" and len(g.sigma1) == 2 and min(g.sigma1) == 1 and (max(g.sigma1) - 1) % 2 == 0:
        return GenericityVerdict("NonGeneric", "(Sl(N+1), P_{1,1+2s}): extra antilinear derivations of g_-")
    if g.depth == 3 and dims == (2, 1, 2):
        return GenericityVerdict("Generic", "g_- of a (2,3,5) distribution with k of dimension 1")
    if g.depth == 2 and dims[1] == 1:
        return GenericityVerdict("NonGeneric", "k=2, dim g_-2=1")
    return GenericityVerdict("NonGeneric", "g_- is not generic (neither contact nor (2,3,5) type)")
