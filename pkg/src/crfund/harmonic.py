"""Harmonic curvature of parabolic geometries: Kostant pairs, integrability
classification on bigradings, and an explicit cochain-level oracle.

A component is labelled by an ordered pair (i, j) of 1-based simple-root
indices with i in sigma1, giving the length-two Hasse diagram element
w = s_i s_j.  Its lowest weight vector lives in

    g_{-alpha_i}^* (x) g_{-s_i alpha_j}^* (x) g_{-s_i s_j lambda}

with lambda the highest root.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable

import flint

from .grading import (Bigrading, Grading, GradingError, GradingSpec, bigrade, canonical_pair, conjugate_bidegree,
                      eval_index, grade, load_tables, table_rows, table_types, _rank_ok)
from .rootsys import (Root, RootSystem, SimpleLieType, StructureConstants, add, build_root_system,
                      chevalley_constants, diagram_automorphisms, neg, reflect, sub, weyl_dimension)


@dataclass(frozen=True)
class HarmonicComponent:
    pair: tuple[int, int]
    slot1: Root
    slot2: Root
    value_root: Root
    homogeneity: int
    lowest_weight: Root

    def bigraded_position(self, bg: Bigrading) -> tuple[tuple[int, int], ...]:
        """Bidegrees of g_{-slot1}, g_{-slot2} and g_{-value_root}."""
        return (bg.bidegrees[neg(self.slot1)], bg.bidegrees[neg(self.slot2)], bg.bidegrees[neg(self.value_root)])


def harmonic_pairs(rs: RootSystem, spec: GradingSpec | Iterable[int], *, regular_only: bool = True
                   ) -> list[HarmonicComponent]:
    """Components of H^2(g_-, g), one per pair (i, j); by default only positive homogeneity."""
    g = grade(rs, spec)
    sigma1 = g.sigma1
    lam = rs.highest_root
    out = []
    for i in sorted(sigma1):
        for j in range(1, rs.rank + 1):
            if j == i:
                continue
            slot1 = rs.simple_root(i - 1)
            slot2 = reflect(rs, i - 1, rs.simple_root(j - 1))
            # w = s_i s_j lies in the Hasse diagram iff both inversions are in p_+
            if g.heights[slot2] <= 0:
                continue
            # commuting reflections in sigma1: (i, j) and (j, i) are the same w
            if j < i and j in sigma1 and rs.cartan[i - 1][j - 1] == 0:
                continue
            value = reflect(rs, i - 1, reflect(rs, j - 1, lam))
            hom = g.heights[slot1] + g.heights[slot2] - g.heights[value]
            if regular_only and hom < 1:
                continue
            lw = sub(add(slot1, slot2), value)
            out.append(HarmonicComponent((i, j), slot1, slot2, value, hom, lw))
    return out


def component_dimension(rs: RootSystem, g: Grading, hc: HarmonicComponent) -> int:
    """Dimension of the irreducible g_0-module with the given lowest weight."""
    return weyl_dimension(rs, neg(hc.lowest_weight), basis="root", levi=g.levi)


# ---------------------------------------------------------------------------
# classification

OBSTRUCTION = "Obstruction"
ADMISSIBLE = "Admissible"
UNCLASSIFIED = "Unclassified"


def _variants(pos):
    s1, s2, v = pos
    for a, b in ((s1, s2), (s2, s1)):
        yield a, b, v
        yield conjugate_bidegree(*a), conjugate_bidegree(*b), conjugate_bidegree(*v)


def classify(bg: Bigrading, hc: HarmonicComponent) -> str:
    pos = hc.bigraded_position(bg)
    for a, b, v in _variants(pos):
        if a == b == (-1, 0) and v in ((-1, -1), (0, -1)):
            return OBSTRUCTION
    for a, b, v in _variants(pos):
        if a == (-1, 0) and b[1] == -1 and b[0] < 0:
            return ADMISSIBLE
    return UNCLASSIFIED


def flip_involution(t: SimpleLieType) -> tuple[int, ...]:
    """The order-two diagram automorphism (0-based), used when the real structure permutes roots."""
    for perm in diagram_automorphisms(t):
        if any(perm[i] != i for i in range(len(perm))) and all(perm[perm[i]] == i for i in range(len(perm))):
            return perm
    raise GradingError(f"{t} has no diagram involution")


def admissible_pairs(bg: Bigrading, conjugation: str = "plain") -> list[tuple[int, int]]:
    """Pairs whose lowest weight component is admissible.

    With ``conjugation="flip"`` the real structure maps component (i, j) to
    (s(i), s(j)) for the diagram involution s; the complexified real
    curvature then contains both, so both must be admissible.
    """
    verdicts = {}
    for hc in harmonic_pairs(bg.rs, bg.sigma1):
        verdict = classify(bg, hc)
        if verdict == UNCLASSIFIED:
            raise GradingError(f"component {hc.pair} at {hc.bigraded_position(bg)} is unclassified")
        verdicts[hc.pair] = verdict
    good = [p for p, v in verdicts.items() if v == ADMISSIBLE]
    if conjugation == "flip":
        s = flip_involution(bg.rs.type)
        good = [(i, j) for i, j in good if verdicts.get((s[i - 1] + 1, s[j - 1] + 1)) == ADMISSIBLE]
    elif conjugation != "plain":
        raise ValueError(conjugation)
    return good


@dataclass
class Table3Row:
    type: SimpleLieType
    sigma1: tuple[int, ...]
    sigma2: tuple[int, ...]
    conjugation: str
    sources: list[str]
    computed: list[tuple[int, int]]
    expected: list[tuple[int, int]]
    flags: list[str]

    @property
    def ok(self) -> bool:
        return sorted(self.computed) == sorted(self.expected)


def _harmonic_expectations(t: SimpleLieType) -> dict:
    """Canonical (sigma1, sigma2) -> (pairs, flags) from the fixture, in (i, j) order with i in sigma1."""
    out = {}
    for row in load_tables()["harmonic"]:
        if t.family not in row["families"] or not _rank_ok(row["rank_pattern"], t.rank):
            continue
        env = {"n": t.rank}
        s1 = tuple(sorted(eval_index(e, env) for e in row["sigma1"]))
        s2 = tuple(sorted(eval_index(e, env) for e in row["sigma2"]))
        pairs = [tuple(eval_index(e, env) for e in p) for p in row["pairs"]]
        if row["label_order"] == "ji":
            pairs = [(b, a) for a, b in pairs]
        # move everything to the canonical representative
        canon, _ = canonical_pair(t, s1, s2)
        for perm in diagram_automorphisms(t):
            img = (tuple(sorted(perm[i - 1] + 1 for i in s1)), tuple(sorted(perm[i - 1] + 1 for i in s2)))
            if img == canon:
                pairs = [(perm[a - 1] + 1, perm[b - 1] + 1) for a, b in pairs]
                break
        flags = [f"{row['id']}: real-form restriction {r}" for r in row["printed_restrictions"]]
        if row["label_order"] == "ji":
            flags.append(f"{row['id']}: printed label order is (j, i)")
        prev = out.get(canon)
        if prev is not None and sorted(prev[0]) != sorted(pairs):
            raise ValueError(f"conflicting harmonic entries for {t} {canon}")
        out[canon] = (pairs, (prev[1] if prev else []) + flags)
    return out


def reproduce_table3(types: Iterable[SimpleLieType] | None = None) -> list[Table3Row]:
    """Admissible pairs for every complexified row of the classification tables."""
    rows = []
    for t in (table_types() if types is None else types):
        rs = build_root_system(t)
        expect = _harmonic_expectations(t)
        seen: dict = {}
        for row in table_rows(t):
            canon, _ = canonical_pair(t, row.sigma1, row.sigma2)
            seen.setdefault((canon, row.conjugation), []).append(f"{row.source} [{row.real_form_label}]")
        for ((s1, s2), conj), sources in sorted(seen.items()):
            bg = bigrade(rs, s1, s2)
            pairs, flags = expect.get((s1, s2), ([], []))
            rows.append(Table3Row(t, s1, s2, conj, sorted(set(sources)), admissible_pairs(bg, conj),
                                  sorted(pairs), flags))
    return rows


# ---------------------------------------------------------------------------
# cochains and the Kostant oracle

@dataclass
class Cochain:
    """Element of Hom(Lambda^degree g_-, g): keys (sorted g_- indices, value index)."""
    degree: int
    coefficients: dict

    def __post_init__(self):
        self.coefficients = {k: Fraction(v) for k, v in self.coefficients.items() if v}

    def __call__(self, *args: int) -> dict:
        """Value on basis vectors x_{args} as a dict over the basis of g."""
        if len(set(args)) < len(args):
            return {}
        order = sorted(range(len(args)), key=lambda p: args[p])
        sign = _perm_sign(order)
        key = tuple(args[p] for p in order)
        out = {}
        for (k, c), v in self.coefficients.items():
            if k == key:
                out[c] = sign * v
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Cochain) and self.degree == other.degree and self.coefficients == other.coefficients


def _perm_sign(order: list[int]) -> int:
    sign = 1
    seen = list(order)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


class OracleScaleError(ValueError):
    pass


class _Complex:
    """Cochain complex C^k(g_-, g) for k = 1, 2, 3 with its positive inner product."""

    def __init__(self, sc: StructureConstants, g: Grading):
        self.sc, self.g = sc, g
        rs = sc.rs
        self.rs = rs
        n = sc.dim
        self.n = n
        self.minus = [k for k in range(len(rs.roots)) if g.heights[rs.roots[k]] < 0]
        self.minus_set = set(self.minus)
        self.killing = _killing_form(sc)
        # positive form <x, y> = -B(x, theta y); theta(e_a) = -e_{-a}, theta(h) = -h
        gram = [[Fraction(0)] * n for _ in range(n)]
        for k in range(n):
            r = sc.root_of(k)
            if r is None:
                for l in range(len(rs.roots), n):
                    gram[k][l] = self.killing[k][l]
            else:
                gram[k][k] = self.killing[k][sc.index_of(neg(r))]
        self.gram = gram
        self.weight = [sc.weight(k) for k in range(n)]

    def basis(self, degree: int) -> list[tuple[tuple[int, ...], int]]:
        return [(args, c) for args in combinations(self.minus, degree) for c in range(self.n)]

    def cweight(self, key) -> Root:
        args, c = key
        w = self.weight[c]
        for a in args:
            w = sub(w, self.weight[a])
        return w

    def act(self, x: int, vec: dict) -> dict:
        return self.sc.bracket_vec({x: 1}, vec)

    def d(self, degree: int, key) -> dict:
        """Image of a basis cochain under the differential, keyed by degree+1 basis."""
        args, c = key
        phi = Cochain(degree, {key: 1})
        out: dict = defaultdict(Fraction)
        for xs in combinations(self.minus, degree + 1):
            val = self._d_eval(phi, xs)
            for cc, v in val.items():
                if v:
                    out[(xs, cc)] += v
        return {k: v for k, v in out.items() if v}

    def _d_eval(self, phi: Cochain, xs) -> dict:
        """Chevalley-Eilenberg differential of phi evaluated on basis vectors xs."""
        sc = self.sc
        out: dict = defaultdict(Fraction)
        m = len(xs)
        for p in range(m):
            rest = xs[:p] + xs[p + 1:]
            for c, v in sc.bracket_vec({xs[p]: 1}, phi(*rest)).items():
                out[c] += (-1) ** p * v
        for p in range(m):
            for q in range(p + 1, m):
                br = sc.bracket(xs[p], xs[q])
                rest = xs[:p] + xs[p + 1:q] + xs[q + 1:]
                for b, bv in br.items():
                    for c, v in phi(b, *rest).items():
                        out[c] += (-1) ** (p + q) * bv * v
        return out

    def inner_block(self, keys) -> flint.fmpq_mat:
        """Gram matrix of the cochain inner product on the given basis keys."""
        m = len(keys)
        mat = flint.fmpq_mat(m, m)
        for p, (args, c) in enumerate(keys):
            scale = Fraction(1)
            for a in args:
                scale /= self.gram[a][a]
            for q, (args2, c2) in enumerate(keys):
                if args2 == args and self.gram[c][c2]:
                    v = scale * self.gram[c][c2]
                    mat[p, q] = flint.fmpq(v.numerator, v.denominator)
        return mat


def _killing_form(sc: StructureConstants) -> list[list[Fraction]]:
    n = sc.dim
    ad = [sc.ad_matrix(k) for k in range(n)]
    out = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        wa = sc.weight(a)
        for b in range(a, n):
            if any(x + y for x, y in zip(wa, sc.weight(b))):
                continue
            A, B = ad[a], ad[b]
            t = sum(A[i][k] * B[k][i] for i in range(n) for k in range(n) if A[i][k] and B[k][i])
            out[a][b] = out[b][a] = Fraction(t)
    return out


def _matrix(rows_keys, cols_keys, images: dict) -> flint.fmpq_mat:
    """Matrix whose column j is images[cols_keys[j]] expressed in rows_keys."""
    idx = {k: p for p, k in enumerate(rows_keys)}
    m = flint.fmpq_mat(len(rows_keys), len(cols_keys))
    for q, k in enumerate(cols_keys):
        for r, v in images[k].items():
            m[idx[r], q] = flint.fmpq(v.numerator, v.denominator)
    return m


def nullspace(m: flint.fmpq_mat) -> list[list[flint.fmpq]]:
    """Basis of the right kernel of m over Q."""
    rows, cols = m.nrows(), m.ncols()
    if rows == 0:
        return [[flint.fmpq(int(i == j)) for i in range(cols)] for j in range(cols)]
    r, rank = m.rref()
    pivots = []
    for i in range(rank):
        for j in range(cols):
            if r[i, j] != 0:
                pivots.append(j)
                break
    free = [j for j in range(cols) if j not in pivots]
    basis = []
    for f in free:
        v = [flint.fmpq(0)] * cols
        v[f] = flint.fmpq(1)
        for i, p in enumerate(pivots):
            v[p] = -r[i, f]
        basis.append(v)
    return basis


@dataclass(frozen=True)
class OracleComponent:
    homogeneity: int
    dimension: int
    lowest_weight: Root


@dataclass
class OracleReport:
    components: list[OracleComponent]
    harmonic_dimension: int
    cohomology_dimension: int        # dim ker d2 - rank d1, computed independently
    laplacian_psd: bool
    codifferential_scale: dict       # weight -> c with displayed formula = c * adjoint, or None


def codifferential(sc: StructureConstants, g: Grading, omega: Cochain) -> Cochain:
    """d*(omega)(X) = sum_i 2[Z_i, omega(X, X_i)] - omega([Z_i, X]_{g_-}, X_i),
    with X_i a basis of g_- and Z_i the Killing-dual basis of p_+."""
    if omega.degree != 2:
        raise ValueError("codifferential expects a 2-cochain")
    cx = _Complex(sc, g)
    return _codiff(cx, omega)


def _codiff(cx: _Complex, omega: Cochain) -> Cochain:
    sc = cx.sc
    duals = []
    for x in cx.minus:
        z = sc.index_of(neg(sc.root_of(x)))
        duals.append((x, z, 1 / cx.killing[x][z]))
    out: dict = defaultdict(Fraction)
    for X in cx.minus:
        for xi, z, s in duals:
            for c, v in sc.bracket_vec({z: s}, omega(X, xi)).items():
                out[((X,), c)] += 2 * v
            br = {k: v for k, v in sc.bracket_vec({z: s}, {X: 1}).items() if k in cx.minus_set}
            for b, bv in br.items():
                for c, v in omega(b, xi).items():
                    out[((X,), c)] -= bv * v
    return Cochain(1, out)


def kostant_oracle(sc: StructureConstants, g: Grading, *, max_dim: int = 52,
                   check_codifferential: bool = True) -> OracleReport:
    """Harmonic 2-cochains ker(d d^+ + d^+ d) split into irreducible g_0-modules."""
    if sc.dim > max_dim:
        raise OracleScaleError(f"dim g = {sc.dim} exceeds oracle bound {max_dim}")
    cx = _Complex(sc, g)
    blocks = {k: defaultdict(list) for k in (1, 2, 3)}
    for k in (1, 2, 3):
        for key in cx.basis(k):
            blocks[k][cx.cweight(key)].append(key)
    d1 = {key: cx.d(1, key) for w in blocks[1] for key in blocks[1][w]}
    d2 = {key: cx.d(2, key) for w in blocks[2] for key in blocks[2][w]}
    harmonic: dict = {}
    total_h = total_c = 0
    psd = True
    scales = {}
    for w, keys2 in sorted(blocks[2].items()):
        keys1, keys3 = blocks[1].get(w, []), blocks[3].get(w, [])
        D1 = _matrix(keys2, keys1, d1)
        D2 = _matrix(keys3, keys2, d2)
        G1, G2, G3 = cx.inner_block(keys1), cx.inner_block(keys2), cx.inner_block(keys3)
        # adjoints with respect to the positive form
        D1a = G1.inv() * D1.transpose() * G2 if keys1 else flint.fmpq_mat(0, len(keys2))
        D2a = G2.inv() * D2.transpose() * G3 if keys3 else flint.fmpq_mat(len(keys2), 0)
        lap = flint.fmpq_mat(len(keys2), len(keys2))
        if keys1:
            lap += D1 * D1a
        if keys3:
            lap += D2a * D2
        # G2 * lap is symmetric positive semidefinite; check the Gram-weighted symmetry
        sym = G2 * lap
        psd &= sym == sym.transpose()
        ker = nullspace(lap)
        harmonic[w] = (keys2, ker)
        total_h += len(ker)
        rk1 = D1.rank() if keys1 else 0
        rk2 = D2.rank() if keys3 else 0
        total_c += len(keys2) - rk2 - rk1
        if check_codifferential and keys1:
            scales[w] = _compare_codiff(cx, keys1, keys2, D1a)
    components = _lowest_weight_components(cx, harmonic)
    return OracleReport(components, total_h, total_c, psd, scales)


def _compare_codiff(cx: _Complex, keys1, keys2, adjoint) -> Fraction | None:
    """Scalar c with (displayed formula) = c * adjoint on this weight block, if any."""
    idx1 = {k: p for p, k in enumerate(keys1)}
    scale = None
    for q, key in enumerate(keys2):
        img = _codiff(cx, Cochain(2, {key: 1})).coefficients
        for p, k in enumerate(keys1):
            a = adjoint[p, q]
            a = Fraction(int(a.p), int(a.q))
            b = img.get(k, Fraction(0))
            if a == 0 and b == 0:
                continue
            if a == 0 or b == 0:
                return None
            if scale is None:
                scale = b / a
            elif b / a != scale:
                return None
        if any(k not in idx1 for k in img):
            return None
    return scale


def _g0_act(cx: _Complex, z: int, key) -> dict:
    """Action of a g_0 basis vector on a basis 2-cochain."""
    sc = cx.sc
    (a, b), c = key
    phi = Cochain(2, {key: 1})
    out: dict = defaultdict(Fraction)
    for xs in combinations(cx.minus, 2):
        val: dict = defaultdict(Fraction)
        for cc, v in sc.bracket_vec({z: 1}, phi(*xs)).items():
            val[cc] += v
        for p in range(2):
            for bb, bv in sc.bracket(z, xs[p]).items():
                args = list(xs)
                args[p] = bb
                for cc, v in phi(*args).items():
                    val[cc] -= bv * v
        for cc, v in val.items():
            if v:
                out[(xs, cc)] += v
    return out


def _lowest_weight_components(cx: _Complex, harmonic: dict) -> list[OracleComponent]:
    sc, g, rs = cx.sc, cx.g, cx.rs
    lowering = [sc.index_of(neg(rs.simple_root(k))) for k in g.levi]
    out = []
    for w, (keys2, ker) in sorted(harmonic.items()):
        if not ker:
            continue
        # stack the lowering operators applied to the harmonic basis
        images = []
        for vec in ker:
            acc: dict = defaultdict(Fraction)
            for p, coeff in enumerate(vec):
                if coeff == 0:
                    continue
                cf = Fraction(int(coeff.p), int(coeff.q))
                for z_num, z in enumerate(lowering):
                    for k, v in _g0_act(cx, z, keys2[p]).items():
                        acc[(z_num, k)] += cf * v
            images.append({k: v for k, v in acc.items() if v})
        rows = sorted({k for im in images for k in im})
        if rows:
            m = _matrix(rows, list(range(len(images))), dict(enumerate(images)))
            n_lw = len(nullspace(m))
        else:
            n_lw = len(ker)
        if n_lw:
            hom = sum(w[i - 1] for i in g.sigma1)
            dim = weyl_dimension(rs, neg(w), basis="root", levi=g.levi)
            out.extend(OracleComponent(hom, dim, w) for _ in range(n_lw))
    return out


def oracle_matches_pairs(rs: RootSystem, spec: GradingSpec | Iterable[int], report: OracleReport) -> bool:
    g = grade(rs, spec)
    pairs = harmonic_pairs(rs, spec, regular_only=False)
    predicted = sorted((hc.homogeneity, component_dimension(rs, g, hc), hc.lowest_weight) for hc in pairs)
    found = sorted((c.homogeneity, c.dimension, c.lowest_weight) for c in report.components)
    return (predicted == found and report.harmonic_dimension == report.cohomology_dimension
            == sum(c.dimension for c in report.components))
