"""Root systems, Chevalley structure constants and Weyl dimensions.

Roots are integer tuples of coefficients over the simple roots, Bourbaki
numbering.  Nothing here uses a Euclidean embedding: the symmetric form is the
symmetrised Cartan matrix, so every computation stays in exact rationals.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

Root = tuple[int, ...]

_RANK_BOUNDS = {"A": (1, 8), "B": (2, 8), "C": (2, 8), "D": (3, 8), "E": (6, 8), "F": (4, 4), "G": (2, 2)}


class RootSystemError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SimpleLieType:
    family: str
    rank: int

    def __post_init__(self):
        if self.family not in _RANK_BOUNDS:
            raise RootSystemError(f"unknown family {self.family!r}")
        lo, hi = _RANK_BOUNDS[self.family]
        if not lo <= self.rank <= hi:
            raise RootSystemError(f"rank {self.rank} out of range [{lo}, {hi}] for family {self.family}")

    @classmethod
    def parse(cls, text: str) -> "SimpleLieType":
        text = text.strip().upper()
        try:
            return cls(text[0], int(text[1:]))
        except (IndexError, ValueError) as exc:
            raise RootSystemError(f"cannot parse Lie type {text!r}") from exc

    def __str__(self) -> str:
        return f"{self.family}{self.rank}"


def _dynkin(t: SimpleLieType) -> tuple[list[tuple[int, int]], list[int]]:
    """Edges (0-based) and squared simple-root lengths (short roots have length 1)."""
    n = t.rank
    chain = [(i, i + 1) for i in range(n - 1)]
    if t.family == "A":
        return chain, [1] * n
    if t.family == "B":
        return chain, [2] * (n - 1) + [1]
    if t.family == "C":
        return chain, [1] * (n - 1) + [2]
    if t.family == "D":
        return [(i, i + 1) for i in range(n - 2)] + [(n - 3, n - 1)], [1] * n
    if t.family == "E":
        # 1-3-4-5-6-7-8 with 2 attached to 4 (Bourbaki)
        edges = [(0, 2), (1, 3), (2, 3)] + [(i, i + 1) for i in range(3, n - 1)]
        return edges, [1] * n
    if t.family == "F":
        return chain, [2, 2, 1, 1]
    if t.family == "G":
        return [(0, 1)], [1, 3]
    raise RootSystemError(t.family)


def _symmetric_form(t: SimpleLieType) -> list[list[int]]:
    edges, lengths = _dynkin(t)
    n = t.rank
    form = [[0] * n for _ in range(n)]
    for i in range(n):
        form[i][i] = 2 * lengths[i]
    for i, j in edges:
        m = min(lengths[i], lengths[j])
        bond = max(lengths[i], lengths[j]) // m
        form[i][j] = form[j][i] = -m * bond
    return form


@dataclass(frozen=True)
class RootSystem:
    type: SimpleLieType
    form: tuple[tuple[int, ...], ...]  # twice the symmetric form on simple roots
    cartan: tuple[tuple[int, ...], ...]  # cartan[i][j] = <alpha_i, alpha_j^vee>
    positive_roots: tuple[Root, ...]

    @property
    def rank(self) -> int:
        return self.type.rank

    @property
    def highest_root(self) -> Root:
        return self.positive_roots[-1]

    @property
    def dimension(self) -> int:
        return 2 * len(self.positive_roots) + self.rank

    @cached_property
    def roots(self) -> tuple[Root, ...]:
        """Positive roots followed by their negatives (same order)."""
        return self.positive_roots + tuple(neg(r) for r in self.positive_roots)

    @cached_property
    def root_index(self) -> dict[Root, int]:
        return {r: k for k, r in enumerate(self.roots)}

    def simple_root(self, j: int) -> Root:
        return tuple(int(i == j) for i in range(self.rank))

    def inner(self, x: Sequence, y: Sequence):
        """Symmetric form (x, y) for vectors in simple-root coordinates."""
        n = self.rank
        total = sum(x[i] * self.form[i][j] * y[j] for i in range(n) for j in range(n) if x[i] and y[j])
        return Fraction(total, 2)

    def pairing(self, beta: Sequence, j: int) -> int:
        """<beta, alpha_j^vee>."""
        return sum(beta[i] * self.cartan[i][j] for i in range(self.rank))

    def coroot(self, alpha: Root) -> tuple[int, ...]:
        """Coroot of alpha in the basis of simple coroots."""
        a2 = self.inner(alpha, alpha)
        out = []
        for i, c in enumerate(alpha):
            q = Fraction(c) * self.inner(self.simple_root(i), self.simple_root(i)) / a2
            assert q.denominator == 1
            out.append(int(q))
        return tuple(out)

    def is_root(self, beta: Sequence) -> bool:
        return tuple(beta) in self.root_index

    def height(self, beta: Sequence, subset: Iterable[int] | None = None) -> int:
        if subset is None:
            return sum(beta)
        return sum(beta[i] for i in subset)


def neg(r: Sequence[int]) -> Root:
    return tuple(-c for c in r)


def add(a: Sequence[int], b: Sequence[int]) -> Root:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Sequence[int], b: Sequence[int]) -> Root:
    return tuple(x - y for x, y in zip(a, b))


def _order_key(r: Root):
    return (sum(r), tuple(-c for c in r))


def build_root_system(t: SimpleLieType | str) -> RootSystem:
    """Enumerate positive roots by closure under simple-root strings."""
    if isinstance(t, str):
        t = SimpleLieType.parse(t)
    form = _symmetric_form(t)
    n = t.rank
    cartan = tuple(tuple(2 * form[i][j] // form[j][j] for j in range(n)) for i in range(n))
    simple = [tuple(int(i == j) for i in range(n)) for j in range(n)]
    found = set(simple)
    layer = list(simple)
    while layer:
        nxt = []
        for beta in layer:
            for j in range(n):
                # p = how far we can go down the alpha_j string from beta
                p = 0
                down = beta
                while True:
                    down = tuple(c - (i == j) for i, c in enumerate(down))
                    if down in found:
                        p += 1
                    else:
                        break
                pair = sum(beta[i] * cartan[i][j] for i in range(n))
                if p - pair > 0:
                    up = tuple(c + (i == j) for i, c in enumerate(beta))
                    if up not in found:
                        found.add(up)
                        nxt.append(up)
        layer = nxt
    positive = tuple(sorted(found, key=_order_key))
    return RootSystem(t, tuple(map(tuple, form)), cartan, positive)


def reflect(rs: RootSystem, j: int, beta: Sequence[int]) -> Root:
    """s_{alpha_j}(beta) = beta - <beta, alpha_j^vee> alpha_j (0-based j)."""
    if not 0 <= j < rs.rank:
        raise IndexError(f"simple root index {j} out of range for rank {rs.rank}")
    c = rs.pairing(beta, j)
    return tuple(b - (c if i == j else 0) for i, b in enumerate(beta))


def to_fundamental(rs: RootSystem, weight: Sequence) -> tuple:
    """Dynkin labels <weight, alpha_j^vee> of a vector in simple-root coordinates."""
    return tuple(rs.pairing(weight, j) for j in range(rs.rank))


def weyl_dimension(rs: RootSystem, weight: Sequence[int], *, basis: str = "fundamental",
                   levi: Iterable[int] | None = None) -> int:
    """Dimension of the irreducible module with the given dominant highest weight.

    ``basis`` is ``"fundamental"`` (Dynkin labels) or ``"root"`` (simple-root
    coordinates, possibly rational).  With ``levi`` the formula runs over the
    roots spanned by the given simple roots only, i.e. the semisimple part of
    a Levi factor; dominance is then only required on those indices.
    """
    if basis == "root":
        labels = tuple(Fraction(x) for x in to_fundamental(rs, weight))
    elif basis == "fundamental":
        labels = tuple(Fraction(x) for x in weight)
    else:
        raise ValueError(basis)
    idx = set(range(rs.rank)) if levi is None else set(levi)
    for j in idx:
        if labels[j] < 0 or labels[j].denominator != 1:
            raise RootSystemError(f"weight {tuple(weight)} is not dominant integral at index {j}")
    num = Fraction(1)
    for alpha in rs.positive_roots:
        if any(alpha[i] for i in range(rs.rank) if i not in idx):
            continue
        # <lambda + rho, alpha^vee> / <rho, alpha^vee> with alpha^vee in simple coroots
        co = rs.coroot(alpha)
        top = sum((labels[i] + 1) * co[i] for i in range(rs.rank))
        bottom = sum(co[i] for i in range(rs.rank))
        num *= Fraction(top, bottom)
    assert num.denominator == 1
    return int(num)


# ---------------------------------------------------------------------------
# Chevalley basis

@dataclass(frozen=True)
class StructureConstants:
    """Integral Chevalley basis: e_alpha for every root, then h_1..h_r (simple coroots).

    ``table[(a, b)]`` is a dict {basis index: int} giving [x_a, x_b]; missing
    pairs bracket to zero.
    """
    rs: RootSystem
    table: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return self.rs.dimension

    def root_of(self, k: int) -> Root | None:
        roots = self.rs.roots
        return roots[k] if k < len(roots) else None

    def index_of(self, root: Root) -> int:
        return self.rs.root_index[root]

    def cartan_index(self, i: int) -> int:
        return len(self.rs.roots) + i

    def weight(self, k: int) -> Root:
        r = self.root_of(k)
        return r if r is not None else (0,) * self.rs.rank

    def bracket(self, a: int, b: int) -> dict[int, int]:
        return self.table.get((a, b), {})

    def bracket_vec(self, x: dict, y: dict) -> dict:
        out: dict = {}
        for a, ca in x.items():
            for b, cb in y.items():
                for c, v in self.table.get((a, b), {}).items():
                    out[c] = out.get(c, 0) + ca * cb * v
        return {k: v for k, v in out.items() if v}

    def jacobiator(self, a: int, b: int, c: int) -> dict:
        """[x_a,[x_b,x_c]] + [x_b,[x_c,x_a]] + [x_c,[x_a,x_b]], zero entries dropped."""
        out: dict = {}
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            for k, v in self.bracket_vec({x: 1}, self.bracket(y, z)).items():
                out[k] = out.get(k, 0) + v
        return {k: v for k, v in out.items() if v}

    def check_jacobi(self) -> bool:
        n = self.dim
        return all(not self.jacobiator(a, b, c)
                   for a in range(n) for b in range(a + 1, n) for c in range(b + 1, n))

    def ad_matrix(self, a: int) -> list[list[int]]:
        n = self.dim
        m = [[0] * n for _ in range(n)]
        for b in range(n):
            for c, v in self.bracket(a, b).items():
                m[c][b] = v
        return m


def chevalley_constants(rs: RootSystem) -> StructureConstants:
    """Structure constants via extraspecial pairs (all signs +) and Carter's relations."""
    pos = rs.positive_roots
    pos_set = set(pos)
    order = {r: k for k, r in enumerate(pos)}
    roots = set(rs.roots)
    norm = {r: rs.inner(r, r) for r in rs.roots}
    npos: dict[tuple[Root, Root], Fraction] = {}

    def string_p(alpha: Root, beta: Root) -> int:
        p = 0
        x = sub(beta, alpha)
        while x in roots:
            p += 1
            x = sub(x, alpha)
        return p

    def N(a: Root, b: Root) -> Fraction:
        s = add(a, b)
        if s not in roots:
            return Fraction(0)
        a_pos, b_pos = a in pos_set, b in pos_set
        if a_pos and b_pos:
            return npos[(a, b)]
        if not a_pos and not b_pos:
            return -N(neg(a), neg(b))
        if not a_pos:
            return -N(b, a)
        # a > 0 > b, c = -(a + b): N_ab/(c,c) = N_bc/(a,a) = N_ca/(b,b)
        c = neg(s)
        if s in pos_set:
            return norm[c] / norm[a] * N(b, c)
        return norm[c] / norm[b] * N(c, a)

    by_height = sorted((r for r in pos if sum(r) > 1), key=_order_key)
    for xi in by_height:
        pairs = [(a, sub(xi, a)) for a in pos if sub(xi, a) in pos_set]
        zeta = min((a for a, _ in pairs), key=order.__getitem__)
        eta = sub(xi, zeta)
        n_ext = Fraction(string_p(zeta, eta) + 1)
        npos[(zeta, eta)] = n_ext
        npos[(eta, zeta)] = -n_ext
        for a, b in pairs:
            if order[a] >= order[b] or a == zeta:
                continue
            t1 = Fraction(0)
            if sub(b, zeta) in roots:
                t1 = N(b, neg(zeta)) * N(a, neg(eta)) / norm[sub(b, zeta)]
            t2 = Fraction(0)
            if sub(a, zeta) in roots:
                t2 = N(neg(zeta), a) * N(b, neg(eta)) / norm[sub(a, zeta)]
            val = norm[xi] / N(zeta, eta) * (t1 + t2)
            npos[(a, b)] = val
            npos[(b, a)] = -val

    idx = rs.root_index
    nroots = len(rs.roots)
    r = rs.rank
    table: dict = {}
    for a in rs.roots:
        ia = idx[a]
        for b in rs.roots:
            s = add(a, b)
            if s in roots:
                v = N(a, b)
                assert v.denominator == 1 and v != 0
                table[(ia, idx[b])] = {idx[s]: int(v)}
            elif not any(s):
                co = rs.coroot(a)
                table[(ia, idx[b])] = {nroots + i: co[i] for i in range(r) if co[i]}
        for i in range(r):
            c = rs.pairing(a, i)
            if c:
                table[(nroots + i, ia)] = {ia: c}
                table[(ia, nroots + i)] = {ia: -c}
    return StructureConstants(rs, table)


def diagram_automorphisms(t: SimpleLieType) -> list[tuple[int, ...]]:
    """Permutations of simple-root indices (0-based) preserving the Dynkin diagram."""
    n = t.rank
    ident = tuple(range(n))
    if t.family == "A" and n > 1:
        return [ident, tuple(reversed(ident))]
    if t.family == "D":
        swap = tuple(range(n - 2)) + (n - 1, n - 2)
        if n == 4:
            # triality: permutations of the outer nodes 0, 2, 3 around node 1
            from itertools import permutations
            return [tuple(p[0] if i == 0 else 1 if i == 1 else p[1] if i == 2 else p[2] for i in range(4))
                    for p in permutations((0, 2, 3))]
        return [ident, swap]
    if t.family == "E" and n == 6:
        return [ident, (5, 1, 4, 3, 2, 0)]
    return [ident]
