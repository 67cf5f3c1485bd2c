"""Exact symbolic expressions: rational functions over Q(i) with square-root
radicals adjoined, formal function atoms with chain-rule derivatives,
conjugation and vector fields.

Variables are ``z<k>`` (holomorphic), ``zb<k>`` (their conjugates), ``u<k>``
(real) and ``t<k>`` (real dummies for instantiating formal functions).  The
imaginary unit, ``sqrt2`` and chart radicals such as ``rP`` (rP^2 = P) are
kept as radical symbols; an expression is a sum over radical monomials of
polynomial numerators over a single radical-free denominator.  With every
radical square free of square factors this form is unique, so equality is
structural.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping

import flint

__all__ = ["Expr", "Var", "Radical", "FormalFn", "VectorField", "ParseError", "SymcasError", "parse",
           "diff", "conjugate", "lie_bracket", "equals_zero", "substitute", "instantiate",
           "declare_radical", "var", "const", "I", "SQRT2", "ZERO", "ONE", "span_rank", "in_span"]


class SymcasError(ValueError):
    pass


# ---------------------------------------------------------------------------
# generator registry

_VAR_RE = re.compile(r"^(z|zb|u|t)([1-9][0-9]*)$")
_names: list[str] = []            # logical generator names, slot k is flint generator g<k>
_index: dict[str, int] = {}
_partner: dict[str, str] = {}     # conjugation on generators
_ctx = None


def _kind(name: str) -> str:
    m = _VAR_RE.match(name)
    if not m:
        raise SymcasError(f"not a variable name: {name!r}")
    return m.group(1)


def _register(name: str) -> int:
    global _ctx
    if name in _index:
        return _index[name]
    _index[name] = len(_names)
    _names.append(name)
    if _ctx is None or _ctx.nvars() < len(_names):
        cap = 64 if _ctx is None else 2 * _ctx.nvars()
        _ctx = flint.fmpq_mpoly_ctx.get(tuple(f"g{k}" for k in range(cap)), "lex")
    return _index[name]


def _lift(p):
    return p if p.context() is _ctx else p.project_to_context(_ctx)


def _gen(name: str):
    k = _register(name)  # may grow the context
    return _ctx.gens()[k]


def _const_poly(c):
    if _ctx is None:
        _register("z1")
    c = Fraction(c)
    return _ctx.constant(flint.fmpq(c.numerator, c.denominator))


def _used(p) -> list[str]:
    return [_names[k] for k, d in enumerate(p.degrees()) if d]


def _render(p) -> str:
    def name(m):
        n = _names[int(m.group(1))]
        return _atom_of[n].display() if n in _atom_of else n
    return re.sub(r"\bg(\d+)\b", name, str(_lift(p)))


# ---------------------------------------------------------------------------
# radicals and formal functions

@dataclass(frozen=True)
class Radical:
    name: str
    square: object            # radical-free polynomial (flint), stored lazily lifted
    conjugate: str
    sign: int                 # conj(name) = sign * conjugate


_radicals: dict[str, Radical] = {}


def declare_radical(name: str, square: "Expr", conj: str | None = None) -> "Expr":
    """Adjoin r with r^2 = square; returns r as an expression."""
    if not re.match(r"^r[A-Za-z0-9_]+$", name):
        raise SymcasError(f"radical names start with 'r': {name!r}")
    if square.radicals() or not square._den.is_one():
        raise SymcasError("radical squares must be radical-free polynomials")
    sq = square._num.get(frozenset(), _const_poly(0))
    if name in _radicals:
        if _lift(_radicals[name].square) != _lift(sq):
            raise SymcasError(f"radical {name} already declared with a different square")
        return Expr.radical(name)
    if conj is None:
        if conjugate(square) != square:
            raise SymcasError(f"square of {name} is not conjugation-stable; declare its conjugate radical")
        conj = name
    _radicals[name] = Radical(name, sq, conj, 1)
    return Expr.radical(name)


def _builtin_radicals():
    _register("z1")
    _radicals["i"] = Radical("i", _const_poly(-1), "i", -1)
    _radicals["sqrt2"] = Radical("sqrt2", _const_poly(2), "sqrt2", 1)


@dataclass(frozen=True)
class FormalFn:
    """Derivative atom d^index F(args); ``name`` is 'F' or 'Fb' (its conjugate)."""
    name: str
    index: tuple[int, ...]
    args: tuple["Expr", ...]

    def key(self):
        return self.name, self.index, tuple(a.key() for a in self.args)

    def display(self) -> str:
        idx = f"[{','.join(map(str, self.index))}]" if self.index else ""
        return f"{self.name}{idx}({', '.join(a.to_str() for a in self.args)})"


_atoms: dict = {}                 # key -> generator name
_atom_of: dict[str, FormalFn] = {}


def _atom_gen(fn: FormalFn) -> str:
    k = fn.key()
    g = _atoms.get(k)
    if g is None:
        g = f"A{len(_atoms) + 1}"
        _atoms[k] = g
        _atom_of[g] = fn
        _register(g)
    return g


def formal(name: str, args: Iterable["Expr"], index: Iterable[int] = ()) -> "Expr":
    args = tuple(args)
    index = tuple(sorted(index))
    if name not in ("F", "Fb"):
        raise SymcasError(f"unknown formal function {name!r}")
    if any(not 1 <= k <= len(args) for k in index):
        raise SymcasError(f"derivative index {index} out of range for arity {len(args)}")
    return Expr({frozenset(): _gen(_atom_gen(FormalFn(name, index, args)))}, _const_poly(1))


# ---------------------------------------------------------------------------
# radical polynomials: dict frozenset(radicals) -> poly

def _rmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ra, pa in a.items():
        for rb, pb in b.items():
            p = _lift(pa) * _lift(pb)
            for r in ra & rb:
                p = p * _lift(_radicals[r].square)
            key = ra ^ rb
            out[key] = _lift(out[key]) + p if key in out else p
    return {k: v for k, v in out.items() if not v.is_zero()}


def _radd(a: dict, b: dict) -> dict:
    out = {k: _lift(v) for k, v in a.items()}
    for k, v in b.items():
        out[k] = out[k] + _lift(v) if k in out else _lift(v)
    return {k: v for k, v in out.items() if not v.is_zero()}


def _rscale(a: dict, p) -> dict:
    p = _lift(p)
    out = {k: _lift(v) * p for k, v in a.items()}
    return {k: v for k, v in out.items() if not v.is_zero()}


# ---------------------------------------------------------------------------
# expressions

class Expr:
    __slots__ = ("_num", "_den")

    def __init__(self, num: dict, den, _reduce: bool = True):
        num = {frozenset(k): _lift(v) for k, v in num.items()}
        den = _lift(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        num = {k: v for k, v in num.items() if not v.is_zero()}
        if not num:
            self._num, self._den = {}, _const_poly(1)
            return
        if _reduce and not den.is_constant():
            g = den
            for v in num.values():
                g = g.gcd(v)
                if g.is_constant():
                    break
            if not g.is_constant():
                den = den / g
                num = {k: v / g for k, v in num.items()}
        lc = den.leading_coefficient()
        if lc != 1:
            den = den / lc
            num = {k: v / lc for k, v in num.items()}
        self._num, self._den = num, den

    # constructors
    @staticmethod
    def const(c) -> "Expr":
        return Expr({frozenset(): _const_poly(c)}, _const_poly(1))

    @staticmethod
    def var(name: str) -> "Expr":
        _kind(name)
        return Expr({frozenset(): _gen(name)}, _const_poly(1))

    @staticmethod
    def radical(name: str) -> "Expr":
        if name not in _radicals:
            raise SymcasError(f"undeclared radical {name!r}")
        return Expr({frozenset([name]): _const_poly(1)}, _const_poly(1))

    @staticmethod
    def _coerce(x) -> "Expr":
        if isinstance(x, Expr):
            return x
        if isinstance(x, (int, Fraction)):
            return Expr.const(x)
        raise TypeError(f"cannot use {type(x).__name__} as an expression")

    # arithmetic
    def __add__(self, other):
        other = Expr._coerce(other)
        if not other._num:
            return self
        if not self._num:
            return other
        d1, d2 = _lift(self._den), _lift(other._den)
        if d1 == d2:
            return Expr(_radd(self._num, other._num), d1)
        g = d1.gcd(d2)
        c1, c2 = d2 / g, d1 / g
        return Expr(_radd(_rscale(self._num, c1), _rscale(other._num, c2)), d1 * c1)

    __radd__ = __add__

    def __neg__(self):
        return Expr({k: -v for k, v in self._num.items()}, self._den, _reduce=False)

    def __sub__(self, other):
        return self + (-Expr._coerce(other))

    def __rsub__(self, other):
        return Expr._coerce(other) - self

    def __mul__(self, other):
        other = Expr._coerce(other)
        if not self._num or not other._num:
            return ZERO
        return Expr(_rmul(self._num, other._num), _lift(self._den) * _lift(other._den))

    __rmul__ = __mul__

    def inverse(self) -> "Expr":
        if not self._num:
            raise ZeroDivisionError("division by zero expression")
        num = {k: _lift(v) for k, v in self._num.items()}
        mult = {frozenset(): _const_poly(1)}
        for r in sorted(self.radicals()):
            conj = {k: (-v if r in k else v) for k, v in num.items()}
            num = _rmul(num, conj)
            mult = _rmul(mult, conj)
        base = num[frozenset()]
        return Expr(_rscale(mult, _lift(self._den)), base)

    def __truediv__(self, other):
        return self * Expr._coerce(other).inverse()

    def __rtruediv__(self, other):
        return Expr._coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise SymcasError("only integer powers are supported")
        if n < 0:
            return self.inverse() ** (-n)
        out, base = ONE, self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # comparison
    def _canon(self):
        return ({k: _lift(v) for k, v in self._num.items()}, _lift(self._den))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        a, b = self._canon(), other._canon()
        return a[1] == b[1] and a[0].keys() == b[0].keys() and all(a[0][k] == b[0][k] for k in a[0])

    def __hash__(self):
        return hash(self.key())

    def key(self) -> str:
        num, den = self._canon()
        return ";".join(f"{sorted(k)}:{v}" for k, v in sorted(num.items(), key=lambda kv: sorted(kv[0]))) + f"|{den}"

    def is_zero(self) -> bool:
        return not self._num

    # inspection
    def radicals(self) -> set[str]:
        return set().union(*self._num.keys()) if self._num else set()

    def variables(self) -> set[str]:
        out = set(_used(self._den))
        for v in self._num.values():
            out |= set(_used(v))
        return out

    def atoms(self) -> list[FormalFn]:
        return [_atom_of[g] for g in sorted(self.variables()) if g in _atom_of]

    def components(self) -> dict[frozenset, "Expr"]:
        """Radical-free coefficient of each radical monomial."""
        return {k: Expr({frozenset(): v}, self._den) for k, v in self._num.items()}

    def numerator(self) -> "Expr":
        return Expr(self._num, _const_poly(1), _reduce=False)

    def denominator(self) -> "Expr":
        return Expr({frozenset(): self._den}, _const_poly(1), _reduce=False)

    def to_str(self) -> str:
        poly_str = _render
        if not self._num:
            return "0"
        parts = []
        for k, v in sorted(self._num.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
            rad = "*".join(sorted(k))
            body = poly_str(v)
            parts.append(f"({body})*{rad}" if rad else f"({body})" if len(self._num) > 1 else body)
        num = " + ".join(parts)
        if self._den.is_one():
            return num
        return f"({num})/({poly_str(self._den)})"

    __str__ = to_str

    def __repr__(self):
        return f"Expr({self.to_str()!r})"


_builtin_radicals()
ZERO = Expr({}, _const_poly(1))
ONE = Expr.const(1)
I = Expr.radical("i")
SQRT2 = Expr.radical("sqrt2")


def const(c) -> Expr:
    return Expr.const(c)


def var(name: str) -> Expr:
    return Expr.var(name)


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        _kind(self.name)

    @property
    def kind(self) -> str:
        return _kind(self.name)

    def conjugate(self) -> "Var":
        return Var(_conj_name(self.name))

    def expr(self) -> Expr:
        return Expr.var(self.name)


def _conj_name(name: str) -> str:
    m = _VAR_RE.match(name)
    if not m:
        raise SymcasError(f"not a variable name: {name!r}")
    kind, k = m.groups()
    return {"z": "zb", "zb": "z"}.get(kind, kind) + k


# ---------------------------------------------------------------------------
# calculus

def _poly_partial(p, name: str, memo: dict) -> Expr:
    """d p / d name for a polynomial p in variables and atoms (chain rule through atoms)."""
    p = _lift(p)
    out = ZERO
    used = _used(p)
    if name in used:
        out = out + Expr({frozenset(): p.derivative(_index[name])}, _const_poly(1))
    for g in used:
        fn = _atom_of.get(g)
        if fn is None:
            continue
        da = _atom_partial(fn, name, memo)
        if not da.is_zero():
            out = out + Expr({frozenset(): p.derivative(_index[g])}, _const_poly(1)) * da
    return out


def _atom_partial(fn: FormalFn, name: str, memo: dict) -> Expr:
    key = (_atom_gen(fn), name)
    if key in memo:
        return memo[key]
    out = ZERO
    for pos, arg in enumerate(fn.args, start=1):
        da = _diff(arg, name, memo)
        if not da.is_zero():
            out = out + formal(fn.name, fn.args, fn.index + (pos,)) * da
    memo[key] = out
    return out


def _diff(e: Expr, name: str, memo: dict) -> Expr:
    if e.is_zero():
        return ZERO
    den = Expr({frozenset(): e._den}, _const_poly(1))
    dden = _poly_partial(e._den, name, memo)
    out = ZERO
    for k, v in e._num.items():
        rad = Expr({k: _const_poly(1)}, _const_poly(1))
        nv = Expr({frozenset(): v}, _const_poly(1))
        term = _poly_partial(v, name, memo) * den - nv * dden
        # d r / dv = r * (dP/dv) / (2 P)
        for r in k:
            if r in ("i", "sqrt2"):
                continue
            sq = Expr({frozenset(): _radicals[r].square}, _const_poly(1))
            dsq = _poly_partial(_radicals[r].square, name, memo)
            if not dsq.is_zero():
                term = term + nv * den * dsq / (2 * sq)
        out = out + rad * term
    return out / (den * den)


def diff(e: Expr, v: Var | str) -> Expr:
    """Partial derivative, treating z_k and zb_k as independent variables."""
    name = v.name if isinstance(v, Var) else v
    _kind(name)
    return _diff(e, name, {})


def _conj_gen(n: str) -> str:
    if n not in _partner:
        fn = _atom_of.get(n)
        if fn is None:
            m = _conj_name(n)
            _register(m)
        else:
            m = _atom_gen(FormalFn("Fb" if fn.name == "F" else "F", fn.index,
                                   tuple(conjugate(a) for a in fn.args)))
        _partner[n], _partner[m] = m, n
    return _partner[n]


def _conj_poly(p):
    p = _lift(p)
    used = _used(p)
    for n in used:
        _conj_gen(n)
    if not used:
        return _lift(p)
    gens = list(_ctx.gens())
    images = list(gens)
    for n in used:
        images[_index[n]] = gens[_index[_partner[n]]]
    return _lift(p).compose(*images)


def conjugate(e: Expr) -> Expr:
    """i -> -i, z_k <-> zb_k, u fixed, F <-> Fb with conjugated arguments."""
    if e.is_zero():
        return e
    out_num = {}
    for k, v in e._num.items():
        sign = 1
        kk = set()
        for r in k:
            rad = _radicals[r]
            sign *= rad.sign
            if rad.conjugate not in _radicals:
                raise SymcasError(f"undeclared conjugate radical {rad.conjugate!r}")
            kk.add(rad.conjugate)
        p = _conj_poly(v)
        out_num[frozenset(kk)] = p if sign > 0 else -p
    return Expr(out_num, _conj_poly(e._den))


def equals_zero(e: Expr) -> bool:
    return e.is_zero()


def substitute(e: Expr, values: Mapping[str, Expr]) -> Expr:
    """Replace variables (or atom generators) by expressions."""
    if not values:
        return e

    def sub_poly(p):
        p = _lift(p)
        used = _used(p)
        hit = [n for n in used if n in values]
        if not hit:
            return {frozenset(): p}, _const_poly(1)
        idx = [_index[n] for n in hit]
        vals = {n: values[n] for n in hit}
        maxdeg = {n: p.degrees()[_index[n]] for n in hit}
        den = _const_poly(1)
        for n in hit:
            den = den * _lift(vals[n]._den) ** maxdeg[n]
        groups: dict = {}
        for exps, c in p.to_dict().items():
            key = tuple(exps[i] for i in idx)
            rest = list(exps)
            for i in idx:
                rest[i] = 0
            groups.setdefault(key, {})[tuple(rest)] = c
        pow_cache: dict = {}

        def pw(n, a):
            k = (n, a)
            if k not in pow_cache:
                pow_cache[k] = reduce(_rmul, [vals[n]._num] * a, {frozenset(): _const_poly(1)})
            return pow_cache[k]

        out: dict = {}
        for key, terms in groups.items():
            kept = _ctx.from_dict(terms)
            acc = {frozenset(): kept}
            for n, a in zip(hit, key):
                acc = _rmul(acc, pw(n, a))
                extra = maxdeg[n] - a
                if extra:
                    acc = _rscale(acc, _lift(vals[n]._den) ** extra)
            out = _radd(out, acc)
        return out, den

    total = ZERO
    dnum, dden = sub_poly(e._den)
    denominator = Expr(dnum, dden)
    for k, v in e._num.items():
        n, d = sub_poly(v)
        total = total + Expr({k: _const_poly(1)}, _const_poly(1)) * Expr(n, d)
    return total / denominator


def instantiate(e: Expr, fn: Expr, arity: int, name: str = "F") -> Expr:
    """Replace the formal function F (and Fb) by a concrete expression in t1..t<arity>."""
    dummies = [f"t{k}" for k in range(1, arity + 1)]
    fnb = conjugate(fn)
    values = {}
    for g in sorted(e.variables()):
        atom = _atom_of.get(g)
        if atom is None or atom.name not in (name, name + "b"):
            continue
        if len(atom.args) != arity:
            raise SymcasError(f"{atom.display()} has arity {len(atom.args)}, expected {arity}")
        body = fn if atom.name == name else fnb
        for k in atom.index:
            body = diff(body, dummies[k - 1])
        values[g] = substitute(body, dict(zip(dummies, atom.args)))
    return substitute(e, values)


# ---------------------------------------------------------------------------
# vector fields

@dataclass(frozen=True)
class VectorField:
    chart: tuple[str, ...]
    coefficients: Mapping[str, Expr]

    def __post_init__(self):
        extra = set(self.coefficients) - set(self.chart)
        if extra:
            raise SymcasError(f"coefficients for variables outside the chart: {sorted(extra)}")
        object.__setattr__(self, "coefficients",
                           {v: c for v, c in self.coefficients.items() if not c.is_zero()})

    def coefficient(self, v: str) -> Expr:
        return self.coefficients.get(v, ZERO)

    def __call__(self, f: Expr) -> Expr:
        out = ZERO
        for v, c in self.coefficients.items():
            d = diff(f, v)
            if not d.is_zero():
                out = out + c * d
        return out

    def _check(self, other: "VectorField"):
        if self.chart != other.chart:
            raise SymcasError("vector fields live on different charts")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.chart, {v: self.coefficient(v) + other.coefficient(v) for v in self.chart})

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField(self.chart, {v: self.coefficient(v) - other.coefficient(v) for v in self.chart})

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, {v: -c for v, c in self.coefficients.items()})

    def scale(self, f: Expr) -> "VectorField":
        f = Expr._coerce(f)
        return VectorField(self.chart, {v: f * c for v, c in self.coefficients.items()})

    def conjugate(self) -> "VectorField":
        out = {}
        for v, c in self.coefficients.items():
            w = _conj_name(v)
            if w not in self.chart:
                raise SymcasError(f"chart is not closed under conjugation ({w} missing)")
            out[w] = conjugate(c)
        return VectorField(self.chart, out)

    def vector(self) -> list[Expr]:
        return [self.coefficient(v) for v in self.chart]

    def is_zero(self) -> bool:
        return not self.coefficients

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.chart == other.chart and (self - other).is_zero()

    def __hash__(self):
        return hash(tuple(self.coefficient(v).key() for v in self.chart))

    @staticmethod
    def partial(chart: Iterable[str], v: str) -> "VectorField":
        return VectorField(tuple(chart), {v: ONE})


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    X._check(Y)
    out = {}
    for v in X.chart:
        c = Y(X.coefficient(v)) * -1 + X(Y.coefficient(v))
        if not c.is_zero():
            out[v] = c
    return VectorField(X.chart, out)


# ---------------------------------------------------------------------------
# linear algebra over the expression field

def _eliminate(rows: list[list[Expr]]) -> list[list[Expr]]:
    rows = [list(r) for r in rows if any(not x.is_zero() for x in r)]
    echelon: list[tuple[int, list[Expr]]] = []
    for r in rows:
        for piv, er in echelon:
            if not r[piv].is_zero():
                f = r[piv] / er[piv]
                r = [a - f * b for a, b in zip(r, er)]
        nz = [k for k, x in enumerate(r) if not x.is_zero()]
        if nz:
            echelon.append((nz[0], r))
    return [r for _, r in echelon]


def span_rank(vectors: Iterable[Iterable[Expr]]) -> int:
    """Rank over the field of rational functions (with radicals)."""
    return len(_eliminate([list(v) for v in vectors]))


def in_span(vec: Iterable[Expr], basis: Iterable[Iterable[Expr]]) -> bool:
    basis = [list(b) for b in basis]
    return span_rank(basis + [list(vec)]) == span_rank(basis)


# ---------------------------------------------------------------------------
# parser

class ParseError(SymcasError):
    def __init__(self, message: str, position: int, expected: Iterable[str], text: str = ""):
        self.position = position
        self.expected = sorted(set(expected))
        self.text = text
        caret = f"\n  {text}\n  {' ' * position}^" if text else ""
        super().__init__(f"{message} at position {position}; expected {', '.join(self.expected)}{caret}")


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),\[\]]))")


class _Parser:
    def __init__(self, text: str, env: Mapping[str, Expr]):
        self.text = text
        self.env = env
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                p = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ParseError(f"unexpected character {text[p]!r}", p, ["number", "name", "operator"], text)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.toks.append(("end", "", len(text)))
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def take(self, value=None, expected=()):
        tok = self.toks[self.k]
        if value is not None and tok[1] != value:
            self.fail(f"unexpected {self._desc(tok)}", [repr(value), *expected])
        self.k += 1
        return tok

    @staticmethod
    def _desc(tok):
        return "end of input" if tok[0] == "end" else repr(tok[1])

    def fail(self, msg, expected):
        raise ParseError(msg, self.peek()[2], expected, self.text)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected {self._desc(self.peek())}", ["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            t = self.term()
            e = e + t if op == "+" else e - t
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            u = self.unary()
            if op == "*":
                e = e * u
            else:
                if u.is_zero():
                    raise ParseError("division by zero", self.toks[self.k - 1][2], ["nonzero divisor"], self.text)
                e = e / u
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+" and self.peek()[0] == "op":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[1] == "-":
                self.take()
                sign = -1
            tok = self.peek()
            if tok[0] != "num":
                self.fail(f"unexpected {self._desc(tok)}", ["integer exponent"])
            self.take()
            return base ** (sign * int(tok[1]))
        return base

    def primary(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return Expr.const(int(val))
        if val == "(":
            self.take()
            e = self.expr()
            self.take(")", ["'+'", "'-'", "'*'", "'/'"])
            return e
        if kind == "name":
            self.take()
            if val in ("F", "Fb"):
                return self.call(val)
            if val in self.env:
                return self.env[val]
            if val == "i":
                return I
            if val == "sqrt2":
                return SQRT2
            if _VAR_RE.match(val):
                return Expr.var(val)
            if val in _radicals:
                return Expr.radical(val)
            raise ParseError(f"unknown name {val!r}", pos, ["variable", "declared name", "radical"], self.text)
        self.fail(f"unexpected {self._desc(self.peek())}", ["number", "name", "'('"])

    def call(self, name: str) -> Expr:
        index = []
        if self.peek()[1] == "[":
            self.take()
            while True:
                tok = self.peek()
                if tok[0] != "num":
                    self.fail(f"unexpected {self._desc(tok)}", ["derivative index"])
                self.take()
                index.append(int(tok[1]))
                if self.peek()[1] == ",":
                    self.take()
                    continue
                self.take("]", ["','"])
                break
        self.take("(", ["'['"] if not index else [])
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.take()
            args.append(self.expr())
        self.take(")", ["','", "'+'", "'-'", "'*'", "'/'"])
        try:
            return formal(name, args, index)
        except SymcasError as exc:
            raise ParseError(str(exc), self.toks[self.k - 1][2], ["valid derivative index"], self.text) from None


def parse(text: str, env: Mapping[str, Expr] | None = None) -> Expr:
    """Parse the ASCII expression grammar; ``env`` binds extra names (auxiliary polynomials)."""
    return _Parser(text, env or {}).parse()
