"""Explicit 2-nondegenerate CR models: frame algebra, integrability of
deformations and their fundamental invariants, computed exactly.

A model lives on a real chart (z_k, zb_k, u_k).  Its complex frame consists
of fields L_i spanning D/K in D^{1,0}, fields K_k spanning the Levi kernel,
and their conjugates.  Together with the transverse directions d/du_k these
give a frame of the complexified tangent bundle, and every bracket is
decomposed in it.
"""
from __future__ import annotations

import json
import re
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping

from . import symcas as S
from .grading import bigrade
from .rootsys import SimpleLieType, build_root_system
from .symcas import Expr, VectorField

__all__ = ["ModelError", "CRModel", "Check", "FrameReport", "Residual", "InvariantResult",
           "G0StructureComponents", "load_model", "builtin_models", "verify_frame",
           "integrability_residuals", "printed_pde_residuals", "twisted_apply", "invariant_W_sp4",
           "printed_W_sp4", "invariant_J_sp4", "j_two_paths", "invariant_g2", "sp6_g0_structure",
           "sp6_R_components", "flatness_check", "random_instantiation", "BUILTIN", "derived_pde",
           "sp6_connection", "sp6_printed_R", "flatness_components", "parse_instantiation", "MIN_SELECTION",
           "atom_coefficients", "deformation", "kernel_matrices", "j_operator"]

BUILTIN = ("sp4", "g2", "sp6")


class ModelError(ValueError):
    pass


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class FrameReport:
    model: str
    checks: list[Check]
    growth_quotient: tuple[int, ...] = ()
    growth_full: tuple[int, ...] = ()
    kernel_matrices: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failed(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]


@dataclass
class Residual:
    name: str
    value: Expr

    @property
    def vanishes(self) -> bool:
        return self.value.is_zero()


@dataclass
class InvariantResult:
    name: str
    value: Expr
    vanishes_at_F0: bool
    expected: Expr | None = None

    @property
    def matches(self) -> bool | None:
        return None if self.expected is None else (self.value - self.expected).is_zero()


@dataclass
class G0StructureComponents:
    """Coefficient rows of W and V over the kernel dual coframe (k, kb)."""
    W: dict[str, Expr]
    V: list[list[dict[str, Expr]]]
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


# ---------------------------------------------------------------------------
# loading

@dataclass
class CRModel:
    name: str
    chart: tuple[str, ...]
    env: dict[str, Expr]
    defining: list[tuple[str, Expr]]          # (transverse variable, real part of w)
    tangency_sign: int
    L: dict[str, VectorField]
    K: dict[str, VectorField]
    data: dict

    @property
    def holomorphic(self) -> list[str]:
        return [v for v in self.chart if v.startswith("z") and not v.startswith("zb")]

    @property
    def transverse(self) -> list[str]:
        return [v for v in self.chart if v.startswith("u")]

    def conj(self, label: str) -> str:
        return label[:1] + "b" + label[1:] if label[1:2] != "b" else label[:1] + label[2:]

    def field(self, label: str) -> VectorField:
        """L1, K11 and their conjugates Lb1, Kb11."""
        if label in self.L:
            return self.L[label]
        if label in self.K:
            return self.K[label]
        base = self.conj(label)
        if base in self.L or base in self.K:
            return self.field(base).conjugate()
        raise ModelError(f"{self.name} has no frame field {label!r}")

    def parse(self, text: str, extra: Mapping[str, Expr] | None = None) -> Expr:
        env = dict(self.env)
        if extra:
            env.update(extra)
        return S.parse(text, env)

    @property
    def target(self):
        t = self.data["target"]
        rs = build_root_system(SimpleLieType(t["family"], t["rank"]))
        return bigrade(rs, t["sigma1"], t["sigma2"])


def _marker(k: int) -> str:
    return f"t{101 + k}"


def _parse_field(text: str, chart: tuple[str, ...], env: dict[str, Expr], label: str) -> VectorField:
    marks = {f"d_{v}": S.var(_marker(k)) for k, v in enumerate(chart)}
    try:
        e = S.parse(text, {**env, **marks})
    except S.ParseError as exc:
        if "unknown name" in str(exc) and text[exc.position:exc.position + 2].startswith("d_"):
            raise ModelError(f"field {label}: derivative outside the chart at position {exc.position}") from None
        raise
    coeffs = {v: S.diff(e, _marker(k)) for k, v in enumerate(chart)}
    rest = e - sum((coeffs[v] * marks[f"d_{v}"] for v in chart), S.ZERO)
    if not rest.is_zero():
        raise ModelError(f"field {label} is not linear in the chart derivatives")
    for v, c in coeffs.items():
        if any(n.startswith("t1") and n in {_marker(k) for k in range(len(chart))} for n in c.variables()):
            raise ModelError(f"field {label}: coefficient of d_{v} contains derivative markers")
    return VectorField(chart, coeffs)


def _resolve(spec: str | Path | dict) -> dict:
    if isinstance(spec, dict):
        return spec
    p = Path(spec)
    if str(spec) in BUILTIN:
        return json.loads(resources.files("crfund").joinpath(f"data/models/{spec}.json").read_text())
    if not p.exists():
        raise ModelError(f"no built-in model or file named {spec!r}")
    return json.loads(p.read_text())


_cache: dict[str, CRModel] = {}


def load_model(spec: str | Path | dict) -> CRModel:
    """Load a model definition (built-in name, JSON path or parsed dict)."""
    key = spec if isinstance(spec, str) and spec in BUILTIN else None
    if key and key in _cache:
        return _cache[key]
    data = _resolve(spec)
    for req in ("name", "variables", "frames", "target"):
        if req not in data:
            raise ModelError(f"model definition lacks {req!r}")
    hol, real = [], []
    for v in data["variables"]:
        kind = v.get("kind")
        if kind == "holomorphic":
            if not v["name"].startswith("z"):
                raise ModelError(f"holomorphic variable {v['name']!r} must be named z<k>")
            hol.append(v["name"])
        elif kind == "real":
            if not v["name"].startswith("u"):
                raise ModelError(f"real variable {v['name']!r} must be named u<k>")
            real.append(v["name"])
        else:
            raise ModelError(f"unknown variable kind {kind!r}")
    chart = tuple(hol + ["zb" + z[1:] for z in hol] + real)
    env: dict[str, Expr] = {}
    radicals = {r["symbol"]: r["square_expr"] for r in data.get("radicals", [])}
    pending = list(data.get("aux", []))
    # aux polynomials first (radical squares refer to them), then the radicals
    for a in pending:
        e = S.parse(a["expr"], env)
        env[a["name"]] = e
        env[a["name"] + "b"] = S.conjugate(e)
    for sym, sq in radicals.items():
        try:
            env[sym] = S.declare_radical(sym, S.parse(sq, env))
        except S.SymcasError as exc:
            raise ModelError(f"radical {sym}: {exc}") from None
    defining = []
    for d in data.get("defining", []):
        defining.append((d["transverse"], S.parse(d["expr"], env)))
    L = {f["label"]: _parse_field(f["field"], chart, env, f["label"]) for f in data["frames"].get("L", [])}
    K = {f["label"]: _parse_field(f["field"], chart, env, f["label"]) for f in data["frames"].get("K", [])}
    if not L or not K:
        raise ModelError("a model needs at least one L field and one K field")
    m = CRModel(data["name"], chart, env, defining, int(data.get("tangency_sign", 1)), L, K, data)
    bg = m.target
    if len(L) != bg.dim(-1, -1):
        raise ModelError(f"{len(L)} L fields but dim g_(-1,-1) = {bg.dim(-1, -1)} for the target bigrading")
    if len(K) != bg.dim(0, 1):
        raise ModelError(f"{len(K)} K fields but dim g_(0,1) = {bg.dim(0, 1)} for the target bigrading")
    if key:
        _cache[key] = m
    return m


def builtin_models() -> list[str]:
    return list(BUILTIN)


# ---------------------------------------------------------------------------
# frame decomposition

def _solve(mat: list[list[Expr]], rhs: list[list[Expr]]) -> list[list[Expr]]:
    """Solve mat * X = rhs over the expression field (mat square, invertible)."""
    n = len(mat)
    rows = [list(mat[r]) + list(rhs[r]) for r in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not rows[r][col].is_zero()), None)
        if piv is None:
            raise ModelError("frame is degenerate on the chart")
        rows[col], rows[piv] = rows[piv], rows[col]
        inv = rows[col][col].inverse()
        rows[col] = [x * inv if not x.is_zero() else x for x in rows[col]]
        for r in range(n):
            f = rows[r][col]
            if r != col and not f.is_zero():
                rows[r] = [a - f * b if not b.is_zero() else a for a, b in zip(rows[r], rows[col])]
    return [row[n:] for row in rows]


class _Frame:
    """Coordinates of vector fields in (L, K, Lb, Kb, d/du)."""

    def __init__(self, m: CRModel):
        self.m = m
        self.hol_labels = list(m.L) + list(m.K)
        self.labels = self.hol_labels + [m.conj(x) for x in self.hol_labels] + [f"d_{u}" for u in m.transverse]
        zs = m.holomorphic
        if len(self.hol_labels) != len(zs):
            raise ModelError(f"{len(self.hol_labels)} (1,0) fields for {len(zs)} holomorphic coordinates")
        mat = [[m.field(x).coefficient(z) for x in self.hol_labels] for z in zs]
        ident = [[S.ONE if r == c else S.ZERO for c in range(len(zs))] for r in range(len(zs))]
        self.inv = _solve(mat, ident)
        self.inv_bar = [[S.conjugate(x) for x in row] for row in self.inv]
        self._fields = {x: m.field(x) for x in self.labels if not x.startswith("d_")}

    def coords(self, X: VectorField) -> dict[str, Expr]:
        m = self.m
        zs = m.holomorphic
        n = len(zs)
        a = [sum((self.inv[r][c] * X.coefficient(zs[c]) for c in range(n)), S.ZERO) for r in range(n)]
        b = [sum((self.inv_bar[r][c] * X.coefficient("zb" + zs[c][1:]) for c in range(n)), S.ZERO) for r in range(n)]
        out = {}
        for lab, x in zip(self.hol_labels, a):
            out[lab] = x
        for lab, x in zip(self.hol_labels, b):
            out[m.conj(lab)] = x
        for u in m.transverse:
            c = X.coefficient(u)
            for lab, x in out.items():
                if not lab.startswith("d_") and not x.is_zero():
                    c = c - x * self._fields[lab].coefficient(u)
            out[f"d_{u}"] = c
        return out


_frames: dict[int, _Frame] = {}


def _frame(m: CRModel) -> _Frame:
    f = _frames.get(id(m))
    if f is None:
        f = _frames[id(m)] = _Frame(m)
    return f


def _tdims(m: CRModel) -> int:
    return len(m.transverse)


# ---------------------------------------------------------------------------
# verification of the frame algebra

def _growth(m: CRModel, fr: _Frame, gens: list[str], quotient: bool) -> tuple[int, ...]:
    keep = [x for x in fr.labels if not x.startswith("d_")]
    if quotient:
        kern = set(m.K) | {m.conj(k) for k in m.K}
        keep = [x for x in keep if x not in kern]
    keep += [f"d_{u}" for u in m.transverse]

    def vec(X):
        c = fr.coords(X)
        return [c[x] for x in keep]

    fields = [m.field(g) for g in gens]
    basis = [vec(X) for X in fields]
    out = [S.span_rank(basis)]
    layer = fields
    total = len(keep)
    while out[-1] < total:
        new = []
        for g in fields:
            for f in layer:
                Y = S.lie_bracket(g, f)
                v = vec(Y)
                if S.span_rank(basis + [v]) > len(S._eliminate(basis)):
                    basis.append(v)
                    new.append(Y)
        r = S.span_rank(basis)
        if r == out[-1]:
            break
        out.append(r)
        layer = new
    return tuple(out)


def kernel_matrices(m: CRModel) -> dict[str, list[list[Expr]]]:
    """[K_k, Lb_j] projected to the L_i directions: matrix entry (i, j)."""
    fr = _frame(m)
    out = {}
    Ls = list(m.L)
    for k, K in m.K.items():
        mat = [[S.ZERO] * len(Ls) for _ in Ls]
        for j, lj in enumerate(Ls):
            c = fr.coords(S.lie_bracket(K, m.field(m.conj(lj))))
            for i, li in enumerate(Ls):
                mat[i][j] = c[li]
        out[k] = mat
    return out


def verify_frame(m: CRModel) -> FrameReport:
    fr = _frame(m)
    checks: list[Check] = []
    for u, h in m.defining:
        checks.append(Check(f"defining equation for {u} is real", S.conjugate(h) == h,
                            "" if S.conjugate(h) == h else f"imaginary part: {((h - S.conjugate(h)) / 2).to_str()}"))
    sign = S.I * m.tangency_sign
    for lab in list(m.L) + list(m.K):
        X = m.field(lab)
        bad = []
        for u, h in m.defining:
            r = X(S.var(u)) - sign * X(h)
            if not r.is_zero():
                bad.append(f"{u}: {r.to_str()}")
        checks.append(Check(f"{lab} tangent to the defining equations", not bad, "; ".join(bad)))
    bg = m.target
    checks.append(Check("frame sizes match the target bigrading",
                        len(m.L) == bg.dim(-1, -1) and len(m.K) == bg.dim(0, 1),
                        f"L: {len(m.L)} vs {bg.dim(-1, -1)}, K: {len(m.K)} vs {bg.dim(0, 1)}"))
    hol = list(m.L) + list(m.K)
    D = hol + [m.conj(x) for x in hol]
    kern = list(m.K) + [m.conj(k) for k in m.K]
    bar_labels = [m.conj(x) for x in hol] + [f"d_{u}" for u in m.transverse]
    bad = []
    for a in range(len(hol)):
        for b in range(a + 1, len(hol)):
            c = fr.coords(S.lie_bracket(m.field(hol[a]), m.field(hol[b])))
            off = [x for x in bar_labels if not c[x].is_zero()]
            if off:
                bad.append(f"[{hol[a]},{hol[b]}] has {off}")
    checks.append(Check("D^(1,0) is involutive", not bad, "; ".join(bad)))
    bad = []
    for k in kern:
        for x in D:
            if x == k:
                continue
            c = fr.coords(S.lie_bracket(m.field(k), m.field(x)))
            off = [u for u in c if u.startswith("d_") and not c[u].is_zero()]
            if off:
                bad.append(f"[{k},{x}] leaves D")
    checks.append(Check("Levi kernel: [K, D] in D", not bad, "; ".join(bad)))
    mats = kernel_matrices(m)
    expected = m.data.get("kernel_action", {})
    bad = []
    for k, mat in mats.items():
        want = expected.get(k)
        if want is None:
            continue
        for i, row in enumerate(mat):
            for j, x in enumerate(row):
                if x != Expr.const(want[i][j]):
                    bad.append(f"{k}: entry ({i + 1},{j + 1}) is {x.to_str()}, expected {want[i][j]}")
    checks.append(Check("kernel fields map Lb onto L modulo the Levi kernel", not bad, "; ".join(bad)))
    flat = [[x for row in mat for x in row] for mat in mats.values()]
    r = S.span_rank(flat)
    checks.append(Check("kernel action is injective", r == len(m.K), f"rank {r} of {len(m.K)}"))
    q = _growth(m, fr, list(m.L) + [m.conj(x) for x in m.L], quotient=True)
    full = _growth(m, fr, D, quotient=False)
    want = m.data.get("growth", {})
    if "quotient" in want:
        checks.append(Check("growth vector modulo the Levi kernel", q == tuple(want["quotient"]),
                            f"computed {q}, expected {tuple(want['quotient'])}"))
    if "full" in want:
        checks.append(Check("growth vector of D", full == tuple(want["full"]),
                            f"computed {full}, expected {tuple(want['full'])}"))
    neg = bg.grading.negative_dims()
    partial = tuple(sum(neg[:j + 1]) for j in range(len(neg)))
    checks.append(Check("quotient growth equals the graded dimensions of g_-", q == partial,
                        f"{q} vs {partial}"))
    return FrameReport(m.name, checks, q, full, mats)


# ---------------------------------------------------------------------------
# deformations

def deformation(m: CRModel, F: Expr | None = None) -> dict[str, Expr]:
    """The printed solution family; F replaces the formal function if given."""
    d = m.data.get("deformation")
    if not d:
        raise ModelError(f"{m.name} has no deformation family")
    out = {}
    for name, text in d["components"].items():
        e = m.parse(text)
        if F is not None:
            e = S.instantiate(e, F, d["arity"])
        out[name] = e
    return out


def deformed_frame(m: CRModel, G: Mapping[str, Expr]) -> dict[str, VectorField]:
    d = m.data["deformation"]["deformed_frame"]
    out = {}
    for lab, L in m.L.items():
        X = L
        for comp, k in d.get(lab, []):
            X = X + m.field(m.conj(k)).scale(G[comp])
        out[lab] = X
    return out


def integrability_residuals(m: CRModel, G: Mapping[str, Expr] | None = None) -> list[Residual]:
    """Obstructions to involutivity of span(L_i + G.Kb, K).

    Each bracket of the deformed (1,0) frame is decomposed in the undeformed
    frame; it lies in the deformed span iff its Lb and transverse parts vanish
    and its Kb part equals the G-image of its L part.
    """
    if G is None:
        G = deformation(m)
    fr = _frame(m)
    Lp = deformed_frame(m, G)
    spec = m.data["deformation"]["deformed_frame"]
    gmap = {(lab, m.conj(k)): G[comp] for lab, pairs in spec.items() for comp, k in pairs}
    gens = list(Lp.items()) + [(k, m.field(k)) for k in m.K]
    kb = [m.conj(k) for k in m.K]
    out = []
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            (na, X), (nb, Y) = gens[a], gens[b]
            c = fr.coords(S.lie_bracket(X, Y))
            for lab in [m.conj(x) for x in m.L] + [f"d_{u}" for u in m.transverse]:
                out.append(Residual(f"[{na},{nb}]:{lab}", c[lab]))
            for k in kb:
                val = c[k] - sum((c[lab] * gmap.get((lab, k), S.ZERO) for lab in m.L), S.ZERO)
                out.append(Residual(f"[{na},{nb}]:{k}", val))
    return out


def printed_pde_residuals(m: CRModel, G: Mapping[str, Expr] | None = None) -> list[Residual]:
    if G is None:
        G = deformation(m)
    out = []
    for p in m.data["deformation"].get("printed_pde", []):
        g = G[p["component"]]
        out.append(Residual(f"{p['field']}({p['component']}) + ({p['coefficient']}) {p['component']}",
                            m.field(p["field"])(g) + m.parse(p["coefficient"]) * g))
    return out


# ---------------------------------------------------------------------------
# twisted kernel derivatives

def twisted_apply(m: CRModel, op: str, f: Expr, label: str) -> Expr:
    """Kernel-field derivative plus the g_0 weight term a(f) * unit * f."""
    key = f"{op}|{label}"
    weights = m.data.get("weights", {})
    if key not in weights:
        raise ModelError(f"no weight declared for {key!r} in model {m.name}")
    unit = m.data.get("weight_unit", {}).get(op)
    if unit is None:
        raise ModelError(f"no weight unit for operator {op!r}")
    field_label = {"K": "K11", "Kb": "Kb11"}.get(op, op)
    out = m.field(field_label)(f)
    a = weights[key]
    if a:
        out = out + a * m.parse(unit) * f
    return out


class _Ops:
    """Operator calculus on G11 and its conjugate for the sp4 model."""

    def __init__(self, m: CRModel, G: Expr):
        self.m = m
        self.vals = {"G11": G, "Gb11": S.conjugate(G)}

    def get(self, label: str) -> Expr:
        if label not in self.vals:
            op, inner = label.split("(", 1)
            inner = inner[:-1]
            self.vals[label] = twisted_apply(self.m, op, self.get(inner), inner)
        return self.vals[label]

    def field(self, label: str, f: Expr) -> Expr:
        return self.m.field(label)(f)


def invariant_W_sp4(m: CRModel, G: Expr | None = None, conjugated: bool = False) -> InvariantResult:
    """W = -(2/9) Kb(G) - (1/9) K(K(Gb)); ``conjugated`` evaluates the conjugate formula."""
    _require(m, "sp4")
    formal = G is None
    if G is None:
        G = deformation(m)["G11"]
    o = _Ops(m, G)
    if conjugated:
        W = Fraction(-2, 9) * o.get("K(Gb11)") - Fraction(1, 9) * o.get("Kb(Kb(G11))")
    else:
        W = Fraction(-2, 9) * o.get("Kb(G11)") - Fraction(1, 9) * o.get("K(K(Gb11))")
    expected = printed_W_sp4(m) if formal and not conjugated else None
    return InvariantResult("W", W, _vanishes_at_zero(m, W), expected)


def _atom_env(m: CRModel) -> dict[str, Expr]:
    """F_, F_1, F_1_2, Fb_... bound to derivative atoms at the deformation arguments."""
    d = m.data["deformation"]
    G = m.parse(d["components"][next(iter(d["components"]))])
    atoms = [a for a in G.atoms() if a.name == "F" and not a.index]
    if not atoms:
        raise ModelError("deformation has no formal function")
    args = atoms[0].args
    bargs = tuple(S.conjugate(a) for a in args)
    env = {}
    n = len(args)
    idxs = [()] + [(i,) for i in range(1, n + 1)] + [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
    for idx in idxs:
        suffix = "_".join(map(str, idx))
        env["F_" + suffix] = S.formal("F", args, idx)
        env["Fb_" + suffix] = S.formal("Fb", bargs, idx)
    # derivatives named by the argument they differentiate, when arguments are plain variables
    names = [a.to_str() for a in args]
    for idx in idxs:
        if all(names[i - 1].startswith(("z", "zb")) and names[i - 1].replace("zb", "").replace("z", "").isdigit()
               for i in idx):
            env["F_" + "_".join(names[i - 1] for i in idx)] = S.formal("F", args, idx)
            env["Fb_" + "_".join(S.conjugate(args[i - 1]).to_str() for i in idx)] = S.formal("Fb", bargs, idx)
    return env


def printed_W_sp4(m: CRModel) -> Expr:
    return m.parse(m.data["invariants"]["W"]["printed_expansion"], _atom_env(m))


def atom_coefficients(e: Expr) -> dict[str, Expr]:
    """Coefficients of an expression linear in derivative atoms, keyed by atom display."""
    gens = {S._atom_gen(a): a for a in e.atoms()}
    out = {}
    for g, a in gens.items():
        vals = {h: (S.ONE if h == g else S.ZERO) for h in gens}
        out[a.display()] = S.substitute(e, vals)
    rest = S.substitute(e, {h: S.ZERO for h in gens})
    if not rest.is_zero():
        out["1"] = rest
    return out


def _vanishes_at_zero(m: CRModel, e: Expr) -> bool:
    arity = m.data.get("deformation", {}).get("arity", 1)
    return S.instantiate(e, S.ZERO, arity).is_zero()


def _require(m: CRModel, name: str):
    if m.name != name:
        raise ModelError(f"this invariant is defined for the {name} model, not {m.name}")


def j_operator(m: CRModel, G: Expr) -> Expr:
    """J as the printed operator expression in G, Kb, L1 and Lb1."""
    o = _Ops(m, G)
    L1 = lambda f: o.field("L1", f)
    Lb1 = lambda f: o.field("Lb1", f)
    g = o.get("G11")
    k1 = o.get("Kb(G11)")
    k2 = o.get("Kb(Kb(G11))")
    k3 = o.get("Kb(Kb(Kb(G11)))")
    lb_g = Lb1(g)
    bracket = L1(lb_g) - Lb1(L1(g))
    q = Fraction
    return (q(-1, 144) * g * k1 * k2 - q(1, 12) * bracket + q(1, 324) * k1 ** 3
            + q(1, 144) * L1(L1(k1)) - q(1, 48) * L1(lb_g) + q(1, 144) * L1(g) * k2
            + q(1, 144) * k3 * g ** 2 + q(1, 72) * g * L1(k2) + q(1, 72) * k1 * lb_g
            - q(1, 72) * k1 * L1(k1) - q(1, 72) * g * Lb1(k1))


def invariant_J_sp4(m: CRModel, G: Expr | None = None) -> InvariantResult:
    _require(m, "sp4")
    if G is None:
        G = deformation(m)["G11"]
    J = j_operator(m, G)
    return InvariantResult("J", J, _vanishes_at_zero(m, J))


def random_instantiation(rng: random.Random, arity: int, terms: int = 4, degree: int = 2) -> Expr:
    """A random polynomial in t1..t<arity> with Gaussian-rational coefficients."""
    out = S.ZERO
    for _ in range(terms):
        mono = S.ONE
        for _ in range(rng.randint(0, degree)):
            mono = mono * S.var(f"t{rng.randint(1, arity)}")
        c = Expr.const(Fraction(rng.randint(-5, 5), rng.randint(1, 3))) + S.I * Fraction(rng.randint(-5, 5), rng.randint(1, 3))
        out = out + c * mono
    return out


def j_two_paths(m: CRModel, F: Expr, J_formal: Expr | None = None) -> tuple[Expr, Expr]:
    """(J computed formally then instantiated, J computed from the instantiated G)."""
    arity = m.data["deformation"]["arity"]
    if J_formal is None:
        J_formal = invariant_J_sp4(m).value
    first = S.instantiate(J_formal, F, arity)
    second = j_operator(m, deformation(m, F)["G11"])
    return first, second


def invariant_g2(m: CRModel, G: Expr | None = None) -> tuple[InvariantResult, list[Residual]]:
    """G11 itself is the invariant; returned with its integrability residuals."""
    _require(m, "g2")
    comps = deformation(m) if G is None else {"G11": G}
    res = printed_pde_residuals(m, comps)
    g = comps["G11"]
    return InvariantResult("G11bar", g, _vanishes_at_zero(m, g)), res


def derived_pde(m: CRModel, component: str = "G11", field_label: str | None = None) -> tuple[str, Expr, list[Residual]]:
    """The first-order PDE X(G) + c G = 0 forced by integrability, for a generic G.

    G is replaced by a formal function of every chart variable; the surviving
    integrability residuals must all be proportional to X(G) + c G.  Returns
    (X, c, residuals of the deformation family against the derived equation).
    """
    d = m.data["deformation"]
    if field_label is None:
        printed = [p for p in d.get("printed_pde", []) if p["component"] == component]
        field_label = printed[0]["field"] if printed else next(iter(m.K))
    H = S.formal("F", [S.var(v) for v in m.chart])
    XH = m.field(field_label)(H)
    hkey = H.atoms()[0].display()
    kco = atom_coefficients(XH)
    probe = next(k for k in kco if k != hkey and k != "1")
    c = None
    for r in integrability_residuals(m, {component: H}):
        if r.vanishes:
            continue
        co = atom_coefficients(r.value)
        alpha = co.get(probe, S.ZERO) / kco[probe]
        if alpha.is_zero():
            raise ModelError(f"residual {r.name} does not contain {field_label}(G)")
        beta = co.get(hkey, S.ZERO)
        if not (r.value - alpha * XH - beta * H).is_zero():
            raise ModelError(f"residual {r.name} is not of the form a {field_label}(G) + b G")
        cr = beta / alpha
        if c is not None and not (cr - c).is_zero():
            raise ModelError("integrability gives two inequivalent first-order equations")
        c = cr
    if c is None:
        raise ModelError("every deformation is integrable; no equation to derive")
    g = deformation(m)[component]
    res = [Residual(f"{field_label}({component}) + c {component}", m.field(field_label)(g) + c * g)]
    return field_label, c, res


# ---------------------------------------------------------------------------
# Cartan connection in the sp(2N+2) matrix model
#
# Blocks (1, N, N, 1).  Column 0 holds (W, x, y, t): x is the Lb direction,
# y the L direction, t the transverse one.  The middle block is
# [[A, B], [C, -A^T]] with B the Kb directions and C the K directions.
# The remaining entries follow from X_rc = s_r s_pi(c) X_pi(c),pi(r).

class _Sp:
    def __init__(self, N: int):
        self.N = N
        self.n = n = 2 * N + 2
        self.pi = {0: n - 1, n - 1: 0}
        self.s = {0: 1, n - 1: -1}
        for i in range(1, N + 1):
            self.pi[i], self.s[i] = N + i, 1
            self.pi[N + i], self.s[N + i] = i, -1

    def zero(self):
        return [[S.ZERO] * self.n for _ in range(self.n)]

    def build(self, W=None, x=None, y=None, t=None, A=None, B=None, C=None):
        N, n = self.N, self.n
        X = self.zero()
        if W is not None:
            X[0][0] = W
        for i in range(N):
            if x:
                X[1 + i][0] = x[i]
            if y:
                X[N + 1 + i][0] = y[i]
            for j in range(N):
                if A:
                    X[1 + i][1 + j] = A[i][j]
                    X[N + 1 + j][N + 1 + i] = -A[i][j]
                if B:
                    X[1 + i][N + 1 + j] = B[i][j]
                if C:
                    X[N + 1 + i][1 + j] = C[i][j]
        if t is not None:
            X[n - 1][0] = t
        for c in range(1, n - 1):
            X[n - 1][c] = -self.s[self.pi[c]] * X[self.pi[c]][0]
        for r in range(1, n - 1):
            X[r][n - 1] = self.s[r] * X[0][self.pi[r]]
        X[n - 1][n - 1] = -X[0][0]
        return X

    def unit(self, N, i, j):
        return [[S.ONE if (a, b) == (i, j) else S.ZERO for b in range(N)] for a in range(N)]


def _mm(X, Y):
    n = len(X)
    return [[sum((X[r][k] * Y[k][c] for k in range(n) if not X[r][k].is_zero() and not Y[k][c].is_zero()), S.ZERO)
             for c in range(n)] for r in range(n)]


def _br(X, Y):
    a, b = _mm(X, Y), _mm(Y, X)
    return [[a[r][c] - b[r][c] for c in range(len(X))] for r in range(len(X))]


def _madd(*Ms):
    n = len(Ms[0])
    return [[sum((M[r][c] for M in Ms), S.ZERO) for c in range(n)] for r in range(n)]


def _mscale(f, M):
    return [[f * x for x in row] for row in M]


def _lin_solve(rows: list[list[Expr]], rhs: list[Expr]) -> list[Expr]:
    """Exact solution of an overdetermined but consistent linear system."""
    m_ = len(rows[0])
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    piv, r = [], 0
    for col in range(m_):
        p = next((i for i in range(r, len(aug)) if not aug[i][col].is_zero()), None)
        if p is None:
            continue
        aug[r], aug[p] = aug[p], aug[r]
        inv = aug[r][col].inverse()
        aug[r] = [x * inv for x in aug[r]]
        for i in range(len(aug)):
            if i != r and not aug[i][col].is_zero():
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        piv.append(col)
        r += 1
    for i in range(r, len(aug)):
        if not aug[i][m_].is_zero():
            raise ModelError("structure equations are inconsistent")
    if len(piv) < m_:
        raise ModelError("structure equations do not determine the connection")
    sol = [S.ZERO] * m_
    for i, col in enumerate(piv):
        sol[col] = aug[i][m_]
    return sol


class _Cartan:
    """Frame data for the matrix model of a C-type model with Sigma1 = {1}."""

    def __init__(self, m: CRModel):
        t = m.data["target"]
        if t["family"] != "C" or t["sigma1"] != [1]:
            raise ModelError(f"{m.name}: the matrix model needs a C-type target with Sigma1 = {{1}}")
        if len(m.transverse) != 1:
            raise ModelError("the matrix model needs a single transverse direction")
        self.m = m
        self.N = N = len(m.L)
        self.sp = _Sp(N)
        self.fr = _frame(m)
        self.Ls = list(m.L)
        self.Lbs = [m.conj(x) for x in self.Ls]
        self.Ks = list(m.K)
        self.Kbs = [m.conj(k) for k in self.Ks]
        u = m.transverse[0]
        self.du = f"d_{u}"
        L1 = self.Ls[0]
        self.phi = self.fr.coords(S.lie_bracket(m.field(L1), m.field(m.conj(L1))))[self.du] / 2
        self.T = VectorField(m.chart, {u: self.phi})
        self.kern = {}
        for k in self.Ks:
            i, j = int(k[-2]) - 1, int(k[-1]) - 1
            M = [[S.ZERO] * N for _ in range(N)]
            M[i][j] = M[j][i] = S.ONE
            self.kern[k] = M

    def e(self, i):
        return [S.ONE if k == i else S.ZERO for k in range(self.N)]

    def basis(self, lab):
        """The g_- element attached to a frame label."""
        if lab == "T":
            return self.sp.build(t=S.ONE)
        if lab in self.Ls:
            return self.sp.build(y=self.e(self.Ls.index(lab)))
        return self.sp.build(x=self.e(self.Lbs.index(lab)))

    def field(self, lab):
        return self.T if lab == "T" else self.m.field(lab)

    def gminus(self, M):
        N = self.N
        return [M[1 + i][0] for i in range(N)] + [M[N + 1 + i][0] for i in range(N)] + [M[self.sp.n - 1][0]]

    def coords_minus(self, Z):
        c = self.fr.coords(Z)
        return [c[a] for a in self.Lbs] + [c[a] for a in self.Ls] + [c[self.du] / self.phi]

    def g0_units(self):
        sp, N = self.sp, self.N
        return [sp.build(W=S.ONE)] + [sp.build(A=sp.unit(N, i, j)) for i in range(N) for j in range(N)]

    def omega_of(self, om, Z):
        out = self.sp.zero()
        for lab, x in self.fr.coords(Z).items():
            if x.is_zero():
                continue
            if lab == self.du:
                out = _madd(out, _mscale(x / self.phi, om["T"]))
            else:
                out = _madd(out, _mscale(x, om[lab]))
        return out

    def curvature(self, om, X, Y):
        Xf, Yf = self.field(X), self.field(Y)
        return _madd([[Xf(v) for v in row] for row in om[Y]],
                     _mscale(-S.ONE, [[Yf(v) for v in row] for row in om[X]]),
                     _mscale(-S.ONE, self.omega_of(om, S.lie_bracket(Xf, Yf))),
                     _br(om[X], om[Y]))


_cartans: dict[int, _Cartan] = {}


def _cartan(m: CRModel) -> _Cartan:
    c = _cartans.get(id(m))
    if c is None:
        c = _cartans[id(m)] = _Cartan(m)
    return c


_g0_cache: dict[int, dict] = {}


def _g0_solve(m: CRModel) -> dict[str, tuple[Expr, list[list[Expr]]]]:
    """g_00 parts (W, A) of omega on the kernel fields.

    Homogeneity-0 curvature vanishes: for each kernel field X and each
    Y in (L, Lb, T) the g_- part of omega([X, Y]) equals [omega(X), e_Y].
    """
    if id(m) in _g0_cache:
        return _g0_cache[id(m)]
    ca = _cartan(m)
    sp, N = ca.sp, ca.N
    units = ca.g0_units()
    out = {}
    for X in ca.Ks + ca.Kbs:
        if X in ca.Ks:
            base = sp.build(C=ca.kern[X])
        else:
            base = sp.build(B=ca.kern[m.conj(X)])
        rows, rhs = [], []
        for Y in ca.Ls + ca.Lbs + ["T"]:
            eY = ca.basis(Y)
            lhs = ca.coords_minus(S.lie_bracket(ca.field(X), ca.field(Y)))
            b0 = ca.gminus(_br(base, eY))
            cols = [ca.gminus(_br(U, eY)) for U in units]
            for k in range(len(lhs)):
                rows.append([c[k] for c in cols])
                rhs.append(lhs[k] - b0[k])
        sol = _lin_solve(rows, rhs)
        out[X] = (sol[0], [[sol[1 + N * i + j] for j in range(N)] for i in range(N)])
    _g0_cache[id(m)] = out
    return out


_MARKS = ("k11", "k12", "k22", "kb11", "kb12", "kb22")


def _coframe_coeffs(m: CRModel, text: str) -> dict[str, Expr]:
    """Coefficients of a 1-form written over the kernel coframe k.., kb.."""
    out = {}
    for k in _MARKS:
        env = {x: (S.ONE if x == k else S.ZERO) for x in _MARKS}
        out[k] = m.parse(text, env)
    return out


def _at_origin(m: CRModel, e: Expr) -> Expr:
    return S.substitute(e, {v: S.ZERO for v in m.chart if not v.startswith("u")})


def sp6_g0_structure(m: CRModel) -> G0StructureComponents:
    """Recompute W and V on the kernel fields and compare with the printed table.

    Printed coefficients are per coframe symbol; a symmetric pair such as
    (k12 + k21) is stored once under k12 and evaluated on the field K12.
    """
    _require(m, "sp6")
    ca = _cartan(m)
    N = ca.N
    sol = _g0_solve(m)
    labels = ca.Ks + ca.Kbs
    Wd = {X: sol[X][0] for X in labels}
    V = [[{X: sol[X][1][i][j] for X in labels} for j in range(N)] for i in range(N)]
    printed = m.data["g0_structure"]["printed"]
    checks = []

    def compare(name, comp, text):
        co = _coframe_coeffs(m, text)
        bad = []
        for X in labels:
            want = co[X.lower()]
            if not (comp[X] - want).is_zero():
                ratio = comp[X] / want if not want.is_zero() else None
                r = ratio.to_str() if ratio is not None and not ratio.variables() else "not constant"
                bad.append(f"{X}: computed {comp[X].to_str()}, printed {want.to_str()} (ratio {r})")
        checks.append(Check(f"{name} matches the printed formula", not bad, "; ".join(bad)))

    compare("W", Wd, printed["W"])
    for i in range(N):
        for j in range(N):
            key = f"V{i + 1}{j + 1}"
            if isinstance(printed.get(key), str):
                compare(key, V[i][j], printed[key])
    bad = [X for X in labels
           if not (V[1][0][X] + S.conjugate(V[0][1][m.conj(X)])).is_zero()]
    checks.append(Check("V21 = -conj(V12)", not bad, ", ".join(bad)))
    nz = [f"{name}({X})" for name, comp in [("W", Wd)] + [(f"V{i + 1}{j + 1}", V[i][j]) for i in range(N) for j in range(N)]
          for X in labels if not _at_origin(m, comp[X]).is_zero()]
    checks.append(Check("all components vanish at z = 0", not nz, ", ".join(nz)))
    return G0StructureComponents(Wd, V, checks)


def _printed_connection(m: CRModel, F: Expr | None):
    """C-block tensor of omega on L_a from the printed table: entry 'ab^c' at [a][b][c]."""
    ca = _cartan(m)
    N = ca.N
    env = _atom_env(m)
    arity = m.data["deformation"]["arity"]
    Ct = [[[S.ZERO] * N for _ in range(N)] for _ in range(N)]
    for key, text in m.data["connection"]["omega_m10_01"].items():
        e = m.parse(text, env)
        if F is not None:
            e = S.instantiate(e, F, arity)
        a, b, c = int(key[0]) - 1, int(key[1]) - 1, int(key[3]) - 1
        Ct[a][b][c] = Ct[a][c][b] = e
    return Ct


def sp6_connection(m: CRModel, F: Expr | None = None) -> dict[str, list[list[Expr]]]:
    """omega on the frame (L, Lb, K, Kb, T) for the deformation family.

    The g_(0,+-1) parts on L and Lb come from the printed table and the
    deformation G; the g_00 parts on the kernel fields solve the
    homogeneity-0 equations; the g_00 parts on L, Lb are fixed by requiring
    the g_- part of the curvature on (L, Lb) pairs to vanish.
    """
    ca = _cartan(m)
    sp, N = ca.sp, ca.N
    G = deformation(m, F)
    Gt = [[[S.ZERO] * N for _ in range(N)] for _ in range(N)]
    for lab, pairs in m.data["deformation"]["deformed_frame"].items():
        a = ca.Ls.index(lab)
        for comp, k in pairs:
            i, j = int(k[-2]) - 1, int(k[-1]) - 1
            Gt[a][i][j] = Gt[a][j][i] = G[comp]
    Ct = _printed_connection(m, F)
    om = {}
    for a in range(N):
        om[ca.Ls[a]] = sp.build(y=ca.e(a), B=[[-x for x in r] for r in Gt[a]], C=Ct[a])
        om[ca.Lbs[a]] = sp.build(x=ca.e(a), B=[[S.conjugate(x) for x in r] for r in Ct[a]],
                                 C=[[-S.conjugate(x) for x in r] for r in Gt[a]])
    for X, (w, A) in _g0_solve(m).items():
        if X in ca.Ks:
            om[X] = sp.build(W=w, A=A, C=ca.kern[X])
        else:
            om[X] = sp.build(W=w, A=A, B=ca.kern[m.conj(X)])
    om["T"] = sp.build(t=S.ONE)
    _fix_torsion(ca, om)
    return om


def _fix_torsion(ca: _Cartan, om: dict):
    n = ca.sp.n
    labels = ca.Ls + ca.Lbs
    units = ca.g0_units()
    nu = len(units)
    col0 = lambda M: [M[r][0] for r in range(1, n)]
    rows, rhs = [], []
    for i, X in enumerate(labels):
        for Y in labels[i + 1:]:
            base = col0(ca.curvature(om, X, Y))
            cols = []
            for Z in labels:
                for U in units:
                    if Z == X:
                        cols.append(col0(_br(U, om[Y])))
                    elif Z == Y:
                        cols.append(col0(_br(om[X], U)))
                    else:
                        cols.append([S.ZERO] * (n - 1))
            for r in range(n - 1):
                rows.append([c[r] for c in cols])
                rhs.append(-base[r])
    sol = _lin_solve(rows, rhs)
    N = ca.N
    for k, Z in enumerate(labels):
        s = sol[k * nu:(k + 1) * nu]
        om[Z] = _madd(om[Z], ca.sp.build(W=s[0], A=[[s[1 + i * N + j] for j in range(N)] for i in range(N)]))


_R_LABEL = re.compile(r"R([+-])\[(\d)(\d)\^(\d)\]\[\^(\d)_(\d)\]$")

MIN_SELECTION = ("R+[11^1][^1_1]", "R+[12^2][^1_1]", "R-[11^1][^1_2]", "R-[22^2][^2_2]")


def sp6_printed_R(m: CRModel) -> dict[str, Expr]:
    """Printed curvature components, including those given as multiples of another."""
    env = _atom_env(m)
    out = {}
    for c in m.data["curvature"]:
        e = m.parse(c["expr"], env)
        out[c["label"]] = e
        if "also" in c:
            out[c["also"]["label"]] = e / m.parse(c["also"]["factor"])
    return out


def _R_value(ca: _Cartan, om: dict, label: str, cache: dict) -> Expr:
    """R+[ab^c][^d_e]: g_(0,1) entry (d,e) of kappa(L_a, Kb_bc); R- likewise with K and g_(0,-1)."""
    mt = _R_LABEL.match(label)
    if not mt:
        raise ModelError(f"bad curvature label {label!r}; expected e.g. R+[11^1][^1_1]")
    sg, a, b, c, d, e = mt.groups()
    a, d, e = int(a) - 1, int(d) - 1, int(e) - 1
    N = ca.N
    if max(a, d, e, int(b) - 1, int(c) - 1) >= N:
        raise ModelError(f"index out of range in {label!r}")
    kl = ("Kb" if sg == "+" else "K") + "".join(sorted(b + c))
    key = (a, kl)
    if key not in cache:
        cache[key] = ca.curvature(om, ca.Ls[a], kl)
    K = cache[key]
    return K[1 + d][N + 1 + e] if sg == "+" else K[N + 1 + d][1 + e]


def sp6_R_components(m: CRModel, F: Expr | None = None,
                     selection: Iterable[str] | None = None) -> list[InvariantResult]:
    """Curvature components from the structure equations, compared with the printed table.

    With F given, both sides are instantiated.
    """
    _require(m, "sp6")
    ca = _cartan(m)
    om = sp6_connection(m, F)
    printed = sp6_printed_R(m)
    labels = list(MIN_SELECTION if selection is None else selection)
    arity = m.data["deformation"]["arity"]
    cache: dict = {}
    out = []
    for lab in labels:
        v = _R_value(ca, om, lab, cache)
        want = printed.get(lab)
        if want is not None and F is not None:
            want = S.instantiate(want, F, arity)
        vz = _vanishes_at_zero(m, v) if F is None else None
        out.append(InvariantResult(lab, v, vz, want))
    return out


def flatness_components(m: CRModel, F: Expr) -> dict[str, Expr]:
    """The invariants of the model evaluated on the deformation with F instantiated."""
    if m.name == "sp4":
        G = deformation(m, F)["G11"]
        return {"W": invariant_W_sp4(m, G).value, "J": j_operator(m, G)}
    if m.name == "g2":
        return {"G11bar": deformation(m, F)["G11"]}
    if m.name == "sp6":
        labels = list(sp6_printed_R(m))
        return {r.name: r.value for r in sp6_R_components(m, F, labels)}
    raise ModelError(f"no invariants are known for model {m.name}")


def flatness_check(m: CRModel, F: Expr) -> bool:
    """True iff every computed invariant vanishes identically for this F."""
    return all(v.is_zero() for v in flatness_components(m, F).values())


def parse_instantiation(m: CRModel, text: str) -> Expr:
    """F as an expression in t1..tn; plain-variable arguments may be used by name."""
    d = m.data.get("deformation")
    if not d:
        raise ModelError(f"{m.name} has no deformation family")
    G = m.parse(d["components"][next(iter(d["components"]))])
    args = next(a for a in G.atoms() if a.name == "F").args
    env = {f"t{k}": S.var(f"t{k}") for k in range(1, d["arity"] + 1)}
    for k, a in enumerate(args, 1):
        name = a.to_str()
        if name in m.chart:
            env[name] = S.var(f"t{k}")
    try:
        return S.parse(text, env)
    except S.ParseError as exc:
        raise ModelError(f"cannot read F = {text!r}: {exc}") from None
