"""Command-line front end.

Every verb builds a report of named checks plus a results payload.  The
exit status is 0 when every check passes, 1 when one fails and 2 on a
usage error.  ``--json`` prints {command, inputs, checks, results}.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field

from . import crmodels as M
from . import grading as Gr
from . import harmonic as H
from . import symcas as S
from .rootsys import RootSystemError, SimpleLieType, build_root_system, chevalley_constants

PASS, FAIL, SKIP = "pass", "fail", "skip"

# |Phi+| and dim g for the exceptional types
CLASSICAL_COUNTS = {"G2": (6, 14), "F4": (24, 52), "E6": (36, 78), "E7": (63, 133), "E8": (120, 248)}


class UsageError(Exception):
    pass


@dataclass
class Report:
    command: str
    inputs: dict
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)

    def check(self, name: str, ok: bool | None, detail: str = ""):
        status = SKIP if ok is None else (PASS if ok else FAIL)
        self.checks.append({"name": name, "status": status, "detail": detail})

    @property
    def exit_code(self) -> int:
        return 1 if any(c["status"] == FAIL for c in self.checks) else 0

    def to_json(self) -> str:
        return json.dumps({"command": self.command, "inputs": self.inputs, "checks": self.checks,
                           "results": self.results}, indent=2, sort_keys=False)

    def to_text(self) -> str:
        lines = [f"{self.command}: {', '.join(f'{k}={v}' for k, v in self.inputs.items() if v is not None)}"]
        for c in self.checks:
            tail = f"  ({c['detail']})" if c["detail"] else ""
            lines.append(f"  [{c['status'].upper()}] {c['name']}{tail}")
        for k, v in self.results.items():
            if isinstance(v, dict) and v:
                lines.append(f"  {k}:")
                lines.extend(f"    {a}: {json.dumps(b)}" for a, b in v.items())
            else:
                lines.append(f"  {k}: {json.dumps(v)}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument helpers

def _lie_type(args) -> SimpleLieType:
    if not args.type:
        raise UsageError("--type is required")
    text = args.type.strip().upper()
    if args.rank is not None:
        text = text[0] + str(args.rank)
    elif len(text) == 1:
        raise UsageError("--rank is required unless --type includes it (e.g. G2)")
    try:
        return SimpleLieType.parse(text)
    except RootSystemError as exc:
        raise UsageError(str(exc)) from None


def _sigma(text: str | None, flag: str) -> tuple[int, ...]:
    if not text:
        raise UsageError(f"{flag} is required")
    try:
        return tuple(sorted({int(x) for x in text.replace(" ", "").split(",") if x}))
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated simple-root indices, got {text!r}") from None


def _model(args) -> M.CRModel:
    if not args.model:
        raise UsageError("--model is required")
    try:
        return M.load_model(args.model)
    except (M.ModelError, FileNotFoundError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load model {args.model!r}: {exc}") from None


def _s(e: S.Expr) -> str:
    return e.to_str()


def _pair(p) -> list[int]:
    return [int(x) for x in p]


def _excluded(m: M.CRModel) -> list[str]:
    return list(m.data.get("degenerate_locus", []))


# ---------------------------------------------------------------------------
# verbs

def cmd_roots(args) -> Report:
    t = _lie_type(args)
    rs = build_root_system(t)
    r = Report("roots", {"type": str(t)})
    npos = len(rs.positive_roots)
    r.results = {"positive_roots": npos, "dimension": rs.dimension, "highest_root": list(rs.highest_root),
                 "cartan_matrix": [list(row) for row in rs.cartan]}
    n = t.rank
    expected = {"A": (n * (n + 1) // 2, n * (n + 2)), "B": (n * n, n * (2 * n + 1)),
                "C": (n * n, n * (2 * n + 1)), "D": (n * (n - 1), n * (2 * n - 1))}.get(t.family)
    expected = expected or CLASSICAL_COUNTS[str(t)]
    r.check("|Phi+| and dim g equal the classical values", (npos, rs.dimension) == expected,
            f"computed {(npos, rs.dimension)}, classical {expected}")
    if args.oracle:
        sc = chevalley_constants(rs)
        r.check("Jacobi identity on all basis triples", sc.check_jacobi())
    return r


def cmd_grade(args) -> Report:
    t = _lie_type(args)
    s1 = _sigma(args.sigma1, "--sigma1")
    g = Gr.grade(build_root_system(t), s1)
    r = Report("grade", {"type": str(t), "sigma1": list(s1)})
    r.results = {"depth": g.depth, "component_dims": {str(k): v for k, v in g.component_dims.items()},
                 "negative_dims": list(g.negative_dims())}
    r.check("component dimensions sum to dim g", sum(g.component_dims.values()) == g.rs.dimension)
    r.check("g_a and g_-a have equal dimension",
            all(g.component_dims.get(-a) == d for a, d in g.component_dims.items()))
    return r


def cmd_bigrade(args) -> Report:
    t = _lie_type(args)
    s1, s2 = _sigma(args.sigma1, "--sigma1"), _sigma(args.sigma2, "--sigma2")
    bg = Gr.bigrade(build_root_system(t), s1, s2)
    rep = Gr.check_model_conditions(bg)
    r = Report("bigrade", {"type": str(t), "sigma1": list(s1), "sigma2": list(s2)})
    r.check("bigraded dimensions sum to dim g", sum(bg.component_dims.values()) == bg.rs.dimension)
    r.check("g_a,b and g_-a,-b have equal dimension",
            all(bg.dim(-a, -b) == d for (a, b), d in bg.component_dims.items()))
    r.results = {"component_dims": {f"{a},{b}": d for (a, b), d in bg.component_dims.items()},
                 "model_conditions": rep.conditions,
                 "deep_levels": {str(a): bs for a, bs in sorted(rep.deep_levels.items())},
                 "model": rep.ok}
    return r


def cmd_models(args) -> Report:
    if args.type:
        types = [_lie_type(args)]
    else:
        types = Gr.table_types()
    r = Report("models", {"type": str(types[0]) if args.type else "all"})
    out = {}
    for t in types:
        cmp = Gr.compare_with_tables(t)
        found = Gr.enumerate_models(t)
        out[str(t)] = {
            "scan": [[list(c.sigma1), list(c.sigma2)] for c in found],
            "missing": [[list(a), list(b)] for a, b in cmp.missing],
            "extra": [[list(a), list(b)] for a, b in cmp.extra],
        }
        detail = []
        if cmp.missing:
            detail.append(f"missing {cmp.missing}")
        if cmp.extra:
            detail.append(f"extra {cmp.extra}")
        bad = [e for e in cmp.excluded if e[-1] == "passes"]
        if bad:
            detail.append(f"restrictions drop passing pairs {[e[2] for e in bad]}")
        r.check(f"{t}: scan equals the classification fixture", cmp.ok, "; ".join(detail))
    singleton = all(len(s2) == 1 for v in out.values() for _, s2 in v["scan"])
    r.check("every admissible Sigma2 is a single root", singleton)
    r.results = {"types": out}
    return r


def cmd_harmonic(args) -> Report:
    t = _lie_type(args)
    s1 = _sigma(args.sigma1, "--sigma1")
    rs = build_root_system(t)
    g = Gr.grade(rs, s1)
    inputs = {"type": str(t), "sigma1": list(s1)}
    bg = None
    if args.sigma2:
        s2 = _sigma(args.sigma2, "--sigma2")
        inputs["sigma2"] = list(s2)
        bg = Gr.bigrade(rs, s1, s2)
    r = Report("harmonic", inputs)
    comps = []
    for hc in H.harmonic_pairs(rs, s1, regular_only=not args.all):
        d = {"pair": _pair(hc.pair), "homogeneity": hc.homogeneity,
             "dimension": H.component_dimension(rs, g, hc), "lowest_weight": list(hc.lowest_weight)}
        if bg is not None:
            d["bidegrees"] = [list(x) for x in hc.bigraded_position(bg)]
            d["class"] = H.classify(bg, hc)
        comps.append(d)
    r.results = {"components": comps}
    if bg is not None:
        try:
            r.results["admissible"] = [_pair(p) for p in H.admissible_pairs(bg)]
            r.check("every component is classified", True)
        except Gr.GradingError as exc:
            r.check("every component is classified", False, str(exc))
    if args.oracle:
        _oracle_checks(r, rs, s1)
    return r


def _oracle_checks(r: Report, rs, s1):
    try:
        rep = H.kostant_oracle(chevalley_constants(rs), Gr.grade(rs, s1))
    except H.OracleScaleError as exc:
        r.check("harmonic cochains agree with the pair enumeration", None, str(exc))
        return
    r.results["oracle"] = {
        "components": [{"homogeneity": c.homogeneity, "dimension": c.dimension,
                        "lowest_weight": list(c.lowest_weight)}
                       for c in sorted(rep.components, key=lambda c: (c.homogeneity, c.lowest_weight))],
        "harmonic_dimension": rep.harmonic_dimension,
        "cohomology_dimension": rep.cohomology_dimension,
    }
    r.check("harmonic cochains agree with the pair enumeration", H.oracle_matches_pairs(rs, s1, rep))
    r.check("Laplacian is self-adjoint", rep.laplacian_psd)


def cmd_oracle(args) -> Report:
    t = _lie_type(args)
    s1 = _sigma(args.sigma1, "--sigma1")
    r = Report("oracle", {"type": str(t), "sigma1": list(s1)})
    _oracle_checks(r, build_root_system(t), s1)
    return r


def cmd_table3(args) -> Report:
    types = [_lie_type(args)] if args.type else None
    r = Report("table3", {"type": str(types[0]) if types else "all"})
    rows = []
    for row in H.reproduce_table3(types):
        label = f"{row.type} {list(row.sigma1)}/{list(row.sigma2)}"
        if row.conjugation != "plain":
            label += f" ({row.conjugation})"
        r.check(f"{label}: admissible pairs", row.ok,
                f"computed {[_pair(p) for p in row.computed]}, printed {[_pair(p) for p in row.expected]}")
        rows.append({"type": str(row.type), "sigma1": list(row.sigma1), "sigma2": list(row.sigma2),
                     "conjugation": row.conjugation, "sources": row.sources,
                     "pairs": [_pair(p) for p in row.computed], "flags": row.flags})
    r.results = {"rows": rows}
    return r


def cmd_verify(args) -> Report:
    m = _model(args)
    r = Report("verify", {"model": m.name})
    fr = M.verify_frame(m)
    for c in fr.checks:
        r.check(c.name, c.ok, c.detail)
    if m.data.get("deformation"):
        bad = [x.name for x in M.integrability_residuals(m) if not x.vanishes]
        r.check("printed deformation is integrable (formal F)", not bad, ", ".join(bad))
        for p in M.printed_pde_residuals(m):
            r.check(f"printed PDE {p.name}", p.vanishes, "" if p.vanishes else f"residual {_s(p.value)}")
    r.results = {"growth_quotient": list(fr.growth_quotient), "growth_full": list(fr.growth_full),
                 "kernel_matrices": {k: [[_s(x) for x in row] for row in mat]
                                     for k, mat in fr.kernel_matrices.items()},
                 "corrections": m.data.get("corrections", []),
                 "excluded_locus": _excluded(m)}
    return r


def _parse_F(m: M.CRModel, text: str | None):
    if text is None or text == "formal":
        return None
    try:
        return M.parse_instantiation(m, text)
    except M.ModelError as exc:
        raise UsageError(str(exc)) from None


def cmd_invariant(args) -> Report:
    m = _model(args)
    F = _parse_F(m, args.F)
    r = Report("invariant", {"model": m.name, "F": args.F or "formal", "selection": args.selection})
    res: dict = {"excluded_locus": _excluded(m)}
    if m.name == "sp4":
        G = None if F is None else M.deformation(m, F)["G11"]
        W = M.invariant_W_sp4(m, G)
        J = M.invariant_J_sp4(m, G)
        res["W"], res["J"] = _s(W.value), _s(J.value)
        if F is None:
            r.check("W equals the printed expansion", W.matches, _atom_diff(W.value, W.expected))
            r.check("W vanishes at F = 0", W.vanishes_at_F0)
            r.check("J vanishes at F = 0", J.vanishes_at_F0)
            Wc = M.invariant_W_sp4(m, conjugated=True).value
            r.check("conjugate of W equals W from the conjugated formula", S.conjugate(W.value) == Wc)
            rng = random.Random(args.seed)
            arity = m.data["deformation"]["arity"]
            for k in range(args.samples):
                Fk = M.random_instantiation(rng, arity)
                a, b = M.j_two_paths(m, Fk, J.value)
                r.check(f"J two evaluation paths agree (sample {k + 1})", (a - b).is_zero(), f"F = {_s(Fk)}")
        if F is None:
            res["W_atoms"] = {k: _s(v) for k, v in sorted(M.atom_coefficients(W.value).items())}
    elif m.name == "g2":
        G = None if F is None else M.deformation(m, F)["G11"]
        inv, pres = M.invariant_g2(m, G)
        res["G11bar"] = _s(inv.value)
        if F is None:
            r.check("G11bar vanishes at F = 0", inv.vanishes_at_F0)
        fl, c, dres = M.derived_pde(m)
        if F is not None:
            dres = [M.Residual(x.name, S.instantiate(x.value, F, m.data["deformation"]["arity"])) for x in dres]
        res["derived_pde"] = {"field": fl, "coefficient": _s(c)}
        for x in dres:
            r.check(f"derived PDE {x.name}", x.vanishes)
        for x in pres:
            r.check(f"printed PDE {x.name}", x.vanishes, "" if x.vanishes else f"residual {_s(x.value)}")
    elif m.name == "sp6":
        if F is None:
            g0 = M.sp6_g0_structure(m)
            for c in g0.checks:
                r.check(c.name, c.ok, c.detail)
        sel = _selection(m, args.selection)
        comps = M.sp6_R_components(m, F, sel)
        out = {}
        for c in comps:
            out[c.name] = _s(c.value)
            if c.expected is not None:
                r.check(f"{c.name} equals the printed value", c.matches)
            if c.vanishes_at_F0 is not None:
                r.check(f"{c.name} vanishes at F = 0", c.vanishes_at_F0)
        res["R"] = out
    else:
        raise UsageError(f"no invariants are known for model {m.name}")
    r.results = res
    return r


def _atom_diff(got: S.Expr, want: S.Expr) -> str:
    a, b = M.atom_coefficients(got), M.atom_coefficients(want)
    bad = [k.split("(")[0] for k in sorted(set(a) | set(b))
           if not (a.get(k, S.ZERO) - b.get(k, S.ZERO)).is_zero()]
    return f"{len(a) - len(bad)} of {len(a)} atom coefficients agree; differ: {', '.join(bad)}" if bad else ""


def _selection(m: M.CRModel, text: str | None):
    if not text:
        return None
    if text == "all":
        return list(M.sp6_printed_R(m))
    return [s.strip() for s in text.split(",") if s.strip()]


def cmd_flatness(args) -> Report:
    m = _model(args)
    if args.F is None or args.F == "formal":
        raise UsageError("flatness needs an explicit --F instantiation")
    F = _parse_F(m, args.F)
    r = Report("flatness", {"model": m.name, "F": args.F})
    comps = M.flatness_components(m, F)
    nonzero = sorted(k for k, v in comps.items() if not v.is_zero())
    r.results = {"flat": not nonzero, "nonvanishing": nonzero,
                 "components": {k: _s(v) for k, v in comps.items()}, "excluded_locus": _excluded(m)}
    if args.expect is not None:
        want = args.expect == "flat"
        r.check(f"structure is {'flat' if want else 'not flat'}", (not nonzero) == want,
                ", ".join(nonzero))
    return r


VERBS = {
    "roots": cmd_roots, "grade": cmd_grade, "bigrade": cmd_bigrade, "models": cmd_models,
    "harmonic": cmd_harmonic, "table3": cmd_table3, "verify": cmd_verify, "invariant": cmd_invariant,
    "flatness": cmd_flatness, "oracle": cmd_oracle,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crfund", description="Gradings, harmonic curvature and explicit CR models.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def add(name, help, *opts):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        for o in opts:
            o(sp)
        return sp

    typ = lambda sp: (sp.add_argument("--type", help="family letter or full type, e.g. G or G2"),
                      sp.add_argument("--rank", type=int))
    s1 = lambda sp: sp.add_argument("--sigma1", help="comma-separated simple roots")
    s2 = lambda sp: sp.add_argument("--sigma2", help="comma-separated simple roots")
    orc = lambda sp: sp.add_argument("--oracle", action="store_true", help="cross-check with the cochain oracle")
    mdl = lambda sp: sp.add_argument("--model", help="built-in name (sp4, g2, sp6) or JSON file")
    fopt = lambda sp: sp.add_argument("--F", help="'formal' or an expression in t1..tn")

    add("roots", "root-system data", typ, orc)
    add("grade", "|k|-grading from sigma1", typ, s1)
    add("bigrade", "bigrading and model conditions", typ, s1, s2)
    add("models", "scan (sigma1, sigma2) against the classification fixture", typ)
    hs = add("harmonic", "harmonic curvature components", typ, s1, s2, orc)
    hs.add_argument("--all", action="store_true", help="include non-positive homogeneity")
    add("table3", "admissible harmonic pairs for every table row", typ)
    add("oracle", "explicit cochain computation of the harmonic space", typ, s1)
    add("verify", "frame relations and integrability of the printed deformation", mdl)
    inv = add("invariant", "fundamental invariants of a deformation", mdl, fopt)
    inv.add_argument("--selection", help="sp6 curvature labels, comma-separated, or 'all'")
    inv.add_argument("--seed", type=int, default=0)
    inv.add_argument("--samples", type=int, default=5)
    fl = add("flatness", "do all invariants vanish for this F", mdl, fopt)
    fl.add_argument("--expect", choices=["flat", "nonflat"])
    return p


def run(argv: list[str] | None = None) -> tuple[Report | None, int, str]:
    """Parse and execute; returns (report, exit code, rendered output)."""
    try:
        args = build_parser().parse_args(argv)
        report = VERBS[args.verb](args)
    except UsageError as exc:
        return None, 2, f"usage error: {exc}"
    except (Gr.GradingError, RootSystemError, M.ModelError) as exc:
        return None, 2, f"error: {exc}"
    text = report.to_json() if args.json else report.to_text()
    return report, report.exit_code, text


def main(argv: list[str] | None = None) -> int:
    report, code, text = run(argv)
    print(text, file=sys.stdout if code != 2 else sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
