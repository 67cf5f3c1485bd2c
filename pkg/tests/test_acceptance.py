"""Acceptance criteria, one test each.

Each test records a line "[PASS|FAIL] <n> <title> (<seconds> s / limit <s> s): <detail>";
the lines are printed in the pytest terminal summary, or directly when this
file is run as a script.
"""
import itertools
import random
import time

import pytest

from crfund import crmodels as M
from crfund import grading as G
from crfund import harmonic as H
from crfund.rootsys import SimpleLieType, build_root_system, chevalley_constants

RESULTS: list[str] = []


class Criterion:
    def __init__(self, number: int, title: str, limit: float):
        self.number, self.title, self.limit = number, title, limit
        self.problems: list[str] = []

    def expect(self, ok: bool, what: str):
        if not ok:
            self.problems.append(what)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        if exc is not None:
            self.problems.append(f"{exc_type.__name__}: {exc}")
        if dt > self.limit:
            self.problems.append(f"took {dt:.1f} s")
        status = "FAIL" if self.problems else "PASS"
        detail = "; ".join(self.problems) if self.problems else "ok"
        RESULTS.append(f"[{status}] {self.number} {self.title} ({dt:.2f} s / limit {self.limit:g} s): {detail}")
        if exc is None and self.problems:
            pytest.fail(detail)
        return False


def _classical(t: SimpleLieType):
    n = t.rank
    return {"A": (n * (n + 1) // 2, n * (n + 2)), "B": (n * n, n * (2 * n + 1)), "C": (n * n, n * (2 * n + 1)),
            "D": (n * (n - 1), n * (2 * n - 1)), "G": (6, 14), "F": (24, 52)}.get(t.family) or \
        {6: (36, 78), 7: (63, 133), 8: (120, 248)}[n]


def test_criterion_1_root_counts():
    with Criterion(1, "root-system counts and dimensions, rank <= 8", 1.0) as c:
        types = [SimpleLieType("A", n) for n in range(1, 9)] + [SimpleLieType("B", n) for n in range(2, 9)] \
            + [SimpleLieType("C", n) for n in range(2, 9)] + [SimpleLieType("D", n) for n in range(4, 9)] \
            + [SimpleLieType("E", n) for n in (6, 7, 8)] + [SimpleLieType("F", 4), SimpleLieType("G", 2)]
        for t in types:
            rs = build_root_system(t)
            got = (len(rs.positive_roots), rs.dimension)
            c.expect(got == _classical(t), f"{t}: {got} vs {_classical(t)}")


def test_criterion_2_classification_scan():
    with Criterion(2, "classification fixture reproduced by the scan", 120.0) as c:
        sizes = set()
        for t in G.table_types():
            scan = G.enumerate_models(t)
            sizes |= {len(m.sigma2) for m in scan}
            cmp = G.compare_with_tables(t, scan)
            c.expect(not cmp.missing, f"{t} missing {cmp.missing}")
            c.expect(not cmp.extra, f"{t} extra {cmp.extra}")
            c.expect(all(v != "passes" for *_, v in cmp.excluded), f"{t} restriction removes a passing pair")
        c.expect(sizes == {1}, f"Sigma2 sizes {sorted(sizes)}")


def test_criterion_3_harmonic_table():
    with Criterion(3, "admissible harmonic pairs per table row", 60.0) as c:
        rows = H.reproduce_table3()
        for r in rows:
            c.expect(r.ok, f"{r.type} {r.sigma1}/{r.sigma2}: {r.computed} vs {r.expected}")
        by = {(str(r.type), r.sigma1, r.sigma2): r.computed for r in rows}
        spot = {("A3", (1, 3), (2,)): [(1, 2), (3, 2)], ("A6", (1, 3), (2,)): [(1, 2)],
                ("B5", (2,), (1,)): [(2, 1)], ("C5", (4,), (5,)): [(4, 5)], ("G2", (1,), (2,)): [(1, 2)],
                ("C5", (1,), (5,)): []}
        for key, want in spot.items():
            c.expect(key in by and sorted(by[key]) == want, f"{key}: {by.get(key)}")


def test_criterion_4_kostant_oracle():
    with Criterion(4, "cochain oracle agrees with the pair enumeration", 300.0) as c:
        for name in ("G2", "A2", "A3", "B3", "C3"):
            rs = build_root_system(name)
            sc = chevalley_constants(rs)
            for k in range(1, rs.rank + 1):
                for s1 in itertools.combinations(range(1, rs.rank + 1), k):
                    rep = H.kostant_oracle(sc, G.grade(rs, s1))
                    c.expect(H.oracle_matches_pairs(rs, s1, rep), f"{name} {s1}")
                    c.expect(rep.laplacian_psd, f"{name} {s1}: Laplacian not self-adjoint")


def test_criterion_5_sp4():
    with Criterion(5, "sp4 pipeline", 300.0) as c:
        m = M.load_model("sp4")
        c.expect(M.verify_frame(m).ok, "frame relations")
        c.expect(all(r.vanishes for r in M.integrability_residuals(m)), "integrability with formal F")
        c.expect(all(r.vanishes for r in M.printed_pde_residuals(m)), "printed PDE")
        W = M.invariant_W_sp4(m)
        got, want = M.atom_coefficients(W.value), M.atom_coefficients(W.expected)
        bad = sorted(k.split("(")[0] for k in set(got) | set(want)
                     if not (got.get(k, M.S.ZERO) - want.get(k, M.S.ZERO)).is_zero())
        c.expect(not bad, f"W atoms differ from the printed expansion: {', '.join(bad)} "
                          f"({len(got) - len(bad)} of {len(got)} computed atoms agree)")
        J = M.invariant_J_sp4(m)
        c.expect(J.vanishes_at_F0, "J(F=0) != 0")
        rng = random.Random(2024)
        for k in range(5):
            a, b = M.j_two_paths(m, M.random_instantiation(rng, 4), J.value)
            c.expect(a == b, f"J paths differ for sample {k}")


def test_criterion_6_g2():
    with Criterion(6, "g2 pipeline", 120.0) as c:
        m = M.load_model("g2")
        rep = M.verify_frame(m)
        c.expect(rep.growth_quotient == (2, 3, 5), f"growth {rep.growth_quotient}")
        c.expect(rep.ok, "frame relations")
        c.expect(all(r.vanishes for r in M.integrability_residuals(m)), "integrability with formal F")
        for r in M.printed_pde_residuals(m):
            c.expect(r.vanishes, f"printed PDE residual {r.name} is not 0")


def test_criterion_7_sp6():
    with Criterion(7, "sp6 pipeline", 900.0) as c:
        m = M.load_model("sp6")
        c.expect(M.verify_frame(m).ok, "frame and kernel-action relations")
        c.expect(all(r.vanishes for r in M.integrability_residuals(m)), "integrability with formal F")
        g0 = M.sp6_g0_structure(m)
        for chk in g0.checks:
            c.expect(chk.ok, f"{chk.name}: {chk.detail}")
        for r in M.sp6_R_components(m):
            c.expect(r.matches, f"{r.name} differs from the printed value")
            c.expect(r.vanishes_at_F0, f"{r.name} does not vanish at F = 0")
        flat = M.flatness_components(m, M.S.ZERO)
        c.expect(all(v.is_zero() for v in flat.values()), "some invariant is nonzero at F = 0")


def test_criterion_8_property_suites():
    from hypothesis import settings
    import test_properties as P
    suites = [P.test_structure_constants_jacobi, P.test_reflect_involution, P.test_conjugation_involution,
              P.test_diff_commutes_with_conjugation, P.test_lie_bracket_jacobi, P.test_canonical_form_idempotent]
    with Criterion(8, "property suites, >= 100 cases each", 600.0) as c:
        for suite in suites:
            cases = getattr(suite, "_hypothesis_internal_use_settings", settings.default).max_examples
            c.expect(cases >= 100, f"{suite.__name__} runs {cases} cases")
            try:
                suite()
            except Exception as exc:  # noqa: BLE001
                c.expect(False, f"{suite.__name__}: {exc}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
