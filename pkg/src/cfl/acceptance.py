"""Acceptance harness: nine empirical criteria behind `cfl suite`.

Each criterion runs a fixed, seeded experiment and reports pass/fail with the
measured numbers.  Where the criterion demands an independent check, the
oracle here takes a different algorithmic route from the library path: LP
optima are recomputed by a dense Bland-rule simplex instead of HiGHS, and
clique enumeration is recomputed by testing every vertex tuple.
"""

from __future__ import annotations

import itertools
import math
import os
import subprocess
import sys
import tempfile
import time

import numpy as np

from .cliques import count_cliques_window, enumerate_cliques
from .errors import NumericalError
from .factor_lp import check_prop3, solve_dual, solve_primal, t_star
from .generators import gen_complete, gen_paley, gen_random_regular
from .graphs import Graph, WeightedGraph, from_edge_list, uniform_weights, write_graph
from .pipeline import (
    PipelineConfig,
    build_Hf,
    dense_extract,
    hf_codegrees,
    hf_degrees,
    run_end_to_end,
    sparse_extract,
    sparse_split,
)
from .spectral import lambda_floor_check, mixing_audit, second_eigenvalue


# ------------------------------------------------------------------ oracles


def simplex_lp_value(c, A, b, tol: float = 1e-9, max_iter: int = 200000) -> float:
    """max c.x s.t. Ax <= b, x >= 0 by dense tableau simplex with Bland's rule.

    Requires b >= 0 (slack basis is then feasible), which holds for every
    matching LP here.  Deliberately shares no code with the HiGHS path.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if np.any(b < -tol):
        raise NumericalError("simplex oracle needs b >= 0")
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = np.maximum(b, 0.0)
    T[m, :n] = -c
    basis = list(range(n, n + m))
    for _ in range(max_iter):
        enter = -1
        for j in range(n + m):
            if T[m, j] < -tol:
                enter = j
                break
        if enter < 0:
            return float(T[m, -1])
        row = -1
        best = math.inf
        for i in range(m):
            if T[i, enter] > tol:
                r = T[i, -1] / T[i, enter]
                if r < best - 1e-12 or (abs(r - best) <= 1e-12 and (row < 0 or basis[i] < basis[row])):
                    best = r
                    row = i
        if row < 0:
            raise NumericalError("simplex oracle: unbounded LP")
        T[row] /= T[row, enter]
        for i in range(m + 1):
            if i != row and T[i, enter] != 0.0:
                T[i] -= T[i, enter] * T[row]
        basis[row] = enter
    raise NumericalError("simplex oracle: iteration cap reached")


def oracle_t_star(wg: WeightedGraph, t: int) -> float:
    """t*(G,w) via the simplex oracle on the explicitly built primal."""
    cliques = [
        tup
        for tup in itertools.combinations(range(wg.n), t)
        if all(wg.base.has_edge(u, v) for u, v in itertools.combinations(tup, 2))
    ]
    if not cliques:
        return 0.0
    edges = wg.base.edges
    eidx = {e: i for i, e in enumerate(edges)}
    A = np.zeros((wg.n + len(edges), len(cliques)))
    for j, tup in enumerate(cliques):
        for u in tup:
            A[u, j] = 1.0
        for u, v in itertools.combinations(tup, 2):
            A[wg.n + eidx[(u, v)], j] = 1.0
    b = np.concatenate([np.ones(wg.n), [wg.w[e] for e in edges]])
    return simplex_lp_value(np.ones(len(cliques)), A, b)


def brute_force_cliques(g: Graph, t: int) -> list:
    """Every t-tuple tested against every pair: the slow, obviously-correct route."""
    return [
        tup
        for tup in itertools.combinations(range(g.n), t)
        if all(g.has_edge(u, v) for u, v in itertools.combinations(tup, 2))
    ]


def petersen() -> Graph:
    """Outer 5-cycle, inner pentagram, five spokes; 3-regular, triangle-free."""
    edges = []
    for i in range(5):
        edges.append((i, (i + 1) % 5))
        edges.append((5 + i, 5 + (i + 2) % 5))
        edges.append((i, 5 + i))
    return from_edge_list(10, edges)


# ------------------------------------------------------------------ corpus


def _corpus() -> list:
    """(name, WeightedGraph, t) instances shared by criteria 1, 2, and 4."""
    out = []
    for n in range(4, 13):
        out.append((f"K_{n}", uniform_weights(gen_complete(n)), 3))
    out.append(("paley_13", uniform_weights(gen_paley(13)), 3))
    rr_specs = [(20, 6, 101), (30, 8, 102), (40, 10, 103), (60, 20, 104)]
    for n, d, s in rr_specs:
        out.append((f"rr_{n}_{d}", uniform_weights(gen_random_regular(n, d, s)), 3))
    rng = np.random.default_rng(424242)
    for name, base in [
        ("K_8", gen_complete(8)),
        ("K_10", gen_complete(10)),
        ("K_12", gen_complete(12)),
        ("paley_13", gen_paley(13)),
        ("rr_20_6", gen_random_regular(20, 6, 101)),
        ("rr_30_8", gen_random_regular(30, 8, 102)),
    ]:
        w = {e: float(rng.random()) for e in base.edges}
        out.append((f"{name}_weighted", WeightedGraph(base, w), 3))
    out.append(("K_8_t4", uniform_weights(gen_complete(8)), 4))
    out.append(("K_9_t4", uniform_weights(gen_complete(9)), 4))
    return out


# ------------------------------------------------------------------ criteria


def criterion_1() -> dict:
    """LP duality corpus: |primal - dual| <= 2e-7 and all four duality checks."""
    start = time.perf_counter()
    corpus = _corpus()
    max_gap = 0.0
    failures = []
    for idx, (name, wg, t) in enumerate(corpus):
        cliques = enumerate_cliques(wg.base, t)
        p = solve_primal(wg, cliques)
        d = solve_dual(wg, cliques)
        gap = abs(p.objective - d.objective)
        max_gap = max(max_gap, gap)
        if gap > 2e-7:
            failures.append(f"{name}: gap {gap:.3e}")
        report = check_prop3(wg, t, seed=idx)
        if not report.all_pass:
            failures.append(
                f"{name}: prop3 i={report.i_pass} ii={report.ii_pass} "
                f"iii={report.iii_pass} iv={report.iv_pass}"
            )
    runtime = time.perf_counter() - start
    passed = not failures and runtime < 60 and len(corpus) >= 20
    return {
        "criterion": 1,
        "name": "lp-duality-corpus",
        "passed": passed,
        "runtime_s": runtime,
        "details": {"instances": len(corpus), "max_gap": max_gap, "failures": failures},
    }


def criterion_2() -> dict:
    """Simplex-oracle equivalence on n <= 12, all-tuples enumeration, Paley triangles."""
    start = time.perf_counter()
    failures = []
    worst = 0.0
    for name, wg, t in _corpus():
        if wg.n <= 12:
            lib = t_star(wg, t)
            ora = oracle_t_star(wg, t)
            worst = max(worst, abs(lib - ora))
            if abs(lib - ora) > 1e-6:
                failures.append(f"{name}: t_star {lib:.9f} vs oracle {ora:.9f}")
        lib_cliques = sorted(enumerate_cliques(wg.base, t).cliques)
        if lib_cliques != brute_force_cliques(wg.base, t):
            failures.append(f"{name}: clique enumeration mismatch")
    paley_triangles = len(brute_force_cliques(gen_paley(13), 3))
    lib_paley = len(enumerate_cliques(gen_paley(13), 3).cliques)
    if not (paley_triangles == lib_paley == 26):
        failures.append(f"paley_13 triangles: oracle {paley_triangles}, library {lib_paley}")
    runtime = time.perf_counter() - start
    return {
        "criterion": 2,
        "name": "brute-force-oracles",
        "passed": not failures,
        "runtime_s": runtime,
        "details": {"max_t_star_deviation": worst, "failures": failures},
    }


def criterion_3() -> dict:
    """Dense extraction on K_6, K_12, K_30: degree drops exactly 2, loads <= 1."""
    start = time.perf_counter()
    failures = []
    residuals = {}
    loads = {}
    for n in (6, 12, 30):
        g = gen_complete(n)
        bundle = dense_extract(g, 3, 2)
        worst = max(
            (it["degree_residual"] for it in bundle.audits["iterations"] if it["extracted"]),
            default=math.inf,
        )
        residuals[f"K_{n}"] = worst
        loads[f"K_{n}"] = bundle.max_edge_load()
        if bundle.ell != 2:
            failures.append(f"K_{n}: only {bundle.ell} factors extracted")
        if worst > 1e-6:
            failures.append(f"K_{n}: degree residual {worst:.3e}")
        if bundle.max_edge_load() > 1 + 1e-7:
            failures.append(f"K_{n}: per_edge_load {bundle.max_edge_load():.9f}")
    runtime = time.perf_counter() - start
    return {
        "criterion": 3,
        "name": "dense-extraction-identity",
        "passed": not failures,
        "runtime_s": runtime,
        "details": {"degree_residuals": residuals, "max_edge_loads": loads, "failures": failures},
    }


def criterion_4() -> dict:
    """Eigenvalues of the three reference graphs, clean mixing audits, lambda floor."""
    start = time.perf_counter()
    failures = []
    targets = [
        ("K_6", gen_complete(6), 1.0),
        ("petersen", petersen(), 2.0),
        ("paley_13", gen_paley(13), (1 + math.sqrt(13)) / 2),
    ]
    lambdas = {}
    for name, g, expected in targets:
        cert = second_eigenvalue(g)
        lambdas[name] = cert.lam
        if abs(cert.lam - expected) > 1e-8:
            failures.append(f"{name}: lambda {cert.lam!r} vs {expected!r}")
        audit = mixing_audit(g, cert, 10000, seed=5)
        if audit.violated:
            failures.append(f"{name}: mixing violation {audit.max_violation:.3e}")
    floor_checked = 0
    for name, wg, _ in _corpus():
        cert = second_eigenvalue(wg.base)
        ok = lambda_floor_check(cert)
        if ok is not None:
            floor_checked += 1
            if not ok:
                failures.append(f"{name}: lambda {cert.lam:.6f} below sqrt(d/2)")
    cert_p = second_eigenvalue(petersen())
    if lambda_floor_check(cert_p) is False:
        failures.append("petersen: lambda below sqrt(d/2)")
    runtime = time.perf_counter() - start
    return {
        "criterion": 4,
        "name": "spectral-certificates",
        "passed": not failures,
        "runtime_s": runtime,
        "details": {"lambdas": lambdas, "floor_checked": floor_checked, "failures": failures},
    }


def criterion_5() -> dict:
    """K_2/K_3 count windows on random_regular(100, 50), U = V and 20 random U."""
    start = time.perf_counter()
    g = gen_random_regular(100, 50, 2025)
    rng = np.random.default_rng(7)
    subsets = [tuple(range(100))]
    while len(subsets) < 21:
        size = int(rng.integers(25, 101))
        subsets.append(tuple(int(x) for x in np.sort(rng.permutation(100)[:size])))
    failures = []
    checked = 0
    for i in (2, 3):
        for U in subsets:
            count, lower, upper, within = count_cliques_window(g, None, U, i)
            checked += 1
            if not within:
                failures.append(
                    f"i={i} |U|={len(U)}: count {count} outside [{lower:.3f}, {upper:.3f}]"
                )
    runtime = time.perf_counter() - start
    return {
        "criterion": 5,
        "name": "clique-count-windows",
        "passed": not failures,
        "runtime_s": runtime,
        "details": {"windows_checked": checked, "failures": failures},
    }


def criterion_6() -> dict:
    """Coverage: K_60 dense ell=2 fully covered >= 4/5 seeds; rr(90,45) auto
    leaves at most 10% uncovered >= 4/5 seeds; under five minutes."""
    start = time.perf_counter()
    k60 = gen_complete(60)
    k60_uncovered = []
    for seed in range(5):
        cfg = PipelineConfig(seed=seed, mode="dense", ell=2, force=True)
        k60_uncovered.append(run_end_to_end(k60, 3, cfg).result.uncovered_count)
    k60_ok = sum(1 for u in k60_uncovered if u == 0)

    rr = gen_random_regular(90, 45, 31)
    rr_fracs = []
    for seed in range(5):
        cfg = PipelineConfig(seed=seed, mode="auto", force=True)
        rr_fracs.append(run_end_to_end(rr, 3, cfg).uncovered_fraction)
    rr_ok = sum(1 for f in rr_fracs if f <= 0.10)

    runtime = time.perf_counter() - start
    passed = k60_ok >= 4 and rr_ok >= 4 and runtime < 300
    return {
        "criterion": 6,
        "name": "pipeline-coverage",
        "passed": passed,
        "runtime_s": runtime,
        "details": {
            "k60_uncovered": k60_uncovered,
            "k60_fully_covered": k60_ok,
            "rr90_fractions": rr_fracs,
            "rr90_within_10pct": rr_ok,
        },
    }


def criterion_7() -> dict:
    """Sparse splits partition E, sizes within 5 sigma, one positive f_i per clique."""
    start = time.perf_counter()
    g = gen_random_regular(100, 50, 2025)
    cliques = enumerate_cliques(g, 3)
    ell = 5
    mean = g.m / ell
    sigma = math.sqrt(g.m * (1 / ell) * (1 - 1 / ell))
    failures = []
    for seed in range(20):
        parts = sparse_split(g, ell, seed)
        union = [e for p in parts for e in p.edges]
        if sorted(union) != list(g.edges) or len(union) != g.m:
            failures.append(f"seed {seed}: parts do not partition E")
        for i, p in enumerate(parts):
            if abs(p.m - mean) > 5 * sigma:
                failures.append(f"seed {seed}: part {i} has {p.m} edges vs {mean:.0f}")
        bundle = sparse_extract(g, 3, ell, seed, cliques=cliques)
        seen: dict = {}
        for i, fac in enumerate(bundle.factors):
            for cid, val in fac.items():
                if val > 0 and cid in seen:
                    failures.append(f"seed {seed}: clique {cid} positive in parts {seen[cid]},{i}")
                seen[cid] = i
    runtime = time.perf_counter() - start
    return {
        "criterion": 7,
        "name": "sparse-split-structure",
        "passed": not failures,
        "runtime_s": runtime,
        "details": {"seeds": 20, "sigma": sigma, "failures": failures},
    }


def criterion_8() -> dict:
    """H_f on a K_12 dense ell=2 bundle: mean degree 2 +/- 0.5, codegree bound."""
    start = time.perf_counter()
    g = gen_complete(12)
    cliques = enumerate_cliques(g, 3)
    bundle = dense_extract(g, 3, 2, cliques=cliques)
    degree_sums = np.zeros(12)
    max_codeg = 0
    bound = 1 + 3 * math.log(12)
    codeg_violations = 0
    for seed in range(200):
        hf = build_Hf(g, 3, bundle, seed, cliques)
        degree_sums += hf_degrees(hf)
        codeg = hf_codegrees(hf)
        worst = max(codeg.values(), default=0)
        max_codeg = max(max_codeg, worst)
        if worst > bound:
            codeg_violations += 1
    means = degree_sums / 200
    failures = []
    if bundle.ell != 2:
        failures.append(f"bundle has {bundle.ell} factors")
    if means.min() < 1.5 or means.max() > 2.5:
        failures.append(f"mean degree range [{means.min():.3f}, {means.max():.3f}]")
    if codeg_violations:
        failures.append(f"{codeg_violations} samples broke the codegree bound")
    runtime = time.perf_counter() - start
    return {
        "criterion": 8,
        "name": "hf-statistics",
        "passed": not failures,
        "runtime_s": runtime,
        "details": {
            "mean_degree_min": float(means.min()),
            "mean_degree_max": float(means.max()),
            "max_codegree": max_codeg,
            "codegree_bound": bound,
            "failures": failures,
        },
    }


def criterion_9() -> dict:
    """Two identical `cfl pipeline` invocations produce byte-identical reports."""
    start = time.perf_counter()
    failures = []
    with tempfile.TemporaryDirectory() as tmp:
        graph_path = os.path.join(tmp, "paley13.txt")
        with open(graph_path, "w", encoding="utf-8") as fh:
            fh.write(write_graph(gen_paley(13)))
        outs = []
        for label in ("a", "b"):
            out = os.path.join(tmp, f"{label}.json")
            cmd = [
                sys.executable,
                "-m",
                "cfl.cli",
                "pipeline",
                "--in",
                graph_path,
                "--t",
                "3",
                "--seed",
                "11",
                "--force",
                "--out",
                out,
            ]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode not in (0, 1):
                failures.append(f"run {label}: exit {proc.returncode}: {proc.stderr.strip()}")
            outs.append(out)
        if not failures:
            with open(outs[0], "rb") as fh:
                first = fh.read()
            with open(outs[1], "rb") as fh:
                second = fh.read()
            if first != second:
                failures.append("reports differ between identical runs")
            if not first:
                failures.append("empty report")
    runtime = time.perf_counter() - start
    return {
        "criterion": 9,
        "name": "pipeline-determinism",
        "passed": not failures,
        "runtime_s": runtime,
        "details": {"failures": failures},
    }


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run_criterion(i: int) -> dict:
    return CRITERIA[i]()


def run_all(only=None) -> list:
    indices = sorted(only) if only else sorted(CRITERIA)
    return [CRITERIA[i]() for i in indices]
