"""Fractional K_t-matching LP, its dual, and fractional-factor certification.

The primal maximizes sum f(T) over clique weights f >= 0 subject to vertex
loads <= 1 and pair loads <= w(uv); the dual minimizes sum g(v) + sum
h(uv) w(uv) subject to sum_{v in T} g(v) + sum_{uv in E(T)} h(uv) >= 1 per
clique.  Both share the optimum t*(G,w).  Solves go through HiGHS, which is
deterministic for a fixed instance; whichever of the two forms has fewer
variables is used when only the optimum value is needed.

Factor extraction re-solves with vertex loads fixed to exactly 1 and, among
the feasible factors, picks one minimizing max_T f(T).  The spread objective
matters: a plain basic solution concentrates on few cliques, which both
starves later extraction rounds of pair capacity and degrades the sampled
hypergraph downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .cliques import CliqueSet, enumerate_cliques
from .errors import InputError, NumericalError, ResourceError
from .graphs import WeightedGraph, induced_weighted

TOL_DEFAULT = 1e-7
MATCHING_BUDGET = 10**4


@dataclass(frozen=True)
class PrimalSolution:
    f: dict  # clique id -> weight, zeros kept implicit
    objective: float


@dataclass(frozen=True)
class DualSolution:
    g: dict  # vertex -> value
    h: dict  # edge -> value
    objective: float


@dataclass(frozen=True)
class FactorCert:
    """Verdict of the fractional-factor test.

    has_factor implies every per_vertex_load is within tol of 1 and f (keyed
    by clique tuple) realizes those loads.  slack = |V|/t - t_star.
    """

    has_factor: bool
    t_star: float
    slack: float
    per_vertex_load: dict
    f: dict | None = None
    note: str = ""

    def to_dict(self, tol: float = TOL_DEFAULT) -> dict:
        return {
            "has_factor": self.has_factor,
            "t_star": self.t_star,
            "slack": self.slack,
            "per_vertex_load": {str(v): x for v, x in sorted(self.per_vertex_load.items())},
            "f": None
            if self.f is None
            else {
                " ".join(map(str, tup)): val
                for tup, val in sorted(self.f.items())
                if val > tol
            },
            "note": self.note,
        }


def _instance(wg: WeightedGraph, cliques: CliqueSet):
    """Sparse constraint blocks: vertex-incidence, pair-incidence, capacities."""
    n = wg.n
    edges = wg.base.edges
    eidx = {e: i for i, e in enumerate(edges)}
    N = len(cliques.cliques)
    vr, vc, pr, pc = [], [], [], []
    for j, tup in enumerate(cliques.cliques):
        for a, u in enumerate(tup):
            vr.append(u)
            vc.append(j)
            for v in tup[a + 1 :]:
                pr.append(eidx[(u, v)])
                pc.append(j)
    a_vert = sparse.csc_matrix((np.ones(len(vr)), (vr, vc)), shape=(n, N))
    a_pair = sparse.csc_matrix((np.ones(len(pr)), (pr, pc)), shape=(len(edges), N))
    caps = np.array([wg.w[e] for e in edges])
    return a_vert, a_pair, caps, edges


def _run_linprog(c, A_ub, b_ub, A_eq, b_eq, bounds, method="highs"):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method=method)
    return res


def solve_primal(wg: WeightedGraph, cliques: CliqueSet, tol: float = TOL_DEFAULT) -> PrimalSolution:
    """Maximize sum f(T) subject to vertex loads <= 1, pair loads <= w."""
    if tol <= 0:
        raise InputError("tol must be positive")
    N = len(cliques.cliques)
    if N == 0:
        return PrimalSolution(f={}, objective=0.0)
    a_vert, a_pair, caps, _ = _instance(wg, cliques)
    A = sparse.vstack([a_vert, a_pair], format="csc")
    b = np.concatenate([np.ones(wg.n), caps])
    res = _run_linprog(-np.ones(N), A, b, None, None, (0, None))
    if res.status != 0:
        raise NumericalError(f"primal solve failed: {res.message}")
    f = {j: float(x) for j, x in enumerate(res.x) if x > 0.0}
    return PrimalSolution(f=f, objective=float(-res.fun))


def solve_dual(wg: WeightedGraph, cliques: CliqueSet, tol: float = TOL_DEFAULT) -> DualSolution:
    """Minimize sum g + sum h*w subject to per-clique covers >= 1, g,h >= 0."""
    if tol <= 0:
        raise InputError("tol must be positive")
    n = wg.n
    edges = wg.base.edges
    N = len(cliques.cliques)
    if N == 0:
        return DualSolution(
            g={v: 0.0 for v in range(n)}, h={e: 0.0 for e in edges}, objective=0.0
        )
    a_vert, a_pair, caps, _ = _instance(wg, cliques)
    # dual variables: g (n entries) then h (m entries); constraints transpose
    A = sparse.hstack([a_vert.T, a_pair.T], format="csc")
    c = np.concatenate([np.ones(n), caps])
    res = _run_linprog(c, -A, -np.ones(N), None, None, (0, None))
    if res.status != 0:
        raise NumericalError(f"dual solve failed: {res.message}")
    g = {v: float(res.x[v]) for v in range(n)}
    h = {e: float(res.x[n + i]) for i, e in enumerate(edges)}
    return DualSolution(g=g, h=h, objective=float(res.fun))


def t_star(
    wg: WeightedGraph, t: int, tol: float = TOL_DEFAULT, cliques: CliqueSet | None = None
) -> float:
    """Optimum of the fractional K_t-matching LP.

    Value only: solves whichever of primal/dual has fewer variables (they
    agree by strong duality).  Guaranteed <= |V|/t + tol.
    """
    if cliques is None:
        cliques = enumerate_cliques(wg.base, t)
    N = len(cliques.cliques)
    if N == 0:
        return 0.0
    if N <= wg.n + wg.base.m:
        val = solve_primal(wg, cliques, tol).objective
    else:
        val = solve_dual(wg, cliques, tol).objective
    if val > wg.n / t + tol:
        raise NumericalError(f"t_star {val} exceeds |V|/t = {wg.n / t}")
    return val


def integral_matching_value(
    wg: WeightedGraph, t: int, cliques: CliqueSet | None = None
) -> float:
    """Exact max of sum_T min-edge-weight over vertex-disjoint clique families.

    Branch-and-bound (HiGHS MILP, zero gap) within the MATCHING_BUDGET clique
    budget; larger instances get a ResourceError suggesting a greedy bound.
    """
    if cliques is None:
        cliques = enumerate_cliques(wg.base, t)
    N = len(cliques.cliques)
    if N == 0:
        return 0.0
    if N > MATCHING_BUDGET:
        raise ResourceError(
            f"{N} cliques exceed the exact-matching budget {MATCHING_BUDGET}; "
            "use a greedy lower bound instead",
            partial=None,
        )
    values = np.array(
        [
            min(wg.w[(tup[a], tup[b])] for a in range(t) for b in range(a + 1, t))
            for tup in cliques.cliques
        ]
    )
    a_vert, _, _, _ = _instance(wg, cliques)
    res = milp(
        c=-values,
        constraints=LinearConstraint(a_vert, -np.inf, np.ones(wg.n)),
        integrality=np.ones(N),
        bounds=Bounds(0, 1),
        options={"mip_rel_gap": 0.0},
    )
    if res.status != 0:
        raise NumericalError(f"exact matching solve failed: {res.message}")
    return float(-res.fun)


def _vertex_loads(n: int, cliques: CliqueSet, fvec: np.ndarray) -> dict:
    loads = np.zeros(n)
    for j, tup in enumerate(cliques.cliques):
        if fvec[j]:
            for v in tup:
                loads[v] += fvec[j]
    return {v: float(loads[v]) for v in range(n)}


def _fvec(cliques: CliqueSet, f: dict) -> np.ndarray:
    x = np.zeros(len(cliques.cliques))
    for j, val in f.items():
        x[j] = val
    return x


def has_fractional_factor(
    wg: WeightedGraph, t: int, tol: float = TOL_DEFAULT, cliques: CliqueSet | None = None
) -> FactorCert:
    """Decide t_star >= |V|/t - tol and, if so, extract a witness factor.

    The witness comes from re-solving with vertex loads fixed to exactly 1
    (feasibility, not perturbation), minimizing max_T f(T) to spread mass.
    If that equality programme is numerically infeasible the verdict is
    downgraded to has_factor=False with a note, keeping the invariant that
    has_factor implies unit loads.
    """
    if cliques is None:
        cliques = enumerate_cliques(wg.base, t)
    n = wg.n
    if n == 0:
        return FactorCert(True, 0.0, 0.0, {}, f={})
    ts = t_star(wg, t, tol, cliques)
    slack = n / t - ts
    if ts < n / t - tol:
        sol = solve_primal(wg, cliques, tol) if len(cliques.cliques) else PrimalSolution({}, 0.0)
        loads = _vertex_loads(n, cliques, _fvec(cliques, sol.f))
        return FactorCert(False, ts, slack, loads, f=None)
    fvec = _equality_resolve(wg, cliques)
    if fvec is None:
        sol = solve_primal(wg, cliques, tol)
        loads = _vertex_loads(n, cliques, _fvec(cliques, sol.f))
        return FactorCert(
            False,
            ts,
            slack,
            loads,
            f=None,
            note="t_star within tol of |V|/t but the unit-load programme is infeasible",
        )
    loads = _vertex_loads(n, cliques, fvec)
    f = {cliques.cliques[j]: float(fvec[j]) for j in np.flatnonzero(fvec > 0)}
    return FactorCert(True, ts, slack, loads, f=f)


def _equality_resolve(wg: WeightedGraph, cliques: CliqueSet) -> np.ndarray | None:
    """min max_T f(T) s.t. vertex loads == 1, pair loads <= w, f >= 0.

    Interior point first (fast on the spread objective at scale), simplex as
    fallback; returns None when infeasible either way.
    """
    N = len(cliques.cliques)
    if N == 0:
        return np.zeros(0) if wg.n == 0 else None
    a_vert, a_pair, caps, _ = _instance(wg, cliques)
    m = len(caps)
    n = wg.n
    # variables: f_0..f_{N-1}, z
    A_eq = sparse.hstack([a_vert, sparse.csc_matrix((n, 1))], format="csc")
    A_ub = sparse.vstack(
        [
            sparse.hstack([a_pair, sparse.csc_matrix((m, 1))]),
            sparse.hstack([sparse.eye(N, format="csc"), -np.ones((N, 1))]),
        ],
        format="csc",
    )
    b_ub = np.concatenate([caps, np.zeros(N)])
    c = np.zeros(N + 1)
    c[-1] = 1.0
    for method in ("highs-ipm", "highs"):
        res = _run_linprog(c, A_ub, b_ub, A_eq, np.ones(n), (0, None), method=method)
        if res.status == 0:
            return np.clip(res.x[:N], 0.0, None)
        if res.status == 2:  # infeasible
            return None
    raise NumericalError(f"equality re-solve failed: {res.message}")


@dataclass(frozen=True)
class Prop3Report:
    """All four duality checks on one instance, with the numbers behind them."""

    t_star: float
    integral_value: float
    i_pass: bool
    ii_bound: float
    ii_pass: bool
    ii_equality_case: bool  # t_star == |V|/t within tol and factor confirmed
    iii_subset: tuple
    iii_restricted_value: float
    iii_induced_t_star: float
    iii_feasible: bool
    iii_pass: bool
    v1_sizes: dict  # threshold -> |V_1|, the positivity cliff swept
    iv_threshold: float
    iv_pass: bool
    all_pass: bool

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "integral_value": self.integral_value,
            "i_pass": self.i_pass,
            "ii_bound": self.ii_bound,
            "ii_pass": self.ii_pass,
            "ii_equality_case": self.ii_equality_case,
            "iii_subset": list(self.iii_subset),
            "iii_restricted_value": self.iii_restricted_value,
            "iii_induced_t_star": self.iii_induced_t_star,
            "iii_feasible": self.iii_feasible,
            "iii_pass": self.iii_pass,
            "v1_sizes": {f"{thr:.0e}": sz for thr, sz in sorted(self.v1_sizes.items())},
            "iv_threshold": self.iv_threshold,
            "iv_pass": self.iv_pass,
            "all_pass": self.all_pass,
        }


def check_prop3(
    wg: WeightedGraph, t: int, tol: float = TOL_DEFAULT, seed: int = 0
) -> Prop3Report:
    """Verify the four duality facts tying t*, t(G,w), |V|/t and the dual together.

    (i) t* >= exact integral matching value; (ii) t* <= |V|/t, and equality
    certifies a fractional factor; (iii) the dual restricted to a random
    subset U stays feasible for G[U] and upper-bounds t*(G[U],w);
    (iv) t* >= |V_1|/t for V_1 = {v : g(v) > 10 tol}, with |V_1| also
    reported for a sweep of thresholds since the positivity cliff is
    tolerance-dependent in floating point.
    """
    cliques = enumerate_cliques(wg.base, t)
    n = wg.n
    ts = t_star(wg, t, tol, cliques)
    integral = integral_matching_value(wg, t, cliques)
    i_pass = ts >= integral - tol
    ii_bound = n / t
    ii_pass = ts <= ii_bound + tol
    ii_equality_case = False
    if abs(ts - ii_bound) <= tol:
        ii_equality_case = bool(has_fractional_factor(wg, t, tol, cliques).has_factor)
        ii_pass = ii_pass and ii_equality_case
    dual = solve_dual(wg, cliques, tol)

    rng = np.random.default_rng(seed)
    size = int(rng.integers(0, n + 1)) if n else 0
    subset = tuple(int(x) for x in np.sort(rng.permutation(n)[:size]))
    sub_wg, verts = induced_weighted(wg, subset)
    sub_cliques = enumerate_cliques(sub_wg.base, t)
    restricted_value = sum(dual.g[v] for v in subset) + sum(
        dual.h[(verts[a], verts[b])] * sub_wg.w[(a, b)] for (a, b) in sub_wg.base.edges
    )
    feasible = True
    for tup in sub_cliques.cliques:
        orig = [verts[x] for x in tup]
        cover = sum(dual.g[v] for v in orig) + sum(
            dual.h[(orig[a], orig[b])]
            for a in range(t)
            for b in range(a + 1, t)
        )
        if cover < 1 - tol:
            feasible = False
            break
    induced_ts = t_star(sub_wg, t, tol, sub_cliques)
    iii_pass = feasible and restricted_value >= induced_ts - tol

    thresholds = (tol, 10 * tol, 100 * tol, 1e-3)
    v1_sizes = {thr: sum(1 for v in range(n) if dual.g[v] > thr) for thr in thresholds}
    iv_threshold = 10 * tol
    iv_pass = ts >= v1_sizes[iv_threshold] / t - tol

    return Prop3Report(
        t_star=ts,
        integral_value=integral,
        i_pass=bool(i_pass),
        ii_bound=ii_bound,
        ii_pass=bool(ii_pass),
        ii_equality_case=ii_equality_case,
        iii_subset=subset,
        iii_restricted_value=float(restricted_value),
        iii_induced_t_star=induced_ts,
        iii_feasible=feasible,
        iii_pass=bool(iii_pass),
        v1_sizes=v1_sizes,
        iv_threshold=iv_threshold,
        iv_pass=bool(iv_pass),
        all_pass=bool(i_pass and ii_pass and iii_pass and iv_pass),
    )


@dataclass(frozen=True)
class SlacknessReport:
    worst_vertex_slack: float
    worst_edge_slack: float
    worst_clique_slack: float
    checked_vertices: int
    checked_edges: int
    checked_cliques: int
    all_pass: bool

    def to_dict(self) -> dict:
        return {
            "worst_vertex_slack": self.worst_vertex_slack,
            "worst_edge_slack": self.worst_edge_slack,
            "worst_clique_slack": self.worst_clique_slack,
            "checked_vertices": self.checked_vertices,
            "checked_edges": self.checked_edges,
            "checked_cliques": self.checked_cliques,
            "all_pass": self.all_pass,
        }


def complementary_slackness(
    p: PrimalSolution,
    d: DualSolution,
    wg: WeightedGraph,
    cliques: CliqueSet,
    tol: float = TOL_DEFAULT,
) -> SlacknessReport:
    """Check the three slackness families on a certified-optimal pair.

    g(v) > 10 tol forces vertex load 1; h(uv) > 10 tol forces pair load
    w(uv); f(T) > 10 tol forces a tight dual cover.  Refuses pairs whose
    objectives differ by more than 2 tol, since slackness only holds at
    optimality.
    """
    if abs(p.objective - d.objective) > 2 * tol:
        raise InputError(
            f"objective gap {abs(p.objective - d.objective):.3e} exceeds 2*tol; "
            "solutions are not certified optimal"
        )
    thr = 10 * tol
    fvec = _fvec(cliques, p.f)
    n = wg.n
    vloads = np.zeros(n)
    eloads = {e: 0.0 for e in wg.base.edges}
    for j, tup in enumerate(cliques.cliques):
        if fvec[j]:
            for a, u in enumerate(tup):
                vloads[u] += fvec[j]
                for v in tup[a + 1 :]:
                    eloads[(u, v)] += fvec[j]
    worst_v, n_v = 0.0, 0
    for v in range(n):
        if d.g[v] > thr:
            n_v += 1
            worst_v = max(worst_v, abs(vloads[v] - 1.0))
    worst_e, n_e = 0.0, 0
    for e in wg.base.edges:
        if d.h[e] > thr:
            n_e += 1
            worst_e = max(worst_e, abs(eloads[e] - wg.w[e]))
    worst_t, n_t = 0.0, 0
    for j, tup in enumerate(cliques.cliques):
        if fvec[j] > thr:
            n_t += 1
            cover = sum(d.g[u] for u in tup) + sum(
                d.h[(tup[a], tup[b])]
                for a in range(len(tup))
                for b in range(a + 1, len(tup))
            )
            worst_t = max(worst_t, abs(cover - 1.0))
    ok = worst_v <= thr and worst_e <= thr and worst_t <= thr
    return SlacknessReport(
        worst_vertex_slack=float(worst_v),
        worst_edge_slack=float(worst_e),
        worst_clique_slack=float(worst_t),
        checked_vertices=n_v,
        checked_edges=n_e,
        checked_cliques=n_t,
        all_pass=bool(ok),
    )


@dataclass(frozen=True)
class DriverReport:
    """Factor driver report: hypothesis audits next to the LP verdict.

    The hypotheses are sufficient, not necessary, so hyp_* can fail while the
    factor exists; reporting both sides makes that visible.
    """

    alpha: float
    D: int
    rich_edge_count: int
    hyp_family_pass: bool
    hyp_family_worst_vertex: int
    hyp_family_target: int
    hyp_span_pass: bool
    hyp_span_failures: int
    hyp_span_size: int
    hyp_propP_pass: bool
    hyp_propP_failures: int
    cert: FactorCert

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "D": self.D,
            "rich_edge_count": self.rich_edge_count,
            "hyp_family_pass": self.hyp_family_pass,
            "hyp_family_worst_vertex": self.hyp_family_worst_vertex,
            "hyp_family_target": self.hyp_family_target,
            "hyp_span_pass": self.hyp_span_pass,
            "hyp_span_failures": self.hyp_span_failures,
            "hyp_span_size": self.hyp_span_size,
            "hyp_propP_pass": self.hyp_propP_pass,
            "hyp_propP_failures": self.hyp_propP_failures,
            "cert": self.cert.to_dict(),
        }


def corollary_ff_driver(
    wg: WeightedGraph,
    t: int,
    alpha: float,
    D: int,
    tol: float = TOL_DEFAULT,
    trials: int = 20,
    seed: int = 0,
) -> DriverReport:
    """Audit the rich-subgraph hypotheses, then test the factor regardless.

    H is the spanning subgraph of alpha-rich edges.  Hypotheses: (i) every
    vertex carries a family of >= D/(t-1) rich K_t copies overlapping only at
    the vertex; (ii) every ceil(0.11 n/t) vertices span a K_t in H;
    (iii) H has property P(t, D, 0.2n, n), sampled.
    """
    from .cliques import default_span_size, property_P_audit, span_clique_audit, vertex_family

    from .graphs import rich_subgraph

    if not (alpha < 1 / (7 * t * t)):
        raise InputError(f"alpha must be < 1/(7 t^2) = {1 / (7 * t * t):.6f}, got {alpha}")
    if not (3 <= D <= wg.n / 2):
        raise InputError(f"need 3 <= D <= n/2, got D={D}, n={wg.n}")
    H = rich_subgraph(wg, alpha)
    family_target = D // (t - 1)
    worst_vertex = -1
    family_pass = True
    for v in range(wg.n):
        fam = vertex_family(H, None, v, t, family_target)
        if len(fam.cliques) < family_target:
            family_pass = False
            worst_vertex = v
            break
    span_size = default_span_size(wg.n, t)
    span_failures, _ = span_clique_audit(H, t, span_size, trials, seed)
    propP = property_P_audit(H, t, D, int(0.2 * wg.n), trials, seed + 1)
    cert = has_fractional_factor(wg, t, tol)
    return DriverReport(
        alpha=alpha,
        D=D,
        rich_edge_count=H.m,
        hyp_family_pass=family_pass,
        hyp_family_worst_vertex=worst_vertex,
        hyp_family_target=family_target,
        hyp_span_pass=span_failures == 0,
        hyp_span_failures=span_failures,
        hyp_span_size=span_size,
        hyp_propP_pass=propP.failures == 0,
        hyp_propP_failures=propP.failures,
        cert=cert,
    )
