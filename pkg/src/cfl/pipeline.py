"""Clique-factor extraction pipelines and the randomized covering stage.

Two extraction engines produce bundles of fractional K_t-factors with
aggregate pair load at most 1: the dense engine iteratively re-solves the
factor LP while decrementing edge weights by the pair loads just used, and
the sparse engine partitions the edge set uniformly at random and solves each
part at unit weights.  A bundle is then sampled into a random t-uniform
hypergraph H_f (clique T survives with probability f(T) = sum_i f_i(T)),
matched by a greedy or nibble matcher, and topped up by a greedy completion
pass on whatever the matcher left uncovered.

All randomness flows from a single seed through numpy SeedSequence spawning,
so identical (graph, config) runs produce identical reports.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .cliques import CliqueSet, enumerate_cliques
from .errors import InputError, InvariantError, NumericalError, ResourceError
from .factor_lp import TOL_DEFAULT, FactorCert, has_fractional_factor
from .graphs import (
    Graph,
    WeightedGraph,
    from_edge_list,
    induced_subgraph,
    regularity,
    uniform_weights,
)
from .spectral import beta_exponent, hypothesis_check, second_eigenvalue


def worker_count() -> int:
    """Worker cap from CFL_THREADS; 1 (fully sequential) when unset."""
    try:
        return max(1, int(os.environ.get("CFL_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class FactorBundle:
    """A list of fractional factors extracted from one host graph.

    factors[i] maps source-graph clique ids (positions in the deterministic
    enumeration order of enumerate_cliques(g, t)) to weights.  ell is the
    achieved count, which may fall short of the request; audits carry the
    per-iteration or per-part diagnostics.
    """

    factors: tuple
    ell: int
    mode: str  # dense | sparse
    per_edge_load: dict
    audits: dict = field(default_factory=dict)

    def max_edge_load(self) -> float:
        return max(self.per_edge_load.values(), default=0.0)


def default_alpha(n: int, d: int, t: int) -> float:
    """Richness threshold (d/(4n))^{t-2} / (20t) used by the dense engine."""
    return (d / (4 * n)) ** (t - 2) / (20 * t)


def default_ell(n: int, t: int) -> int:
    """max(2, floor(n^beta)); the exponent only exceeds 1 far past desk scale."""
    return max(2, int(n ** beta_exponent(t)))


def dense_extract(
    g: Graph,
    t: int,
    ell: int,
    alpha: float | None = None,
    tol: float = TOL_DEFAULT,
    cliques: CliqueSet | None = None,
) -> FactorBundle:
    """Iterative weight-update extraction on a d-regular host.

    Starts from w == 1; each round certifies a fractional factor of the
    current weights, subtracts its pair loads from the weights, and clamps to
    [0,1].  Two identities are enforced per round: weights stay >= -10 tol
    before clamping, and every weighted degree drops by exactly t-1 within
    10 tol (each unit of vertex load spends t-1 halfedge weight).  Stops with
    a partial bundle when no factor exists at the current weights.
    """
    if t < 3:
        raise InputError(f"t must be >= 3, got {t}")
    if ell < 1:
        raise InputError(f"ell must be >= 1, got {ell}")
    info = regularity(g)
    if not info.is_regular:
        raise InputError("dense extraction requires a regular host graph")
    if alpha is None:
        alpha = default_alpha(g.n, info.d, t) if g.n else 0.0
    if cliques is None:
        cliques = enumerate_cliques(g, t)
    cid = {tup: j for j, tup in enumerate(cliques.cliques)}
    w = {e: 1.0 for e in g.edges}
    load = {e: 0.0 for e in g.edges}
    factors = []
    iterations = []
    note = ""
    for i in range(ell):
        rich = sum(1 for x in w.values() if x >= 1 - alpha - 1e-12)
        cert = has_fractional_factor(WeightedGraph(g, dict(w)), t, tol, cliques)
        if not cert.has_factor:
            note = f"no fractional factor at iteration {i}; t_star = {cert.t_star:.9g}"
            iterations.append(
                {"iteration": i, "t_star": cert.t_star, "rich_edges": rich, "extracted": False}
            )
            break
        dec = {e: 0.0 for e in g.edges}
        for tup, val in cert.f.items():
            for a in range(t):
                for b in range(a + 1, t):
                    dec[(tup[a], tup[b])] += val
        drop = np.zeros(g.n)
        for (u, v), x in dec.items():
            drop[u] += x
            drop[v] += x
        residual = float(np.max(np.abs(drop - (t - 1)))) if g.n else 0.0
        if residual > 10 * tol:
            raise InvariantError(
                f"iteration {i}: weighted degree drop deviates from t-1 by {residual:.3e}"
            )
        clamped = 0
        min_pre = 0.0
        for e in g.edges:
            nw = w[e] - dec[e]
            min_pre = min(min_pre, nw)
            if nw < -10 * tol:
                raise InvariantError(
                    f"iteration {i}: weight of edge {e} driven to {nw:.3e} < -10 tol"
                )
            if nw < -tol:
                clamped += 1
            w[e] = min(1.0, max(0.0, nw))
            load[e] += dec[e]
        factors.append({cid[tup]: val for tup, val in sorted(cert.f.items())})
        iterations.append(
            {
                "iteration": i,
                "t_star": cert.t_star,
                "rich_edges": rich,
                "extracted": True,
                "degree_residual": residual,
                "clamp_violations": clamped,
                "min_weight_pre_clamp": min_pre,
                "support": len(cert.f),
            }
        )
    audits = {
        "requested": ell,
        "achieved": len(factors),
        "alpha": alpha,
        "iterations": iterations,
        "note": note,
        "max_per_edge_load": max(load.values(), default=0.0),
    }
    return FactorBundle(
        factors=tuple(factors), ell=len(factors), mode="dense", per_edge_load=load, audits=audits
    )


def sparse_split(g: Graph, ell: int, seed: int) -> list:
    """Partition E(g) into ell spanning subgraphs, edges assigned i.i.d. uniform."""
    if ell < 1:
        raise InputError(f"ell must be >= 1, got {ell}")
    if ell == 1:
        return [g]
    rng = np.random.default_rng(seed)
    assign = rng.integers(0, ell, size=g.m)
    buckets = [[] for _ in range(ell)]
    for e, i in zip(g.edges, assign):
        buckets[int(i)].append(e)
    return [from_edge_list(g.n, part) for part in buckets]


def sparse_extract(
    g: Graph,
    t: int,
    ell: int,
    seed: int,
    tol: float = TOL_DEFAULT,
    cliques: CliqueSet | None = None,
) -> FactorBundle:
    """Random-split extraction: unit weights, alpha = 0, one LP per part.

    Hosts are edge-disjoint, so each clique receives positive weight in at
    most one factor and aggregate pair loads never exceed 1.  Parts without a
    fractional factor are reported, not fatal.
    """
    if t < 3:
        raise InputError(f"t must be >= 3, got {t}")
    parts = sparse_split(g, ell, seed)
    if cliques is None:
        cliques = enumerate_cliques(g, t)
    cid = {tup: j for j, tup in enumerate(cliques.cliques)}

    def solve(part: Graph) -> FactorCert:
        return has_fractional_factor(uniform_weights(part), t, tol)

    workers = worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            certs = list(pool.map(solve, parts))
    else:
        certs = [solve(part) for part in parts]

    load = {e: 0.0 for e in g.edges}
    factors = []
    failed = []
    for i, cert in enumerate(certs):
        if not cert.has_factor:
            failed.append(i)
            continue
        factors.append({cid[tup]: val for tup, val in sorted(cert.f.items())})
        for tup, val in cert.f.items():
            for a in range(t):
                for b in range(a + 1, t):
                    load[(tup[a], tup[b])] += val
    audits = {
        "requested": ell,
        "achieved": len(factors),
        "failed_parts": failed,
        "split_sizes": [p.m for p in parts],
        "max_per_edge_load": max(load.values(), default=0.0),
    }
    return FactorBundle(
        factors=tuple(factors), ell=len(factors), mode="sparse", per_edge_load=load, audits=audits
    )


@dataclass(frozen=True)
class RandomHypergraph:
    """Sampled t-uniform hypergraph on the host's vertex set.

    hyperedges are the surviving cliques (tuples of source labels);
    inclusion_prob records f(T) for every clique with positive mass, kept for
    the concentration audit and reproducibility checks.
    """

    t: int
    vertices: int
    hyperedges: tuple
    inclusion_prob: dict  # clique id -> f(T), positive entries only

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "vertices": self.vertices,
            "hyperedges": [list(e) for e in self.hyperedges],
            "inclusion_prob": {str(j): p for j, p in sorted(self.inclusion_prob.items())},
        }


def build_Hf(
    g: Graph,
    t: int,
    bundle: FactorBundle,
    seed: int,
    cliques: CliqueSet | None = None,
) -> RandomHypergraph:
    """Include each clique T independently with probability min(f(T), 1).

    f(T) sums the bundle's factors; values beyond 1 + 10 tol indicate a
    corrupted bundle and raise, values in (1, 1+10 tol] are solver noise and
    clamp to 1.  Candidates are visited in ascending clique id so a fixed
    seed yields a fixed hypergraph.
    """
    if cliques is None:
        cliques = enumerate_cliques(g, t)
    f_total: dict = {}
    for fac in bundle.factors:
        for j, val in fac.items():
            f_total[j] = f_total.get(j, 0.0) + val
    for j, val in f_total.items():
        if val > 1 + 10 * TOL_DEFAULT:
            raise InvariantError(
                f"aggregate f({cliques.cliques[j]}) = {val:.9g} exceeds 1 + 10 tol"
            )
    rng = np.random.default_rng(seed)
    hyperedges = []
    probs = {}
    for j in sorted(f_total):
        p = min(f_total[j], 1.0)
        if p <= 0.0:
            continue
        probs[j] = p
        if rng.random() < p:
            hyperedges.append(cliques.cliques[j])
    return RandomHypergraph(
        t=t, vertices=g.n, hyperedges=tuple(hyperedges), inclusion_prob=probs
    )


@dataclass(frozen=True)
class ConcentrationReport:
    """Degree and codegree bands for H_f.

    Degrees are compared against ell +/- (k/2) sqrt(ell ln ell) with
    k = 8 / sqrt(beta); codegrees against 1 + 3 ln n.  At small ell the
    degree band is far wider than ell itself, so emptiness is flagged
    separately rather than relying on the band to catch it.
    """

    applicable: bool
    ell: int
    band_low: float
    band_high: float
    degrees_outside: int
    min_degree: int
    max_degree: int
    mean_degree: float
    codegree_bound: float
    max_codegree: int
    codegrees_outside: int
    empty: bool

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "ell": self.ell,
            "band_low": self.band_low,
            "band_high": self.band_high,
            "degrees_outside": self.degrees_outside,
            "min_degree": self.min_degree,
            "max_degree": self.max_degree,
            "mean_degree": self.mean_degree,
            "codegree_bound": self.codegree_bound,
            "max_codegree": self.max_codegree,
            "codegrees_outside": self.codegrees_outside,
            "empty": self.empty,
        }


def hf_degrees(hf: RandomHypergraph) -> np.ndarray:
    deg = np.zeros(hf.vertices, dtype=int)
    for e in hf.hyperedges:
        for v in e:
            deg[v] += 1
    return deg


def hf_codegrees(hf: RandomHypergraph) -> dict:
    codeg: dict = {}
    for e in hf.hyperedges:
        for a in range(len(e)):
            for b in range(a + 1, len(e)):
                key = (e[a], e[b])
                codeg[key] = codeg.get(key, 0) + 1
    return codeg


def concentration_audit(hf: RandomHypergraph, ell: int, n: int) -> ConcentrationReport:
    """Audit H_f against the ell-regular-in-expectation degree band and the
    1 + 3 ln n codegree ceiling.  Not applicable below ell = 2 (ln ell = 0)."""
    if ell < 2:
        return ConcentrationReport(
            applicable=False,
            ell=ell,
            band_low=0.0,
            band_high=0.0,
            degrees_outside=0,
            min_degree=0,
            max_degree=0,
            mean_degree=0.0,
            codegree_bound=1 + 3 * math.log(n) if n else 0.0,
            max_codegree=0,
            codegrees_outside=0,
            empty=len(hf.hyperedges) == 0,
        )
    k = 8.0 / math.sqrt(beta_exponent(hf.t))
    half = (k / 2) * math.sqrt(ell * math.log(ell))
    lo, hi = ell - half, ell + half
    deg = hf_degrees(hf)
    outside = int(np.sum((deg < lo) | (deg > hi)))
    codeg = hf_codegrees(hf)
    bound = 1 + 3 * math.log(n) if n else 0.0
    max_co = max(codeg.values(), default=0)
    co_outside = sum(1 for x in codeg.values() if x > bound)
    return ConcentrationReport(
        applicable=True,
        ell=ell,
        band_low=lo,
        band_high=hi,
        degrees_outside=outside,
        min_degree=int(deg.min()) if n else 0,
        max_degree=int(deg.max()) if n else 0,
        mean_degree=float(deg.mean()) if n else 0.0,
        codegree_bound=bound,
        max_codegree=max_co,
        codegrees_outside=co_outside,
        empty=len(hf.hyperedges) == 0,
    )


@dataclass(frozen=True)
class MatchingResult:
    matched: tuple  # disjoint t-tuples
    uncovered: tuple  # sorted vertex labels
    uncovered_count: int

    def to_dict(self) -> dict:
        return {
            "matched": [list(e) for e in self.matched],
            "uncovered": list(self.uncovered),
            "uncovered_count": self.uncovered_count,
        }


def _greedy_pass(order, hyperedges, covered) -> list:
    taken = []
    for idx in order:
        e = hyperedges[idx]
        if all(not covered[v] for v in e):
            taken.append(e)
            for v in e:
                covered[v] = True
    return taken


def _result(n: int, matched: list) -> MatchingResult:
    covered = set()
    for e in matched:
        covered.update(e)
    uncovered = tuple(v for v in range(n) if v not in covered)
    return MatchingResult(
        matched=tuple(sorted(matched)), uncovered=uncovered, uncovered_count=len(uncovered)
    )


def nibble_matching(
    hf: RandomHypergraph, mode: str, epsilon: float, seed: int
) -> MatchingResult:
    """Near-perfect matching in H_f by random-order greedy or nibble rounds.

    Nibble rounds activate each surviving hyperedge with probability
    epsilon / Delta (Delta = current max vertex degree); activations that
    clash with another activation are discarded wholesale, the rest join the
    matching.  Capped at 10 ceil(ln n) rounds, then a greedy pass sweeps the
    survivors, so the result is always maximal.
    """
    if not (0 < epsilon < 1):
        raise InputError(f"epsilon must lie in (0,1), got {epsilon}")
    if mode not in ("greedy", "nibble"):
        raise InputError(f"unknown matching mode {mode!r}")
    n = hf.vertices
    rng = np.random.default_rng(seed)
    covered = [False] * n
    matched: list = []
    alive = list(hf.hyperedges)
    if mode == "nibble" and alive:
        cap = 10 * math.ceil(math.log(n)) if n > 1 else 1
        for _ in range(max(1, cap)):
            alive = [e for e in alive if all(not covered[v] for v in e)]
            if not alive:
                break
            deg = np.zeros(n, dtype=int)
            for e in alive:
                for v in e:
                    deg[v] += 1
            delta = int(deg.max())
            p = min(1.0, epsilon / delta)
            active = np.flatnonzero(rng.random(len(alive)) < p)
            use = np.zeros(n, dtype=int)
            for i in active:
                for v in alive[i]:
                    use[v] += 1
            for i in active:
                e = alive[i]
                if all(use[v] == 1 for v in e):
                    matched.append(e)
                    for v in e:
                        covered[v] = True
    alive = [e for e in alive if all(not covered[v] for v in e)]
    matched.extend(_greedy_pass(rng.permutation(len(alive)), alive, covered))
    return _result(n, matched)


def greedy_completion(g: Graph, t: int, uncovered, seed: int) -> tuple:
    """Greedily pack K_t copies of g into the uncovered set, random order.

    One randomized greedy pass over the cliques of G[uncovered] is maximal:
    any clique disjoint from the picks would itself have been picked.
    Returns (added cliques in source labels, remaining uncovered tuple).
    """
    unc = sorted(uncovered)
    added = []
    if len(unc) >= t:
        sub, verts = induced_subgraph(g, unc)
        cs = enumerate_cliques(sub, t)
        if cs.cliques:
            rng = np.random.default_rng(seed)
            covered = [False] * sub.n
            for tup in _greedy_pass(rng.permutation(len(cs.cliques)), list(cs.cliques), covered):
                added.append(tuple(verts[x] for x in tup))
    taken = {v for e in added for v in e}
    remaining = tuple(v for v in unc if v not in taken)
    return added, remaining


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for run_end_to_end; seed is mandatory, everything else defaulted."""

    seed: int
    mode: str = "auto"  # auto | dense | sparse
    ell: int | None = None
    alpha: float | None = None
    epsilon: float = 0.1
    matcher: str = "nibble"  # nibble | greedy
    tol: float = TOL_DEFAULT
    force: bool = False
    completion: bool = True


@dataclass(frozen=True)
class PipelineReport:
    parameters: dict
    stage_audits: dict
    result: MatchingResult
    uncovered_fraction: float

    def to_dict(self) -> dict:
        return {
            "parameters": self.parameters,
            "stage_audits": self.stage_audits,
            "result": self.result.to_dict(),
            "uncovered_fraction": self.uncovered_fraction,
        }


class HypothesisRejected(InputError):
    """Raised without force when the eigenvalue hypothesis fails."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@contextmanager
def _stage(name: str):
    """Re-raise stage failures with the stage name prefixed to the message."""
    try:
        yield
    except ResourceError as exc:
        raise ResourceError(f"[stage:{name}] {exc}", partial=exc.partial) from exc
    except (InputError, NumericalError, InvariantError) as exc:
        raise type(exc)(f"[stage:{name}] {exc}") from exc


def run_end_to_end(g: Graph, t: int, config: PipelineConfig) -> PipelineReport:
    """Spectral certificate -> branch choice -> extraction -> H_f -> matching.

    The eigenvalue hypothesis lambda <= c d^{t-1}/n^{t-2} fails on every
    desk-scale instance; with config.force the run proceeds and the failure
    is flagged in the audits, without it HypothesisRejected carries the
    hypothesis report.  A final greedy completion packs cliques of
    G[uncovered] after the hypergraph matcher, since the matcher's leftover
    guarantee is asymptotic; the pre-completion count stays in the audits.
    """
    if config.mode not in ("auto", "dense", "sparse"):
        raise InputError(f"unknown mode {config.mode!r}")
    info = regularity(g)
    if not info.is_regular:
        raise InputError("pipeline requires a regular input graph")
    with _stage("spectral"):
        cert = second_eigenvalue(g, tol=min(1e-8, config.tol))
        hyp = hypothesis_check(cert, t)
    if hyp.branch == "fails" and not config.force:
        raise HypothesisRejected(
            "eigenvalue hypothesis fails "
            f"(lambda = {cert.lam:.6g} > bound {hyp.lambda_bound:.6g}); "
            "pass force to run anyway",
            report=hyp,
        )
    if config.mode == "auto":
        if hyp.branch in ("dense_branch", "both"):
            mode = "dense"
        elif hyp.branch == "sparse_branch":
            mode = "sparse"
        else:
            mode = "dense" if hyp.dense_degree_ok else "sparse"
    else:
        mode = config.mode
    ell = config.ell if config.ell is not None else default_ell(g.n, t)

    ss = np.random.SeedSequence(config.seed)
    s_split, s_hf, s_match, s_complete = (int(x) for x in ss.generate_state(4))

    with _stage("extraction"):
        cliques = enumerate_cliques(g, t)
        if mode == "dense":
            bundle = dense_extract(g, t, ell, config.alpha, config.tol, cliques)
        else:
            bundle = sparse_extract(g, t, ell, s_split, config.tol, cliques)
    with _stage("hf"):
        hf = build_Hf(g, t, bundle, s_hf, cliques)
        conc = concentration_audit(hf, bundle.ell, g.n)
    with _stage("matching"):
        pre = nibble_matching(hf, config.matcher, config.epsilon, s_match)

    matched = list(pre.matched)
    completion_added = 0
    if config.completion and pre.uncovered_count >= t:
        with _stage("completion"):
            added, _ = greedy_completion(g, t, pre.uncovered, s_complete)
        matched.extend(added)
        completion_added = len(added)
    result = _result(g.n, matched)

    bound = g.n ** (1 - 1 / (8 * t**4)) if g.n else 0.0
    parameters = {
        "n": g.n,
        "d": info.d,
        "t": t,
        "lambda": cert.lam,
        "ell_requested": ell,
        "ell_achieved": bundle.ell,
        "seed": config.seed,
        "stage_seeds": {
            "split": s_split,
            "hf": s_hf,
            "match": s_match,
            "complete": s_complete,
        },
        "mode_requested": config.mode,
        "mode_effective": mode,
        "alpha": bundle.audits.get("alpha"),
        "epsilon": config.epsilon,
        "matcher": config.matcher,
        "tol": config.tol,
        "force": config.force,
    }
    stage_audits = {
        "spectral": cert.to_dict(),
        "hypothesis": hyp.to_dict(),
        "hypothesis_failed": hyp.branch == "fails",
        "extraction": bundle.audits,
        "hf": {
            "hyperedges": len(hf.hyperedges),
            "candidates": len(hf.inclusion_prob),
            "max_inclusion_prob": max(hf.inclusion_prob.values(), default=0.0),
            "concentration": conc.to_dict(),
        },
        "matching": {
            "matcher": config.matcher,
            "hf_matched": len(pre.matched),
            "hf_uncovered_count": pre.uncovered_count,
        },
        "completion": {
            "enabled": config.completion,
            "added": completion_added,
        },
        "leftover_bound": {
            "value": bound,
            "vacuous": bound >= g.n - t,
            "note": "asymptotic leftover bound, recorded for context only",
        },
        "matcher_params": {"delta_prime": 1 / t, "gamma": 0.9},
    }
    return PipelineReport(
        parameters=parameters,
        stage_audits=stage_audits,
        result=result,
        uncovered_fraction=result.uncovered_count / g.n if g.n else 0.0,
    )
