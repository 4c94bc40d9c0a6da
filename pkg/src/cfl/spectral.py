"""Second adjacency eigenvalue, expander-mixing audits, and hypothesis thresholds.

lambda here always means max_{i>=2} |mu_i| for the adjacency spectrum
mu_1 >= ... >= mu_n of a d-regular graph (mu_1 = d).  The dense symmetric
eigendecomposition is the reference path; deflated power iteration is used
only above DENSE_LIMIT vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .graphs import Graph, regularity

DENSE_LIMIT = 2000
# Strict EML inequality is relaxed by this much; covers the degenerate
# |A| = 0 bound 0 < 0 and float noise in the counted side.
EML_SLACK = 1e-9


@dataclass(frozen=True)
class SpectralCert:
    """Certified second eigenvalue of a d-regular graph.

    mu2 and mu_n witness both ends of the spectrum (ties in |.| are resolved
    by reporting the max, which is the only quantity any statement consumes).
    lambda_equals_d flags disconnected or bipartite inputs; it is not an error.
    """

    n: int
    d: int
    lam: float
    method: str  # {dense_eig, power_iter}
    residual: float
    mu2: float | None
    mu_n: float | None
    lambda_equals_d: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "lambda": self.lam,
            "method": self.method,
            "residual": self.residual,
            "mu2": self.mu2,
            "mu_n": self.mu_n,
            "lambda_equals_d": self.lambda_equals_d,
            "tol": self.tol,
        }


@dataclass(frozen=True)
class MixingAuditReport:
    samples: int
    max_violation: float
    violated: bool
    worst_a_size: int
    worst_b_size: int

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "max_violation": self.max_violation,
            "violated": self.violated,
            "worst_a_size": self.worst_a_size,
            "worst_b_size": self.worst_b_size,
        }


def adjacency_matrix(g: Graph) -> np.ndarray:
    a = np.zeros((g.n, g.n))
    for u, v in g.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


def _require_regular(g: Graph) -> int:
    info = regularity(g)
    if not info.is_regular:
        raise InputError(
            f"graph is not regular (degrees {info.min_deg}..{info.max_deg}); "
            "lambda-based statements assume regularity"
        )
    return info.d


def second_eigenvalue(g: Graph, tol: float = 1e-8, method: str | None = None) -> SpectralCert:
    """lambda = max_{i>=2} |mu_i|, with an eigenpair residual certificate.

    method defaults to dense_eig for n <= DENSE_LIMIT, power_iter above.
    """
    if tol <= 0:
        raise InputError(f"tol must be positive, got {tol}")
    d = _require_regular(g)
    if method is None:
        method = "dense_eig" if g.n <= DENSE_LIMIT else "power_iter"
    if method not in ("dense_eig", "power_iter"):
        raise InputError(f"unknown method {method!r}")
    if g.n <= 1 or d == 0:
        return SpectralCert(g.n, d, 0.0, method, 0.0, 0.0, 0.0, d == 0 and g.n > 1, tol)
    a = adjacency_matrix(g)
    if method == "dense_eig":
        lam, residual, mu2, mun = _dense_lambda(a, d)
    else:
        lam, residual, mu2, mun = _power_lambda(a, d, tol)
    return SpectralCert(
        n=g.n,
        d=d,
        lam=lam,
        method=method,
        residual=residual,
        mu2=mu2,
        mu_n=mun,
        lambda_equals_d=bool(lam >= d - 1e-9),
        tol=tol,
    )


def _dense_lambda(a: np.ndarray, d: int):
    vals, vecs = np.linalg.eigh(a)  # ascending
    # drop one copy of the Perron value d (largest); the rest is the lambda pool
    mu_sorted_desc = vals[::-1]
    mu2 = float(mu_sorted_desc[1])
    mun = float(mu_sorted_desc[-1])
    pool = np.abs(mu_sorted_desc[1:])
    k = int(np.argmax(pool))
    lam = float(pool[k])
    # witness eigenpair: mu_sorted_desc[1:][k] sits at vals[len(vals)-2-k]
    j = len(vals) - 2 - k
    v = vecs[:, j]
    residual = float(np.linalg.norm(a @ v - vals[j] * v))
    return lam, residual, mu2, mun


def _power_lambda(a: np.ndarray, d: int, tol: float, max_iters: int = 100000):
    """Deflated power iteration on B = A - (d/n) J, squared to damp +/- ties."""
    n = a.shape[0]
    ones = np.ones(n) / math.sqrt(n)

    def bmat(x):
        return a @ x - d * (ones @ x) * ones

    rng = np.random.default_rng(0xC0FFEE)  # fixed internal seed: deterministic path
    x = rng.standard_normal(n)
    x -= (ones @ x) * ones
    nx = np.linalg.norm(x)
    if nx == 0:
        raise NumericalError("degenerate start vector in power iteration")
    x /= nx
    theta = 0.0
    for _ in range(max_iters):
        y = bmat(bmat(x))  # B^2 keeps mu_2 ~ -mu_n ties from oscillating
        y -= (ones @ y) * ones
        ny = np.linalg.norm(y)
        if ny < 1e-300:
            return 0.0, 0.0, 0.0, 0.0
        x = y / ny
        # Rayleigh-Ritz on span{x, Bx} splits the +/- pair
        bx = bmat(x)
        basis = [x]
        r = bx - (x @ bx) * x
        nr = np.linalg.norm(r)
        if nr > 1e-12:
            basis.append(r / nr)
        s = np.column_stack(basis)
        t = s.T @ np.column_stack([bmat(s[:, j]) for j in range(s.shape[1])])
        t = (t + t.T) / 2
        evals, evecs = np.linalg.eigh(t)
        k = int(np.argmax(np.abs(evals)))
        theta = float(evals[k])
        u = s @ evecs[:, k]
        u /= np.linalg.norm(u)
        residual = float(np.linalg.norm(bmat(u) - theta * u))
        if residual <= tol:
            # only the dominant-in-|.| end is witnessed; the other is unknown
            lam = abs(theta)
            mu2 = theta if theta >= 0 else None
            mun = theta if theta < 0 else None
            return lam, residual, mu2, mun
    raise NumericalError(f"power iteration did not reach residual {tol}")


def count_ordered_pairs(g: Graph, A, B) -> int:
    """e(A,B): ordered pairs (a,b), a in A, b in B, ab an edge.

    Edges inside A intersect B are counted once per orientation, so edges with
    both ends in A intersect B contribute twice.
    """
    bset = set(B)
    total = 0
    for a in set(A):
        total += sum(1 for u in g.adj[a] if u in bset)
    return total


def mixing_audit(g: Graph, cert: SpectralCert, num_samples: int, seed: int) -> MixingAuditReport:
    """Sample subset pairs and check |e(A,B) - (d/n)|A||B|| < lambda sqrt(|A||B|).

    Subset sizes are uniform on [1, n]; subsets uniform given the size.  The
    strict inequality is relaxed by EML_SLACK; max_violation is the raw
    maximum of |e - expected| - lambda*sqrt(|A||B|) over the samples.
    """
    if cert.n != g.n:
        raise InputError("certificate does not match graph")
    if num_samples < 1:
        raise InputError("num_samples must be >= 1")
    n, d, lam = g.n, cert.d, cert.lam
    rng = np.random.default_rng(seed)
    a = adjacency_matrix(g)
    worst = -math.inf
    worst_sizes = (0, 0)
    batch = 512
    done = 0
    while done < num_samples:
        k = min(batch, num_samples - done)
        sa = rng.integers(1, n + 1, size=k)
        sb = rng.integers(1, n + 1, size=k)
        ia = np.zeros((k, n))
        ib = np.zeros((k, n))
        for i in range(k):
            ia[i, rng.permutation(n)[: sa[i]]] = 1.0
            ib[i, rng.permutation(n)[: sb[i]]] = 1.0
        counts = np.einsum("ij,ij->i", ia @ a, ib)
        excess = np.abs(counts - (d / n) * sa * sb) - lam * np.sqrt(sa * sb)
        j = int(np.argmax(excess))
        if excess[j] > worst:
            worst = float(excess[j])
            worst_sizes = (int(sa[j]), int(sb[j]))
        done += k
    return MixingAuditReport(
        samples=num_samples,
        max_violation=worst,
        violated=bool(worst > EML_SLACK),
        worst_a_size=worst_sizes[0],
        worst_b_size=worst_sizes[1],
    )


def lambda_floor_check(cert: SpectralCert, tol: float = 1e-9):
    """lambda >= sqrt(d/2) whenever d <= n/2; None when not applicable."""
    if cert.d > cert.n / 2:
        return None
    return bool(cert.lam >= math.sqrt(cert.d / 2) - tol)


@dataclass(frozen=True)
class HypothesisReport:
    """Evaluation of the eigenvalue condition and the two degree thresholds.

    branch is one of {dense_branch, sparse_branch, both, fails}; the lambda
    condition lambda <= c d^{t-1}/n^{t-2} enters every branch.  The floor
    d >= n^{1-1/(2t-3)} / 2^{1/(2t-3)} is reported alongside but does not
    gate anything.
    """

    t: int
    c: float
    lambda_bound: float
    lambda_ok: bool
    beta: float
    delta: float
    dense_degree_threshold: float
    dense_degree_ok: bool
    sparse_degree_threshold: float
    sparse_degree_ok: bool
    branch: str
    degree_floor: float
    degree_floor_ok: bool

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "c": self.c,
            "lambda_bound": self.lambda_bound,
            "lambda_ok": self.lambda_ok,
            "beta": self.beta,
            "delta": self.delta,
            "dense_degree_threshold": self.dense_degree_threshold,
            "dense_degree_ok": self.dense_degree_ok,
            "sparse_degree_threshold": self.sparse_degree_threshold,
            "sparse_degree_ok": self.sparse_degree_ok,
            "branch": self.branch,
            "degree_floor": self.degree_floor,
            "degree_floor_ok": self.degree_floor_ok,
        }


def eigenvalue_constant(t: int) -> float:
    """c = 1/(50 t 4^{t-2}); t=3 gives 1/600."""
    return 1.0 / (50 * t * 4 ** (t - 2))


def beta_exponent(t: int) -> float:
    return 1.0 / ((4 * t * t + 1) * (2 * t - 3))


def delta_exponent(t: int) -> float:
    return (4 * t * t) / ((4 * t * t + 1) * (2 * t - 3))


def hypothesis_check(cert: SpectralCert, t: int) -> HypothesisReport:
    """Classify which branch's hypotheses hold for (n, d, lambda) at this t."""
    if t < 3:
        raise InputError(f"t must be >= 3, got {t}")
    n, d, lam = cert.n, cert.d, cert.lam
    c = eigenvalue_constant(t)
    beta = beta_exponent(t)
    delta = delta_exponent(t)
    lambda_bound = c * d ** (t - 1) / n ** (t - 2) if n > 0 else 0.0
    lambda_ok = lam <= lambda_bound
    dense_thr = n ** (1 - 1 / (2 * t - 3) + beta)
    sparse_thr = n ** (1 - delta)
    dense_ok = d >= dense_thr
    sparse_ok = d <= sparse_thr
    if lambda_ok and dense_ok and sparse_ok:
        branch = "both"
    elif lambda_ok and dense_ok:
        branch = "dense_branch"
    elif lambda_ok and sparse_ok:
        branch = "sparse_branch"
    else:
        branch = "fails"
    # floor from the proof: lambda >= sqrt(d/2) and lambda <= d^{t-1}/n^{t-2}
    # force d^{2t-3} >= n^{2t-4}/2
    floor = n ** (1 - 1 / (2 * t - 3)) / 2 ** (1 / (2 * t - 3))
    return HypothesisReport(
        t=t,
        c=c,
        lambda_bound=lambda_bound,
        lambda_ok=bool(lambda_ok),
        beta=beta,
        delta=delta,
        dense_degree_threshold=float(dense_thr),
        dense_degree_ok=bool(dense_ok),
        sparse_degree_threshold=float(sparse_thr),
        sparse_degree_ok=bool(sparse_ok),
        branch=branch,
        degree_floor=float(floor),
        degree_floor_ok=bool(d >= floor),
    )
