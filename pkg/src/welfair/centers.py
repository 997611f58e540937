"""Center selection: k-means++ seeding, weighted Lloyd, group-fair variants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .errors import CenterError
from .model import Instance


@dataclass
class CenterSet:
    centers: np.ndarray
    provenance: str
    score: float
    restart_scores: list[float] | None = None


def _sqdist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return cdist(X, C, "sqeuclidean")


def kmeanspp_init(
    instance: Instance, k: int, weights: np.ndarray, seed: int
) -> np.ndarray:
    """D^2-weighted seeding scaled by point weights; returns (k, d) centers."""
    X = instance.features
    n = instance.n
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError("weights must have one entry per point")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with positive total")
    if k > n:
        raise CenterError(f"k={k} exceeds n={n}")
    rng = np.random.default_rng(seed)
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.choice(n, p=w / w.sum())
    d2 = _sqdist(X, X[chosen[0]][None, :])[:, 0]
    for t in range(1, k):
        prob = w * d2
        total = prob.sum()
        if total <= 0.0:
            raise CenterError(
                f"k={k} exceeds the number of distinct candidate points"
            )
        chosen[t] = rng.choice(n, p=prob / total)
        d2 = np.minimum(d2, _sqdist(X, X[chosen[t]][None, :])[:, 0])
    return X[chosen].copy()


def _repair_empty(
    centers: np.ndarray, X: np.ndarray, cost_per_point: np.ndarray, empties: list[int]
) -> None:
    # reseed each empty cluster at the point with maximal current cost,
    # tie broken by lowest point index via argmax
    costs = cost_per_point.copy()
    for i in empties:
        j = int(np.argmax(costs))
        centers[i] = X[j]
        costs[j] = -np.inf


def lloyd(
    instance: Instance,
    k: int,
    weights: np.ndarray,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> CenterSet:
    """Weighted Lloyd iteration from a k-means++ start.

    Alternates nearest-center assignment (ties to the lowest center index)
    with weighted-centroid updates until the relative cost improvement drops
    below tol or max_iters is reached. Score is the weighted cost at p=2.
    """
    X = instance.features
    n = instance.n
    w = np.asarray(weights, dtype=np.float64)
    centers = kmeanspp_init(instance, k, w, seed)
    prev_cost = math.inf
    for _ in range(max_iters):
        dist = _sqdist(X, centers)
        assign = np.argmin(dist, axis=1)
        dsel = dist[np.arange(n), assign]
        cost = float((w * dsel).sum())
        sizes = np.bincount(assign, minlength=k)
        empties = [i for i in range(k) if sizes[i] == 0]
        if empties:
            _repair_empty(centers, X, w * dsel, empties)
            prev_cost = math.inf
            continue
        if math.isfinite(prev_cost) and prev_cost - cost <= tol * max(
            prev_cost, 1e-30
        ):
            break
        prev_cost = cost
        for i in range(k):
            mask = assign == i
            wi = w[mask]
            centers[i] = (wi[:, None] * X[mask]).sum(axis=0) / wi.sum()
    dist = _sqdist(X, centers)
    assign = np.argmin(dist, axis=1)
    score = float((w * dist[np.arange(n), assign]).sum())
    return CenterSet(centers, f"lloyd(seed={seed})", score)


def two_group_center(
    pts_a: np.ndarray,
    pts_b: np.ndarray,
    n_a: int,
    n_b: int,
    tol: float = 1e-9,
) -> tuple[np.ndarray, float]:
    """Center minimizing max of the two per-group average costs within a cluster.

    The optimum lies on the segment between the group means; along it each
    group's cost is a convex parabola in gamma, so ternary search on the max
    of the two finds it. Returns (center, gamma) with
    center = gamma * mean_a + (1 - gamma) * mean_b.
    """
    mu_a = pts_a.mean(axis=0)
    mu_b = pts_b.mean(axis=0)
    m_a, m_b = len(pts_a), len(pts_b)
    sse_a = float(((pts_a - mu_a) ** 2).sum())
    sse_b = float(((pts_b - mu_b) ** 2).sum())
    gap2 = float(((mu_a - mu_b) ** 2).sum())
    if gap2 <= 0.0:
        return mu_a.copy(), 1.0

    def g(gamma: float) -> float:
        fa = (m_a * (1.0 - gamma) ** 2 * gap2 + sse_a) / n_a
        fb = (m_b * gamma ** 2 * gap2 + sse_b) / n_b
        return max(fa, fb)

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if g(m1) <= g(m2):
            hi = m2
        else:
            lo = m1
    gamma = 0.5 * (lo + hi)
    # snap to the boundary when the unconstrained crossing lies outside [0, 1]
    if gamma < tol:
        gamma = 0.0
    elif gamma > 1.0 - tol:
        gamma = 1.0
    return gamma * mu_a + (1.0 - gamma) * mu_b, gamma


def _mw_center(
    pts: np.ndarray,
    cols: np.ndarray,
    counts: np.ndarray,
    present: np.ndarray,
    iters: int = 40,
    eta: float = 0.5,
) -> np.ndarray:
    # multiplicative-weights reweighting over the groups present in the
    # cluster; heuristic, no guarantee
    w = {int(h): 1.0 for h in present}
    best_val = math.inf
    best_c = pts.mean(axis=0)
    for _ in range(iters):
        pw = np.array([w[int(c)] / counts[int(c)] for c in cols])
        c = (pw[:, None] * pts).sum(axis=0) / pw.sum()
        costs = {}
        for h in present:
            h = int(h)
            mask = cols == h
            costs[h] = float(((pts[mask] - c) ** 2).sum()) / counts[h]
        top = max(costs.values())
        if top < best_val:
            best_val = top
            best_c = c
        if top <= 0.0:
            break
        for h in present:
            h = int(h)
            w[h] *= math.exp(eta * costs[h] / top)
        scale = sum(w.values())
        for h in present:
            w[int(h)] /= scale
    return best_c


def socially_fair_centers(
    instance: Instance,
    k: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> CenterSet:
    """Lloyd-style alternation whose center update minimizes the max per-group
    average cost within each cluster (two groups: exact segment search; more:
    multiplicative-weights heuristic). Score is max_h of per-group average
    squared distance; the best iterate by that score is returned.
    """
    X = instance.features
    n = instance.n
    H = instance.num_colors
    counts = instance.counts
    colors = instance.colors
    centers = kmeanspp_init(instance, k, np.ones(n), seed)
    best_score = math.inf
    best_centers = centers.copy()
    prev_score = math.inf
    prev_assign = None
    for _ in range(max_iters):
        dist = _sqdist(X, centers)
        assign = np.argmin(dist, axis=1)
        dsel = dist[np.arange(n), assign]
        score = max(
            float(dsel[colors == h].sum()) / counts[h] for h in range(H)
        )
        if score < best_score:
            best_score = score
            best_centers = centers.copy()
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        if math.isfinite(prev_score) and abs(prev_score - score) <= tol * max(
            abs(prev_score), 1e-30
        ):
            break
        sizes = np.bincount(assign, minlength=k)
        empties = [i for i in range(k) if sizes[i] == 0]
        if empties:
            _repair_empty(centers, X, dsel, empties)
            prev_score = math.inf
            prev_assign = None
            continue
        prev_score = score
        prev_assign = assign
        for i in range(k):
            mask = assign == i
            pts = X[mask]
            cols = colors[mask]
            present = np.unique(cols)
            if len(present) == 1:
                centers[i] = pts.mean(axis=0)
            elif H == 2:
                a, b = 0, 1
                centers[i], _ = two_group_center(
                    pts[cols == a], pts[cols == b], counts[a], counts[b]
                )
            else:
                centers[i] = _mw_center(pts, cols, counts, present)
    return CenterSet(best_centers, f"socially_fair(seed={seed})", best_score)


_METHODS = ("vanilla", "weighted", "socially_fair")


def best_of_restarts(
    instance: Instance,
    k: int,
    method: str,
    restarts: int,
    seed: int,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> CenterSet:
    """Run `method` with seeds seed .. seed+restarts-1, keep the best score."""
    if method not in _METHODS:
        raise ValueError(f"method must be one of {_METHODS}, got {method!r}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best: CenterSet | None = None
    scores: list[float] = []
    for s in range(seed, seed + restarts):
        if method == "vanilla":
            cs = lloyd(instance, k, np.ones(instance.n), s, max_iters, tol)
        elif method == "weighted":
            w = 1.0 / instance.counts[instance.colors]
            cs = lloyd(instance, k, w, s, max_iters, tol)
        else:
            cs = socially_fair_centers(instance, k, s, max_iters, tol)
        scores.append(cs.score)
        if best is None or cs.score < best.score:
            best = cs
    assert best is not None
    return CenterSet(
        best.centers,
        f"{method}(restarts={restarts},seed={seed})",
        best.score,
        restart_scores=scores,
    )
