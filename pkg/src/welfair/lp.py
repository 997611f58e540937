"""Assignment LPs for the two welfare objectives, solvers, and a brute-force
oracle for tiny instances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import simplex
from .errors import (
    BruteForceSizeError,
    InternalInvariantError,
    LPError,
    LPInfeasibleError,
    LPUnboundedError,
)
from .metrics import pairwise_pow
from .model import Instance, Params

_SNAP = 1e-12
# auto backend: builtin handles small models, highs the desk-scale ones
_AUTO_VARS = 2600
_AUTO_ROWS = 900


@dataclass
class Row:
    name: str
    cols: np.ndarray
    vals: np.ndarray
    sense: str          # "eq" or "le"
    rhs: float


@dataclass
class LPModel:
    """Sparse LP: min objective . v subject to rows, lower <= v <= upper."""

    num_vars: int
    objective: np.ndarray
    rows: list[Row]
    lower: np.ndarray
    upper: np.ndarray
    meta: dict = field(default_factory=dict)

    def var_name(self, idx: int) -> str:
        k, n, H = self.meta["k"], self.meta["n"], self.meta["H"]
        kn = k * n
        if idx < kn:
            return f"x_{idx // n}_{idx % n}"
        idx -= kn
        for tag in ("t", "u", "o"):
            if idx < k * H:
                return f"{tag}_{idx // H}_{idx % H}"
            idx -= k * H
        return "z"


@dataclass
class FractionalSolution:
    """Cleaned LP optimum: x (k, n) plus the induced t, u, o and objective."""

    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    o: np.ndarray
    objective: float
    solver_objective: float
    status: str


def _layout(k: int, n: int, H: int, with_z: bool) -> dict:
    kn = k * n
    base_t = kn
    base_u = base_t + k * H
    base_o = base_u + k * H
    z = base_o + k * H
    return {
        "kn": kn,
        "t": base_t,
        "u": base_u,
        "o": base_o,
        "z": z if with_z else -1,
        "num_vars": z + (1 if with_z else 0),
    }


def _build_common(instance: Instance, params: Params, centers, dist_pow, with_z):
    params.validate(instance)
    X = instance.features
    n = instance.n
    H = instance.num_colors
    k = params.k
    if centers.shape[0] != k:
        raise LPError(f"params.k={k} but {centers.shape[0]} centers given")
    if dist_pow is None:
        dist_pow = pairwise_pow(X, centers, params.p)
    lay = _layout(k, n, H, with_z)
    nv = lay["num_vars"]
    lower = np.zeros(nv)
    upper = np.full(nv, np.inf)
    upper[: lay["kn"]] = 1.0
    lower[lay["u"]: lay["o"] + k * H] = -np.inf  # u and o are free
    if with_z:
        lower[lay["z"]] = -np.inf
    r = instance.proportions
    colors = instance.colors
    rows: list[Row] = []
    allj = np.arange(n)
    for j in range(n):
        rows.append(
            Row(f"assign_{j}", np.arange(k) * n + j, np.ones(k), "eq", 1.0)
        )
    for i in range(k):
        xcols = i * n + allj
        for h in range(H):
            ish = colors == h
            under = np.full(n, r[h] - params.beta[h])
            under[ish] -= 1.0
            rows.append(
                Row(
                    f"under_{i}_{h}",
                    np.concatenate([xcols, [lay["u"] + i * H + h]]),
                    np.concatenate([under, [-1.0]]),
                    "eq",
                    0.0,
                )
            )
    for i in range(k):
        xcols = i * n + allj
        for h in range(H):
            ish = colors == h
            over = np.full(n, -(r[h] + params.alpha[h]))
            over[ish] += 1.0
            rows.append(
                Row(
                    f"over_{i}_{h}",
                    np.concatenate([xcols, [lay["o"] + i * H + h]]),
                    np.concatenate([over, [-1.0]]),
                    "eq",
                    0.0,
                )
            )
    for i in range(k):
        for h in range(H):
            rows.append(
                Row(
                    f"ucap_{i}_{h}",
                    np.array([lay["u"] + i * H + h, lay["t"] + i * H + h]),
                    np.array([1.0, -1.0]),
                    "le",
                    0.0,
                )
            )
    for i in range(k):
        for h in range(H):
            rows.append(
                Row(
                    f"ocap_{i}_{h}",
                    np.array([lay["o"] + i * H + h, lay["t"] + i * H + h]),
                    np.array([1.0, -1.0]),
                    "le",
                    0.0,
                )
            )
    nearest = np.argmin(dist_pow, axis=1)
    meta = {
        "k": k,
        "n": n,
        "H": H,
        "layout": lay,
        "params": params,
        "instance": instance,
        "dist_pow": dist_pow,
        "nearest": nearest,
        "centers": np.asarray(centers, dtype=np.float64),
    }
    return lay, lower, upper, rows, meta, dist_pow


def build_rawlsian_lp(
    instance: Instance,
    params: Params,
    centers: np.ndarray,
    dist_pow: np.ndarray | None = None,
) -> LPModel:
    """Min-max LP: z bounds every color's fractional disutility from above."""
    lay, lower, upper, rows, meta, dist_pow = _build_common(
        instance, params, centers, dist_pow, with_z=True
    )
    n, H, k = instance.n, instance.num_colors, params.k
    lam = params.lam
    counts = instance.counts
    for h in range(H):
        jh = np.nonzero(instance.colors == h)[0]
        xcols = (np.arange(k)[:, None] * n + jh[None, :]).ravel()
        xvals = (lam / counts[h]) * dist_pow[jh, :].T.ravel()
        tcols = lay["t"] + np.arange(k) * H + h
        tvals = np.full(k, (1.0 - lam) / counts[h])
        rows.append(
            Row(
                f"disu_{h}",
                np.concatenate([xcols, tcols, [lay["z"]]]),
                np.concatenate([xvals, tvals, [-1.0]]),
                "le",
                0.0,
            )
        )
    obj = np.zeros(lay["num_vars"])
    obj[lay["z"]] = 1.0
    meta["kind"] = "rawlsian"
    return LPModel(lay["num_vars"], obj, rows, lower, upper, meta)


def build_utilitarian_lp(
    instance: Instance,
    params: Params,
    centers: np.ndarray,
    dist_pow: np.ndarray | None = None,
) -> LPModel:
    """Sum-of-disutilities LP: same constraints, objective in the costs."""
    lay, lower, upper, rows, meta, dist_pow = _build_common(
        instance, params, centers, dist_pow, with_z=False
    )
    n, H, k = instance.n, instance.num_colors, params.k
    lam = params.lam
    counts = instance.counts
    obj = np.zeros(lay["num_vars"])
    wcol = lam / counts[instance.colors]          # per-point weight
    for i in range(k):
        obj[i * n: (i + 1) * n] = wcol * dist_pow[:, i]
    for i in range(k):
        for h in range(H):
            obj[lay["t"] + i * H + h] = (1.0 - lam) / counts[h]
    meta["kind"] = "utilitarian"
    return LPModel(lay["num_vars"], obj, rows, lower, upper, meta)


def _to_standard(model: LPModel):
    m = len(model.rows)
    num_le = sum(1 for row in model.rows if row.sense == "le")
    nv = model.num_vars
    N = nv + num_le
    cols = []
    rws = []
    vals = []
    b = np.empty(m)
    slack_of_row = np.full(m, -1, dtype=np.int64)
    s = nv
    for ri, row in enumerate(model.rows):
        cols.append(row.cols)
        rws.append(np.full(len(row.cols), ri))
        vals.append(row.vals)
        b[ri] = row.rhs
        if row.sense == "le":
            cols.append(np.array([s]))
            rws.append(np.array([ri]))
            vals.append(np.array([1.0]))
            slack_of_row[ri] = s
            s += 1
        elif row.sense != "eq":
            raise LPError(f"unknown row sense {row.sense!r}")
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rws), np.concatenate(cols))),
        shape=(m, N),
    ).tocsc()
    c = np.concatenate([model.objective, np.zeros(num_le)])
    lower = np.concatenate([model.lower, np.zeros(num_le)])
    upper = np.concatenate([model.upper, np.full(num_le, np.inf)])
    return A, b, c, lower, upper, slack_of_row


def _crash_basis(model: LPModel, slack_of_row: np.ndarray) -> np.ndarray:
    """Feasible starting basis from the nearest-center integral assignment."""
    meta = model.meta
    k, n, H = meta["k"], meta["n"], meta["H"]
    lay = meta["layout"]
    inst: Instance = meta["instance"]
    params: Params = meta["params"]
    nearest = meta["nearest"]
    sizes = np.bincount(nearest, minlength=k).astype(np.float64)
    size_h = np.zeros((k, H))
    np.add.at(size_h, (nearest, inst.colors), 1.0)
    r = inst.proportions
    uval = (r - params.beta)[None, :] * sizes[:, None] - size_h
    oval = size_h - (r + params.alpha)[None, :] * sizes[:, None]
    tval = np.maximum(np.maximum(uval, oval), 0.0)
    basis = np.empty(len(model.rows), dtype=np.int64)
    ri = 0
    for j in range(n):
        basis[ri] = nearest[j] * n + j
        ri += 1
    for i in range(k):
        for h in range(H):
            basis[ri] = lay["u"] + i * H + h
            ri += 1
    for i in range(k):
        for h in range(H):
            basis[ri] = lay["o"] + i * H + h
            ri += 1
    ucap0 = ri
    for i in range(k):
        for h in range(H):
            if tval[i, h] > 0.0 and uval[i, h] >= oval[i, h]:
                basis[ri] = lay["t"] + i * H + h
            else:
                basis[ri] = slack_of_row[ri]
            ri += 1
    for i in range(k):
        for h in range(H):
            if tval[i, h] > 0.0 and uval[i, h] < oval[i, h]:
                basis[ri] = lay["t"] + i * H + h
            else:
                basis[ri] = slack_of_row[ri]
            ri += 1
    del ucap0
    if meta["kind"] == "rawlsian":
        counts = inst.counts
        dist_pow = meta["dist_pow"]
        dsel = dist_pow[np.arange(n), nearest]
        disu = np.empty(H)
        for h in range(H):
            disu[h] = (
                params.lam * dsel[inst.colors == h].sum()
                + (1.0 - params.lam) * tval[:, h].sum()
            ) / counts[h]
        h_star = int(np.argmax(disu))
        for h in range(H):
            basis[ri] = lay["z"] if h == h_star else slack_of_row[ri]
            ri += 1
    if ri != len(model.rows):
        raise InternalInvariantError("crash basis row count mismatch")
    return basis


class BuiltinSolver:
    """Own revised simplex; intended for small and medium models."""

    name = "builtin"

    def solve(self, model: LPModel, tolerance: float) -> tuple[np.ndarray, float, str]:
        A, b, c, lower, upper, slack_of_row = _to_standard(model)
        basis = _crash_basis(model, slack_of_row)
        res = simplex.solve_standard(
            A, b, c, lower, upper, basis=basis, tol=tolerance
        )
        return (
            res.x[: model.num_vars],
            res.objective,
            f"builtin:optimal:iters={res.iterations}",
        )


class HighsSolver:
    """scipy.optimize.linprog backend (HiGHS), for desk-scale models."""

    name = "highs"

    def solve(self, model: LPModel, tolerance: float) -> tuple[np.ndarray, float, str]:
        from scipy.optimize import linprog

        eq = [row for row in model.rows if row.sense == "eq"]
        le = [row for row in model.rows if row.sense == "le"]

        def stack(rows):
            if not rows:
                return None, None
            cols = np.concatenate([row.cols for row in rows])
            rws = np.concatenate(
                [np.full(len(row.cols), ri) for ri, row in enumerate(rows)]
            )
            vals = np.concatenate([row.vals for row in rows])
            A = sp.coo_matrix(
                (vals, (rws, cols)), shape=(len(rows), model.num_vars)
            ).tocsr()
            b = np.array([row.rhs for row in rows])
            return A, b

        A_eq, b_eq = stack(eq)
        A_ub, b_ub = stack(le)
        bounds = [
            (
                None if np.isneginf(lo) else lo,
                None if np.isposinf(up) else up,
            )
            for lo, up in zip(model.lower, model.upper)
        ]
        res = linprog(
            model.objective,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=bounds,
            method="highs",
        )
        if res.status == 2:
            raise LPInfeasibleError(res.message)
        if res.status == 3:
            raise LPUnboundedError(res.message)
        if res.status != 0:
            raise LPError(f"highs failed: {res.message}")
        return np.asarray(res.x), float(res.fun), "highs:optimal"


def _pick_solver(model: LPModel, solver):
    if solver is None or solver == "auto":
        if model.num_vars <= _AUTO_VARS and len(model.rows) <= _AUTO_ROWS:
            return BuiltinSolver()
        return HighsSolver()
    if solver == "builtin":
        return BuiltinSolver()
    if solver == "highs":
        return HighsSolver()
    if hasattr(solver, "solve"):
        return solver
    raise LPError(f"unknown solver {solver!r}")


def solve_lp(
    model: LPModel,
    tolerance: float | None = None,
    solver="auto",
) -> FractionalSolution:
    """Solve the model and return a cleaned fractional assignment.

    x entries below 1e-12 are snapped to zero; u, o are recomputed from x by
    their defining equalities and t = max(u, o, 0), so the reported variables
    are mutually consistent. The reported objective is the direct evaluation
    of the objective expression on those variables.
    """
    if tolerance is None:
        tolerance = model.meta["params"].lp_tolerance
    backend = _pick_solver(model, solver)
    xvec, raw_obj, status = backend.solve(model, tolerance)
    meta = model.meta
    k, n, H = meta["k"], meta["n"], meta["H"]
    inst: Instance = meta["instance"]
    params: Params = meta["params"]
    x = np.asarray(xvec[: k * n], dtype=np.float64).reshape(k, n).copy()
    np.clip(x, 0.0, 1.0, out=x)
    x[x < _SNAP] = 0.0
    col = np.abs(x.sum(axis=0) - 1.0).max(initial=0.0)
    if col > 1e-5:
        raise InternalInvariantError(f"assignment column sum off by {col:g}")
    sizes = x.sum(axis=1)
    size_h = np.zeros((k, H))
    for h in range(H):
        size_h[:, h] = x[:, inst.colors == h].sum(axis=1)
    r = inst.proportions
    u = (r - params.beta)[None, :] * sizes[:, None] - size_h
    o = size_h - (r + params.alpha)[None, :] * sizes[:, None]
    t = np.maximum(np.maximum(u, o), 0.0)
    obj = fractional_objective(model, x, t)
    return FractionalSolution(
        x=x,
        t=t,
        u=u,
        o=o,
        objective=obj,
        solver_objective=raw_obj,
        status=status,
    )


def fractional_objective(model: LPModel, x: np.ndarray, t: np.ndarray) -> float:
    """Evaluate the model's objective on a fractional assignment directly."""
    meta = model.meta
    inst: Instance = meta["instance"]
    params: Params = meta["params"]
    dist_pow = meta["dist_pow"]
    counts = inst.counts
    H = meta["H"]
    lam = params.lam
    disu = np.empty(H)
    for h in range(H):
        jh = inst.colors == h
        dcost = float((x[:, jh] * dist_pow[jh, :].T).sum())
        disu[h] = (lam * dcost + (1.0 - lam) * float(t[:, h].sum())) / counts[h]
    if meta["kind"] == "rawlsian":
        return float(disu.max())
    return float(disu.sum())


def to_lp_text(model: LPModel) -> str:
    """Textual export in the common LP interchange layout."""
    out = [f"\\ welfair {model.meta.get('kind', 'model')} assignment model"]
    out.append("Minimize")
    terms = [
        f"{model.objective[j]:+.17g} {model.var_name(j)}"
        for j in np.nonzero(model.objective)[0]
    ]
    out.append(" obj: " + (" ".join(terms) if terms else "0"))
    out.append("Subject To")
    for row in model.rows:
        parts = " ".join(
            f"{v:+.17g} {model.var_name(int(c))}" for c, v in zip(row.cols, row.vals)
        )
        op = "=" if row.sense == "eq" else "<="
        out.append(f" {row.name}: {parts} {op} {row.rhs:.17g}")
    out.append("Bounds")
    for j in range(model.num_vars):
        lo, up = model.lower[j], model.upper[j]
        name = model.var_name(j)
        if np.isneginf(lo) and np.isposinf(up):
            out.append(f" {name} free")
        elif np.isposinf(up):
            out.append(f" {name} >= {lo:.17g}")
        else:
            out.append(f" {lo:.17g} <= {name} <= {up:.17g}")
    out.append("End")
    return "\n".join(out) + "\n"


def brute_force_assignment(
    instance: Instance,
    params: Params,
    centers: np.ndarray,
    objective: str = "rawlsian",
    limit: float = 1e7,
) -> tuple[np.ndarray, float]:
    """Exact optimum over all k^n integral assignments (guarded).

    Ties resolve to the lexicographically smallest assignment vector.
    """
    params.validate(instance)
    if objective not in ("rawlsian", "utilitarian"):
        raise ValueError(f"unknown objective {objective!r}")
    n = instance.n
    k = params.k
    if float(k) ** n > limit:
        raise BruteForceSizeError(k, n, limit)
    dist_pow = pairwise_pow(instance.features, centers, params.p)
    colors = instance.colors
    counts = instance.counts
    r = instance.proportions
    lam = params.lam
    H = instance.num_colors
    arange = np.arange(n)
    best_val = np.inf
    best_assign = None
    for combo in itertools.product(range(k), repeat=n):
        a = np.asarray(combo, dtype=np.int64)
        dsel = dist_pow[arange, a]
        sizes = np.bincount(a, minlength=k).astype(np.float64)
        size_h = np.zeros((k, H))
        np.add.at(size_h, (a, colors), 1.0)
        nz = sizes > 0
        frac = np.zeros((k, H))
        frac[nz] = size_h[nz] / sizes[nz, None]
        delta = np.zeros((k, H))
        over = frac - (r + params.alpha)[None, :]
        under = (r - params.beta)[None, :] - frac
        delta[nz] = np.maximum(np.maximum(over, under), 0.0)[nz]
        V = (sizes[:, None] * delta).sum(axis=0)
        D = np.zeros(H)
        np.add.at(D, colors, dsel)
        disu = (lam * D + (1.0 - lam) * V) / counts
        val = float(disu.max()) if objective == "rawlsian" else float(disu.sum())
        if val < best_val:
            best_val = val
            best_assign = a
    assert best_assign is not None
    return best_assign, best_val
