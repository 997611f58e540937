"""Min-cost-flow rounding of fractional assignments.

One network per color for the min-max objective (colors round independently);
a single layered network for the sum objective. Node demands carry the floor
of each fractional mass and slack arcs carry ceil - floor, so the integral
masses stay inside [floor, ceil] exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import FlowError, InfeasibleFlowError, InternalInvariantError
from .metrics import report_from_distances
from .model import Instance, Params

_MASS_EPS = 1e-9


def snap_mass(v: float, eps: float = _MASS_EPS) -> float:
    """Treat a mass within eps of an integer as that integer."""
    r = round(v)
    return float(r) if abs(v - r) <= eps else float(v)


def _floor_ceil(v: float) -> tuple[int, int]:
    s = snap_mass(v)
    return int(math.floor(s)), int(math.ceil(s))


@dataclass
class FlowNetwork:
    """Directed network with node demands b(v) (net required inflow)."""

    num_nodes: int
    demand: np.ndarray
    tail: np.ndarray
    head: np.ndarray
    cap: np.ndarray
    cost: np.ndarray
    node_labels: list[tuple]
    arc_point: np.ndarray        # global point index of a point arc, else -1
    arc_center: np.ndarray       # center index of a point arc, else -1

    def validate(self) -> None:
        if int(self.demand.sum()) != 0:
            raise FlowError("node demands do not balance")
        if self.cap.size and (self.cap.min() < 0 or self.cap.max() > 1):
            raise FlowError("arc capacities must be 0 or 1")

    def dump(self) -> str:
        out = [f"nodes {self.num_nodes}"]
        for v in range(self.num_nodes):
            out.append(f"{v} {int(self.demand[v])}")
        out.append(f"arcs {len(self.tail)}")
        for a in range(len(self.tail)):
            out.append(
                f"{int(self.tail[a])} {int(self.head[a])} "
                f"{int(self.cap[a])} {self.cost[a]:.17g}"
            )
        return "\n".join(out) + "\n"


@dataclass
class FlowResult:
    flow: np.ndarray
    cost: float
    augmentations: int


@dataclass
class IntegralAssignment:
    assignment: np.ndarray
    x: np.ndarray
    color_mass: np.ndarray
    cluster_sizes: np.ndarray
    objective: float
    flow_cost: float


def build_rawlsian_networks(
    xfrac: np.ndarray,
    instance: Instance,
    params: Params,
    dist_pow: np.ndarray,
) -> list[FlowNetwork]:
    """One independent rounding network per color, in color-id order."""
    k = xfrac.shape[0]
    nets = []
    for h in range(instance.num_colors):
        jh = np.nonzero(instance.colors == h)[0]
        n_h = len(jh)
        mass = xfrac[:, jh].sum(axis=1)
        lo = np.empty(k, dtype=np.int64)
        hi = np.empty(k, dtype=np.int64)
        for i in range(k):
            lo[i], hi[i] = _floor_ceil(mass[i])
        sink = n_h + k
        demand = np.zeros(n_h + k + 1, dtype=np.int64)
        demand[:n_h] = -1
        demand[n_h: n_h + k] = lo
        demand[sink] = n_h - int(lo.sum())
        tails, heads, caps, costs, apt, act = [], [], [], [], [], []
        nh_count = instance.counts[h]
        for i in range(k):
            for local, j in enumerate(jh):
                if xfrac[i, j] > 0.0:
                    tails.append(local)
                    heads.append(n_h + i)
                    caps.append(1)
                    costs.append(dist_pow[j, i] / nh_count)
                    apt.append(j)
                    act.append(i)
        for i in range(k):
            tails.append(n_h + i)
            heads.append(sink)
            caps.append(int(hi[i] - lo[i]))
            costs.append(0.0)
            apt.append(-1)
            act.append(-1)
        labels = (
            [("point", int(j)) for j in jh]
            + [("colcenter", i, h) for i in range(k)]
            + [("sink", h)]
        )
        net = FlowNetwork(
            num_nodes=sink + 1,
            demand=demand,
            tail=np.asarray(tails, dtype=np.int64),
            head=np.asarray(heads, dtype=np.int64),
            cap=np.asarray(caps, dtype=np.int64),
            cost=np.asarray(costs, dtype=np.float64),
            node_labels=labels,
            arc_point=np.asarray(apt, dtype=np.int64),
            arc_center=np.asarray(act, dtype=np.int64),
        )
        net.validate()
        nets.append(net)
    return nets


def build_utilitarian_network(
    xfrac: np.ndarray,
    instance: Instance,
    params: Params,
    dist_pow: np.ndarray,
) -> FlowNetwork:
    """Single network: points -> per-color cluster nodes -> clusters -> sink."""
    k = xfrac.shape[0]
    n = instance.n
    H = instance.num_colors
    colors = instance.colors
    counts = instance.counts
    col_lo = np.empty((k, H), dtype=np.int64)
    col_hi = np.empty((k, H), dtype=np.int64)
    for h in range(H):
        jh = np.nonzero(colors == h)[0]
        mass = xfrac[:, jh].sum(axis=1)
        for i in range(k):
            col_lo[i, h], col_hi[i, h] = _floor_ceil(mass[i])
    clu_lo = np.empty(k, dtype=np.int64)
    clu_hi = np.empty(k, dtype=np.int64)
    for i in range(k):
        clu_lo[i], clu_hi[i] = _floor_ceil(float(xfrac[i, :].sum()))
    if np.any(clu_lo - col_lo.sum(axis=1) < 0):
        raise InternalInvariantError(
            "cluster floor below the sum of color floors; mass snapping drifted"
        )
    base_cc = n
    base_c = n + k * H
    sink = base_c + k
    demand = np.zeros(sink + 1, dtype=np.int64)
    demand[:n] = -1
    for i in range(k):
        for h in range(H):
            demand[base_cc + i * H + h] = col_lo[i, h]
        demand[base_c + i] = clu_lo[i] - int(col_lo[i].sum())
    demand[sink] = n - int(clu_lo.sum())
    tails, heads, caps, costs, apt, act = [], [], [], [], [], []
    for i in range(k):
        nz = np.nonzero(xfrac[i] > 0.0)[0]
        for j in nz:
            h = colors[j]
            tails.append(int(j))
            heads.append(base_cc + i * H + int(h))
            caps.append(1)
            costs.append(dist_pow[j, i] / counts[h])
            apt.append(int(j))
            act.append(i)
    for i in range(k):
        for h in range(H):
            tails.append(base_cc + i * H + h)
            heads.append(base_c + i)
            caps.append(int(col_hi[i, h] - col_lo[i, h]))
            costs.append(0.0)
            apt.append(-1)
            act.append(-1)
    for i in range(k):
        tails.append(base_c + i)
        heads.append(sink)
        caps.append(int(clu_hi[i] - clu_lo[i]))
        costs.append(0.0)
        apt.append(-1)
        act.append(-1)
    labels = (
        [("point", j) for j in range(n)]
        + [("colcenter", i, h) for i in range(k) for h in range(H)]
        + [("center", i) for i in range(k)]
        + [("sink",)]
    )
    net = FlowNetwork(
        num_nodes=sink + 1,
        demand=demand,
        tail=np.asarray(tails, dtype=np.int64),
        head=np.asarray(heads, dtype=np.int64),
        cap=np.asarray(caps, dtype=np.int64),
        cost=np.asarray(costs, dtype=np.float64),
        node_labels=labels,
        arc_point=np.asarray(apt, dtype=np.int64),
        arc_center=np.asarray(act, dtype=np.int64),
    )
    net.validate()
    return net


def min_cost_flow(net: FlowNetwork) -> FlowResult:
    """Successive shortest augmenting paths with node potentials.

    Shortest-path ties resolve to the lowest node index. Supplies with a
    single usable arc are routed up front; the resulting saturated point arcs
    only admit residuals into dead-end nodes, which no useful path crosses,
    so Dijkstra labels stay correct.
    """
    net.validate()
    V = net.num_nodes
    E = len(net.tail)
    flow = np.zeros(E, dtype=np.int64)
    excess = (-net.demand).astype(np.int64).copy()
    adj: list[list[tuple[int, int]]] = [[] for _ in range(V)]
    for a in range(E):
        if net.cap[a] > 0:
            adj[net.tail[a]].append((a, 1))
            adj[net.head[a]].append((a, -1))

    def residual(a: int, d: int) -> int:
        return int(net.cap[a] - flow[a]) if d > 0 else int(flow[a])

    # route forced supplies (single usable arc) without path search
    for v in range(V):
        while excess[v] > 0:
            usable = [(a, d) for a, d in adj[v] if d > 0 and residual(a, d) > 0]
            if len(usable) != 1:
                break
            a, _ = usable[0]
            q = min(int(excess[v]), residual(a, 1))
            flow[a] += q
            excess[v] -= q
            excess[net.head[a]] += q
    pi = np.zeros(V)
    augmentations = 0
    while True:
        sources = np.nonzero(excess > 0)[0]
        if len(sources) == 0:
            break
        s = int(sources[0])
        dist = np.full(V, np.inf)
        dist[s] = 0.0
        parent: list[tuple[int, int] | None] = [None] * V
        done = np.zeros(V, dtype=bool)
        heap = [(0.0, s)]
        while heap:
            dv, v = heapq.heappop(heap)
            if done[v]:
                continue
            done[v] = True
            for a, d in adj[v]:
                if residual(a, d) <= 0:
                    continue
                w = int(net.head[a]) if d > 0 else int(net.tail[a])
                if done[w]:
                    continue
                c = float(net.cost[a]) if d > 0 else -float(net.cost[a])
                nd = dv + c + pi[v] - pi[w]
                if nd < dist[w] - 1e-15:
                    dist[w] = nd
                    parent[w] = (a, d)
                    heapq.heappush(heap, (nd, w))
        targets = np.nonzero((excess < 0) & np.isfinite(dist))[0]
        if len(targets) == 0:
            raise InfeasibleFlowError(
                f"no augmenting path from node {s}; remaining excess "
                f"{int(excess[s])}"
            )
        t = int(targets[np.argmin(dist[targets])])
        # walk back to find the bottleneck
        path = []
        w = t
        while w != s:
            a, d = parent[w]  # type: ignore[misc]
            path.append((a, d))
            w = int(net.tail[a]) if d > 0 else int(net.head[a])
        delta = min(int(excess[s]), -int(excess[t]))
        for a, d in path:
            delta = min(delta, residual(a, d))
        for a, d in path:
            flow[a] += d * delta
        excess[s] -= delta
        excess[t] += delta
        dt = dist[t]
        pi += np.where(np.isfinite(dist), np.minimum(dist, dt), dt)
        augmentations += 1
    cost = float((flow * net.cost).sum())
    return FlowResult(flow=flow, cost=cost, augmentations=augmentations)


def has_negative_cycle(net: FlowNetwork, flow: np.ndarray) -> bool:
    """Bellman-Ford scan of the residual network; optimality certificate."""
    V = net.num_nodes
    arcs = []
    for a in range(len(net.tail)):
        if flow[a] < net.cap[a]:
            arcs.append((int(net.tail[a]), int(net.head[a]), float(net.cost[a])))
        if flow[a] > 0:
            arcs.append((int(net.head[a]), int(net.tail[a]), -float(net.cost[a])))
    dist = np.zeros(V)
    for it in range(V):
        changed = False
        for tl, hd, c in arcs:
            if dist[tl] + c < dist[hd] - 1e-12:
                dist[hd] = dist[tl] + c
                changed = True
        if not changed:
            return False
    return True


def _extract(
    nets: list[FlowNetwork],
    flows: list[np.ndarray],
    instance: Instance,
    params: Params,
    dist_pow: np.ndarray,
    kind: str,
) -> IntegralAssignment:
    n = instance.n
    k = params.k
    H = instance.num_colors
    assignment = np.full(n, -1, dtype=np.int64)
    total_cost = 0.0
    for net, fl in zip(nets, flows):
        sel = np.nonzero((net.arc_point >= 0) & (fl == 1))[0]
        pts = net.arc_point[sel]
        if np.any(assignment[pts] >= 0):
            raise InternalInvariantError("point routed twice in rounding")
        assignment[pts] = net.arc_center[sel]
        total_cost += float((fl * net.cost).sum())
    if np.any(assignment < 0):
        raise InternalInvariantError("point left unassigned by rounding")
    x = np.zeros((k, n))
    x[assignment, np.arange(n)] = 1.0
    color_mass = np.zeros((k, H), dtype=np.int64)
    np.add.at(color_mass, (assignment, instance.colors), 1)
    report = report_from_distances(instance, params, dist_pow, assignment)
    objective = report.R if kind == "rawlsian" else report.U
    return IntegralAssignment(
        assignment=assignment,
        x=x,
        color_mass=color_mass,
        cluster_sizes=np.bincount(assignment, minlength=k),
        objective=objective,
        flow_cost=total_cost,
    )


def rawlsian_round(
    xfrac: np.ndarray,
    instance: Instance,
    params: Params,
    dist_pow: np.ndarray,
) -> IntegralAssignment:
    """Round each color's fractional assignment independently."""
    nets = build_rawlsian_networks(xfrac, instance, params, dist_pow)
    flows = [min_cost_flow(net).flow for net in nets]
    return _extract(nets, flows, instance, params, dist_pow, "rawlsian")


def utilitarian_round(
    xfrac: np.ndarray,
    instance: Instance,
    params: Params,
    dist_pow: np.ndarray,
) -> IntegralAssignment:
    """Round all colors jointly, preserving cluster sizes within floor/ceil."""
    net = build_utilitarian_network(xfrac, instance, params, dist_pow)
    fl = min_cost_flow(net).flow
    return _extract([net], [fl], instance, params, dist_pow, "utilitarian")
