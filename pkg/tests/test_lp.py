from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datagen import random_instance

from welfair.errors import BruteForceSizeError, LPInfeasibleError
from welfair.lp import (
    HighsSolver,
    LPModel,
    Row,
    brute_force_assignment,
    build_rawlsian_lp,
    build_utilitarian_lp,
    fractional_objective,
    solve_lp,
    to_lp_text,
)
from welfair.metrics import group_costs, pairwise_pow
from welfair.model import Params, Solution


def _setup(n=14, k=2, H=2, lam=0.5, delta=0.1, seed=0):
    inst = random_instance(n, 2, H, seed)
    params = Params.with_delta(inst, k, lam, delta)
    rng = np.random.default_rng(seed + 1)
    centers = inst.features[rng.choice(n, size=k, replace=False)]
    return inst, params, centers


class TestBuilders:
    def test_rawlsian_shape(self):
        inst, params, centers = _setup(n=10, k=3, H=2)
        m = build_rawlsian_lp(inst, params, centers)
        k, n, H = 3, 10, 2
        assert m.num_vars == k * n + 3 * k * H + 1
        # n assign + 2kH defining eq + 2kH caps + H disu
        assert len(m.rows) == n + 4 * k * H + H
        assert m.meta["kind"] == "rawlsian"

    def test_utilitarian_shape(self):
        inst, params, centers = _setup(n=10, k=3, H=2)
        m = build_utilitarian_lp(inst, params, centers)
        k, n, H = 3, 10, 2
        assert m.num_vars == k * n + 3 * k * H
        assert len(m.rows) == n + 4 * k * H
        assert m.meta["kind"] == "utilitarian"

    def test_bounds(self):
        inst, params, centers = _setup()
        m = build_rawlsian_lp(inst, params, centers)
        lay = m.meta["layout"]
        kn = lay["kn"]
        assert np.all(m.lower[:kn] == 0) and np.all(m.upper[:kn] == 1)
        t0, u0, o0, z = lay["t"], lay["u"], lay["o"], lay["z"]
        assert np.all(m.lower[t0:u0] == 0)
        assert np.all(np.isneginf(m.lower[u0 : o0 + (o0 - u0)]))
        assert np.isneginf(m.lower[z]) and np.isposinf(m.upper[z])

    def test_var_names_cover_layout(self):
        inst, params, centers = _setup(n=6, k=2, H=2)
        m = build_rawlsian_lp(inst, params, centers)
        names = [m.var_name(j) for j in range(m.num_vars)]
        assert names[0] == "x_0_0"
        assert names.count("z") == 1
        assert len(set(names)) == m.num_vars
        assert "t_1_1" in names and "u_0_1" in names and "o_1_0" in names

    def test_row_names_unique(self):
        inst, params, centers = _setup(n=6, k=2, H=2)
        for build in (build_rawlsian_lp, build_utilitarian_lp):
            m = build(inst, params, centers)
            names = [row.name for row in m.rows]
            assert len(set(names)) == len(names)

    def test_dist_pow_passthrough(self):
        inst, params, centers = _setup()
        dist = pairwise_pow(inst.features, centers, params.p)
        a = build_rawlsian_lp(inst, params, centers)
        b = build_rawlsian_lp(inst, params, centers, dist)
        np.testing.assert_array_equal(a.objective, b.objective)
        for ra, rb in zip(a.rows, b.rows):
            np.testing.assert_array_equal(ra.vals, rb.vals)

    def test_center_count_mismatch(self):
        inst, params, centers = _setup(k=2)
        from welfair.errors import LPError

        with pytest.raises(LPError):
            build_rawlsian_lp(inst, params, centers[:1])


class TestObjectiveEncoding:
    """The LP objective and the integral metrics must agree at one-hot x."""

    @pytest.mark.parametrize("kind", ["rawlsian", "utilitarian"])
    @pytest.mark.parametrize("seed", range(5))
    def test_integral_point_matches_report(self, kind, seed):
        inst, params, centers = _setup(n=16, k=3, H=2, lam=0.35, seed=seed)
        build = build_rawlsian_lp if kind == "rawlsian" else build_utilitarian_lp
        m = build(inst, params, centers)
        rng = np.random.default_rng(seed + 50)
        assign = rng.integers(0, params.k, size=inst.n)
        x = np.zeros((params.k, inst.n))
        x[assign, np.arange(inst.n)] = 1.0
        sizes = x.sum(axis=1)
        size_h = np.zeros((params.k, inst.num_colors))
        for h in range(inst.num_colors):
            size_h[:, h] = x[:, inst.colors == h].sum(axis=1)
        r = inst.proportions
        u = (r - params.beta)[None, :] * sizes[:, None] - size_h
        o = size_h - (r + params.alpha)[None, :] * sizes[:, None]
        t = np.maximum(np.maximum(u, o), 0.0)
        got = fractional_objective(m, x, t)
        rep = group_costs(inst, Solution(centers, assign), params)
        want = rep.R if kind == "rawlsian" else rep.U
        assert got == pytest.approx(want, abs=1e-12)


class TestSolveLp:
    @pytest.mark.parametrize("kind", ["rawlsian", "utilitarian"])
    def test_cleanup_invariants(self, kind):
        inst, params, centers = _setup(n=20, k=3, H=3, seed=3)
        build = build_rawlsian_lp if kind == "rawlsian" else build_utilitarian_lp
        m = build(inst, params, centers)
        frac = solve_lp(m, solver="builtin")
        assert frac.x.shape == (params.k, inst.n)
        assert np.all(frac.x >= 0.0) and np.all(frac.x <= 1.0)
        np.testing.assert_allclose(frac.x.sum(axis=0), 1.0, atol=1e-6)
        np.testing.assert_allclose(
            frac.t, np.maximum(np.maximum(frac.u, frac.o), 0.0), atol=0
        )
        # solver objective and direct evaluation agree
        assert frac.objective == pytest.approx(frac.solver_objective, abs=1e-6)

    @pytest.mark.parametrize("kind", ["rawlsian", "utilitarian"])
    @pytest.mark.parametrize("seed", range(4))
    def test_builtin_matches_highs(self, kind, seed):
        inst, params, centers = _setup(
            n=18, k=3, H=2, lam=[0.2, 0.5, 0.8, 1.0][seed], seed=seed
        )
        build = build_rawlsian_lp if kind == "rawlsian" else build_utilitarian_lp
        m = build(inst, params, centers)
        a = solve_lp(m, solver="builtin")
        b = solve_lp(m, solver="highs")
        assert a.objective == pytest.approx(b.objective, abs=1e-6)

    @pytest.mark.parametrize("kind", ["rawlsian", "utilitarian"])
    def test_lp_lower_bounds_brute_force(self, kind):
        inst, params, centers = _setup(n=7, k=2, H=2, lam=0.4, seed=9)
        build = build_rawlsian_lp if kind == "rawlsian" else build_utilitarian_lp
        frac = solve_lp(build(inst, params, centers), solver="builtin")
        _, best = brute_force_assignment(inst, params, centers, kind)
        assert frac.objective <= best + 1e-7

    def test_custom_solver_object(self):
        inst, params, centers = _setup(n=8, k=2, H=2)
        m = build_utilitarian_lp(inst, params, centers)
        calls = []

        class Stub:
            name = "stub"

            def solve(self, model, tolerance):
                calls.append(tolerance)
                return HighsSolver().solve(model, tolerance)

        frac = solve_lp(m, solver=Stub())
        assert calls == [params.lp_tolerance]
        assert np.isfinite(frac.objective)

    def test_tolerance_override(self):
        inst, params, centers = _setup(n=8, k=2, H=2)
        m = build_utilitarian_lp(inst, params, centers)
        calls = []

        class Stub:
            name = "stub"

            def solve(self, model, tolerance):
                calls.append(tolerance)
                return HighsSolver().solve(model, tolerance)

        solve_lp(m, tolerance=1e-5, solver=Stub())
        assert calls == [1e-5]


class TestLambdaOneReductions:
    """At lam = 1 violations drop out and the optimum has a closed form."""

    @pytest.mark.parametrize("seed", range(4))
    def test_utilitarian_reduces_to_weighted_nearest(self, seed):
        inst, params, centers = _setup(n=15, k=3, H=2, lam=1.0, seed=seed)
        m = build_utilitarian_lp(inst, params, centers)
        frac = solve_lp(m, solver="builtin")
        dist = pairwise_pow(inst.features, centers, params.p)
        want = float(
            (dist.min(axis=1) / inst.counts[inst.colors]).sum()
        )
        assert frac.objective == pytest.approx(want, abs=1e-9)

    @pytest.mark.parametrize("seed", range(4))
    def test_rawlsian_reduces_to_max_group_nearest(self, seed):
        # colors occupy disjoint x columns, so each color independently
        # routes every point to its nearest center
        inst, params, centers = _setup(n=15, k=3, H=2, lam=1.0, seed=seed + 10)
        m = build_rawlsian_lp(inst, params, centers)
        frac = solve_lp(m, solver="builtin")
        dist = pairwise_pow(inst.features, centers, params.p)
        dmin = dist.min(axis=1)
        want = max(
            float(dmin[inst.colors == h].sum()) / inst.counts[h]
            for h in range(inst.num_colors)
        )
        assert frac.objective == pytest.approx(want, abs=1e-9)


class TestExport:
    def test_sections_and_shape(self):
        inst, params, centers = _setup(n=6, k=2, H=2)
        text = to_lp_text(build_rawlsian_lp(inst, params, centers))
        for section in ("Minimize", "Subject To", "Bounds", "End"):
            assert section in text
        assert " obj: +1 z" in text
        assert "assign_0:" in text and "disu_1:" in text
        assert " z free" in text

    def test_seventeen_digit_floats(self):
        inst, params, centers = _setup(n=6, k=2, H=2)
        m = build_utilitarian_lp(inst, params, centers)
        text = to_lp_text(m)
        # a representative coefficient round-trips exactly through the text
        coeff = m.objective[np.nonzero(m.objective)[0][0]]
        assert f"{coeff:+.17g}" in text
        assert float(f"{coeff:.17g}") == coeff

    def test_deterministic(self):
        inst, params, centers = _setup(n=6, k=2, H=2)
        a = to_lp_text(build_rawlsian_lp(inst, params, centers))
        b = to_lp_text(build_rawlsian_lp(inst, params, centers))
        assert a == b


class TestBruteForce:
    def test_matches_exhaustive_report_scan(self):
        inst, params, centers = _setup(n=6, k=2, H=2, lam=0.6, seed=4)
        for kind in ("rawlsian", "utilitarian"):
            got_assign, got_val = brute_force_assignment(
                inst, params, centers, kind
            )
            best_val = np.inf
            best_assign = None
            for assign in itertools.product(range(2), repeat=inst.n):
                rep = group_costs(
                    inst, Solution(centers, np.array(assign)), params
                )
                val = rep.R if kind == "rawlsian" else rep.U
                if val < best_val - 1e-15:
                    best_val = val
                    best_assign = np.array(assign)
            assert got_val == pytest.approx(best_val, abs=1e-12)
            assert np.array_equal(got_assign, best_assign)

    def test_size_guard(self):
        inst, params, centers = _setup(n=14, k=2, H=2)
        with pytest.raises(BruteForceSizeError):
            brute_force_assignment(inst, params, centers, "rawlsian", limit=100)

    def test_unknown_objective(self):
        inst, params, centers = _setup(n=5, k=2, H=2)
        with pytest.raises(ValueError):
            brute_force_assignment(inst, params, centers, "minimax")


class TestInfeasibleDetection:
    def test_highs_raises_on_contradiction(self):
        model = LPModel(
            num_vars=1,
            objective=np.zeros(1),
            rows=[
                Row("a", np.array([0]), np.array([1.0]), "eq", 2.0),
            ],
            lower=np.zeros(1),
            upper=np.ones(1),
            meta={"params": Params(k=1, lam=0.5)},
        )
        with pytest.raises(LPInfeasibleError):
            HighsSolver().solve(model, 1e-7)


@settings(max_examples=20, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    lam=st.floats(0.0, 1.0),
    delta=st.floats(0.0, 0.4),
)
def test_solve_lp_property(seed, lam, delta):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 16))
    k = int(rng.integers(1, 4))
    H = int(rng.integers(2, 4))
    inst = random_instance(n, 2, H, seed)
    rmax = float(inst.proportions.max())
    delta = min(delta, (1.0 - rmax) / rmax)  # keep r_h + alpha_h <= 1
    params = Params.with_delta(inst, k, lam, delta)
    centers = inst.features[rng.choice(n, size=k, replace=False)]
    m = build_utilitarian_lp(inst, params, centers)
    frac = solve_lp(m, solver="builtin")
    # t is exactly the elementwise max of (u, o, 0)
    np.testing.assert_array_equal(
        frac.t, np.maximum(np.maximum(frac.u, frac.o), 0.0)
    )
    np.testing.assert_allclose(frac.x.sum(axis=0), 1.0, atol=1e-6)
    assert frac.objective >= -1e-12
    # nearest-center integral assignment upper-bounds the LP optimum
    dist = m.meta["dist_pow"]
    nearest = m.meta["nearest"]
    rep = group_costs(inst, Solution(centers, nearest), params)
    assert frac.objective <= rep.U + 1e-7
