import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import sparse

from robust_ed.powercurve import PowerCurvePWL
from robust_ed.uncertainty import (EmptySetError, Polyhedron, SetSpec, box_set, build_demand_set,
                                   build_wind_trajectory_set, nominal_wind_power, product_set, singleton_set)
from robust_ed.windstats import SeasonalModel, VarModel, nominal_forecast

CURVE = PowerCurvePWL([-30.0, -100.0], [10.0, 20.0], 100.0)


def wind_models(N=2, L=1):
    g = SeasonalModel(np.c_[np.full(N, 8.0), np.full(N, 1.0), np.zeros((N, 3))])
    A = np.stack([0.5 * np.eye(N) + 0.1] * L) if L else np.zeros((0, N, N))
    sigma = 0.5 * np.eye(N) + 0.25
    return g, VarModel(A, sigma)


def wind_set(gamma=0.5, kind="dus", N=2, L=1, T=3, gamma_t=None, t1=100, hist=None):
    g, var = wind_models(N, L)
    if kind != "dus":
        var = VarModel(np.zeros((0, N, N)), var.sigma)
    hist = np.full((max(L, 1), N), 9.0) if hist is None else hist
    spec = SetSpec(kind, gamma, 0.0, gamma_t, L)
    return build_wind_trajectory_set(g, var, hist, spec, [CURVE] * N, T, t1)


def lifted(X: Polyhedron, name: str) -> np.ndarray:
    return np.array([j for j, lab in enumerate(X.labels) if lab.startswith(name + "[")])


def optimize_lifted(X: Polyhedron, c, maximize=False):
    m = X._model()
    m.set_objective(-np.asarray(c) if maximize else np.asarray(c))
    sol = m.solve()
    assert sol.optimal
    return (-sol.objective if maximize else sol.objective), sol.x


# ---------------------------------------------------------------------- demand
def test_zero_budget_demand_is_singleton(rng):
    dbar = rng.uniform(10, 20, (3, 4))
    D = build_demand_set(dbar, 0.05 * dbar, 0.0)
    for _ in range(5):
        w = rng.normal(size=D.n_xi)
        lo, _ = D.optimize_xi(w)
        hi, _ = D.optimize_xi(w, maximize=True)
        assert lo == pytest.approx(hi, abs=1e-9)
        assert lo == pytest.approx(w @ dbar.ravel())


def test_single_load_is_interval():
    D = build_demand_set([[50.0]], [[5.0]], 1.0)
    assert D.optimize_xi([1.0])[0] == pytest.approx(45.0)
    assert D.optimize_xi([1.0], maximize=True)[0] == pytest.approx(55.0)
    assert sorted(D.vertices()[:, 0]) == pytest.approx([45.0, 55.0])


def test_two_load_diamond_sqrt2():
    # box [-1, 1]^2 cut by |x| + |y| <= sqrt 2: the max of x + y sits at the
    # diamond's edge midpoint (sqrt2/2, sqrt2/2), value sqrt 2
    D = build_demand_set([[0.0, 0.0]], [[1.0, 1.0]], 1.0)
    assert D.optimize_xi([1.0, 1.0], maximize=True)[0] == pytest.approx(np.sqrt(2))
    V = D.vertices()
    assert V.shape[0] == 8  # octagon: box corners clipped by the diamond


def test_demand_dimension_errors():
    with pytest.raises(ValueError):
        build_demand_set([[1.0, 2.0]], [[1.0, 0.0]], 1.0)
    with pytest.raises(ValueError):
        build_demand_set([[1.0, 2.0]], [[1.0, 1.0, 1.0]], 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0))
def test_demand_points_within_box(seed, gamma):
    r = np.random.default_rng(seed)
    dbar = r.uniform(5, 10, (2, 3))
    dhat = r.uniform(0.1, 1, (2, 3))
    D = build_demand_set(dbar, dhat, gamma)
    _, z = D.optimize_xi(r.normal(size=D.n_xi))
    d = D.xi(z).reshape(dbar.shape)
    assert np.all(np.abs(d - dbar) <= gamma * dhat + 1e-7)
    assert np.all((np.abs(d - dbar) / dhat).sum(axis=1) <= gamma * np.sqrt(3) + 1e-7)


# ------------------------------------------------------------------------ wind
def test_zero_budget_trajectory_is_the_forecast():
    g, var = wind_models()
    hist = np.array([[9.0, 7.0]])
    X = wind_set(0.0, hist=hist)
    res_hist = hist - g.evaluate([100])
    expect_r = nominal_forecast(g, var, res_hist, 3, 100)
    r_idx = lifted(X, "r")
    for j, k in enumerate(r_idx):
        c = np.zeros(X.n_vars)
        c[k] = 1.0
        lo, _ = optimize_lifted(X, c)
        hi, _ = optimize_lifted(X, c, maximize=True)
        assert lo == pytest.approx(hi, abs=1e-8)
        assert lo == pytest.approx(expect_r.ravel()[j], abs=1e-8)
    # the adversary pushes pbar down onto the envelope, which is the nominal point
    lo, z = X.optimize_xi(np.ones(X.n_xi))
    assert X.xi(z) == pytest.approx(CURVE.evaluate(expect_r).ravel(), abs=1e-8)
    assert X.nominal_xi == pytest.approx(X.xi(z), abs=1e-8)
    assert nominal_wind_power(g, var, hist, [CURVE] * 2, 3, 100) == pytest.approx(X.nominal_xi.reshape(2, 2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_budget_nesting_on_objectives(seed):
    r = np.random.default_rng(seed)
    small, large = wind_set(0.3), wind_set(0.6)
    w = r.uniform(0, 1, small.n_xi)  # nonnegative weights keep the min bounded
    assert large.optimize_xi(w)[0] <= small.optimize_xi(w)[0] + 1e-8


def test_budget_nesting_on_members():
    small, large = wind_set(0.3, T=2), wind_set(0.6, T=2)
    r = np.random.default_rng(0)
    for _ in range(10):
        _, z = small.optimize_xi(r.uniform(0, 1, small.n_xi))
        assert large.contains(small.xi(z))


def test_split_linearization_matches_octagon():
    # N = 2, one period: |u_i| <= G and |u_1| + |u_2| <= G sqrt 2 is an octagon
    # with vertices (+-G, +-G(sqrt2 - 1)) and their swaps
    G = 0.7
    X = wind_set(G, T=2)
    up, um = lifted(X, "up"), lifted(X, "um")
    a = G * (np.sqrt(2) - 1)
    octagon = np.array([(sx * G, sy * a) for sx in (-1, 1) for sy in (-1, 1)]
                       + [(sy * a, sx * G) for sx in (-1, 1) for sy in (-1, 1)])
    r = np.random.default_rng(3)
    for _ in range(20):
        w = r.normal(size=2)
        c = np.zeros(X.n_vars)
        c[up], c[um] = w, -w
        val, _ = optimize_lifted(X, c, maximize=True)
        assert val == pytest.approx(np.max(octagon @ w), abs=1e-8)


def test_time_budget_tightens_total_innovation():
    T, N, G = 4, 2, 1.0
    loose = wind_set(G, T=T)
    tight = wind_set(G, T=T, gamma_t=0.5)
    def total(X):
        c = np.zeros(X.n_vars)
        c[lifted(X, "up")] = c[lifted(X, "um")] = 1.0
        return optimize_lifted(X, c, maximize=True)[0]
    assert total(loose) == pytest.approx((T - 1) * G * np.sqrt(N))
    assert total(tight) == pytest.approx(0.5 * G * np.sqrt(N) * np.sqrt(T - 1))
    # a time budget of sqrt(T-1) or more is redundant
    assert total(wind_set(G, T=T, gamma_t=np.sqrt(T - 1))) == pytest.approx(total(loose))


def _cross_site_innovation(X: Polyhedron) -> bool:
    """Whether some site's residual row is driven by another site's innovation."""
    W = X.W.toarray()
    rt = lifted(X, "rt").reshape(-1, 2)
    up = lifted(X, "up").reshape(-1, 2)
    for i in range(W.shape[0]):
        if not W[i, up].any():
            continue
        site = np.flatnonzero(W[i, rt].any(axis=0))
        if site.size == 1 and W[i, up[:, 1 - site[0]]].any():
            return True
    return False


def test_sus2_has_no_cross_site_innovation():
    assert not _cross_site_innovation(wind_set(0.5, kind="sus2"))
    # SUS1 and DUS keep the correlated Cholesky factor
    assert _cross_site_innovation(wind_set(0.5, kind="sus1"))
    assert _cross_site_innovation(wind_set(0.5, kind="dus"))


def test_static_sets_use_persistence():
    g, _ = wind_models()
    hist = np.array([[11.0, 6.0]])
    X = wind_set(0.0, kind="sus1", hist=hist)
    shift = hist[0] - g.evaluate([100])[0]
    expect = np.maximum(0, g.evaluate([101, 102]) + shift)
    r = X.point[lifted(X, "r")].reshape(2, 2)
    assert r == pytest.approx(expect)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_adversary_lands_on_power_curve(seed):
    r = np.random.default_rng(seed)
    X = wind_set(0.8)
    w = r.uniform(0.1, 1, X.n_xi)  # adversary minimises available wind
    _, z = X.optimize_xi(w)
    speeds = z[lifted(X, "r")]
    assert X.xi(z) == pytest.approx(CURVE.evaluate(speeds), abs=1e-7)
    assert np.all(speeds >= -1e-9)


def test_wind_set_errors():
    g, var = wind_models()
    spec = SetSpec("dus", 0.5, lags=1)
    with pytest.raises(ValueError, match="history"):
        build_wind_trajectory_set(g, var, np.zeros((0, 2)), spec, [CURVE] * 2, 3, 0)
    with pytest.raises(ValueError):
        build_wind_trajectory_set(g, var, np.ones((1, 2)), spec, [CURVE], 3, 0)
    with pytest.raises(ValueError):
        build_wind_trajectory_set(g, var, np.ones((1, 2)), spec, [CURVE] * 2, 1, 0)
    with pytest.raises(ValueError):
        SetSpec("bogus")
    with pytest.raises(ValueError):
        SetSpec("dus", -1.0)


# -------------------------------------------------------------------- products
def test_product_of_singletons():
    X = product_set(singleton_set([1.0, 2.0], ["a", "b"]), singleton_set([3.0], ["c"]))
    V = X.vertices()
    assert V.shape == (1, 3)
    assert V[0] == pytest.approx([1, 2, 3])


def test_product_vertex_count():
    seg = box_set([0.0], [1.0], ["s"])
    tri = Polyhedron(("x", "y"), sparse.csr_matrix([[1.0, 1.0]]), ["<"], [1.0], [0, 0], [np.inf, np.inf],
                     [0, 1], np.array([0.2, 0.2]))
    assert tri.vertices().shape[0] == 3
    assert product_set(seg, tri).vertices().shape[0] == 6


def test_product_label_collision():
    with pytest.raises(ValueError, match="collision"):
        product_set(singleton_set([1.0], ["a"]), singleton_set([2.0], ["a"]))


def test_14bus_default_product_is_nonempty(grid14):
    from robust_ed.sim import load_profile, synthetic_wind_models

    g, var = synthetic_wind_models(grid14.n_wind)
    curves = [w.power_curve for w in grid14.windfarms]
    dbar = load_profile(grid14, np.arange(1, 9))
    W = build_wind_trajectory_set(g, var, np.full((2, 4), 8.0), SetSpec("dus", 0.5, 0.5, lags=2), curves, 9, 0)
    X = product_set(build_demand_set(dbar, 0.05 * dbar, 0.5), W)
    assert not X.is_empty()
    assert X.n_xi == 8 * (grid14.n_loads + grid14.n_wind)


def test_empty_set_detected():
    P = Polyhedron(("x",), sparse.csr_matrix([[1.0], [1.0]]), [">", "<"], [2.0, 1.0], [-np.inf], [np.inf], [0])
    assert P.is_empty()
    with pytest.raises(EmptySetError):
        P.check_nonempty()


def test_membership_and_text():
    D = build_demand_set([[10.0, 10.0]], [[1.0, 1.0]], 1.0)
    assert D.contains([10.5, 10.5])
    assert not D.contains([11.0, 11.0])
    assert "d[2,0]" in D.to_text()


def test_shared_solver_tracks_changes():
    a = wind_set(0.3, hist=np.array([[9.0, 9.0]]))
    b = wind_set(0.6, hist=np.array([[10.0, 7.0]]))
    w = np.linspace(0.2, 1, a.n_xi)
    a.optimize_xi(w)
    assert b.share_solver(a)
    fresh = wind_set(0.6, hist=np.array([[10.0, 7.0]]))
    assert b.optimize_xi(w)[0] == pytest.approx(fresh.optimize_xi(w)[0], abs=1e-8)


def test_box_membership_respects_its_bounds():
    B = box_set([0.0, 1.0], [2.0, 3.0])
    assert B.contains([1.0, 2.0])
    assert B.contains([2.0, 3.0])
    assert not B.contains([2.5, 2.0])
    assert not B.contains([1.0, 0.0])
