import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from spokeforge.errors import ConfigError, DomainError
from spokeforge.evaluator import REFERENCE_RECORD, PerformanceRecord
from spokeforge.optimizer import (
    ParetoArchive,
    bo_run,
    bo_run_multi,
    dominates,
    ehvi_mc,
    expected_improvement,
    gp_fit,
    gp_posterior,
    hypervolume,
    hypervolume_2d,
    hypervolume_improvement,
    nondominated_mask,
    parse_objective,
    pareto_filter,
    pso_run,
    scalarize,
    simplex_weights,
)
from spokeforge.optimizer.bo import reference_point
from spokeforge.optimizer.gp import se_kernel
from spokeforge.optimizer.objectives import minimization_vector

# ------------------------------------------------------------------ oracles


def dominance_oracle(F):
    n = len(F)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        for j in range(n):
            if i != j and np.all(F[j] <= F[i]) and np.any(F[j] < F[i]):
                keep[i] = False
                break
    return keep


def hv_inclusion_exclusion(F, ref):
    total = 0.0
    for r in range(1, len(F) + 1):
        for S in itertools.combinations(range(len(F)), r):
            corner = np.max(F[list(S)], axis=0)
            total += (-1) ** (r + 1) * np.prod(np.clip(ref - corner, 0, None))
    return total


def hv_grid_count(F, ref):
    """Count unit cells dominated by an integer front."""
    axes = [np.arange(0, int(r)) + 0.5 for r in ref]
    cells = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(ref))
    dom = np.zeros(len(cells), dtype=bool)
    for p in F:
        dom |= np.all(cells >= p, axis=1)
    return int(dom.sum())


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


# ---------------------------------------------------------------------- PSO


def test_pso_sphere_10d():
    d = 10
    res = pso_run(sphere, (-5 * np.ones(d), 5 * np.ones(d)), n_particles=30, n_iters=200, seed=42)
    assert res.best_value < 1e-3
    tv = res.trace_values
    assert len(tv) == 201 and np.all(np.diff(tv) <= 0)
    again = pso_run(sphere, (-5 * np.ones(d), 5 * np.ones(d)), n_particles=30, n_iters=200, seed=42)
    assert np.array_equal(again.best_x, res.best_x)


def test_pso_vectorized_matches_pointwise():
    b = (-np.ones(3), np.ones(3))
    a = pso_run(sphere, b, n_particles=8, n_iters=20, seed=1)
    v = pso_run(lambda X: np.sum(X**2, axis=1), b, n_particles=8, n_iters=20, seed=1, vectorized=True)
    assert np.array_equal(a.history_x, v.history_x)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10), st.booleans())
def test_pso_stays_in_bounds(seed, width, per_dim):
    lo, hi = np.array([-width, 0.0]), np.array([0.0, width])
    res = pso_run(lambda x: -x[0] + x[1] ** 3, (lo, hi), n_particles=6, n_iters=15, seed=seed, per_dimension=per_dim)
    assert np.all(res.history_x >= lo) and np.all(res.history_x <= hi)
    assert np.all(np.diff(res.trace_values) <= 0)


def test_pso_nonfinite_values_are_ignored():
    f = lambda x: np.nan if x[0] > 0 else sphere(x + 0.5)  # noqa: E731
    res = pso_run(f, (-np.ones(2), np.ones(2)), n_particles=10, n_iters=30, seed=3)
    assert res.nonfinite > 0
    assert np.isfinite(res.best_value) and res.best_x[0] <= 0


def test_pso_rejects_bad_bounds():
    with pytest.raises(DomainError):
        pso_run(sphere, (np.ones(2), np.zeros(2)))


# ----------------------------------------------------------------------- GP


def test_gp_posterior_matches_explicit_inverse(rng):
    X = rng.uniform(size=(8, 2))
    y = np.sin(4 * X[:, 0]) + X[:, 1]
    m = gp_fit(X, y, 0.4, 1.3, 0.05)
    Q = rng.uniform(size=(5, 2))
    K = se_kernel(X, X, 0.4, 1.3) + 0.05**2 * np.eye(8)
    Ks = se_kernel(Q, X, 0.4, 1.3)
    Kinv = np.linalg.inv(K)
    mu, sd = gp_posterior(m, Q)
    assert np.allclose(mu, Ks @ Kinv @ y, atol=1e-9)
    assert np.allclose(sd**2, 1.3**2 - np.einsum("ij,jk,ik->i", Ks, Kinv, Ks), atol=1e-9)
    lml = multivariate_normal(np.zeros(8), K).logpdf(y)
    assert m.log_marginal_likelihood() == pytest.approx(lml, rel=1e-9)


def test_expected_improvement_matches_monte_carlo():
    z = np.random.default_rng(99).standard_normal(400_000)
    for mu, sigma, best in [(0.0, 1.0, 0.0), (1.0, 0.5, 0.2), (-1.0, 2.0, 0.0), (0.3, 0.1, 0.35), (2.0, 1.5, -1.0)]:
        samples = np.maximum(best - (mu + sigma * z), 0.0)
        mc, se = samples.mean(), samples.std() / np.sqrt(len(z))
        assert abs(expected_improvement(mu, sigma, best) - mc) <= 3 * se


def test_expected_improvement_degenerate_sigma():
    assert expected_improvement(1.0, 0.0, 3.0) == 2.0
    assert expected_improvement(4.0, 0.0, 3.0) == 0.0
    with pytest.raises(DomainError):
        expected_improvement(0.0, -1.0, 0.0)


# ----------------------------------------------------------------------- BO


def test_bo_quartic_minimizer():
    f = lambda x: float(x[0] ** 4 - 3 * x[0] ** 2 + x[0])  # noqa: E731
    res = bo_run(f, (np.array([-4.0]), np.array([4.0])), n_init=5, n_iters=30, seed=7)
    x_star = np.real([r for r in np.roots([4, 0, -6, 1]) if abs(r.imag) < 1e-12 and r.real < -1][0])
    assert len(res.y) <= 35
    assert abs(res.best_x[0] - x_star) < 0.1
    assert np.all(np.diff([v for _, v, _ in res.trace]) <= 0)


def test_bo_handles_infeasible_points():
    f = lambda x: np.inf if x[0] > 0.5 else float((x[0] + 0.3) ** 2)  # noqa: E731
    res = bo_run(f, (np.array([-1.0]), np.array([1.0])), n_init=4, n_iters=10, seed=2)
    assert np.isfinite(res.best_value) and res.best_x[0] <= 0.5


def test_mobo_finds_tradeoff():
    f = lambda x: [float(x[0] ** 2 + x[1] ** 2), float((x[0] - 1) ** 2 + x[1] ** 2)]  # noqa: E731
    b = (np.array([-1.0, -1.0]), np.array([2.0, 1.0]))
    res = bo_run_multi(f, b, n_init=6, n_iters=8, seed=4, n_draws=64, n_candidates=128)
    assert len(res.F) == 14 and res.front_mask.sum() >= 2
    assert np.array_equal(res.front_mask, dominance_oracle(res.F))
    again = bo_run_multi(f, b, n_init=6, n_iters=8, seed=4, n_draws=64, n_candidates=128)
    assert np.array_equal(again.X, res.X)


def test_reference_point_is_outside_front():
    F = np.array([[1.0, -2.0], [0.5, -1.0]])
    ref = reference_point(F)
    assert np.all(ref > F.max(axis=0))


# ------------------------------------------------------------------- Pareto


def test_pareto_filter_matches_quadratic_oracle(rng):
    F = rng.uniform(size=(200, 3))
    assert np.array_equal(nondominated_mask(F), dominance_oracle(F))
    G = np.round(rng.uniform(size=(200, 3)) * 4)  # many ties
    mask = nondominated_mask(G)
    uniq_first = np.array([not any(np.array_equal(G[i], G[j]) for j in range(i)) for i in range(len(G))])
    assert np.array_equal(mask, dominance_oracle(G) & uniq_first)


def test_pareto_directions_and_archive():
    pts = np.array([[1.0, 5.0], [2.0, 6.0], [3.0, 1.0], [0.5, 0.5]])
    arc = pareto_filter(pts, directions=("min", "max"))
    assert sorted(map(tuple, arc.as_array())) == [(0.5, 0.5), (1.0, 5.0), (2.0, 6.0)]
    a = ParetoArchive(("min", "min"), np.array([4.0, 4.0]))
    assert a.insert([2, 2], "a") and a.insert([1, 3], "b")
    assert not a.insert([2, 2], "dup") and not a.insert([3, 3], "worse")
    assert a.insert([1, 1], "c") and a.payloads == ["c"]
    assert a.hypervolume() == 9.0
    assert dominates([1, 1], [1, 2]) and not dominates([1, 2], [1, 2])


def test_hypervolume_reference_example():
    front = np.array([[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]])
    assert hypervolume(front, [4.0, 4.0]) == pytest.approx(6.0, abs=1e-6)
    assert hypervolume_2d(front, [4.0, 4.0]) == 6.0
    with pytest.raises(DomainError):
        hypervolume(front, [2.0, 2.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(1, 7), st.integers(0, 2**31))
def test_hypervolume_matches_inclusion_exclusion(m, n, seed):
    r = np.random.default_rng(seed)
    F = r.uniform(size=(n, m))
    ref = np.ones(m) * 1.2
    assert hypervolume(F, ref) == pytest.approx(hv_inclusion_exclusion(F, ref), rel=1e-10, abs=1e-12)


def test_hypervolume_matches_grid_count(rng):
    for m in (2, 3, 4):
        F = rng.integers(0, 6, size=(12, m)).astype(float)
        ref = np.full(m, 6.0)
        assert hypervolume(F[nondominated_mask(F)], ref) == hv_grid_count(F, ref)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2**31))
def test_hypervolume_improvement_is_a_difference(m, seed):
    r = np.random.default_rng(seed)
    F = r.uniform(size=(6, m))
    F = F[nondominated_mask(F)]
    ref = np.full(m, 1.1)
    P = r.uniform(size=(5, m))
    hvi = hypervolume_improvement(F, ref, P)
    base = hypervolume(F, ref)
    for p, v in zip(P, hvi):
        assert v == pytest.approx(hypervolume(np.vstack([F, p]), ref) - base, abs=1e-12)


def test_ehvi_with_zero_spread_is_hvi():
    F = np.array([[0.2, 0.8], [0.6, 0.3]])
    ref = np.array([1.0, 1.0])
    C = np.array([[0.1, 0.1], [0.5, 0.5], [0.9, 0.9]])
    models = [lambda X, j=j: (X[:, j], np.zeros(len(X))) for j in range(2)]
    assert np.allclose(ehvi_mc(models, F, ref, C, n_draws=16), hypervolume_improvement(F, ref, C))


def test_simplex_weights():
    for m, res, count in [(2, 20, 21), (3, 10, 66)]:
        W = simplex_weights(m, res)
        assert W.shape == (count, m)
        assert np.allclose(W.sum(axis=1), 1.0) and np.all(W >= 0)
        assert len({tuple(w) for w in W}) == count


# -------------------------------------------------------------- objectives


def test_parse_objective_grammar():
    s = parse_objective("target:rft=12000,target:rfc=1000/50,min:sedt,max:vib_rms", "proxy")
    kinds = [(d.output, d.kind) for d in s.active]
    assert kinds == [("rft", "target"), ("rfc", "target"), ("sedt", "min"), ("vib_rms", "max")]
    assert s.active[0].scale == 600.0 and s.active[1].scale == 50.0
    assert s.tag == "target-rft_target-rfc_min-sedt_max-vib_rms"
    assert parse_objective(str(s), "proxy") == s


@pytest.mark.parametrize(
    "text",
    ["min:mass", "max:rft,min:rft", "target:rft=abc", "target:rft=1/0", "bogus", "ignore:rft", "min:rft;max:rfc"],
)
def test_parse_objective_errors(text):
    with pytest.raises(ConfigError):
        parse_objective(text)


def test_scalarize_hand_value():
    s = parse_objective("target:rft=12000/1000,min:sedt,max:rfc")
    rec = PerformanceRecord(1500.0, 11000.0, 0.1, 1.2825, 2.0)
    # ((11000-12000)/1000)^2 + 1.2825/2.565 - 1500/1000
    assert scalarize(rec, s, REFERENCE_RECORD) == pytest.approx(1.0 + 0.5 - 1.5)
    assert minimization_vector(rec, s, REFERENCE_RECORD) == pytest.approx([1.0, 0.5, -1.5])
    assert scalarize(REFERENCE_RECORD, parse_objective("min:sedt"), REFERENCE_RECORD) == 1.0
