"""Tests for the urn walk: kernel, stationary law, absorption, coupling, mixing."""

import math

import numpy as np
import pytest

from gtftlab.ehrenfest import (
    CapExceededError,
    EhrenfestParams,
    MixingEstimate,
    MultinomialDist,
    StepLimitError,
    absorption_times,
    absorption_walk,
    corner_labels,
    coupled_run,
    detailed_balance_residual,
    enumerate_states,
    estimate_mixing,
    expected_absorption_closed,
    mixing_bound,
    solve_stationary_exact,
    state_count,
    stationary_closed,
    step,
    tmix_exact,
    transition_row,
    tv_distance_exact,
)
from gtftlab.rng import stream

LAMBDA_PAIRS = ((0.2, 0.6), (0.3, 0.3), (0.5, 0.25), (0.6, 0.2))  # a/b in {1/3, 1, 2, 3}


def hitting_time_oracle(k: int, a: float, b: float) -> float:
    """Expected absorption time of the +-k walk by solving the linear system.

    Independent of the martingale formula: h(z) = 1 + a h(z+1) + b h(z-1)
    + (1-a-b) h(z) on the interior, h(+-k) = 0.
    """
    n = 2 * k - 1
    system = np.zeros((n, n))
    rhs = np.ones(n)
    for row in range(n):
        system[row, row] = a + b
        if row + 1 < n:
            system[row, row + 1] = -a
        if row - 1 >= 0:
            system[row, row - 1] = -b
    return float(np.linalg.solve(system, rhs)[k - 1])


# ------------------------------------------------------------------ params, states


def test_params_validation():
    with pytest.raises(ValueError):
        EhrenfestParams(k=1, a=0.3, b=0.3, m=4)
    with pytest.raises(ValueError):
        EhrenfestParams(k=2, a=0.0, b=0.3, m=4)
    with pytest.raises(ValueError):
        EhrenfestParams(k=2, a=0.7, b=0.7, m=4)
    assert EhrenfestParams(k=3, a=0.4, b=0.2, m=5).lam == pytest.approx(2.0)


def test_enumerate_states_small_and_counts():
    assert enumerate_states(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(enumerate_states(3, 1)) == 3
    assert state_count(6, 20) == 53130
    states = enumerate_states(3, 4)
    assert len(states) == state_count(3, 4) == len(set(states))
    assert all(sum(x) == 4 for x in states)


def test_enumerate_states_cap():
    with pytest.raises(CapExceededError):
        enumerate_states(6, 20, cap=1000)


def test_multinomial_pmf_sums_to_one():
    dist = MultinomialDist(m=5, p=(0.2, 0.3, 0.5))
    total = sum(dist.pmf(x) for x in enumerate_states(3, 5))
    assert total == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------------ kernel


def test_transition_row_two_urns_single_ball():
    params = EhrenfestParams(k=2, a=0.4, b=0.3, m=1)
    assert transition_row((1, 0), params) == {(0, 1): 0.4, (1, 0): pytest.approx(0.6)}


def test_transition_row_three_urn_example():
    params = EhrenfestParams(k=3, a=0.4, b=0.2, m=2)
    row = transition_row((1, 1, 0), params)
    assert row[(0, 2, 0)] == pytest.approx(0.2)
    assert row[(1, 0, 1)] == pytest.approx(0.2)
    assert row[(2, 0, 0)] == pytest.approx(0.1)
    assert row[(1, 1, 0)] == pytest.approx(0.5)


def test_transition_row_support_and_mass():
    params = EhrenfestParams(k=4, a=0.3, b=0.25, m=6)
    for x in enumerate_states(4, 6):
        row = transition_row(x, params)
        assert len(row) <= 2 * (params.k - 1) + 1
        assert sum(row.values()) == pytest.approx(1.0, abs=1e-12)
        assert all(v >= 0 for v in row.values())


def test_last_urn_self_loop_probability():
    params = EhrenfestParams(k=4, a=0.3, b=0.25, m=6)
    row = transition_row((0, 0, 0, 6), params)
    assert row[(0, 0, 0, 6)] == pytest.approx(1 - params.b)


def test_step_conserves_mass_and_stays_adjacent():
    params = EhrenfestParams(k=3, a=0.4, b=0.2, m=5)
    rng = stream(0, "step")
    x = (5, 0, 0)
    for _ in range(500):
        y = step(x, params, rng)
        assert sum(y) == 5 and all(c >= 0 for c in y)
        assert sum(abs(c - d) for c, d in zip(x, y)) in (0, 2)
        x = y


def test_step_from_corner_moves_only_up():
    params = EhrenfestParams(k=2, a=0.4, b=0.3, m=5)
    rng = stream(1, "corner")
    seen = {step((5, 0), params, rng) for _ in range(2000)}
    assert seen <= {(5, 0), (4, 1)}


def test_step_frequencies_match_kernel():
    params = EhrenfestParams(k=3, a=0.4, b=0.2, m=4)
    x = (2, 1, 1)
    rng = stream(2, "freq")
    n = 1_000_000
    counts: dict = {}
    for _ in range(n):
        y = step(x, params, rng)
        counts[y] = counts.get(y, 0) + 1
    for y, p in transition_row(x, params).items():
        freq = counts.get(y, 0) / n
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(freq - p) <= 4 * sigma, (y, freq, p)


# ------------------------------------------------------------------ stationary law


def test_stationary_closed_uniform_when_balanced():
    dist = stationary_closed(EhrenfestParams(k=4, a=0.3, b=0.3, m=5))
    np.testing.assert_allclose(dist.p, 0.25)


def test_stationary_closed_geometric_weights():
    dist = stationary_closed(EhrenfestParams(k=3, a=0.4, b=0.2, m=7))
    np.testing.assert_allclose(dist.p, [1 / 7, 2 / 7, 4 / 7], atol=1e-15)


def test_stationary_two_urns_is_binomial():
    params = EhrenfestParams(k=2, a=0.5, b=0.25, m=6)
    lam = params.lam
    dist = stationary_closed(params)
    for x1 in range(7):
        x = (x1, 6 - x1)
        expect = lam ** (6 - x1) / (1 + lam) ** 6 * math.comb(6, x1)
        assert dist.pmf(x) == pytest.approx(expect, rel=1e-12)


def test_exact_solver_matches_closed_form_grid():
    for k in (2, 3, 4):
        for m in (1, 3, 5):
            for a, b in LAMBDA_PAIRS:
                params = EhrenfestParams(k=k, a=a, b=b, m=m)
                states, pi = solve_stationary_exact(params)
                assert pi.sum() == pytest.approx(1.0, abs=1e-12)
                dist = stationary_closed(params)
                pmf = np.array([dist.pmf(x) for x in states])
                np.testing.assert_allclose(pi, pmf, atol=1e-10)


def test_exact_solver_nullspace_fallback_agrees():
    # force the direct solve by giving power iteration no budget
    params = EhrenfestParams(k=3, a=0.4, b=0.2, m=3)
    states, pi = solve_stationary_exact(params, max_iters=0)
    dist = stationary_closed(params)
    pmf = np.array([dist.pmf(x) for x in states])
    np.testing.assert_allclose(pi, pmf, atol=1e-12)


def test_exact_solver_two_urn_midpoint():
    params = EhrenfestParams(k=2, a=0.3, b=0.3, m=2)
    states, pi = solve_stationary_exact(params)
    assert pi[states.index((1, 1))] == pytest.approx(0.5, abs=1e-12)


def test_detailed_balance_residual_small_for_closed_form():
    for k in (2, 3, 4):
        for a, b in LAMBDA_PAIRS:
            params = EhrenfestParams(k=k, a=a, b=b, m=4)
            assert detailed_balance_residual(params) < 1e-12


def test_detailed_balance_residual_flags_perturbation():
    params = EhrenfestParams(k=3, a=0.4, b=0.2, m=4)
    good = stationary_closed(params)
    p = np.array(good.p)
    p[0] += 1e-3
    p /= p.sum()
    bad = MultinomialDist(m=4, p=tuple(p))
    assert detailed_balance_residual(params, dist=bad) > 1e-6


def test_detailed_balance_two_state_chain_exact():
    params = EhrenfestParams(k=2, a=0.4, b=0.1, m=1)
    assert detailed_balance_residual(params) < 1e-15


# ------------------------------------------------------------------ absorption


def test_absorption_closed_balanced_is_k_squared():
    assert expected_absorption_closed(4, 0.5, 0.5) == 16.0
    assert expected_absorption_closed(6, 0.3, 0.3) == 36.0


def test_absorption_closed_matches_hitting_time_oracle():
    for k, a, b in [(4, 0.5, 0.5), (8, 0.6, 0.2), (6, 0.3, 0.35), (1, 0.2, 0.5), (5, 0.45, 0.55)]:
        assert expected_absorption_closed(k, a, b) == pytest.approx(
            hitting_time_oracle(k, a, b), rel=1e-10
        )


def test_absorption_closed_respects_min_bound():
    # biased lazy pairs exercise the k/|a-b| branch; moving pairs the k^2 branch
    for k in (2, 4, 8):
        for a, b in ((0.6, 0.2), (0.7, 0.1), (0.55, 0.45), (0.5, 0.5)):
            value = expected_absorption_closed(k, a, b)
            cap = k * k if a == b else min(k / abs(a - b), k * k)
            assert value <= cap + 1


def test_absorption_single_site_mean():
    # k=1 absorbs at the first move: geometric with success a+b
    taus = absorption_times(1, 0.3, 0.5, 50_000, stream(3, "absorb-k1"))
    se = taus.std(ddof=1) / math.sqrt(taus.size)
    assert abs(taus.mean() - 1 / 0.8) < 3 * se
    assert expected_absorption_closed(1, 0.3, 0.5) == pytest.approx(1 / 0.8)


def test_absorption_walk_single_runs_match_closed():
    rng = stream(4, "absorb-one")
    taus = np.array([absorption_walk(3, 0.5, 0.3, rng) for _ in range(20_000)])
    se = taus.std(ddof=1) / math.sqrt(taus.size)
    assert abs(taus.mean() - expected_absorption_closed(3, 0.5, 0.3)) < 3 * se


def test_absorption_batch_matches_closed():
    for k, a, b in [(8, 0.6, 0.2), (6, 0.3, 0.35)]:
        taus = absorption_times(k, a, b, 50_000, stream(5, "absorb", k))
        se = taus.std(ddof=1) / math.sqrt(taus.size)
        assert abs(taus.mean() - expected_absorption_closed(k, a, b)) < 3 * se


def test_absorption_step_limit():
    with pytest.raises(StepLimitError):
        absorption_walk(10, 0.05, 0.05, stream(6, "limit"), step_limit=5)


# ------------------------------------------------------------------ coupling, mixing


def test_coupled_run_zero_when_equal():
    params = EhrenfestParams(k=3, a=0.3, b=0.2, m=5)
    assert coupled_run(params, [2] * 5, [2] * 5, stream(7, "eq")) == 0


def test_coupled_run_coalesces_and_validates_labels():
    params = EhrenfestParams(k=3, a=0.3, b=0.2, m=6)
    x0, y0 = corner_labels(params)
    tau = coupled_run(params, x0, y0, stream(8, "coal"))
    assert tau > 0
    with pytest.raises(ValueError):
        coupled_run(params, [0] * 6, y0, stream(9, "bad"))


def test_coupled_run_step_limit():
    params = EhrenfestParams(k=4, a=0.3, b=0.3, m=8)
    x0, y0 = corner_labels(params)
    with pytest.raises(StepLimitError):
        coupled_run(params, x0, y0, stream(10, "lim"), step_limit=3)


def test_mean_coupling_time_within_analytic_envelope():
    params = EhrenfestParams(k=4, a=0.3, b=0.3, m=32)
    x0, y0 = corner_labels(params)
    rng = stream(11, "env")
    taus = [coupled_run(params, x0, y0, rng) for _ in range(1000)]
    envelope = 2 * params.k**2 * params.m * (math.log(params.m) + 1)
    assert np.mean(taus) <= envelope


def test_estimate_mixing_fields_and_quantile():
    params = EhrenfestParams(k=2, a=0.25, b=0.25, m=16)
    est = estimate_mixing(params, 0.25, 200, stream(12, "est"))
    assert est.method == "coupling-tail"
    assert est.trials == 200 and est.epsilon == 0.25
    assert est.t_hat > 0


def test_estimate_upper_bounds_exact_tmix_on_small_instances():
    instances = [
        EhrenfestParams(k=2, a=0.25, b=0.25, m=16),
        EhrenfestParams(k=3, a=0.4, b=0.2, m=8),
        EhrenfestParams(k=4, a=0.2, b=0.4, m=6),
    ]
    for params in instances:
        exact = tmix_exact(params, epsilon=0.25)
        est = estimate_mixing(params, 0.25, 400, stream(13, "vs", params.k, params.m))
        assert est.t_hat >= exact.t_hat, (params, est.t_hat, exact.t_hat)


def test_estimate_roughly_doubles_with_m():
    small = estimate_mixing(
        EhrenfestParams(k=4, a=0.7, b=0.2, m=8), 0.25, 200, stream(14, "m8")
    )
    large = estimate_mixing(
        EhrenfestParams(k=4, a=0.7, b=0.2, m=32), 0.25, 200, stream(14, "m32")
    )
    assert large.t_hat > 2 * small.t_hat


def test_mixing_bound_formula_and_monotonicity():
    balanced = EhrenfestParams(k=3, a=0.3, b=0.3, m=8)
    assert mixing_bound(balanced) == pytest.approx(2 * 9 * 8 * math.log2(32))
    biased = EhrenfestParams(k=3, a=0.6, b=0.2, m=8)
    assert mixing_bound(biased) == pytest.approx(2 * min(3 / 0.4, 9) * 8 * math.log2(32))
    for params, bigger in [
        (balanced, EhrenfestParams(k=3, a=0.3, b=0.3, m=16)),
        (balanced, EhrenfestParams(k=4, a=0.3, b=0.3, m=8)),
    ]:
        assert mixing_bound(bigger) > mixing_bound(params)


def test_bound_dominates_estimate():
    for params in [
        EhrenfestParams(k=2, a=0.25, b=0.25, m=16),
        EhrenfestParams(k=3, a=0.4, b=0.2, m=8),
        EhrenfestParams(k=4, a=0.7, b=0.2, m=16),
    ]:
        est = estimate_mixing(params, 0.25, 300, stream(15, "dom", params.k))
        assert est.t_hat <= mixing_bound(params)


# ------------------------------------------------------------------ exact TV distance


def test_tv_distance_at_time_zero():
    params = EhrenfestParams(k=3, a=0.4, b=0.2, m=4)
    dist = stationary_closed(params)
    x0 = (4, 0, 0)
    assert tv_distance_exact(params, 0, x0) == pytest.approx(1 - dist.pmf(x0), abs=1e-12)


def test_tv_distance_monotone_nonincreasing():
    params = EhrenfestParams(k=2, a=0.25, b=0.25, m=10)
    x0 = (10, 0)
    values = [tv_distance_exact(params, t, x0) for t in range(0, 121, 10)]
    for earlier, later in zip(values, values[1:]):
        assert later <= earlier + 1e-12


def test_tv_below_quarter_at_mixing_bound():
    for params in [
        EhrenfestParams(k=2, a=0.25, b=0.25, m=16),
        EhrenfestParams(k=3, a=0.4, b=0.2, m=8),
        EhrenfestParams(k=4, a=0.2, b=0.4, m=5),
    ]:
        t_bound = math.ceil(mixing_bound(params))
        top = tuple([params.m] + [0] * (params.k - 1))
        bottom = tuple([0] * (params.k - 1) + [params.m])
        for x0 in (top, bottom):
            assert tv_distance_exact(params, t_bound, x0) <= 0.25


def test_tmix_exact_corner_vs_full_maximization():
    params = EhrenfestParams(k=3, a=0.4, b=0.2, m=4)
    corners = tmix_exact(params, epsilon=0.25)
    everywhere = tmix_exact(params, epsilon=0.25, all_inits=True)
    assert corners.method == "exact-tv"
    assert everywhere.t_hat >= corners.t_hat
