import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ehshare import (SimConfig, default_params, derive, simulate, validate)
from ehshare.energy_chain import (ChainError, EnergyChain, ReducibleChainWarning,
                                  build_chain, mu_e, optimize_g, outage_threshold,
                                  solve_chain, stationary, success_probability,
                                  su_throughput)
from ehshare.harvest import HarvestPmf, arrival_pmfs, nature_pmf, rf_pmf
from ehshare.primary_link import mu_p, pi_idle

P = default_params()
DC = derive(P)


def pmf(*probs, kind="nature"):
    return HarvestPmf(np.array(probs, dtype=float), 0.0, kind)


def test_two_state_chain_head_entry_by_hand():
    idle = pmf(0.7, 0.3)
    active = pmf(0.4, 0.6)
    chain = build_chain(idle, active, 0.55, g=1, e_max=1)
    assert chain.omega[0, 0] == 0.55 * 0.7 + (1.0 - 0.55) * 0.4
    assert chain.omega.shape == (2, 2)


def test_no_arrival_kernel_is_consume_or_stay():
    still = pmf(1.0)
    chain = build_chain(still, still, 0.55, g=2, e_max=4)
    expected = np.zeros((5, 5))
    for j in range(5):
        if j >= 2:
            expected[j, j - 2] = 0.55
            expected[j, j] = 1.0 - 0.55
        else:
            expected[j, j] = 1.0
    assert np.array_equal(chain.omega, expected)


def test_three_state_matrix_matches_hand_enumeration_exactly():
    p = default_params(lambda_e=0.5, eta=0.6, lambda_p=0.4, E_max=2, G=1)
    dc = derive(p)
    idle, active = arrival_pmfs(p, dc)
    pi = pi_idle(p, dc)
    pb = 1.0 - pi
    pp0, pp1 = idle.probs[0], idle.probs[1]
    pa0, pa1 = active.probs[0], active.probs[1]
    hand = np.array([
        [pi * pp0 + pb * pa0, pi * pp1 + pb * pa1,
         pi * (1.0 - (pp0 + pp1)) + pb * (1.0 - (pa0 + pa1))],
        [pi * pp0, pi * pp1 + pb * pa0,
         pi * (1.0 - (pp0 + pp1)) + pb * (1.0 - pa0)],
        [0.0, pi * pp0, pi * (1.0 - pp0) + pb * 1.0],
    ])
    chain = build_chain(idle, active, pi, g=1, e_max=2)
    assert np.array_equal(chain.omega, hand)


@settings(max_examples=40)
@given(
    pi=st.floats(min_value=0.0, max_value=1.0),
    g=st.integers(min_value=1, max_value=4),
    e_max=st.integers(min_value=4, max_value=9),
    raw_idle=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=6),
    raw_active=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=6),
)
def test_rows_always_sum_to_one(pi, g, e_max, raw_idle, raw_active):
    def normalize(raw):
        arr = np.asarray(raw) + 1e-9
        return HarvestPmf(arr / math.fsum(arr), 0.0, "nature")

    chain = build_chain(normalize(raw_idle), normalize(raw_active), pi, g, e_max)
    assert np.all(chain.omega >= 0)
    assert np.max(np.abs(chain.omega.sum(axis=1) - 1.0)) < 1e-12


def test_build_rejects_bad_energy_budget():
    still = pmf(1.0)
    with pytest.raises(ChainError):
        build_chain(still, still, 0.5, g=0, e_max=3)
    with pytest.raises(ChainError):
        build_chain(still, still, 0.5, g=4, e_max=3)
    with pytest.raises(ChainError):
        build_chain(still, still, 1.5, g=1, e_max=3)


def test_build_rejects_unnormalized_pmf():
    bad = rf_pmf(P, DC, joint=True)  # sums to mu_p, not 1
    with pytest.raises(ChainError):
        build_chain(bad, pmf(1.0), 0.5, g=1, e_max=3)


def test_stationary_of_rank_one_chain_is_the_common_row():
    v = np.array([0.2, 0.5, 0.3])
    chain = EnergyChain(omega=np.tile(v, (3, 1)), g=1)
    chi = stationary(chain)
    assert np.allclose(chi, v, atol=1e-12)


def test_stationary_two_state_birth_death_balance():
    p, q = 0.3, 0.2
    chain = EnergyChain(omega=np.array([[1 - p, p], [q, 1 - q]]), g=1)
    chi = stationary(chain)
    assert np.allclose(chi, [q / (p + q), p / (p + q)], atol=1e-12)


def test_stationary_requires_row_stochastic_matrix():
    with pytest.raises(ChainError):
        stationary(EnergyChain(omega=np.array([[0.5, 0.4], [0.2, 0.8]]), g=1))


def test_absorbing_empty_queue_is_detected_and_resolved():
    # no ambient arrivals, no conversion: the queue drains to 0 and stays
    still = pmf(1.0)
    chain = build_chain(still, still, 0.55, g=1, e_max=3)
    with pytest.warns(ReducibleChainWarning):
        chi = stationary(chain)
    assert np.array_equal(chi, [1.0, 0.0, 0.0, 0.0])


def test_reducible_mixture_weights_follow_absorption_probabilities():
    omega = np.array([
        [0.0, 0.3, 0.7],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ])
    with pytest.warns(ReducibleChainWarning):
        chi = stationary(EnergyChain(omega=omega, g=1))
    assert np.allclose(chi, [0.0, 0.3, 0.7], atol=1e-12)


def test_stationary_matches_long_run_occupancy():
    p = default_params(lambda_p=0.4, eta=0.6, lambda_e=0.0, E_max=10, G=2)
    dc = derive(p)
    idle, active = arrival_pmfs(p, dc)
    chain = solve_chain(idle, active, pi_idle(p, dc), 2, 10)
    res = simulate(p, SimConfig(n_slots=10**6, seed=99, warmup=10_000))
    assert np.max(np.abs(chain.chi - res.energy_occupancy_hist)) < 0.01


def test_success_probability_reference_value_and_oracle():
    sp = success_probability(P, DC, 1)
    assert sp == pytest.approx(0.3520058338773603, rel=1e-12)
    assert sp == pytest.approx(0.352, abs=5e-4)
    rng = np.random.default_rng(2026_03)
    h = rng.exponential(P.sigma_ssd, 10**6)
    emp = np.mean(h >= outage_threshold(P, DC, 1))
    assert emp == pytest.approx(sp, abs=2e-3)


def test_success_probability_strictly_increases_with_budget():
    values = [success_probability(P, DC, g) for g in range(1, 11)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_throughput_requires_solved_chain():
    idle, active = arrival_pmfs(P, DC)
    chain = build_chain(idle, active, pi_idle(P, DC), 1, P.E_max)
    with pytest.raises(ChainError):
        su_throughput(chain, P, DC)


def test_throughput_vanishes_with_the_top_state_mass():
    # at G = E_max the throughput is carried entirely by the full-battery
    # state; weak harvesting starves it toward zero
    tops = []
    for eta in (0.2, 0.1, 0.05):
        p = default_params(eta=eta, lambda_p=0.1, lambda_e=0.0)
        dc = derive(p)
        idle, active = arrival_pmfs(p, dc)
        chain = solve_chain(idle, active, pi_idle(p, dc), p.E_max, p.E_max)
        mu_s = su_throughput(chain, p, dc)
        expected = pi_idle(p, dc) * success_probability(p, dc, p.E_max) * chain.chi[-1]
        assert mu_s == pytest.approx(expected, rel=1e-12)
        tops.append(mu_s)
    assert tops[0] > tops[1] > tops[2]
    assert tops[-1] < 1e-3


def test_saturated_primary_scales_by_service_complement():
    p = default_params(lambda_p=1.0)
    dc = derive(p)
    report = optimize_g(p, dc, arrival_pmfs(p, dc))
    assert report.pi_idle == pytest.approx(1.0 - mu_p(p, dc), rel=1e-15)
    assert report.mu_s_star <= report.pi_idle


def test_consumption_rate_identity_and_simulator_agreement():
    p = default_params(lambda_p=0.4, eta=0.6, lambda_e=0.0, E_max=10, G=2)
    dc = derive(p)
    idle, active = arrival_pmfs(p, dc)
    chain = solve_chain(idle, active, pi_idle(p, dc), 2, 10)
    rate = mu_e(chain, p, dc)
    avail = float(chain.chi[2:].sum())
    assert rate == pytest.approx(2 * pi_idle(p, dc) * avail, rel=1e-15)
    res = simulate(p, SimConfig(n_slots=10**6, seed=17, warmup=10_000))
    assert res.energy_consumed_per_slot == pytest.approx(rate, rel=0.02)


def test_availability_mass_nonincreasing_in_budget_at_reference_point():
    idle, active = arrival_pmfs(P, DC)
    pi = pi_idle(P, DC)
    masses = []
    for g in range(1, P.E_max + 1):
        chain = solve_chain(idle, active, pi, g, P.E_max)
        masses.append(float(chain.chi[g:].sum()))
    assert all(b <= a + 1e-12 for a, b in zip(masses, masses[1:]))


def test_optimize_singleton_budget():
    p = default_params(E_max=1, G=1)
    dc = derive(p)
    report = optimize_g(p, dc, arrival_pmfs(p, dc))
    assert report.g_star == 1
    assert set(report.mu_s_by_g) == {1}


def test_optimize_equals_exhaustive_reevaluation():
    for over in ({}, {"lambda_p": 0.7, "lambda_e": 0.5}, {"E_max": 4, "eta": 0.3}):
        p = default_params(**over)
        dc = derive(p)
        idle, active = arrival_pmfs(p, dc)
        report = optimize_g(p, dc, (idle, active))
        pi = pi_idle(p, dc)
        best_g, best_v = None, -1.0
        for g in range(1, p.E_max + 1):
            chain = solve_chain(idle, active, pi, g, p.E_max)
            v = pi * success_probability(p, dc, g) * float(chain.chi[g:].sum())
            assert report.mu_s_by_g[g] == pytest.approx(v, rel=1e-12)
            if v > best_v:
                best_g, best_v = g, v
        assert report.g_star == best_g
        assert report.mu_s_star == pytest.approx(best_v, rel=1e-12)


def test_optimal_budget_regression_point():
    # frozen output of the exhaustive sweep at this operating point
    p = default_params(E_max=6, lambda_p=0.3)
    dc = derive(p)
    report = optimize_g(p, dc, arrival_pmfs(p, dc))
    assert report.g_star == 1
    assert report.mu_s_star == pytest.approx(0.10669981897262712, rel=1e-10)


def test_stationary_invariants_across_config_sweep():
    for e_max in (2, 6, 10):
        for g in sorted({1, 2, e_max}):
            for lam_p in (0.0, 0.4, 1.0):
                for eta, lam_e in ((0.6, 0.0), (0.0, 1.0), (0.3, 0.5)):
                    p = default_params(E_max=e_max, G=g, lambda_p=lam_p,
                                       eta=eta, lambda_e=lam_e)
                    dc = derive(p)
                    idle, active = arrival_pmfs(p, dc)
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", ReducibleChainWarning)
                        chain = solve_chain(idle, active, pi_idle(p, dc), g, e_max)
                    resid = np.max(np.abs(chain.chi @ chain.omega - chain.chi))
                    assert resid < 1e-10
                    assert abs(chain.chi.sum() - 1.0) <= 1e-12
                    assert np.all(chain.chi >= 0)
