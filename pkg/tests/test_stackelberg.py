import warnings

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from eegame.channel import ExponentialGain, MonteCarloConfig
from eegame.efficiency import Outage, Shannon, UnsupportedOperationError
from eegame.oracles import follower_bruteforce, realization_sampler
from eegame.solvers import SolverConfig
from eegame.single_user import LinkParams, expected_utility, optimal_snr
from eegame.stackelberg import (
    FollowerSilentError,
    GainRealization,
    equilibrium_expected_utilities,
    follower_best_response,
    follower_br_derivative,
    follower_residual,
    leader_equilibrium,
    leader_objective,
    leader_power_profile,
    leader_sinr_identity,
    leader_stationarity_residual,
    orthogonal_case_utilities,
    powers_from_sinrs,
    sinrs_from_powers,
)

M = Outage(0.9)
P = LinkParams()
S2 = P.sigma2
TIGHT = SolverConfig(rtol=1e-15, max_iter=400)  # finite differences need near-exact zeros

# 1e4-point log grid over p1 with the follower re-solved, Brent refine
REF_REAL = GainRealization(1.3e-10, 0.8e-12, 1.6e-12, 0.7e-10)
REF_P1 = 0.006271901179686477

realizations = st.builds(
    GainRealization,
    st.floats(1e-11, 1e-9), st.floats(1e-14, 1e-11), st.floats(1e-14, 1e-11), st.floats(1e-11, 1e-9),
)


def test_realization_validation():
    with pytest.raises(ValueError):
        GainRealization(0.0, 1e-12, 1e-12, 1e-10)
    assert GainRealization(1.0, 2.0, 3.0, 4.0).alpha == pytest.approx(3 * 2 / 4)


def test_powers_from_sinrs_examples():
    real = REF_REAL
    assert powers_from_sinrs(real, S2, 0.0, 0.0) == (0.0, 0.0)
    p1, p2 = powers_from_sinrs(real, S2, 0.7, 0.0)
    assert p1 == pytest.approx(S2 * 0.7 / real.g11, rel=1e-15) and p2 == 0.0
    big = 1.0 / np.sqrt(real.alpha)
    assert powers_from_sinrs(real, S2, big, big) is None
    with pytest.raises(ValueError):
        powers_from_sinrs(real, S2, -1.0, 0.0)


@given(realizations, st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_sinr_round_trip(real, g1, g2):
    out = powers_from_sinrs(real, S2, g1, g2)
    assume(out is not None)
    r1, r2 = sinrs_from_powers(real, S2, *out)
    assert r1 == pytest.approx(g1, rel=1e-9, abs=1e-300)
    assert r2 == pytest.approx(g2, rel=1e-9, abs=1e-300)


def test_follower_without_cross_gain_is_single_user():
    real = GainRealization(1e-10, 0.0, 1e-12, 0.8e-10)
    for p1 in (0.0, 1e-3, 1.0):
        br = follower_best_response(M, P, real, p1)
        assert br == optimal_snr(M, P, real.g22)
        assert follower_br_derivative(M, P, real, p1) == 0.0


def test_follower_silenced_by_strong_leader():
    assert not follower_best_response(M, P, REF_REAL, 1e3).transmitting
    with pytest.raises(FollowerSilentError):
        follower_br_derivative(M, P, REF_REAL, 1e3)


def test_follower_matches_grid_oracle():
    rng = np.random.default_rng(21)
    for _ in range(15):
        real = realization_sampler(rng)
        p1 = float(10 ** rng.uniform(-4, -1))
        br = follower_best_response(M, P, real, p1)
        x_ref, _ = follower_bruteforce(M, P, real, p1, n=10**5)
        assert br.transmitting == (x_ref > 0)
        if br.transmitting:
            assert br.snr_target == pytest.approx(x_ref, rel=1e-4)
            assert follower_residual(M, P, real, p1, br.snr_target) <= 1e-9


@given(realizations, st.floats(-4, -1))
def test_follower_derivative_sign_and_fd(real, log_p1):
    p1 = 10.0**log_p1
    h = 1e-6 * p1
    brs = [follower_best_response(M, P, real, v, TIGHT) for v in (p1 - h, p1, p1 + h)]
    assume(all(b.transmitting for b in brs))
    d = follower_br_derivative(M, P, real, p1, TIGHT)
    assert d <= 0.0
    fd = (brs[2].snr_target - brs[0].snr_target) / (2 * h)
    assert abs(d - fd) <= 1e-4 * (1 + abs(d))


def test_leader_reference_realization():
    out = leader_equilibrium(M, M, P, P, REF_REAL)
    assert out.p1 == pytest.approx(REF_P1, rel=1e-3)
    assert out.feasible and out.p2 > 0
    assert leader_stationarity_residual(M, M, P, P, REF_REAL, out.gamma1, out.gamma2) <= 1e-4
    assert leader_sinr_identity(REF_REAL, S2, out.p1, out.gamma2) == pytest.approx(out.gamma1, rel=1e-9)


def test_leader_decouples_without_cross_gains():
    real = GainRealization(1.1e-10, 0.0, 0.0, 0.6e-10)
    out = leader_equilibrium(M, M, P, P, real)
    s1, s2 = optimal_snr(M, P, real.g11), optimal_snr(M, P, real.g22)
    assert out.gamma1 == pytest.approx(s1.snr_target, rel=1e-6)
    assert out.gamma2 == pytest.approx(s2.snr_target, rel=1e-9)
    assert leader_stationarity_residual(M, M, P, P, real, out.gamma1, out.gamma2) <= 1e-4


def test_leader_alone_when_follower_priced_out():
    out = leader_equilibrium(M, M, P, P.with_lam(1e20), REF_REAL)
    assert out.p2 == 0.0 and out.gamma2 == 0.0
    assert out.gamma1 == pytest.approx(optimal_snr(M, P, REF_REAL.g11).snr_target, rel=1e-6)


def test_leader_silent_on_weak_channel():
    out = leader_equilibrium(M, M, P, P, GainRealization(1e-12, 1e-12, 1e-12, 1e-10))
    assert out.p1 == 0.0 and out.gamma1 == 0.0 and out.u1_contrib == 0.0


def test_game_needs_pointwise_models():
    with pytest.raises(UnsupportedOperationError):
        leader_equilibrium(Shannon(), M, P, P, REF_REAL)


@given(realizations)
def test_outcome_invariants(real):
    out = leader_equilibrium(M, M, P, P, real)
    assert out.feasible
    assert 1 - real.alpha * out.gamma1 * out.gamma2 > 0
    if out.p1 == 0:
        assert out.gamma1 == 0
    if out.p2 == 0:
        assert out.gamma2 == 0
    r1, r2 = sinrs_from_powers(real, S2, out.p1, out.p2)
    assert r1 == pytest.approx(out.gamma1, rel=1e-9, abs=1e-300)
    assert r2 == pytest.approx(out.gamma2, rel=1e-9, abs=1e-300)
    # the follower's reply is its best response to p1
    assert out.gamma2 == pytest.approx(follower_best_response(M, P, real, out.p1).snr_target, rel=1e-9)


@given(realizations)
def test_leader_no_regret(real):
    out = leader_equilibrium(M, M, P, P, real)
    unit = S2 * M.snr_limit() / real.g11
    alt = unit * 10 ** np.random.default_rng(0).uniform(-6, 6, 200)
    j = leader_objective(M, M, P, P, real, alt)
    assert np.all(j <= out.leader_objective + 1e-6 * abs(out.leader_objective))


def test_decoupling_ladder():
    rng = np.random.default_rng(5)
    base = [rng.exponential(size=4) for _ in range(10)]
    gaps = []
    for cross in (1e-12, 1e-15, 1e-18):
        gap = 0.0
        for e in base:
            real = GainRealization(e[0] * 1e-10, e[1] * cross, e[2] * cross, e[3] * 1e-10)
            out = leader_equilibrium(M, M, P, P, real)
            s1, s2 = optimal_snr(M, P, real.g11), optimal_snr(M, P, real.g22)
            gap = max(gap, abs(out.p1 - s1.power) / max(s1.power, 1e-30),
                      abs(out.p2 - s2.power) / max(s2.power, 1e-30))
        gaps.append(gap)
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] < 1e-6


DISTS = tuple(ExponentialGain(m) for m in (1e-10, 1e-12, 1e-12, 1e-10))
MC = MonteCarloConfig(samples=4000, seed=17)


def test_orthogonal_case_limits():
    # primary always transmits at lam = 0, so nothing is left for the secondary
    o = orthogonal_case_utilities(M, M, P.with_lam(0.0), P, DISTS, MC)
    assert o.free_slot.value == 0.0 and o.secondary.value == 0.0
    # primary never transmits: the secondary gets its single-user utility
    o = orthogonal_case_utilities(M, M, P.with_lam(1e20), P, DISTS, MC)
    solo = expected_utility(M, P, DISTS[3], MC, stream=22)
    assert o.free_slot.value == 1.0 and o.secondary.value == pytest.approx(solo.value, rel=1e-12)


def test_equilibrium_utilities_vanish_for_large_lambda():
    pair = equilibrium_expected_utilities(M, M, P.with_lam(1e16), P.with_lam(1e16), DISTS, MC)
    assert pair.leader.value == 0.0 and pair.follower.value == 0.0


def test_equilibrium_utilities_decouple():
    dists = (DISTS[0], ExponentialGain(1e-18), ExponentialGain(1e-18), DISTS[3])
    pair = equilibrium_expected_utilities(M, M, P, P, dists, MC)
    u1 = expected_utility(M, P, DISTS[0], MC, stream=11)
    u2 = expected_utility(M, P, DISTS[3], MC, stream=22)
    assert abs(pair.leader.value - u1.value) <= 3 * np.hypot(pair.leader.stderr, u1.stderr)
    assert abs(pair.follower.value - u2.value) <= 3 * np.hypot(pair.follower.stderr, u2.stderr)


def test_power_profile_shape():
    g11 = np.geomspace(1e-12, 1e-9, 16)
    g22 = np.array([1e-12, 3e-11, 1e-9])
    prof = leader_power_profile(M, M, P, P, g11, g22, 1e-12, 1e-12)
    assert prof.shape == (16, 3)
    assert np.all(prof[g11 <= 1e-11] == 0.0)
    for j in range(3):
        col = prof[:, j]
        k = int(np.argmax(col))
        assert col[k] > 0
        assert np.all(np.diff(col[k:]) <= 0)  # decays past the peak
    with pytest.raises(ValueError):
        leader_power_profile(M, M, P, P, [0.0], g22, 1e-12, 1e-12)


def test_ambiguous_leader_grid_warns():
    from eegame.stackelberg import _warn_if_ambiguous

    t = np.linspace(0, 1, 301)[None, :]
    two = np.cos(6 * np.pi * t) + 2.0  # equal interior peaks at t = 1/3 and 2/3
    one = 2.0 - (t - 0.3) ** 2
    with pytest.warns(RuntimeWarning, match="near-optimal"):
        _warn_if_ambiguous(two, np.argmax(two, axis=1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        _warn_if_ambiguous(one, np.argmax(one, axis=1))
