import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaxbell.hardy import (
    LadderSpec,
    ParallelSpec,
    ladder_correlation,
    ladder_optimal_t,
    p_hardy_parallel,
    parallel_hardy_correlation,
)
from relaxbell.oracles import complete_od_model, tight_pd_model
from relaxbell.relaxed_hv import (
    BoundWarning,
    HVModel,
    correlation_of_model,
    epsilon_threshold,
    evaluate_I_kappa,
    family_masses,
    inequality_bound,
    kappa_lower_bound,
    measure_all,
    measure_md,
    measure_od,
    measure_pd,
    model_zero_mass,
    od_bound,
    pd_bound,
    single_lambda_model,
    strong_md,
    tilde_epsilons,
    total_variation,
)
from relaxbell.scenarios import Correlation, Scenario, full_distribution, magic_square_pd_model, pr_box

S2 = Scenario(2, 2, 2, 2)


def deterministic_model(s, alice_out, bob_out, inputs=None):
    """One hidden state; alice_out[x][y] and bob_out[x][y][a] are outputs."""
    X, Y, A, B = s.shape
    alice = np.zeros((1, X, Y, A))
    bob = np.zeros((1, X, Y, A, B))
    for x, y in itertools.product(range(X), range(Y)):
        alice[0, x, y, alice_out[x][y]] = 1
        for a in range(A):
            bob[0, x, y, a, bob_out[x][y][a]] = 1
    pi = np.full((1, X, Y), 1 / (X * Y)) if inputs is None else inputs
    return HVModel(s, np.ones(1), pi, alice, bob)


def random_model(rng, s=S2, L=3):
    X, Y, A, B = s.shape

    def norm(t):
        return t / t.sum(axis=-1, keepdims=True)

    inputs = rng.random((L, X * Y))
    return HVModel(
        s,
        rng.dirichlet(np.ones(L)),
        (inputs / inputs.sum(axis=1, keepdims=True)).reshape(L, X, Y),
        norm(rng.random((L, X, Y, A))),
        norm(rng.random((L, X, Y, A, B))),
    )


# ---------------------------------------------------------------- model type


def test_model_validation():
    with pytest.raises(ValueError):
        HVModel(S2, [0.5, 0.4], np.full((2, 2, 2), 0.25), np.full((2, 2, 2, 2), 0.5), np.full((2, 2, 2, 2, 2), 0.5))
    with pytest.raises(ValueError):
        HVModel(S2, [1.0], np.full((1, 2, 2), 0.25), np.full((1, 2, 2, 3), 1 / 3), np.full((1, 2, 2, 2, 2), 0.5))


def test_model_json_round_trip():
    m = random_model(np.random.default_rng(0))
    back = HVModel.from_json(m.to_json())
    assert np.array_equal(back.bob, m.bob) and np.array_equal(back.weights, m.weights)
    assert set(m.to_dict()["lambdas"][0]) == {"weight", "inputGivenLambda", "aliceResponse", "bobResponse"}


# ---------------------------------------------------------------- measures


def test_md_examples():
    m = deterministic_model(S2, [[0, 0], [0, 0]], [[[0, 0]] * 2] * 2)
    assert measure_md(m) == 0.25
    skewed = np.array([[[0.0, 0.5], [0.25, 0.25]]])
    assert measure_md(deterministic_model(S2, [[0, 0], [0, 0]], [[[0, 0]] * 2] * 2, skewed)) == 0
    pi = np.array([[[0.1, 0.2], [0.3, 0.4]]])
    assert measure_md(deterministic_model(S2, [[0, 0], [0, 0]], [[[0, 0]] * 2] * 2, pi)) == pytest.approx(0.1)


def test_pd_examples():
    local = deterministic_model(S2, [[0, 0], [1, 1]], [[[0, 0], [1, 1]], [[0, 0], [1, 1]]])
    assert measure_pd(local) == (0.0, 0.0)
    pd = measure_pd(single_lambda_model(magic_square_pd_model()))
    assert pd[0] == pytest.approx(0, abs=1e-15) and pd[1] == pytest.approx(0.5, abs=1e-15)
    ea, eb = measure_pd(tight_pd_model(2, 0.3, 0.2))
    assert abs(ea - 0.3) <= 1e-12 and abs(eb - 0.2) <= 1e-12


def test_od_examples():
    independent = deterministic_model(S2, [[0, 1], [1, 0]], [[[1, 1]] * 2] * 2)
    assert measure_od(independent) == 0
    copying = deterministic_model(S2, [[0, 1], [1, 0]], [[[0, 1]] * 2] * 2)
    # each input pair has only one Alice outcome, so mix two hidden states to realize both
    other = deterministic_model(S2, [[1, 0], [0, 1]], [[[0, 1]] * 2] * 2)
    both = HVModel(S2, [0.5, 0.5], np.concatenate([copying.input_given_lambda] * 2),
                   np.concatenate([copying.alice, other.alice]), np.concatenate([copying.bob, other.bob]))
    assert measure_od(both) == 0  # per state Alice is deterministic: no outcome pair to compare
    stochastic_alice = HVModel(S2, [1.0], np.full((1, 2, 2), 0.25), np.full((1, 2, 2, 2), 0.5), copying.bob)
    assert measure_od(stochastic_alice) == 1
    assert measure_od(complete_od_model(pr_box())) == 1


def test_correlation_of_model_examples():
    c = ladder_correlation(LadderSpec(2, ladder_optimal_t(2).t))
    assert np.max(np.abs(correlation_of_model(single_lambda_model(c)).cond.table - c.table)) <= 1e-15
    m1 = deterministic_model(S2, [[0, 0], [0, 0]], [[[0, 0]] * 2] * 2)
    m2 = deterministic_model(S2, [[1, 1], [1, 1]], [[[1, 1]] * 2] * 2)
    mix = HVModel(S2, [0.5, 0.5], np.concatenate([m1.input_given_lambda, m2.input_given_lambda]),
                  np.concatenate([m1.alice, m2.alice]), np.concatenate([m1.bob, m2.bob]))
    mid = (correlation_of_model(m1).cond.table + correlation_of_model(m2).cond.table) / 2
    assert np.allclose(correlation_of_model(mix).cond.table, mid, atol=1e-15)


def test_tight_model_correlation_saturates():
    m = tight_pd_model(3, 0.3, 0.2)
    cond = correlation_of_model(m).cond
    success, zeros = family_masses(cond, 3)
    assert zeros == (0.0, 0.0, 0.0)
    assert success == pytest.approx(pd_bound(0.3, 0.2), abs=1e-12)


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.integers(1, 255))
def test_total_variation_bounds_every_event_gap(seed, event):
    rng = np.random.default_rng(seed)
    p, q = rng.dirichlet(np.ones(8)), rng.dirichlet(np.ones(8))
    mask = np.array([(event >> k) & 1 for k in range(8)], dtype=bool)
    tv = total_variation(p, q)
    assert abs(p[mask].sum() - q[mask].sum()) <= tv + 1e-15
    best = p > q
    assert abs(p[best].sum() - q[best].sum()) == pytest.approx(tv, abs=1e-15)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_measures_lie_in_unit_interval(seed):
    r = measure_all(random_model(np.random.default_rng(seed)))
    assert 0 <= r.l <= 0.25 and all(0 <= v <= 1 for v in (r.epsA, r.epsB, r.delta))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_random_model_correlation_is_normalized(seed):
    cond = correlation_of_model(random_model(np.random.default_rng(seed))).cond
    assert np.allclose(cond.table.sum(axis=(2, 3)), 1, atol=1e-12)


def test_complete_od_reproduces_quantum_correlation():
    c = ladder_correlation(LadderSpec(3, ladder_optimal_t(3).t))
    m = complete_od_model(c)
    assert np.max(np.abs(correlation_of_model(m).cond.table - c.table)) <= 1e-14
    ea, eb = measure_pd(m)
    assert ea <= 1e-14 and eb <= 1e-14


def test_product_correlation_has_no_outcome_dependence():
    pa = np.array([[0.3, 0.7], [0.6, 0.4]])
    pb = np.array([[0.2, 0.8], [0.9, 0.1]])
    t = np.einsum("xa,yb->xyab", pa, pb)
    assert measure_od(complete_od_model(Correlation(S2, t))) == pytest.approx(0, abs=1e-15)


# ---------------------------------------------------------------- closed forms


def test_pd_bound_examples():
    assert pd_bound(0, 0) == 0
    assert all(pd_bound(1, x) == 1 for x in (0, 0.3, 1))
    assert pd_bound(0.0461, 0.0461) == pytest.approx(0.0901, abs=5e-5)
    with pytest.raises(ValueError):
        pd_bound(1.2, 0)


@pytest.mark.parametrize("n,reference", [(1, 0.0461), (7, 0.2816), (10, 0.3765)])
def test_epsilon_threshold_examples(n, reference):
    assert abs(epsilon_threshold(n) - reference) <= 1e-4


def test_epsilon_threshold_meets_parallel_value():
    eps = [epsilon_threshold(n) for n in range(1, 21)]
    assert all(b > a for a, b in zip(eps, eps[1:]))
    for n, e in enumerate(eps, start=1):
        assert pd_bound(e, e) == pytest.approx(p_hardy_parallel(n), abs=1e-12)


def test_kappa_lower_bound_examples():
    assert kappa_lower_bound(2, 0.25, 0, 0) == 16
    assert kappa_lower_bound(1, 0.25, 0.5, 0.5) == 16
    assert kappa_lower_bound(3, 0.25, 0.1, 0) > kappa_lower_bound(2, 0.25, 0.1, 0)
    assert kappa_lower_bound(2, 0.2, 0.1, 0) > kappa_lower_bound(2, 0.25, 0.1, 0)
    for bad in [(1, 0, 0, 0), (1, 0.25, 1, 0)]:
        with pytest.raises(ValueError):
            kappa_lower_bound(*bad)


def test_tilde_epsilons_examples():
    te = tilde_epsilons(0, 0, 1, 0.25, 32)
    assert te.epsA == pytest.approx(0.5, abs=1e-15) and te.guaranteed
    far = tilde_epsilons(0.1, 0.2, 3, 0.25, 1e30)
    assert far.epsA == pytest.approx(0.1, abs=1e-12) and far.epsB == pytest.approx(0.2, abs=1e-12)
    sup = tilde_epsilons(0, 0, 1, 0.25, 32, form="supplementary")
    assert sup.epsA == pytest.approx(math.sqrt(1 / 8))
    with pytest.warns(BoundWarning):
        assert not tilde_epsilons(0, 0, 1, 0.25, 2).guaranteed
    with pytest.raises(ValueError):
        tilde_epsilons(0, 0, 1, 0.25, 32, form="other")


def test_inequality_bound_below_one_above_threshold_for_supplementary_form():
    for n, l, e in itertools.product([1, 2, 5], [0.05, 0.25], [0, 0.2, 0.5]):
        k = kappa_lower_bound(n, l, e, e) * 1.01
        assert inequality_bound(e, e, n, l, k, form="supplementary") < 1


def test_main_form_bound_is_clipped_at_one():
    n, l, e = 2, 0.25, 0.1
    k = kappa_lower_bound(n, l, e, e)
    assert inequality_bound(e, e, n, l, 2 * k) == pytest.approx(1.0, abs=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundWarning)
        assert inequality_bound(e, e, n, l, k / 2) == 1.0


def test_I_kappa_examples():
    for n in (1, 3):
        fac = parallel_hardy_correlation(ParallelSpec(n))
        for kappa in (1, 1e3, 1e9):
            assert evaluate_I_kappa(fac, n, kappa) == pytest.approx(p_hardy_parallel(n), abs=1e-12)
    cond = correlation_of_model(tight_pd_model(2, 0.3, 0.2)).cond
    assert evaluate_I_kappa(cond, 2, 1e6) == pytest.approx(0.44, abs=1e-12)
    full = full_distribution(cond, np.full((2, 2), 0.25))
    assert evaluate_I_kappa(full, 2, 5) == pytest.approx(0.44, abs=1e-12)
    t = np.zeros((2, 2, 2, 2))
    t[0, :, 1, 1] = 1
    t[1, 0, 1, 0] = 1
    t[1, 1, 0, 0] = 1
    assert evaluate_I_kappa(Correlation(S2, t), 1, 1) < 0


def test_od_bound_examples():
    assert all(od_bound(1, m) == 0.5 for m in (1, 3, 5, 41))
    assert od_bound(0, 1) == 0
    assert od_bound(0.5, 3) == 0.125
    with pytest.raises(ValueError):
        od_bound(0.5, 2)


def test_model_zero_mass_examples():
    assert np.array_equal(model_zero_mass(tight_pd_model(2, 0.3, 0.2), 2), np.zeros((1, 3)))
    m = random_model(np.random.default_rng(1), Scenario(2, 2, 4, 4))
    assert np.all(model_zero_mass(m, 2) > 0)
    with pytest.raises(ValueError):
        model_zero_mass(m, 1)


def test_strong_md_examples():
    r = strong_md(0.25, 0, 0, 0.5, 10)
    assert r.qThreshold == pytest.approx(1 - 0.6113 / 4, abs=1e-4)
    assert r.h == pytest.approx(400)
    full_relax = strong_md(0.25, 0.1, 0.1, 1.0, 3)
    assert full_relax.bound == 0 and full_relax.quantumValue > 0
    values = {strong_md(0.25, 0, 0, 0.5, 4, h=h).ItildeValue for h in (0.1, 1, 400, 1e9)}
    assert len(values) == 1
    assert strong_md(0.25, 0, 0, 0.5, 4, zero_masses=(0.01, 0, 0), h=10).ItildeValue < r.quantumValue
