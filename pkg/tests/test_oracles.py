import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from relaxbell.hardy import success_mass
from relaxbell.oracles import (
    LinearFunctional,
    ModelConstraints,
    classical_value,
    complete_od_model,
    i_kappa_functional,
    nonsignaling_constraints,
    nosignaling_value,
    od_search,
    random_nonsignaling_correlation,
    sample_constrained_models,
    satisfies,
    tight_pd_model,
)
from relaxbell.relaxed_hv import (
    correlation_of_model,
    measure_all,
    measure_pd,
    model_zero_mass,
    od_bound,
    pd_bound,
)
from relaxbell.scenarios import (
    Correlation,
    Scenario,
    chsh_game,
    game_value,
    magic_square_game,
    pr_box,
)

S2 = Scenario(2, 2, 2, 2)


def brute_force_classical(f):
    """Every pair of deterministic strategies, no best-response shortcut."""
    s = f.scenario
    X, Y, A, B = s.shape
    alice = np.array(list(itertools.product(range(A), repeat=X)))
    bob = np.array(list(itertools.product(range(B), repeat=Y)))
    best = -np.inf
    for sa in alice:
        # value for every Bob strategy at once
        total = np.zeros(len(bob))
        for x, y in itertools.product(range(X), range(Y)):
            total += f.coefficients[x, y, sa[x], bob[:, y]]
        best = max(best, total.max())
    return best


def scipy_nosignaling(f):
    A_eq, b_eq = nonsignaling_constraints(f.scenario)
    r = linprog(-f.coefficients.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert r.status == 0
    return -r.fun


def test_magic_square_classical_by_full_enumeration():
    f = LinearFunctional.from_game(magic_square_game())
    r = classical_value(f)
    assert abs(r.optimum - 8 / 9) <= 1e-15
    assert brute_force_classical(f) == pytest.approx(8 / 9, abs=1e-15)
    # the strategy found really wins 8 of 9 input pairs
    g = magic_square_game()
    wins = sum(g.predicate[x, y, r.argmax.alice[x], r.argmax.bob[y]] for x in range(3) for y in range(3))
    assert wins == 8


def test_magic_square_nosignaling():
    f = LinearFunctional.from_game(magic_square_game())
    r = nosignaling_value(f)
    assert r.optimum == pytest.approx(1, abs=1e-9)
    assert f.value(r.argmax) == pytest.approx(r.optimum, abs=1e-9)


def test_chsh_values():
    f = LinearFunctional.from_game(chsh_game())
    assert classical_value(f).optimum == pytest.approx(0.75)
    assert nosignaling_value(f).optimum == pytest.approx(1)
    assert game_value(pr_box(), chsh_game()) == pytest.approx(1)


def test_constant_predicate():
    f = LinearFunctional(S2, np.full((2, 2, 2, 2), 0.25))
    assert classical_value(f).optimum == pytest.approx(1)


def test_hardy_functional_has_no_local_violation():
    assert classical_value(i_kappa_functional(1, 1e6)).optimum <= 0
    assert classical_value(i_kappa_functional(2, 1e6)).optimum <= 0


@pytest.mark.parametrize("seed", range(25))
@pytest.mark.parametrize("shape", [(2, 2, 2, 2), (2, 3, 3, 2), (3, 2, 2, 2)])
def test_values_against_independent_solvers(seed, shape):
    rng = np.random.default_rng(seed)
    f = LinearFunctional(Scenario(*shape), rng.normal(size=shape))
    cl = classical_value(f).optimum
    ns = nosignaling_value(f)
    assert cl == pytest.approx(brute_force_classical(f), abs=1e-12)
    assert ns.optimum == pytest.approx(scipy_nosignaling(f), abs=1e-8)
    assert cl <= ns.optimum + 1e-9
    assert f.value(ns.argmax) == pytest.approx(ns.optimum, abs=1e-9)


def test_enumeration_cap():
    with pytest.raises(ValueError):
        classical_value(LinearFunctional(Scenario(10, 10, 8, 8), np.zeros((10, 10, 8, 8))))


# ---------------------------------------------------------------- explicit models


def test_tight_model_two_copies():
    m = tight_pd_model(2, 0.3, 0.2)
    ph = success_mass(correlation_of_model(m).cond, 2)
    assert ph == pytest.approx(0.44, abs=1e-12)
    assert measure_pd(m) == pytest.approx((0.3, 0.2), abs=1e-12)
    assert measure_all(m).delta == 0


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_tight_model_without_relaxation_is_local(n):
    m = tight_pd_model(n, 0, 0)
    assert success_mass(correlation_of_model(m).cond, n) == 0
    assert model_zero_mass(m, n).max() == 0


def test_tight_model_saturates_only_from_two_copies():
    rng = np.random.default_rng(11)
    for ea, eb in rng.random((30, 2)):
        for n in (2, 3):
            ph = success_mass(correlation_of_model(tight_pd_model(n, ea, eb)).cond, n)
            assert abs(ph - pd_bound(ea, eb)) <= 1e-12
        # one copy: Alice's two strings coincide, so only one relaxation contributes
        ph1 = success_mass(correlation_of_model(tight_pd_model(1, ea, eb)).cond, 1)
        assert ph1 <= max(ea, eb) + 1e-12


def test_complete_od_examples():
    m = complete_od_model(pr_box())
    assert np.array_equal(correlation_of_model(m).cond.table, pr_box().table)
    t = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product(range(2), range(2)):
        t[x, y, 0, x] = 1
    with pytest.raises(ValueError):
        complete_od_model(Correlation(S2, t))


@pytest.mark.parametrize("shape", [(2, 2, 2, 2), (2, 3, 2, 3), (3, 3, 2, 2)])
def test_random_nonsignaling_round_trip(shape):
    rng = np.random.default_rng(5)
    s = Scenario(*shape)
    for _ in range(5):
        c = random_nonsignaling_correlation(s, rng)
        back = correlation_of_model(complete_od_model(c)).cond
        assert np.max(np.abs(back.table - c.table)) <= 1e-14


# ---------------------------------------------------------------- outcome-dependence search


def test_od_search_endpoints():
    assert od_search(1, 0).bestPH == pytest.approx(0, abs=1e-12)
    assert od_search(1, 1).bestPH == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("delta", np.round(np.linspace(0, 1, 11), 10))
def test_od_search_single_step_matches_exact_optimum(delta):
    # The optimum over MI+PI models with Hardy zeros and delta-OD is max(0, delta - 1/2).
    r = od_search(1, float(delta))
    assert r.bestPH <= od_bound(float(delta), 1) + 1e-9
    assert r.bestPH == pytest.approx(max(0.0, delta - 0.5), abs=1e-9)


def test_od_search_model_is_certified():
    r = od_search(1, 0.8)
    m = r.bestModel
    meas = measure_all(m)
    assert meas.delta <= 0.8 + 1e-9 and meas.epsA <= 1e-12 and meas.epsB <= 1e-12 and meas.l == 0.25
    cond = correlation_of_model(m).cond
    assert cond.table[1, 1, 0, 0] == pytest.approx(r.bestPH, abs=1e-12)
    assert max(cond.table[0, 0, 0, 0], cond.table[1, 0, 0, 1], cond.table[0, 1, 1, 0]) <= 1e-12


@pytest.mark.parametrize("delta", [0.25, 0.5, 0.75, 0.9, 1.0])
def test_od_search_three_steps_stays_below_bound(delta):
    r = od_search(3, delta, budget=1500, seed=1)
    assert r.status == "lower_bound"
    assert r.bestPH <= od_bound(delta, 3) + 1e-9
    cond = correlation_of_model(r.bestModel).cond
    assert cond.table[3, 3, 0, 0] == pytest.approx(r.bestPH, abs=1e-12)


def test_od_search_rejects_even_steps():
    with pytest.raises(ValueError):
        od_search(2, 0.5)


# ---------------------------------------------------------------- sampler


def test_sampler_respects_outcome_independence():
    for m in sample_constrained_models(Scenario(2, 2, 4, 4), ModelConstraints(delta_max=0), 30, seed=1):
        assert np.max(np.abs(m.bob - m.bob[:, :, :, :1, :])) <= 1e-12


def test_sampler_quarter_md_means_uniform_inputs():
    for m in sample_constrained_models(S2, ModelConstraints(l_min=0.25), 30, seed=2):
        assert np.allclose(m.input_given_lambda, 0.25, atol=1e-12)


def test_sampler_zeros_and_pd_caps():
    cons = ModelConstraints(epsA_max=0.3, epsB_max=0.1, delta_max=0, zero_residual_max=0, uniform_marginal=False)
    models = sample_constrained_models(Scenario(2, 2, 4, 4), cons, 50, seed=3)
    assert len(models) == 50
    for m in models:
        assert satisfies(m, cons, 2)
        ph = success_mass(correlation_of_model(m).cond, 2)
        r = measure_all(m)
        assert ph <= pd_bound(r.epsA, r.epsB) + 1e-9


def test_sampler_is_reproducible():
    cons = ModelConstraints(delta_max=0, zero_residual_max=0)
    a = sample_constrained_models(Scenario(2, 2, 2, 2), cons, 5, seed=9)
    b = sample_constrained_models(Scenario(2, 2, 2, 2), cons, 5, seed=9)
    assert all(np.array_equal(x.bob, y.bob) for x, y in zip(a, b))


def test_sampler_rejects_zeros_on_generic_scenarios():
    with pytest.raises(ValueError):
        sample_constrained_models(Scenario(3, 2, 2, 2), ModelConstraints(zero_residual_max=0), 1, seed=0)
