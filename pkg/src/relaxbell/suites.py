"""Invariant suites shared by the ``verify`` command and the test-suite."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import hardy, oracles, relaxed_hv, scenarios

REFERENCE_TABLE = {
    1: (0.0461, 0.0902),
    2: (0.0901, 0.1722),
    3: (0.1321, 0.2469),
    4: (0.1722, 0.3148),
    5: (0.2104, 0.3766),
    6: (0.2468, 0.4328),
    7: (0.2816, 0.4839),
    8: (0.3147, 0.5304),
    9: (0.3463, 0.5727),
    10: (0.3765, 0.6113),
}


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def _le(name: str, value: float, tol: float) -> Check:
    return Check(name, float(value), tol, bool(value <= tol))


def table1_rows() -> list[dict]:
    rows = []
    for n, (eps_ref, p_reference) in REFERENCE_TABLE.items():
        eps = relaxed_hv.epsilon_threshold(n)
        p = hardy.p_hardy_parallel(n)
        rows.append({"N": n, "epsilon_threshold": eps, "p_hardy_parallel": p,
                     "epsilon_reference": eps_ref, "p_reference": p_reference})
    return rows


def table1_checks(rows: list[dict], tol: float = 5e-5) -> list[Check]:
    """Agreement with the four-decimal reference values.

    A value passes when it is within ``tol`` and also equal after rounding
    half-even to 4 places.
    """
    out = []
    for r in rows:
        for key, ref in (("epsilon_threshold", "epsilon_reference"), ("p_hardy_parallel", "p_reference")):
            gap = abs(r[key] - r[ref])
            same = round(r[key], 4) == r[ref]
            out.append(Check(f"table1.N{r['N']}.{key}", gap, tol, bool(gap <= tol and same)))
    return out


def zeros_suite(tol: float = hardy.ZERO_TOL) -> list[Check]:
    checks = []
    for n in range(1, hardy.MAX_DENSE_COPIES + 1):
        dense = hardy.parallel_hardy_dense_quantum(hardy.ParallelSpec(n))
        checks.append(_le(f"parallel.dense.N{n}", hardy.verify_hardy_zeros(dense, n).max_residual, tol))
    for n in range(1, 21):
        fac = hardy.parallel_hardy_correlation(hardy.ParallelSpec(n))
        checks.append(_le(f"parallel.factorized.N{n}", hardy.verify_hardy_zeros(fac, n).max_residual, tol))
    for m in range(1, 21):
        c = hardy.ladder_correlation(hardy.LadderSpec(m, hardy.ladder_optimal_t(m).t))
        checks.append(_le(f"ladder.M{m}", hardy.verify_ladder_zeros(c).max_residual, tol))
    return checks


def pd_bound_gaps(count: int, seed: int, copies=(1, 2, 3)) -> np.ndarray:
    """p_H minus the parameter-dependence bound over sampled OI models obeying the zeros."""
    gaps = []
    per = math.ceil(count / len(copies))
    for k, n in enumerate(copies):
        s = scenarios.Scenario(2, 2, 2**n, 2**n)
        cons = oracles.ModelConstraints(delta_max=0.0, zero_residual_max=0.0, uniform_marginal=False)
        for m in oracles.sample_constrained_models(s, cons, per, seed + k):
            r = relaxed_hv.measure_all(m)
            ph = hardy.success_mass(relaxed_hv.correlation_of_model(m).cond, n)
            gaps.append(ph - relaxed_hv.pd_bound(r.epsA, r.epsB))
    return np.array(gaps[:count])


def inequality_gaps(count: int, seed: int, copies=(1, 2, 3), form: str = "main") -> np.ndarray:
    """I_kappa minus its bound over sampled OI models with l > 0 and kappa above threshold."""
    rng = np.random.default_rng(seed)
    gaps = []
    per = math.ceil(count / len(copies))
    for n in copies:
        s = scenarios.Scenario(2, 2, 2**n, 2**n)
        done = 0
        while done < per:
            cons = oracles.ModelConstraints(
                l_min=float(rng.uniform(0.01, 0.25)), delta_max=0.0,
                epsA_max=float(rng.uniform(0, 0.95)), epsB_max=float(rng.uniform(0, 0.95)),
            )
            m = oracles.sample_constrained_models(s, cons, 1, int(rng.integers(2**31)))[0]
            r = relaxed_hv.measure_all(m)
            if r.l <= 0 or max(r.epsA, r.epsB) >= 1:
                continue
            k_min = relaxed_hv.kappa_lower_bound(n, r.l, r.epsA, r.epsB)
            kappa = k_min * (1 + 10 ** rng.uniform(-6, 3))
            value = relaxed_hv.evaluate_I_kappa(relaxed_hv.correlation_of_model(m).cond, n, kappa)
            gaps.append(value - relaxed_hv.inequality_bound(r.epsA, r.epsB, n, r.l, kappa, form))
            done += 1
    return np.array(gaps[:count])


def bounds_suite(count: int = 1000, seed: int = 42, tol: float = 1e-9) -> list[Check]:
    checks = [
        _le("parameter_dependence_bound.max_gap", pd_bound_gaps(count, seed).max(), tol),
        _le("kappa_inequality.max_gap", inequality_gaps(count, seed + 1).max(), tol),
    ]
    for delta in np.round(np.linspace(0, 1, 11), 10):
        r = oracles.od_search(1, float(delta), seed=seed)
        checks.append(_le(f"outcome_dependence_bound.M1.delta{delta:g}",
                          r.bestPH - relaxed_hv.od_bound(float(delta), 1), tol))
    return checks


def oracles_suite(seed: int = 42, tol: float = 1e-9) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    game = oracles.LinearFunctional.from_game(scenarios.magic_square_game())
    checks.append(_le("magic_square.classical", abs(oracles.classical_value(game).optimum - 8 / 9), tol))
    ns = oracles.nosignaling_value(game)
    checks.append(_le("magic_square.nosignaling", abs(ns.optimum - 1), tol))
    checks.append(_le("magic_square.argmax_resolve", abs(game.value(ns.argmax) - ns.optimum), tol))
    chsh = oracles.LinearFunctional.from_game(scenarios.chsh_game())
    checks.append(_le("chsh.nosignaling", abs(oracles.nosignaling_value(chsh).optimum - 1), tol))
    checks.append(_le("chsh.classical", abs(oracles.classical_value(chsh).optimum - 0.75), tol))

    s = scenarios.Scenario(2, 2, 2, 2)
    for k in range(20):
        f = oracles.LinearFunctional(s, rng.normal(size=s.shape))
        gap = oracles.classical_value(f).optimum - oracles.nosignaling_value(f).optimum
        checks.append(_le(f"classical_le_nosignaling.{k}", gap, tol))

    # The saturating construction needs two or more copies; see the README.
    for n in (2, 3):
        worst = 0.0
        for _ in range(10):
            ea, eb = rng.random(2)
            m = oracles.tight_pd_model(n, ea, eb)
            ph = hardy.success_mass(relaxed_hv.correlation_of_model(m).cond, n)
            worst = max(worst, abs(ph - relaxed_hv.pd_bound(ea, eb)))
        checks.append(_le(f"tight_model.saturation.N{n}", worst, 1e-12))

    for k, sc in enumerate([s, scenarios.Scenario(2, 3, 2, 3), scenarios.Scenario(3, 3, 2, 2)]):
        worst = 0.0
        for _ in range(5):
            c = oracles.random_nonsignaling_correlation(sc, rng)
            back = relaxed_hv.correlation_of_model(oracles.complete_od_model(c)).cond
            worst = max(worst, float(np.abs(back.table - c.table).max()))
        checks.append(_le(f"complete_od.roundtrip.{k}", worst, 1e-14))
    return checks


SUITES = ("zeros", "bounds", "oracles", "all")


def run_suite(name: str, seed: int = 42, tol: float | None = None, count: int = 1000) -> list[Check]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    out = []
    if name in ("zeros", "all"):
        out += zeros_suite(hardy.ZERO_TOL if tol is None else tol)
    if name in ("bounds", "all"):
        out += bounds_suite(count, seed, 1e-9 if tol is None else tol)
    if name in ("oracles", "all"):
        out += oracles_suite(seed, 1e-9 if tol is None else tol)
    return out
