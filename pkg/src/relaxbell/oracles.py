"""Independent verifiers: local enumeration, the nonsignaling LP, explicit
extremal models, the outcome-dependence search and a constrained model
sampler for property tests.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .hardy import SUCCESS_FAMILY, ZERO_FAMILIES
from .lp import OPTIMAL, solve_lp
from .relaxed_hv import (
    HVModel,
    measure_all,
    model_zero_mass,
    od_bound,
    single_lambda_model,
)
from .scenarios import Correlation, Game, Scenario, is_nonsignaling, some_position_mask

ENUMERATION_CAP = 10**8


@dataclass(frozen=True)
class LinearFunctional:
    """f(p) = sum over x,y,a,b of coefficients[x,y,a,b] * p(a,b|x,y)."""

    scenario: Scenario
    coefficients: np.ndarray = field(repr=False)
    input_dist: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != self.scenario.shape:
            raise ValueError(f"coefficients need shape {self.scenario.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def value(self, c: Correlation) -> float:
        if c.scenario != self.scenario:
            raise ValueError("scenario mismatch")
        return float(np.sum(self.coefficients * c.table))

    @classmethod
    def from_game(cls, g: Game) -> "LinearFunctional":
        return cls(g.scenario, g.input_dist[:, :, None, None] * g.predicate, g.input_dist)


def i_kappa_functional(N: int, kappa: float) -> LinearFunctional:
    """The kappa-penalized Hardy functional as a linear objective on p(a,b|x,y)."""
    n = 2**N
    coef = np.zeros((2, 2, n, n))
    (x, y), (u, v) = SUCCESS_FAMILY
    coef[x, y] += some_position_mask(N, u, v)
    for (x, y), (u, v) in ZERO_FAMILIES:
        coef[x, y] -= kappa * some_position_mask(N, u, v)
    return LinearFunctional(Scenario(2, 2, n, n), coef)


@dataclass(frozen=True)
class LPResult:
    optimum: float | None
    argmax: Any
    status: str
    seed: int | None = None
    budgetUsed: int | None = None

    def to_dict(self) -> dict:
        return {"optimum": self.optimum, "status": self.status, "seed": self.seed, "budgetUsed": self.budgetUsed}


class LocalStrategy(NamedTuple):
    alice: tuple[int, ...]  # output for each x
    bob: tuple[int, ...]  # output for each y


def classical_value(f: LinearFunctional) -> LPResult:
    """Maximum of f over deterministic local strategies.

    Alice's strategies are enumerated; Bob's best reply separates over y.
    The size cap counts both parties' strategy spaces as the brute force would.
    """
    s = f.scenario
    total = s.outputsA**s.inputsA * s.outputsB**s.inputsB
    if total > ENUMERATION_CAP:
        raise ValueError(f"{total} deterministic strategies exceed the enumeration cap {ENUMERATION_CAP}")
    coef = f.coefficients
    if s.outputsA**s.inputsA > s.outputsB**s.inputsB:
        swapped = LinearFunctional(Scenario(s.inputsB, s.inputsA, s.outputsB, s.outputsA), coef.transpose(1, 0, 3, 2))
        r = classical_value(swapped)
        st = r.argmax
        return LPResult(r.optimum, LocalStrategy(st.bob, st.alice), r.status, budgetUsed=r.budgetUsed)

    strategies = np.array(list(itertools.product(range(s.outputsA), repeat=s.inputsA)), dtype=int)
    xs = np.arange(s.inputsA)
    # picked[k, x, y, b] = coef[x, y, strategies[k, x], b]
    picked = coef[xs[None, :], :, strategies, :]
    per_b = picked.sum(axis=1)  # (K, Y, B)
    values = per_b.max(axis=2).sum(axis=1)
    k = int(np.argmax(values))
    bob = tuple(int(b) for b in per_b[k].argmax(axis=1))
    return LPResult(float(values[k]), LocalStrategy(tuple(int(a) for a in strategies[k]), bob), OPTIMAL,
                    budgetUsed=len(strategies))


def nonsignaling_constraints(s: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Equality system (normalization and no-signaling) on p flattened as [x,y,a,b]."""
    X, Y, A, B = s.shape
    idx = np.arange(X * Y * A * B).reshape(X, Y, A, B)
    n = idx.size
    rows = []
    for x in range(X):
        for y in range(Y):
            r = np.zeros(n)
            r[idx[x, y].ravel()] = 1
            rows.append(r)
    for x in range(X):
        for a in range(A):
            for y in range(1, Y):
                r = np.zeros(n)
                r[idx[x, y, a, :]] += 1
                r[idx[x, 0, a, :]] -= 1
                rows.append(r)
    for y in range(Y):
        for b in range(B):
            for x in range(1, X):
                r = np.zeros(n)
                r[idx[x, y, :, b]] += 1
                r[idx[0, y, :, b]] -= 1
                rows.append(r)
    A_eq = np.array(rows)
    b_eq = np.zeros(len(rows))
    b_eq[: X * Y] = 1
    return A_eq, b_eq


def nosignaling_value(f: LinearFunctional) -> LPResult:
    s = f.scenario
    A_eq, b_eq = nonsignaling_constraints(s)
    sol = solve_lp(f.coefficients.ravel(), A_eq=A_eq, b_eq=b_eq, maximize=True)
    if sol.status != OPTIMAL:
        raise RuntimeError(f"nonsignaling LP returned {sol.status}; the constraint system is malformed")
    table = sol.x.reshape(s.shape)
    table /= table.sum(axis=(2, 3), keepdims=True)
    return LPResult(sol.fun, Correlation(s, table), sol.status, budgetUsed=sol.iterations)


def random_nonsignaling_correlation(s: Scenario, rng: np.random.Generator, n_vertices: int = 3) -> Correlation:
    """Random point of the nonsignaling polytope: a mix of LP vertices for random objectives."""
    A_eq, b_eq = nonsignaling_constraints(s)
    weights = rng.dirichlet(np.ones(n_vertices))
    table = np.zeros(s.shape)
    for w in weights:
        sol = solve_lp(rng.normal(size=A_eq.shape[1]), A_eq=A_eq, b_eq=b_eq, maximize=True)
        table += w * sol.x.reshape(s.shape)
    table /= table.sum(axis=(2, 3), keepdims=True)
    return Correlation(s, table)


# ---------------------------------------------------------- explicit models


def tight_pd_model(N: int, epsA: float, epsB: float) -> HVModel:
    """Single-state product model meeting the parameter-dependence bound.

    Each party mixes two strings at every input pair; Alice's mixing
    weight is epsA and Bob's is epsB.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    for name, v in (("epsA", epsA), ("epsB", epsB)):
        if not 0 <= v <= 1:
            raise ValueError(f"{name} must lie in [0, 1]")
    n = 2**N
    zeros, ones, last_one, last_zero = 0, n - 1, 1, n - 2

    def two_point(eps, first, second):
        d = np.zeros(n)
        d[first] += eps
        d[second] += 1 - eps
        return d

    alice = np.empty((2, 2, n))
    alice[0, 0] = two_point(epsA, zeros, last_one)
    alice[0, 1] = two_point(epsA, ones, last_one)
    alice[1, 0] = two_point(epsA, zeros, last_zero)
    alice[1, 1] = two_point(epsA, ones, last_zero)
    bob_m = np.empty((2, 2, n))
    bob_m[0, 0] = two_point(epsB, zeros, last_zero)
    bob_m[0, 1] = two_point(epsB, zeros, last_one)
    bob_m[1, 0] = two_point(epsB, ones, last_zero)
    bob_m[1, 1] = two_point(epsB, ones, last_one)
    bob = np.broadcast_to(bob_m[:, :, None, :], (2, 2, n, n))
    s = Scenario(2, 2, n, n)
    return HVModel(s, np.ones(1), np.full((1, 2, 2), 0.25), alice[None], bob[None])


def complete_od_model(c: Correlation, tol: float = 1e-9) -> HVModel:
    """One hidden state reproducing a nonsignaling correlation exactly."""
    rep = is_nonsignaling(c, tol)
    if not rep.passed:
        raise ValueError(f"correlation signals (violation {rep.max_violation:.3e}); no MI+PI model exists")
    return single_lambda_model(c)


# ------------------------------------------------ outcome-dependence search


class ODSearchResult(NamedTuple):
    bestPH: float
    bestModel: HVModel
    alice_marginals: tuple[float, ...]
    status: str  # "converged" or "approximate"
    seed: int
    budgetUsed: int

    def to_dict(self) -> dict:
        return {
            "optimum": self.bestPH,
            "status": self.status,
            "seed": self.seed,
            "budgetUsed": self.budgetUsed,
            "aliceMarginals": list(self.alice_marginals),
        }


class _LadderBobLP:
    """Best ladder success probability for fixed Alice marginals s_x = p(a=0|x).

    Variables are u[x,y] = p(b=0|x,y,a=0) and v[x,y] = p(b=0|x,y,a=1).
    """

    FEAS_TOL = 1e-12

    def __init__(self, M: int, delta: float):
        self.M, self.delta = M, delta
        k = M + 1
        self.k = k
        self.nv = 2 * k * k
        I = np.eye(k * k)
        self.A_ub = np.vstack([np.eye(self.nv), np.hstack([I, -I]), np.hstack([-I, I])])
        self.b_ub = np.concatenate([np.ones(self.nv), np.full(2 * k * k, delta)])

    def u(self, x, y):
        return x * self.k + y

    def v(self, x, y):
        return self.k * self.k + x * self.k + y

    def solve(self, s: np.ndarray, penalty: float | None = None):
        """Exact LP optimum, or -inf when infeasible.

        With ``penalty`` the equalities become elastic and the return value is
        objective minus penalty times total violation; the flag says whether
        the point is strictly feasible.
        """
        M, k = self.M, self.k
        rows, rhs = [], []

        def add(coefs, value):
            r = np.zeros(self.nv)
            for j, c in coefs:
                r[j] += c
            rows.append(r)
            rhs.append(value)

        for y in range(k):
            for x in range(1, k):
                add([(self.u(x, y), s[x]), (self.v(x, y), 1 - s[x]),
                     (self.u(0, y), -s[0]), (self.v(0, y), -(1 - s[0]))], 0.0)
        add([(self.u(0, 0), s[0])], 0.0)
        for j in range(1, M + 1):
            add([(self.u(j, j - 1), s[j])], s[j])
            add([(self.v(j - 1, j), 1 - s[j - 1])], 0.0)
        c = np.zeros(self.nv)
        c[self.u(M, M)] = s[M]
        A_eq, b_eq = np.array(rows), np.array(rhs)
        if penalty is not None:
            n_eq = len(rhs)
            A_el = np.hstack([A_eq, np.eye(n_eq), -np.eye(n_eq)])
            A_ub_el = np.hstack([self.A_ub, np.zeros((self.A_ub.shape[0], 2 * n_eq))])
            c_el = np.concatenate([c, np.full(2 * n_eq, -penalty)])
            sol = solve_lp(c_el, A_ub_el, self.b_ub, A_el, b_eq, maximize=True)
            w = sol.x[: self.nv]
            feasible = (np.abs(A_eq @ w - b_eq).max() <= self.FEAS_TOL
                        and (self.A_ub @ w - self.b_ub).max() <= self.FEAS_TOL)
            return sol.fun, w, feasible
        sol = solve_lp(c, self.A_ub, self.b_ub, A_eq, b_eq, maximize=True)
        if sol.status != OPTIMAL:
            return -math.inf, None
        # The search must not climb into the solver's feasibility slack.
        w = sol.x
        if (np.abs(A_eq @ w - b_eq).max() > self.FEAS_TOL
                or (self.A_ub @ w - self.b_ub).max() > self.FEAS_TOL):
            return -math.inf, None
        return sol.fun, w

    def model(self, s: np.ndarray, w: np.ndarray) -> HVModel:
        k = self.k
        u = np.clip(w[: k * k].reshape(k, k), 0, 1)
        v = np.clip(w[k * k:].reshape(k, k), 0, 1)
        alice = np.empty((k, k, 2))
        alice[:, :, 0] = s[:, None]
        alice[:, :, 1] = 1 - s[:, None]
        bob = np.empty((k, k, 2, 2))
        bob[:, :, 0, 0], bob[:, :, 0, 1] = u, 1 - u
        bob[:, :, 1, 0], bob[:, :, 1, 1] = v, 1 - v
        return HVModel(Scenario(k, k, 2, 2), np.ones(1), np.full((1, k, k), 1 / (k * k)), alice[None], bob[None])


def _pattern_search(f, x0, fx0, directions, step, min_step, budget):
    x, fx, used = np.array(x0, dtype=float), fx0, 0
    while step > min_step and used < budget:
        improved = False
        for d in directions:
            cand = np.clip(x + step * d, 0.0, 1.0)
            if np.array_equal(cand, x):
                continue
            fc = f(cand)
            used += 1
            if fc > fx + 1e-15:
                x, fx, improved = cand, fc, True
                break
        if not improved:
            step /= 2
    return x, fx, used, step <= min_step


def _search_two_marginals(lp: _LadderBobLP, budget: int):
    """Grid over (s0, s1) followed by pattern search from the best grid points."""
    f = lambda s: lp.solve(s)[0]  # noqa: E731
    grid = np.linspace(0.0, 1.0, 21)
    scored = [(f(np.array(p)), np.array(p)) for p in itertools.product(grid, grid)]
    used = len(scored)
    scored.sort(key=lambda t: -t[0])
    directions = [np.array(d, dtype=float) for d in
                  [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)]]
    best_val, best_s = scored[0]
    converged = True
    for val, s0 in scored[:5]:
        if val == -math.inf:
            continue
        if used >= budget:
            converged = False
            break
        s, fs, n_used, ok = _pattern_search(f, s0, val, directions, 0.05, 1e-13, budget - used)
        used += n_used
        converged &= ok
        if fs > best_val:
            best_val, best_s = fs, s
    return best_s, used, "converged" if converged else "approximate"


_ELASTIC_PENALTY = 10.0


def _search_many_marginals(lp: _LadderBobLP, budget: int, rng: np.random.Generator):
    """Seeded random walk on the elastic LP value, restarting when the step collapses.

    Infeasible marginals score objective minus a violation penalty, which
    pulls the walk toward the thin feasible region; only strictly feasible
    points are kept as candidates.
    """
    dim = lp.M + 1
    used = 0
    best_val, best_s = -math.inf, np.concatenate([[1.0], np.zeros(dim - 1)])
    for c in np.linspace(0.0, 1.0, 11):  # constant marginals, plus the trivial point above
        v = lp.solve(np.full(dim, c))[0]
        used += 1
        if v > best_val:
            best_val, best_s = v, np.full(dim, c)
    v = lp.solve(best_s)[0]
    used += 1

    def restart():
        s = rng.random(dim)
        return s, lp.solve(s, _ELASTIC_PENALTY)[0]

    s, score = best_s.copy(), lp.solve(best_s, _ELASTIC_PENALTY)[0]
    used += 1
    step = 0.2
    while used < budget:
        cand = np.clip(s + step * rng.normal(size=dim), 0.0, 1.0)
        sc = lp.solve(cand, _ELASTIC_PENALTY)[0]
        used += 1
        if sc > score:
            s, score = cand, sc
            exact = lp.solve(cand)[0]
            used += 1
            if exact > best_val:
                best_val, best_s = exact, cand
        else:
            step *= 0.97
        if step < 1e-4:
            (s, score), step = restart(), 0.2
            used += 1
    return best_s, used, "lower_bound"


def od_search(M: int, delta: float, budget: int = 4000, seed: int = 0) -> ODSearchResult:
    """Largest p(0,0|M,M) for a measurement- and parameter-independent model
    obeying the ladder zeros with outcome dependence at most ``delta``.

    One hidden state suffices: the objective is linear and the constraints
    hold state by state. For fixed Alice marginals the problem is an exact
    LP over Bob's conditionals. The marginals are searched by grid plus
    pattern search when M = 1 and by a seeded random walk otherwise, so the
    value is a certified lower bound (its model is returned) rather than a
    proven maximum. ``budget`` counts LP solves.
    """
    if M < 1 or M % 2 == 0:
        raise ValueError(f"od_search needs odd M, got {M}")
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    lp = _LadderBobLP(M, delta)
    if M == 1:
        best_s, used, status = _search_two_marginals(lp, budget)
    else:
        best_s, used, status = _search_many_marginals(lp, budget, np.random.default_rng(seed))
    value, w = lp.solve(best_s)
    used += 1
    if w is None:  # only the trivial start survived; it is always feasible
        best_s = np.concatenate([[1.0], np.zeros(M)])
        value, w = lp.solve(best_s)
    cap = od_bound(delta, M)
    if value > cap + 1e-9:
        raise AssertionError(f"search found p_H={value} above the outcome-dependence bound {cap}")
    if used > budget and status == "converged":
        status = "approximate"
    return ODSearchResult(float(value), lp.model(best_s, w), tuple(float(v) for v in best_s), status, seed, used)


# ------------------------------------------------------- constrained sampler


@dataclass(frozen=True)
class ModelConstraints:
    l_min: float = 0.0
    epsA_max: float = 1.0
    epsB_max: float = 1.0
    delta_max: float = 1.0
    zero_residual_max: float | None = None  # None: zeros not required
    uniform_marginal: bool = True  # predicted p(x,y) uniform


def _bits_of(n_bits):
    idx = np.arange(2**n_bits)
    return (idx[:, None] >> (n_bits - 1 - np.arange(n_bits))[None, :]) & 1


def _hardy_supports(rng: np.random.Generator, N: int, compatible: bool):
    """Allowed outcome strings per input pair for each party, respecting the zeros.

    Three position sets decide the supports: at (0,1) Alice shows 1 on
    ``s01`` and Bob shows 0 elsewhere; at (1,0) Alice shows 0 on ``s10``
    and Bob 1 elsewhere; at (1,1) Alice shows 1 on ``s11`` and Bob 1
    elsewhere. No forbidden pair can then appear at any position.
    """
    b = _bits_of(N)

    def subset():
        return rng.random(N) < rng.random()

    s01, s10 = subset(), subset()
    s11 = subset()
    if compatible:
        s11 &= ~s10  # Alice's two supports at x=1 meet
        s01 |= ~s11  # Bob's two supports at y=1 meet
    alice = {
        (0, 0): np.ones(len(b), bool),
        (0, 1): np.all(b[:, s01] == 1, axis=1),
        (1, 0): np.all(b[:, s10] == 0, axis=1),
        (1, 1): np.all(b[:, s11] == 1, axis=1),
    }
    bob = {
        (0, 0): np.ones(len(b), bool),
        (0, 1): np.all(b[:, ~s01] == 0, axis=1),
        (1, 0): np.all(b[:, ~s10] == 1, axis=1),
        (1, 1): np.all(b[:, ~s11] == 1, axis=1),
    }
    return alice, bob


def _random_dist(rng, allowed: np.ndarray) -> np.ndarray:
    support = np.flatnonzero(allowed)
    d = np.zeros(allowed.size)
    if rng.random() < 0.4:
        d[rng.choice(support)] = 1.0
    else:
        k = rng.integers(1, support.size + 1)
        chosen = rng.choice(support, size=k, replace=False)
        d[chosen] = rng.dirichlet(np.full(k, 0.5))
    return d


def _mix_weight(rng, cap: float) -> float:
    """Mostly near the cap, so bounds get probed close to saturation."""
    if cap <= 0:
        return 0.0
    return cap * (1.0 if rng.random() < 0.3 else rng.random() ** 0.3)


def _party_tables(rng, allowed: dict, eps_cap: float, alice_side: bool) -> np.ndarray:
    """Per input pair distributions where the distant input moves at most eps_cap of the mass."""
    n = allowed[(0, 0)].size
    out = np.empty((2, 2, n))
    for local in range(2):
        pairs = [(local, o) for o in range(2)] if alice_side else [(o, local) for o in range(2)]
        common = allowed[pairs[0]] & allowed[pairs[1]]
        if common.any():
            base = _random_dist(rng, common)
            moved = rng.integers(2)
            e = _mix_weight(rng, eps_cap)
            for j, p in enumerate(pairs):
                out[p] = base if j != moved else (1 - e) * base + e * _random_dist(rng, allowed[p])
        else:
            for p in pairs:
                out[p] = _random_dist(rng, allowed[p])
    return out


def _input_tables(rng, weights: np.ndarray, l_min: float, uniform_marginal: bool, shape) -> np.ndarray:
    L = weights.size
    cells = shape[0] * shape[1]
    concentration = 0.2 if rng.random() < 0.5 else 1.0  # spiky draws push inputs toward l_min
    raw = rng.dirichlet(np.full(cells, concentration), size=L) - 1.0 / cells
    if uniform_marginal:
        raw -= weights @ raw
    lowest = raw.min()
    room = 1.0 / cells - l_min
    shrink = 1.0 if rng.random() < 0.3 else rng.random() ** 0.3
    scale = 0.0 if lowest >= 0 or room <= 0 else min(1.0, room / -lowest) * shrink
    return (1.0 / cells + scale * raw).reshape(L, *shape)


def _sample_hardy_lambda(rng, N, cons: ModelConstraints):
    compatible = rng.random() < 0.9 or max(cons.epsA_max, cons.epsB_max) >= 1
    allowed_a, allowed_b = _hardy_supports(rng, N, compatible)
    if cons.zero_residual_max is None and rng.random() < 0.25:
        # A state that ignores the zeros altogether, e.g. always reporting success.
        everything = np.ones(2**N, bool)
        allowed_a = allowed_b = {p: everything for p in allowed_a}
    alice = _party_tables(rng, allowed_a, cons.epsA_max, True)
    bob_m = _party_tables(rng, allowed_b, cons.epsB_max, False)
    n = 2**N
    if cons.zero_residual_max is None or cons.zero_residual_max > 0:
        cap = 0.3 if cons.zero_residual_max is None else cons.zero_residual_max
        eta = _mix_weight(rng, cap) if rng.random() < 0.7 else 0.0
        alice = (1 - eta) * alice + eta * _random_dist(rng, np.ones(n, bool))
        bob_m = (1 - eta) * bob_m + eta * _random_dist(rng, np.ones(n, bool))
    bob = np.broadcast_to(bob_m[:, :, None, :], (2, 2, n, n)).copy()
    if cons.delta_max > 0:
        d = _mix_weight(rng, cons.delta_max)
        for x, y in itertools.product(range(2), range(2)):
            allowed = allowed_b[(x, y)] if cons.zero_residual_max == 0 else np.ones(n, bool)
            for a in range(n):
                bob[x, y, a] = (1 - d) * bob[x, y, a] + d * _random_dist(rng, allowed)
    return alice, bob


def _sample_generic_lambda(rng, s: Scenario, cons: ModelConstraints):
    X, Y, A, B = s.shape
    alice = np.empty((X, Y, A))
    full = np.ones(A, bool)
    for x in range(X):
        base = _random_dist(rng, full)
        for y in range(Y):
            e = _mix_weight(rng, cons.epsA_max)
            alice[x, y] = (1 - e) * base + e * _random_dist(rng, full)
    bob_m = np.empty((X, Y, B))
    full_b = np.ones(B, bool)
    for y in range(Y):
        base = _random_dist(rng, full_b)
        for x in range(X):
            e = _mix_weight(rng, cons.epsB_max)
            bob_m[x, y] = (1 - e) * base + e * _random_dist(rng, full_b)
    bob = np.broadcast_to(bob_m[:, :, None, :], (X, Y, A, B)).copy()
    if cons.delta_max > 0:
        d = _mix_weight(rng, cons.delta_max)
        for x, y, a in itertools.product(range(X), range(Y), range(A)):
            bob[x, y, a] = (1 - d) * bob[x, y, a] + d * _random_dist(rng, full_b)
    return alice, bob


def satisfies(m: HVModel, cons: ModelConstraints, N: int | None = None, tol: float = 1e-12) -> bool:
    r = measure_all(m)
    ok = (r.l >= cons.l_min - tol and r.epsA <= cons.epsA_max + tol
          and r.epsB <= cons.epsB_max + tol and r.delta <= cons.delta_max + tol)
    if ok and cons.zero_residual_max is not None:
        ok = model_zero_mass(m, N).max() <= cons.zero_residual_max + tol
    return bool(ok)


def sample_constrained_models(
    scenario: Scenario,
    constraints: ModelConstraints,
    count: int,
    seed: int,
    max_lambdas: int = 3,
    max_attempts: int | None = None,
) -> list[HVModel]:
    """Random finite models, each verified against ``constraints`` after sampling.

    Scenarios of shape (2, 2, 2^N, 2^N) get supports built to respect the
    Hardy zeros; any other scenario gets unstructured responses and
    cannot demand zeros.
    """
    rng = np.random.default_rng(seed)
    X, Y, A, B = scenario.shape
    N = int(round(math.log2(A))) if A > 1 else 0
    hardy_shaped = (X, Y) == (2, 2) and A == B and 2**N == A and N >= 1
    if constraints.zero_residual_max is not None and not hardy_shaped:
        raise ValueError("zero constraints need a (2, 2, 2^N, 2^N) scenario")
    max_attempts = 20 * count if max_attempts is None else max_attempts
    out: list[HVModel] = []
    attempts = 0
    while len(out) < count and attempts < max_attempts:
        attempts += 1
        L = int(rng.integers(1, max_lambdas + 1))
        weights = rng.dirichlet(np.ones(L))
        inputs = _input_tables(rng, weights, constraints.l_min, constraints.uniform_marginal, (X, Y))
        parts = [
            _sample_hardy_lambda(rng, N, constraints) if hardy_shaped else _sample_generic_lambda(rng, scenario, constraints)
            for _ in range(L)
        ]
        alice = np.array([p[0] for p in parts])
        bob = np.array([p[1] for p in parts])
        alice /= alice.sum(axis=-1, keepdims=True)
        bob /= bob.sum(axis=-1, keepdims=True)
        m = HVModel(scenario, weights / weights.sum(), inputs, alice, bob)
        if satisfies(m, constraints, N):
            out.append(m)
    if len(out) < count:
        warnings.warn(f"sampling cap reached: {len(out)} of {count} models after {attempts} attempts", RuntimeWarning,
                      stacklevel=2)
    return out
