"""Finite hidden-variable models, their relaxation measures and the bounds.

A model with L hidden states stores, per state lambda:

* ``weights[l]``                   p(lambda)
* ``input_given_lambda[l, x, y]``  p(x,y|lambda)
* ``alice[l, x, y, a]``            p(a|x,y,lambda)
* ``bob[l, x, y, a, b]``           p(b|x,y,a,lambda)

The relaxation measures are the usual relaxations: ``l`` (how far the
inputs stay random given lambda), ``epsA``/``epsB`` (how much a party's
outcome depends on the distant input) and ``delta`` (how much Bob's
outcome depends on Alice's outcome).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .hardy import (
    SUCCESS_FAMILY,
    ZERO_FAMILIES,
    ParallelHardyCorrelation,
    p_hardy_parallel,
)
from .scenarios import (
    Correlation,
    FullDistribution,
    Scenario,
    check_input_dist,
    some_position_mask,
    uniform_inputs,
)

MODEL_TOL = 1e-12


class BoundWarning(UserWarning):
    """A bound was requested outside the parameter range where it is proven."""


@dataclass(frozen=True)
class HVModel:
    scenario: Scenario
    weights: np.ndarray = field(repr=False)
    input_given_lambda: np.ndarray = field(repr=False)
    alice: np.ndarray = field(repr=False)
    bob: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = self.scenario
        w = np.array(self.weights, dtype=float).reshape(-1)
        L = w.size
        arrays = {
            "weights": (w, (L,), ()),
            "input_given_lambda": (np.array(self.input_given_lambda, dtype=float), (L, s.inputsA, s.inputsB), (1, 2)),
            "alice": (np.array(self.alice, dtype=float), (L, s.inputsA, s.inputsB, s.outputsA), (3,)),
            "bob": (np.array(self.bob, dtype=float), (L, s.inputsA, s.inputsB, s.outputsA, s.outputsB), (4,)),
        }
        for name, (arr, shape, axes) in arrays.items():
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            if arr.min(initial=0.0) < -MODEL_TOL:
                raise ValueError(f"{name} has negative entries")
            total = arr.sum(axis=axes) if axes else arr.sum()
            dev = np.max(np.abs(total - 1.0))
            if dev > MODEL_TOL:
                raise ValueError(f"{name} is not normalized (deviation {dev:.3e})")
            arr = np.clip(arr, 0.0, None)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_lambda(self) -> int:
        return self.weights.size

    def joint_given_lambda(self) -> np.ndarray:
        """p(a,b|x,y,lambda), shape (L, X, Y, A, B)."""
        return self.alice[..., None] * self.bob

    def bob_marginal(self) -> np.ndarray:
        """p(b|x,y,lambda), shape (L, X, Y, B)."""
        return np.einsum("lxya,lxyab->lxyb", self.alice, self.bob)

    def input_distribution(self) -> np.ndarray:
        return np.einsum("l,lxy->xy", self.weights, self.input_given_lambda)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "lambdas": [
                {
                    "weight": float(self.weights[k]),
                    "inputGivenLambda": self.input_given_lambda[k].tolist(),
                    "aliceResponse": self.alice[k].tolist(),
                    "bobResponse": self.bob[k].tolist(),
                }
                for k in range(self.n_lambda)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HVModel":
        lam = d["lambdas"]
        return cls(
            Scenario.from_dict(d["scenario"]),
            np.array([e["weight"] for e in lam], dtype=float),
            np.array([e["inputGivenLambda"] for e in lam], dtype=float),
            np.array([e["aliceResponse"] for e in lam], dtype=float),
            np.array([e["bobResponse"] for e in lam], dtype=float),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "HVModel":
        return cls.from_dict(json.loads(text))


class RelaxationMeasures(NamedTuple):
    l: float
    epsA: float
    epsB: float
    delta: float


class ModelCorrelation(NamedTuple):
    cond: Correlation
    full: FullDistribution


class TildeEpsilons(NamedTuple):
    epsA: float
    epsB: float
    guaranteed: bool


def total_variation(p, q) -> float:
    """Half the l1 distance. It also equals the largest gap |p(E) - q(E)| over events E."""
    return 0.5 * float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())


def _pairwise_tv(dists: np.ndarray, axis: int) -> np.ndarray:
    """Max over index pairs along ``axis`` of TV between distributions on the last axis."""
    a = np.expand_dims(dists, axis)
    b = np.expand_dims(dists, axis + 1)
    return 0.5 * np.abs(a - b).sum(axis=-1).max(axis=(axis, axis + 1))


def _active(m: HVModel) -> np.ndarray:
    return m.weights > 0


def measure_md(m: HVModel) -> float:
    return float(m.input_given_lambda[_active(m)].min())


def measure_pd(m: HVModel) -> tuple[float, float]:
    on = _active(m)
    eps_a = _pairwise_tv(m.alice[on], axis=2).max()  # vary y with x fixed
    eps_b = _pairwise_tv(m.bob_marginal()[on], axis=1).max()  # vary x with y fixed
    # a TV of disjoint supports can round to 1 + ulp
    return min(float(eps_a), 1.0), min(float(eps_b), 1.0)


def measure_od(m: HVModel) -> float:
    """Largest TV between Bob's conditionals for two Alice outcomes.

    Only outcomes that actually occur (positive p(lambda) p(x,y|lambda)
    p(a|x,y,lambda)) are compared; a conditional on a null event has no
    observable consequence.
    """
    occurs = (m.weights[:, None, None, None] * m.input_given_lambda[..., None] * m.alice) > 0
    n_a = m.scenario.outputsA
    worst = 0.0
    for a in range(n_a):
        for a2 in range(a + 1, n_a):
            both = occurs[..., a] & occurs[..., a2]
            if both.any():
                tv = 0.5 * np.abs(m.bob[..., a, :] - m.bob[..., a2, :]).sum(axis=-1)
                worst = max(worst, float(tv[both].max()))
    return min(worst, 1.0)


def measure_all(m: HVModel) -> RelaxationMeasures:
    ea, eb = measure_pd(m)
    return RelaxationMeasures(measure_md(m), ea, eb, measure_od(m))


def correlation_of_model(m: HVModel) -> ModelCorrelation:
    full = np.einsum("l,lxy,lxyab->xyab", m.weights, m.input_given_lambda, m.joint_given_lambda())
    pxy = full.sum(axis=(2, 3))
    if np.any(pxy <= 0):
        raise ValueError("model assigns zero probability to an input pair; conditional undefined")
    return ModelCorrelation(Correlation(m.scenario, full / pxy[:, :, None, None]), FullDistribution(m.scenario, full))


def single_lambda_model(c: Correlation, input_dist=None) -> HVModel:
    """Embed a correlation as one hidden state drawing inputs from ``input_dist``.

    Bob's conditional for an outcome of Alice that never occurs is set to
    his marginal, so it introduces no extra outcome dependence.
    """
    s = c.scenario
    pi = uniform_inputs(s) if input_dist is None else check_input_dist(input_dist, s)
    pa = c.alice_marginals()
    pb = c.bob_marginals()
    bob = np.broadcast_to(pb[:, :, None, :], s.shape).copy()
    seen = pa > 0
    bob[seen] = c.table[seen] / pa[seen][:, None]
    return HVModel(s, np.ones(1), pi[None], pa[None], bob[None])


# ------------------------------------------------------------ closed forms


def _check_unit(name: str, v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


def pd_bound(epsA: float, epsB: float) -> float:
    _check_unit("epsA", epsA)
    _check_unit("epsB", epsB)
    return epsA + epsB - epsA * epsB


def epsilon_threshold(N: int) -> float:
    """Symmetric eps at which the parameter-dependence bound meets the N-copy value."""
    return 1.0 - math.sqrt(1.0 - p_hardy_parallel(N))


def kappa_lower_bound(N: int, l: float, epsA: float, epsB: float) -> float:
    eps = max(epsA, epsB)
    if l <= 0 or eps >= 1:
        raise ValueError("kappa threshold undefined for l = 0 or eps = 1 (complete relaxation)")
    _check_unit("epsA", epsA)
    _check_unit("epsB", epsB)
    return N * N / (l * (1 - eps) ** 2)


TILDE_FORMS = {"main": 2.0, "supplementary": 1.0}


def tilde_epsilons(epsA: float, epsB: float, N: int, l: float, kappa: float, form: str = "main") -> TildeEpsilons:
    """Effective eps after trading the zero constraints for a kappa penalty.

    ``form="main"`` uses the correction N*sqrt(2/(l kappa)); the
    ``"supplementary"`` form uses the tighter N*sqrt(1/(l kappa)).
    """
    if form not in TILDE_FORMS:
        raise ValueError(f"form must be one of {sorted(TILDE_FORMS)}")
    k_min = kappa_lower_bound(N, l, epsA, epsB)
    guaranteed = kappa > k_min
    if not guaranteed:
        warnings.warn(f"kappa={kappa} does not exceed kappa_min={k_min}; bound not guaranteed", BoundWarning, stacklevel=2)
    shift = N * math.sqrt(TILDE_FORMS[form] / (l * kappa))
    return TildeEpsilons(epsA + shift, epsB + shift, guaranteed)


def inequality_bound(epsA: float, epsB: float, N: int, l: float, kappa: float, form: str = "main") -> float:
    """Right-hand side of the kappa-penalized inequality; corrected eps are capped at 1."""
    te = tilde_epsilons(epsA, epsB, N, l, kappa, form)
    return pd_bound(min(te.epsA, 1.0), min(te.epsB, 1.0))


def family_masses(data, N: int) -> tuple[float, tuple[float, float, float]]:
    """Success mass at (0,0) and the three zero-family masses of a conditional table."""
    if isinstance(data, FullDistribution):
        data = data.conditional()
    s = data.scenario
    if (s.inputsA, s.inputsB, s.outputsA, s.outputsB) != (2, 2, 2**N, 2**N):
        raise ValueError(f"expected a (2,2,{2**N},{2**N}) scenario, got {s.shape}")
    if isinstance(data, ParallelHardyCorrelation):
        mass = data.family_mass
    else:
        def mass(x, y, u, v):
            return float(data.table[x, y][some_position_mask(N, u, v)].sum())
    (x0, y0), (u0, v0) = SUCCESS_FAMILY
    zeros = tuple(mass(x, y, u, v) for (x, y), (u, v) in ZERO_FAMILIES)
    return mass(x0, y0, u0, v0), zeros


def evaluate_I_kappa(data, N: int, kappa: float) -> float:
    """Success mass at (0,0) minus kappa times the three zero-family masses.

    ``data`` may be a Correlation, a FullDistribution (conditioned first)
    or the factorized parallel construction.
    """
    success, zeros = family_masses(data, N)
    return success - kappa * sum(zeros)


def od_bound(delta: float, M: int) -> float:
    if M < 1 or M % 2 == 0:
        raise ValueError(f"outcome-dependence bound is only established for odd M, got {M}")
    _check_unit("delta", delta)
    return delta ** ((M + 1) / 2) / 2


def model_zero_mass(m: HVModel, N: int) -> np.ndarray:
    """Per-lambda zero-family masses, shape (L, 3)."""
    s = m.scenario
    if (s.inputsA, s.inputsB, s.outputsA, s.outputsB) != (2, 2, 2**N, 2**N):
        raise ValueError(f"expected a (2,2,{2**N},{2**N}) scenario, got {s.shape}")
    joint = m.joint_given_lambda()
    out = np.empty((m.n_lambda, 3))
    for k, ((x, y), (u, v)) in enumerate(ZERO_FAMILIES):
        out[:, k] = joint[:, x, y][:, some_position_mask(N, u, v)].sum(axis=1)
    return out


# -------------------------------------------------- strong measurement dependence


class StrongMDResult(NamedTuple):
    ItildeValue: float
    bound: float
    quantumValue: float
    qThreshold: float
    h: float

    @property
    def certified(self) -> bool:
        return self.ItildeValue > self.bound


def strong_md(
    l: float,
    epsA: float,
    epsB: float,
    q_fraction: float,
    N: int,
    input_dist=None,
    zero_masses=(0.0, 0.0, 0.0),
    hardy_mass: float | None = None,
    h: float | None = None,
) -> StrongMDResult:
    """Penalized functional for runs mixing relaxed and fully input-determining states.

    A fraction ``q_fraction`` of runs has p(x,y|lambda) >= l, the rest may
    fix the inputs outright. ``h`` weights the zero-family masses; it
    defaults to the kappa threshold magnitude when that is finite.
    """
    _check_unit("q_fraction", q_fraction)
    if l < 0:
        raise ValueError("l must be >= 0")
    pi = np.full((2, 2), 0.25) if input_dist is None else check_input_dist(input_dist, Scenario(2, 2, 2, 2))
    pd = pd_bound(epsA, epsB)
    p_h = p_hardy_parallel(N) if hardy_mass is None else hardy_mass
    if h is None:
        h = kappa_lower_bound(N, l, epsA, epsB) if l > 0 and max(epsA, epsB) < 1 else 1.0
    zeros = np.asarray(zero_masses, dtype=float)
    penalty = h * (pi[0, 1] * zeros[0] + pi[1, 0] * zeros[1] + pi[1, 1] * zeros[2])
    value = l * pi[0, 0] * (p_h - pd) - penalty
    bound = (1 - q_fraction) * l * (1 - pd)
    quantum = l / 4 * (p_h - pd)
    q_thr = 1 - 0.25 * (p_h - pd) / (1 - pd) if pd < 1 else math.inf
    return StrongMDResult(float(value), float(bound), float(quantum), float(q_thr), float(h))
