"""Quantum Hardy constructions: N parallel copies and the (M+1)-setting ladder.

Parallel Hardy uses two settings per party and 2^N-valued outcomes. The
zero conditions checked throughout are, at inputs (x, y):

* (0, 1): no position i with (a_i, b_i) = (0, 1)
* (1, 0): no position i with (a_i, b_i) = (1, 0)
* (1, 1): no position i with (a_i, b_i) = (0, 0)

and the success event at (0, 0) is "some position has (0, 0)".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from .linalg import Ket, Operator, identity, kron_all, projector
from .scenarios import Correlation, Scenario, correlation_from_quantum, some_position_mask

HARDY_AMPLITUDE = (math.sqrt(5) - 1) / 2
MAX_DENSE_COPIES = 5
ZERO_TOL = 1e-10

# (inputs, forbidden pair) for each zero family, then the success family.
ZERO_FAMILIES = (((0, 1), (0, 1)), ((1, 0), (1, 0)), ((1, 1), (0, 0)))
SUCCESS_FAMILY = ((0, 0), (0, 0))


class QuantumSetup(NamedTuple):
    state: Ket
    meas_a: list[list[Operator]]
    meas_b: list[list[Operator]]


class ZeroReport(NamedTuple):
    max_residual: float
    per_family: tuple[float, float, float]
    passed: bool


@dataclass(frozen=True)
class ParallelSpec:
    N: int
    a: float = HARDY_AMPLITUDE

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not 0 < self.a < 1 / math.sqrt(2):
            raise ValueError("amplitude must lie in (0, 1/sqrt(2))")


@dataclass(frozen=True)
class LadderSpec:
    M: int
    t: float

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not 0 <= self.t <= 1:
            raise ValueError("t must lie in [0, 1]")


def _two_outcome(effect0: Operator) -> list[Operator]:
    return [effect0, Operator(identity(effect0.rows).entries - effect0.entries)]


def single_copy_hardy(a: float = HARDY_AMPLITUDE) -> QuantumSetup:
    """Two-qubit Hardy state with its two projective measurements per side.

    Setting 0 projects onto (c|0> - a|1>)/sqrt(1 - a^2) with c = sqrt(1 - 2a^2),
    setting 1 onto |0>. With this labelling the success probability sits at
    inputs (0, 0) and the three zeros at (0, 1), (1, 0), (1, 1).
    """
    c = math.sqrt(1 - 2 * a * a)
    state = Ket([0.0, a, a, c])
    tilted = projector(Ket(np.array([c, -a]) / math.sqrt(1 - a * a)))
    computational = projector(Ket([1.0, 0.0]))
    meas = [_two_outcome(tilted), _two_outcome(computational)]
    return QuantumSetup(state, meas, [list(m) for m in meas])


def single_copy_correlation(a: float = HARDY_AMPLITUDE) -> Correlation:
    return correlation_from_quantum(*single_copy_hardy(a))


@dataclass(frozen=True)
class ParallelHardyCorrelation:
    """N independent copies of a 2x2x2x2 table, kept in factorized form."""

    single: Correlation
    N: int
    _t: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.single.scenario != Scenario(2, 2, 2, 2):
            raise ValueError("single-copy table must be a (2,2,2,2) correlation")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        object.__setattr__(self, "_t", self.single.table)

    @property
    def scenario(self) -> Scenario:
        return Scenario(2, 2, 2**self.N, 2**self.N)

    def probability(self, x: int, y: int, a: int, b: int) -> float:
        p = 1.0
        for i in range(self.N):
            shift = self.N - 1 - i
            p *= self._t[x, y, (a >> shift) & 1, (b >> shift) & 1]
        return p

    def family_mass(self, x: int, y: int, u: int, v: int) -> float:
        """Probability at (x, y) that some position shows the pair (u, v)."""
        return 1.0 - (1.0 - self._t[x, y, u, v]) ** self.N

    def dense(self) -> Correlation:
        if self.N > MAX_DENSE_COPIES:
            raise ValueError(f"dense expansion is limited to N <= {MAX_DENSE_COPIES}")
        t = np.empty(self.scenario.shape)
        for x in range(2):
            for y in range(2):
                block = self._t[x, y]
                for _ in range(self.N - 1):
                    block = np.kron(block, self._t[x, y])
                t[x, y] = block
        return Correlation(self.scenario, t)


def parallel_hardy_correlation(spec: ParallelSpec) -> ParallelHardyCorrelation:
    return ParallelHardyCorrelation(single_copy_correlation(spec.a), spec.N)


def parallel_hardy_dense_quantum(spec: ParallelSpec) -> Correlation:
    """Born-rule table of the N-copy state; a cross-check for small N only."""
    if spec.N > MAX_DENSE_COPIES:
        raise ValueError(f"dense construction is limited to N <= {MAX_DENSE_COPIES}")
    n = spec.N
    setup = single_copy_hardy(spec.a)
    # Copies come out interleaved as A1 B1 A2 B2 ...; regroup as A1..AN B1..BN.
    psi = kron_all([setup.state] * n).amplitudes.reshape([2] * (2 * n))
    order = list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2))
    state = Ket(psi.transpose(order).reshape(-1))

    def strings(meas):
        out = []
        for m in meas:
            out.append([kron_all([m[(s >> (n - 1 - i)) & 1] for i in range(n)]) for s in range(2**n)])
        return out

    return correlation_from_quantum(state, strings(setup.meas_a), strings(setup.meas_b))


def p_hardy_single(a: float = HARDY_AMPLITUDE) -> float:
    return float(single_copy_correlation(a).table[0, 0, 0, 0])


def p_hardy_parallel(spec: ParallelSpec | int) -> float:
    """Success probability 1 - (1 - p1)^N of the N-copy construction."""
    if isinstance(spec, int):
        spec = ParallelSpec(spec)
    return 1.0 - (1.0 - p_hardy_single(spec.a)) ** spec.N


def success_mass(c: Correlation | ParallelHardyCorrelation, n_bits: int) -> float:
    (x, y), (u, v) = SUCCESS_FAMILY
    return _family_mass(c, n_bits, x, y, u, v)


def _family_mass(c, n_bits, x, y, u, v) -> float:
    if isinstance(c, ParallelHardyCorrelation):
        return c.family_mass(x, y, u, v)
    return float(c.table[x, y][some_position_mask(n_bits, u, v)].sum())


def verify_hardy_zeros(
    c: Correlation | ParallelHardyCorrelation, N: int, tol: float = ZERO_TOL
) -> ZeroReport:
    s = c.scenario
    if (s.inputsA, s.inputsB) != (2, 2) or s.outputsA != 2**N or s.outputsB != 2**N:
        raise ValueError(f"expected a (2,2,{2**N},{2**N}) table, got {s.shape}")
    fam = tuple(_family_mass(c, N, x, y, u, v) for (x, y), (u, v) in ZERO_FAMILIES)
    worst = max(fam)
    return ZeroReport(worst, fam, worst <= tol)


# ---------------------------------------------------------------- ladder


def ladder_objective(t: float, M: int) -> float:
    return t * t / (1 + t * t) * ((1 - t ** (2 * M)) / (1 + t ** (2 * M + 1))) ** 2


def _ladder_log_slope(t: float, M: int) -> float:
    return (
        2 / t
        - 2 * t / (1 + t * t)
        - 4 * M * t ** (2 * M - 1) / (1 - t ** (2 * M))
        - 2 * (2 * M + 1) * t ** (2 * M) / (1 + t ** (2 * M + 1))
    )


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 500) -> float:
    inv_phi = (math.sqrt(5) - 1) / 2
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2


class LadderOptimum(NamedTuple):
    t: float
    objective: float


def ladder_optimal_t(M: int) -> LadderOptimum:
    """Maximizer of the ladder success probability over t in [0, 1].

    Golden section only resolves t to about sqrt(machine eps) because the
    maximum is flat, so the bracket is then polished on the root of the
    logarithmic derivative.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    lo, hi = 1e-6, 1 - 1e-6
    t = golden_section_max(lambda s: ladder_objective(s, M), lo, hi)
    a, b = max(lo, t - 1e-4), min(hi, t + 1e-4)
    if _ladder_log_slope(a, M) > 0 > _ladder_log_slope(b, M):
        t = brentq(_ladder_log_slope, a, b, args=(M,), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return LadderOptimum(t, ladder_objective(t, M))


def ladder_angles(M: int, t: float) -> np.ndarray:
    k = np.arange(M + 1)
    return np.arctan((-1.0) ** k * t ** (k + 0.5))


def ladder_setup(spec: LadderSpec) -> QuantumSetup:
    t = spec.t
    state = Ket(np.array([t, 0, 0, -1.0]) / math.sqrt(1 + t * t))
    meas = []
    for ang in ladder_angles(spec.M, t):
        c, s = math.cos(ang), math.sin(ang)
        meas.append([projector(Ket([c, s])), projector(Ket([-s, c]))])
    return QuantumSetup(state, meas, [list(m) for m in meas])


def ladder_correlation(spec: LadderSpec) -> Correlation:
    return correlation_from_quantum(*ladder_setup(spec))


def ladder_closed_form(t: float, M: int) -> float:
    """Success probability written in the Schmidt coefficients alpha/beta = t."""
    alpha, beta = t / math.sqrt(1 + t * t), 1 / math.sqrt(1 + t * t)
    q = 2 * M + 1
    return ((alpha * beta**q - beta * alpha**q) / (beta**q + alpha**q)) ** 2


def verify_ladder_zeros(c: Correlation, tol: float = ZERO_TOL) -> ZeroReport:
    """Zeros p(0,0|0,0), p(0,1|k,k-1), p(1,0|k-1,k) for k = 1..M."""
    M = c.scenario.inputsA - 1
    t = c.table
    first = float(t[0, 0, 0, 0])
    down = max(float(t[k, k - 1, 0, 1]) for k in range(1, M + 1))
    up = max(float(t[k - 1, k, 1, 0]) for k in range(1, M + 1))
    worst = max(first, down, up)
    return ZeroReport(worst, (first, down, up), worst <= tol)


def p_hardy_ladder(M: int) -> float:
    opt = ladder_optimal_t(M)
    c = ladder_correlation(LadderSpec(M, opt.t))
    return float(c.table[M, M, 0, 0])
