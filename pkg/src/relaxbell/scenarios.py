"""Bell scenarios, correlation tables and nonlocal games.

Every table is a numpy array indexed ``[x, y, a, b]``. Multi-bit outcomes
are integers whose bits read (a_1 ... a_N) most-significant first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import Ket, Operator, born_probability, validate_measurement

NONSIGNALING_TOL = 1e-9
NORMALIZATION_TOL = 1e-10
_ENTRY_SLACK = 1e-12


@dataclass(frozen=True)
class Scenario:
    inputsA: int
    inputsB: int
    outputsA: int
    outputsB: int

    def __post_init__(self):
        for name in ("inputsA", "inputsB", "outputsA", "outputsB"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.inputsA, self.inputsB, self.outputsA, self.outputsB)

    def to_dict(self) -> dict:
        return {k: int(getattr(self, k)) for k in ("inputsA", "inputsB", "outputsA", "outputsB")}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(int(d["inputsA"]), int(d["inputsB"]), int(d["outputsA"]), int(d["outputsB"]))


def _as_probability_table(table, shape) -> np.ndarray:
    t = np.array(table, dtype=float)
    if t.shape != tuple(shape):
        raise ValueError(f"table shape {t.shape} does not match scenario {tuple(shape)}")
    if not np.all(np.isfinite(t)):
        raise ValueError("table has non-finite entries")
    if t.min() < -_ENTRY_SLACK or t.max() > 1 + _ENTRY_SLACK:
        raise ValueError("table entries must lie in [0, 1]")
    np.clip(t, 0.0, 1.0, out=t)
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class Correlation:
    """Conditional table p(a,b|x,y)."""

    scenario: Scenario
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = _as_probability_table(self.table, self.scenario.shape)
        dev = np.max(np.abs(t.sum(axis=(2, 3)) - 1.0))
        if dev > NORMALIZATION_TOL:
            raise ValueError(f"p(.,.|x,y) is not normalized (deviation {dev:.3e})")
        object.__setattr__(self, "table", t)

    def alice_marginals(self) -> np.ndarray:
        """p(a|x,y), shape (X, Y, A)."""
        return self.table.sum(axis=3)

    def bob_marginals(self) -> np.ndarray:
        """p(b|x,y), shape (X, Y, B)."""
        return self.table.sum(axis=2)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(), "table": self.table.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Correlation":
        return cls(Scenario.from_dict(d["scenario"]), np.array(d["table"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Correlation":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FullDistribution:
    """Joint table p(a,b,x,y), stored in the same [x, y, a, b] order."""

    scenario: Scenario
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = _as_probability_table(self.table, self.scenario.shape)
        dev = abs(t.sum() - 1.0)
        if dev > NORMALIZATION_TOL:
            raise ValueError(f"full distribution does not sum to 1 (deviation {dev:.3e})")
        object.__setattr__(self, "table", t)

    def input_distribution(self) -> np.ndarray:
        return self.table.sum(axis=(2, 3))

    def conditional(self) -> Correlation:
        """Recover p(a,b|x,y). Input pairs with zero mass get a uniform table."""
        pxy = self.input_distribution()
        s = self.scenario
        cond = np.full(s.shape, 1.0 / (s.outputsA * s.outputsB))
        mask = pxy > 0
        cond[mask] = self.table[mask] / pxy[mask][:, None, None]
        return Correlation(s, cond)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario.to_dict(), "table": self.table.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FullDistribution":
        return cls(Scenario.from_dict(d["scenario"]), np.array(d["table"], dtype=float))


@dataclass(frozen=True)
class Game:
    scenario: Scenario
    input_dist: np.ndarray = field(repr=False)
    predicate: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = self.scenario
        pi = check_input_dist(self.input_dist, s)
        v = np.asarray(self.predicate)
        if v.shape != s.shape:
            raise ValueError(f"predicate shape {v.shape} does not match scenario {s.shape}")
        if not np.all((v == 0) | (v == 1)):
            raise ValueError("predicate must be 0/1 valued")
        v = v.astype(float)
        v.setflags(write=False)
        object.__setattr__(self, "input_dist", pi)
        object.__setattr__(self, "predicate", v)


class NonsignalingReport(NamedTuple):
    passed: bool
    max_violation: float


def check_input_dist(pi, scenario: Scenario) -> np.ndarray:
    p = np.array(pi, dtype=float)
    if p.shape != (scenario.inputsA, scenario.inputsB):
        raise ValueError(f"input distribution needs shape {(scenario.inputsA, scenario.inputsB)}")
    if p.min() < 0 or abs(p.sum() - 1.0) > NORMALIZATION_TOL:
        raise ValueError("input distribution must be nonnegative and sum to 1")
    p.setflags(write=False)
    return p


def uniform_inputs(scenario: Scenario) -> np.ndarray:
    return np.full((scenario.inputsA, scenario.inputsB), 1.0 / (scenario.inputsA * scenario.inputsB))


def correlation_from_quantum(
    state: Ket,
    meas_a: Sequence[Sequence[Operator]],
    meas_b: Sequence[Sequence[Operator]],
) -> Correlation:
    """Born-rule table for a pure state and one measurement per input."""
    n_out_a = {len(m) for m in meas_a}
    n_out_b = {len(m) for m in meas_b}
    if len(n_out_a) != 1 or len(n_out_b) != 1:
        raise ValueError("all measurements of one party need the same number of outcomes")
    for m in list(meas_a) + list(meas_b):
        validate_measurement(m)
    s = Scenario(len(meas_a), len(meas_b), n_out_a.pop(), n_out_b.pop())
    t = np.empty(s.shape)
    for x, ma in enumerate(meas_a):
        for y, mb in enumerate(meas_b):
            for a, ea in enumerate(ma):
                for b, eb in enumerate(mb):
                    t[x, y, a, b] = born_probability(state, ea, eb)
    return Correlation(s, t)


def is_nonsignaling(c: Correlation, tol: float = NONSIGNALING_TOL) -> NonsignalingReport:
    pa = c.alice_marginals()  # (X, Y, A)
    pb = c.bob_marginals()  # (X, Y, B)
    va = np.max(pa.max(axis=1) - pa.min(axis=1))
    vb = np.max(pb.max(axis=0) - pb.min(axis=0))
    v = float(max(va, vb))
    return NonsignalingReport(v <= tol, v)


def full_distribution(c: Correlation, input_dist) -> FullDistribution:
    pi = check_input_dist(input_dist, c.scenario)
    return FullDistribution(c.scenario, c.table * pi[:, :, None, None])


def game_value(c: Correlation, g: Game) -> float:
    if c.scenario != g.scenario:
        raise ValueError(f"scenario mismatch: {c.scenario} vs {g.scenario}")
    return float(np.einsum("xy,xyab,xyab->", g.input_dist, c.table, g.predicate))


def bits(value: int, width: int) -> tuple[int, ...]:
    """Big-endian bit tuple of ``value``."""
    return tuple((value >> (width - 1 - i)) & 1 for i in range(width))


def some_position_mask(n_bits: int, u: int, v: int) -> np.ndarray:
    """Boolean (2^N, 2^N) mask over (a, b): some position i has (a_i, b_i) = (u, v)."""
    idx = np.arange(2**n_bits)
    a_match = idx if u == 1 else ~idx
    b_match = idx if v == 1 else ~idx
    hits = a_match[:, None] & b_match[None, :] & (2**n_bits - 1)
    return hits != 0


def pr_box() -> Correlation:
    t = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                t[x, y, a, a ^ (x * y)] = 0.5
    return Correlation(Scenario(2, 2, 2, 2), t)


def chsh_game() -> Game:
    v = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                v[x, y, a, a ^ (x * y)] = 1
    return Game(Scenario(2, 2, 2, 2), np.full((2, 2), 0.25), v)


def magic_square_game() -> Game:
    """Rows for Alice (x), columns for Bob (y); outputs are 3-bit strings."""
    v = np.zeros((3, 3, 8, 8))
    for a in range(8):
        ab = bits(a, 3)
        if sum(ab) % 2:
            continue
        for b in range(8):
            bb = bits(b, 3)
            if sum(bb) % 2 != 1:
                continue
            for x in range(3):
                for y in range(3):
                    v[x, y, a, b] = float(ab[y] == bb[x])
    return Game(Scenario(3, 3, 8, 8), np.full((3, 3), 1 / 9), v)


def magic_square_pd_model() -> Correlation:
    """Winning product strategy where only Bob's third column reads Alice's row."""
    alice = 0b110
    bob_third_column = {0: (0b001, 0b010), 1: (0b001, 0b100), 2: (0b100, 0b010)}
    t = np.zeros((3, 3, 8, 8))
    for x in range(3):
        for y in range(3):
            if y < 2:
                t[x, y, alice, 0b111] = 1.0
            else:
                for b in bob_third_column[x]:
                    t[x, y, alice, b] = 0.5
    return Correlation(Scenario(3, 3, 8, 8), t)
