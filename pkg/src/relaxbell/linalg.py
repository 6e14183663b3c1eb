"""Small dense complex linear algebra for two-party qubit constructions.

Tensor products are big-endian: the left factor is the most significant
index, so ``kron(ket0, ket1)`` has its amplitude at index 1. Every module
in the package uses the same convention for multi-bit outcome strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_DIM = 2**12
NORM_TOL = 1e-12
EFFECT_TOL = 1e-10
IMAG_TOL = 1e-10


class NormalizationError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class InvalidEffectError(ValueError):
    pass


def _check_dim(d: int) -> None:
    if d > MAX_DIM:
        raise DimensionError(f"dimension {d} exceeds the dense cap {MAX_DIM}")


@dataclass(frozen=True)
class Ket:
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise DimensionError("empty ket")
        _check_dim(amps.size)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_squared - 1.0) <= tol


@dataclass(frozen=True)
class Operator:
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or 0 in m.shape:
            raise DimensionError(f"operator needs a non-empty matrix, got shape {m.shape}")
        _check_dim(m.shape[0])
        _check_dim(m.shape[1])
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def is_effect(self, tol: float = EFFECT_TOL) -> bool:
        """True when the operator is Hermitian with spectrum inside [0, 1]."""
        m = self.entries
        if m.shape[0] != m.shape[1]:
            return False
        if np.max(np.abs(m - m.conj().T)) > tol:
            return False
        eig = np.linalg.eigvalsh((m + m.conj().T) / 2)
        return bool(eig.min() >= -tol and eig.max() <= 1 + tol)


def basis_ket(index: int, dim: int = 2) -> Ket:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return Ket(v)


def identity(dim: int) -> Operator:
    return Operator(np.eye(dim, dtype=complex))


def kron(u: Ket | Operator, v: Ket | Operator) -> Ket | Operator:
    if isinstance(u, Ket) and isinstance(v, Ket):
        return Ket(np.kron(u.amplitudes, v.amplitudes))
    if isinstance(u, Operator) and isinstance(v, Operator):
        return Operator(np.kron(u.entries, v.entries))
    raise TypeError(f"kron needs two kets or two operators, got {type(u).__name__} and {type(v).__name__}")


def kron_all(factors: Sequence[Ket | Operator]) -> Ket | Operator:
    if not factors:
        raise ValueError("kron_all needs at least one factor")
    out = factors[0]
    for f in factors[1:]:
        out = kron(out, f)
    return out


def projector(v: Ket) -> Operator:
    if not v.is_normalized():
        raise NormalizationError(f"projector needs a normalized ket, squared norm is {v.norm_squared!r}")
    a = v.amplitudes
    return Operator(np.outer(a, a.conj()))


def validate_measurement(effects: Sequence[Operator], tol: float = EFFECT_TOL) -> None:
    """Raise unless ``effects`` are valid effects summing to the identity."""
    if not effects:
        raise InvalidEffectError("measurement has no effects")
    dim = effects[0].rows
    total = np.zeros((dim, dim), dtype=complex)
    for e in effects:
        if e.rows != dim or e.cols != dim:
            raise DimensionError("effects of one measurement must share a dimension")
        if not e.is_effect(tol):
            raise InvalidEffectError("operator is not an effect (0 <= E <= 1 fails)")
        total += e.entries
    dev = np.max(np.abs(total - np.eye(dim)))
    if dev > tol:
        raise InvalidEffectError(f"effects sum to identity only within {dev:.3e}")


def born_probability(state: Ket, effect_a: Operator, effect_b: Operator) -> float:
    """<psi| A (x) B |psi>, clamped to [0, 1].

    The joint operator is never formed: with psi reshaped to a dA x dB
    matrix the value is sum(conj(psi) * (A psi B^T)).
    """
    da, db = effect_a.rows, effect_b.rows
    if effect_a.cols != da or effect_b.cols != db:
        raise DimensionError("effects must be square")
    if state.dim != da * db:
        raise DimensionError(f"state has dim {state.dim}, effects need {da}*{db}")
    psi = state.amplitudes.reshape(da, db)
    val = np.sum(psi.conj() * (effect_a.entries @ psi @ effect_b.entries.T))
    if abs(val.imag) > IMAG_TOL:
        raise ValueError(f"Born probability has imaginary part {val.imag:.3e}; effects are not Hermitian")
    p = float(val.real)
    if p < -NORM_TOL or p > 1 + NORM_TOL:
        raise ValueError(f"Born probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)
