"""Generalised Bell and cat states, and the measurement-condition checkers.

|Phi(r, w)>          = d^-1/2 sum_j xi^{jr} |j, j+w>
|Psi(v, u_1..u_n)>   = d^-1/2 sum_j xi^{jv} |j, j+u_1, ..., j+u_n>

A Bell state is the two-qudit cat state, so ``BellLabel(r, w)`` and
``CatLabel(r, (w,))`` name the same vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Sequence

import numpy as np

from .register import (
    ATOL,
    Basis,
    QuditRegister,
    apply_clock,
    apply_shift,
    cat_coefficients,
    check_dim,
    guard_amplitudes,
    sample_quditwise,
)


@dataclass(frozen=True)
class BellLabel:
    r: int
    w: int

    def validate(self, d: int) -> "BellLabel":
        if not (0 <= self.r < d and 0 <= self.w < d):
            raise ValueError(f"Bell label {self} out of range for d={d}")
        return self

    def as_cat(self) -> "CatLabel":
        return CatLabel(self.r, (self.w,))

    def __iter__(self):
        return iter((self.r, self.w))


@dataclass(frozen=True)
class CatLabel:
    """Phase index ``v`` plus one shift per non-leading qudit."""

    v: int
    u: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(int(x) for x in self.u))
        object.__setattr__(self, "v", int(self.v))
        if len(self.u) < 1:
            raise ValueError("a cat label needs at least one shift entry")

    @classmethod
    def uniform(cls, v: int, u: int, n: int) -> "CatLabel":
        return cls(v, (u,) * n)

    @classmethod
    def from_values(cls, values: Sequence[int]) -> "CatLabel":
        return cls(values[0], tuple(values[1:]))

    @property
    def values(self) -> tuple[int, ...]:
        return (self.v,) + self.u

    @property
    def is_uniform(self) -> bool:
        return len(set(self.u)) == 1

    def validate(self, d: int) -> "CatLabel":
        if any(not 0 <= x < d for x in self.values):
            raise ValueError(f"cat label {self.values} out of range for d={d}")
        return self


@lru_cache(maxsize=64)
def _ghz_template(d: int, k: int) -> np.ndarray:
    guard_amplitudes(d, k)
    amps = np.zeros(d**k, dtype=np.complex128)
    step = sum(d**p for p in range(k))  # index of |1, 1, ..., 1>
    amps[np.arange(d) * step] = 1.0 / np.sqrt(d)
    amps.flags.writeable = False
    return amps


def _ghz(d: int, k: int, ids: tuple) -> QuditRegister:
    return QuditRegister(d, ids, _ghz_template(d, k).copy())


def make_bell(dim: int, label: BellLabel, ids: Sequence[Hashable] = (0, 1)) -> QuditRegister:
    """|Phi(0,0)> followed by Z^r then X^w on the second qudit."""
    d = check_dim(dim)
    label = BellLabel(*label).validate(d)
    reg = _ghz(d, 2, tuple(ids))
    second = reg.qudit_ids[1]
    if label.r:
        reg = apply_clock(reg, second, label.r)
    if label.w:
        reg = apply_shift(reg, second, label.w)
    return reg


def make_cat(dim: int, label: CatLabel, ids: Sequence[Hashable] | None = None) -> QuditRegister:
    d = check_dim(dim)
    label.validate(d)
    k = len(label.values)
    ids = tuple(range(k)) if ids is None else tuple(ids)
    reg = _ghz(d, k, ids)
    if label.v:
        reg = apply_clock(reg, ids[0], label.v)
    for qid, shift in zip(ids[1:], label.u):
        if shift:
            reg = apply_shift(reg, qid, shift)
    return reg


# ----------------------------------------------------------------------------
# condition checkers
# ----------------------------------------------------------------------------

def check_c1(outcomes: Sequence[int], u: int, d: int) -> bool:
    """Computational-basis condition: k_0 + u == k_1 == ... == k_n (mod d)."""
    if len(outcomes) == 0:
        raise ValueError("check_c1 needs at least one outcome")
    target = (outcomes[0] + u) % d
    return all(k % d == target for k in outcomes[1:])


def check_c2(outcomes: Sequence[int], v: int, d: int) -> bool:
    """Fourier-basis condition: k_0 + ... + k_n + v == 0 (mod d)."""
    if len(outcomes) == 0:
        raise ValueError("check_c2 needs at least one outcome")
    return (sum(outcomes) + v) % d == 0


def check_corollary1(
    outcomes: Sequence[int], basis: Basis, label: BellLabel, d: int
) -> bool:
    a0, a1 = outcomes
    label = BellLabel(*label)
    if Basis(basis) is Basis.B1:
        return check_c1((a0, a1), label.w, d)
    return check_c2((a0, a1), label.r, d)


def check_cat_sample(outcomes: Sequence[int], basis: Basis, label: CatLabel, d: int) -> bool:
    """Dispatch to c1 (B1) or c2 (B2) for a uniform cat label."""
    if Basis(basis) is Basis.B1:
        return check_c1(outcomes, label.u[0], d)
    return check_c2(outcomes, label.v, d)


# ----------------------------------------------------------------------------
# identification
# ----------------------------------------------------------------------------

def uniform_overlaps(reg: QuditRegister) -> np.ndarray:
    """|<Psi(v, u, ..., u)|reg>| for every (v, u); returns a (d, d) array."""
    d, k = reg.dim, reg.n_qudits
    if k < 2:
        raise ValueError("identification needs at least two qudits")
    j = np.arange(d)
    step = sum(d**p for p in range(k - 1))  # |0, 1, ..., 1> offset for shift u
    # index of |j, j+u, ..., j+u>: first digit j, remaining digits (j+u) mod d
    index = j[:, None] * d ** (k - 1) + ((j[:, None] + j[None, :]) % d) * step
    gathered = reg.amplitudes[index]  # [j, u]
    phase = np.exp(-2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)  # [v, j]
    return np.abs(phase @ gathered)


def identify_state(reg: QuditRegister) -> CatLabel | None:
    """Return the uniform cat label of ``reg`` or ``None`` if it is not one."""
    amps = uniform_overlaps(reg)
    v, u = np.unravel_index(int(np.argmax(amps)), amps.shape)
    if amps[v, u] >= 1 - ATOL:
        return CatLabel.uniform(int(v), int(u), reg.n_qudits - 1)
    return None


def identify_cat(reg: QuditRegister, threshold: float = 1 - ATOL) -> CatLabel | None:
    """Full cat-basis identification, allowing non-uniform shift labels."""
    coeffs, _ = cat_coefficients(reg, reg.qudit_ids)
    mags = np.abs(coeffs[:, 0])
    best = int(np.argmax(mags))
    if mags[best] < threshold:
        return None
    digits = np.unravel_index(best, (reg.dim,) * reg.n_qudits)
    return CatLabel.from_values([int(x) for x in digits])


# ----------------------------------------------------------------------------
# sampling suites
# ----------------------------------------------------------------------------

def condition_failures(
    reg: QuditRegister, label: CatLabel, basis: Basis, trials: int, rng: np.random.Generator
) -> int:
    """Count sampled rows of ``reg`` that violate (c1) for B1 or (c2) for B2."""
    d = reg.dim
    rows = sample_quditwise(reg, basis, rng, trials)
    if Basis(basis) is Basis.B1:
        ok = (rows[:, 1:] == ((rows[:, :1] + label.u[0]) % d)).all(axis=1)
    else:
        ok = (rows.sum(axis=1) + label.v) % d == 0
    return int((~ok).sum())


def perturb_state(
    reg: QuditRegister, rng: np.random.Generator, infidelity: float = 0.1
) -> QuditRegister:
    """Tilt ``reg`` towards a random orthogonal direction.

    The result has |<reg|out>|^2 = 1 - infidelity, hence an L2 distance of
    at least sqrt(infidelity) from ``reg``.
    """
    psi = reg.amplitudes
    eta = rng.standard_normal(psi.size) + 1j * rng.standard_normal(psi.size)
    eta -= np.vdot(psi, eta) * psi
    eta /= np.linalg.norm(eta)
    out = np.sqrt(1 - infidelity) * psi + np.sqrt(infidelity) * eta
    return QuditRegister(reg.dim, reg.qudit_ids, out)


@dataclass(frozen=True)
class SuiteRow:
    d: int
    n: int
    label: CatLabel
    basis: str  # "B1", "B2", or "B1+B2" for the pooled perturbed check
    trials: int
    failures: int
    perturbed: bool = False

    @property
    def passed(self) -> bool:
        # honest states must never fail; perturbed ones must fail at least once
        return self.failures > 0 if self.perturbed else self.failures == 0


def measurement_suite(
    d: int, n: int, trials: int, rng: np.random.Generator, infidelity: float = 0.1
) -> list[SuiteRow]:
    """Sample (c1)/(c2) for every uniform label at (d, n), honest and perturbed."""
    rows = []
    for v in range(d):
        for u in range(d):
            label = CatLabel.uniform(v, u, n)
            reg = make_cat(d, label)
            bad = perturb_state(reg, rng, infidelity)
            for basis in (Basis.B1, Basis.B2):
                rows.append(SuiteRow(d, n, label, basis.value, trials,
                                     condition_failures(reg, label, basis, trials, rng)))
            bad_total = sum(condition_failures(bad, label, b, trials, rng)
                            for b in (Basis.B1, Basis.B2))
            rows.append(SuiteRow(d, n, label, "B1+B2", 2 * trials, bad_total, perturbed=True))
    return rows
