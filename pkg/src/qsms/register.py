"""Dense multi-qudit registers, the F / X / Z operator algebra, and measurements.

Amplitudes are stored big-endian: the first qudit in ``qudit_ids`` is the most
significant digit of the flat amplitude index.  Every operation returns a new
register; inputs are never mutated.

Measurements remove the measured qudits from the returned register.  The
``B2`` measurement applies ``F`` to the target and then reads the
computational basis, so outcome ``j`` is the projection onto
``F^dagger|j> = F|-j>``; this is the labelling under which the zero-sum
conditions on cat and Bell states hold with a ``+`` sign.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Sequence

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, MemoryGuardError, UnknownQudit

ATOL = 1e-9
PROB_FLOOR = 1e-12
MAX_AMPLITUDES = 10**8


class Basis(str, enum.Enum):
    B1 = "B1"
    B2 = "B2"
    BELL = "bell"
    CAT = "cat"


@dataclass(frozen=True)
class MeasurementOutcome:
    qudit_ids: tuple
    basis: Basis
    values: tuple[int, ...]
    probability: float = field(default=1.0, compare=False)


def check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise DimensionMismatch(f"qudit dimension must be an integer >= 2, got {d!r}")
    return int(d)


def guard_amplitudes(d: int, k: int) -> None:
    if d**k > MAX_AMPLITUDES:
        raise MemoryGuardError(
            f"{k} qudits of dimension {d} need {d**k} amplitudes "
            f"(limit {MAX_AMPLITUDES})"
        )


@dataclass(frozen=True, eq=False)
class QuditRegister:
    """Pure state of ``len(qudit_ids)`` qudits of dimension ``dim``."""

    dim: int
    qudit_ids: tuple
    amplitudes: np.ndarray

    def __post_init__(self):
        ids = tuple(self.qudit_ids)
        object.__setattr__(self, "qudit_ids", ids)
        if len(set(ids)) != len(ids):
            raise UnknownQudit(f"duplicate qudit ids in {ids}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != self.dim ** len(ids):
            raise DimensionMismatch(
                f"{amps.size} amplitudes for {len(ids)} qudits of dimension {self.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qudits(self) -> int:
        return len(self.qudit_ids)

    def position(self, qid: Hashable) -> int:
        try:
            return self.qudit_ids.index(qid)
        except ValueError:
            raise UnknownQudit(f"qudit {qid!r} not in register {self.qudit_ids}") from None

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __repr__(self):
        return f"QuditRegister(d={self.dim}, ids={self.qudit_ids})"


def _raw(dim: int, ids: tuple, amps: np.ndarray) -> QuditRegister:
    """Unchecked constructor for internal paths whose shapes are already right."""
    reg = object.__new__(QuditRegister)
    object.__setattr__(reg, "dim", dim)
    object.__setattr__(reg, "qudit_ids", ids)
    object.__setattr__(reg, "amplitudes", amps)
    return reg


# ----------------------------------------------------------------------------
# operators
# ----------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _fourier(d: int) -> np.ndarray:
    j = np.arange(d)
    mat = np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)
    mat.flags.writeable = False
    return mat


def fourier_matrix(d: int) -> np.ndarray:
    """F = d^-1/2 sum_{j,k} xi^{jk} |j><k|."""
    return _fourier(check_dim(d))


@lru_cache(maxsize=None)
def _shift(d: int, t: int) -> np.ndarray:
    mat = np.roll(np.eye(d, dtype=np.complex128), t, axis=0)
    mat.flags.writeable = False
    return mat


@lru_cache(maxsize=None)
def _clock(d: int, t: int) -> np.ndarray:
    mat = np.diag(np.exp(2j * np.pi * (np.arange(d) * t) / d))
    mat.flags.writeable = False
    return mat


def shift_matrix(d: int, t: int) -> np.ndarray:
    """X^t : |j> -> |j + t mod d>."""
    d = check_dim(d)
    return _shift(d, int(t) % d)


def clock_matrix(d: int, t: int) -> np.ndarray:
    """Z^t : |j> -> xi^{jt} |j>."""
    d = check_dim(d)
    return _clock(d, int(t) % d)


# ----------------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------------

def make_register(
    dim: int,
    qudit_count: int,
    initial_digits: Sequence[int],
    ids: Sequence[Hashable] | None = None,
) -> QuditRegister:
    dim = check_dim(dim)
    if qudit_count < 1:
        raise DimensionMismatch("a register needs at least one qudit")
    if len(initial_digits) != qudit_count:
        raise DimensionMismatch(
            f"{len(initial_digits)} initial digits for {qudit_count} qudits"
        )
    if any(not 0 <= int(x) < dim for x in initial_digits):
        raise DimensionMismatch(f"digits {list(initial_digits)} out of range for d={dim}")
    guard_amplitudes(dim, qudit_count)
    ids = tuple(range(qudit_count)) if ids is None else tuple(ids)
    if len(ids) != qudit_count:
        raise DimensionMismatch("id count does not match qudit_count")
    index = 0
    for x in initial_digits:
        index = index * dim + int(x)
    amps = np.zeros(dim**qudit_count, dtype=np.complex128)
    amps[index] = 1.0
    return QuditRegister(dim, ids, amps)


def from_amplitudes(dim: int, amplitudes, ids: Sequence[Hashable]) -> QuditRegister:
    """Wrap a normalised amplitude vector (raises if the norm is off by > 1e-9)."""
    reg = QuditRegister(check_dim(dim), tuple(ids), amplitudes)
    if abs(reg.norm() - 1.0) > ATOL:
        raise DimensionMismatch(f"amplitude vector has norm {reg.norm():.12f}, expected 1")
    return reg


def tensor_attach(reg: QuditRegister, other: QuditRegister) -> QuditRegister:
    if reg.dim != other.dim:
        raise DimensionMismatch(f"cannot attach d={other.dim} register to d={reg.dim}")
    clash = set(reg.qudit_ids) & set(other.qudit_ids)
    if clash:
        raise UnknownQudit(f"qudit id collision: {sorted(map(str, clash))}")
    guard_amplitudes(reg.dim, reg.n_qudits + other.n_qudits)
    return _raw(
        reg.dim,
        reg.qudit_ids + other.qudit_ids,
        np.outer(reg.amplitudes, other.amplitudes).reshape(-1),
    )


def permute(reg: QuditRegister, order: Sequence[Hashable]) -> QuditRegister:
    """Reorder qudits so that ``reg.qudit_ids == tuple(order)``."""
    order = tuple(order)
    if sorted(map(repr, order)) != sorted(map(repr, reg.qudit_ids)):
        raise UnknownQudit(f"{order} is not a permutation of {reg.qudit_ids}")
    if order == reg.qudit_ids:
        return reg
    axes = [reg.position(q) for q in order]
    tensor = reg.amplitudes.reshape((reg.dim,) * reg.n_qudits)
    return QuditRegister(reg.dim, order, np.transpose(tensor, axes).reshape(-1))


def overlap(a: QuditRegister, b: QuditRegister) -> float:
    """|<a|b>| with ``b`` aligned to ``a``'s qudit order."""
    if a.dim != b.dim:
        raise DimensionMismatch("dimension mismatch in overlap")
    b = permute(b, a.qudit_ids)
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


# ----------------------------------------------------------------------------
# gates
# ----------------------------------------------------------------------------

def apply_matrix(reg: QuditRegister, target: Hashable, matrix: np.ndarray) -> QuditRegister:
    """Apply a d x d matrix to one qudit."""
    p = reg.position(target)
    d = reg.dim
    psi = reg.amplitudes.reshape(d**p, d, d ** (reg.n_qudits - p - 1))
    out = _kernels.apply_single(psi, np.ascontiguousarray(matrix, dtype=np.complex128))
    return _raw(d, reg.qudit_ids, out.reshape(-1))


def apply_unitary(
    reg: QuditRegister, targets: Sequence[Hashable], matrix: np.ndarray
) -> QuditRegister:
    """Apply a d^t x d^t matrix to the ordered qudits ``targets``."""
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise UnknownQudit(f"duplicate targets {targets}")
    if len(targets) == 1:
        return apply_matrix(reg, targets[0], matrix)
    psi, rest = _front(reg, targets)
    out = np.asarray(matrix, dtype=np.complex128) @ psi
    moved = QuditRegister(reg.dim, targets + rest, out.reshape(-1))
    return permute(moved, reg.qudit_ids)


def apply_fourier(reg: QuditRegister, target: Hashable, inverse: bool = False) -> QuditRegister:
    f = fourier_matrix(reg.dim)
    return apply_matrix(reg, target, f.conj().T if inverse else f)


def apply_shift(reg: QuditRegister, target: Hashable, t: int) -> QuditRegister:
    return apply_matrix(reg, target, shift_matrix(reg.dim, t))


def apply_clock(reg: QuditRegister, target: Hashable, t: int) -> QuditRegister:
    return apply_matrix(reg, target, clock_matrix(reg.dim, t))


# ----------------------------------------------------------------------------
# measurement
# ----------------------------------------------------------------------------

def _front(reg: QuditRegister, targets: tuple) -> tuple[np.ndarray, tuple]:
    """Move ``targets`` to the most significant positions; return (d^t, M) array."""
    pos = [reg.position(q) for q in targets]
    if len(set(pos)) != len(pos):
        raise UnknownQudit(f"duplicate qudit ids {targets}")
    rest_pos = [i for i in range(reg.n_qudits) if i not in pos]
    rest = tuple(reg.qudit_ids[i] for i in rest_pos)
    d = reg.dim
    tensor = reg.amplitudes.reshape((d,) * reg.n_qudits)
    if pos != list(range(len(pos))):
        tensor = np.transpose(tensor, pos + rest_pos)
    return np.ascontiguousarray(tensor).reshape(d ** len(targets), -1), rest


def _select(probs: np.ndarray, rng: np.random.Generator, postselect: int | None) -> int:
    probs[probs < PROB_FLOOR] = 0.0
    cdf = np.cumsum(probs)
    total = cdf[-1]
    if total < PROB_FLOOR:
        raise ArithmeticError("register norm underflow during measurement")
    if postselect is not None:
        if probs[postselect] == 0.0:
            raise ValueError(f"postselected outcome {postselect} has zero probability")
        return int(postselect)
    idx = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    return min(idx, probs.size - 1)


def _collapse(coeffs: np.ndarray, index: int, prob: float, d: int, rest: tuple) -> QuditRegister:
    if prob < PROB_FLOOR:
        raise ArithmeticError("selected outcome has probability below 1e-12")
    return QuditRegister(d, rest, coeffs[index] / np.sqrt(prob))


def _digits(index: int, d: int, k: int) -> tuple[int, ...]:
    out = []
    for _ in range(k):
        index, r = divmod(index, d)
        out.append(r)
    return tuple(reversed(out))


def _encode(values: Sequence[int], d: int) -> int:
    index = 0
    for x in values:
        index = index * d + int(x) % d
    return index


def measure_single(
    reg: QuditRegister,
    target: Hashable,
    basis: Basis,
    rng: np.random.Generator,
    postselect: int | None = None,
) -> tuple[MeasurementOutcome, QuditRegister]:
    basis = Basis(basis)
    if basis not in (Basis.B1, Basis.B2):
        raise ValueError(f"single-qudit measurement needs B1 or B2, got {basis}")
    if basis is Basis.B2:
        reg = apply_fourier(reg, target)
    p = reg.position(target)
    d = reg.dim
    psi = reg.amplitudes.reshape(d**p, d, -1)
    weights = psi.real**2 + psi.imag**2
    probs = weights.sum(axis=(0, 2))
    k = _select(probs, rng, postselect)
    prob = float(probs[k])
    if prob < PROB_FLOOR:
        raise ArithmeticError("selected outcome has probability below 1e-12")
    rest = reg.qudit_ids[:p] + reg.qudit_ids[p + 1:]
    out = MeasurementOutcome((target,), basis, (k,), prob)
    return out, _raw(d, rest, psi[:, k, :].reshape(-1) / np.sqrt(prob))


def measure_quditwise(
    reg: QuditRegister, targets: Sequence[Hashable], basis: Basis, rng: np.random.Generator
) -> tuple[int, ...]:
    """Measure every qudit of ``targets`` in ``basis``; outcomes in target order.

    One draw from the joint marginal, which has the same distribution as
    measuring the targets one by one in any order.  Other qudits of ``reg``
    are traced out and the post-measurement state is not returned.
    """
    basis = Basis(basis)
    if basis not in (Basis.B1, Basis.B2):
        raise ValueError(f"qudit-wise measurement needs B1 or B2, got {basis}")
    targets = tuple(targets)
    if basis is Basis.B2:
        for q in targets:
            reg = apply_fourier(reg, q)
    psi, _ = _front(reg, targets)
    probs = (psi.real**2 + psi.imag**2).sum(axis=1)
    return _digits(_select(probs, rng, None), reg.dim, len(targets))


def bell_coefficients(reg: QuditRegister, q1: Hashable, q2: Hashable):
    if q1 == q2:
        raise UnknownQudit(f"Bell measurement needs two distinct qudits, got {q1!r} twice")
    psi, rest = _front(reg, (q1, q2))
    d = reg.dim
    coeffs = _kernels.bell_coefficients(psi.reshape(d, d, -1), d)
    return coeffs.reshape(d * d, -1), rest


def measure_bell(
    reg: QuditRegister,
    q1: Hashable,
    q2: Hashable,
    rng: np.random.Generator,
    postselect: tuple[int, int] | None = None,
) -> tuple[MeasurementOutcome, QuditRegister]:
    """Project (q1, q2) onto {|Phi(r, w)>}; ``q1`` carries the phase index."""
    d = reg.dim
    coeffs, rest = bell_coefficients(reg, q1, q2)
    probs = np.einsum("im,im->i", coeffs, coeffs.conj()).real
    pick = None if postselect is None else _encode(postselect, d)
    idx = _select(probs, rng, pick)
    out = MeasurementOutcome((q1, q2), Basis.BELL, _digits(idx, d, 2), float(probs[idx]))
    return out, _collapse(coeffs, idx, probs[idx], d, rest)


def cat_coefficients(reg: QuditRegister, qudit_ids: Sequence[Hashable]):
    ids = tuple(qudit_ids)
    if len(ids) < 2:
        raise ValueError("cat-basis measurement needs at least two qudits")
    psi, rest = _front(reg, ids)
    return _kernels.cat_coefficients(psi, reg.dim, len(ids)), rest


def measure_cat(
    reg: QuditRegister,
    qudit_ids: Sequence[Hashable],
    rng: np.random.Generator,
    postselect: Sequence[int] | None = None,
) -> tuple[MeasurementOutcome, QuditRegister]:
    """Project onto {|Psi(v, u_2, ..., u_k)>}; outcome values are (v, u_2, ..., u_k)."""
    ids = tuple(qudit_ids)
    d = reg.dim
    coeffs, rest = cat_coefficients(reg, ids)
    probs = np.einsum("im,im->i", coeffs, coeffs.conj()).real
    pick = None if postselect is None else _encode(postselect, d)
    idx = _select(probs, rng, pick)
    out = MeasurementOutcome(ids, Basis.CAT, _digits(idx, d, len(ids)), float(probs[idx]))
    return out, _collapse(coeffs, idx, probs[idx], d, rest)


def quditwise_distribution(reg: QuditRegister, basis: Basis) -> np.ndarray:
    """Joint outcome distribution of measuring every qudit in ``basis``."""
    basis = Basis(basis)
    if basis is Basis.B2:
        for q in reg.qudit_ids:
            reg = apply_fourier(reg, q)
    elif basis is not Basis.B1:
        raise ValueError(f"qudit-wise measurement needs B1 or B2, got {basis}")
    return reg.probabilities()


def sample_quditwise(
    reg: QuditRegister, basis: Basis, rng: np.random.Generator, shots: int
) -> np.ndarray:
    """Draw ``shots`` outcome rows of measuring every qudit in ``basis``.

    Equivalent in distribution to measuring the qudits one after another with
    :func:`measure_single`; returns an int array of shape (shots, n_qudits).
    """
    probs = quditwise_distribution(reg, basis)
    probs = np.where(probs < PROB_FLOOR, 0.0, probs)
    idx = rng.choice(probs.size, size=shots, p=probs / probs.sum())
    return np.stack(np.unravel_index(idx, (reg.dim,) * reg.n_qudits), axis=1)
