"""Eavesdropping models against the summation protocol.

* intercept-resend: a dishonest party measures every qudit of one Step-2
  sequence (``S_l`` or ``T_l``) and forwards a replacement.
* entangle-ancilla: the same party couples each in-flight qudit to a fresh
  ancilla with a unitary U, U|f>|0> = sum_g |g>|eps_{f,g}>.
* semitrusted TP: what TP can infer from her honest view of a transcript.

Attacks are plain :class:`~qsms.protocol.ChannelAdversary` hooks, so they
only ever touch the in-flight qudit handed to them.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from . import transcript as tx
from .errors import IncompleteTranscript, NotUnitaryError
from .protocol import (
    ChannelAdversary,
    InFlight,
    ProtocolConfig,
    ProtocolTranscript,
    eigenvector,
    run_protocol,
)
from .register import (
    ATOL,
    Basis,
    QuditRegister,
    apply_unitary,
    check_dim,
    quditwise_distribution,
)


# ----------------------------------------------------------------------------
# attack unitaries
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AttackUnitary:
    """Unitary on (signal qudit) x (ancilla), signal index most significant.

    ``ancilla_dim`` must be a power of ``dim`` because the ancilla lives in
    the same register as the signal; ``ancilla_dim == 1`` means no ancilla.
    """

    dim: int
    ancilla_dim: int
    matrix: np.ndarray

    def __post_init__(self):
        check_dim(self.dim)
        mat = np.asarray(self.matrix, dtype=np.complex128)
        size = self.dim * self.ancilla_dim
        if mat.shape != (size, size):
            raise NotUnitaryError(f"matrix shape {mat.shape}, expected {(size, size)}")
        if self.ancilla_qudits is None:
            raise NotUnitaryError(
                f"ancilla_dim={self.ancilla_dim} is not a power of d={self.dim}"
            )
        defect = np.abs(mat.conj().T @ mat - np.eye(size)).max()
        if defect > ATOL:
            raise NotUnitaryError(f"U^dagger U differs from identity by {defect:.3e}")
        object.__setattr__(self, "matrix", mat)

    @property
    def ancilla_qudits(self) -> int | None:
        a, size = 0, 1
        while size < self.ancilla_dim:
            size *= self.dim
            a += 1
        return a if size == self.ancilla_dim else None

    def epsilon(self) -> np.ndarray:
        """eps[f, g] = the (unnormalised) ancilla vector paired with |g> for input |f>."""
        d, da = self.dim, self.ancilla_dim
        cols = self.matrix[:, np.arange(d) * da]  # U |f>|0>, one column per f
        return cols.T.reshape(d, d, da)

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls, d: int, ancilla_dim: int | None = None) -> "AttackUnitary":
        da = d if ancilla_dim is None else ancilla_dim
        return cls(d, da, np.eye(d * da))

    @classmethod
    def cnot(cls, d: int) -> "AttackUnitary":
        """|f>|e> -> |f>|e + f>."""
        mat = np.zeros((d * d, d * d))
        for f in range(d):
            for e in range(d):
                mat[f * d + (e + f) % d, f * d + e] = 1.0
        return cls(d, d, mat)

    @classmethod
    def ancilla_rotation(cls, d: int, rotation: np.ndarray) -> "AttackUnitary":
        """I on the signal, ``rotation`` on the ancilla."""
        rotation = np.asarray(rotation)
        return cls(d, rotation.shape[0], np.kron(np.eye(d), rotation))

    @classmethod
    def controlled(cls, d: int, rotations: Sequence[np.ndarray]) -> "AttackUnitary":
        """|f>|e> -> |f> V_f |e>: leaves the signal alone, ancilla depends on f."""
        da = np.asarray(rotations[0]).shape[0]
        mat = np.zeros((d * da, d * da), dtype=complex)
        for f, rot in enumerate(rotations):
            mat[f * da:(f + 1) * da, f * da:(f + 1) * da] = rot
        return cls(d, da, mat)

    @classmethod
    def random(cls, d: int, rng: np.random.Generator, ancilla_dim: int | None = None) -> "AttackUnitary":
        da = d if ancilla_dim is None else ancilla_dim
        return cls(d, da, haar_unitary(d * da, rng))


def haar_unitary(size: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


# ----------------------------------------------------------------------------
# exact analysis of one attacked Bell pair
# ----------------------------------------------------------------------------

def attacked_pair(U: AttackUnitary) -> QuditRegister:
    """U on (T, E) applied to |Phi(0,0)>_{HT} |0>_E."""
    d = U.dim
    anc = tuple(f"E{a}" for a in range(U.ancilla_qudits))
    amps = np.zeros(d ** (2 + len(anc)), dtype=complex)
    for f in range(d):
        amps[(f * d + f) * d ** len(anc)] = 1 / np.sqrt(d)
    reg = QuditRegister(d, ("H", "T") + anc, amps)
    return apply_unitary(reg, ("T",) + anc, U.matrix)


def pair_error_probabilities(U: AttackUnitary) -> dict[str, float]:
    """Exact per-sample failure probability of the Bell-pair check in each basis."""
    reg = attacked_pair(U)
    d = U.dim
    extra = reg.n_qudits - 2
    out = {}
    for basis in (Basis.B1, Basis.B2):
        # measuring the ancilla too is harmless: its outcome is just marginalised
        probs = quditwise_distribution(reg, basis).reshape(d, d, d**extra).sum(axis=2)
        a0, a1 = np.indices((d, d))
        ok = (a1 == a0) if basis is Basis.B1 else ((a0 + a1) % d == 0)
        out[basis.value] = float(probs[~ok].sum())
    out["random"] = 0.5 * (out["B1"] + out["B2"])
    return out


def factorization_residuals(U: AttackUnitary) -> tuple[float, float]:
    """Norms of the zero-error conditions.

    B1: sqrt(sum_{k != 0} || sum_f |f>|f+k>|eps_{f,f+k}> ||^2)
    B2: sqrt(sum_{k != 0} || d^-1/2 sum_f xi^{fk} |eps_{f,f}> ||^2)
    """
    d = U.dim
    eps = U.epsilon()
    off = ~np.eye(d, dtype=bool)
    b1 = math.sqrt(float(np.sum(np.abs(eps[off]) ** 2)))
    diag = eps[np.arange(d), np.arange(d)]  # (f, da)
    f = np.arange(d)
    phases = np.exp(2j * np.pi * np.outer(f, f) / d) / np.sqrt(d)  # [k, f]
    sums = phases @ diag  # [k, da]
    b2 = math.sqrt(float(np.sum(np.abs(sums[1:]) ** 2)))
    return b1, b2


def diagonal_fidelities(U: AttackUnitary) -> np.ndarray:
    """Pairwise |<e_f|e_f'>| of the normalised eps_{f,f}; zero vectors give 0."""
    diag = U.epsilon()[np.arange(U.dim), np.arange(U.dim)]
    norms = np.linalg.norm(diag, axis=1)
    unit = np.where(norms[:, None] > ATOL, diag / np.maximum(norms, ATOL)[:, None], 0)
    return np.abs(unit.conj() @ unit.T)


def ancilla_distinguishability(U: AttackUnitary) -> float:
    """Largest trace distance between normalised eps_{f,f} and eps_{f',f'}."""
    fid = diagonal_fidelities(U)
    return float(np.sqrt(np.clip(1 - fid**2, 0, 1)).max())


def zero_error_implies_factorization(U: AttackUnitary, tol: float = ATOL) -> bool:
    """True iff the attack passes both Bell-pair checks with certainty.

    When true, every eps_{f,f} must be the same vector, so the ancilla ends
    in a product with the signal and carries no information about f; that
    consequence is verified and a violation raises AssertionError.
    """
    b1, b2 = factorization_residuals(U)
    if b1 > tol or b2 > tol:
        return False
    diag = U.epsilon()[np.arange(U.dim), np.arange(U.dim)]
    spread = np.abs(diag - diag[0]).max()
    if spread > 10 * tol * U.dim or diagonal_fidelities(U).min() < 1 - ATOL:
        raise AssertionError(f"zero-error attack with f-dependent ancilla (spread {spread:.2e})")
    return True


# ----------------------------------------------------------------------------
# channel hooks
# ----------------------------------------------------------------------------

def _parse_target(target: str) -> tuple[str, int]:
    seq, party = target[0].upper(), int(target[1:])
    if seq not in ("S", "T") or party < 1:
        raise ValueError(f"target must look like 'S2' or 'T1', got {target!r}")
    return seq, party


class InterceptResend(ChannelAdversary):
    """Measure every qudit of the target sequence and forward a replacement.

    ``variant="measure-resend"`` forwards the collapsed qudit;
    ``variant="fake-particle"`` keeps the genuine qudit and forwards a freshly
    prepared one, either the eigenstate of the observed outcome
    (``fake_state="outcome"``) or a uniformly random computational state.
    """

    def __init__(self, target: str, basis_strategy: str = "B1", variant: str = "measure-resend",
                 fake_state: str = "outcome"):
        self.sequence, self.party = _parse_target(target)
        if basis_strategy not in ("B1", "B2", "random"):
            raise ValueError(f"unknown basis strategy {basis_strategy!r}")
        if variant not in ("measure-resend", "fake-particle"):
            raise ValueError(f"unknown variant {variant!r}")
        self.basis_strategy = basis_strategy
        self.variant = variant
        self.fake_state = fake_state
        self.observations: dict[int, tuple[str, int]] = {}

    def _basis(self, rng) -> Basis:
        if self.basis_strategy == "random":
            return Basis.B1 if rng.integers(0, 2) == 0 else Basis.B2
        return Basis(self.basis_strategy)

    def intercept(self, flight: InFlight) -> None:
        if (flight.sequence, flight.party) != (self.sequence, self.party):
            return
        basis = self._basis(flight.rng)
        if self.variant == "measure-resend":
            k = flight.measure(basis)
        else:
            k = flight.take(basis)
            if self.fake_state == "outcome":
                vec = eigenvector(flight.dim, basis, k)
            else:
                vec = eigenvector(flight.dim, Basis.B1, int(flight.rng.integers(0, flight.dim)))
            flight.send(vec)
        self.observations[flight.position] = (basis.value, k)


class EntangleAncilla(ChannelAdversary):
    def __init__(self, unitary: AttackUnitary, target: str):
        self.unitary = unitary
        self.sequence, self.party = _parse_target(target)
        self.ancillas: dict[int, tuple] = {}

    def intercept(self, flight: InFlight) -> None:
        if (flight.sequence, flight.party) != (self.sequence, self.party):
            return
        self.ancillas[flight.position] = flight.entangle(
            self.unitary.matrix, self.unitary.ancilla_qudits, tag="U"
        )


# ----------------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------------

@dataclass
class AttackReport:
    kind: str
    target: str
    trials: int
    samples_per_trial: int
    detection1_error_rate: float
    detection2_error_rate: float
    detection_probability: float
    basis_error_rates: dict[str, float] = field(default_factory=dict)
    information: dict = field(default_factory=dict)
    # per trial, index of the first failed target sample (-1: none failed)
    first_failures: list[int] = field(default_factory=list, repr=False)

    def pass_probability(self, s: int) -> float:
        """Fraction of trials whose first ``s`` target samples all passed."""
        if not self.first_failures:
            return 1.0
        return sum(f < 0 or f >= s for f in self.first_failures) / len(self.first_failures)

    def pass_curve(self) -> list[float]:
        return [self.pass_probability(s) for s in range(1, self.samples_per_trial + 1)]

    def header(self) -> dict:
        return {"schema": tx.ATTACK_SCHEMA, "version": tx.SCHEMA_VERSION,
                "kind": self.kind, "target": self.target}

    def records(self) -> list[dict]:
        return [
            {"event": "attack-summary", "trials": self.trials,
             "samples_per_trial": self.samples_per_trial,
             "detection1_error_rate": self.detection1_error_rate,
             "detection2_error_rate": self.detection2_error_rate,
             "detection_probability": self.detection_probability,
             "basis_error_rates": self.basis_error_rates,
             "pass_curve": self.pass_curve()},
            {"event": "information", **self.information},
        ]

    def to_jsonl(self) -> str:
        return tx.dumps(self.header(), self.records())


def plugin_mutual_information(pairs: Sequence[tuple]) -> float:
    """Plug-in estimate of I(X; Y) in bits from observed (x, y) pairs."""
    if not pairs:
        return 0.0
    n = len(pairs)
    joint = Counter(pairs)
    px = Counter(x for x, _ in pairs)
    py = Counter(y for _, y in pairs)
    return float(sum(c / n * math.log2(c * n / (px[x] * py[y])) for (x, y), c in joint.items()))


class _Tally:
    """Failure counts restricted to samples that touch the attacked sequence.

    Detection-1 samples always include a qudit of every S_i, so all of them
    count for an S target; for a T target only the attacked party's
    Detection-2 samples do.
    """

    def __init__(self, party: int):
        self.party = party
        self.counts = {1: [0, 0], 2: [0, 0]}
        self.by_basis = {"B1": [0, 0], "B2": [0, 0]}
        self.detected = 0
        self.first_failures = []

    def add(self, transcript: ProtocolTranscript, detection: int) -> None:
        flagged = False
        first = -1
        for det, rep in ((1, transcript.detection1), (2, transcript.detection2)):
            if rep.verdict == "abort":
                flagged = True
            before = self.counts[det][0] + 1
            for s in rep.samples:
                if det == 2 and s["party"] != self.party:
                    continue
                self.counts[det][0] += 1
                self.counts[det][1] += not s["passed"]
                if det == detection:
                    if first < 0 and not s["passed"]:
                        first = self.counts[det][0] - before
                    self.by_basis[s["basis"]][0] += 1
                    self.by_basis[s["basis"]][1] += not s["passed"]
        self.detected += flagged
        self.first_failures.append(first)

    def rate(self, det: int) -> float:
        tot, bad = self.counts[det]
        return bad / tot if tot else 0.0

    def basis_rates(self) -> dict[str, float]:
        return {b: (bad / tot if tot else 0.0) for b, (tot, bad) in self.by_basis.items()}


def _attack_config(target_seq: str, n: int, d: int, samples: int, seed: int) -> ProtocolConfig:
    if target_seq == "T":
        return ProtocolConfig(n=n, m=1, d=d, delta=0, sigma=samples, seed=seed)
    return ProtocolConfig(n=n, m=1, d=d, delta=samples, sigma=0, seed=seed)


def _run_trials(make_hook, target: str, n: int, d: int, samples: int, trials: int,
                seed: int, with_payload: bool):
    seq, party = _parse_target(target)
    if party > n:
        raise ValueError(f"target party {party} but only n={n} parties")
    seeds = np.random.SeedSequence(seed).generate_state(trials)
    rng = np.random.default_rng(seed)
    tally = _Tally(party)
    pairs = []
    for t in range(trials):
        hook = make_hook()
        cfg = _attack_config(seq, n, d, samples, int(seeds[t]))
        datasets = [[int(rng.integers(0, d))] for _ in range(n)]
        tr = run_protocol(cfg, datasets, hook, continue_on_abort=True, run_payload=with_payload)
        tally.add(tr, 2 if seq == "T" else 1)
        if with_payload:
            pairs.extend(_secret_pairs(tr, hook, seq, party))
    return tally, pairs


def _secret_pairs(tr: ProtocolTranscript, hook, seq: str, party: int) -> list[tuple]:
    """(attacker observation, target secret) for each payload round."""
    obs = getattr(hook, "observations", None)
    if not obs:
        return []
    out = []
    if seq == "T":
        for rec in tr.events("encode"):
            if rec["party"] == party and rec["position"] in obs:
                out.append((obs[rec["position"]], rec["w"]))
    else:
        for rec in tr.events("sum"):
            if rec["cat_position"] in obs:
                out.append((obs[rec["cat_position"]], rec["cat_label"][1]))
    return out


def intercept_resend(
    target: str,
    basis_strategy: str = "B1",
    *,
    n: int = 2,
    d: int = 2,
    samples: int = 16,
    trials: int = 1000,
    seed: int = 0,
    variant: str = "measure-resend",
    fake_state: str = "outcome",
    with_payload: bool = False,
) -> AttackReport:
    """Run ``trials`` protocol instances with the target sequence intercepted.

    ``samples`` is sigma for a ``T`` target and delta for an ``S`` target;
    the other detection is switched off.  A trial counts as detected when
    a detection verdict is abort (threshold 0).
    """
    tally, pairs = _run_trials(
        lambda: InterceptResend(target, basis_strategy, variant, fake_state),
        target, n, d, samples, trials, seed, with_payload,
    )
    secret = "w" if target[0].upper() == "T" else "u"
    info = {"secret": secret, "rounds": len(pairs),
            "mutual_information_bits": plugin_mutual_information(pairs)}
    if pairs:
        info["outcome_equals_secret_rate"] = sum(o[1] == s for o, s in pairs) / len(pairs)
    return AttackReport("intercept-resend", target, trials, samples, tally.rate(1),
                        tally.rate(2), tally.detected / trials, tally.basis_rates(), info,
                        tally.first_failures)


def entangle_ancilla(
    U: AttackUnitary,
    target: str,
    *,
    n: int = 2,
    samples: int = 16,
    trials: int = 1000,
    seed: int = 0,
) -> AttackReport:
    tally, _ = _run_trials(lambda: EntangleAncilla(U, target), target, n, U.dim,
                           samples, trials, seed, with_payload=False)
    b1, b2 = factorization_residuals(U)
    info = {
        "ancilla_distinguishability": ancilla_distinguishability(U),
        "zero_error_residual_B1": b1,
        "zero_error_residual_B2": b2,
    }
    if target[0].upper() == "T":
        info["exact_pair_error"] = pair_error_probabilities(U)
    return AttackReport("entangle-ancilla", target, trials, samples, tally.rate(1),
                        tally.rate(2), tally.detected / trials, tally.basis_rates(), info,
                        tally.first_failures)


# ----------------------------------------------------------------------------
# semitrusted TP
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class TPView:
    """Everything an honest TP holds for one round.  No r or w fields."""

    round: int
    v: int
    u: int
    q: tuple[int, ...]
    v_after: int
    u_after: tuple[int, ...]
    total: int


def tp_views(transcript: ProtocolTranscript) -> list[TPView]:
    d = transcript.config.d
    n = transcript.config.n
    views = []
    for rec in transcript.events("sum"):
        j = rec["round"]
        q = {r["holder"]: r["q"] for r in transcript.events("announce") if r["round"] == j}
        cat = [r for r in transcript.events("measure") if r["round"] == j and r["holder"] == "TP"]
        if len(q) != n or not cat:
            raise IncompleteTranscript(f"round {j} lacks announcements or TP measurement")
        v, u = rec["cat_label"][0], rec["cat_label"][1]
        after = cat[0]["label"]
        views.append(TPView(j, v, u, tuple(q[f"P{i}"] for i in range(1, n + 1)),
                            after[0], tuple(after[1:]), rec["value"] % d))
    if len(views) != transcript.config.m:
        raise IncompleteTranscript("transcript does not cover every round")
    return views


def _party_likelihood(d: int, u: int, q: int, u_after: int) -> np.ndarray:
    """lik[x, k] = P(TP sees q, u~ and the branch index is k | input x).

    Enumerates the party's randomness r and the swap branch (k, l), all
    uniform over D, with w = x - r.
    """
    lik = np.zeros((d, d))
    for x, r, k, l in itertools.product(range(d), repeat=4):
        w = (x - r) % d
        if (w + l) % d == u_after and (r - k + u - l) % d == q:
            lik[x, k] += d**-3
    return lik


def input_posterior(view: TPView, d: int) -> np.ndarray:
    """Posterior over the input vector (x_1 .. x_n) under a uniform prior."""
    n = len(view.q)
    liks = [_party_likelihood(d, view.u, qi, ui) for qi, ui in zip(view.q, view.u_after)]
    shape = (d,) * n
    post = np.zeros(shape)
    need = (view.v_after - view.v) % d
    for xs in itertools.product(range(d), repeat=n):
        # distribution of sum(k) mod d given xs
        dist = np.zeros(d)
        dist[0] = 1.0
        for lik, x in zip(liks, xs):
            row = lik[x]
            dist = np.array([sum(dist[a] * row[(s - a) % d] for a in range(d)) for s in range(d)])
        post[xs] = dist[need]
    total = post.sum()
    if total <= 0:
        raise IncompleteTranscript("TP view is inconsistent with every input")
    return post / total


@dataclass
class LedgerReport:
    d: int
    n: int
    rounds: list[dict]

    @property
    def uniform_over_consistent(self) -> bool:
        return all(r["uniform_over_consistent"] for r in self.rounds)


def tp_information_ledger(transcript: ProtocolTranscript) -> LedgerReport:
    """What TP can infer about each party's input from her honest view.

    For every round the exact posterior over input vectors is computed by
    enumerating all hidden randomness; it is compared against the uniform
    distribution on vectors whose sum equals the published total.
    """
    d, n = transcript.config.d, transcript.config.n
    rounds = []
    for view in tp_views(transcript):
        post = input_posterior(view, d)
        grid = np.indices((d,) * n).sum(axis=0) % d
        consistent = grid == view.total
        target = consistent / consistent.sum()
        marginals = [post.sum(axis=tuple(a for a in range(n) if a != i)) for i in range(n)]
        entry = {
            "round": view.round,
            "sum": view.total,
            "consistent_inputs": int(consistent.sum()),
            "uniform_over_consistent": bool(np.allclose(post, target, atol=1e-12)),
            "party_marginals": [m.tolist() for m in marginals],
            "max_guess_probability": [float(m.max()) for m in marginals],
            # TP's natural estimate u~_i + q_i - u = x_i - k_i
            "tp_estimates": [(ua + qi - view.u) % d for ua, qi in zip(view.u_after, view.q)],
        }
        if n == 2:
            entry["residual_leakage"] = "x2 = sum - x1: the published sum links the two inputs"
        rounds.append(entry)
    return LedgerReport(d, n, rounds)


@dataclass
class PrivacyReport:
    n: int
    d: int
    runs: int
    datasets: list[list[int]]
    q_counts: list[list[int]]
    joint_p_value: float
    party_p_values: list[float]

    @property
    def uniform(self) -> bool:
        return min([self.joint_p_value, *self.party_p_values]) > P_UNIFORM

    def header(self) -> dict:
        return {"schema": tx.ATTACK_SCHEMA, "version": tx.SCHEMA_VERSION,
                "kind": "tp-ledger", "target": "TP"}

    def records(self) -> list[dict]:
        return [{"event": "q-uniformity", "n": self.n, "d": self.d, "runs": self.runs,
                 "datasets": self.datasets, "q_counts": self.q_counts,
                 "joint_p_value": self.joint_p_value,
                 "party_p_values": self.party_p_values}]

    def to_jsonl(self) -> str:
        return tx.dumps(self.header(), self.records())


P_UNIFORM = 1e-3


def announcement_uniformity(
    datasets: Sequence[Sequence[int]], d: int, runs: int, seed: int = 0
) -> PrivacyReport:
    """Chi-square test that the announced q values are uniform over D.

    The inputs stay fixed while the protocol randomness varies.  Every run
    contributes the joint tuple (q_1 .. q_n) of each round; the joint test
    uses all d^n cells when there are at least five expected counts per
    cell, and per-party marginals are always tested.
    """
    datasets = [list(map(int, row)) for row in datasets]
    n, m = len(datasets), len(datasets[0])
    seeds = np.random.SeedSequence(seed).generate_state(runs)
    tuples = []
    for s in seeds:
        cfg = ProtocolConfig(n=n, m=m, d=d, delta=0, sigma=0, seed=int(s))
        tr = run_protocol(cfg, datasets)
        by_round: dict[int, dict[str, int]] = {}
        for rec in tr.events("announce"):
            by_round.setdefault(rec["round"], {})[rec["holder"]] = rec["q"]
        for j in sorted(by_round):
            tuples.append(tuple(by_round[j][f"P{i}"] for i in range(1, n + 1)))
    arr = np.array(tuples)
    counts = [np.bincount(arr[:, i], minlength=d).tolist() for i in range(n)]
    party_p = [float(stats.chisquare(c).pvalue) for c in counts]
    if len(arr) >= 5 * d**n:
        flat = np.ravel_multi_index(arr.T, (d,) * n)
        joint_p = float(stats.chisquare(np.bincount(flat, minlength=d**n)).pvalue)
    else:
        joint_p = 1.0
    return PrivacyReport(n, d, runs, datasets, counts, joint_p, party_p)


def exhaustive_ledger(n: int, d: int, seed: int = 0) -> list[tuple[tuple[int, ...], LedgerReport]]:
    """Ledger of one single-round run for every input vector in D^n."""
    out = []
    for xs in itertools.product(range(d), repeat=n):
        cfg = ProtocolConfig(n=n, m=1, d=d, delta=0, sigma=0, seed=seed)
        tr = run_protocol(cfg, [[x] for x in xs])
        out.append((xs, tp_information_ledger(tr)))
    return out
