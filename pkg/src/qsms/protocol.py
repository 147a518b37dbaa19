"""Secure multi-party summation over cat-state / Bell-state entanglement swapping.

Roles: parties ``P1 .. Pn`` each hold a dataset of ``m`` values in ``[0, d)``;
the third party ``TP`` prepares cat states and announces the per-round sums.

Step overview (one call per step, all driven by :func:`run_protocol`)::

    step1_prepare         Bell pairs |Phi(0,0)> (h, t) per party, cat states
                          |Psi(v, u, .., u)> (s0 .. sn) at TP
    step2_distribute      S_i -> P_i, T_i -> TP through adversary hooks
    detection1            cat-state checks initiated by each party
    detection2            Bell-pair checks initiated by TP
    step4_encode          x = r + w, pair becomes |Phi(r, w)>
    steps5to6_swap_and_announce
                          Bell measurement on (h_i, s_i); TP cat measurement
                          on (s0, t_1 .. t_n); q_i = r~_i + w~_i announced
    step7_sum             v~ + sum u~ + sum q - v - n u

Each payload round lives in its own register of at most n + 3 qudits.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Hashable, Sequence

import numpy as np

from . import transcript as tx
from .errors import ConfigError, EngineIdentityError, IncompleteTranscript
from .register import (
    Basis,
    QuditRegister,
    apply_clock,
    apply_shift,
    apply_unitary,
    fourier_matrix,
    guard_amplitudes,
    make_register,
    measure_quditwise,
    measure_single,
    permute,
    tensor_attach,
)
from .states import BellLabel, CatLabel, check_cat_sample, check_corollary1, make_bell, make_cat
from .swap import swap_registers

TP = "TP"


def party_name(i: int) -> str:
    return f"P{i}"


@dataclass(frozen=True)
class ProtocolConfig:
    n: int
    m: int
    d: int
    delta: int = 2
    sigma: int = 2
    error_threshold: float = 0.0
    seed: int = 0
    exact_sum: bool = False

    @property
    def L(self) -> int:
        return self.m

    def validate(self, datasets: Sequence[Sequence[int]] | None = None) -> None:
        if self.n < 2:
            raise ConfigError(f"need at least two parties, got n={self.n}")
        if self.m < 1:
            raise ConfigError(f"datasets need at least one entry, got m={self.m}")
        if self.d < 2:
            raise ConfigError(f"dimension must be >= 2, got d={self.d}")
        if self.delta < 0 or self.sigma < 0:
            raise ConfigError("sample counts must be non-negative")
        if not 0.0 <= self.error_threshold <= 1.0:
            raise ConfigError("error_threshold must lie in [0, 1]")
        guard_amplitudes(self.d, self.n + 3)
        if datasets is None:
            return
        if len(datasets) != self.n or any(len(row) != self.m for row in datasets):
            raise ConfigError(f"datasets must have shape {self.n} x {self.m}")
        top = max(max(row) for row in datasets)
        if min(min(row) for row in datasets) < 0 or top >= self.d:
            raise ConfigError(f"inputs must lie in [0, {self.d - 1}]")
        if self.exact_sum and self.d <= self.n * top:
            raise ConfigError(
                f"exact_sum needs d > n * max input = {self.n * top}, got d={self.d}"
            )

    def as_dict(self) -> dict:
        return asdict(self)


# ----------------------------------------------------------------------------
# holders and the shared lab
# ----------------------------------------------------------------------------

@dataclass
class PartyState:
    index: int
    dataset: tuple[int, ...]
    H: list = field(default_factory=list)
    T: list = field(default_factory=list)
    S: list = field(default_factory=list)
    custody: set = field(default_factory=set)
    payload: list[int] = field(default_factory=list)  # Bell positions left for rounds
    r: dict[int, int] = field(default_factory=dict)
    w: dict[int, int] = field(default_factory=dict)
    bell_results: dict[int, BellLabel] = field(default_factory=dict)
    q: dict[int, int] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return party_name(self.index)


@dataclass
class TPState:
    dim: int = 2
    cat_labels: list[CatLabel] = field(default_factory=list)
    S0: list = field(default_factory=list)
    custody: set = field(default_factory=set)
    payload: list[int] = field(default_factory=list)  # cat positions left for rounds
    results: dict[int, CatLabel] = field(default_factory=dict)
    sums: dict[int, int] = field(default_factory=dict)


@dataclass
class Lab:
    """Physical registers, keyed by preparation position."""

    cats: dict[int, QuditRegister] = field(default_factory=dict)
    bells: dict[tuple[int, int], QuditRegister] = field(default_factory=dict)
    leftovers: dict[int, QuditRegister] = field(default_factory=dict)


def cat_qudit(i: int, pos: int) -> str:
    return f"s{i}^{pos}"


def h_qudit(i: int, pos: int) -> str:
    return f"h{i}^{pos}"


def t_qudit(i: int, pos: int) -> str:
    return f"t{i}^{pos}"


class InFlight:
    """Handle on a single qudit while it crosses the Step-2 channel.

    An adversary can only touch this qudit (plus ancillas it brings);
    it never sees labels, secrets or the other qudits of the register.
    """

    def __init__(self, lab: Lab, key, qudit: Hashable, sequence: str, party: int,
                 position: int, rng: np.random.Generator):
        self._lab = lab
        self._key = key
        self.qudit = qudit
        self.sequence = sequence
        self.party = party
        self.position = position
        self.rng = rng

    @property
    def dim(self) -> int:
        return self._get().dim

    def _get(self) -> QuditRegister:
        if isinstance(self._key, int):
            return self._lab.cats[self._key]
        return self._lab.bells[self._key]

    def _put(self, reg: QuditRegister) -> None:
        if isinstance(self._key, int):
            self._lab.cats[self._key] = reg
        else:
            self._lab.bells[self._key] = reg

    def take(self, basis: Basis) -> int:
        """Measure the qudit in ``basis`` and keep it (it leaves the channel)."""
        reg = self._get()
        order = reg.qudit_ids
        out, reg = measure_single(reg, self.qudit, basis, self.rng)
        self._put(reg)
        self._order = order
        return out.values[0]

    def send(self, vector: np.ndarray) -> None:
        """Inject a fresh single-qudit state in place of a taken qudit."""
        reg = self._get()
        fresh = QuditRegister(reg.dim, (self.qudit,), np.asarray(vector, dtype=complex))
        self._put(permute(tensor_attach(reg, fresh), self._order))

    def measure(self, basis: Basis) -> int:
        """Measure and resend the collapsed eigenstate."""
        k = self.take(basis)
        self.send(eigenvector(self.dim, basis, k))
        return k

    def entangle(self, matrix: np.ndarray, ancilla_qudits: int, tag: str) -> tuple:
        """Attach ``ancilla_qudits`` fresh |0> ancillas and apply ``matrix``
        to (this qudit, ancillas).  Returns the ancilla ids."""
        reg = self._get()
        ids = tuple(f"E[{tag}]{self.sequence}{self.party}^{self.position}#{a}"
                    for a in range(ancilla_qudits))
        if ids:
            reg = tensor_attach(reg, make_register(reg.dim, len(ids), [0] * len(ids), ids=ids))
        self._put(apply_unitary(reg, (self.qudit,) + ids, matrix))
        return ids


def eigenvector(d: int, basis: Basis, k: int) -> np.ndarray:
    """State left behind by outcome ``k`` of a single-qudit measurement."""
    if Basis(basis) is Basis.B1:
        vec = np.zeros(d, dtype=complex)
        vec[k] = 1.0
        return vec
    return fourier_matrix(d).conj()[k]  # F^dagger |k>, as a row of conj(F)


class ChannelAdversary:
    """Base hook: sees every in-flight qudit, does nothing."""

    def intercept(self, flight: InFlight) -> None:
        pass


# ----------------------------------------------------------------------------
# run state
# ----------------------------------------------------------------------------

@dataclass
class DetectionReport:
    kind: str
    threshold: float
    samples: list[dict] = field(default_factory=list)

    @property
    def checked(self) -> int:
        return len(self.samples)

    @property
    def failures(self) -> int:
        return sum(not s["passed"] for s in self.samples)

    @property
    def error_rate(self) -> float:
        return self.failures / self.checked if self.samples else 0.0

    @property
    def verdict(self) -> str:
        return "abort" if self.error_rate > self.threshold else "continue"

    def party_error_rates(self) -> dict[int, float]:
        out = {}
        for s in self.samples:
            tot, bad = out.get(s["party"], (0, 0))
            out[s["party"]] = (tot + 1, bad + (not s["passed"]))
        return {p: bad / tot for p, (tot, bad) in out.items()}

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "checked": self.checked,
            "failures": self.failures,
            "error_rate": self.error_rate,
            "verdict": self.verdict,
        }


@dataclass
class ProtocolRun:
    config: ProtocolConfig
    datasets: tuple[tuple[int, ...], ...]
    parties: list[PartyState]
    tp: TPState
    lab: Lab
    adversary: ChannelAdversary | None = None
    records: list[dict] = field(default_factory=list)
    detection1: DetectionReport | None = None
    detection2: DetectionReport | None = None
    aborted: bool = False
    abort_reason: str | None = None

    def emit(self, event: str, **fields) -> None:
        self.records.append({"event": event, **fields})

    def party(self, i: int) -> PartyState:
        return self.parties[i - 1]


@dataclass
class ProtocolTranscript:
    config: ProtocolConfig
    datasets: tuple[tuple[int, ...], ...]
    records: list[dict]
    sums: list[int]
    aborted: bool
    abort_reason: str | None
    detection1: DetectionReport | None
    detection2: DetectionReport | None

    def header(self) -> dict:
        return {
            "schema": tx.TRANSCRIPT_SCHEMA,
            "version": tx.SCHEMA_VERSION,
            "config": self.config.as_dict(),
            "datasets": [list(row) for row in self.datasets],
        }

    def to_jsonl(self) -> str:
        return tx.dumps(self.header(), self.records)

    def events(self, name: str) -> list[dict]:
        return [r for r in self.records if r["event"] == name]


# ----------------------------------------------------------------------------
# steps
# ----------------------------------------------------------------------------

def step1_prepare(
    run: ProtocolRun,
    rng: np.random.Generator,
    cat_labels: Sequence[CatLabel] | None = None,
) -> ProtocolRun:
    cfg = run.config
    n, d = cfg.n, cfg.d
    n_bells = cfg.L + cfg.sigma
    n_cats = cfg.L + n * cfg.delta

    for party in run.parties:
        i = party.index
        for pos in range(n_bells):
            h, t = h_qudit(i, pos), t_qudit(i, pos)
            run.lab.bells[(i, pos)] = make_bell(d, BellLabel(0, 0), ids=(h, t))
            party.H.append(h)
            party.T.append(t)
        party.custody = set(party.H) | set(party.T)
        run.emit("prepare", holder=party.name, kind="bell", count=n_bells, label=[0, 0])

    if cat_labels is None:
        draws = rng.integers(0, d, size=(n_cats, 2))
        cat_labels = [CatLabel.uniform(int(v), int(u), n) for v, u in draws]
    elif len(cat_labels) < n_cats:
        raise ConfigError(f"need {n_cats} cat labels, got {len(cat_labels)}")
    tp = run.tp
    tp.cat_labels = list(cat_labels[:n_cats])
    tp.S0 = [cat_qudit(0, pos) for pos in range(n_cats)]
    for pos, label in enumerate(tp.cat_labels):
        if len(label.u) != n or not label.is_uniform:
            raise ConfigError(f"cat label {label} must be uniform over {n} parties")
        ids = tuple(cat_qudit(i, pos) for i in range(n + 1))
        run.lab.cats[pos] = make_cat(d, label.validate(d), ids=ids)
    for party in run.parties:
        party.S = [cat_qudit(party.index, pos) for pos in range(n_cats)]
    tp.custody = {q for reg in run.lab.cats.values() for q in reg.qudit_ids}
    run.emit("prepare", holder=TP, kind="cat", count=n_cats,
             labels=[list(lab.values) for lab in tp.cat_labels])
    return run


def step2_distribute(run: ProtocolRun, rng: np.random.Generator) -> ProtocolRun:
    """TP sends S_i to P_i and P_i sends T_i to TP, through the adversary hook."""
    hook = run.adversary
    for party in run.parties:
        i = party.index
        run.emit("send", sequence=f"S{i}", sender=TP, receiver=party.name, qudits=list(party.S))
        for pos, q in enumerate(party.S):
            if hook is not None:
                hook.intercept(InFlight(run.lab, pos, q, "S", i, pos, rng))
        run.tp.custody -= set(party.S)
        party.custody |= set(party.S)

        run.emit("send", sequence=f"T{i}", sender=party.name, receiver=TP, qudits=list(party.T))
        for pos, q in enumerate(party.T):
            if hook is not None:
                hook.intercept(InFlight(run.lab, (i, pos), q, "T", i, pos, rng))
        party.custody -= set(party.T)
        run.tp.custody |= set(party.T)
    return run


def _random_basis(rng: np.random.Generator) -> Basis:
    return Basis.B1 if rng.integers(0, 2) == 0 else Basis.B2


def _measure_quditwise(reg: QuditRegister, order: Sequence, basis: Basis, rng) -> dict:
    return dict(zip(order, measure_quditwise(reg, order, basis, rng)))


def detection1(run: ProtocolRun, rng: np.random.Generator) -> DetectionReport:
    """Each party checks ``delta`` cat states drawn from its S_i sequence."""
    cfg = run.config
    n, d = cfg.n, cfg.d
    report = DetectionReport("detection1", cfg.error_threshold)
    available = list(range(cfg.L + n * cfg.delta))
    for party in run.parties:
        i = party.index
        picks = rng.choice(len(available), size=cfg.delta, replace=False) if cfg.delta else []
        positions = sorted(available[p] for p in picks)
        available = [p for p in available if p not in positions]
        for pos in positions:
            basis = _random_basis(rng)
            others = [j for j in range(1, n + 1) if j != i]
            announce_order = [int(x) for x in rng.permutation(others)]
            order = [cat_qudit(i, pos), cat_qudit(0, pos)] + [cat_qudit(j, pos) for j in announce_order]
            results = _measure_quditwise(run.lab.cats.pop(pos), order, basis, rng)
            outcomes = [results[cat_qudit(j, pos)] for j in range(n + 1)]
            label = run.tp.cat_labels[pos]
            passed = check_cat_sample(outcomes, basis, label, d)
            sample = {
                "party": i, "position": pos, "basis": basis.value, "outcomes": outcomes,
                "announced_label": list(label.values), "announce_order": announce_order,
                "passed": passed,
            }
            report.samples.append(sample)
            run.emit("detect-sample", detection=1, **sample)
    run.tp.payload = available
    run.detection1 = report
    run.emit("detect-report", detection=1, **report.summary())
    return report


def detection2(run: ProtocolRun, rng: np.random.Generator) -> DetectionReport:
    """TP checks ``sigma`` Bell pairs drawn from each party's T_i sequence."""
    cfg = run.config
    d = cfg.d
    report = DetectionReport("detection2", cfg.error_threshold)
    for party in run.parties:
        i = party.index
        total = cfg.L + cfg.sigma
        picks = rng.choice(total, size=cfg.sigma, replace=False) if cfg.sigma else []
        positions = sorted(int(p) for p in picks)
        party.payload = [p for p in range(total) if p not in positions]
        for pos in positions:
            basis = _random_basis(rng)
            h, t = h_qudit(i, pos), t_qudit(i, pos)
            results = _measure_quditwise(run.lab.bells.pop((i, pos)), [t, h], basis, rng)
            outcomes = [results[h], results[t]]
            passed = check_corollary1(outcomes, basis, BellLabel(0, 0), d)
            sample = {"party": i, "position": pos, "basis": basis.value,
                      "outcomes": outcomes, "passed": passed}
            report.samples.append(sample)
            run.emit("detect-sample", detection=2, **sample)
    run.detection2 = report
    run.emit("detect-report", detection=2, **report.summary())
    return report


def encode_pair(reg: QuditRegister, h: Hashable, r: int, w: int) -> QuditRegister:
    """Turn the (h, t) pair |Phi(0,0)> into |Phi(r, w)> acting on h only.

    Z^r X^(-w) on h equals X^w Z^r on t for a |Phi(0,0)> pair, so the
    result is exactly d^-1/2 sum_j xi^{jr} |j>_h |j + w>_t.
    """
    reg = apply_shift(reg, h, -w)
    return apply_clock(reg, h, r)


def step4_encode(
    run: ProtocolRun, party: PartyState, j: int, rng: np.random.Generator, r: int | None = None
) -> PartyState:
    d = run.config.d
    x = party.dataset[j]
    if not 0 <= x < d:
        raise ConfigError(f"input {x} out of range for d={d}")
    r = int(rng.integers(0, d)) if r is None else int(r) % d
    w = (x - r) % d
    pos = party.payload[j]
    key = (party.index, pos)
    run.lab.bells[key] = encode_pair(run.lab.bells[key], h_qudit(party.index, pos), r, w)
    party.r[j], party.w[j] = r, w
    run.emit("encode", party=party.index, round=j, position=pos, x=x, r=r, w=w)
    return party


def steps5to6_swap_and_announce(
    run: ProtocolRun,
    j: int,
    rng: np.random.Generator,
    postselect: Sequence[tuple[int, int]] | None = None,
) -> list[int]:
    cfg = run.config
    n, d = cfg.n, cfg.d
    cat_pos = run.tp.payload[j]
    cat_ids = tuple(cat_qudit(i, cat_pos) for i in range(n + 1))
    bells = []
    for party in run.parties:
        pos = party.payload[j]
        bells.append((run.lab.bells.pop((party.index, pos)),
                      h_qudit(party.index, pos), t_qudit(party.index, pos)))
    result = swap_registers(run.lab.cats.pop(cat_pos), cat_ids, bells, rng, postselect)
    if result.remainder.n_qudits:
        run.lab.leftovers[j] = result.remainder

    q = []
    for party, out in zip(run.parties, result.bell_outcomes):
        label = BellLabel(*out.values)
        party.bell_results[j] = label
        party.q[j] = (label.r + label.w) % d
        q.append(party.q[j])
        run.emit("measure", holder=party.name, round=j, kind="bell",
                 qudits=list(out.qudit_ids), label=[label.r, label.w])
    tp_label = CatLabel.from_values(result.tp_outcome.values)
    run.tp.results[j] = tp_label
    run.emit("measure", holder=TP, round=j, kind="cat",
             qudits=list(result.tp_outcome.qudit_ids), label=list(tp_label.values))
    for party in run.parties:
        run.emit("announce", holder=party.name, round=j, q=party.q[j])
    return q


def step7_sum(tp: TPState, j: int, q: Sequence[int]) -> int:
    """v~ + sum u~ + sum q - v - n u (mod d)."""
    cat_label = tp.cat_labels[tp.payload[j]]
    d = tp.dim
    if j not in tp.results:
        raise IncompleteTranscript(f"round {j}: TP has no cat measurement")
    n = len(cat_label.u)
    if len(q) != n or any(x is None for x in q):
        raise IncompleteTranscript(f"round {j}: expected {n} announcements, got {list(q)}")
    res = tp.results[j]
    total = res.v + sum(res.u) + sum(q) - cat_label.v - n * cat_label.u[0]
    tp.sums[j] = total % d
    return tp.sums[j]


# ----------------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------------

def new_run(config: ProtocolConfig, datasets, adversary: ChannelAdversary | None = None) -> ProtocolRun:
    datasets = tuple(tuple(int(x) for x in row) for row in datasets)
    config.validate(datasets)
    parties = [PartyState(i, datasets[i - 1]) for i in range(1, config.n + 1)]
    return ProtocolRun(config, datasets, parties, TPState(dim=config.d), Lab(), adversary)


def run_protocol(
    config: ProtocolConfig,
    datasets: Sequence[Sequence[int]],
    adversary: ChannelAdversary | None = None,
    *,
    continue_on_abort: bool = False,
    run_payload: bool = True,
    cat_labels: Sequence[CatLabel] | None = None,
    r_values: Sequence[Sequence[int]] | None = None,
    branches: Sequence[tuple[Sequence[int], Sequence[int]]] | None = None,
) -> ProtocolTranscript:
    """Run Steps 1-7 over every round.

    ``cat_labels``, ``r_values[i][j]`` and ``branches[j] = (k, l)`` pin the
    random choices (used to replay a worked example); ``branches`` forces
    the parties' Bell outcomes r~ = r - k, w~ = u - l by postselection.
    ``continue_on_abort`` keeps going after a detection verdict of abort,
    which attack experiments use to look at the payload anyway.
    """
    run = new_run(config, datasets, adversary)
    rng = np.random.default_rng(config.seed)
    prep_rng, chan_rng, det1_rng, det2_rng, enc_rng, *round_rngs = rng.spawn(5 + config.L)

    step1_prepare(run, prep_rng, cat_labels)
    step2_distribute(run, chan_rng)
    d1 = detection1(run, det1_rng)
    d2 = detection2(run, det2_rng)
    for rep in (d1, d2):
        if rep.verdict == "abort" and not run.aborted:
            run.aborted = True
            run.abort_reason = f"{rep.kind} error rate {rep.error_rate:.4f} > {rep.threshold}"
            run.emit("abort", detection=rep.kind, error_rate=rep.error_rate,
                     threshold=rep.threshold)

    sums: list[int] = []
    if run_payload and (not run.aborted or continue_on_abort):
        d = config.d
        for j in range(config.L):
            for party in run.parties:
                forced_r = None if r_values is None else r_values[party.index - 1][j]
                step4_encode(run, party, j, enc_rng, r=forced_r)
            postselect = None
            label = run.tp.cat_labels[run.tp.payload[j]]
            if branches is not None:
                k, l = branches[j]
                postselect = [((party.r[j] - k[i]) % d, (label.u[0] - l[i]) % d)
                              for i, party in enumerate(run.parties)]
            q = steps5to6_swap_and_announce(run, j, round_rngs[j], postselect)
            total = step7_sum(run.tp, j, q)
            expected = sum(row[j] for row in run.datasets) % d
            if adversary is None and total != expected:
                raise EngineIdentityError(f"round {j}: sum {total} != {expected}")
            run.emit("sum", holder=TP, round=j, value=total, cat_label=list(label.values),
                     cat_position=run.tp.payload[j])
            sums.append(total)
    return ProtocolTranscript(
        config, run.datasets, run.records, sums, run.aborted, run.abort_reason,
        run.detection1, run.detection2,
    )


def replay(text: str) -> ProtocolTranscript:
    """Re-run an honest transcript from its header; caller compares bytes."""
    header, _ = tx.loads(text)
    if header.get("schema") != tx.TRANSCRIPT_SCHEMA:
        raise ValueError(f"not a transcript: {header.get('schema')!r}")
    config = ProtocolConfig(**header["config"])
    return run_protocol(config, header["datasets"])
