import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsms import transcript as tx
from qsms.errors import ConfigError, EngineIdentityError, IncompleteTranscript
from qsms.protocol import (
    ChannelAdversary,
    ProtocolConfig,
    TPState,
    encode_pair,
    eigenvector,
    replay,
    run_protocol,
    step7_sum,
)
from qsms.register import Basis
from qsms.states import BellLabel, CatLabel, make_bell

import oracles

EVENTS = {"prepare", "send", "detect-sample", "detect-report", "encode", "measure",
          "announce", "sum", "abort"}


@st.composite
def honest_setups(draw):
    n = draw(st.integers(2, 4))
    d = draw(st.integers(2, 7))
    m = draw(st.integers(1, 3))
    data = [[draw(st.integers(0, d - 1)) for _ in range(m)] for _ in range(n)]
    seed = draw(st.integers(0, 2**31))
    return ProtocolConfig(n=n, m=m, d=d, delta=1, sigma=1, seed=seed), data


@settings(max_examples=25)
@given(honest_setups())
def test_honest_runs_compute_the_sum(setup):
    cfg, data = setup
    tr = run_protocol(cfg, data)
    assert not tr.aborted
    assert tr.sums == [sum(row[j] for row in data) % cfg.d for j in range(cfg.m)]
    assert tr.detection1.failures == 0 and tr.detection2.failures == 0
    assert tr.detection1.checked == cfg.n * cfg.delta
    assert tr.detection2.checked == cfg.n * cfg.sigma


def test_worked_example_inputs():
    cfg = ProtocolConfig(n=3, m=2, d=7, delta=0, sigma=0, seed=42)
    tr = run_protocol(cfg, [[1, 3], [3, 6], [2, 5]])
    assert tr.sums == [6, 0]


def test_exact_sum_mode():
    cfg = ProtocolConfig(n=3, m=1, d=7, delta=0, sigma=0, exact_sum=True)
    assert run_protocol(cfg, [[1], [2], [2]]).sums == [5]
    with pytest.raises(ConfigError):
        run_protocol(cfg, [[3], [3], [2]])


@pytest.mark.parametrize(
    "cfg, data",
    [
        (ProtocolConfig(n=1, m=1, d=3), [[0]]),
        (ProtocolConfig(n=2, m=0, d=3), [[], []]),
        (ProtocolConfig(n=2, m=1, d=3), [[0], [3]]),
        (ProtocolConfig(n=2, m=1, d=3), [[0], [-1]]),
        (ProtocolConfig(n=2, m=2, d=3), [[0, 1], [1]]),
        (ProtocolConfig(n=3, m=1, d=3), [[0], [1]]),
        (ProtocolConfig(n=2, m=1, d=3, delta=-1), [[0], [1]]),
        (ProtocolConfig(n=2, m=1, d=3, error_threshold=1.5), [[0], [1]]),
    ],
)
def test_config_errors(cfg, data):
    with pytest.raises(ConfigError):
        run_protocol(cfg, data)


# ----------------------------------------------------------------------------
# transcripts
# ----------------------------------------------------------------------------

def test_transcripts_are_deterministic_and_replayable():
    cfg = ProtocolConfig(n=3, m=2, d=5, seed=123)
    data = [[1, 4], [0, 2], [3, 3]]
    a = run_protocol(cfg, data).to_jsonl()
    b = run_protocol(cfg, data).to_jsonl()
    assert a == b
    assert replay(a).to_jsonl() == a
    c = run_protocol(ProtocolConfig(n=3, m=2, d=5, seed=124), data).to_jsonl()
    assert c != a


def test_transcript_schema():
    tr = run_protocol(ProtocolConfig(n=2, m=2, d=3, seed=1), [[1, 2], [2, 2]])
    header, records = tx.loads(tr.to_jsonl())
    assert header["schema"] == tx.TRANSCRIPT_SCHEMA
    assert header["version"] == tx.SCHEMA_VERSION
    assert header["datasets"] == [[1, 2], [2, 2]]
    assert {r["event"] for r in records} <= EVENTS
    assert [r["value"] for r in records if r["event"] == "sum"] == tr.sums
    for line in tr.to_jsonl().splitlines():
        assert list(json.loads(line)) == sorted(json.loads(line))


def test_loads_rejects_bad_input():
    with pytest.raises(ValueError):
        tx.loads('{"event": "sum"}\n')
    with pytest.raises(ValueError):
        tx.loads('{"schema": "qsms-transcript", "version": 99}\n')
    with pytest.raises(ValueError):
        replay('{"schema": "qsms-attack-report", "version": 1}\n')


# ----------------------------------------------------------------------------
# steps
# ----------------------------------------------------------------------------

@given(d=st.integers(2, 7), r=st.integers(0, 6), w=st.integers(0, 6))
def test_encoding_on_h_yields_the_labelled_bell_state(d, r, w):
    r, w = r % d, w % d
    pair = make_bell(d, BellLabel(0, 0), ids=("h", "t"))
    enc = encode_pair(pair, "h", r, w)
    np.testing.assert_allclose(enc.amplitudes, oracles.bell(d, r, w), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_eigenvectors(d):
    for k in range(d):
        np.testing.assert_allclose(eigenvector(d, Basis.B1, k), oracles.ket(d, (k,)))
        np.testing.assert_allclose(
            eigenvector(d, Basis.B2, k), oracles.fourier(d).conj().T @ oracles.ket(d, (k,)),
            atol=1e-12,
        )


def test_step7_requires_complete_round():
    tp = TPState(dim=5, cat_labels=[CatLabel.uniform(1, 2, 2)], payload=[0])
    with pytest.raises(IncompleteTranscript):
        step7_sum(tp, 0, [1, 2])
    tp.results[0] = CatLabel(3, (1, 4))
    with pytest.raises(IncompleteTranscript):
        step7_sum(tp, 0, [1])
    # 3 + (1 + 4) + (1 + 2) - 1 - 2 * 2 = 6 = 1 mod 5
    assert step7_sum(tp, 0, [1, 2]) == 1


class Recorder(ChannelAdversary):
    def __init__(self):
        self.seen = []

    def intercept(self, flight):
        self.seen.append((flight.sequence, flight.party, flight.position, flight.qudit))


def test_channel_hook_sees_exactly_the_step2_sequences():
    cfg = ProtocolConfig(n=3, m=2, d=3, delta=1, sigma=2, seed=0)
    hook = Recorder()
    tr = run_protocol(cfg, [[0, 1], [1, 1], [2, 0]], hook)
    n_cats = cfg.m + cfg.n * cfg.delta
    n_bells = cfg.m + cfg.sigma
    s = [x for x in hook.seen if x[0] == "S"]
    t = [x for x in hook.seen if x[0] == "T"]
    assert len(s) == cfg.n * n_cats and len(t) == cfg.n * n_bells
    assert {x[3] for x in s} == {f"s{i}^{p}" for i in range(1, 4) for p in range(n_cats)}
    assert {x[3] for x in t} == {f"t{i}^{p}" for i in range(1, 4) for p in range(n_bells)}
    # a passive hook changes nothing
    assert tr.sums == [0, 2] and not tr.aborted
    # one send record per sequence
    assert sorted(r["sequence"] for r in tr.events("send")) == ["S1", "S2", "S3", "T1", "T2", "T3"]


def test_detection_samples_are_disjoint_from_payload():
    cfg = ProtocolConfig(n=3, m=2, d=3, delta=2, sigma=3, seed=7)
    tr = run_protocol(cfg, [[0, 1], [1, 1], [2, 0]])
    checked = [s["position"] for s in tr.detection1.samples]
    assert len(set(checked)) == len(checked) == cfg.n * cfg.delta
    used = {r["cat_position"] for r in tr.events("sum")}
    assert not used & set(checked)
    for i in range(1, cfg.n + 1):
        det2 = {s["position"] for s in tr.detection2.samples if s["party"] == i}
        enc = {r["position"] for r in tr.events("encode") if r["party"] == i}
        assert len(det2) == cfg.sigma and not det2 & enc


class Breaker(ChannelAdversary):
    """Replaces every T qudit of party 1 by |0>."""

    def intercept(self, flight):
        if flight.sequence == "T" and flight.party == 1:
            flight.take(Basis.B1)
            flight.send(oracles.ket(flight.dim, (0,)))


def test_detection_aborts_on_tampering():
    cfg = ProtocolConfig(n=2, m=1, d=3, delta=0, sigma=20, seed=3)
    tr = run_protocol(cfg, [[1], [1]], Breaker())
    assert tr.aborted
    assert tr.sums == []
    assert tr.events("abort")[0]["detection"] == "detection2"
    assert tr.detection2.party_error_rates()[2] == 0.0
    assert tr.detection2.party_error_rates()[1] > 0.0
    # continuing anyway: the sum is no longer guaranteed, but nothing raises
    tr = run_protocol(cfg, [[1], [1]], Breaker(), continue_on_abort=True)
    assert len(tr.sums) == 1


def test_lenient_threshold_continues():
    cfg = ProtocolConfig(n=2, m=1, d=3, delta=0, sigma=4, error_threshold=1.0, seed=3)
    tr = run_protocol(cfg, [[1], [1]], Breaker())
    assert not tr.aborted


def test_forced_branch_with_wrong_sum_is_caught():
    # forcing a branch is fine; corrupting the cat label bookkeeping is not
    cfg = ProtocolConfig(n=2, m=1, d=3, delta=0, sigma=0, seed=0)
    tr = run_protocol(cfg, [[1], [2]], branches=[((1, 2), (0, 1))], r_values=[[0], [1]])
    assert tr.sums == [0]
    from qsms import protocol as proto

    original = proto.step7_sum
    try:
        proto.step7_sum = lambda tp, j, q: (original(tp, j, q) + 1) % tp.dim
        with pytest.raises(EngineIdentityError):
            run_protocol(cfg, [[1], [2]])
    finally:
        proto.step7_sum = original
