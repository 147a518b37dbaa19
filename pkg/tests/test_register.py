import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qsms.errors import DimensionMismatch, MemoryGuardError, UnknownQudit
from qsms.register import (
    MAX_AMPLITUDES,
    Basis,
    QuditRegister,
    apply_clock,
    apply_fourier,
    apply_matrix,
    apply_shift,
    apply_unitary,
    bell_coefficients,
    clock_matrix,
    fourier_matrix,
    from_amplitudes,
    guard_amplitudes,
    make_register,
    measure_bell,
    measure_cat,
    measure_quditwise,
    measure_single,
    overlap,
    permute,
    quditwise_distribution,
    sample_quditwise,
    shift_matrix,
    tensor_attach,
)

import oracles

dims = st.integers(2, 5)


def random_register(d, n, seed, ids=None):
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(d**n) + 1j * rng.standard_normal(d**n)
    return from_amplitudes(d, psi / np.linalg.norm(psi), ids or tuple(range(n)))


# ----------------------------------------------------------------------------
# operators
# ----------------------------------------------------------------------------

@given(d=dims)
def test_matrices_match_definitions(d):
    np.testing.assert_allclose(fourier_matrix(d), oracles.fourier(d), atol=1e-12)
    for t in range(-d, 2 * d):
        np.testing.assert_allclose(shift_matrix(d, t), oracles.shift(d, t), atol=1e-12)
        np.testing.assert_allclose(clock_matrix(d, t), oracles.clock(d, t), atol=1e-12)


@given(d=dims)
def test_operator_algebra(d):
    F, X, Z = fourier_matrix(d), shift_matrix(d, 1), clock_matrix(d, 1)
    w = np.exp(2j * np.pi / d)
    np.testing.assert_allclose(F.conj().T @ F, np.eye(d), atol=1e-12)
    np.testing.assert_allclose(Z @ X, w * X @ Z, atol=1e-12)
    # conjugating by F turns the shift into the clock
    np.testing.assert_allclose(F @ X @ F.conj().T, Z, atol=1e-12)
    np.testing.assert_allclose(np.linalg.matrix_power(X, d), np.eye(d), atol=1e-12)
    np.testing.assert_allclose(np.linalg.matrix_power(Z, d), np.eye(d), atol=1e-12)


def test_operator_matrices_are_read_only():
    with pytest.raises(ValueError):
        fourier_matrix(3)[0, 0] = 0
    with pytest.raises(ValueError):
        shift_matrix(3, 1)[0, 0] = 0


# ----------------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------------

def test_make_register_basis_state():
    reg = make_register(3, 3, [2, 0, 1], ids=("a", "b", "c"))
    np.testing.assert_allclose(reg.amplitudes, oracles.ket(3, (2, 0, 1)))
    assert reg.qudit_ids == ("a", "b", "c")
    assert reg.n_qudits == 3


@pytest.mark.parametrize(
    "args",
    [(1, 2, [0, 0]), (3, 0, []), (3, 2, [0]), (3, 2, [0, 3]), (3, 2, [0, -1])],
)
def test_make_register_rejects_bad_input(args):
    with pytest.raises(DimensionMismatch):
        make_register(*args)


def test_memory_guard():
    guard_amplitudes(2, 26)
    with pytest.raises(MemoryGuardError):
        guard_amplitudes(11, 9)
    with pytest.raises(MemoryGuardError):
        make_register(10, 9, [0] * 9)
    assert MAX_AMPLITUDES == 10**8


def test_from_amplitudes_checks_norm():
    with pytest.raises(DimensionMismatch):
        from_amplitudes(2, [1.0, 1.0], (0,))
    with pytest.raises(DimensionMismatch):
        QuditRegister(2, (0, 1), np.ones(3))
    with pytest.raises(UnknownQudit):
        QuditRegister(2, (0, 0), np.ones(4) / 2)


@given(d=dims, seed=st.integers(0, 2**32 - 1))
def test_tensor_attach_is_kron(d, seed):
    a = random_register(d, 1, seed, ids=("a",))
    b = random_register(d, 2, seed + 1, ids=("b", "c"))
    ab = tensor_attach(a, b)
    assert ab.qudit_ids == ("a", "b", "c")
    np.testing.assert_allclose(ab.amplitudes, np.kron(a.amplitudes, b.amplitudes), atol=1e-12)
    with pytest.raises(UnknownQudit):
        tensor_attach(a, a)
    with pytest.raises(DimensionMismatch):
        tensor_attach(a, make_register(d + 1, 1, [0]))


@given(d=st.integers(2, 3), seed=st.integers(0, 2**32 - 1), order=st.permutations([0, 1, 2]))
def test_permute_matches_permutation_matrix(d, seed, order):
    reg = random_register(d, 3, seed)
    moved = permute(reg, order)
    assert moved.qudit_ids == tuple(order)
    # moved digit p is original digit order[p]
    P = oracles.permutation_matrix(d, 3, order)
    np.testing.assert_allclose(moved.amplitudes, P @ reg.amplitudes, atol=1e-12)
    assert overlap(reg, moved) == pytest.approx(1.0)
    with pytest.raises(UnknownQudit):
        permute(reg, (0, 1))


# ----------------------------------------------------------------------------
# gates
# ----------------------------------------------------------------------------

@given(d=dims, pos=st.integers(0, 2), seed=st.integers(0, 2**32 - 1))
def test_single_qudit_gates_match_kron(d, pos, seed):
    if d**3 > 64:
        d = 4
    reg = random_register(d, 3, seed)
    psi = reg.amplitudes
    cases = [
        (apply_fourier(reg, pos), oracles.fourier(d)),
        (apply_fourier(reg, pos, inverse=True), oracles.fourier(d).conj().T),
        (apply_shift(reg, pos, 2), oracles.shift(d, 2)),
        (apply_clock(reg, pos, d - 1), oracles.clock(d, d - 1)),
    ]
    for got, mat in cases:
        np.testing.assert_allclose(got.amplitudes, oracles.embed(d, 3, pos, mat) @ psi, atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_apply_unitary_on_non_adjacent_ordered_targets(seed):
    d = 2
    reg = random_register(d, 3, seed, ids=("a", "b", "c"))
    U = np.linalg.qr(np.random.default_rng(seed).standard_normal((4, 4)))[0]
    got = apply_unitary(reg, ("c", "a"), U)
    # oracle: move (c, a) to the front, apply U (x) I, move back
    P = oracles.permutation_matrix(d, 3, [2, 0, 1])
    expected = P.T @ np.kron(U, np.eye(2)) @ P @ reg.amplitudes
    np.testing.assert_allclose(got.amplitudes, expected, atol=1e-12)
    assert got.qudit_ids == reg.qudit_ids


def test_gate_errors():
    reg = make_register(3, 2, [0, 0])
    with pytest.raises(UnknownQudit):
        apply_shift(reg, 7, 1)
    with pytest.raises(UnknownQudit):
        apply_unitary(reg, (0, 0), np.eye(9))


def test_inputs_are_not_mutated():
    reg = random_register(3, 2, 5)
    before = reg.amplitudes.copy()
    apply_fourier(reg, 0)
    measure_single(reg, 1, Basis.B2, np.random.default_rng(0))
    measure_bell(reg, 0, 1, np.random.default_rng(0))
    np.testing.assert_array_equal(reg.amplitudes, before)


# ----------------------------------------------------------------------------
# measurements
# ----------------------------------------------------------------------------

@given(d=st.integers(2, 4), target=st.integers(0, 2), seed=st.integers(0, 2**32 - 1))
def test_single_measurement_probabilities_and_collapse(d, target, seed):
    reg = random_register(d, 3, seed)
    psi = reg.amplitudes
    rng = np.random.default_rng(seed)
    for basis in (Basis.B1, Basis.B2):
        for k in range(d):
            vec = oracles.ket(d, (k,))
            if basis is Basis.B2:
                vec = oracles.fourier(d).conj().T @ vec
            expected = oracles.project(psi, d, 3, [target], vec)
            p = float(np.linalg.norm(expected) ** 2)
            out, post = measure_single(reg, target, basis, rng, postselect=k)
            assert out.values == (k,)
            assert out.probability == pytest.approx(p, abs=1e-12)
            assert post.qudit_ids == tuple(q for q in reg.qudit_ids if q != target)
            assert abs(np.vdot(expected / np.sqrt(p), post.amplitudes)) == pytest.approx(1.0)


def test_b2_outcomes_label_fourier_dagger_states():
    d = 5
    for j in range(d):
        state = oracles.fourier(d).conj().T @ oracles.ket(d, (j,))
        reg = from_amplitudes(d, state, ("q",))
        out, _ = measure_single(reg, "q", Basis.B2, np.random.default_rng(j))
        assert out.values == (j,)


def test_postselecting_impossible_outcome_raises():
    reg = make_register(3, 1, [1])
    with pytest.raises(ValueError):
        measure_single(reg, 0, Basis.B1, np.random.default_rng(0), postselect=2)
    with pytest.raises(ValueError):
        measure_single(reg, 0, Basis.BELL, np.random.default_rng(0))


@given(d=st.integers(2, 3), seed=st.integers(0, 2**32 - 1))
def test_bell_measurement_matches_projectors(d, seed):
    reg = random_register(d, 3, seed, ids=("x", "y", "z"))
    coeffs, rest = bell_coefficients(reg, "z", "x")
    assert rest == ("y",)
    probs = (np.abs(coeffs) ** 2).sum(axis=1)
    for r in range(d):
        for w in range(d):
            p = oracles.outcome_probability(reg.amplitudes, d, 3, [2, 0], oracles.bell(d, r, w))
            assert probs[r * d + w] == pytest.approx(p, abs=1e-12)
    out, post = measure_bell(reg, "z", "x", np.random.default_rng(seed), postselect=(1, d - 1))
    assert out.values == (1, d - 1)
    assert post.qudit_ids == ("y",)
    assert post.norm() == pytest.approx(1.0)


@given(d=st.integers(2, 3), seed=st.integers(0, 2**32 - 1))
def test_cat_measurement_matches_projectors(d, seed):
    reg = random_register(d, 4, seed)
    ids = (3, 0, 2)
    _, post = measure_cat(reg, ids, np.random.default_rng(seed), postselect=(1, 0, 1))
    vec = oracles.cat(d, 1, [0, 1])
    expected = oracles.project(reg.amplitudes, d, 4, list(ids), vec)
    expected /= np.linalg.norm(expected)
    assert post.qudit_ids == (1,)
    assert abs(np.vdot(expected, post.amplitudes)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        measure_cat(reg, (0,), np.random.default_rng(0))


@given(d=st.integers(2, 3), seed=st.integers(0, 2**32 - 1))
def test_quditwise_distribution_matches_oracle(d, seed):
    reg = random_register(d, 3, seed)
    for basis in ("B1", "B2"):
        np.testing.assert_allclose(
            quditwise_distribution(reg, basis),
            oracles.quditwise_probabilities(reg.amplitudes, d, 3, basis),
            atol=1e-12,
        )


def test_joint_sampling_matches_sequential_measurement():
    from scipy import stats

    d, shots = 3, 6000
    reg = random_register(d, 3, 11)
    rng = np.random.default_rng(3)
    order = (2, 0, 1)
    seq, joint = [], []
    for _ in range(shots):
        r, vals = reg, {}
        for q in order:
            out, r = measure_single(r, q, Basis.B2, rng)
            vals[q] = out.values[0]
        seq.append(vals[0] * 9 + vals[1] * 3 + vals[2])
        vals = dict(zip(order, measure_quditwise(reg, order, Basis.B2, rng)))
        joint.append(vals[0] * 9 + vals[1] * 3 + vals[2])
    table = np.array([np.bincount(seq, minlength=27), np.bincount(joint, minlength=27)])
    table = table[:, table.sum(axis=0) > 0]
    assert stats.chi2_contingency(table).pvalue > 1e-3
    rows = sample_quditwise(reg, Basis.B2, rng, shots)
    assert rows.shape == (shots, 3)
    flat = np.bincount(rows @ np.array([9, 3, 1]), minlength=27)
    probs = quditwise_distribution(reg, Basis.B2)
    keep = probs > 0
    assert stats.chisquare(flat[keep], probs[keep] / probs[keep].sum() * shots).pvalue > 1e-3


def test_measurement_is_seed_deterministic():
    reg = random_register(3, 3, 1)
    a = measure_bell(reg, 0, 2, np.random.default_rng(9))[0]
    b = measure_bell(reg, 0, 2, np.random.default_rng(9))[0]
    assert a == b


def test_apply_matrix_rejects_unknown_target():
    with pytest.raises(UnknownQudit):
        apply_matrix(make_register(2, 1, [0]), "nope", np.eye(2))
