"""Independent reference implementations used by the tests.

Nothing here imports qsms.  States are written straight from their defining
sums, operators are full kron-product matrices, and measurement
probabilities come from explicit projectors.  Slow, small, obvious.
"""

import itertools
import math

import numpy as np


def xi(d):
    return np.exp(2j * np.pi / d)


def ket(d, digits):
    """|digits> with the first digit most significant."""
    v = np.array([1.0 + 0j])
    for x in digits:
        e = np.zeros(d, dtype=complex)
        e[x % d] = 1.0
        v = np.kron(v, e)
    return v


def fourier(d):
    """F = d^-1/2 sum_{j,k} xi^{kj} |j><k|."""
    F = np.zeros((d, d), dtype=complex)
    for j in range(d):
        for k in range(d):
            F[j, k] = xi(d) ** (j * k) / np.sqrt(d)
    return F


def shift(d, t):
    X = np.zeros((d, d), dtype=complex)
    for j in range(d):
        X[(j + t) % d, j] = 1.0
    return X


def clock(d, t):
    return np.diag([xi(d) ** (j * t) for j in range(d)])


def embed(d, n, pos, M):
    """M acting on qudit ``pos`` of an n-qudit register."""
    out = np.array([[1.0 + 0j]])
    for p in range(n):
        out = np.kron(out, M if p == pos else np.eye(d))
    return out


def bell(d, r, w):
    """d^-1/2 sum_j xi^{jr} |j, j + w>."""
    return sum(xi(d) ** (j * r) * ket(d, (j, j + w)) for j in range(d)) / np.sqrt(d)


def cat(d, v, us):
    """d^-1/2 sum_j xi^{jv} |j, j + u_1, ..., j + u_n>."""
    return sum(
        xi(d) ** (j * v) * ket(d, (j,) + tuple(j + u for u in us)) for j in range(d)
    ) / np.sqrt(d)


def permutation_matrix(d, n, order):
    """P with P |x_0 .. x_{n-1}> = |x_order[0] .. x_order[n-1]>."""
    size = d**n
    P = np.zeros((size, size))
    for digits in itertools.product(range(d), repeat=n):
        src = np.ravel_multi_index(digits, (d,) * n)
        dst = np.ravel_multi_index(tuple(digits[o] for o in order), (d,) * n)
        P[dst, src] = 1.0
    return P


def project(psi, d, n, positions, vec):
    """(<vec| on ``positions``) x I on the rest, applied to psi."""
    rest = [p for p in range(n) if p not in positions]
    moved = permutation_matrix(d, n, list(positions) + rest) @ psi
    k = len(positions)
    bra = np.kron(vec.conj()[None, :], np.eye(d ** (n - k)))
    return bra @ moved


def outcome_probability(psi, d, n, positions, vec):
    return float(np.linalg.norm(project(psi, d, n, positions, vec)) ** 2)


def quditwise_probabilities(psi, d, n, basis):
    """Outcome distribution of measuring every qudit in B1 or B2.

    B2 outcome j on one qudit is the projection onto F^dagger|j>.
    """
    probs = np.zeros(d**n)
    for digits in itertools.product(range(d), repeat=n):
        if basis == "B1":
            vec = ket(d, digits)
        else:
            vec = np.array([1.0 + 0j])
            for x in digits:
                vec = np.kron(vec, fourier(d).conj().T @ ket(d, (x,)))
        probs[np.ravel_multi_index(digits, (d,) * n)] = abs(np.vdot(vec, psi)) ** 2
    return probs


def intercept_failure_probability(d):
    """Per-sample Detection-2 failure after a B1 measure-resend on t.

    The check basis is B1 or B2 with probability 1/2 each.  Computed from
    the post-attack density matrix of the (h, t) pair.
    """
    phi = bell(d, 0, 0)
    rho = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        proj = np.kron(np.eye(d), np.outer(ket(d, (k,)), ket(d, (k,))))
        branch = proj @ phi
        rho += np.outer(branch, branch.conj())
    fail = 0.0
    for basis in ("B1", "B2"):
        for a0, a1 in itertools.product(range(d), repeat=2):
            if basis == "B1":
                vec, ok = ket(d, (a0, a1)), a0 == a1
            else:
                Fd = fourier(d).conj().T
                vec, ok = np.kron(Fd @ ket(d, (a0,)), Fd @ ket(d, (a1,))), (a0 + a1) % d == 0
            if not ok:
                fail += 0.5 * float(np.real(vec.conj() @ rho @ vec))
    return fail


def cat_intercept_failure_probability(d, n, v, u, index):
    """Per-sample Detection-1 failure after a B1 measure-resend on one cat qudit.

    A sample fails when the all-qudit outcome lies outside the honest
    state's support; the check basis is B1 or B2 with probability 1/2.
    """
    k = n + 1
    psi = cat(d, v, [u] * n)
    fail = 0.0
    for basis in ("B1", "B2"):
        honest = quditwise_probabilities(psi, d, k, basis) > 1e-12
        for j in range(d):
            proj = embed(d, k, index, np.outer(ket(d, (j,)), ket(d, (j,))))
            branch = proj @ psi
            weight = float(np.linalg.norm(branch) ** 2)
            if weight < 1e-15:
                continue
            after = quditwise_probabilities(branch / math.sqrt(weight), d, k, basis)
            fail += 0.5 * weight * float(after[~honest].sum())
    return fail


def attacked_pair_failure(d, U, ancilla_dim):
    """Per-sample failure in B1, B2 and averaged, for U on (t, ancilla)."""
    phi = bell(d, 0, 0)
    anc0 = np.zeros(ancilla_dim, dtype=complex)
    anc0[0] = 1.0
    state = np.kron(np.eye(d), U) @ np.kron(phi, anc0)  # qudits h, t, ancilla
    out = {}
    Fd = fourier(d).conj().T
    for basis in ("B1", "B2"):
        fail = 0.0
        for a0, a1 in itertools.product(range(d), repeat=2):
            if basis == "B1":
                vec, ok = ket(d, (a0, a1)), a0 == a1
            else:
                vec, ok = np.kron(Fd @ ket(d, (a0,)), Fd @ ket(d, (a1,))), (a0 + a1) % d == 0
            if not ok:
                bra = np.kron(vec.conj()[None, :], np.eye(ancilla_dim))
                fail += float(np.linalg.norm(bra @ state) ** 2)
        out[basis] = fail
    out["random"] = 0.5 * (out["B1"] + out["B2"])
    return out


def swap_branch_probabilities(d, v, u, bells):
    """Brute-force joint distribution of the parties' Bell outcomes.

    Builds the full cat (x) Bell^n vector with qudit order
    s0, s1..sn, h1, t1, ..., hn, tn and projects every (h_i, s_i) pair onto
    every |Phi(a, b)>.  Returns {((a1, b1), ..., (an, bn)): probability}.
    Only feasible for tiny d and n.
    """
    n = len(bells)
    psi = cat(d, v, [u] * n)
    for r, w in bells:
        psi = np.kron(psi, bell(d, r, w))
    total = (n + 1) + 2 * n
    positions = []
    for i in range(n):
        positions += [n + 1 + 2 * i, 1 + i]  # (h_i, s_i)
    result = {}
    for labels in itertools.product(itertools.product(range(d), repeat=2), repeat=n):
        vec = np.array([1.0 + 0j])
        for a, b in labels:
            vec = np.kron(vec, bell(d, a, b))
        p = outcome_probability(psi, d, total, positions, vec)
        if p > 1e-12:
            result[labels] = p
    return result


def swap_remainder(d, v, u, bells, labels):
    """Normalised state of (s0, t1, .., tn) after the parties see ``labels``."""
    n = len(bells)
    psi = cat(d, v, [u] * n)
    for r, w in bells:
        psi = np.kron(psi, bell(d, r, w))
    positions = []
    for i in range(n):
        positions += [n + 1 + 2 * i, 1 + i]
    vec = np.array([1.0 + 0j])
    for a, b in labels:
        vec = np.kron(vec, bell(d, a, b))
    rest = project(psi, d, (n + 1) + 2 * n, positions, vec)
    return rest / np.linalg.norm(rest)
