"""Dense amplitude kernels.

Every kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version.  The numba path is used unless ``QSMS_DISABLE_NUMBA`` is set to a
truthy value (or numba is not importable).  Both paths take and return
C-contiguous ``complex128`` arrays with the same shapes, so the benchmark
and the test-suite can call either one directly.

Array conventions
-----------------
``apply_single``       psi of shape (L, d, R), matrix (d, d)
``bell_coefficients``  psi of shape (d, d, M) -> (d, d, M) indexed [r, w, m]
``cat_coefficients``   psi of shape (d**k, M) -> (d**k, M) indexed [label, m]
"""

import os

import numpy as np

_FLAG = os.environ.get("QSMS_DISABLE_NUMBA", "").strip().lower()
DISABLE_NUMBA = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda func: func


USE_NUMBA = NUMBA_AVAILABLE and not DISABLE_NUMBA
BACKEND = "numba" if USE_NUMBA else "numpy"


# =============================================================================
# numpy implementations
# =============================================================================

def apply_single_numpy(psi, matrix):
    return np.ascontiguousarray(np.einsum("ij,ljr->lir", matrix, psi))


def bell_coefficients_numpy(psi, d):
    j = np.arange(d)
    # gathered[j, w, m] = psi[j, j+w, m]
    gathered = psi[j[:, None], (j[:, None] + j[None, :]) % d]
    phase = np.exp(-2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)  # [r, j]
    return np.ascontiguousarray(np.einsum("rj,jwm->rwm", phase, gathered))


def _cat_gather_index(d, k):
    """index[j, s] = flat position of |j, j+s_2, ..., j+s_k> for shift word s."""
    shifts = np.indices((d,) * (k - 1)).reshape(k - 1, -1)  # (k-1, d**(k-1))
    j = np.arange(d)[:, None]
    index = np.broadcast_to(j, (d, shifts.shape[1])).copy()
    for p in range(k - 1):
        index = index * d + (j + shifts[p][None, :]) % d
    return index


def cat_coefficients_numpy(psi, d, k):
    index = _cat_gather_index(d, k)
    gathered = psi[index]  # (j, shifts, M)
    j = np.arange(d)
    phase = np.exp(-2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)  # [v, j]
    out = np.einsum("vj,jsm->vsm", phase, gathered)
    return np.ascontiguousarray(out.reshape(d ** k, psi.shape[1]))


# =============================================================================
# numba implementations
# =============================================================================

@njit(cache=True)
def apply_single_numba(psi, matrix):
    L, d, R = psi.shape
    out = np.zeros_like(psi)
    for a in range(L):
        for i in range(d):
            for j in range(d):
                c = matrix[i, j]
                if c == 0:
                    continue
                for b in range(R):
                    out[a, i, b] += c * psi[a, j, b]
    return out


@njit(cache=True)
def _phase_table(d):
    table = np.empty(d, dtype=np.complex128)
    for t in range(d):
        table[t] = np.exp(-2j * np.pi * t / d)
    return table


@njit(cache=True)
def bell_coefficients_numba(psi, d):
    M = psi.shape[2]
    out = np.zeros((d, d, M), dtype=np.complex128)
    phase = _phase_table(d)
    norm = 1.0 / np.sqrt(d)
    for r in range(d):
        for w in range(d):
            for j in range(d):
                c = phase[(j * r) % d] * norm
                col = (j + w) % d
                for m in range(M):
                    out[r, w, m] += c * psi[j, col, m]
    return out


@njit(cache=True)
def cat_coefficients_numba(psi, d, k):
    M = psi.shape[1]
    n_shift = d ** (k - 1)
    out = np.zeros((d * n_shift, M), dtype=np.complex128)
    phase = _phase_table(d)
    norm = 1.0 / np.sqrt(d)
    digits = np.zeros(k - 1, dtype=np.int64)
    for s in range(n_shift):
        rem = s
        for p in range(k - 2, -1, -1):
            digits[p] = rem % d
            rem //= d
        for j in range(d):
            idx = j
            for p in range(k - 1):
                idx = idx * d + (j + digits[p]) % d
            for v in range(d):
                c = phase[(j * v) % d] * norm
                for m in range(M):
                    out[v * n_shift + s, m] += c * psi[idx, m]
    return out


if USE_NUMBA:
    apply_single = apply_single_numba
    bell_coefficients = bell_coefficients_numba
    cat_coefficients = cat_coefficients_numba
else:
    apply_single = apply_single_numpy
    bell_coefficients = bell_coefficients_numpy
    cat_coefficients = cat_coefficients_numpy
