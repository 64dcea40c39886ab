"""Hot inner loops with a numba path and a pure-numpy path.

The two implementations of each kernel compute the same quantity; which
one runs is decided per call by :func:`nogocool.config.jit_enabled`
(``NOGO_COOL_DISABLE_JIT=1`` selects numpy). Tests exercise both paths
directly regardless of the flag.
"""

from __future__ import annotations

import numpy as np

from .config import jit_enabled

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


# --------------------------------------------------------------------------
# ground-block population of many rotated states
# --------------------------------------------------------------------------


def ground_populations_numpy(w: np.ndarray, probs: np.ndarray, n_ground: int) -> np.ndarray:
    """``sum_{i < n_ground} sum_k |w[s, i, k]|^2 probs[k]`` for every sample ``s``.

    ``w`` holds unitaries already expressed in the eigenbasis of the initial
    state, whose eigenvalues are ``probs``.
    """
    block = w[:, :n_ground, :]
    return np.einsum("sik,k->s", block.real**2 + block.imag**2, probs)


@njit(cache=True)
def ground_populations_numba(w, probs, n_ground):
    n_samples, _, dim = w.shape
    out = np.empty(n_samples)
    for s in range(n_samples):
        acc = 0.0
        for i in range(n_ground):
            for k in range(dim):
                z = w[s, i, k]
                acc += (z.real * z.real + z.imag * z.imag) * probs[k]
        out[s] = acc
    return out


def ground_populations(w: np.ndarray, probs: np.ndarray, n_ground: int) -> np.ndarray:
    w = np.ascontiguousarray(w, dtype=np.complex128)
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    if jit_enabled() and HAVE_NUMBA:
        return ground_populations_numba(w, probs, int(n_ground))
    return ground_populations_numpy(w, probs, int(n_ground))


# --------------------------------------------------------------------------
# fixed-step RK4 for the Lindblad equation
# --------------------------------------------------------------------------


def _lindblad_rhs_numpy(rho, h, ls, ldag, ldl, rates):
    out = -1j * (h @ rho - rho @ h)
    if rates.size:
        jump = ls @ rho[None, :, :] @ ldag
        anti = ldl @ rho[None, :, :] + rho[None, :, :] @ ldl
        out = out + np.einsum("a,aij->ij", rates, jump - 0.5 * anti)
    return out


def lindblad_rk4_numpy(rho, h, ls, rates, dt, n_steps):
    """Advance ``rho`` by ``n_steps`` RK4 steps of size ``dt``.

    The trace is reset to 1 after every step. Returns the final state and the
    largest trace correction applied.
    """
    rho = np.array(rho, dtype=np.complex128)
    ldag = np.conj(np.transpose(ls, (0, 2, 1)))
    ldl = ldag @ ls
    worst = 0.0
    for _ in range(n_steps):
        k1 = _lindblad_rhs_numpy(rho, h, ls, ldag, ldl, rates)
        k2 = _lindblad_rhs_numpy(rho + 0.5 * dt * k1, h, ls, ldag, ldl, rates)
        k3 = _lindblad_rhs_numpy(rho + 0.5 * dt * k2, h, ls, ldag, ldl, rates)
        k4 = _lindblad_rhs_numpy(rho + dt * k3, h, ls, ldag, ldl, rates)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tr = np.trace(rho).real
        worst = max(worst, abs(tr - 1.0))
        rho = rho / tr
    return rho, worst


@njit(cache=True)
def _lindblad_rhs_numba(rho, h, ls, ldag, ldl, rates):
    out = -1j * (np.dot(h, rho) - np.dot(rho, h))
    for a in range(rates.shape[0]):
        g = rates[a]
        if g == 0.0:
            continue
        jump = np.dot(np.dot(ls[a], rho), ldag[a])
        anti = np.dot(ldl[a], rho) + np.dot(rho, ldl[a])
        out += g * (jump - 0.5 * anti)
    return out


@njit(cache=True)
def lindblad_rk4_numba(rho, h, ls, rates, dt, n_steps):
    n_ops = ls.shape[0]
    dim = rho.shape[0]
    ldag = np.empty_like(ls)
    ldl = np.empty_like(ls)
    for a in range(n_ops):
        ldag[a] = np.ascontiguousarray(np.conj(ls[a]).T)
        ldl[a] = np.dot(ldag[a], ls[a])
    rho = rho.copy()
    worst = 0.0
    for _ in range(n_steps):
        k1 = _lindblad_rhs_numba(rho, h, ls, ldag, ldl, rates)
        k2 = _lindblad_rhs_numba(rho + 0.5 * dt * k1, h, ls, ldag, ldl, rates)
        k3 = _lindblad_rhs_numba(rho + 0.5 * dt * k2, h, ls, ldag, ldl, rates)
        k4 = _lindblad_rhs_numba(rho + dt * k3, h, ls, ldag, ldl, rates)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tr = 0.0
        for i in range(dim):
            tr += rho[i, i].real
        dev = abs(tr - 1.0)
        if dev > worst:
            worst = dev
        rho = rho / tr
    return rho, worst


def lindblad_rk4(rho, h, ls, rates, dt, n_steps):
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    h = np.ascontiguousarray(h, dtype=np.complex128)
    ls = np.ascontiguousarray(ls, dtype=np.complex128)
    rates = np.ascontiguousarray(rates, dtype=np.float64)
    if ls.ndim != 3:
        ls = ls.reshape(0, rho.shape[0], rho.shape[0])
    if jit_enabled() and HAVE_NUMBA:
        return lindblad_rk4_numba(rho, h, ls, rates, float(dt), int(n_steps))
    return lindblad_rk4_numpy(rho, h, ls, rates, float(dt), int(n_steps))
