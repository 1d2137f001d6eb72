"""Inner loop of the mutual-information ascent, in numba and in plain numpy.

The measurement is a real isometry ``B`` (``K x d``, ``B^T B = 1``) whose rows
``b_k`` give rank-1 outcomes ``b_k b_k^T``.  Signal states enter as weighted
components: row ``m`` of ``psi`` is an eigenvector of state ``owner[m]`` and
``c[m]`` is the prior times its eigenvalue, so ``p_jk = sum_{m in j} c_m (b_k.psi_m)^2``.

Set ``QPYRAMID_DISABLE_NUMBA=1`` to force the numpy path.  Both paths run the
same algorithm and agree to roundoff.
"""
from __future__ import annotations

import math
import os

import numpy as np

DISABLE_ENV = "QPYRAMID_DISABLE_NUMBA"

# return codes of the ascent kernels
CONVERGED, STATIONARY, STEP_UNDERFLOW, MAX_ITER = 0, 1, 2, 3

_GTOL = 1e-28
# the gain compared against the tolerance is averaged over this many steps
GAIN_WINDOW = 25
_EPS_MIN, _EPS_MAX = 1e-14, 1e8


def numba_requested() -> bool:
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and numba_requested()


# --------------------------------------------------------------------------
# numpy path


def polar_numpy(y):
    w, v = np.linalg.eigh(y.T @ y)
    return y @ ((v / np.sqrt(w)) @ v.T)


def evaluate_numpy(b, psi, c, onehot):
    """Return ``(info, logs, x)`` with ``logs[j, k] = log2(p_jk / (p_j p_k))`` (0 where ``p_jk = 0``)."""
    x = b @ psi.T
    p = onehot @ (c[None, :] * x * x).T
    pj = p.sum(axis=1, keepdims=True)
    pk = p.sum(axis=0, keepdims=True)
    logs = np.zeros_like(p)
    nz = p > 0.0
    logs[nz] = np.log2(p[nz] / (pj * pk)[nz])
    return float(np.sum(p * logs)), logs, x


def direction_numpy(b, psi, c, owner, logs, x, precond):
    grad = 2.0 * ((logs[owner].T * c[None, :]) * x) @ psi
    m = b.T @ grad
    g = grad - b @ (0.5 * (m + m.T))
    d = g @ precond
    return d, float(np.sum(g * d))


def ascend_numpy(b, psi, c, owner, n_states, precond, max_iter, tol, history):
    onehot = np.zeros((n_states, len(owner)))
    onehot[owner, np.arange(len(owner))] = 1.0
    info, logs, x = evaluate_numpy(b, psi, c, onehot)
    history[0] = info
    eps = 0.1
    b_prev = d_prev = None
    for it in range(max_iter):
        d, gn = direction_numpy(b, psi, c, owner, logs, x, precond)
        if gn < _GTOL:
            return b, info, it, STATIONARY
        if b_prev is not None:
            s = b - b_prev
            sy = float(np.sum(s * (d_prev - d)))
            if sy > 0.0:
                eps = min(max(float(np.sum(s * s)) / sy, _EPS_MIN), _EPS_MAX)
        while True:
            b_new = polar_numpy(b + eps * d)
            info_new, logs_new, x_new = evaluate_numpy(b_new, psi, c, onehot)
            if info_new >= info:
                break
            eps *= 0.5
            if eps < _EPS_MIN:
                return b, info, it, STEP_UNDERFLOW
        b_prev, d_prev = b, d
        b, info, logs, x = b_new, info_new, logs_new, x_new
        history[it + 1] = info
        if it + 1 >= GAIN_WINDOW and (info - history[it + 1 - GAIN_WINDOW]) / GAIN_WINDOW < tol:
            return b, info, it + 1, CONVERGED
    return b, info, max_iter, MAX_ITER


# --------------------------------------------------------------------------
# numba path

if numba is not None:
    _jit = numba.njit(cache=True, nogil=True)

    @_jit
    def polar_numba(y):
        w, v = np.linalg.eigh(y.T @ y)
        for i in range(w.shape[0]):
            s = 1.0 / math.sqrt(w[i])
            for a in range(v.shape[0]):
                v[a, i] *= math.sqrt(s)
        return y @ (v @ v.T)

    @_jit
    def evaluate_numba(b, psi_t, c, owner, n_states, p, logs, x):
        k_out = b.shape[0]
        n_comp = psi_t.shape[1]
        x[:, :] = b @ psi_t
        p[:, :] = 0.0
        for k in range(k_out):
            for m in range(n_comp):
                p[owner[m], k] += c[m] * x[k, m] * x[k, m]
        pj = np.zeros(n_states)
        pk = np.zeros(k_out)
        for j in range(n_states):
            for k in range(k_out):
                pj[j] += p[j, k]
                pk[k] += p[j, k]
        info = 0.0
        for j in range(n_states):
            for k in range(k_out):
                if p[j, k] > 0.0:
                    logs[j, k] = math.log2(p[j, k] / (pj[j] * pk[k]))
                    info += p[j, k] * logs[j, k]
                else:
                    logs[j, k] = 0.0
        return info

    @_jit
    def direction_numba(b, psi, c, owner, logs, x, precond):
        k_out, dim = b.shape
        w = np.empty((k_out, psi.shape[0]))
        for k in range(k_out):
            for m in range(psi.shape[0]):
                w[k, m] = 2.0 * logs[owner[m], k] * c[m] * x[k, m]
        grad = w @ psi
        m_ = b.T @ grad
        sym = 0.5 * (m_ + m_.T)
        g = grad - b @ sym
        d = g @ precond
        gn = 0.0
        for k in range(k_out):
            for a in range(dim):
                gn += g[k, a] * d[k, a]
        return d, gn

    @_jit
    def ascend_numba(b, psi, c, owner, n_states, precond, max_iter, tol, history):
        psi_t = np.ascontiguousarray(psi.T)
        k_out = b.shape[0]
        n_comp = psi.shape[0]
        p = np.empty((n_states, k_out))
        logs = np.empty((n_states, k_out))
        x = np.empty((k_out, n_comp))
        p_new = np.empty((n_states, k_out))
        logs_new = np.empty((n_states, k_out))
        x_new = np.empty((k_out, n_comp))
        info = evaluate_numba(b, psi_t, c, owner, n_states, p, logs, x)
        history[0] = info
        eps = 0.1
        b_prev = b.copy()
        d_prev = np.zeros_like(b)
        b_new = b.copy()
        for it in range(max_iter):
            d, gn = direction_numba(b, psi, c, owner, logs, x, precond)
            if gn < _GTOL:
                return b, info, it, STATIONARY
            if it > 0:
                ss = 0.0
                sy = 0.0
                for k in range(k_out):
                    for a in range(b.shape[1]):
                        s = b[k, a] - b_prev[k, a]
                        ss += s * s
                        sy += s * (d_prev[k, a] - d[k, a])
                if sy > 0.0:
                    eps = min(max(ss / sy, _EPS_MIN), _EPS_MAX)
            while True:
                b_new = polar_numba(b + eps * d)
                info_new = evaluate_numba(b_new, psi_t, c, owner, n_states, p_new, logs_new, x_new)
                if info_new >= info:
                    break
                eps *= 0.5
                if eps < _EPS_MIN:
                    return b, info, it, STEP_UNDERFLOW
            b_prev = b
            d_prev = d
            b = b_new
            info = info_new
            logs[:, :] = logs_new
            x[:, :] = x_new
            history[it + 1] = info
            if it + 1 >= GAIN_WINDOW and (info - history[it + 1 - GAIN_WINDOW]) / GAIN_WINDOW < tol:
                return b, info, it + 1, CONVERGED
        return b, info, max_iter, MAX_ITER
else:  # pragma: no cover
    ascend_numba = None


def ascend_kernel(b, psi, c, owner, n_states, precond, max_iter, tol, history, use_numba=None):
    """Monotone preconditioned steepest ascent from the isometry ``b``.

    Returns ``(b, info, n_iter, status)``; ``history[:n_iter + 1]`` holds the
    information after each accepted step.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    args = (
        np.ascontiguousarray(b, dtype=np.float64),
        np.ascontiguousarray(psi, dtype=np.float64),
        np.ascontiguousarray(c, dtype=np.float64),
        np.ascontiguousarray(owner, dtype=np.int64),
        int(n_states),
        np.ascontiguousarray(precond, dtype=np.float64),
        int(max_iter),
        float(tol),
        history,
    )
    if use_numba:
        if ascend_numba is None:
            raise RuntimeError("numba is not available")
        return ascend_numba(*args)
    return ascend_numpy(*args)
