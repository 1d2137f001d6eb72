import os
import subprocess
import sys

import numpy as np
import pytest

from qpyramid import _kernels
from qpyramid.geometry import pyramid_from_nr0, signal_states
from qpyramid.optimizer import AscentConfig, _Ensemble, steepest_ascent_ims

needs_numba = pytest.mark.skipif(_kernels.numba is None, reason="numba not installed")


def start(n, k, seed):
    return _kernels.polar_numpy(np.random.default_rng(seed).standard_normal((k, n)))


def run(ens, b0, use_numba, iters=400):
    history = np.zeros(iters + 1)
    b, info, n_iter, status = _kernels.ascend_kernel(
        b0, ens.psi, ens.c, ens.owner, ens.n_states, ens.precond, iters, 1e-15, history, use_numba)
    return b, info, history[: n_iter + 1], status


def test_polar_is_isometry():
    b = start(4, 9, 1)
    assert np.allclose(b.T @ b, np.eye(4), atol=1e-13)
    if _kernels.numba is not None:
        assert np.allclose(_kernels.polar_numba(np.random.default_rng(1).standard_normal((9, 4))), b, atol=1e-12)


def test_evaluate_matches_joint():
    ens = _Ensemble(*signal_states(pyramid_from_nr0(3, 0.4)))
    b = start(3, 6, 2)
    info, logs, _ = ens.evaluate(b)
    x = b @ ens.psi.T
    p = ens.onehot @ (ens.c[None, :] * x * x).T
    pj, pk = p.sum(1), p.sum(0)
    assert info == pytest.approx(float(np.sum(p * np.log2(p / np.outer(pj, pk)))), abs=1e-14)


@needs_numba
@pytest.mark.parametrize("n, nr0", [(3, 0.05), (4, 0.5), (5, 3.0)])
def test_numba_agrees_with_numpy(n, nr0):
    ens = _Ensemble(*signal_states(pyramid_from_nr0(n, nr0)))
    b0 = start(n, n * (n + 1) // 2, n)
    # trajectories separate slowly through roundoff, limits coincide
    _, i_np, h_np, _ = run(ens, b0, False, iters=20000)
    _, i_nb, h_nb, _ = run(ens, b0, True, iters=20000)
    m = min(len(h_np), len(h_nb), 20)
    assert np.allclose(h_np[:m], h_nb[:m], atol=1e-10)
    assert i_np == pytest.approx(i_nb, abs=1e-10)


@pytest.mark.parametrize("use_numba", [False, pytest.param(True, marks=needs_numba)])
def test_kernel_monotone(use_numba):
    ens = _Ensemble(*signal_states(pyramid_from_nr0(4, 0.01)))
    _, info, history, status = run(ens, start(4, 10, 3), use_numba, iters=3000)
    assert np.all(np.diff(history) >= -1e-12)
    assert status in (_kernels.CONVERGED, _kernels.STATIONARY, _kernels.STEP_UNDERFLOW, _kernels.MAX_ITER)


@needs_numba
def test_oracle_paths_agree():
    states, priors = signal_states(pyramid_from_nr0(3, 0.1))
    cfg = AscentConfig(restarts=2, rng_seed=9)
    _, fast = steepest_ascent_ims(states, priors, 6, cfg, use_numba=True)
    _, slow = steepest_ascent_ims(states, priors, 6, cfg, use_numba=False)
    assert fast == pytest.approx(slow, abs=1e-9)


def test_env_flag_disables_numba():
    env = dict(os.environ, QPYRAMID_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from qpyramid import _kernels; print(_kernels.USE_NUMBA)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "False"
