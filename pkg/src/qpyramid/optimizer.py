"""Numerical searches: the obtuse lift value, SRM thresholds, an
independent accessible-information ascent, and parameter sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .geometry import DomainError, PyramidParams, make_pyramid, pyramid_from_nr0
from .information import (
    failure_probability,
    lifted_info,
    mud_failure,
    scheme_info,
    srm_info,
)
from .measurement import Pom, Scheme, scheme_spec, validate_pom

# eigenvalues of rho below this fraction of the largest are outside its support
SUPPORT_TOL = 1e-12
# t_star above 1 + this counts as leaving the square-root measurement
T_DETECT = 1e-6
_GRID_POINTS = 400
_T_CAP = 1e100


class ConvergenceError(RuntimeError):
    """No restart of the ascent produced a valid POM."""


# --------------------------------------------------------------------------
# lift value of the obtuse information-maximizing POM


def _obtuse_curve(n: int, r0: float, t):
    """Information of the obtuse family (``w1 = 0``, ``w2 = 1/t^2``) as a function of ``t``."""
    t = np.asarray(t, dtype=float)
    w2 = 1.0 / (t * t)
    diff = (1.0 - r0) * math.log2(n / 2.0) if n > 2 else 0.0
    return w2 * lifted_info(n, r0, t) + (1.0 - w2) * diff


def t_upper_bound(params: PyramidParams) -> float:
    """``10 / sqrt(N r0)``, capped so that ``t^2`` stays finite for subnormal ``r0``."""
    return min(10.0 / math.sqrt(params.n * params.r0), _T_CAP)


def optimize_t_obtuse(params: PyramidParams) -> tuple[float, float]:
    """Lift value ``t >= 1`` maximizing the information of the obtuse family.

    A log-spaced grid on ``[1, 10/sqrt(N r0)]`` brackets the maximum, which
    is then refined with bounded Brent search.  The flat pyramid returns
    ``t = inf`` (pure difference outcomes) whenever that beats ``t = 1``.

    Returns ``(t_star, info_bits)``.
    """
    n, r0 = params.n, params.r0
    if params.is_acute:
        raise DomainError("the obtuse lift search needs r0 <= r1")
    at_one = float(_obtuse_curve(n, r0, 1.0))
    if params.is_flat:
        diff = math.log2(n / 2.0) if n > 2 else 0.0
        return (math.inf, diff) if diff > at_one else (1.0, at_one)
    if params.is_orthogonal:
        return 1.0, at_one
    grid = np.geomspace(1.0, t_upper_bound(params), _GRID_POINTS)
    values = _obtuse_curve(n, r0, grid)
    i = int(np.argmax(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda t: -float(_obtuse_curve(n, r0, t)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12, "maxiter": 500},
    )
    t_star, best = float(res.x), -float(res.fun)
    if values[i] > best:
        t_star, best = float(grid[i]), float(values[i])
    if best <= at_one:
        return 1.0, at_one
    return t_star, best


def threshold_bracket(n: int, width: float = 1e-5) -> tuple[float, float] | None:
    """Bracket ``(lo, hi)`` of the ``N r0`` below which the obtuse optimum leaves ``t = 1``.

    A log grid on ``N r0 in [1e-8, 1)`` locates the largest point with
    ``t_star > 1 + 1e-6``; bisection then narrows the bracket to ``width``.
    Returns ``None`` when ``t_star = 1`` across the whole grid.
    """
    if n < 3:
        raise DomainError("thresholds are defined for n >= 3")

    def leaves_srm(nr0):
        return optimize_t_obtuse(make_pyramid(n, nr0 / n))[0] > 1.0 + T_DETECT

    grid = np.geomspace(1e-8, 1.0, 81)[:-1]
    flags = [leaves_srm(x) for x in grid]
    if not any(flags):
        return None
    last = max(i for i, f in enumerate(flags) if f)
    lo = float(grid[last])
    hi = float(grid[last + 1]) if last + 1 < len(grid) else 1.0
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if leaves_srm(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def threshold_nr0(n: int, width: float = 1e-5) -> float | None:
    bracket = threshold_bracket(n, width)
    return None if bracket is None else 0.5 * (bracket[0] + bracket[1])


# --------------------------------------------------------------------------
# independent ascent over measurements


@dataclass(frozen=True)
class AscentConfig:
    """Controls for :func:`steepest_ascent_ims`.

    ``oversample`` sets how many rank-1 outcomes each restart starts with
    (``oversample * k_outcomes``) before parallel outcomes are merged down
    to ``k_outcomes``; ``hops`` is the number of merge-and-regrow escapes tried
    after each restart.
    """

    max_iterations: int = 20000
    info_tolerance: float = 1e-15
    completeness_tolerance: float = 1e-10
    restarts: int = 10
    rng_seed: int = 0
    oversample: int = 20
    hops: int = 2

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1 or self.oversample < 1 or self.hops < 0:
            raise ValueError("iteration, restart and oversample counts must be positive")
        if not (self.info_tolerance > 0 and self.completeness_tolerance > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class AscentRun:
    isometry: np.ndarray
    info: float
    history: np.ndarray
    status: int


class _Ensemble:
    """Signal states split into weighted eigen-components, plus the ascent preconditioner.

    Everything is expressed in an orthonormal basis of the support of the
    average state ``rho``; directions outside it are never triggered and
    are left to a separate null outcome.
    """

    def __init__(self, states, priors):
        states = np.asarray(states, dtype=float)
        priors = np.asarray(priors, dtype=float)
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
            raise ValueError("priors must be nonnegative with unit sum")
        self.full_dim = states.shape[1]
        rho = np.einsum("j,jab->ab", priors, states)
        w, v = np.linalg.eigh(0.5 * (rho + rho.T))
        keep = w > SUPPORT_TOL * w.max()
        self.basis = v[:, keep]
        w = np.maximum(w[keep], 1e-6 * w.max())
        self.precond = np.diag(1.0 / w)
        psi, c, owner = [], [], []
        for j, (st, pj) in enumerate(zip(states, priors)):
            lam, vec = np.linalg.eigh(0.5 * (st + st.T))
            for x, u in zip(lam, vec.T):
                if x > 1e-14 and pj > 0:
                    psi.append(u @ self.basis)
                    c.append(pj * x)
                    owner.append(j)
        self.psi = np.array(psi)
        self.c = np.array(c)
        self.owner = np.array(owner, dtype=np.int64)
        self.n_states = len(priors)
        self.dim = self.basis.shape[1]
        self.onehot = np.zeros((self.n_states, len(self.owner)))
        self.onehot[self.owner, np.arange(len(self.owner))] = 1.0

    @property
    def deficient(self) -> bool:
        return self.dim < self.full_dim

    def embed(self, b: np.ndarray) -> Pom:
        """Outcomes ``|b_k><b_k|`` in the full space, plus the null projector when needed."""
        kets = b @ self.basis.T
        ops = np.einsum("ka,kb->kab", kets, kets)
        labels = [f"outcome({k})" for k in range(1, len(b) + 1)]
        if self.deficient:
            ops = np.concatenate([ops, (np.eye(self.full_dim) - self.basis @ self.basis.T)[None]])
            labels.append("null")
        return Pom(labels, ops)

    def evaluate(self, b):
        return _kernels.evaluate_numpy(b, self.psi, self.c, self.onehot)


def ascend(ens: _Ensemble, b0: np.ndarray, config: AscentConfig, use_numba=None) -> AscentRun:
    """One monotone ascent run from the isometry ``b0``."""
    history = np.zeros(config.max_iterations + 1)
    b, info, n_iter, status = _kernels.ascend_kernel(
        b0, ens.psi, ens.c, ens.owner, ens.n_states, ens.precond,
        config.max_iterations, config.info_tolerance, history, use_numba,
    )
    return AscentRun(np.array(b), float(info), history[: n_iter + 1].copy(), int(status))


def _merge_pair(b: np.ndarray, k: int, l: int) -> np.ndarray:
    """Replace rows ``k, l`` by the dominant rank-1 part of ``b_k b_k^T + b_l b_l^T`` (row ``l`` dropped)."""
    w, v = np.linalg.eigh(np.outer(b[k], b[k]) + np.outer(b[l], b[l]))
    out = b.copy()
    out[k] = math.sqrt(max(w[-1], 0.0)) * v[:, -1]
    return np.delete(out, l, axis=0)


def _most_parallel(b: np.ndarray) -> tuple[int, int, float]:
    norms = np.linalg.norm(b, axis=1)
    unit = b / np.maximum(norms, 1e-300)[:, None]
    cos = np.abs(unit @ unit.T)
    np.fill_diagonal(cos, -1.0)
    k, l = np.unravel_index(int(np.argmax(cos)), cos.shape)
    return int(k), int(l), float(cos[k, l])


def compress(b: np.ndarray, k_outcomes: int) -> np.ndarray:
    """Reduce an isometry to ``k_outcomes`` rows by merging the most parallel rows."""
    while b.shape[0] > k_outcomes:
        norms = np.linalg.norm(b, axis=1)
        weakest = int(np.argmin(norms))
        if norms[weakest] ** 2 < 1e-12:
            b = np.delete(b, weakest, axis=0)
            continue
        k, l, _ = _most_parallel(b)
        b = _merge_pair(b, k, l)
    return _kernels.polar_numpy(b)


def _nearest_isometry(b: np.ndarray) -> np.ndarray:
    """Polar factor via the SVD; unlike the eigen form it tolerates rank deficiency."""
    u, _, vt = np.linalg.svd(b, full_matrices=False)
    return u @ vt


def regrow(ens: _Ensemble, b: np.ndarray, rng: np.random.Generator,
           freed: int | None = None, candidates: int = 256) -> np.ndarray:
    """Free one outcome and re-seed it as a small ket along the most promising direction.

    By default the freed outcome is the less weighty of the most parallel
    pair, or the weakest outcome when no pair is nearly parallel; ``freed``
    picks it explicitly.  Candidate directions are scored by the
    second-order information gain of adding them.
    """
    b = b.copy()
    if freed is not None:
        l = int(freed)
        b[l] = 0.0
    else:
        k, l, cos = _most_parallel(b)
        if cos > 0.99:
            merged = _merge_pair(b, k, l)
            b = np.insert(merged, min(l, merged.shape[0]), 0.0, axis=0)
        else:
            l = int(np.argmin(np.linalg.norm(b, axis=1)))
            b[l] = 0.0
    b = _nearest_isometry(b)
    _, logs, x = ens.evaluate(b)
    r_weights = logs[ens.owner] * ens.c[:, None]  # (M, K)
    lam = np.einsum("ka,km,mb,mk->ab", b, x, ens.psi, r_weights)
    lam = 0.5 * (lam + lam.T)
    v = rng.standard_normal((candidates, ens.dim))
    v /= np.linalg.norm(v, axis=1)[:, None]
    q = (v @ ens.psi.T) ** 2 * ens.c[None, :]  # (V, M)
    q = q @ ens.onehot.T  # (V, J)
    prior = ens.onehot @ ens.c
    qs = q.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(q > 0, q * np.log2(q / (prior[None, :] * qs)), 0.0).sum(axis=1)
    score = gain - np.einsum("va,ab,vb->v", v, lam, v)
    b[l] = 1e-3 * v[int(np.argmax(score))]
    return _nearest_isometry(b)


def _one_restart(ens: _Ensemble, k_outcomes: int, config: AscentConfig, seed, use_numba):
    rng = np.random.default_rng(seed)
    k_search = max(k_outcomes, config.oversample * k_outcomes)
    b0 = _kernels.polar_numpy(rng.standard_normal((k_search, ens.dim)))
    first = ascend(ens, b0, config, use_numba)
    best = ascend(ens, compress(first.isometry, k_outcomes), config, use_numba)
    for hop in range(config.hops):
        # alternate between the structural choice and a random outcome
        freed = None if hop % 2 == 0 else int(rng.integers(k_outcomes))
        trial = ascend(ens, regrow(ens, best.isometry, rng, freed), config, use_numba)
        if trial.info > best.info:
            best = trial
    return best


def steepest_ascent_ims(
    states,
    priors,
    k_outcomes: int,
    config: AscentConfig | None = None,
    threads: int = 1,
    use_numba=None,
) -> tuple[Pom, float]:
    """Search for the information-maximizing POM with rank-1 outcomes.

    Each restart starts from a random isometry drawn from the seeded
    generator, climbs with preconditioned steepest ascent (step lengths by
    the Barzilai-Borwein rule, every step checked to increase the mutual
    information), merges parallel outcomes down to ``k_outcomes`` and
    tries a few merge-and-regrow escapes from local maxima.  Outcomes are
    ``b_k b_k^T`` with ``B^T B = 1``, so every iterate is a valid POM.

    When the states do not span the whole space, the search runs on their
    support with ``k_outcomes - 1`` rank-1 outcomes and the projector on
    the complement is returned as a last outcome labeled ``"null"``.

    Returns the best POM over all restarts and its information in bits.

    Raises
    ------
    ConvergenceError
        If no restart yields a POM within ``config.completeness_tolerance``.
    """
    config = config or AscentConfig()
    ens = _Ensemble(states, priors)
    if k_outcomes < ens.n_states:
        raise ValueError("need at least as many outcomes as states")
    # one outcome is spent on the complement of the support
    k_search = k_outcomes - 1 if ens.deficient else k_outcomes
    if k_search < ens.dim:
        raise ValueError("too few outcomes to span the support of the states")
    seeds = np.random.SeedSequence(config.rng_seed).spawn(config.restarts)

    def task(seed):
        return _one_restart(ens, k_search, config, seed, use_numba)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(task, seeds))
    else:
        runs = [task(s) for s in seeds]

    best_pom, best_info = None, -math.inf
    for run in runs:
        if not np.all(np.isfinite(run.isometry)):
            continue
        pom = ens.embed(run.isometry)
        resid = validate_pom(pom).completeness_residual
        if resid <= config.completeness_tolerance and run.info > best_info:
            best_pom, best_info = pom, run.info
    if best_pom is None:
        raise ConvergenceError("no restart met the completeness tolerance")
    return best_pom, best_info


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    n: int
    nr0: float
    scheme: str
    info_bits: float
    srm_info_bits: float
    ratio_to_srm: float
    t_opt: float
    failure_prob: float

    FIELDS = ("n", "nr0", "scheme", "info_bits", "srm_info_bits", "ratio", "t_opt", "failure_prob")

    def as_record(self) -> list:
        return [self.n, self.nr0, self.scheme, self.info_bits, self.srm_info_bits,
                self.ratio_to_srm, self.t_opt, self.failure_prob]


def sweep_point(n: int, nr0: float, scheme: Scheme | str) -> SweepRow:
    """One sweep row.  ``t_opt`` and ``failure_prob`` are NaN where a scheme leaves them undefined."""
    scheme = Scheme(scheme)
    params = pyramid_from_nr0(n, nr0)
    info = scheme_info(params, scheme)
    base = srm_info(params)
    ratio = info / base if base > 0.0 else math.nan
    t_opt, failure = math.nan, math.nan
    if scheme in (Scheme.MUD, Scheme.MUD_REFINED):
        failure = mud_failure(params)
        if 0.0 < params.r0 < 1.0:
            t_opt = scheme_spec(params, scheme).t
    else:
        spec = scheme_spec(params, scheme)
        t_opt, failure = spec.t, failure_probability(params, spec)
    return SweepRow(n, float(nr0), scheme.value, info, base, ratio, t_opt, failure)


def sweep(n: int, nr0_grid, schemes, threads: int = 1) -> list[SweepRow]:
    """Rows for every ``(grid point, scheme)`` pair, grid-major and scheme-minor."""
    tasks = [(float(x), Scheme(s)) for x in nr0_grid for s in schemes]
    for x, _ in tasks:
        if not 0.0 <= x <= n:
            raise DomainError(f"N*r0 = {x!r} outside [0, {n}]")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda a: sweep_point(n, *a), tasks))
    return [sweep_point(n, x, s) for x, s in tasks]
