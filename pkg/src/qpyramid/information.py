"""Joint distributions, mutual information and closed-form information values.

All information values are in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PyramidParams
from .measurement import Pom, Scheme, SchemeSpec, ims_spec, mud_spec

# joint entries in (-CLAMP, 0) are roundoff and are set to zero
CLAMP = 1e-14


@dataclass(frozen=True)
class JointDistribution:
    """Joint probabilities ``p[j, k]`` of state ``j`` sent and outcome ``k`` seen."""

    p: np.ndarray

    @property
    def row_marginals(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def column_marginals(self) -> np.ndarray:
        return self.p.sum(axis=0)


def joint_probabilities(states, priors, pom: Pom) -> JointDistribution:
    """``p_jk = p_j Tr(rho_j Pi_k)``.

    Raises
    ------
    ValueError
        If an entry is negative beyond roundoff or the total is not one,
        which means the POM is invalid.
    """
    states = np.asarray(states, dtype=float)
    priors = np.asarray(priors, dtype=float)
    p = priors[:, None] * np.einsum("jab,kba->jk", states, pom.operators)
    if np.any(p < -CLAMP):
        raise ValueError(f"negative joint probability {p.min():.3g}; outcome not nonnegative")
    p = np.where(p < 0.0, 0.0, p)
    total = p.sum()
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"joint probabilities sum to {total!r}; POM incomplete")
    return JointDistribution(p)


def _log_ratio(p: np.ndarray) -> np.ndarray:
    """``log2(p_jk / (p_j. p_.k))`` with zeros where ``p_jk = 0``."""
    pj = p.sum(axis=1, keepdims=True)
    pk = p.sum(axis=0, keepdims=True)
    out = np.zeros_like(p)
    nz = p > 0.0
    out[nz] = np.log2(p[nz] / (pj * pk)[nz])
    return out


def mutual_information(joint: JointDistribution | np.ndarray) -> float:
    p = joint.p if isinstance(joint, JointDistribution) else np.asarray(joint, dtype=float)
    return max(0.0, float(np.sum(p * _log_ratio(p))))


def _xlog2x(x: float) -> float:
    return x * math.log2(x) if x > 0.0 else 0.0


def srm_info(params: PyramidParams) -> float:
    n, s0, s1 = params.n, math.sqrt(params.r0), math.sqrt(params.r1)
    return (_xlog2x((s0 + (n - 1) * s1) ** 2) + (n - 1) * _xlog2x((s0 - s1) ** 2)) / n


def srm_info_limit(params: PyramidParams, branch: str) -> float:
    """Small-volume approximations of :func:`srm_info`.

    ``branch="no_base"`` is the ``r1 << 1/N`` form, ``branch="flat"`` the
    ``r0 << 1/N`` form.
    """
    n = params.n
    if branch == "no_base":
        return (2 * n - 2) / math.log(2.0) * params.r1
    if branch == "flat":
        return math.log2(n - 1) / n * (n - 2 + 4 * math.sqrt((n - 1) * params.r0))
    raise ValueError(f"unknown branch {branch!r}")


def guess_odds(params: PyramidParams) -> float:
    """Probability that the square-root measurement names the right edge."""
    n = params.n
    return (math.sqrt(params.r0) + (n - 1) * math.sqrt(params.r1)) ** 2 / n


def mud_failure(params: PyramidParams) -> float:
    """Probability of the inconclusive outcome of unambiguous discrimination."""
    n = params.n
    if params.is_orthogonal:
        return 0.0
    if params.r0 > 1.0 / n:
        return (n * params.r0 - 1.0) / (n - 1)
    return 1.0 - n * params.r0


def mud_info(params: PyramidParams, refined: bool = False) -> float:
    n = params.n
    if params.r0 >= params.r1 or params.is_orthogonal:
        return n * params.r1 * math.log2(n)
    info = n * params.r0 * math.log2(n)
    if refined:
        info += (1.0 - n * params.r0) * math.log2(n / 2.0)
    return info


def mud_srm_limit_ratio(n: int, branch: str) -> float:
    """Limit of ``I(MUD)/I(SRM)`` for ``r0 -> 1`` (``"acute"``) or ``r0 -> 0`` (``"obtuse"``)."""
    if branch == "acute":
        return n / (2.0 * n - 2.0) * math.log(n)
    if branch == "obtuse":
        return n / (n - 2.0) * math.log(n / 2.0) / math.log(n - 1.0)
    raise ValueError(f"unknown branch {branch!r}")


def lifted_info(n: int, r0: float, t):
    """Information carried by the lifted-edge outcomes at unit weight ``w2 = 1``.

    Vectorized over ``t``.
    """
    r1 = max(0.0, (1.0 - r0) / (n - 1))
    t = np.asarray(t, dtype=float)
    s0, s1 = math.sqrt(r0), math.sqrt(r1)
    den = t * t * r0 + (n - 1) * r1
    diag = (t * s0 + (n - 1) * s1) ** 2
    off = (t * s0 - s1) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(diag > 0.0, diag / n * np.log2(diag / den), 0.0)
        b = np.where(off > 0.0, (n - 1) / n * off * np.log2(off / den), 0.0)
    return a + b


def unified_info(params: PyramidParams, spec: SchemeSpec) -> float:
    """Closed-form information of the unified-family POM (inconclusive axis outcome adds nothing)."""
    n = params.n
    if spec.t == 1.0 and spec.w2 == 1.0:
        return srm_info(params)
    info = 0.0
    if spec.w2 > 0.0:
        info += spec.w2 * float(lifted_info(n, params.r0, spec.t))
    if spec.w3 > 0.0 and n > 2:
        info += spec.w3 * (1.0 - params.r0) * math.log2(n / 2.0)
    return info


def failure_probability(params: PyramidParams, spec: SchemeSpec) -> float:
    """Probability that no edge outcome occurs (axis or difference outcome instead)."""
    return spec.w1 * params.r0 + spec.w3 * (1.0 - params.r0)


def acute_ims_info(params: PyramidParams) -> float:
    n = params.n
    if n > 2 and params.r0 > (4.0 * n - 4.0) / (n * n):
        return (n - n * params.r0) / (n - 2.0) * math.log2(n - 1.0)
    return srm_info(params)


def ims_info(params: PyramidParams) -> float:
    """Accessible information of the pyramid ensemble."""
    if params.r0 >= params.r1 or params.is_orthogonal:
        return acute_ims_info(params)
    return unified_info(params, ims_spec(params))


def scheme_info(params: PyramidParams, scheme: Scheme | str) -> float:
    scheme = Scheme(scheme)
    if scheme is Scheme.SRM:
        return srm_info(params)
    if scheme is Scheme.MUD:
        return mud_info(params)
    if scheme is Scheme.MUD_REFINED:
        return mud_info(params, refined=True)
    if scheme is Scheme.IMS:
        return ims_info(params)
    raise ValueError("the custom scheme needs explicit t and w2; use unified_info")


def necessary_condition_residual(states, priors, pom: Pom, mode: str = "IMS") -> float:
    """Largest spectral norm of ``Pi_k R_k Pi_l - Pi_k R_l Pi_l`` over all outcome pairs.

    ``mode="IMS"`` uses the information gradients ``R_k``; outcomes that are
    never triggered (``p_.k = 0``) are skipped, and a vanishing ``p_jk``
    contributes nothing because ``Pi_k rho_j = 0`` then.  ``mode="MEM"`` uses
    ``R_k = p_k rho_k`` and pairs outcome ``k`` with state ``k``.
    """
    states = np.asarray(states, dtype=float)
    priors = np.asarray(priors, dtype=float)
    ops = pom.operators
    mode = mode.upper()
    if mode == "IMS":
        p = joint_probabilities(states, priors, pom).p
        logs = _log_ratio(p)
        live = np.flatnonzero(p.sum(axis=0) > 0.0)
        ops = ops[live]
        rs = np.einsum("j,jab,jk->kab", priors, states, logs[:, live])
    elif mode == "MEM":
        if len(pom) != len(priors):
            raise ValueError("MEM mode needs one outcome per state")
        rs = priors[:, None, None] * states
    else:
        raise ValueError(f"unknown mode {mode!r}")
    left = np.einsum("kab,kbc->kac", ops, rs)  # Pi_k R_k
    worst = 0.0
    for k in range(len(ops)):
        diff = left[k] @ ops - ops[k] @ (rs @ ops)  # over l
        worst = max(worst, float(np.max(np.linalg.norm(diff, ord=2, axis=(1, 2)))))
    return worst
