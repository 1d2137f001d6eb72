"""Probability-operator measurements (POMs) for pyramid signal states.

Every named scheme is a member of one three-weight family built from the
axis projector, the lifted edges and the difference kets::

    (w1/r0)|H><H| + w2 sum_k |ebar_k><ebar_k| + (2 w3/N) sum_{m<n} |[mn]><[mn]|

with ``w1 + t^2 w2 = 1`` and ``w2 + w3 = 1``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    DomainError,
    PyramidParams,
    axis_ket,
    difference_kets,
    dual_t,
    lifted_edges,
    orthonormal_kets,
)

CONSTRAINT_TOL = 1e-12
# summands with a weight at or below this are left out of the POM
WEIGHT_FLOOR = 1e-14
# eigenvalues of the ensemble operator below this are outside its support
SUPPORT_TOL = 1e-12


class Scheme(str, enum.Enum):
    SRM = "srm"
    MUD = "mud"
    MUD_REFINED = "mud_refined"
    IMS = "ims"
    CUSTOM = "custom"


@dataclass(frozen=True)
class SchemeSpec:
    """Parameters ``(t, w1, w2, w3)`` of the unified family.

    ``t`` may be ``inf`` only together with ``w2 = 0``; the lifted edges then
    drop out and ``t`` plays no role.
    """

    t: float
    w1: float
    w2: float
    w3: float
    tag: Scheme = Scheme.CUSTOM

    def __post_init__(self):
        if not self.t >= 0.0:
            raise DomainError(f"t must be >= 0, got {self.t!r}")
        for name in ("w1", "w2", "w3"):
            if getattr(self, name) < -CONSTRAINT_TOL:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)!r}")
        if math.isinf(self.t) and self.w2 != 0.0:
            raise DomainError("t = inf requires w2 = 0")
        lifted = self.t * self.t * self.w2 if self.w2 != 0.0 else 0.0
        if abs(self.w1 + lifted - 1.0) > CONSTRAINT_TOL * max(1.0, lifted):
            raise DomainError(f"w1 + t^2 w2 = {self.w1 + lifted!r}, expected 1")
        if abs(self.w2 + self.w3 - 1.0) > CONSTRAINT_TOL:
            raise DomainError(f"w2 + w3 = {self.w2 + self.w3!r}, expected 1")

    @classmethod
    def from_t_w2(cls, t: float, w2: float, tag: Scheme = Scheme.CUSTOM) -> "SchemeSpec":
        """Fill in ``w1`` and ``w3`` from the two constraints."""
        w1 = 1.0 - t * t * w2 if w2 != 0.0 else 1.0
        return cls(t, w1, w2, 1.0 - w2, tag)


@dataclass
class Pom:
    """Labeled outcomes ``Pi_k`` stacked as a ``(K, d, d)`` array."""

    labels: list[str]
    operators: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.operators = np.asarray(self.operators, dtype=float)
        if self.operators.ndim != 3 or len(self.labels) != self.operators.shape[0]:
            raise ValueError("need one label per (d, d) outcome matrix")
        asym = np.max(np.abs(self.operators - self.operators.transpose(0, 2, 1)), initial=0.0)
        if asym > 1e-14 * max(1.0, float(np.max(np.abs(self.operators), initial=0.0))):
            raise ValueError(f"outcomes must be symmetric (max asymmetry {asym:.3g})")
        self.operators = 0.5 * (self.operators + self.operators.transpose(0, 2, 1))

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(zip(self.labels, self.operators))

    def __getitem__(self, label: str) -> np.ndarray:
        return self.operators[self.labels.index(label)]

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def total(self) -> np.ndarray:
        return self.operators.sum(axis=0)


@dataclass(frozen=True)
class PomReport:
    completeness_residual: float
    min_eigenvalue: float

    def ok(self, tol: float = 1e-10) -> bool:
        return self.completeness_residual <= tol and self.min_eigenvalue >= -tol


def validate_pom(pom: Pom) -> PomReport:
    """Spectral-norm residual of ``sum_k Pi_k - 1`` and the smallest outcome eigenvalue."""
    resid = np.linalg.norm(pom.total() - np.eye(pom.dim), ord=2)
    lowest = float(np.min(np.linalg.eigvalsh(pom.operators))) if len(pom) else 0.0
    return PomReport(float(resid), lowest)


def edge_label(k: int) -> str:
    return f"edge({k})"


def diff_label(m: int, n: int) -> str:
    return f"diff({m},{n})"


INCONCLUSIVE = "inconclusive"


def unified_pom(params: PyramidParams, spec: SchemeSpec) -> Pom:
    """Build the POM of the unified family, omitting zero-weight summands.

    The axis term ``(w1/r0)|H><H|`` is the projector on the symmetry axis,
    which remains defined for the flat pyramid.
    """
    n = params.n
    if spec.w3 > WEIGHT_FLOOR and params.has_no_base:
        raise DomainError("difference outcomes need r1 > 0")
    labels, ops = [], []
    if spec.w1 > WEIGHT_FLOOR:
        u = axis_ket(n)
        labels.append(INCONCLUSIVE)
        ops.append(spec.w1 * np.outer(u, u))
    if spec.w2 > WEIGHT_FLOOR:
        for k, e in enumerate(lifted_edges(params, spec.t), start=1):
            labels.append(edge_label(k))
            ops.append(spec.w2 * np.outer(e, e))
    if spec.w3 > WEIGHT_FLOOR:
        scale = 2.0 * spec.w3 / n
        for (m, k), d in difference_kets(params):
            labels.append(diff_label(m, k))
            ops.append(scale * np.outer(d, d))
    return Pom(labels, np.array(ops).reshape(len(ops), n, n))


SRM_SPEC = SchemeSpec(1.0, 0.0, 1.0, 0.0, Scheme.SRM)


def srm(params: PyramidParams) -> Pom:
    """Square-root measurement: projectors on the orthonormal kets ``e_k``."""
    e = orthonormal_kets(params)
    ops = np.einsum("ka,kb->kab", e, e)
    return Pom([edge_label(k) for k in range(1, params.n + 1)], ops)


def _inv_sqrt_on_support(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    keep = w > SUPPORT_TOL
    return (v[:, keep] / np.sqrt(w[keep])) @ v[:, keep].T


def srm_from_ensemble(states, priors) -> Pom:
    """Square-root measurement ``rho^{-1/2} p_k rho_k rho^{-1/2}`` of an arbitrary ensemble.

    The inverse square root is taken on the support of ``rho``.  When the
    support is a proper subspace, the outcomes do not sum to the identity on
    the full space; the projector on the complement is then added as a
    separate ``"null"`` outcome, which the signal states never trigger.

    Raises
    ------
    ValueError
        If the priors are negative or do not sum to one.
    """
    states = np.asarray(states, dtype=float)
    priors = np.asarray(priors, dtype=float)
    if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
        raise ValueError("priors must be nonnegative with unit sum")
    rho = np.einsum("j,jab->ab", priors, states)
    z = _inv_sqrt_on_support(rho)
    ops = np.einsum("ab,j,jbc,cd->jad", z, priors, states, z)
    labels = [edge_label(k) for k in range(1, len(priors) + 1)]
    null = np.eye(rho.shape[0]) - ops.sum(axis=0)
    if np.linalg.norm(null, ord=2) > 1e-10:
        labels.append("null")
        ops = np.concatenate([ops, null[None]])
    return Pom(labels, ops)


def mud_spec(params: PyramidParams) -> SchemeSpec:
    """Table weights of the unambiguous-discrimination POM (dual lift value)."""
    if not 0.0 < params.r0 < 1.0:
        raise DomainError("unambiguous discrimination needs 0 < r0 < 1")
    t = dual_t(params)
    if params.r0 >= params.r1 or params.is_orthogonal:
        return SchemeSpec(t, (params.r0 - params.r1) / params.r0 if params.is_acute else 0.0,
                          1.0, 0.0, Scheme.MUD)
    w2 = params.r0 / params.r1
    return SchemeSpec(t, 0.0, w2, 1.0 - w2, Scheme.MUD)


def mud(params: PyramidParams, refined: bool = False) -> Pom:
    """Measurement for unambiguous discrimination.

    For obtuse pyramids the inconclusive outcome is a multiple of the
    projector on the pyramid base; ``refined=True`` splits it into the
    ``N(N-1)/2`` difference-ket outcomes.
    """
    spec = mud_spec(params)
    if refined and params.is_acute:
        raise DomainError("the refined MUD exists only for obtuse pyramids")
    if refined:
        return unified_pom(params, SchemeSpec(spec.t, spec.w1, spec.w2, spec.w3, Scheme.MUD_REFINED))
    if spec.w3 <= WEIGHT_FLOOR:
        return unified_pom(params, spec)
    edges = unified_pom(params, SchemeSpec(spec.t, spec.w1, spec.w2, spec.w3, Scheme.MUD))
    keep = [i for i, lab in enumerate(edges.labels) if lab.startswith("edge")]
    u = axis_ket(params.n)
    base = np.eye(params.n) - np.outer(u, u)
    ops = np.concatenate([edges.operators[keep], (spec.w3 * base)[None]])
    return Pom([edges.labels[i] for i in keep] + [INCONCLUSIVE], ops)


def acute_ims_t(params: PyramidParams) -> float:
    """Optimal lift value ``min{1, (2N-2)/(N-2) sqrt(r1/r0)}`` for acute pyramids.

    Two-edge pyramids use ``t = 1``: the square-root measurement is optimal
    for two equiprobable pure states.
    """
    n = params.n
    if n == 2:
        return 1.0
    return min(1.0, (2.0 * n - 2.0) / (n - 2.0) * math.sqrt(params.r1 / params.r0))


def ims_spec(params: PyramidParams) -> SchemeSpec:
    if params.r0 >= params.r1 or params.is_orthogonal:
        t = acute_ims_t(params)
        return SchemeSpec(t, 1.0 - t * t, 1.0, 0.0, Scheme.IMS)
    from .optimizer import optimize_t_obtuse

    t, _ = optimize_t_obtuse(params)
    if math.isinf(t):
        # all lifted weight has gone to the axis: pure difference outcomes + axis
        return SchemeSpec(math.inf, 1.0, 0.0, 1.0, Scheme.IMS)
    w2 = 1.0 / (t * t)
    return SchemeSpec(t, 0.0, w2, 1.0 - w2, Scheme.IMS)


def ims(params: PyramidParams) -> tuple[Pom, SchemeSpec]:
    """Information-maximizing POM and its family parameters."""
    spec = ims_spec(params)
    return unified_pom(params, spec), spec


def scheme_spec(params: PyramidParams, scheme: Scheme | str) -> SchemeSpec:
    """Family parameters of a named scheme (the custom scheme has none)."""
    scheme = Scheme(scheme)
    if scheme is Scheme.SRM:
        return SRM_SPEC
    if scheme is Scheme.MUD:
        return mud_spec(params)
    if scheme is Scheme.MUD_REFINED:
        s = mud_spec(params)
        return SchemeSpec(s.t, s.w1, s.w2, s.w3, Scheme.MUD_REFINED)
    if scheme is Scheme.IMS:
        return ims_spec(params)
    raise DomainError("the custom scheme needs explicit t and w2")


def named_pom(params: PyramidParams, scheme: Scheme | str) -> Pom:
    scheme = Scheme(scheme)
    if scheme is Scheme.SRM:
        return srm(params)
    if scheme is Scheme.MUD:
        return mud(params)
    if scheme is Scheme.MUD_REFINED:
        return mud(params, refined=True)
    if scheme is Scheme.IMS:
        return ims(params)[0]
    raise DomainError("the custom scheme needs explicit t and w2")
