"""Quantum pyramid geometry in real N-dimensional coordinates.

All kets are real vectors expressed in the orthonormal basis ``{e_j}`` of the
orthogonal pyramid that shares the symmetry axis with the given pyramid.  In
that basis the edge kets take the closed form

    E_j = sqrt(N r1) e_j + (sqrt(r0) - sqrt(r1)) / sqrt(N) * (1, ..., 1)

which stays finite for flat (``r0 = 0``) and no-base (``r1 = 0``) pyramids.
Sets of kets are returned as 2-D arrays with one ket per row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# r0 and r1 closer than this count as the orthogonal pyramid
SHAPE_TOL = 1e-12


class DomainError(ValueError):
    """Raised when pyramid or measurement parameters are outside their domain."""


@dataclass(frozen=True)
class PyramidParams:
    """Shape of an N-edge pyramid; ``r1`` is always derived from ``n`` and ``r0``."""

    n: int
    r0: float

    @property
    def r1(self) -> float:
        return max(0.0, (1.0 - self.r0) / (self.n - 1))

    @property
    def nr0(self) -> float:
        return self.n * self.r0

    @property
    def is_orthogonal(self) -> bool:
        return abs(self.r0 - self.r1) <= SHAPE_TOL

    @property
    def is_acute(self) -> bool:
        return self.r0 > self.r1 and not self.is_orthogonal

    @property
    def is_obtuse(self) -> bool:
        return self.r0 < self.r1 and not self.is_orthogonal

    @property
    def is_flat(self) -> bool:
        return self.r0 == 0.0

    @property
    def has_no_base(self) -> bool:
        return self.r1 == 0.0

    @property
    def classification(self) -> str:
        """Most specific shape name: flat, no-base, orthogonal, acute or obtuse."""
        if self.is_flat:
            return "flat"
        if self.has_no_base:
            return "no-base"
        if self.is_orthogonal:
            return "orthogonal"
        return "acute" if self.is_acute else "obtuse"


def make_pyramid(n: int, r0: float) -> PyramidParams:
    """Validate ``(n, r0)`` and return the pyramid shape.

    Raises
    ------
    DomainError
        If ``n < 2`` or ``r0`` is outside ``[0, 1]``.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"pyramid needs an integer n >= 2, got {n!r}")
    r0 = float(r0)
    if not 0.0 <= r0 <= 1.0:
        raise DomainError(f"r0 must lie in [0, 1], got {r0!r}")
    return PyramidParams(int(n), r0)


def pyramid_from_nr0(n: int, nr0: float) -> PyramidParams:
    """Same as :func:`make_pyramid` but parameterized by ``N r0`` in ``[0, N]``."""
    if int(n) != n or n < 2:
        raise DomainError(f"pyramid needs an integer n >= 2, got {n!r}")
    if not 0.0 <= nr0 <= n:
        raise DomainError(f"N*r0 must lie in [0, {n}], got {nr0!r}")
    return make_pyramid(n, min(1.0, nr0 / n))


def axis_ket(n: int) -> np.ndarray:
    """Unit ket along the symmetry axis; equals ``|H> / sqrt(r0)`` whenever ``r0 > 0``."""
    return np.full(n, 1.0 / math.sqrt(n))


def edge_kets(params: PyramidParams) -> np.ndarray:
    n = params.n
    shift = (math.sqrt(params.r0) - math.sqrt(params.r1)) / math.sqrt(n)
    return math.sqrt(n * params.r1) * np.eye(n) + shift


def height_ket(params: PyramidParams) -> np.ndarray:
    """Mean of the edge kets, ``sqrt(r0 / N) * (1, ..., 1)``."""
    return np.full(params.n, math.sqrt(params.r0 / params.n))


def orthonormal_kets(params: PyramidParams) -> np.ndarray:
    """Edges of the orthogonal pyramid sharing the symmetry axis (the basis itself)."""
    return np.eye(params.n)


def lifted_edges(params: PyramidParams, t: float) -> np.ndarray:
    """Unnormalized lifted kets ``e_j + (t - 1)/N * (1, ..., 1)``.

    The ``r0`` dependence of the usual ``|H>``-based form cancels, so the
    result depends only on ``N`` and ``t``.
    """
    if not t >= 0.0 or math.isinf(t):
        raise DomainError(f"lift parameter t must be finite and >= 0, got {t!r}")
    n = params.n
    return np.eye(n) + (t - 1.0) / n


def normalize_kets(kets: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(kets, axis=1)
    return kets / norms[:, None]


def pyramid_of(kets: np.ndarray) -> PyramidParams:
    """Recover ``(N, r0)`` from a set of kets with equal pairwise overlaps.

    The kets are normalized first; the common off-diagonal overlap ``c``
    fixes ``r1 = (1 - c) / N``.
    """
    unit = normalize_kets(np.asarray(kets, dtype=float))
    n = unit.shape[0]
    gram = unit @ unit.T
    off = gram[~np.eye(n, dtype=bool)]
    c = float(off.mean())
    if np.max(np.abs(off - c)) > 1e-9:
        raise DomainError("kets do not have equal pairwise overlaps")
    r1 = (1.0 - c) / n
    return make_pyramid(n, min(1.0, max(0.0, 1.0 - (n - 1) * r1)))


def difference_kets(params: PyramidParams) -> list[tuple[tuple[int, int], np.ndarray]]:
    """Normalized difference kets ``(E_m - E_n) / sqrt(2 N r1)`` for ``m < n``.

    Labels are 1-based.  In the orthonormal basis each ket is
    ``(e_m - e_n) / sqrt(2)``, which is what gets returned.
    """
    if params.has_no_base:
        raise DomainError("difference kets need r1 > 0 (pyramid has no base)")
    n = params.n
    out = []
    for m in range(n):
        for k in range(m + 1, n):
            v = np.zeros(n)
            v[m] = 1.0 / math.sqrt(2.0)
            v[k] = -1.0 / math.sqrt(2.0)
            out.append(((m + 1, k + 1), v))
    return out


def volume(params: PyramidParams) -> float:
    n = params.n
    return (
        math.sqrt(n * params.r0)
        * (n * params.r1) ** ((n - 1) / 2.0)
        / math.factorial(n)
    )


def cyclic_unitary(params: PyramidParams) -> np.ndarray:
    """Real orthogonal ``U`` with ``U e_j = e_{j+1}`` (indices mod N)."""
    n = params.n
    return np.roll(np.eye(n), 1, axis=0)


def dual_t(params: PyramidParams) -> float:
    """Lift value ``sqrt(r1 / r0)`` that makes the lifted pyramid dual to the edges."""
    if params.is_flat or params.has_no_base:
        raise DomainError("duality needs r0 > 0 and r1 > 0")
    return math.sqrt(params.r1 / params.r0)


def duality_overlap(params: PyramidParams) -> np.ndarray:
    """Matrix of overlaps ``<E_j | ebar_k>`` at the dual lift value."""
    return edge_kets(params) @ lifted_edges(params, dual_t(params)).T


def signal_states(params: PyramidParams) -> tuple[np.ndarray, np.ndarray]:
    """Density operators ``|E_j><E_j|`` (stacked) and the equal priors ``1/N``."""
    kets = edge_kets(params)
    states = np.einsum("ja,jb->jab", kets, kets)
    return states, np.full(params.n, 1.0 / params.n)
