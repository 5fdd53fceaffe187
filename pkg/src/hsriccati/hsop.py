"""Hilbert-Schmidt operator algebra over a :class:`SpectralTriplet`.

An operator P is stored by its matrix in the basis ``{e_j}``:
``mat[k, j] = (P e_j, e_k)_H``, so column ``j`` is ``P e_j``. Column weights
therefore move the *domain* between H, V and V', row weights move the *range*.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EigenSolverError, PreconditionError
from .triplet import SpectralTriplet

SYM_TOL = 1e-10
PSD_TOL = 1e-10


class HsNormKind(enum.Enum):
    """Which pair of spaces (domain, range) the HS norm is taken over."""

    HH = "H,H"
    VdH = "V',H"
    HV = "H,V"
    HVd = "H,V'"
    VH = "V,H"


def sym(mat) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    return 0.5 * (mat + mat.T)


def sorted_eigh(mat):
    """Eigen-decomposition of the symmetric part with deterministic output.

    Eigenvalues come back in descending order; each eigenvector is flipped so
    that its first component above 1e-12 in magnitude is positive.
    """
    try:
        w, v = np.linalg.eigh(sym(mat))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenSolverError(str(exc)) from exc
    w = w[::-1]
    v = v[:, ::-1].copy()
    for k in range(v.shape[1]):
        col = v[:, k]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size and col[idx[0]] < 0:
            v[:, k] = -col
    return w, v


def sqrt_psd(mat) -> np.ndarray:
    """Symmetric square root, clipping tiny negative eigenvalues to zero."""
    w, v = sorted_eigh(mat)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


@dataclass(frozen=True, eq=False)
class HsOperator:
    """Matrix of an operator on the truncated space.

    ``symmetric`` and ``psd`` are optional flags; when set to True they are
    verified at construction against :data:`SYM_TOL` / :data:`PSD_TOL`.
    """

    triplet: SpectralTriplet
    mat: np.ndarray
    symmetric: bool | None = None
    psd: bool | None = None

    def __post_init__(self):
        mat = np.array(self.mat, dtype=float)
        n = self.triplet.n
        if mat.shape != (n, n):
            raise DimensionError(f"operator matrix must be {n}x{n}, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        if self.symmetric and np.max(np.abs(mat - mat.T), initial=0.0) > SYM_TOL:
            raise PreconditionError("flagged symmetric but |P - P^T|_max exceeds sym_tol")
        if self.psd and min_sym_eig(self) < -PSD_TOL:
            raise PreconditionError("flagged psd but the symmetric part has a negative eigenvalue")

    @classmethod
    def zeros(cls, triplet):
        return cls(triplet, np.zeros((triplet.n, triplet.n)), symmetric=True, psd=True)

    @classmethod
    def identity(cls, triplet):
        return cls(triplet, np.eye(triplet.n), symmetric=True, psd=True)

    @property
    def n(self):
        return self.triplet.n

    def apply(self, y) -> np.ndarray:
        return self.mat @ self.triplet.coeffs(y)

    def hs_norm(self, kind: HsNormKind = HsNormKind.HH) -> float:
        return hs_norm(self, kind)

    def vnorm(self) -> float:
        return vnorm(self)

    def dual_norm(self) -> float:
        return dual_norm(self)

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        _same_triplet(self, other)
        return HsOperator(self.triplet, self.mat + other.mat)

    def __sub__(self, other):
        _same_triplet(self, other)
        return HsOperator(self.triplet, self.mat - other.mat)

    def scaled(self, c: float):
        return HsOperator(self.triplet, c * self.mat)

    def symmetrized(self):
        return HsOperator(self.triplet, sym(self.mat), symmetric=True)

    @property
    def T(self):
        return adjoint(self)


def _same_triplet(a: HsOperator, b: HsOperator):
    if a.triplet is not b.triplet and (
        a.triplet.n != b.triplet.n or not np.array_equal(a.triplet.rho_sq, b.triplet.rho_sq)
    ):
        raise DimensionError("operators live on different triplets")


def hs_norm(P: HsOperator, kind: HsNormKind = HsNormKind.HH) -> float:
    m2 = P.mat**2
    r2 = P.triplet.rho_sq
    if kind is HsNormKind.HH:
        total = m2.sum()
    elif kind is HsNormKind.VdH:
        total = (m2.sum(axis=0) * r2).sum()
    elif kind is HsNormKind.VH:
        total = (m2.sum(axis=0) / r2).sum()
    elif kind is HsNormKind.HV:
        total = (m2.sum(axis=1) * r2).sum()
    elif kind is HsNormKind.HVd:
        total = (m2.sum(axis=1) / r2).sum()
    else:  # pragma: no cover
        raise ValueError(kind)
    return float(np.sqrt(total))


def vnorm(P: HsOperator) -> float:
    """Norm on the intersection (V',H) & (H,V), taken as the plain sum."""
    return hs_norm(P, HsNormKind.VdH) + hs_norm(P, HsNormKind.HV)


def dual_norm(P: HsOperator) -> float:
    return hs_norm(P, HsNormKind.HVd) + hs_norm(P, HsNormKind.VH)


def compose(P2: HsOperator, P1: HsOperator) -> HsOperator:
    """Return ``P2 P1`` (apply ``P1`` first)."""
    _same_triplet(P2, P1)
    return HsOperator(P2.triplet, P2.mat @ P1.mat)


def adjoint(P: HsOperator) -> HsOperator:
    return HsOperator(P.triplet, P.mat.T, symmetric=P.symmetric, psd=P.psd)


def min_sym_eig(P) -> float:
    mat = P.mat if isinstance(P, HsOperator) else np.asarray(P, dtype=float)
    try:
        return float(np.linalg.eigvalsh(sym(mat))[0])
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigenSolverError(str(exc)) from exc


def is_psd(P, tol: float = PSD_TOL) -> bool:
    return min_sym_eig(P) >= -tol


def is_symmetric(P, tol: float = SYM_TOL) -> bool:
    mat = P.mat if isinstance(P, HsOperator) else np.asarray(P, dtype=float)
    return bool(np.max(np.abs(mat - mat.T), initial=0.0) <= tol)


def pairing(P: HsOperator, Q: HsOperator) -> float:
    """Trace form ``sum_j (P e_j, Q e_j)_H``.

    Both dual pairings between (V,H)/(V',H) and (H,V')/(H,V) reduce to this in
    coordinates, so it serves for all of them.
    """
    _same_triplet(P, Q)
    return float(np.sum(P.mat * Q.mat))


def pairing_positivity_check(P1: HsOperator, P2: HsOperator, tol: float = 1e-10) -> bool:
    """Whether ``(P2 P1, P1) >= 0`` and ``(P1 P2, P1) >= 0`` for PSD ``P2``.

    ``tol`` is relative to ``|P2| |P1|^2``.
    """
    _same_triplet(P1, P2)
    if not is_symmetric(P2) or not is_psd(P2):
        raise PreconditionError("P2 must be symmetric positive semidefinite")
    scale = hs_norm(P2) * hs_norm(P1) ** 2
    floor = -tol * max(scale, np.finfo(float).tiny)
    first = pairing(compose(P2, P1), P1)
    second = pairing(compose(P1, P2), P1)
    return first >= floor and second >= floor


def coercive_pairings(P: HsOperator, a_mat) -> tuple[float, float]:
    """The two Lyapunov pairings ``sum_j (P A e_j, P e_j)`` and ``sum_j <A* P e_j, P e_j>``.

    ``a_mat`` follows the same column convention as :class:`HsOperator`.
    Under ``sym(A) >= omega diag(rho^2)`` they dominate ``omega |P|^2_{(V',H)}``
    and ``omega |P|^2_{(H,V)}`` respectively.
    """
    a = np.asarray(a_mat, dtype=float)
    if a.shape != P.mat.shape:
        raise DimensionError("A and P must have the same shape")
    pa = P.mat @ a
    first = float(np.sum(pa * P.mat))
    second = float(np.sum((a.T @ P.mat) * P.mat))
    return first, second
