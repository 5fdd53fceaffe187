"""Resolvents of the Lyapunov map ``P -> A*P + PA`` and the quadratic map ``P -> P Gamma P``.

Both are solved on dense matrices. The Lyapunov resolvent goes through a real
Schur form of A (Bartels-Stewart via LAPACK ``trsyl``), cached per operator so
that repeated solves at a fixed lambda cost two triangular sweeps.

The quadratic resolvent ``P + lam P Gamma P = F`` has a fast path when Gamma is
diagonal in an eigenbasis of F (scalar quadratic per eigenvalue) and a general
path ``P = F^{1/2} g(F^{1/2} Gamma F^{1/2}) F^{1/2}`` with
``g(x) = 2 / (1 + sqrt(1 + 4 lam x))``, which reduces to the scalar formula on
the fast path. A damped Newton iteration is kept as an alternative method.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import (
    CoercivityError,
    ConvergenceError,
    DimensionError,
    PreconditionError,
    SingularSystemError,
)
from .hsop import PSD_TOL, HsOperator, min_sym_eig, sorted_eigh, sqrt_psd, sym
from .triplet import SpectralTriplet

LIN_TOL = 1e-10
QUAD_TOL = 1e-10
COMM_TOL = 1e-12


def coercivity_constant(a_mat, triplet: SpectralTriplet) -> float:
    """Largest omega with ``sym(A) - omega diag(rho^2) >= 0``.

    This is the smallest eigenvalue of ``D^{-1/2} sym(A) D^{-1/2}``.
    """
    a = np.asarray(a_mat, dtype=float)
    if a.shape != (triplet.n, triplet.n):
        raise DimensionError("A does not match the triplet")
    s = 1.0 / np.sqrt(triplet.rho_sq)
    scaled = sym(a) * np.outer(s, s)
    return float(np.linalg.eigvalsh(scaled)[0])


@dataclass(frozen=True, eq=False)
class LyapunovOperator:
    """``L(P) = A* P + P A`` with the certified coercivity constant of A.

    ``omega`` is the value certified by :func:`coercivity_constant` unless a
    smaller value is requested (it is then re-checked). ``omega <= 0`` is
    allowed and simply means the coercive solver cannot be used.
    """

    triplet: SpectralTriplet
    a_mat: np.ndarray
    omega: float = field(default=None)
    cert_tol: float = 1e-10

    def __post_init__(self):
        a = np.array(self.a_mat, dtype=float)
        if a.shape != (self.triplet.n, self.triplet.n):
            raise DimensionError("A does not match the triplet")
        a.setflags(write=False)
        object.__setattr__(self, "a_mat", a)
        certified = coercivity_constant(a, self.triplet)
        if self.omega is None:
            object.__setattr__(self, "omega", certified)
        else:
            slack = min_sym_eig(sym(a) - float(self.omega) * self.triplet.gram)
            if slack < -self.cert_tol * max(1.0, np.abs(a).max()):
                raise CoercivityError(
                    f"sym(A) - omega*G has eigenvalue {slack:.3e} < 0 for omega={self.omega}"
                )
            object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "certified_omega", certified)

    @property
    def coercive(self) -> bool:
        return self.omega > 0

    @property
    def n(self):
        return self.triplet.n

    def apply(self, P) -> np.ndarray:
        p = P.mat if isinstance(P, HsOperator) else np.asarray(P, dtype=float)
        return self.a_mat.T @ p + p @ self.a_mat

    def shifted(self, omega_shift: float) -> "LyapunovOperator":
        """Operator for ``A + omega_shift * J``."""
        return LyapunovOperator(self.triplet, self.a_mat + omega_shift * self.triplet.gram)

    def contraction_bound(self, lam: float) -> float:
        """Lipschitz constant ``1/(1 + lam omega (rho_1 + 1/kappa_1))`` as printed in the theory."""
        t = self.triplet
        return 1.0 / (1.0 + lam * self.omega * (t.rho1 + 1.0 / t.kappa1))

    def contraction_sharp(self, lam: float) -> float:
        """Lipschitz constant of ``(I + lam L)^{-1}`` on (H,H), ``1/(1 + lam omega (rho_1^2 + kappa_1^{-2}))``.

        Coincides with :meth:`contraction_bound` when ``rho_1 = 1``.
        """
        t = self.triplet
        return 1.0 / (1.0 + lam * self.omega * (t.rho1**2 + t.kappa1**-2))

    @cached_property
    def _schur(self):
        T, Z = sla.schur(self.a_mat, output="real")
        return T, Z

    @cached_property
    def is_symmetric(self) -> bool:
        return bool(np.max(np.abs(self.a_mat - self.a_mat.T), initial=0.0) <= 1e-14 * max(1.0, np.abs(self.a_mat).max()))

    @cached_property
    def _eig(self):
        w, v = np.linalg.eigh(sym(self.a_mat))
        return w, v

    def solve_shifted(self, rhs, lam: float) -> np.ndarray:
        """Solve ``X + lam (A^T X + X A) = rhs`` for a general right-hand side."""
        rhs = np.asarray(rhs, dtype=float)
        if self.is_symmetric:
            w, v = self._eig
            denom = 1.0 + lam * (w[:, None] + w[None, :])
            if np.min(np.abs(denom)) < 1e-300:
                raise SingularSystemError("shifted Lyapunov system is singular")
            return v @ ((v.T @ rhs @ v) / denom) @ v.T
        T, Z = self._schur
        n = T.shape[0]
        M = 0.5 * np.eye(n) + lam * T
        C = Z.T @ rhs @ Z
        # op(M)^T Y + Y M = C  with M quasi-upper-triangular
        Y, scale, info = sla.lapack.dtrsyl(M, M, C, trana="T", tranb="N", isgn=1)
        if info < 0:  # pragma: no cover
            raise SingularSystemError(f"dtrsyl failed with info={info}")
        if info == 1 or scale == 0:
            raise SingularSystemError("shifted Lyapunov system is numerically singular")
        return Z @ (Y / scale) @ Z.T


@dataclass(frozen=True, eq=False)
class QuadraticOperator:
    """``B(P) = P Gamma P`` with ``Gamma`` symmetric.

    ``g0`` is the smallest eigenvalue of Gamma (a lower spectral bound); it is
    computed when not supplied and checked when supplied.
    """

    gamma_mat: np.ndarray
    g0: float | None = None
    sym_tol: float = 1e-10

    def __post_init__(self):
        g = np.array(self.gamma_mat, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DimensionError("Gamma must be square")
        scale = max(1.0, np.abs(g).max(initial=0.0))
        if np.max(np.abs(g - g.T), initial=0.0) > self.sym_tol * scale:
            raise PreconditionError("Gamma must be symmetric")
        g = sym(g)
        g.setflags(write=False)
        object.__setattr__(self, "gamma_mat", g)
        lo = min_sym_eig(g) if g.size else 0.0
        if self.g0 is None:
            object.__setattr__(self, "g0", lo)
        elif lo < float(self.g0) - PSD_TOL * scale:
            raise PreconditionError(f"Gamma has eigenvalue {lo:.3e} below g0={self.g0}")
        object.__setattr__(self, "min_eig", lo)

    @property
    def n(self):
        return self.gamma_mat.shape[0]

    @cached_property
    def factor(self) -> np.ndarray:
        """``G`` with ``Gamma = G G^T`` over the positive spectrum (n x rank)."""
        w, v = sorted_eigh(self.gamma_mat)
        keep = w > PSD_TOL * max(1.0, abs(w[0]) if w.size else 0.0)
        return v[:, keep] * np.sqrt(w[keep])

    @property
    def psd(self) -> bool:
        return self.min_eig >= -PSD_TOL

    def apply(self, P) -> np.ndarray:
        p = P.mat if isinstance(P, HsOperator) else np.asarray(P, dtype=float)
        return p @ self.gamma_mat @ p


@dataclass
class QuadraticResolventInfo:
    path: str
    residual: float
    iterations: int = 0
    commutator: float = float("nan")


def lyapunov_resolvent(F: HsOperator, lam: float, L: LyapunovOperator, *, lin_tol: float = LIN_TOL) -> HsOperator:
    """Return the symmetric P with ``P + lam (A* P + P A) = F``."""
    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    if F.n != L.n:
        raise DimensionError("F and A sizes differ")
    f = F.mat
    if np.max(np.abs(f - f.T), initial=0.0) > 1e-10 * max(1.0, np.abs(f).max(initial=0.0)):
        raise PreconditionError("F must be symmetric")
    p = sym(L.solve_shifted(f, lam))
    resid = np.linalg.norm(p + lam * L.apply(p) - f)
    if resid > lin_tol * max(np.linalg.norm(f), np.finfo(float).tiny) and resid > 1e-300:
        raise SingularSystemError(f"Lyapunov resolvent residual {resid:.3e} exceeds tolerance")
    return HsOperator(F.triplet, p)


def _commuting_eigenbasis(f, g):
    """Eigenbasis of F that also diagonalizes Gamma inside eigenvalue clusters."""
    w, u = sorted_eigh(f)
    scale = max(np.abs(w).max(initial=0.0), 1.0)
    start = 0
    n = w.size
    while start < n:
        stop = start + 1
        while stop < n and abs(w[stop] - w[start]) <= 1e-10 * scale:
            stop += 1
        if stop - start > 1:
            block = u[:, start:stop]
            gw, gv = sorted_eigh(block.T @ g @ block)
            u[:, start:stop] = block @ gv
        start = stop
    return w, u


def quadratic_resolvent(
    F: HsOperator,
    lam: float,
    Q: QuadraticOperator,
    *,
    method: str = "auto",
    quad_tol: float = QUAD_TOL,
    max_iter: int = 60,
    return_info: bool = False,
):
    """Return the symmetric PSD P with ``P + lam P Gamma P = F``.

    ``method`` is ``"auto"`` (closed form per eigenvalue when Gamma commutes with
    F, matrix square-root form otherwise), ``"closed"`` (always the square-root
    form), ``"factored"`` (the same closed form through a factor of Gamma, one
    small eigen-decomposition) or ``"newton"`` (damped Newton from F).
    """
    if lam <= 0:
        raise PreconditionError("lambda must be positive")
    if method not in ("auto", "closed", "factored", "newton"):
        raise ValueError(f"unknown method {method!r}")
    if Q.n != F.n:
        raise DimensionError("Gamma and F sizes differ")
    if Q.min_eig < -PSD_TOL * max(1.0, np.abs(Q.gamma_mat).max(initial=0.0)):
        raise PreconditionError("quadratic resolvent needs Gamma >= 0")
    f = sym(F.mat)
    g = Q.gamma_mat
    fnorm = np.linalg.norm(f)
    gnorm = np.linalg.norm(g)
    if min_sym_eig(f) < -PSD_TOL * max(1.0, fnorm):
        raise PreconditionError("quadratic resolvent needs F >= 0")

    comm = np.linalg.norm(g @ f - f @ g)
    info = QuadraticResolventInfo(path="", residual=np.nan, commutator=comm)
    p = None
    if gnorm == 0.0:
        p = f.copy()
        info.path = "zero"
    elif method == "auto" and comm <= COMM_TOL * max(gnorm * fnorm, np.finfo(float).tiny):
        w, u = _commuting_eigenbasis(f, g)
        gd = u.T @ g @ u
        off = gd - np.diag(np.diag(gd))
        if np.linalg.norm(off) <= 1e-10 * max(gnorm, np.finfo(float).tiny):
            wf = np.clip(w, 0.0, None)
            gjj = np.clip(np.diag(gd), 0.0, None)
            gam = eigen_closed_form(wf, gjj, lam)
            p = (u * gam) @ u.T
            info.path = "commuting"
    if p is None and method in ("auto", "closed"):
        p = _sqrt_form(f, g, lam)
        info.path = "sqrt"
    if p is None and method == "factored":
        p = factored_form(f, Q.factor, lam)
        info.path = "factored"
    if p is None and method == "newton":
        p, its = _newton(f, g, lam, quad_tol, max_iter)
        info.path = "newton"
        info.iterations = its
    p = sym(p)
    resid = np.linalg.norm(p + lam * p @ g @ p - f)
    info.residual = resid / max(fnorm, np.finfo(float).tiny) if fnorm > 0 else resid
    if info.residual > quad_tol and resid > 1e-300:
        raise ConvergenceError(f"quadratic resolvent residual {info.residual:.3e} above tolerance", info.residual)
    out = HsOperator(F.triplet, p)
    return (out, info) if return_info else out


def eigen_closed_form(gamma_f, g_diag, lam):
    """Nonnegative root of ``lam g x^2 + x - gamma_f = 0`` per mode.

    Written as ``2 gamma_f / (1 + sqrt(1 + 4 lam g gamma_f))`` to avoid the
    cancellation in ``(-1 + sqrt(...)) / (2 lam g)``; equals ``gamma_f`` when
    ``g = 0``.
    """
    gamma_f = np.asarray(gamma_f, dtype=float)
    g_diag = np.asarray(g_diag, dtype=float)
    return 2.0 * gamma_f / (1.0 + np.sqrt(1.0 + 4.0 * lam * g_diag * gamma_f))


def _sqrt_form(f, g, lam):
    s = sqrt_psd(f)
    n_mat = sym(s @ g @ s)
    w, v = np.linalg.eigh(n_mat)
    w = np.clip(w, 0.0, None)
    weights = 2.0 / (1.0 + np.sqrt(1.0 + 4.0 * lam * w))
    return s @ ((v * weights) @ v.T) @ s


def factored_form(f, gfac, lam):
    """``F - lam F G k(lam G^T F G) G^T F`` with ``k(z) = 4 / (1 + sqrt(1 + 4z))^2``.

    Equal to the square-root form by the push-through identity
    ``h(F G G^T) F = F - F G k(G^T F G) G^T F`` for ``h = 1 - z k(z)``; only the
    rank(Gamma) x rank(Gamma) matrix ``G^T F G`` is diagonalized.
    """
    if gfac.shape[1] == 0:
        return f.copy()
    fg = f @ gfac
    w, v = np.linalg.eigh(sym(gfac.T @ fg))
    w = np.clip(w, 0.0, None)
    k = 4.0 / (1.0 + np.sqrt(1.0 + 4.0 * lam * w)) ** 2
    left = fg @ v
    return sym(f - lam * (left * k) @ left.T)


def _newton(f, g, lam, tol, max_iter):
    n = f.shape[0]
    eye = np.eye(n)
    p = f.copy()
    fnorm = max(np.linalg.norm(f), np.finfo(float).tiny)

    def resid(x):
        return x + lam * x @ g @ x - f

    r = resid(p)
    rn = np.linalg.norm(r)
    for it in range(1, max_iter + 1):
        if rn <= tol * fnorm:
            return p, it - 1
        k = 0.5 * eye + lam * p @ g
        step = sla.solve_sylvester(k, k.T, -r)
        step = sym(step)
        t = 1.0
        while True:
            cand = sym(p + t * step)
            rc = resid(cand)
            rcn = np.linalg.norm(rc)
            if rcn < (1.0 - 1e-4 * t) * rn or t < 1e-8:
                break
            t *= 0.5
        p, r, rn = cand, rc, rcn
    if rn <= tol * fnorm:
        return p, max_iter
    raise ConvergenceError("Newton iteration for the quadratic resolvent did not converge", rn / fnorm)


def yosida(P: HsOperator, lam: float, Q: QuadraticOperator, *, tol: float = 1e-9) -> HsOperator:
    """Yosida approximation ``(P - (I + lam B)^{-1} P) / lam``.

    Also checks it against ``B`` applied to the resolvent; the two agree up to
    the cancellation error of the first form, about ``eps |P| / lam``.
    """
    r = quadratic_resolvent(P, lam, Q)
    out = (P.mat - r.mat) / lam
    other = Q.apply(r)
    scale = max(1.0, np.linalg.norm(P.mat)) / lam
    gap = np.linalg.norm(out - other)
    if gap > tol * scale:
        raise ConvergenceError(f"Yosida identities disagree by {gap:.3e}", gap)
    return HsOperator(P.triplet, out)
