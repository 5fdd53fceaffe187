"""Heat equation with the singular potential ``lambda/|x|^2`` as a control plant.

The domain is the unit ball of R^3 restricted to radial functions. With
``y = v/r`` the operator becomes ``-v'' - lambda v / r^2`` on ``(0, 1)`` with
Dirichlet ends, so the Dirichlet-Laplacian eigenpairs are

    e_j = sin(j pi r) / (r sqrt(2 pi)),    lambda_j = (j pi)^2,

and every Hardy integral ``int e_j e_k / |x|^2 dx = 2 int_0^1 sin(j pi r)
sin(k pi r) / r^2 dr`` is one-dimensional. This radial reduction keeps the
singularity at the origin and the sharp Hardy constant ``(N-2)^2/4``.

Plant data in this basis: ``A = diag(lambda_j) - lambda H``,
``B1 = C1 = diag(1/lambda_j)``, ``B2 = b`` (one column of coefficients of the
actuator profile).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoercivityError, PreconditionError, QuadratureError
from .hinf import ControlPlant, gamma_matrix
from .hsop import HsOperator, hs_norm, min_sym_eig, sym
from .triplet import SpectralTriplet

BALL_MEASURE_3D = 4.0 * math.pi / 3.0
CERT_TOL = 1e-8
GL_ORDER = 20


def hardy_constant(space_dim: int) -> float:
    """Optimal Hardy constant ``(N-2)^2/4``."""
    return (space_dim - 2) ** 2 / 4.0


def radial_eigenvalues(modes: int) -> np.ndarray:
    """Radial Dirichlet eigenvalues ``(j pi)^2`` of the unit ball in R^3."""
    return (np.pi * np.arange(1, modes + 1)) ** 2


def power_profile(modes: int, amp: float = 1.0, decay: float = 1.0) -> np.ndarray:
    """Actuator coefficients ``b_j = amp * j^{-decay}``."""
    return amp * np.arange(1, modes + 1, dtype=float) ** (-decay)


@dataclass(frozen=True)
class HardyPlantSpec:
    """Data of the singular heat plant.

    ``b_profile`` lists the coefficients of b in the eigenbasis; it is padded
    with zeros (or truncated) to ``modes``. The L2 norm of b used by the
    sufficient condition is that of the full profile. ``c1_weyl=None`` fits
    ``0.99 min_j lambda_j j^{-2/N}`` over the retained modes and
    ``domain_measure=None`` is the volume of the unit ball.
    """

    space_dim: int = 3
    lambda_hardy: float = 0.1
    modes: int = 32
    b_profile: tuple = (1.0,)
    gamma_perf: float = 1.0
    c1_weyl: float | None = None
    domain_measure: float | None = None
    quad_tol: float = 1e-10

    def __post_init__(self):
        if int(self.space_dim) != self.space_dim or self.space_dim < 3:
            raise PreconditionError("space_dim must be an integer >= 3")
        lam = float(self.lambda_hardy)
        if not (0.0 <= lam < hardy_constant(self.space_dim)):
            raise PreconditionError(
                f"lambda_hardy={lam} must lie in [0, {hardy_constant(self.space_dim)})"
            )
        if int(self.modes) != self.modes or self.modes < 1:
            raise PreconditionError("modes must be a positive integer")
        b = np.asarray(self.b_profile, dtype=float).reshape(-1)
        if not np.all(np.isfinite(b)):
            raise PreconditionError("b_profile must be finite")
        object.__setattr__(self, "b_profile", tuple(float(x) for x in b))
        if not (float(self.gamma_perf) > 0 and math.isfinite(float(self.gamma_perf))):
            raise PreconditionError("gamma_perf must be positive and finite")
        if self.c1_weyl is not None and not self.c1_weyl > 0:
            raise PreconditionError("c1_weyl must be positive")
        if self.domain_measure is not None and not self.domain_measure > 0:
            raise PreconditionError("domain_measure must be positive")
        if not self.quad_tol > 0:
            raise PreconditionError("quad_tol must be positive")
        # Weyl lower bound on every retained eigenvalue
        lam_j = self.eigenvalues
        j = np.arange(1, self.modes + 1, dtype=float)
        if not np.all(self.c1 * j ** (2.0 / self.space_dim) < lam_j):
            raise PreconditionError(f"c1_weyl={self.c1} violates the Weyl lower bound on the retained modes")

    @property
    def hardy_const(self) -> float:
        return hardy_constant(self.space_dim)

    @property
    def omega(self) -> float:
        """Coercivity constant ``(1 - lambda/H_N)/2`` guaranteed by the Hardy inequality."""
        return 0.5 * (1.0 - self.lambda_hardy / self.hardy_const)

    @property
    def eigenvalues(self) -> np.ndarray:
        return radial_eigenvalues(self.modes)

    @property
    def b(self) -> np.ndarray:
        full = np.asarray(self.b_profile, dtype=float)
        out = np.zeros(self.modes)
        k = min(self.modes, full.size)
        out[:k] = full[:k]
        return out

    @property
    def b_norm(self) -> float:
        return float(np.linalg.norm(self.b_profile))

    @property
    def c1(self) -> float:
        if self.c1_weyl is not None:
            return float(self.c1_weyl)
        j = np.arange(1, self.modes + 1, dtype=float)
        return 0.99 * float(np.min(self.eigenvalues * j ** (-2.0 / self.space_dim)))

    @property
    def measure(self) -> float:
        return BALL_MEASURE_3D if self.domain_measure is None else float(self.domain_measure)

    def with_modes(self, modes: int) -> "HardyPlantSpec":
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw["modes"] = modes
        return HardyPlantSpec(**kw)


# ---------------------------------------------------------------- quadrature


def _graded_panels(modes: int, level: int, grade: float = 0.5, depth: int = 12) -> np.ndarray:
    """Panel breakpoints on [0, 1], geometric toward 0, then split ``2^level`` times.

    The base panels are short enough to hold about one period of the fastest
    oscillation ``sin(2 modes pi r)``.
    """
    geo = grade ** np.arange(depth, 0, -1)
    base = np.concatenate([[0.0], geo, [1.0]])
    hmax = 1.0 / (2 * modes)
    pts = [0.0]
    for a, b in zip(base[:-1], base[1:]):
        m = max(1, int(math.ceil((b - a) / hmax))) * 2**level
        pts.extend(np.linspace(a, b, m + 1)[1:])
    return np.asarray(pts)


def _hardy_quadrature(modes: int, level: int) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    br = _graded_panels(modes, level)
    a, b = br[:-1, None], br[1:, None]
    r = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wr = (0.5 * (b - a) * w).ravel()
    s = np.sin(np.pi * np.outer(r, np.arange(1, modes + 1)))
    return 2.0 * (s * (wr / r**2)[:, None]).T @ s


@dataclass(frozen=True)
class QuadratureInfo:
    level: int
    panels: int
    change: float


def hardy_matrix(modes: int, tol: float = 1e-10, max_level: int = 6, return_info: bool = False):
    """Matrix ``H[k, j] = int e_j e_k / |x|^2 dx`` for the radial modes.

    Composite Gauss-Legendre on a graded mesh, refined by panel halving until
    successive results agree to ``tol`` relative to ``max|H|``.

    Raises
    ------
    QuadratureError
        The refinement does not settle within ``max_level`` halvings.
    """
    if modes < 1:
        raise PreconditionError("modes must be >= 1")
    prev = _hardy_quadrature(modes, 0)
    for level in range(1, max_level + 1):
        cur = _hardy_quadrature(modes, level)
        change = float(np.max(np.abs(cur - prev)) / np.max(np.abs(cur)))
        if change <= tol:
            mat = sym(cur)
            if return_info:
                return mat, QuadratureInfo(level, _graded_panels(modes, level).size - 1, change)
            return mat
        prev = cur
    raise QuadratureError(f"Hardy quadrature did not settle to {tol:.1e} (last change {change:.1e})")


# ---------------------------------------------------------------- plant


@dataclass(frozen=True, eq=False)
class HardyPlant(ControlPlant):
    """A :class:`ControlPlant` that also carries the Hardy data it was built from."""

    spec: HardyPlantSpec = None
    hardy_mat: np.ndarray = None
    omega_hardy: float = 0.0
    certificate_min_eig: float = 0.0
    quadrature: QuadratureInfo = None
    notes: tuple = field(default=("radial reduction of the unit ball in R^3",))

    def with_gamma(self, gamma_perf) -> "HardyPlant":
        kw = {k: getattr(self.spec, k) for k in self.spec.__dataclass_fields__}
        kw["gamma_perf"] = gamma_perf
        return build_hardy_plant(HardyPlantSpec(**kw), hardy_mat=self.hardy_mat)

    def quadratic_form(self, y) -> float:
        return hardy_quadratic_form(self, y)


def build_hardy_plant(spec: HardyPlantSpec, hardy_mat=None) -> HardyPlant:
    """Assemble the plant and certify coercivity.

    The certificate is ``min eig(sym(A) - omega diag(lambda_j)) >= -1e-8`` for
    ``omega = (1 - lambda/H_N)/2``.

    Raises
    ------
    QuadratureError
        Hardy integrals did not converge.
    CoercivityError
        The certificate fails (quadrature too coarse).
    """
    if spec.space_dim != 3:
        raise PreconditionError("assembly is implemented for the radial unit ball in R^3 only")
    lam_j = spec.eigenvalues
    info = None
    if hardy_mat is None:
        hardy_mat, info = hardy_matrix(spec.modes, spec.quad_tol, return_info=True)
    hardy_mat = np.asarray(hardy_mat, dtype=float)
    a = np.diag(lam_j) - spec.lambda_hardy * hardy_mat
    omega = spec.omega
    cert = min_sym_eig(sym(a) - omega * np.diag(lam_j))
    if cert < -CERT_TOL:
        raise CoercivityError(f"coercivity certificate failed: min eig {cert:.3e} < -{CERT_TOL:.0e}")
    inv = np.diag(1.0 / lam_j)
    hardy_mat = hardy_mat.copy()
    hardy_mat.setflags(write=False)
    return HardyPlant(
        SpectralTriplet(lam_j),
        a,
        inv,
        spec.b.reshape(-1, 1),
        inv,
        spec.gamma_perf,
        spec=spec,
        hardy_mat=hardy_mat,
        omega_hardy=omega,
        certificate_min_eig=cert,
        quadrature=info,
    )


def gradient_norm_sq(plant: HardyPlant, y) -> float:
    """``int |grad y|^2 = sum_j lambda_j y_j^2``."""
    y = plant.triplet.coeffs(y)
    return float(np.dot(plant.triplet.rho_sq * y, y))


def hardy_norm_sq(plant: HardyPlant, y) -> float:
    """``int |y|^2 / |x|^2 = y^T H y``."""
    y = plant.triplet.coeffs(y)
    return float(y @ plant.hardy_mat @ y)


def hardy_quadratic_form(plant: HardyPlant, y) -> float:
    """``(A y, y) = int |grad y|^2 - lambda int |y|^2/|x|^2``."""
    y = plant.triplet.coeffs(y)
    return float(y @ plant.a_mat @ y)


# ---------------------------------------------------------------- sufficient condition


def power_sum_bracket(s: float, terms: int = 10**6) -> tuple[float, float]:
    """Enclosure of ``sum_{j>=1} j^{-s}`` for ``s > 1``.

    Partial sum of ``terms`` terms plus the integral bounds
    ``(M+1)^{1-s}/(s-1) <= tail <= M^{1-s}/(s-1)``.
    """
    if not s > 1:
        raise PreconditionError("the series converges only for s > 1")
    m = int(terms)
    # smallest terms first
    partial = float(np.sum(np.arange(m, 0, -1, dtype=float) ** (-s)))
    lo = partial + (m + 1) ** (1 - s) / (s - 1)
    hi = partial + m ** (1 - s) / (s - 1)
    return lo, hi


@dataclass(frozen=True)
class SufficientConditionRecord:
    """Advisory comparison of the series condition with the direct sign check of Gamma.

    ``status`` is ``"consistent"`` when both verdicts agree, ``"sufficient-only"``
    when the condition fails but Gamma is PSD (legal), and ``"contradiction"``
    when the condition holds yet Gamma has a negative eigenvalue.
    """

    series_bracket: tuple
    rhs: float
    condition_holds: bool
    condition_certain: bool
    gamma_min_eig: float
    gamma_psd: bool
    status: str
    modes: int

    @property
    def contradiction(self) -> bool:
        return self.status == "contradiction"

    def as_dict(self):
        return {
            "series_bracket": list(self.series_bracket),
            "rhs": self.rhs,
            "condition_holds": self.condition_holds,
            "condition_certain": self.condition_certain,
            "gamma_min_eig": self.gamma_min_eig,
            "gamma_psd": self.gamma_psd,
            "status": self.status,
            "modes": self.modes,
        }


def sufficient_condition(spec: HardyPlantSpec, psd_tol: float = 1e-12, terms: int = 10**6) -> SufficientConditionRecord:
    """Evaluate ``sum j^{-4/N} <= c1^2 m(Omega) gamma^2 |b|^2`` and the sign of Gamma.

    The series is enclosed by :func:`power_sum_bracket`; the condition counts as
    holding when the upper end of the enclosure satisfies it. Gamma is checked
    at the truncation ``spec.modes``. Never raises on a verdict.
    """
    if not 1 <= spec.space_dim < 4:
        raise PreconditionError("the series converges only for N < 4")
    lo, hi = power_sum_bracket(4.0 / spec.space_dim, terms)
    rhs = spec.c1**2 * spec.measure * spec.gamma_perf**2 * spec.b_norm**2
    holds = hi <= rhs
    certain = holds or lo > rhs
    lam_j = spec.eigenvalues
    b = spec.b
    g = np.outer(b, b) - spec.gamma_perf**-2 * np.diag(lam_j**-2.0)
    gmin = min_sym_eig(g)
    scale = max(float(np.max(np.abs(g))), np.finfo(float).tiny)
    psd = gmin >= -psd_tol * scale
    if holds == psd:
        status = "consistent"
    elif psd:
        status = "sufficient-only"
    else:
        status = "contradiction"
    return SufficientConditionRecord((lo, hi), rhs, holds, certain, gmin, psd, status, spec.modes)


# ---------------------------------------------------------------- HS membership


# name used by the build contract
lemma51_condition = sufficient_condition


def _hs_norms(spec: HardyPlantSpec) -> dict:
    lam_j = spec.eigenvalues
    t = SpectralTriplet(lam_j)
    b = spec.b
    inv2 = np.diag(lam_j**-2.0)
    bb = np.outer(b, b)
    g = bb - spec.gamma_perf**-2 * inv2
    return {
        "B1B1*": hs_norm(HsOperator(t, inv2)),
        "C1*C1": hs_norm(HsOperator(t, inv2)),
        "B2B2*": hs_norm(HsOperator(t, bb)),
        "Gamma": hs_norm(HsOperator(t, g)),
        "weyl_sum": float(np.sum(lam_j**-2.0)),
    }


def hs_membership_report(plant: HardyPlant, truncations=None, plateau_tol: float = 0.01, terms: int = 10**6) -> dict:
    """HS norms of B1B1*, C1*C1, B2B2*, Gamma along increasing truncations.

    ``weyl_sum`` is ``sum_j lambda_j^{-2}``, which the Weyl bound caps by
    ``c1^{-2} sum_j j^{-4/N}``; the HS norm of ``diag(lambda_j^{-2})`` is its
    square root of ``sum_j lambda_j^{-4}`` and lies below it. ``plateau`` holds
    when the last doubling moves every norm by less than ``plateau_tol``
    relatively. The Parseval check compares ``|B2B2*|_HS`` with ``|b|^2``.
    """
    spec = plant.spec
    if truncations is None:
        top = max(spec.modes, 64)
        truncations = sorted({max(1, top >> k) for k in range(4)} | {spec.modes})
    rows = []
    for m in truncations:
        row = {"modes": int(m)}
        row.update(_hs_norms(spec.with_modes(int(m))))
        rows.append(row)
    keys = ("B1B1*", "C1*C1", "B2B2*", "Gamma")
    last, prev = rows[-1], None
    for r in rows[:-1]:
        if 2 * r["modes"] == last["modes"]:
            prev = r
    changes = {}
    if prev is not None:
        for k in keys:
            denom = max(abs(last[k]), np.finfo(float).tiny)
            changes[k] = abs(last[k] - prev[k]) / denom
    _, hi = power_sum_bracket(4.0 / spec.space_dim, terms)
    weyl_cap = hi / spec.c1**2
    own = _hs_norms(spec)
    parseval_gap = abs(own["B2B2*"] - float(np.dot(spec.b, spec.b)))
    return {
        "rows": rows,
        "doubling_change": changes,
        "plateau": bool(changes) and all(v < plateau_tol for v in changes.values()),
        "weyl_cap": weyl_cap,
        "weyl_sum_monotone": all(b["weyl_sum"] >= a["weyl_sum"] for a, b in zip(rows, rows[1:])),
        "weyl_bound_ok": all(r["weyl_sum"] <= weyl_cap for r in rows),
        "parseval_gap": parseval_gap,
        "parseval_ok": parseval_gap <= 1e-12 * max(1.0, spec.b_norm**2),
        "gamma_min_eig": min_sym_eig(gamma_matrix(plant)),
    }
