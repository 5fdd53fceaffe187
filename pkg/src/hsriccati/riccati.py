"""Solvers for ``A*P + PA + P Gamma P = F`` on the truncated space.

``solve_coercive`` realizes the Yosida-regularized fixed point
``P = lam (I + lam L)^{-1} F + (I + lam L)^{-1} (I + lam B)^{-1} P`` along a
decreasing lambda schedule. Each stage is iterated (Anderson-accelerated) until
the increment is small; the stage solutions, which depend smoothly on lambda,
are then extrapolated to ``lam = 0`` with Neville's scheme. The same device is
used across the omega stages of ``solve_noncoercive``.

``newton_kleinman_oracle`` is an unrelated route (successive Lyapunov
linearizations) used as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .errors import (
    BoundViolation,
    CoercivityError,
    ContractionViolation,
    ConvergenceError,
    DimensionError,
    HypothesesNotMet,
    PreconditionError,
    SingularSystemError,
)
from .hsop import PSD_TOL, HsNormKind, HsOperator, hs_norm, min_sym_eig, sorted_eigh, sym, vnorm
from .resolvents import LyapunovOperator, QuadraticOperator, factored_form

KRON_MAX_N = 32


@dataclass(frozen=True, eq=False)
class RiccatiProblem:
    """Data of ``A*P + PA + P Gamma P = F``.

    ``c1`` optionally holds a factor with ``F = c1^T c1``; when absent the
    column norms of C1 are read off the diagonal of F.
    """

    L: LyapunovOperator
    Q: QuadraticOperator
    F: HsOperator
    c1: np.ndarray | None = None

    def __post_init__(self):
        n = self.L.n
        if self.Q.n != n or self.F.n != n:
            raise DimensionError("A, Gamma and F sizes differ")
        f = self.F.mat
        scale = max(1.0, np.abs(f).max(initial=0.0))
        if np.max(np.abs(f - f.T), initial=0.0) > 1e-10 * scale:
            raise PreconditionError("F must be symmetric")
        if min_sym_eig(f) < -PSD_TOL * scale:
            raise PreconditionError("F must be positive semidefinite")
        if self.c1 is not None:
            c1 = np.atleast_2d(np.asarray(self.c1, dtype=float))
            if c1.shape[1] != n:
                raise DimensionError("C1 must have n columns")
            object.__setattr__(self, "c1", c1)

    @classmethod
    def from_matrices(cls, triplet, a_mat, gamma_mat, f_mat, c1=None, omega=None):
        return cls(
            LyapunovOperator(triplet, a_mat, omega=omega),
            QuadraticOperator(gamma_mat),
            HsOperator(triplet, f_mat),
            c1=c1,
        )

    @property
    def triplet(self):
        return self.L.triplet

    @property
    def n(self):
        return self.L.n

    def with_a(self, a_mat) -> "RiccatiProblem":
        return RiccatiProblem(LyapunovOperator(self.triplet, a_mat), self.Q, self.F, self.c1)

    def c1_column_norms_sq(self) -> np.ndarray:
        """``|C1 e_j|^2``, equal to ``F_jj`` for any factorization."""
        if self.c1 is not None:
            return np.sum(self.c1**2, axis=0)
        return np.clip(np.diag(self.F.mat), 0.0, None)


@dataclass(frozen=True)
class SolverConfig:
    lambda_schedule: tuple = tuple(0.5**k for k in range(20))
    omega_schedule: tuple = tuple(10.0 ** (-k / 2) for k in range(13))
    fp_tol: float = 1e-14
    cauchy_tol: float = 1e-11
    residual_tol: float = 1e-9
    noncoercive_residual_tol: float = 1e-7
    omega_target_tol: float = 1e-10
    max_fp_iter: int = 3000
    max_outer: int = 200
    stagnation_stages: int = 2
    extrapolation_order: int = 10
    anderson_depth: int = 6
    contraction_slack: float = 1.1
    strict_bounds: bool = True

    def __post_init__(self):
        for name in ("lambda_schedule", "omega_schedule"):
            sched = tuple(float(v) for v in getattr(self, name))
            if not sched:
                raise PreconditionError(f"{name} is empty")
            if any(v <= 0 or not math.isfinite(v) for v in sched):
                raise PreconditionError(f"{name} must be positive")
            if any(b >= a for a, b in zip(sched, sched[1:])):
                raise PreconditionError(f"{name} must be strictly decreasing")
            object.__setattr__(self, name, sched)
        for name in (
            "fp_tol",
            "cauchy_tol",
            "residual_tol",
            "noncoercive_residual_tol",
            "omega_target_tol",
            "contraction_slack",
        ):
            if not getattr(self, name) > 0:
                raise PreconditionError(f"{name} must be positive")
        for name in ("max_fp_iter", "max_outer", "extrapolation_order", "stagnation_stages"):
            if int(getattr(self, name)) < 1:
                raise PreconditionError(f"{name} must be >= 1")
        if int(self.anderson_depth) < 0:
            raise PreconditionError("anderson_depth must be >= 0")


@dataclass
class StageRecord:
    param: str
    value: float
    iterations: int = 0
    observed_rate: float = float("nan")
    rate_printed: float = float("nan")
    rate_sharp: float = float("nan")
    increment: float = float("nan")
    residual: float = float("nan")
    extrapolated_residual: float = float("nan")
    gap: float = float("nan")
    norm_ratio: float = float("nan")
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "extra"}
        out.update(self.extra)
        return out


@dataclass(frozen=True, eq=False)
class SolutionReport:
    problem: RiccatiProblem
    P: HsOperator
    residual_hs: float
    min_eig: float
    history: tuple
    bounds_checklist: dict
    route: str
    notes: tuple = ()
    extras: dict = field(default_factory=dict)

    def recompute_residual(self) -> float:
        return riccati_residual(self.problem, self.P)

    @property
    def checklist_ok(self) -> bool:
        return all(self.bounds_checklist.values())


def riccati_residual_mat(prob: RiccatiProblem, p) -> np.ndarray:
    p = p.mat if isinstance(p, HsOperator) else np.asarray(p, dtype=float)
    return prob.L.apply(p) + p @ prob.Q.gamma_mat @ p - prob.F.mat


def riccati_residual(prob: RiccatiProblem, P) -> float:
    """``|A*P + PA + P Gamma P - F|`` in the (H,H) HS norm."""
    return float(np.linalg.norm(riccati_residual_mat(prob, P)))


def neville_at_zero(xs, ys):
    """Value at 0 of the polynomial through ``(xs[i], ys[i])``."""
    ys = [np.array(y, dtype=float) for y in ys]
    m = len(xs)
    for j in range(1, m):
        for i in range(m - j):
            ys[i] = (xs[i + j] * ys[i] - xs[i] * ys[i + 1]) / (xs[i + j] - xs[i])
    return ys[0]


def _anderson(T, x0, *, tol, depth, max_iter, noise_floor=1e-10, plateau=40):
    """Anderson-accelerated iteration of ``T`` on symmetric matrices.

    Returns the last image ``T(x)``, the iteration count, the largest observed
    ratio ``|T x - T y| / |x - y|`` over consecutive evaluation points, and the
    last increment ``|T x - x|``. Accelerated points that leave the PSD cone
    are replaced by the plain step. If the increment stops improving for
    ``plateau`` iterations while within ``100 tol`` the best iterate is
    accepted.
    """
    xs, gs = [], []
    x = x0
    prev = None
    rate = 0.0
    best = (math.inf, None, 0)
    for k in range(1, max_iter + 1):
        tx = T(x)
        g = tx - x
        gnorm = float(np.linalg.norm(g))
        xnorm = float(np.linalg.norm(x))
        if gnorm < best[0]:
            best = (gnorm, tx, k)
        elif k - best[2] > plateau and best[0] <= 100 * tol * max(1.0, xnorm):
            # increments sit at the rounding floor just above tol
            return best[1], k, rate, best[0]
        if prev is not None:
            dx = float(np.linalg.norm(x - prev[0]))
            if dx > noise_floor * max(1.0, xnorm):
                rate = max(rate, float(np.linalg.norm(tx - prev[1])) / dx)
        prev = (x, tx)
        if not np.all(np.isfinite(g)):
            raise ConvergenceError("fixed-point iterate is not finite", float("inf"))
        if gnorm <= tol * max(1.0, xnorm):
            return tx, k, rate, gnorm
        if depth == 0:
            x = tx
            continue
        xs.append(x.ravel())
        gs.append(g.ravel())
        if len(xs) > depth + 1:
            xs.pop(0)
            gs.pop(0)
        if len(xs) > 1:
            dg = np.diff(np.asarray(gs), axis=0).T
            dx_hist = np.diff(np.asarray(xs), axis=0).T
            coef, *_ = np.linalg.lstsq(dg, g.ravel(), rcond=None)
            cand = sym((tx.ravel() - (dx_hist + dg) @ coef).reshape(x.shape))
            if np.all(np.isfinite(cand)) and min_sym_eig(cand) >= -PSD_TOL * max(1.0, np.linalg.norm(cand)):
                x = cand
            else:
                x = tx
                xs, gs = [], []
        else:
            x = tx
    raise ConvergenceError(f"fixed-point stage did not converge in {max_iter} iterations", gnorm)


def _norm_bound_const(L: LyapunovOperator) -> float:
    """``1 / (omega (rho_1^2 + kappa_1^{-2}))``, the uniform bound on ``|P_lam| / |F|``."""
    t = L.triplet
    return 1.0 / (L.omega * (t.rho1**2 + t.kappa1**-2))


def _check_coercive_pre(prob: RiccatiProblem):
    if not prob.L.omega > 0:
        raise CoercivityError(f"A is not coercive (omega={prob.L.omega:.3e})")
    if not prob.Q.psd:
        raise PreconditionError(f"Gamma is not positive semidefinite (min eig {prob.Q.min_eig:.3e})")


def solve_coercive(
    prob: RiccatiProblem, cfg: SolverConfig | None = None, P0=None, *, strict: bool = True
) -> SolutionReport:
    """Solve the Riccati equation for coercive A and ``Gamma >= 0``.

    Parameters
    ----------
    prob
        Problem with ``prob.L.omega > 0`` and positive semidefinite Gamma.
    cfg
        Schedules and tolerances; see :class:`SolverConfig`.
    P0
        Optional warm start for the first lambda stage (defaults to 0).
    strict
        When False, stagnation or an exhausted schedule returns the best
        candidate (with ``residual_tol`` unchecked in the checklist) instead
        of raising.

    Returns
    -------
    SolutionReport
        ``route`` is ``"coercive"``. ``history`` has one record per lambda
        stage, including the largest observed Lipschitz ratio of the map, the
        printed rate ``1/(1 + lam omega (rho_1 + 1/kappa_1))`` and the sharp
        rate ``1/(1 + lam omega (rho_1^2 + kappa_1^{-2}))``.

    Raises
    ------
    ContractionViolation
        Observed ratio above ``contraction_slack`` times the sharp rate.
    ConvergenceError
        A stage stalls, or the schedule ends before the residual or Cauchy
        criterion is met.
    """
    cfg = cfg or SolverConfig()
    _check_coercive_pre(prob)
    t = prob.triplet
    L, Q = prob.L, prob.Q
    f = prob.F.mat
    fnorm = float(np.linalg.norm(f))
    p = np.zeros((t.n, t.n)) if P0 is None else sym(P0.mat if isinstance(P0, HsOperator) else P0)
    gfac = Q.factor

    history = []
    lams, sols = [], []
    best, best_res = None, math.inf
    stale = 0
    stop_reason = None
    violations = []
    for lam in cfg.lambda_schedule:

        def T(x, lam=lam):
            r = factored_form(x, gfac, lam)
            return sym(L.solve_shifted(lam * f + r, lam))

        p_new, its, rate, inc = _anderson(
            T, p, tol=cfg.fp_tol, depth=cfg.anderson_depth, max_iter=cfg.max_fp_iter
        )
        rec = StageRecord("lambda", lam, iterations=its, observed_rate=rate, increment=inc)
        rec.rate_printed = L.contraction_bound(lam)
        rec.rate_sharp = L.contraction_sharp(lam)
        if rate > cfg.contraction_slack * rec.rate_sharp:
            violations.append(lam)
            raise ContractionViolation(
                f"observed contraction {rate:.4f} exceeds {cfg.contraction_slack} x {rec.rate_sharp:.4f} at lambda={lam}"
            )
        rec.extra["error_bound"] = inc / max(1.0 - rec.rate_sharp, np.finfo(float).tiny)
        rec.residual = riccati_residual(prob, p_new)
        rec.gap = float(np.linalg.norm(p_new - sols[-1])) if sols else float("nan")
        rec.norm_ratio = float(np.linalg.norm(p_new)) / fnorm if fnorm > 0 else 0.0
        lams.append(lam)
        sols.append(p_new)
        p = p_new
        m = min(cfg.extrapolation_order, len(sols))
        cand = sym(neville_at_zero(lams[-m:], sols[-m:])) if m > 1 else p_new
        rec.extrapolated_residual = riccati_residual(prob, cand)
        rec.extra["extrapolation_points"] = m
        history.append(rec)
        improved = False
        for c, r in ((p_new, rec.residual), (cand, rec.extrapolated_residual)):
            if r < best_res:
                best, best_res, improved = c, r, True
        stale = 0 if improved else stale + 1
        if best_res <= cfg.residual_tol:
            stop_reason = "residual"
            break
        if len(sols) > 1 and rec.gap <= cfg.cauchy_tol:
            stop_reason = "cauchy"
            break
        if stale >= cfg.stagnation_stages:
            if not strict:
                stop_reason = "stagnation"
                break
            raise ConvergenceError(
                f"residual stagnated at {best_res:.3e} (target {cfg.residual_tol:.1e}) for {stale} lambda stages", best_res
            )
    if stop_reason is None and not strict:
        stop_reason = "schedule exhausted"
    if stop_reason is None:
        raise ConvergenceError(
            f"lambda schedule exhausted with residual {best_res:.3e} above {cfg.residual_tol:.1e}", best_res
        )

    P = HsOperator(t, sym(best))
    residual = riccati_residual(prob, P)
    gaps = [h.gap for h in history[1:]]
    cauchy_c = max((g / (a + b) for g, a, b in zip(gaps, lams, lams[1:])), default=0.0)
    ratio_sup = max(h.norm_ratio for h in history)
    min_eig = min_sym_eig(P)
    checklist = {
        "residual_tol": residual <= cfg.residual_tol,
        "symmetric": bool(np.max(np.abs(P.mat - P.mat.T), initial=0.0) <= 1e-10),
        "psd": min_eig >= -1e-9,
        "contraction_sharp": not violations,
        "norm_bound": ratio_sup <= _norm_bound_const(L) * (1 + 1e-8) + 1e-12,
        "stage_gaps_monotone": all(b <= a * (1 + 1e-6) + 1e-14 for a, b in zip(gaps, gaps[1:])),
    }
    return SolutionReport(
        problem=prob,
        P=P,
        residual_hs=residual,
        min_eig=min_eig,
        history=tuple(history),
        bounds_checklist=checklist,
        route="coercive",
        notes=(f"stopped on {stop_reason}",),
        extras={
            "omega": L.omega,
            "cauchy_constant": cauchy_c,
            "norm_ratio_sup": ratio_sup,
            "norm_bound_const": _norm_bound_const(L),
            "stop_reason": stop_reason,
        },
    )


def noncoercive_hypotheses(prob: RiccatiProblem, tol: float = 1e-10) -> dict:
    """Evaluate the hypotheses of the omega-continuation route."""
    a = prob.L.a_mat
    scale = max(1.0, np.abs(a).max(initial=0.0))
    col = prob.c1_column_norms_sq()
    return {
        "a_monotone": min_sym_eig(a) >= -tol * scale,
        "gamma_coercive": prob.Q.g0 > 0,
        "c1_injective": bool(np.all(col > 0)),
    }


def solve_noncoercive(prob: RiccatiProblem, cfg: SolverConfig | None = None) -> SolutionReport:
    """Solve with ``sym(A) >= 0`` and ``Gamma >= g0 I`` by continuation ``A + omega J``.

    Each omega stage is solved by :func:`solve_coercive`, warm-started from the
    previous one. The stage solutions are extrapolated to ``omega = 0``; the
    loop stops when the extrapolated solution meets
    ``cfg.noncoercive_residual_tol`` on the original equation or when stages are
    Cauchy within ``cfg.cauchy_tol``.

    The uniform bounds ``|P_omega| <= g0^{-1/2} |C1|`` and
    ``vnorm(P_omega) <= 2 g0^{-1/2} |C1|_{(V',H)}`` are checked at every
    stage; a violation raises :class:`BoundViolation` unless
    ``cfg.strict_bounds`` is False, in which case it is only recorded. The
    first bound follows from the trace of the equation for any data; the
    second is only guaranteed when A and Gamma are diagonal in the basis.
    """
    cfg = cfg or SolverConfig()
    hyp = noncoercive_hypotheses(prob)
    if not all(hyp.values()):
        raise HypothesesNotMet(f"omega-continuation hypotheses fail: {hyp}")
    t = prob.triplet
    g0 = prob.Q.g0
    col = prob.c1_column_norms_sq()
    c1_hh = float(np.sqrt(col.sum()))
    c1_vdh = float(np.sqrt((t.rho_sq * col).sum()))
    bound_hh = c1_hh / math.sqrt(g0)
    bound_v = 2.0 * c1_vdh / math.sqrt(g0)

    history = []
    omegas, sols = [], []
    best, best_res = None, math.inf
    stale = 0
    stop_reason = None
    p = None
    # stages run to their rounding floor; the continuation aims at omega_target_tol
    # and noncoercive_residual_tol is only the acceptance threshold
    inner_cfg = replace(cfg, residual_tol=1e-2 * cfg.omega_target_tol)
    for om in cfg.omega_schedule:
        sub = prob.with_a(prob.L.a_mat + om * t.gram)
        rep = solve_coercive(sub, inner_cfg, P0=p, strict=False)
        p_new = rep.P.mat
        rec = StageRecord("omega", om, iterations=sum(h.iterations for h in rep.history))
        rec.observed_rate = max(h.observed_rate for h in rep.history)
        rec.rate_printed = min(h.rate_printed for h in rep.history)
        rec.rate_sharp = min(h.rate_sharp for h in rep.history)
        rec.residual = riccati_residual(prob, p_new)
        rec.gap = float(np.linalg.norm(p_new - sols[-1])) if sols else float("nan")
        rec.extra["inner_residual"] = rep.residual_hs
        rec.extra["inner_stages"] = len(rep.history)
        rec.extra["norm_hh"] = float(np.linalg.norm(p_new))
        rec.extra["vnorm"] = vnorm(rep.P)
        rec.extra["bound_hh"] = bound_hh
        rec.extra["bound_v"] = bound_v
        rec.extra["bound_hh_ok"] = rec.extra["norm_hh"] <= bound_hh * (1 + 1e-9)
        rec.extra["bound_v_ok"] = rec.extra["vnorm"] <= bound_v * (1 + 1e-9)
        if cfg.strict_bounds and not (rec.extra["bound_hh_ok"] and rec.extra["bound_v_ok"]):
            raise BoundViolation(
                f"a-priori bound violated at omega={om}: |P|={rec.extra['norm_hh']:.4e} (bound {bound_hh:.4e}), "
                f"vnorm={rec.extra['vnorm']:.4e} (bound {bound_v:.4e})"
            )
        omegas.append(om)
        sols.append(p_new)
        p = p_new
        m = min(cfg.extrapolation_order, len(sols))
        cand = sym(neville_at_zero(omegas[-m:], sols[-m:])) if m > 1 else p_new
        rec.extrapolated_residual = riccati_residual(prob, cand)
        history.append(rec)
        improved = False
        for c, r in ((p_new, rec.residual), (cand, rec.extrapolated_residual)):
            if r < best_res:
                best, best_res, improved = c, r, True
        stale = 0 if improved else stale + 1
        if best_res <= cfg.omega_target_tol:
            stop_reason = "residual"
            break
        if len(sols) > 1 and rec.gap <= cfg.cauchy_tol:
            stop_reason = "cauchy"
            break
        if stale >= cfg.stagnation_stages:
            stop_reason = "stagnation"
            break
    if best_res > cfg.noncoercive_residual_tol:
        raise ConvergenceError(
            f"omega continuation ended ({stop_reason or 'schedule exhausted'}) with residual "
            f"{best_res:.3e} above {cfg.noncoercive_residual_tol:.1e}",
            best_res,
        )
    stop_reason = stop_reason or "schedule exhausted"
    P = HsOperator(t, sym(best))
    residual = riccati_residual(prob, P)
    gaps = [h.gap for h in history[1:]]
    min_eig = min_sym_eig(P)
    checklist = {
        "residual_tol": residual <= cfg.noncoercive_residual_tol,
        "symmetric": bool(np.max(np.abs(P.mat - P.mat.T), initial=0.0) <= 1e-10),
        "psd": min_eig >= -1e-9,
        "bound_hh": all(h.extra["bound_hh_ok"] for h in history),
        "bound_v": all(h.extra["bound_v_ok"] for h in history),
        "omega_gaps_monotone": all(b <= a * (1 + 1e-6) + 1e-14 for a, b in zip(gaps, gaps[1:])),
    }
    return SolutionReport(
        problem=prob,
        P=P,
        residual_hs=residual,
        min_eig=min_eig,
        history=tuple(history),
        bounds_checklist=checklist,
        route="noncoercive",
        notes=(f"stopped on {stop_reason}",),
        extras={"g0": g0, "bound_hh": bound_hh, "bound_v": bound_v, "stop_reason": stop_reason},
    )


def solve_indefinite(prob: RiccatiProblem, cfg: SolverConfig | None = None) -> SolutionReport:
    """Coercive A with sign-indefinite Gamma, by splitting ``Gamma = Gp - Gm``.

    Iterates ``P_{k+1} = solve_coercive(A, Gp, F + P_k Gm P_k)`` from ``P_0 = 0``.
    This lies outside the hypotheses of the fixed-point theory (which needs
    ``Gamma >= 0``); the report is labelled accordingly.
    """
    cfg = cfg or SolverConfig()
    if not prob.L.omega > 0:
        raise CoercivityError(f"A is not coercive (omega={prob.L.omega:.3e})")
    t = prob.triplet
    w, v = sorted_eigh(prob.Q.gamma_mat)
    gp = sym((v * np.clip(w, 0.0, None)) @ v.T)
    gm = sym((v * np.clip(-w, 0.0, None)) @ v.T)
    qp = QuadraticOperator(gp)
    f = prob.F.mat
    p = np.zeros((t.n, t.n))
    history = []
    stop_reason = None
    for k in range(1, cfg.max_outer + 1):
        sub = RiccatiProblem(prob.L, qp, HsOperator(t, sym(f + p @ gm @ p)))
        rep = solve_coercive(sub, cfg, P0=p, strict=False)
        gap = float(np.linalg.norm(rep.P.mat - p))
        p = rep.P.mat
        res = riccati_residual(prob, p)
        rec = StageRecord("outer", float(k), iterations=sum(h.iterations for h in rep.history))
        rec.observed_rate = max(h.observed_rate for h in rep.history)
        rec.rate_sharp = min(h.rate_sharp for h in rep.history)
        rec.rate_printed = min(h.rate_printed for h in rep.history)
        rec.gap, rec.residual = gap, res
        history.append(rec)
        if not np.isfinite(gap) or gap > 1e12 * max(1.0, np.linalg.norm(f)):
            raise ConvergenceError("indefinite outer iteration diverges", res)
        if res <= cfg.residual_tol:
            stop_reason = "residual"
            break
        if gap <= cfg.cauchy_tol:
            stop_reason = "cauchy"
            break
    if stop_reason is None:
        raise ConvergenceError(f"indefinite outer iteration stalled at residual {res:.3e}", res)
    P = HsOperator(t, sym(p))
    residual = riccati_residual(prob, P)
    min_eig = min_sym_eig(P)
    gaps = [h.gap for h in history]
    checklist = {
        "residual_tol": residual <= cfg.residual_tol,
        "symmetric": bool(np.max(np.abs(P.mat - P.mat.T), initial=0.0) <= 1e-10),
        "psd": min_eig >= -1e-9,
        "outer_monotone": all(b <= a * (1 + 1e-6) + 1e-14 for a, b in zip(gaps, gaps[1:])),
    }
    return SolutionReport(
        problem=prob,
        P=P,
        residual_hs=residual,
        min_eig=min_eig,
        history=tuple(history),
        bounds_checklist=checklist,
        route="indefinite",
        notes=(
            "Gamma is indefinite: solved by a positive/negative split outside the coercive theory",
            f"stopped on {stop_reason}",
        ),
        extras={"gamma_min_eig": float(w[-1]), "stop_reason": stop_reason},
    )


def select_route(prob: RiccatiProblem) -> str:
    """Pick ``coercive``, ``noncoercive`` or ``indefinite``; raise if none applies."""
    if prob.L.omega > 0 and prob.Q.psd:
        return "coercive"
    hyp = noncoercive_hypotheses(prob)
    if all(hyp.values()):
        return "noncoercive"
    if prob.L.omega > 0:
        return "indefinite"
    raise HypothesesNotMet(
        f"A is not coercive (omega={prob.L.omega:.3e}) and the continuation hypotheses fail: {hyp}"
    )


def solve(prob: RiccatiProblem, cfg: SolverConfig | None = None, route: str | None = None) -> SolutionReport:
    route = route or select_route(prob)
    solver = {"coercive": solve_coercive, "noncoercive": solve_noncoercive, "indefinite": solve_indefinite}
    if route not in solver:
        raise ValueError(f"unknown route {route!r}")
    return solver[route](prob, cfg)


def diagonal_closed_form(a_diag, g_diag, f_diag):
    """Per-mode root of ``g p^2 + 2 a p - f = 0`` with ``p >= 0``.

    ``(-a + sqrt(a^2 + g f)) / g`` written in the cancellation-free form
    ``f / (a + sqrt(a^2 + g f))``; reduces to ``f / (2a)`` when ``g = 0``.
    """
    a = np.asarray(a_diag, dtype=float)
    g = np.asarray(g_diag, dtype=float)
    f = np.asarray(f_diag, dtype=float)
    disc = np.sqrt(np.clip(a * a + g * f, 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a + disc > 0, f / (a + disc), 0.0)
    return out


def _lyap_solve(m, rhs):
    """Solve ``m^T X + X m = rhs``."""
    n = m.shape[0]
    if n <= KRON_MAX_N:
        eye = np.eye(n)
        # row-major vec: vec(M^T X) = (M^T kron I) x, vec(X M) = (I kron M^T) x
        K = np.kron(m.T, eye) + np.kron(eye, m.T)
        try:
            x = sla.solve(K, rhs.ravel())
        except sla.LinAlgError as exc:
            raise SingularSystemError("singular Lyapunov linearization") from exc
        return x.reshape(n, n)
    return sla.solve_continuous_lyapunov(m.T, rhs)


def newton_kleinman_oracle(prob: RiccatiProblem, P0=None, *, tol: float = 1e-11, max_iter: int = 100) -> HsOperator:
    """Newton iteration ``(A + Gamma P_k)^T X + X (A + Gamma P_k) = F + P_k Gamma P_k``.

    Each linearization is solved as a dense Kronecker system for ``n <= 32``
    and by Bartels-Stewart above that. ``P0`` defaults to 0 when the spectrum
    of A lies in the open right half-plane and to the diagonal closed form
    otherwise; the linearized operator must keep its spectrum there.
    """
    a = prob.L.a_mat
    g = prob.Q.gamma_mat
    f = prob.F.mat
    t = prob.triplet
    if P0 is None:
        if np.min(np.linalg.eigvals(a).real) > 0:
            p = np.zeros_like(a)
        else:
            p = np.diag(diagonal_closed_form(np.diag(a), np.diag(g), np.diag(f)))
    else:
        p = sym(P0.mat if isinstance(P0, HsOperator) else P0)
    if np.min(np.linalg.eigvals(a + g @ p).real) <= 0:
        raise SingularSystemError("initial guess does not make A + Gamma P0 positive-real")
    res = riccati_residual(prob, p)
    scale = max(1.0, float(np.linalg.norm(f)))
    for _ in range(max_iter):
        m = a + g @ p
        x = sym(_lyap_solve(m, f + p @ g @ p))
        if not np.all(np.isfinite(x)):
            raise ConvergenceError("Newton-Kleinman iterate is not finite", res)
        step = float(np.linalg.norm(x - p))
        new_res = riccati_residual(prob, x)
        p = x
        res = new_res
        if step <= 1e-14 * max(1.0, float(np.linalg.norm(x))):
            break
    else:
        raise ConvergenceError("Newton-Kleinman did not converge", res)
    if res > tol * scale:
        raise ConvergenceError(f"Newton-Kleinman residual {res:.3e} above {tol:.1e}", res)
    return HsOperator(t, p)


def uniqueness_probe(prob: RiccatiProblem, P1: HsOperator, P2: HsOperator, tol: float = 1e-12) -> dict:
    """Compare two solutions of the same problem.

    For diagonal data each mode satisfies
    ``d_j (2 a_jj + (p1_jj + p2_jj) g_jj) = 0`` with ``d_j = p2_jj - p1_jj``;
    the record lists ``d_j``, the factor and the product. For general data
    only the HS gap is meaningful.
    """
    mats = (prob.L.a_mat, prob.Q.gamma_mat, prob.F.mat, P1.mat, P2.mat)
    diagonal = all(np.max(np.abs(m - np.diag(np.diag(m))), initial=0.0) <= tol * max(1.0, np.abs(m).max()) for m in mats)
    out = {"diagonal": diagonal, "hs_gap": float(np.linalg.norm(P1.mat - P2.mat))}
    if diagonal:
        p1, p2 = np.diag(P1.mat), np.diag(P2.mat)
        a, g = np.diag(prob.L.a_mat), np.diag(prob.Q.gamma_mat)
        gaps = p2 - p1
        factor = 2 * a + (p1 + p2) * g
        out.update(
            mode_gaps=gaps.tolist(),
            factors=factor.tolist(),
            identity=(gaps * factor).tolist(),
            factors_positive=bool(np.all(factor > 0)),
        )
    return out
