"""State-feedback H-infinity synthesis and simulation-based verification.

The plant is ``y' + A y = B1 w + B2 u``, ``z = (C1 y, u)``, ``y(0) = 0``. With
``Gamma = B2 B2^T - gamma^{-2} B1 B1^T`` and ``F = C1^T C1`` the Riccati
solution P gives the feedback ``u = -B2^T P y`` and the closed loop
``y' = Atilde y + B1 w`` with ``Atilde = -A - B2 B2^T P``.

Verification integrates the closed loop with TR-BDF2 (L-stable, second order,
one LU factorization per step size) for a family of disturbances and compares
``int |C1 y|^2 + |u|^2`` with ``gamma^2 int |w|^2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline

from .errors import DimensionError, IntegratorBlowUp, PreconditionError, UnstableClosedLoop
from .hsop import HsOperator, sym
from .resolvents import LyapunovOperator, QuadraticOperator
from .riccati import RiccatiProblem, SolutionReport, SolverConfig, solve
from .triplet import SpectralTriplet

TRBDF2_GAMMA = 2.0 - math.sqrt(2.0)


def _as_cols(mat, n, name):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim == 1:
        mat = mat.reshape(-1, 1)
    if mat.ndim != 2 or mat.shape[0] != n:
        raise DimensionError(f"{name} must have {n} rows, got shape {mat.shape}")
    return mat


@dataclass(frozen=True, eq=False)
class ControlPlant:
    """Truncated plant data in the eigenbasis of the triplet.

    ``b1_mat`` is n x m1, ``b2_mat`` is n x m2 (a 1-D array is read as a
    single column), ``c1_mat`` is p x n.
    """

    triplet: SpectralTriplet
    a_mat: np.ndarray
    b1_mat: np.ndarray
    b2_mat: np.ndarray
    c1_mat: np.ndarray
    gamma_perf: float

    def __post_init__(self):
        n = self.triplet.n
        a = np.array(self.a_mat, dtype=float)
        if a.shape != (n, n):
            raise DimensionError(f"A must be {n}x{n}, got {a.shape}")
        b1 = _as_cols(self.b1_mat, n, "B1").copy()
        b2 = _as_cols(self.b2_mat, n, "B2").copy()
        c1 = np.atleast_2d(np.array(self.c1_mat, dtype=float))
        if c1.shape[1] != n:
            raise DimensionError(f"C1 must have {n} columns, got shape {c1.shape}")
        if not (float(self.gamma_perf) > 0 and math.isfinite(float(self.gamma_perf))):
            raise PreconditionError("gamma_perf must be positive and finite")
        for name, m in (("a_mat", a), ("b1_mat", b1), ("b2_mat", b2), ("c1_mat", c1)):
            if not np.all(np.isfinite(m)):
                raise PreconditionError(f"{name} has non-finite entries")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        object.__setattr__(self, "gamma_perf", float(self.gamma_perf))

    @property
    def n(self):
        return self.triplet.n

    @property
    def m1(self):
        return self.b1_mat.shape[1]

    @property
    def m2(self):
        return self.b2_mat.shape[1]

    def with_gamma(self, gamma_perf) -> "ControlPlant":
        return ControlPlant(self.triplet, self.a_mat, self.b1_mat, self.b2_mat, self.c1_mat, gamma_perf)


def gamma_matrix(plant: ControlPlant) -> np.ndarray:
    b1, b2 = plant.b1_mat, plant.b2_mat
    return sym(b2 @ b2.T - plant.gamma_perf**-2 * (b1 @ b1.T))


def build_riccati_problem(plant: ControlPlant) -> RiccatiProblem:
    """Riccati data ``Gamma = B2 B2^T - gamma^{-2} B1 B1^T`` and ``F = C1^T C1``.

    The sign of Gamma is not assumed; ``prob.Q.min_eig`` and ``prob.Q.psd``
    record it.
    """
    t = plant.triplet
    f = sym(plant.c1_mat.T @ plant.c1_mat)
    return RiccatiProblem(
        LyapunovOperator(t, plant.a_mat),
        QuadraticOperator(gamma_matrix(plant)),
        HsOperator(t, f),
        c1=plant.c1_mat,
    )


@dataclass(frozen=True, eq=False)
class ClosedLoop:
    P: HsOperator
    feedback_mat: np.ndarray
    atilde_mat: np.ndarray
    spectral_abscissa: float
    spectrum: np.ndarray

    @property
    def alpha(self) -> float:
        """Decay rate ``-spectral_abscissa``."""
        return -self.spectral_abscissa


def closed_loop(plant: ControlPlant, P: HsOperator) -> ClosedLoop:
    """Feedback ``-B2^T P`` and generator ``-A - B2 B2^T P`` (stability checked by the caller)."""
    p = P.mat
    k = -plant.b2_mat.T @ p
    atilde = -plant.a_mat + plant.b2_mat @ k
    eigs = np.linalg.eigvals(atilde)
    return ClosedLoop(P, k, atilde, float(np.max(eigs.real)), eigs)


def synthesize(plant: ControlPlant, cfg: SolverConfig | None = None, route: str | None = None):
    """Solve the Riccati equation and form the feedback.

    Exponential stability of the closed loop is certified at the truncated
    level by a negative spectral abscissa of ``Atilde``.

    Returns
    -------
    (ClosedLoop, SolutionReport)

    Raises
    ------
    HypothesesNotMet
        Neither the coercive nor the continuation route applies.
    UnstableClosedLoop
        ``max Re eig(Atilde) >= 0``; carries the spectrum.
    """
    prob = build_riccati_problem(plant)
    rep = solve(prob, cfg, route=route)
    cl = closed_loop(plant, rep.P)
    if not cl.spectral_abscissa < 0:
        raise UnstableClosedLoop(
            f"closed-loop spectral abscissa {cl.spectral_abscissa:.3e} is not negative", spectrum=cl.spectrum
        )
    return cl, rep


def riccati_quadratic_form(plant: ControlPlant, P, y) -> float:
    """``2<Ay,Py> + |B2^T P y|^2 - gamma^{-2}|B1^T P y|^2 - |C1 y|^2``.

    This is ``y^T R y`` for the Riccati residual R, so it vanishes at a solution.
    """
    p = P.mat if isinstance(P, HsOperator) else np.asarray(P, dtype=float)
    y = np.asarray(y, dtype=float)
    py = p @ y
    return float(
        2 * (plant.a_mat @ y) @ py
        + np.sum((plant.b2_mat.T @ py) ** 2)
        - plant.gamma_perf**-2 * np.sum((plant.b1_mat.T @ py) ** 2)
        - np.sum((plant.c1_mat @ y) ** 2)
    )


# ---------------------------------------------------------------- disturbances


@dataclass(frozen=True)
class Disturbance:
    """A disturbance signal ``w(t)`` with values in R^m1.

    kind
        ``"zero"``; ``"white"`` (smooth band-limited noise: a cubic spline
        through seeded Gaussian knots with spacing ``tau`` over ``[0, t_on]``); ``"sine"``
        (``amp sin(nu t) d``); ``"pulse"`` (``d`` on ``[0, t_on]``);
        ``"bump"`` (``d sin^2(pi t / t_on)`` on ``[0, t_on]``); ``"worst"``
        (``gamma^{-2} B1^T P y(t)`` plus a bump, generated in feedback).
    """

    kind: str
    direction: tuple = ()
    nu: float = 0.0
    amp: float = 1.0
    tau: float = 0.0
    t_on: float = math.inf
    seed: int = 0
    label: str = ""

    @property
    def feedback(self) -> bool:
        return self.kind == "worst"

    def open_loop(self, times, m1, side: str = "right") -> np.ndarray:
        """Exogenous part sampled at ``times``; shape ``(len(times), m1)``.

        ``side`` picks the one-sided limit at a jump (only pulses jump).
        """
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.size, m1))
        d = np.asarray(self.direction, dtype=float) if self.direction else np.zeros(m1)
        if self.kind == "zero":
            return out
        if self.kind == "sine":
            return np.outer(self.amp * np.sin(self.nu * times), d)
        if self.kind == "pulse":
            at_jump = np.isclose(times, self.t_on, rtol=1e-12, atol=1e-12)
            prof = np.where(at_jump, float(side == "left"), (times < self.t_on).astype(float))
            return np.outer(self.amp * prof, d)
        if self.kind in ("bump", "worst"):
            # smooth so the integrator keeps its order
            prof = np.where(times <= self.t_on, np.sin(np.pi * times / self.t_on) ** 2, 0.0)
            return np.outer(self.amp * prof, d)
        if self.kind == "white":
            # C2 cubic spline through seeded Gaussian knots, clamped to zero at both ends
            rng = np.random.default_rng(self.seed)
            nk = int(math.ceil(self.t_on / self.tau)) + 2
            knots_t = self.tau * np.arange(nk)
            knots = rng.standard_normal((nk, m1))
            knots[0] = 0.0
            knots[-1] = 0.0
            spline = CubicSpline(knots_t, knots, axis=0, bc_type="clamped")
            inside = times <= knots_t[-1]
            out[inside] = spline(times[inside])
            return out
        raise ValueError(f"unknown disturbance kind {self.kind!r}")


def disturbance_family(cl: ClosedLoop, plant: ControlPlant, *, n_white=20, n_sine=20, n_worst=10, seed=0, horizon=None):
    """Default verification family (white noise, frequency sweep, worst-case candidates).

    The sweep covers ``[0.1 alpha, max(10 alpha, 2 max|Im eig(Atilde)|)]`` so
    every closed-loop resonance lies inside it.
    """
    rng = np.random.default_rng(seed)
    m1 = plant.m1
    alpha = cl.alpha
    horizon = horizon if horizon is not None else 20.0 / alpha
    fam = []
    for k in range(n_white):
        fam.append(
            Disturbance("white", tau=horizon / 200, t_on=horizon / 2, seed=int(rng.integers(2**63)), label=f"white{k}")
        )
    lo = 0.1 * alpha
    hi = max(10.0 * alpha, 2.0 * float(np.max(np.abs(cl.spectrum.imag), initial=0.0)))
    nus = np.geomspace(lo, hi, n_sine)
    for k, nu in enumerate(nus):
        d = np.zeros(m1)
        d[k % m1] = 1.0
        fam.append(Disturbance("sine", direction=tuple(d), nu=float(nu), label=f"sine{k}"))
    for k in range(n_worst):
        d = rng.standard_normal(m1)
        d /= np.linalg.norm(d)
        fam.append(Disturbance("worst", direction=tuple(d), t_on=horizon / 40 * (1 + k), label=f"worst{k}"))
    return fam


# ---------------------------------------------------------------- integrator


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray  # (N+1, n)
    w: np.ndarray  # (N+1, m1)
    u: np.ndarray
    z: np.ndarray
    output_energy: float
    input_energy: float
    defect: float
    defect_scale: float
    label: str = ""

    @property
    def ratio(self) -> float:
        return self.output_energy / self.input_energy if self.input_energy > 0 else 0.0

    @property
    def relative_defect(self) -> float:
        return self.defect / self.defect_scale if self.defect_scale > 0 else 0.0

    def _replace_label(self, label):
        return replace(self, label=label)


def _trapz(vals, dt):
    if vals.shape[0] < 2:
        return np.zeros(vals.shape[1:])
    return dt * (vals.sum(axis=0) - 0.5 * (vals[0] + vals[-1]))


def _trapz2(right, left, dt):
    """Trapezoid rule with right limits at step starts and left limits at step ends."""
    if right.shape[0] < 2:
        return np.zeros(right.shape[1:])
    return 0.5 * dt * (right[:-1].sum(axis=0) + left[1:].sum(axis=0))


def _trbdf2_maps(M, dt):
    """One-step maps of TR-BDF2 for ``y' = M y + g``.

    ``y_{n+1} = Phi y_n + S0 g_n + Sg g_{n+gamma} + S1 g_{n+1}``.
    """
    n = M.shape[0]
    g = TRBDF2_GAMMA
    eye = np.eye(n)
    lu = sla.lu_factor(eye - 0.5 * g * dt * M)
    c1 = 1.0 / (g * (2.0 - g))
    c2 = (1.0 - g) ** 2 / (g * (2.0 - g))
    # stage 1: y_g = K^{-1}[(I + g dt/2 M) y_n + g dt/2 (g_n + g_g)]
    a_y = sla.lu_solve(lu, eye + 0.5 * g * dt * M)
    a_g = sla.lu_solve(lu, 0.5 * g * dt * eye)
    # stage 2: y_{n+1} = K^{-1}[c1 y_g - c2 y_n + g dt/2 g_{n+1}]
    phi = sla.lu_solve(lu, c1 * a_y - c2 * eye)
    s_mid = sla.lu_solve(lu, c1 * a_g)
    s1 = sla.lu_solve(lu, 0.5 * g * dt * eye)
    return phi, s_mid, s_mid, s1


def _euler_maps(M, dt):
    """Implicit Euler: ``y_{n+1} = (I - dt M)^{-1} (y_n + dt g_{n+1})``."""
    n = M.shape[0]
    lu = sla.lu_factor(np.eye(n) - dt * M)
    phi = sla.lu_solve(lu, np.eye(n))
    zero = np.zeros((n, n))
    return phi, zero, zero, dt * phi


SCHEMES = {"trbdf2": _trbdf2_maps, "euler": _euler_maps}


def simulate_batch(
    cl: ClosedLoop, plant: ControlPlant, disturbances, T: float, dt: float, blowup: float = 1e12, scheme: str = "trbdf2"
):
    """Integrate the closed loop for several disturbances at once.

    Disturbances without feedback share one generator and are advanced as
    columns of a single matrix; feedback-generated ("worst") signals share the
    generator ``Atilde + gamma^{-2} B1 B1^T P``. ``scheme`` is ``"trbdf2"``
    (default, second order) or ``"euler"`` (implicit Euler, first order).
    """
    if not (T > 0 and dt > 0):
        raise PreconditionError("T and dt must be positive")
    if scheme not in SCHEMES:
        raise PreconditionError(f"unknown scheme {scheme!r}")
    nsteps = max(1, int(round(T / dt)))
    dt = T / nsteps
    times = dt * np.arange(nsteps + 1)
    mid = times[:-1] + TRBDF2_GAMMA * dt
    p = cl.P.mat
    b1 = plant.b1_mat
    m1 = plant.m1
    wfb = plant.gamma_perf**-2 * (b1.T @ p)  # worst-case state gain
    out = [None] * len(disturbances)
    groups = {}
    for idx, d in enumerate(disturbances):
        groups.setdefault(d.feedback, []).append(idx)
    for fb, idxs in groups.items():
        M = cl.atilde_mat + (b1 @ wfb if fb else 0.0)
        phi, s0, sg, s1 = SCHEMES[scheme](M, dt)
        k = len(idxs)
        n = plant.n
        # exogenous signals laid out as (m1, steps*k) so that every map is one BLAS call;
        # a step starts from right limits and ends at left limits, so jumps on nodes cost no order
        def sampled(t, side):
            v = np.stack([disturbances[i].open_loop(t, m1, side) for i in idxs], axis=-1)
            return v.transpose(1, 0, 2).reshape(m1, -1)

        vn = sampled(times, "right")
        vl = sampled(times, "left")
        vm = sampled(mid, "right")
        drive = (s0 @ b1) @ vn[:, : nsteps * k] + (sg @ b1) @ vm + (s1 @ b1) @ vl[:, k:]
        drive = np.ascontiguousarray(drive.reshape(n, nsteps, k).transpose(1, 0, 2))
        ys = np.zeros((nsteps + 1, n, k))
        y = np.zeros((n, k))
        bound = blowup * (1.0 + np.abs(vn).max(initial=0.0) * max(1.0, np.abs(b1).max(initial=0.0)))
        for s in range(nsteps):
            y = phi @ y + drive[s]
            ys[s + 1] = y
            if s % 256 == 0 and not np.all(np.abs(y) < bound):
                raise IntegratorBlowUp(f"state exceeded {bound:.1e} at t={times[s + 1]:.3e}")
        if not np.all(np.isfinite(ys)) or np.abs(ys).max(initial=0.0) >= bound:
            raise IntegratorBlowUp("state blew up during integration")
        yf = ys.transpose(1, 0, 2).reshape(n, -1)
        fbw = wfb @ yf if fb else 0.0
        trajs = _trajectories(cl, plant, times, yf, vn + fbw, vl + fbw, dt, k)
        for col, i in enumerate(idxs):
            out[i] = trajs[col]._replace_label(disturbances[i].label)
    return out


def _trajectories(cl, plant, times, yf, wf, wl, dt, k):
    """Energies and energy-identity defects for ``k`` trajectories at once.

    ``yf`` holds states as columns ordered (time, member); ``wf`` and ``wl``
    hold the right and left limits of the inputs in the same layout.
    """
    steps = times.size
    p = cl.P.mat
    py = p @ yf
    uf = cl.feedback_mat @ yf
    zf = plant.c1_mat @ yf

    def per_time(vals):
        return vals.reshape(steps, k)

    out_e = _trapz(per_time(np.sum(zf**2, axis=0) + np.sum(uf**2, axis=0)), dt)
    in_e = plant.gamma_perf**2 * _trapz2(per_time(np.sum(wf**2, axis=0)), per_time(np.sum(wl**2, axis=0)), dt)
    ay_py = per_time(2 * np.sum((plant.a_mat @ yf) * py, axis=0))
    bw_r = per_time(2 * np.sum((plant.b1_mat @ wf) * py, axis=0))
    bw_l = per_time(2 * np.sum((plant.b1_mat @ wl) * py, axis=0))
    b2py = per_time(2 * np.sum((plant.b2_mat.T @ py) ** 2, axis=0))
    term = per_time(np.sum(py * yf, axis=0))[-1]
    defect = term + _trapz(ay_py + b2py, dt) - _trapz2(bw_r, bw_l, dt)
    scale = np.abs(term) + _trapz(np.abs(ay_py), dt) + _trapz2(np.abs(bw_r), np.abs(bw_l), dt) + _trapz(b2py, dt)

    def rows(mat, col):
        return mat.reshape(mat.shape[0], steps, k)[:, :, col].T

    return [
        Trajectory(
            times, rows(yf, c), rows(wf, c), rows(uf, c), rows(zf, c),
            float(out_e[c]), float(in_e[c]), float(abs(defect[c])), float(scale[c]),
        )
        for c in range(k)
    ]


def simulate_closed_loop(
    cl: ClosedLoop, plant: ControlPlant, w: Disturbance, T: float | None = None, dt: float | None = None, scheme: str = "trbdf2"
):
    """Single-disturbance wrapper around :func:`simulate_batch`."""
    T, dt = default_horizon(cl, T, dt)
    return simulate_batch(cl, plant, [w], T, dt, scheme=scheme)[0]


def default_horizon(cl: ClosedLoop, T=None, dt=None, nu_max: float = 0.0):
    """``T = 20/alpha`` and ``dt = min(0.1/alpha, 1e-3 T, 0.1/nu_max)``.

    The last cap resolves the fastest forcing frequency in the family.
    """
    alpha = cl.alpha
    if not alpha > 0:
        raise UnstableClosedLoop("closed loop is not exponentially stable", spectrum=cl.spectrum)
    T = 20.0 / alpha if T is None else float(T)
    if dt is None:
        dt = min(0.1 / alpha, 1e-3 * T)
        if nu_max > 0:
            dt = min(dt, 0.1 / nu_max)
    return T, float(dt)


@dataclass
class GainReport:
    labels: list
    ratios: list
    max_ratio: float
    worst_label: str
    verdict: str
    max_relative_defect: float
    defect_ok: bool
    T: float
    dt: float
    refinements: int
    spectral_abscissa: float
    worst: Trajectory = field(repr=False, default=None)
    notes: tuple = ("exponential stability certified by the spectral abscissa of the truncated generator",)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "max_ratio": self.max_ratio,
            "worst_disturbance": self.worst_label,
            "n_disturbances": len(self.ratios),
            "ratios": dict(zip(self.labels, self.ratios)),
            "max_relative_energy_defect": self.max_relative_defect,
            "energy_defect_ok": self.defect_ok,
            "T": self.T,
            "dt": self.dt,
            "refinements": self.refinements,
            "spectral_abscissa": self.spectral_abscissa,
            "notes": list(self.notes),
        }


def verify_gain(
    cl: ClosedLoop,
    plant: ControlPlant,
    family=None,
    T: float | None = None,
    dt: float | None = None,
    *,
    defect_tol: float = 1e-6,
    max_refine: int = 6,
    seed: int = 0,
    scheme: str = "trbdf2",
) -> GainReport:
    """Simulate every disturbance and compare output and input energies.

    The step is halved until the energy-identity defect of every trajectory
    is below ``defect_tol`` times its scale (at most ``max_refine`` times).
    The verdict is ``"PASS"`` iff every ratio is strictly below 1.
    """
    T, _ = default_horizon(cl, T, dt)
    if family is None:
        family = disturbance_family(cl, plant, seed=seed, horizon=T)
    nu_max = max((d.nu for d in family if d.kind == "sine"), default=0.0)
    T, dt = default_horizon(cl, T, dt, nu_max=nu_max)
    refinements = 0
    while True:
        trajs = simulate_batch(cl, plant, family, T, dt, scheme=scheme)
        rel = max(tr.relative_defect for tr in trajs)
        if rel <= defect_tol or refinements >= max_refine:
            break
        dt /= 2
        refinements += 1
    ratios = [tr.ratio for tr in trajs]
    k = int(np.argmax(ratios))
    verdict = "PASS" if ratios[k] < 1.0 else "FAIL"
    return GainReport(
        labels=[tr.label for tr in trajs],
        ratios=ratios,
        max_ratio=ratios[k],
        worst_label=trajs[k].label,
        verdict=verdict,
        max_relative_defect=rel,
        defect_ok=rel <= defect_tol,
        T=T,
        dt=trajs[k].t[1] - trajs[k].t[0],
        refinements=refinements,
        spectral_abscissa=cl.spectral_abscissa,
        worst=trajs[k],
    )


def frequency_gain_sq(cl: ClosedLoop, plant: ControlPlant, nu: float, direction) -> float:
    """``|G(i nu) d|^2`` for ``G(s) = [C1; K] (s I - Atilde)^{-1} B1``."""
    n = plant.n
    d = np.asarray(direction, dtype=float)
    x = np.linalg.solve(1j * nu * np.eye(n) - cl.atilde_mat, plant.b1_mat @ d)
    out = np.concatenate([plant.c1_mat @ x, cl.feedback_mat @ x])
    return float(np.sum(np.abs(out) ** 2))


def write_gain_csv(path, traj: Trajectory, gamma_perf: float, header=()):
    """Columns t, |y|, |z|, |u|, running ratio of output to input energy.

    Each entry of ``header`` is written first as a ``# `` comment line.
    """
    t = traj.t
    dt = t[1] - t[0] if t.size > 1 else 0.0
    zu = np.sum(traj.z**2, axis=1) + np.sum(traj.u**2, axis=1)
    ww = gamma_perf**2 * np.sum(traj.w**2, axis=1)

    def cum(v):
        c = np.zeros_like(v)
        c[1:] = np.cumsum(0.5 * dt * (v[1:] + v[:-1]))
        return c

    num, den = cum(zu), cum(ww)
    running = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        wr = csv.writer(fh)
        wr.writerow(["t", "norm_y", "norm_z", "norm_u", "running_ratio"])
        for row in zip(t, np.linalg.norm(traj.y, axis=1), np.linalg.norm(traj.z, axis=1), np.linalg.norm(traj.u, axis=1), running):
            wr.writerow([repr(float(v)) for v in row])
