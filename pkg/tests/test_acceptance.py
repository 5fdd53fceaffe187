"""Acceptance criteria, each run at its stated tolerance.

Every criterion records one PASS/FAIL line (printed at the end of the session).
Parts that are known not to hold are kept as separate strict xfail tests that
still run the full check at the stated tolerance.
"""

import math
import time

import numpy as np
import pytest
from acceptance_log import record
from oracles import kron_lyapunov_resolvent, transfer_gain_sq

from hsriccati.generators import (
    random_coercive_problem,
    random_commuting_psd_pair,
    random_noncoercive_problem,
    random_plant,
    random_psd,
)
from hsriccati.hardy import (
    HardyPlantSpec,
    build_hardy_plant,
    hardy_matrix,
    sufficient_condition,
    power_profile,
    power_sum_bracket,
)
from hsriccati.hinf import ControlPlant, Disturbance, simulate_closed_loop, synthesize, verify_gain
from hsriccati.hsop import (
    HsNormKind,
    HsOperator,
    coercive_pairings,
    dual_norm,
    hs_norm,
    min_sym_eig,
    pairing,
    pairing_positivity_check,
    vnorm,
)
from hsriccati.resolvents import (
    LyapunovOperator,
    QuadraticOperator,
    coercivity_constant,
    lyapunov_resolvent,
    quadratic_resolvent,
)
from hsriccati.riccati import SolverConfig, newton_kleinman_oracle, solve_coercive, solve_noncoercive
from hsriccati.triplet import SpectralTriplet

SEED = 20240601


def coercive_a(rng, t, omega):
    n = t.n
    x = rng.normal(size=(n, n))
    k = rng.normal(size=(n, n))
    d = t.rho
    return d[:, None] * (x @ x.T / n + omega * np.eye(n) + k - k.T) * d[None, :]


# ------------------------------------------------------------ criterion 1


def test_criterion_1_lyapunov_resolvent():
    rng = np.random.default_rng(SEED + 1)
    worst, lib_time = 0.0, 0.0
    start = time.perf_counter()
    for _ in range(200):
        n = int(rng.integers(1, 17))
        t = SpectralTriplet.from_power_law(n, s=rng.uniform(0.5, 1.0))
        a = coercive_a(rng, t, rng.uniform(0.1, 1.0))
        f = random_psd(rng, n)
        lam = float(10 ** rng.uniform(-3, 1))
        tic = time.perf_counter()
        p = lyapunov_resolvent(HsOperator(t, f), lam, LyapunovOperator(t, a))
        lib_time += time.perf_counter() - tic
        ref = kron_lyapunov_resolvent(a, f, lam)
        worst = max(worst, np.linalg.norm(p.mat - ref) / np.linalg.norm(ref))
    total = time.perf_counter() - start
    ok = worst <= 1e-10 and total < 5.0
    record("1", ok, f"max rel err {worst:.2e} (tol 1e-10), runtime {total:.2f}s incl. oracle, {lib_time:.2f}s solver (< 5s)")
    assert ok


# ------------------------------------------------------------ criterion 2


def test_criterion_2_quadratic_resolvent():
    rng = np.random.default_rng(SEED + 2)
    worst_res, worst_closed, bound_fail = 0.0, 0.0, 0
    for i in range(200):
        n = int(rng.integers(1, 9))
        t = SpectralTriplet.from_power_law(n)
        lam = float(10 ** rng.uniform(-3, 1))
        if i % 2:
            f, g = random_commuting_psd_pair(rng, n)
        else:
            f = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
            g = random_psd(rng, n, rank=int(rng.integers(0, n + 1)))
        p, info = quadratic_resolvent(HsOperator(t, f), lam, QuadraticOperator(g), return_info=True)
        worst_res = max(worst_res, info.residual)
        if i % 2:
            # scalar closed form per eigenpair of F, computed independently here
            w, u = np.linalg.eigh(f)
            gd = np.einsum("ij,jk,ki->i", u.T, g, u)
            roots = np.where(
                gd > 0, (-1 + np.sqrt(1 + 4 * lam * gd * w)) / (2 * lam * np.where(gd > 0, gd, 1.0)), w
            )
            ref = (u * roots) @ u.T
            worst_closed = max(worst_closed, np.linalg.norm(p.mat - ref) / max(np.linalg.norm(ref), 1e-300))
        wp, wf = np.linalg.eigvalsh(p.mat), np.linalg.eigvalsh(f)
        tol = 1e-12 * max(1.0, wf[-1])
        if wp[0] < -tol or np.any(wp > wf + tol) or hs_norm(p) > hs_norm(HsOperator(t, f)) * (1 + 1e-12):
            bound_fail += 1
    ok = worst_res <= 1e-10 and worst_closed <= 1e-12 and bound_fail == 0
    record(
        "2",
        ok,
        f"max residual {worst_res:.2e} (1e-10), closed form rel {worst_closed:.2e} (1e-12), bound violations {bound_fail}/200",
    )
    assert ok


# ------------------------------------------------------------ criterion 3


@pytest.fixture(scope="module")
def coercive_runs():
    rng = np.random.default_rng(SEED + 3)
    runs = []
    for _ in range(100):
        n = int(rng.integers(1, 33))
        prob = random_coercive_problem(rng, n)
        runs.append((prob, solve_coercive(prob), newton_kleinman_oracle(prob)))
    return runs


def test_criterion_3_coercive_riccati(coercive_runs):
    worst_res = max(rep.residual_hs for _, rep, _ in coercive_runs)
    worst_gap = max(np.linalg.norm(rep.P.mat - nk.mat) for _, rep, nk in coercive_runs)
    omegas = [prob.L.omega for prob, _, _ in coercive_runs]
    stages = [h for _, rep, _ in coercive_runs for h in rep.history]
    worst_rate = max(h.observed_rate / h.rate_printed for h in stages)
    ok = worst_res <= 1e-8 and worst_gap <= 1e-6 and worst_rate <= 1.1 and min(omegas) >= 0.1
    record(
        "3",
        ok,
        f"max residual {worst_res:.2e} (1e-8), max NK gap {worst_gap:.2e} (1e-6), "
        f"max observed/printed rate {worst_rate:.3f} over {len(stages)} stages (1.1), min omega {min(omegas):.3f}",
    )
    assert ok


# ------------------------------------------------------------ criterion 4


@pytest.fixture(scope="module")
def noncoercive_runs():
    rng = np.random.default_rng(SEED + 4)
    runs = []
    for i in range(50):
        prob = random_noncoercive_problem(rng, int(rng.integers(1, 9)), diagonal=i % 5 == 0)
        # violations of the a-priori bounds are recorded, not raised, so every instance is scored
        runs.append((prob, solve_noncoercive(prob, SolverConfig(strict_bounds=False))))
    return runs


def test_criterion_4_noncoercive_riccati(noncoercive_runs):
    bound_fail = sum(not h.extra["bound_hh_ok"] for _, rep in noncoercive_runs for h in rep.history)
    hyp_ok = all(
        min_sym_eig(prob.L.a_mat) >= -1e-12 and prob.Q.g0 >= 0.5 and np.all(prob.c1_column_norms_sq() > 0)
        for prob, _ in noncoercive_runs
    )
    worst_res = max(rep.residual_hs for _, rep in noncoercive_runs)
    worst_diag, n_diag = 0.0, 0
    for prob, rep in noncoercive_runs:
        a, g = np.diag(prob.L.a_mat), np.diag(prob.Q.gamma_mat)
        if np.count_nonzero(prob.L.a_mat - np.diag(a)) == 0 and np.count_nonzero(prob.Q.gamma_mat - np.diag(g)) == 0:
            col = np.sum(prob.c1**2, axis=0)
            ref = (-a + np.sqrt(a * a + g * col)) / g
            worst_diag = max(worst_diag, np.max(np.abs(np.diag(rep.P.mat) - ref)))
            n_diag += 1
    ok = hyp_ok and bound_fail == 0 and worst_res <= 1e-7 and worst_diag <= 1e-10 and n_diag > 0
    record(
        "4",
        ok,
        f"HH bound violations {bound_fail}, max residual {worst_res:.2e} (1e-7), "
        f"diagonal closed form max err {worst_diag:.2e} over {n_diag} instances (1e-10); V bound in 4.vbound, gap monotonicity in 4.gaps",
    )
    assert ok


@pytest.mark.xfail(strict=True, reason="the V-norm bound is only guaranteed for diagonal data; see the decision ledger")
def test_criterion_4_v_bound(noncoercive_runs):
    bad = [
        (i, h.value, h.extra["vnorm"] / h.extra["bound_v"])
        for i, (_, rep) in enumerate(noncoercive_runs)
        for h in rep.history
        if not h.extra["bound_v_ok"]
    ]
    inst = sorted({i for i, _, _ in bad})
    worst = max((r for _, _, r in bad), default=0.0)
    record("4.vbound", not bad, f"stages violating vnorm <= 2 g0^-1/2 |C1|_(V',H): {len(bad)} in instances {inst}, worst ratio {worst:.4f}")
    assert not bad


@pytest.mark.xfail(strict=True, reason="omega-stage gaps are not monotone in general; see the decision ledger")
def test_criterion_4_gaps_monotone(noncoercive_runs):
    bad = 0
    for _, rep in noncoercive_runs:
        gaps = [h.gap for h in rep.history[1:]]
        if any(b > a * (1 + 1e-6) + 1e-14 for a, b in zip(gaps, gaps[1:])):
            bad += 1
    record("4.gaps", bad == 0, f"instances with a non-monotone omega-stage gap sequence: {bad}/50")
    assert bad == 0


# ------------------------------------------------------------ criterion 5


def test_criterion_5_symmetry_psd(coercive_runs, noncoercive_runs):
    reps = [rep for _, rep, _ in coercive_runs] + [rep for _, rep in noncoercive_runs]
    asym = max(np.max(np.abs(r.P.mat - r.P.mat.T)) for r in reps)
    low = min(min_sym_eig(r.P) for r in reps)
    ok = asym <= 1e-10 and low >= -1e-9
    record("5", ok, f"{len(reps)} solutions: max |P - P^T| {asym:.1e} (1e-10), min eig {low:.2e} (>= -1e-9)")
    assert ok


# ------------------------------------------------------------ criterion 6


def test_criterion_6_hinf_verification():
    rng = np.random.default_rng(SEED + 6)
    start = time.perf_counter()
    worst_ratio, worst_defect, fails, min_dist = 0.0, 0.0, 0, math.inf
    for _ in range(50):
        plant = random_plant(rng, int(rng.integers(1, 9)))
        cl, _ = synthesize(plant)
        rep = verify_gain(cl, plant, seed=int(rng.integers(2**32)))
        fails += not (rep.passed and rep.defect_ok)
        worst_ratio = max(worst_ratio, rep.max_ratio)
        worst_defect = max(worst_defect, rep.max_relative_defect)
        min_dist = min(min_dist, len(rep.ratios))
    # scalar plants against the frequency response
    worst_freq = 0.0
    for _ in range(5):
        a, b1, b2, c1 = rng.uniform(0.3, 2.0, size=4)
        gamma = 1.5 * b1 / b2
        plant = ControlPlant(SpectralTriplet([1.0]), [[a]], [[b1]], [[b2]], [[c1]], gamma)
        cl, _ = synthesize(plant)
        a_cl = cl.atilde_mat[0, 0]
        for nu in (0.2 * abs(a_cl), abs(a_cl), 5 * abs(a_cl)):
            period = 2 * math.pi / nu
            T = period * math.ceil(200 / abs(a_cl) / period)
            tr = simulate_closed_loop(cl, plant, Disturbance("sine", direction=(1.0,), nu=nu), T=T, dt=min(0.01, 0.05 / nu))
            ref = transfer_gain_sq(a_cl, b1, c1, cl.feedback_mat[0, 0], nu) / gamma**2
            worst_freq = max(worst_freq, abs(tr.ratio / ref - 1))
    total = time.perf_counter() - start
    ok = fails == 0 and worst_ratio < 1 and min_dist >= 50 and worst_freq <= 0.01 and worst_defect <= 1e-6
    record(
        "6",
        ok,
        f"50 loops: failures {fails}, max ratio {worst_ratio:.3f} (< 1), min disturbances {min_dist} (>= 50), "
        f"max energy defect {worst_defect:.1e} (1e-6); scalar frequency mismatch {worst_freq:.2e} (1e-2); {total:.1f}s",
    )
    assert ok


# ------------------------------------------------------------ criterion 7


def test_criterion_7_hardy():
    start = time.perf_counter()
    lo, hi = power_sum_bracket(4 / 3)
    bracket_ok = 3.60 <= lo <= hi <= 3.61
    hmat = hardy_matrix(32)
    certs, rows, ok_all = [], [], bracket_ok
    for lam in (0.0, 0.05, 0.1, 0.2):
        spec = HardyPlantSpec(lambda_hardy=lam, modes=32, b_profile=tuple(power_profile(32)))
        plant = build_hardy_plant(spec, hardy_mat=hmat)
        lam_j = spec.eigenvalues
        a = plant.a_mat
        cert = np.linalg.eigvalsh(0.5 * (a + a.T) - 0.5 * (1 - lam / 0.25) * np.diag(lam_j))[0]
        certs.append(cert)
        lemma = sufficient_condition(spec)
        # Gamma is rank one minus a positive definite diagonal, so the direct check fails
        # at 32 modes; the loop is still solved (indefinite route) and verified
        cl, rep = synthesize(plant, SolverConfig(residual_tol=1e-12))
        gain = verify_gain(cl, plant)
        rows.append((lam, lemma.gamma_psd, rep.route, rep.residual_hs, gain.passed))
        ok_all &= cert >= -1e-8 and rep.residual_hs <= 1e-8 and gain.passed
    # a configuration where the direct check passes (one mode)
    spec1 = HardyPlantSpec(lambda_hardy=0.1, modes=1, b_profile=(0.2,))
    plant1 = build_hardy_plant(spec1)
    psd1 = sufficient_condition(spec1).gamma_psd
    cl1, rep1 = synthesize(plant1, SolverConfig(residual_tol=1e-12))
    ok_all &= psd1 and rep1.residual_hs <= 1e-8 and verify_gain(cl1, plant1).passed
    total = time.perf_counter() - start
    ok_all &= total < 60
    detail = "; ".join(f"lam={l}: psd={p} route={r} res={s:.1e} gain={'PASS' if g else 'FAIL'}" for l, p, r, s, g in rows)
    record(
        "7",
        ok_all,
        f"zeta(4/3) in [{lo:.10f}, {hi:.10f}], min certificate {min(certs):.3f} (>= -1e-8); {detail}; "
        f"1-mode psd={psd1} res={rep1.residual_hs:.1e}; {total:.1f}s (< 60s)",
    )
    assert ok_all


# ------------------------------------------------------------ criterion 8


def _triplet(rng, n):
    t = SpectralTriplet.from_power_law(n, c=rng.uniform(0.2, 3.0), s=rng.uniform(0.3, 1.5))
    if rng.random() < 0.5:
        return t
    # looser embedding constants
    return SpectralTriplet(t.rho_sq, kappa1=t.kappa1 * rng.uniform(1, 3), kappa2=t.kappa2 * rng.uniform(1, 3))


def test_criterion_8_lemma_pairings():
    rng = np.random.default_rng(SEED + 81)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        t = _triplet(rng, n)
        a = coercive_a(rng, t, rng.uniform(0.01, 2.0))
        omega = coercivity_constant(a, t)
        p = HsOperator(t, rng.normal(size=(n, n)))
        first, second = coercive_pairings(p, a)
        tol = 1e-10 * np.abs(a).max() * hs_norm(p) ** 2
        bad += first < omega * hs_norm(p, HsNormKind.VdH) ** 2 - tol
        bad += second < omega * hs_norm(p, HsNormKind.HV) ** 2 - tol
    record("8.lemma", bad == 0, f"violations {bad}/2000 inequality checks over 1000 trials")
    assert bad == 0


def test_criterion_8_embedding_chains():
    rng = np.random.default_rng(SEED + 82)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        t = _triplet(rng, n)
        p = HsOperator(t, rng.normal(size=(n, n)))
        hh = hs_norm(p)
        bad += dual_norm(p) > (t.kappa2 + 1 / t.rho1) * hh * (1 + 1e-12)
        bad += vnorm(p) < (t.rho1 + 1 / t.kappa1) * hh * (1 - 1e-12)
    record("8.chains", bad == 0, f"violations {bad}/2000 checks over 1000 trials")
    assert bad == 0


def test_criterion_8_hs_properties():
    rng = np.random.default_rng(SEED + 83)
    bad = {"a": 0, "b": 0, "c": 0, "d": 0}
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        t = _triplet(rng, n)
        p1 = HsOperator(t, rng.normal(size=(n, n)))
        p2 = HsOperator(t, rng.normal(size=(n, n)))
        bad["a"] += np.linalg.norm(p1.mat, 2) > hs_norm(p1) * (1 + 1e-12)
        # compactness: finite-section tails are HS-small and dominate the operator-norm error
        tails = [np.linalg.norm(p1.mat[:, k:]) for k in range(n + 1)]
        ops = [np.linalg.norm(p1.mat[:, k:], 2) if k < n else 0.0 for k in range(n + 1)]
        bad["b"] += any(b > a * (1 + 1e-12) for a, b in zip(tails, tails[1:])) or tails[-1] != 0.0
        bad["b"] += any(o > h * (1 + 1e-12) for o, h in zip(ops, tails))
        prod = hs_norm(p2 @ p1)
        bad["c"] += prod > hs_norm(p2) * hs_norm(p1) * (1 + 1e-12)
        bad["c"] += prod > np.linalg.norm(p2.mat, 2) * hs_norm(p1) * (1 + 1e-12)
        g = rng.normal(size=(n, n))
        bad["d"] += not pairing_positivity_check(p1, HsOperator(t, g @ g.T))
    total = sum(bad.values())
    record("8.hs", total == 0, "violations " + ", ".join(f"({k}) {v}" for k, v in bad.items()) + " over 1000 trials")
    assert total == 0


@pytest.mark.xfail(strict=True, reason="P -> P Gamma P is not monotone on PSD pairs; see the decision ledger")
def test_criterion_8_b_monotonicity():
    rng = np.random.default_rng(SEED + 84)
    bad, worst = 0, 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        t = SpectralTriplet.from_power_law(n)
        p1 = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        p2 = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        g = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        e = pairing(HsOperator(t, p1 @ g @ p1 - p2 @ g @ p2), HsOperator(t, p1 - p2))
        scale = np.linalg.norm(g) * max(np.linalg.norm(p1), np.linalg.norm(p2)) ** 3
        if e < -1e-12 * scale:
            bad += 1
            worst = min(worst, e / scale)
    record("8.monotone", bad == 0, f"violations {bad}/1000 (worst scaled trace form {worst:.3e})")
    assert bad == 0
