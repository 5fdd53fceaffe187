import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from oracles import hardy_si

from hsriccati.errors import CoercivityError, PreconditionError
from hsriccati.hardy import (
    HardyPlantSpec,
    build_hardy_plant,
    gradient_norm_sq,
    hardy_constant,
    hardy_matrix,
    hardy_norm_sq,
    hardy_quadratic_form,
    hs_membership_report,
    sufficient_condition,
    power_profile,
    power_sum_bracket,
    radial_eigenvalues,
)
from hsriccati.hinf import synthesize, verify_gain
from hsriccati.resolvents import coercivity_constant
from hsriccati.riccati import SolverConfig

ZETA_43 = (3.6009377454588685, 3.600937755458862)


@pytest.fixture(scope="module")
def hmat32():
    return hardy_matrix(32)


def test_hardy_constant():
    assert hardy_constant(3) == 0.25
    assert hardy_constant(4) == 1.0


def test_matrix_matches_sine_integral(hmat32):
    ref = hardy_si(32)
    assert np.max(np.abs(hmat32 - ref)) <= 1e-10 * np.abs(ref).max()
    assert np.max(np.abs(hmat32 - hmat32.T)) <= 1e-12 * np.abs(ref).max()


def test_quadrature_info():
    h, info = hardy_matrix(4, return_info=True)
    assert info.change <= 1e-10 and info.panels > 0
    assert h.shape == (4, 4)


def test_lambda_zero_is_stiffness(hmat32):
    plant = build_hardy_plant(HardyPlantSpec(lambda_hardy=0.0), hardy_mat=hmat32)
    np.testing.assert_array_equal(plant.a_mat, np.diag(radial_eigenvalues(32)))
    assert plant.omega_hardy == 0.5
    e1 = np.zeros(32)
    e1[0] = 1.0
    assert hardy_quadratic_form(plant, e1) == pytest.approx(math.pi**2, rel=1e-15)


def test_certificate_8_modes():
    plant = build_hardy_plant(HardyPlantSpec(lambda_hardy=0.1, modes=8))
    assert plant.certificate_min_eig >= -1e-8
    assert plant.omega_hardy == pytest.approx(0.3)


@pytest.mark.parametrize("lam", [0.0, 0.05, 0.1, 0.2, 0.249])
def test_certificates_32_modes(hmat32, lam):
    plant = build_hardy_plant(HardyPlantSpec(lambda_hardy=lam), hardy_mat=hmat32)
    lam_j = radial_eigenvalues(32)
    cert = np.linalg.eigvalsh(0.5 * (plant.a_mat + plant.a_mat.T) - 0.5 * (1 - lam / 0.25) * np.diag(lam_j))[0]
    assert cert >= -1e-8
    assert cert == pytest.approx(plant.certificate_min_eig, abs=1e-9)


def test_bad_quadrature_fails_certificate(hmat32):
    with pytest.raises(CoercivityError):
        build_hardy_plant(HardyPlantSpec(lambda_hardy=0.2), hardy_mat=hmat32 * 10.0)


def test_discrete_hardy_inequality(hmat32):
    # the Hardy form restricted to the span of the modes stays positive
    lam_j = radial_eigenvalues(32)
    assert np.linalg.eigvalsh(np.diag(lam_j) - 0.25 * hmat32)[0] > 0


def test_spec_validation():
    with pytest.raises(PreconditionError):
        HardyPlantSpec(lambda_hardy=0.25)
    with pytest.raises(PreconditionError):
        HardyPlantSpec(lambda_hardy=-0.1)
    with pytest.raises(PreconditionError):
        HardyPlantSpec(space_dim=2)
    with pytest.raises(PreconditionError):
        HardyPlantSpec(modes=0)
    with pytest.raises(PreconditionError):
        HardyPlantSpec(c1_weyl=100.0)
    with pytest.raises(PreconditionError):
        build_hardy_plant(HardyPlantSpec(space_dim=4, lambda_hardy=0.5, modes=2))


def test_weyl_bound_holds_for_fitted_constant():
    spec = HardyPlantSpec(modes=64)
    j = np.arange(1, 65)
    assert np.all(spec.c1 * j ** (2 / 3) < spec.eigenvalues)
    assert spec.c1 == pytest.approx(0.99 * math.pi**2)


def test_b_padding():
    spec = HardyPlantSpec(modes=3, b_profile=(1.0, 2.0, 3.0, 4.0))
    np.testing.assert_array_equal(spec.b, [1.0, 2.0, 3.0])
    assert spec.b_norm == pytest.approx(math.sqrt(30))
    np.testing.assert_allclose(power_profile(3, 2.0, 1.0), [2.0, 1.0, 2 / 3])


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.05, 0.1, 0.2, 0.249]))
def test_form_lower_bounds(seed, lam):
    rng = np.random.default_rng(seed)
    plant = build_hardy_plant(HardyPlantSpec(lambda_hardy=lam, modes=12))
    y = rng.normal(size=12) * np.arange(1, 13) ** -rng.uniform(0.5, 2.0)
    grad = gradient_norm_sq(plant, y)
    hard = hardy_norm_sq(plant, y)
    form = hardy_quadratic_form(plant, y)
    tol = 1e-9 * grad
    assert form == pytest.approx(grad - lam * hard, rel=1e-12)
    assert form >= (1 - lam / 0.25) * grad - tol
    assert form >= 0.5 * (1 - lam / 0.25) * (grad + 0.25 * hard) - tol


def test_form_infimum_decreases(hmat32):
    lams = [0.0, 0.05, 0.1, 0.15, 0.2, 0.24, 0.249]
    infs = []
    for lam in lams:
        plant = build_hardy_plant(HardyPlantSpec(lambda_hardy=lam), hardy_mat=hmat32)
        infs.append(coercivity_constant(plant.a_mat, plant.triplet))
    assert infs[0] == pytest.approx(1.0)
    assert all(b < a for a, b in zip(infs, infs[1:]))
    assert all(i >= 0.5 * (1 - lam / 0.25) - 1e-12 for i, lam in zip(infs, lams))


# ------------------------------------------------------------------ series


def test_zeta_bracket():
    lo, hi = power_sum_bracket(4 / 3)
    assert 3.60 <= lo <= hi <= 3.61
    assert lo <= ZETA_43[1] and hi >= ZETA_43[0]
    assert hi - lo < 1e-7


def test_bracket_contains_basel():
    lo, hi = power_sum_bracket(2.0, terms=1000)
    assert lo <= math.pi**2 / 6 <= hi
    with pytest.raises(PreconditionError):
        power_sum_bracket(1.0)


# --------------------------------------------------- sufficient condition


def test_condition_b_zero_consistent():
    rec = sufficient_condition(HardyPlantSpec(modes=4, b_profile=(0.0,)))
    assert not rec.condition_holds and not rec.gamma_psd and rec.status == "consistent"


def test_condition_scaled_b_single_mode():
    rec = sufficient_condition(HardyPlantSpec(modes=1, b_profile=(0.2,)))
    assert rec.condition_holds and rec.gamma_psd and rec.status == "consistent"


def test_condition_small_b_single_mode_sufficient_only_or_consistent():
    rec = sufficient_condition(HardyPlantSpec(modes=1, b_profile=(0.05,)))
    assert not rec.condition_holds
    assert rec.status == "consistent"


def test_condition_contradiction_window():
    # condition holds for gamma^2 b^2 in [0.009004, ...) while Gamma >= 0 needs b^2 >= pi^-4
    rec = sufficient_condition(HardyPlantSpec(modes=1, b_profile=(0.0975,)))
    assert rec.condition_holds and not rec.gamma_psd
    assert rec.status == "contradiction" and rec.contradiction
    assert 0.0975**2 < math.pi**-4


def test_condition_contradiction_many_modes():
    # rank-one b b^T minus a full-rank diagonal is never PSD beyond one mode
    rec = sufficient_condition(HardyPlantSpec(modes=32, b_profile=(1.0,)))
    assert rec.condition_holds and rec.gamma_min_eig < 0 and rec.status == "contradiction"


# ---------------------------------------------------------- HS membership


def test_membership_plateau_and_weyl():
    plant = build_hardy_plant(HardyPlantSpec(modes=8, b_profile=tuple(power_profile(64))))
    rep = hs_membership_report(plant, truncations=[16, 32, 64, 128])
    assert rep["plateau"]
    assert rep["weyl_sum_monotone"] and rep["weyl_bound_ok"]
    for r in rep["rows"]:
        assert r["B1B1*"] ** 2 == pytest.approx(np.sum(radial_eigenvalues(r["modes"]) ** -4.0), rel=1e-12)
        assert r["B1B1*"] <= r["weyl_sum"]


def test_parseval_single_coefficient():
    plant = build_hardy_plant(HardyPlantSpec(modes=4, b_profile=(0.0, 1.7)))
    rep = hs_membership_report(plant)
    assert rep["parseval_ok"]
    assert rep["rows"][-1]["B2B2*"] == pytest.approx(1.7**2, rel=1e-15)


# -------------------------------------------------------------- end to end


def test_single_mode_end_to_end():
    plant = build_hardy_plant(HardyPlantSpec(modes=1, b_profile=(0.2,)))
    cl, rep = synthesize(plant, SolverConfig(residual_tol=1e-12))
    assert rep.route == "coercive" and rep.residual_hs <= 1e-8
    assert verify_gain(cl, plant).passed
