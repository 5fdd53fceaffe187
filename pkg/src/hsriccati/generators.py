"""Seeded random problem families used by the test suite, scripts and CLI studies."""

from __future__ import annotations

import numpy as np

from .hinf import ControlPlant
from .riccati import RiccatiProblem
from .triplet import SpectralTriplet


def _coercive_a(rng, t: SpectralTriplet, omega: float) -> np.ndarray:
    """``D (S + K) D`` with ``D = diag(rho)``, ``S >= omega I`` and K skew."""
    n = t.n
    x = rng.normal(size=(n, n))
    s = x @ x.T / n + omega * np.eye(n)
    k = rng.normal(size=(n, n))
    d = t.rho
    return d[:, None] * (s + k - k.T) * d[None, :]


def random_coercive_problem(rng, n: int, omega_range=(0.1, 1.0)) -> RiccatiProblem:
    """Coercive A with certified constant at least ``omega_range[0]``, PSD Gamma and F."""
    t = SpectralTriplet.from_power_law(n, s=rng.uniform(0.5, 1.0))
    a = _coercive_a(rng, t, rng.uniform(*omega_range))
    g = rng.normal(size=(n, int(rng.integers(1, n + 1))))
    c = rng.normal(size=(n, n))
    return RiccatiProblem.from_matrices(t, a, g @ g.T / n, c.T @ c / n)


def random_noncoercive_problem(rng, n: int, diagonal: bool = False) -> RiccatiProblem:
    """Monotone but rank-deficient sym(A), ``Gamma >= g0 I`` with ``g0 in [0.5, 2]``, injective C1.

    ``diagonal=True`` gives diagonal data, for which every mode decouples.
    """
    t = SpectralTriplet.from_power_law(n, s=rng.uniform(0.5, 1.0))
    g0 = rng.uniform(0.5, 2.0)
    if diagonal:
        a = np.diag(np.abs(rng.normal(size=n)))
        gam = np.diag(g0 + np.abs(rng.normal(size=n)))
        c = np.diag(rng.uniform(0.5, 2.0, size=n))
    else:
        x = rng.normal(size=(n, max(1, n // 2)))
        k = rng.normal(size=(n, n)) / np.sqrt(n)
        a = x @ x.T / n + k - k.T
        g = rng.normal(size=(n, n))
        gam = g @ g.T / n + g0 * np.eye(n)
        c = rng.normal(size=(n + 1, n)) / np.sqrt(n)
    return RiccatiProblem.from_matrices(t, a, gam, c.T @ c, c1=c)


def random_plant(rng, n: int) -> ControlPlant:
    """Coercive plant with invertible B2 and gamma above the level that keeps Gamma PSD.

    ``Gamma >= 0`` iff ``gamma^2 >= lambda_max(B2^{-1} B1 B1^T B2^{-T})``; gamma is
    drawn from 1.2 to 3 times that level.
    """
    t = SpectralTriplet.from_power_law(n, s=rng.uniform(0.5, 1.0))
    a = _coercive_a(rng, t, rng.uniform(0.1, 1.0))
    m1 = int(rng.integers(1, 3))
    b1 = rng.normal(size=(n, m1))
    b2 = rng.normal(size=(n, n)) / np.sqrt(n)
    c1 = rng.normal(size=(int(rng.integers(1, n + 1)), n)) / np.sqrt(n)
    z = np.linalg.solve(b2, b1)
    gmin = np.sqrt(np.linalg.eigvalsh(z @ z.T)[-1])
    return ControlPlant(t, a, b1, b2, c1, gmin * rng.uniform(1.2, 3.0))


def random_psd(rng, n: int, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    x = rng.normal(size=(n, rank))
    return x @ x.T / max(rank, 1)


def random_commuting_psd_pair(rng, n: int):
    """``(F, Gamma)`` sharing a random orthonormal eigenbasis."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    f = (q * rng.uniform(0.0, 3.0, size=n)) @ q.T
    g = (q * rng.uniform(0.0, 3.0, size=n)) @ q.T
    return 0.5 * (f + f.T), 0.5 * (g + g.T)
