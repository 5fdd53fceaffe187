"""Independent reference computations used only by the tests.

Each oracle takes a different route from the library code it checks: dense
Kronecker systems instead of Schur/Sylvester, explicit double sums instead of
vectorized norms, generic root finding instead of closed forms.
"""

import numpy as np
from scipy import optimize
from scipy.special import sici


def kron_lyapunov_resolvent(a, f, lam):
    """Solve ``X + lam (A^T X + X A) = F`` through the n^2 x n^2 Kronecker system."""
    n = a.shape[0]
    eye = np.eye(n)
    # vec(A^T X) = (I kron A^T) vec X, vec(X A) = (A^T kron I) vec X (column-major vec)
    big = np.eye(n * n) + lam * (np.kron(eye, a.T) + np.kron(a.T, eye))
    x = np.linalg.solve(big, f.reshape(-1, order="F"))
    return x.reshape(n, n, order="F")


def kron_riccati_residual(a, g, f, p):
    return a.T @ p + p @ a + p @ g @ p - f


def naive_hs_norms(mat, rho_sq):
    """All five weighted norms by explicit loops over (k, j)."""
    n = len(rho_sq)
    out = {"HH": 0.0, "VdH": 0.0, "VH": 0.0, "HV": 0.0, "HVd": 0.0}
    for j in range(n):
        for k in range(n):
            v = mat[k][j] ** 2
            out["HH"] += v
            out["VdH"] += rho_sq[j] * v
            out["VH"] += v / rho_sq[j]
            out["HV"] += rho_sq[k] * v
            out["HVd"] += v / rho_sq[k]
    return {key: float(np.sqrt(val)) for key, val in out.items()}


def rootfind_quadratic_resolvent(f, g, lam, x0=None):
    """Solve ``P + lam P G P = F`` over symmetric P with scipy's hybrid root finder."""
    n = f.shape[0]
    iu = np.triu_indices(n)

    def unpack(v):
        p = np.zeros((n, n))
        p[iu] = v
        return p + np.triu(p, 1).T

    def fun(v):
        p = unpack(v)
        return (p + lam * p @ g @ p - f)[iu]

    v0 = (f if x0 is None else x0)[iu]
    sol = optimize.root(fun, v0, method="hybr", tol=1e-14)
    return unpack(sol.x), float(np.max(np.abs(fun(sol.x))))


def scalar_riccati_root(a, g, f):
    """Stabilizing root of ``g p^2 + 2 a p - f = 0`` via numpy's polynomial roots.

    That is the root ``p >= 0`` with ``a + g p > 0``.
    """
    if g == 0:
        return f / (2 * a)
    r = np.roots([g, 2 * a, -f])
    r = r[np.abs(r.imag) < 1e-12].real
    return float(r[(r >= 0) & (a + g * r > 0)].min())


def hardy_si(modes):
    """``2 int_0^1 sin(j pi r) sin(k pi r) / r^2 dr = q Si(q) - p Si(p)`` with ``q = (j+k) pi``, ``p = |j-k| pi``."""
    j = np.arange(1, modes + 1)
    jj, kk = np.meshgrid(j, j)
    q = (jj + kk) * np.pi
    p = np.abs(jj - kk) * np.pi
    return q * sici(q)[0] - p * sici(p)[0]


def scalar_closed_loop_pulse(a_cl, b, t, t_on):
    """``y' = a_cl y + b 1_[0,t_on](t)``, ``y(0) = 0`` by variation of constants."""
    t = np.asarray(t, dtype=float)
    inside = (np.exp(a_cl * t) - 1.0) / a_cl
    after = (np.exp(a_cl * t) - np.exp(a_cl * (t - t_on))) / a_cl
    return b * np.where(t <= t_on, inside, after)


def transfer_gain_sq(a_cl, b1, c1, k, nu):
    """``|c(i nu - a)^{-1} b|^2`` summed over the outputs z = C1 y and u = K y for scalar state."""
    x = b1 / (1j * nu - a_cl)
    return float(np.sum(np.abs(np.atleast_1d(c1) * x) ** 2) + np.sum(np.abs(np.atleast_1d(k) * x) ** 2))
