"""Truncated variational triplet V in H in V' described by the spectrum of J.

Everything lives in coefficient space: a vector ``y`` of length ``n`` holds the
coordinates of an element of H in the orthonormal eigenbasis ``{e_j}`` of the
canonical isomorphism J, with ``J e_j = rho_j^2 e_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError


@dataclass(frozen=True, eq=False)
class SpectralTriplet:
    """Spectral data of J truncated to ``n`` modes.

    Parameters
    ----------
    rho_sq
        Strictly increasing positive eigenvalues of J.
    kappa1, kappa2
        Embedding constants with ``|y|_H <= kappa1 |y|_V`` and
        ``|y|_V' <= kappa2 |y|_H``. Both default to ``1/rho_1``, the sharp
        truncated value; smaller values are rejected since they would break
        the embeddings.
    """

    rho_sq: np.ndarray
    kappa1: float | None = None
    kappa2: float | None = None

    def __post_init__(self):
        rho_sq = np.array(self.rho_sq, dtype=float).reshape(-1)
        if rho_sq.size == 0:
            raise PreconditionError("triplet needs at least one mode")
        if not np.all(np.isfinite(rho_sq)) or rho_sq[0] <= 0:
            raise PreconditionError("rho_sq must be finite and positive")
        if np.any(np.diff(rho_sq) <= 0):
            raise PreconditionError("rho_sq must be strictly increasing")
        rho_sq.setflags(write=False)
        object.__setattr__(self, "rho_sq", rho_sq)
        sharp = 1.0 / np.sqrt(rho_sq[0])
        for name in ("kappa1", "kappa2"):
            value = getattr(self, name)
            if value is None:
                value = sharp
            value = float(value)
            # embeddings force kappa >= 1/rho_1
            if value < sharp * (1.0 - 1e-12):
                raise PreconditionError(f"{name}={value} is below 1/rho_1={sharp}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_power_law(cls, n: int, c: float = 1.0, s: float = 1.0, **kwargs):
        """Laplacian-like spectrum ``rho_sq[j] = c * (j+1)**(2s)``."""
        if n < 1:
            raise PreconditionError("n must be >= 1")
        if c <= 0 or s <= 0:
            raise PreconditionError("c and s must be positive")
        j = np.arange(1, n + 1, dtype=float)
        return cls(c * j ** (2 * s), **kwargs)

    @property
    def n(self) -> int:
        return self.rho_sq.size

    @property
    def rho(self) -> np.ndarray:
        return np.sqrt(self.rho_sq)

    @property
    def rho1(self) -> float:
        return float(np.sqrt(self.rho_sq[0]))

    @property
    def gram(self) -> np.ndarray:
        """Matrix of the V inner product, ``diag(rho_j^2)``."""
        return np.diag(self.rho_sq)

    def coeffs(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.n,):
            raise DimensionError(f"expected a vector of length {self.n}, got shape {y.shape}")
        return y

    def norm_h(self, y) -> float:
        y = self.coeffs(y)
        return float(np.sqrt(np.dot(y, y)))

    def norm_v(self, y) -> float:
        y = self.coeffs(y)
        return float(np.sqrt(np.dot(self.rho_sq * y, y)))

    def norm_v_dual(self, y) -> float:
        y = self.coeffs(y)
        return float(np.sqrt(np.dot(y / self.rho_sq, y)))

    def apply_j(self, y) -> np.ndarray:
        return self.rho_sq * self.coeffs(y)

    def pairing(self, f, y) -> float:
        """Duality pairing <f, y> between V' and V in coordinates."""
        return float(np.dot(self.coeffs(f), self.coeffs(y)))

    def __repr__(self):
        return f"SpectralTriplet(n={self.n}, rho1={self.rho1:.6g}, kappa1={self.kappa1:.6g}, kappa2={self.kappa2:.6g})"


def norm_h(triplet: SpectralTriplet, y) -> float:
    return triplet.norm_h(y)


def norm_v(triplet: SpectralTriplet, y) -> float:
    return triplet.norm_v(y)


def norm_v_dual(triplet: SpectralTriplet, y) -> float:
    return triplet.norm_v_dual(y)
