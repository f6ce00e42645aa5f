"""Fundamental displacement tensor of a constant plane elasticity operator.

The kernel splits as U(d) = Phi0 log|d| + Phi(d/|d|) with Phi0 constant and
Phi homogeneous of degree zero.  For isotropic materials Phi is the classical
closed form (a degree-2 trigonometric polynomial in the angle).  For a general
strongly elliptic constant tensor, Phi comes from the angular representation

    U(x) = -(1/4 pi^2) int_0^{2pi} Gamma(n(t))^{-1} log|n(t) . x| dt ,

where Gamma is the acoustic tensor; since log|cos| has a known cosine series,
the angular integral is a periodic convolution and the Fourier coefficients of
Phi follow from an FFT of Gamma^{-1}.  Both routes store Phi as a real cosine/
sine series, which also yields the exact gradient.

Normalization: div C0[grad(U e)] = -e delta, so the total traction of U e over
any circle enclosing the origin (outward normal) equals -e.
"""

from __future__ import annotations

import numpy as np

from .errors import NotStronglyElliptic, SingularPoint
from .tensors import ElasticityTensor, IsotropicModuli, strong_ellipticity_margin

__all__ = ["FundamentalSolution", "fundamental_matrix", "acoustic_tensor"]


def acoustic_tensor(C, n):
    """Gamma(n)_ih = C_ijhk n_j n_k for direction(s) n of shape (...,2)."""
    c = C.c if isinstance(C, ElasticityTensor) else np.asarray(C, dtype=float)
    n = np.asarray(n, dtype=float)
    return np.einsum("ijhk,...j,...k->...ih", c, n, n)


class FundamentalSolution:
    """Evaluator for U(d) = Phi0 log|d| + Phi(d/|d|) and its exact gradient."""

    def __init__(self, c0: ElasticityTensor, phi0, cos_coef, sin_coef):
        self.c0 = c0
        self.phi0 = np.asarray(phi0, dtype=float)          # (2,2)
        self.cos_coef = np.asarray(cos_coef, dtype=float)  # (K+1,2,2); [0] is the mean
        self.sin_coef = np.asarray(sin_coef, dtype=float)  # (K+1,2,2); [0] unused
        self.orders = np.arange(self.cos_coef.shape[0])

    # -- constructors --------------------------------------------------------

    @classmethod
    def isotropic(cls, moduli: IsotropicModuli) -> "FundamentalSolution":
        """Closed-form Kelvin matrix for an isotropic material."""
        lam, mu = moduli.lambda_lame, moduli.mu_shear
        denom = 4.0 * np.pi * mu * (lam + 2.0 * mu)
        phi0 = -(lam + 3.0 * mu) / denom * np.eye(2)
        beta = (lam + mu) / denom          # coefficient of (d x d)/|d|^2
        cos_coef = np.zeros((3, 2, 2))
        sin_coef = np.zeros((3, 2, 2))
        cos_coef[0] = 0.5 * beta * np.eye(2)
        cos_coef[2] = 0.5 * beta * np.diag([1.0, -1.0])
        sin_coef[2] = 0.5 * beta * np.array([[0.0, 1.0], [1.0, 0.0]])
        return cls(moduli.tensor(), phi0, cos_coef, sin_coef)

    @classmethod
    def from_tensor(cls, c0, n_angles: int = 512, margin_tol: float = 0.0) -> "FundamentalSolution":
        """Angular-representation construction for a general constant tensor.

        Computes Gamma(n)^{-1} at n_angles directions, convolves with the
        cosine series of log|cos| by FFT, and keeps the (spectrally decaying)
        trigonometric coefficients of Phi.
        """
        if not isinstance(c0, ElasticityTensor):
            c0 = ElasticityTensor(c0)
        margin = strong_ellipticity_margin(c0)
        if margin <= margin_tol:
            raise NotStronglyElliptic(f"ellipticity margin {margin:.6g} <= {margin_tol:g}")

        m = int(n_angles)
        theta = 2.0 * np.pi * np.arange(m) / m
        n = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        g = np.linalg.inv(acoustic_tensor(c0, n))          # (m,2,2)
        g *= -1.0 / (4.0 * np.pi**2)
        ghat = np.fft.fft(g, axis=0) / m                   # coefficients of e^{i k theta}

        phi0 = 2.0 * np.pi * ghat[0].real

        # log|cos t| = -log 2 + sum_{j>=1} (-1)^{j+1} cos(2jt)/j
        khat = np.zeros(m, dtype=complex)
        khat[0] = -np.log(2.0)
        for j in range(1, m // 4):
            khat[2 * j] = (-1) ** (j + 1) / (2.0 * j)
            khat[m - 2 * j] = khat[2 * j]
        fhat = 2.0 * np.pi * ghat * khat[:, None, None]

        K = m // 2 - 1
        cos_coef = np.zeros((K + 1, 2, 2))
        sin_coef = np.zeros((K + 1, 2, 2))
        cos_coef[0] = fhat[0].real
        for k in range(1, K + 1):
            cos_coef[k] = 2.0 * fhat[k].real
            sin_coef[k] = -2.0 * fhat[k].imag
        # drop the numerically-zero tail so evaluation stays cheap
        mags = np.abs(cos_coef).max(axis=(1, 2)) + np.abs(sin_coef).max(axis=(1, 2))
        keep = max(int(np.nonzero(mags > 1e-15 * mags.max())[0].max()) + 1, 3)
        return cls(c0, phi0, cos_coef[:keep], sin_coef[:keep])

    # -- evaluation ----------------------------------------------------------

    def angular_part(self, phi):
        """Phi at angle(s) phi, shape (...,2,2)."""
        phi = np.asarray(phi, dtype=float)
        kphi = self.orders * phi[..., None]                # (...,K+1)
        c = np.cos(kphi)
        s = np.sin(kphi)
        return np.einsum("...k,kij->...ij", c, self.cos_coef) + np.einsum(
            "...k,kij->...ij", s, self.sin_coef
        )

    def angular_derivative(self, phi):
        """d Phi / d phi at angle(s) phi."""
        phi = np.asarray(phi, dtype=float)
        kphi = self.orders * phi[..., None]
        c = np.cos(kphi) * self.orders
        s = np.sin(kphi) * self.orders
        return np.einsum("...k,kij->...ij", c, self.sin_coef) - np.einsum(
            "...k,kij->...ij", s, self.cos_coef
        )

    def __call__(self, d):
        """U(d) for displacement difference(s) d of shape (...,2)."""
        d = np.asarray(d, dtype=float)
        r2 = np.sum(d * d, axis=-1)
        if np.any(r2 == 0.0):
            raise SingularPoint("fundamental matrix requested at d = 0")
        phi = np.arctan2(d[..., 1], d[..., 0])
        logr = 0.5 * np.log(r2)
        return self.phi0 * logr[..., None, None] + self.angular_part(phi)

    def gradient(self, d):
        """grad U: array (...,2,2,2) with [...,i,j,k] = d U_ij / d x_k."""
        d = np.asarray(d, dtype=float)
        r2 = np.sum(d * d, axis=-1)
        if np.any(r2 == 0.0):
            raise SingularPoint("gradient requested at d = 0")
        r = np.sqrt(r2)
        er = d / r[..., None]
        et = np.stack([-er[..., 1], er[..., 0]], axis=-1)
        phi = np.arctan2(d[..., 1], d[..., 0])
        dphi = self.angular_derivative(phi)
        grad = (
            self.phi0[..., :, :, None] * er[..., None, None, :]
            + dphi[..., :, :, None] * et[..., None, None, :]
        )
        return grad / r[..., None, None, None]


def fundamental_matrix(c0, d, n_angles: int = 512):
    """One-shot evaluation U(d); prefer caching a FundamentalSolution for loops.

    Isotropic inputs (IsotropicModuli) use the closed form; general constant
    tensors go through the angular representation.
    """
    if isinstance(c0, IsotropicModuli):
        fs = FundamentalSolution.isotropic(c0)
    else:
        fs = FundamentalSolution.from_tensor(c0, n_angles=n_angles)
    return fs(d)
