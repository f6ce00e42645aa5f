"""Discrete checks of the classical inequalities the energy estimates lean on.

Each check evaluates both sides of one inequality on discrete data with the
sharp classical constant (1 for the zero-mean circle inequality at the first
harmonic, sqrt(2) for the vanishing-boundary gradient bound, (q/(2-q))^q for
the radial weighted bound), so regressions in the discrete calculus surface
where the analysis lives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryNotZero, NonDecayingProfile

__all__ = [
    "WirtingerResult",
    "wirtinger_check",
    "RadialProfile",
    "HardyResult",
    "hardy_check",
    "KornResult",
    "korn_first_check",
]


@dataclass
class WirtingerResult:
    lhs: float       # int |u - mean|^2 over the circle
    rhs: float       # R^2 int |du/ds|^2 over the circle
    ok: bool

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else np.inf)


def wirtinger_check(samples, radius: float = 1.0, slack: float = 1e-10) -> WirtingerResult:
    """Zero-mean periodic function against its arclength derivative on a circle.

    samples: uniform angular values, shape (n,) or (n, d); the derivative is
    spectral (FFT), so band-limited inputs are handled exactly and equality
    at the first harmonic is reproduced to round-off.
    """
    u = np.asarray(samples, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    n = u.shape[0]
    if n < 16:
        raise ValueError(f"need at least 16 uniform samples, got {n}")
    w = radius * 2.0 * np.pi / n                      # ds per sample
    mean = u.mean(axis=0)
    lhs = float(np.sum((u - mean) ** 2) * w)

    k = np.fft.fftfreq(n, d=1.0 / n)                  # integer wavenumbers
    du_dtheta = np.fft.ifft(1j * k[:, None] * np.fft.fft(u, axis=0), axis=0).real
    du_ds = du_dtheta / radius
    rhs = float(radius**2 * np.sum(du_ds**2) * w)
    return WirtingerResult(lhs=lhs, rhs=rhs, ok=lhs <= rhs * (1.0 + slack) + 1e-300)


@dataclass
class RadialProfile:
    """Samples u(r_i) on an increasing radial grid over [1, r_max]."""

    r: np.ndarray
    values: np.ndarray   # (m,) or (m, d)
    q: float

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if self.r.ndim != 1 or self.r.size != self.values.shape[0]:
            raise ValueError("radii and values disagree in length")
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if self.q <= 1:
            raise ValueError("q must exceed 1")


@dataclass
class HardyResult:
    lhs: float          # int |u - u0|^q / r^q (area weight folded in)
    rhs_scaled: float   # c_q * int |u'|^q (same weight)
    ok: bool
    constant: float     # the sharp radial constant used
    q: float


def hardy_check(profile: RadialProfile, u0) -> HardyResult:
    """Radial weighted bound for q in (1, 2): the decaying part of u is
    controlled by its gradient with the sharp constant (q/(2-q))^q.

    The bound presumes a q-integrable gradient (profiles decaying slower
    than r^((q-2)/q) leave that class and the truncated comparison rightly
    fails; the constant is approached as the decay rate drops toward the
    threshold).  For q > 2 the checked statement flips: u/r inherits
    q-integrability from the gradient; both tails are then reported and ok
    means the lhs tail decays whenever the rhs tail does.
    """
    q = profile.q
    r = profile.r
    u = profile.values
    u0 = np.broadcast_to(np.asarray(u0, dtype=float), u.shape[1:])
    dev = np.linalg.norm(u - u0, axis=-1)

    # decay precondition: the far tail must not grow
    m = dev.size
    head = dev[: m // 2].mean()
    tail = dev[-max(m // 8, 2):].mean()
    if q < 2 and tail > max(head, 1e-300) * 1.5:
        raise NonDecayingProfile("the tail of |u - u0| grows; no far-field constant")

    du = np.gradient(u, r, axis=0)
    gmag = np.linalg.norm(du, axis=-1)
    area = 2.0 * np.pi * r                           # fold in the area weight r dr
    lhs = float(np.trapezoid(dev**q / r**q * area, r))
    grad_int = float(np.trapezoid(gmag**q * area, r))

    if q < 2.0:
        c_q = (q / (2.0 - q)) ** q
        return HardyResult(lhs=lhs, rhs_scaled=c_q * grad_int,
                           ok=lhs <= c_q * grad_int * (1.0 + 1e-8) + 1e-300,
                           constant=c_q, q=q)

    # q > 2 branch: compare dyadic tail increments of |u/r|^q and |u'|^q
    ratio_pts = np.linspace(0.25, 1.0, 4) * r[-1]
    idx = [int(np.argmin(np.abs(r - rp))) for rp in ratio_pts]
    lhs_tail = [float(np.trapezoid((dev**q / r**q * area)[i:], r[i:])) for i in idx]
    rhs_tail = [float(np.trapezoid((gmag**q * area)[i:], r[i:])) for i in idx]
    rhs_decays = rhs_tail[0] <= 0 or rhs_tail[-1] <= rhs_tail[0]
    lhs_decays = lhs_tail[0] <= 0 or lhs_tail[-1] <= lhs_tail[0]
    ok = (not rhs_decays) or lhs_decays
    return HardyResult(lhs=lhs, rhs_scaled=grad_int, ok=ok, constant=1.0, q=q)


@dataclass
class KornResult:
    lhs: float    # int |grad u|^2
    rhs: float    # 2 int |sym grad u|^2
    ok: bool

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else (0.0 if self.lhs == 0 else np.inf)


def korn_first_check(u, hx: float, hy: float, slack: float = 1e-8) -> KornResult:
    """First Korn bound |grad u|_2 <= sqrt(2) |sym grad u|_2 for nodal fields
    vanishing on the boundary of a uniform Cartesian grid.

    Gradients by centered differences on the interior (the field is extended
    by its boundary zeros), both sides by the same cell quadrature.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 3 or u.shape[2] != 2:
        raise ValueError(f"expected (nx, ny, 2) nodal values, got {u.shape}")
    bmax = max(
        np.abs(u[0]).max(), np.abs(u[-1]).max(),
        np.abs(u[:, 0]).max(), np.abs(u[:, -1]).max(),
    )
    if bmax > 1e-14 * max(np.abs(u).max(), 1.0):
        raise BoundaryNotZero(f"boundary values reach {bmax:.3g}")

    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[1:-1] = (u[2:] - u[:-2]) / (2.0 * hx)
    gy[:, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2.0 * hy)
    # one-sided closures at the boundary rows keep the compact support honest
    gx[0] = (u[1] - u[0]) / hx
    gx[-1] = (u[-1] - u[-2]) / hx
    gy[:, 0] = (u[:, 1] - u[:, 0]) / hy
    gy[:, -1] = (u[:, -1] - u[:, -2]) / hy

    grad = np.stack([gx, gy], axis=-1)               # (...,2,2): d_k u_m
    gs = 0.5 * (grad + np.swapaxes(grad, -1, -2))
    w = hx * hy
    lhs = float(np.sum(grad * grad) * w)
    rhs = float(2.0 * np.sum(gs * gs) * w)
    return KornResult(lhs=lhs, rhs=rhs, ok=lhs <= rhs * (1.0 + slack) + 1e-300)
