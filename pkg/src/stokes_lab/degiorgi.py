"""De Giorgi-type counter-example: radially structured tensor, closed-form
solution family, exponents, and integrability thresholds.

The tensor adds a rank-one radial reinforcement of strength 4/xi^2 to the
identity-on-Sym map; the induced equation admits the exact radial family
u = (c1 r^eps + c2 r^(-eps)) e_r with eps = |xi|/sqrt(4 + xi^2).  Everything
here is evaluated in polar components and rotated to Cartesian at each point;
the origin is excluded by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import OriginSingular
from .tensors import ElasticityField

__all__ = [
    "epsilon",
    "degiorgi_tensor",
    "CounterexampleParams",
    "ClosedFormSolution",
    "closed_form",
    "q_tail_classify",
    "TailVerdict",
    "not_in_M_certificate",
]

_DEF_ORIGIN_TOL = 1e-12


def epsilon(xi: float) -> float:
    """Decay/growth exponent |xi| / sqrt(4 + xi^2); even in xi, in [0, 1)."""
    xi = float(xi)
    return abs(xi) / np.sqrt(4.0 + xi * xi)


def _radial_dyads(points):
    pts = np.asarray(points, dtype=float)
    r = np.sqrt(np.sum(pts * pts, axis=-1))
    if np.any(r < _DEF_ORIGIN_TOL):
        raise OriginSingular("tensor evaluation requested at the origin")
    e = pts / r[..., None]
    return r, e


# identity on Sym and identity on Lin, as fourth-order component arrays
_D = np.eye(2)
_ID_SYM = 0.5 * (np.einsum("ih,jk->ijhk", _D, _D) + np.einsum("ik,jh->ijhk", _D, _D))
_ID_LIN = np.einsum("ih,jk->ijhk", _D, _D)


def degiorgi_tensor(xi: float, action_on: Literal["sym", "lin"] = "sym") -> ElasticityField:
    """Radially reinforced tensor field C[L] = (base L) + 4 xi^-2 (e_r x e_r)(e_r . L e_r).

    action_on="sym" is the elasticity map (base = sym, vanishes on skew
    arguments) with Sym bounds (1, 1 + 4/xi^2).  action_on="lin" keeps the
    full gradient (base = identity on Lin), the flavor positive on all of Lin
    with the same bounds; the two agree on symmetric arguments and share the
    closed-form radial family.
    """
    if xi == 0:
        raise ValueError("xi must be nonzero")
    amp = 4.0 / (xi * xi)
    base = _ID_SYM if action_on == "sym" else _ID_LIN

    def action(points):
        _, e = _radial_dyads(points)
        p4 = np.einsum("...i,...j,...h,...k->...ijhk", e, e, e, e)
        return base + amp * p4

    mu0, mue = 1.0, 1.0 + amp
    return ElasticityField(
        action=action,
        mu0=mu0,
        mue=mue,
        regular_at_infinity=False,
        lin_bounds_pair=(mu0, mue) if action_on == "lin" else None,
        name=f"degiorgi(xi={xi}, {action_on})",
    )


@dataclass(frozen=True)
class CounterexampleParams:
    xi: float
    c1: float = 1.0
    c2: float = -1.0

    def __post_init__(self):
        if self.xi == 0:
            raise ValueError("xi must be nonzero")

    @property
    def eps(self) -> float:
        return epsilon(self.xi)


@dataclass
class ClosedFormSolution:
    """Exact radial solution u = (c1 r^eps + c2 r^(-eps)) e_r with exact gradient."""

    params: CounterexampleParams
    eps: float = field(init=False)

    def __post_init__(self):
        self.eps = self.params.eps

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.params.c1 * r**self.eps + self.params.c2 * r ** (-self.eps)

    def radial_derivative(self, r):
        r = np.asarray(r, dtype=float)
        return self.eps * (
            self.params.c1 * r ** (self.eps - 1.0)
            - self.params.c2 * r ** (-self.eps - 1.0)
        )

    def displacement(self, points):
        r, e = _radial_dyads(points)
        return self.radial(r)[..., None] * e

    def gradient(self, points):
        """Exact Cartesian gradient f' e_r x e_r + (f/r) e_theta x e_theta."""
        r, e = _radial_dyads(points)
        er = np.einsum("...i,...j->...ij", e, e)
        et = np.eye(2) - er
        fp = self.radial_derivative(r)
        fr = self.radial(r) / r
        return fp[..., None, None] * er + fr[..., None, None] * et

    def gradient_norm_sq(self, r):
        """|grad u|^2 as a function of radius only (rotational symmetry)."""
        r = np.asarray(r, dtype=float)
        return self.radial_derivative(r) ** 2 + (self.radial(r) / r) ** 2

    def divergence(self, r):
        r = np.asarray(r, dtype=float)
        return self.radial_derivative(r) + self.radial(r) / r


def closed_form(params: CounterexampleParams) -> ClosedFormSolution:
    return ClosedFormSolution(params)


@dataclass
class TailVerdict:
    verdict: str                 # CONVERGENT | DIVERGENT | INCONCLUSIVE
    q: float
    threshold: float             # 2 / (1 - eps)
    radii: np.ndarray            # dyadic panel edges
    increments: np.ndarray       # integral of |grad u|^q over each dyadic annulus
    trend: float                 # last/first increment on the asymptotic window
    flagged_critical: bool       # q within 2% of the threshold

    def __str__(self):
        return (
            f"{self.verdict} (q={self.q:g}, threshold={self.threshold:.4f}, "
            f"trend={self.trend:.4g})"
        )


def q_tail_classify(
    params: CounterexampleParams,
    q: float,
    r_max: float = 2.0**20,
    flat_band: float = 0.10,
) -> TailVerdict:
    """Classify the q-energy tail of the closed-form field over 1 < r < r_max.

    Integrates T(R) = int |grad u|^q on dyadic annuli by Gauss quadrature of
    the exact radial integrand.  The verdict reads off the total geometric
    trend of the increments across the ladder (skipping the first two octaves
    where the subdominant branch still matters): increments shrinking ->
    CONVERGENT, bounded below -> DIVERGENT, total change within `flat_band`
    of flat -> INCONCLUSIVE (q too near the threshold for this r_max).
    """
    if q <= 1:
        raise ValueError("q must exceed 1")
    sol = closed_form(params)
    eps = sol.eps
    threshold = 2.0 / (1.0 - eps)

    n_oct = max(int(np.floor(np.log2(r_max))), 4)
    edges = 2.0 ** np.arange(n_oct + 1)
    # 64-point Gauss per octave in log r: exact enough for the smooth integrand
    gx, gw = np.polynomial.legendre.leggauss(64)
    increments = np.empty(n_oct)
    for k in range(n_oct):
        a, b = np.log(edges[k]), np.log(edges[k + 1])
        s = 0.5 * (b - a) * gx + 0.5 * (a + b)
        r = np.exp(s)
        integ = sol.gradient_norm_sq(r) ** (q / 2.0) * r * r  # extra r from dr = r ds
        increments[k] = 2.0 * np.pi * 0.5 * (b - a) * np.sum(gw * integ)

    skip = min(2, n_oct - 2)
    window = increments[skip:]
    trend = float(window[-1] / window[0])
    flagged = abs(q - threshold) <= 0.02 * threshold

    if abs(trend - 1.0) <= flat_band:
        verdict = "INCONCLUSIVE"
    elif trend < 1.0:
        verdict = "CONVERGENT"
    else:
        verdict = "DIVERGENT"
    return TailVerdict(
        verdict=verdict,
        q=q,
        threshold=threshold,
        radii=edges,
        increments=increments,
        trend=trend,
        flagged_critical=flagged,
    )


@dataclass
class MembershipReport:
    boundary_trace_max: float       # max |u| on the unit circle
    radii: np.ndarray
    log_ratios: np.ndarray          # |u(r e1)| / log r at the sampled radii
    strictly_increasing: bool       # growth beats every logarithmic rate
    vanishes_on_unit_circle: bool


def not_in_M_certificate(
    params: CounterexampleParams, radii=(1e2, 1e4, 1e6)
) -> MembershipReport:
    """Desk-checkable facts behind the exclusion from the obstruction space:
    the field vanishes on the unit circle yet grows faster than log r."""
    sol = closed_form(params)
    theta = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    ring = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    trace = np.linalg.norm(sol.displacement(ring), axis=-1).max()

    radii = np.asarray(radii, dtype=float)
    pts = np.stack([radii, np.zeros_like(radii)], axis=-1)
    mags = np.linalg.norm(sol.displacement(pts), axis=-1)
    ratios = mags / np.log(radii)
    return MembershipReport(
        boundary_trace_max=float(trace),
        radii=radii,
        log_ratios=ratios,
        strictly_increasing=bool(np.all(np.diff(ratios) > 0)),
        vanishes_on_unit_circle=bool(trace < 1e-12),
    )
