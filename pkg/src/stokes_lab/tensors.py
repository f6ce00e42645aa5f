"""Algebra of two-dimensional elasticity tensors and tensor fields.

A constant elasticity tensor is a fourth-order array C[i,j,h,k] with major
symmetry C[i,j,h,k] = C[h,k,i,j], acting on 2x2 tensors through their
symmetric part.  Position-dependent materials are ElasticityField objects:
an evaluator x -> action array plus certified positivity bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    BoundsViolated,
    GridTooCoarse,
    InvalidBounds,
    NotPositiveDefinite,
)

__all__ = [
    "sym",
    "skw",
    "ElasticityTensor",
    "IsotropicModuli",
    "ElasticityField",
    "constant_field",
    "apply_tensor",
    "certify_bounds",
    "lin_bounds",
    "strong_ellipticity_margin",
    "traction",
    "gamma_exponent",
    "sqrtL_exponent",
    "korn_identity_residual",
]


def sym(a):
    """Symmetric part of a (...,2,2) array."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def skw(a):
    """Skew part of a (...,2,2) array."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a - np.swapaxes(a, -1, -2))


# Orthonormal basis of Sym under the Frobenius product: e1xe1, e2xe2,
# (e1xe2 + e2xe1)/sqrt(2).  With this weighting the induced 3x3 matrix of a
# major-symmetric tensor is symmetric and its eigenvalues are exactly the
# positivity bounds.
_VOIGT = np.zeros((3, 2, 2))
_VOIGT[0, 0, 0] = 1.0
_VOIGT[1, 1, 1] = 1.0
_VOIGT[2, 0, 1] = _VOIGT[2, 1, 0] = 1.0 / np.sqrt(2.0)

# Orthonormal dyad basis of Lin: e_i x e_j, row-major.
_LIN = np.zeros((4, 2, 2))
for _n, (_i, _j) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
    _LIN[_n, _i, _j] = 1.0


class ElasticityTensor:
    """Constant fourth-order elasticity tensor with major symmetry.

    The stored components carry right-pair symmetry, so the action
    C[L] = einsum('ijhk,hk->ij') automatically goes through sym(L) and
    vanishes on skew arguments.
    """

    def __init__(self, components, check: bool = True):
        c = np.asarray(components, dtype=float)
        if c.shape != (2, 2, 2, 2):
            raise ValueError(f"expected shape (2,2,2,2), got {c.shape}")
        if check:
            major = np.transpose(c, (2, 3, 0, 1))
            scale = max(np.abs(c).max(), 1.0)
            if np.abs(c - major).max() > 1e-12 * scale:
                raise ValueError("components lack major symmetry")
        # project the input pair onto Sym: the action ignores skew input
        c = 0.5 * (c + np.transpose(c, (0, 1, 3, 2)))
        self.c = c
        self._bounds: Optional[tuple[float, float]] = None

    def __call__(self, L):
        return apply_tensor(self, L)

    @property
    def mu0(self) -> float:
        return self.bounds[0]

    @property
    def mue(self) -> float:
        return self.bounds[1]

    @property
    def bounds(self) -> tuple[float, float]:
        if self._bounds is None:
            self._bounds = certify_bounds(self)
        return self._bounds

    def voigt(self) -> np.ndarray:
        """Induced symmetric 3x3 matrix on the orthonormal Sym basis."""
        return np.einsum("aij,ijhk,bhk->ab", _VOIGT, self.c, _VOIGT)

    def __repr__(self):
        return f"ElasticityTensor(voigt=\n{self.voigt()!r})"


@dataclass(frozen=True)
class IsotropicModuli:
    """Lame parameters of an isotropic material: C[E] = 2 mu E + lambda tr(E) I."""

    lambda_lame: float
    mu_shear: float

    def __post_init__(self):
        if self.mu_shear <= 0 or self.lambda_lame < 0:
            raise InvalidBounds(
                f"need mu_shear > 0 and lambda_lame >= 0, "
                f"got ({self.lambda_lame}, {self.mu_shear})"
            )

    @property
    def mu0(self) -> float:
        return 2.0 * self.mu_shear

    @property
    def mue(self) -> float:
        return 2.0 * self.mu_shear + 2.0 * self.lambda_lame

    def tensor(self) -> ElasticityTensor:
        lam, mu = self.lambda_lame, self.mu_shear
        d = np.eye(2)
        c = (
            mu * (np.einsum("ih,jk->ijhk", d, d) + np.einsum("ik,jh->ijhk", d, d))
            + lam * np.einsum("ij,hk->ijhk", d, d)
        )
        return ElasticityTensor(c)


def apply_tensor(C, L):
    """Evaluate C[L] = C[sym L]; the result is symmetric.

    Accepts an ElasticityTensor or raw components; both the components
    (..., 2,2,2,2) and L (..., 2,2) may carry broadcastable batch dimensions.
    """
    c = C.c if isinstance(C, ElasticityTensor) else np.asarray(C, dtype=float)
    L = np.asarray(L, dtype=float)
    return np.einsum("...ijhk,...hk->...ij", c, sym(L))


def certify_bounds(C) -> tuple[float, float]:
    """Extreme eigenvalues of the induced operator on symmetric tensors.

    Returns (mu0, mue) with mu0 |E|^2 <= E.C[E] <= mue |E|^2 on Sym.
    Raises NotPositiveDefinite when the least eigenvalue is <= 0.
    """
    c = C.c if isinstance(C, ElasticityTensor) else np.asarray(C, dtype=float)
    m = np.einsum("aij,ijhk,bhk->ab", _VOIGT, c, _VOIGT)
    m = 0.5 * (m + m.T)
    ev = np.linalg.eigvalsh(m)
    if ev[0] <= 0.0:
        raise NotPositiveDefinite(f"least Sym eigenvalue {ev[0]:.6g} <= 0")
    return float(ev[0]), float(ev[-1])


def lin_bounds(c) -> tuple[float, float]:
    """Extreme eigenvalues of the symmetrized action on all of Lin.

    Certifies lambda |E|^2 <= E.C[E] <= Lambda |E|^2 for every E in Lin; this
    is the stronger hypothesis under which the sqrt(L)-type results and the
    fixed-point construction operate.  The action must not be the
    skew-annihilating one for the lower bound to be positive.
    """
    c = c.c if isinstance(c, ElasticityTensor) else np.asarray(c, dtype=float)
    m = np.einsum("aij,ijhk,bhk->ab", _LIN, c, _LIN)
    m = 0.5 * (m + m.T)
    ev = np.linalg.eigvalsh(m)
    return float(ev[0]), float(ev[-1])


def _rank_one_form(c, alpha, beta):
    """a.C[a x b]b for unit vectors at angles alpha, beta (broadcastable)."""
    a = np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)
    b = np.stack([np.cos(beta), np.sin(beta)], axis=-1)
    return np.einsum("ijhk,...i,...j,...h,...k->...", c, a, b, a, b)


def strong_ellipticity_margin(C, n_angles: int = 720, newton_steps: int = 3) -> float:
    """Minimum of a.C[a x b]b over unit vectors a, b.

    Dense angular sampling (n_angles per circle) locates the minimizing pair;
    a few Newton steps in the two angles refine it.  A positive value
    certifies strong ellipticity; a nonpositive return is a valid verdict.
    """
    c = C.c if isinstance(C, ElasticityTensor) else np.asarray(C, dtype=float)
    ang = np.linspace(0.0, np.pi, n_angles, endpoint=False)  # the form is pi-periodic
    vals = _rank_one_form(c, ang[:, None], ang[None, :])
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    alpha, beta = ang[i], ang[j]

    def vecs(t):
        return np.array([np.cos(t), np.sin(t)]), np.array([-np.sin(t), np.cos(t)])

    f = vals[i, j]
    for _ in range(newton_steps):
        a, da = vecs(alpha)
        b, db = vecs(beta)

        def e(p, q, r, s):
            return np.einsum("ijhk,i,j,h,k->", c, p, q, r, s)

        f = e(a, b, a, b)
        ga = 2.0 * e(da, b, a, b)
        gb = 2.0 * e(a, db, a, b)
        haa = 2.0 * (e(da, b, da, b) - f)
        hbb = 2.0 * (e(a, db, a, db) - f)
        hab = 2.0 * (e(da, db, a, b) + e(da, b, a, db))
        H = np.array([[haa, hab], [hab, hbb]])
        g = np.array([ga, gb])
        ev = np.linalg.eigvalsh(H)
        if ev[0] <= 1e-14 * max(abs(ev[-1]), 1.0):
            break  # flat or saddle direction: keep the sampled minimizer
        step = np.linalg.solve(H, -g)
        alpha, beta = alpha + step[0], beta + step[1]
    a, _ = vecs(alpha)
    b, _ = vecs(beta)
    f_ref = np.einsum("ijhk,i,j,h,k->", c, a, b, a, b)
    return float(min(f, f_ref, vals[i, j]))


def traction(C, grad_u, n):
    """Boundary force density C[grad_u] n for a unit normal n."""
    s = apply_tensor(C, grad_u)
    return np.einsum("...ij,...j->...i", s, np.asarray(n, dtype=float))


def _check_bounds_pair(mu0: float, mue: float):
    if not (0.0 < mu0 <= mue):
        raise InvalidBounds(f"need 0 < mu0 <= mue, got ({mu0}, {mue})")


def gamma_exponent(mu0: float, mue: float) -> float:
    """Energy-growth rate 4 mu0 / (5 mu0 + 8 mue); lies in (0, 4/13]."""
    _check_bounds_pair(mu0, mue)
    return 4.0 * mu0 / (5.0 * mu0 + 8.0 * mue)


def sqrtL_exponent(lam: float, Lam: float) -> float:
    """Uniqueness-class exponent 1/sqrt(Lambda/lambda) in (0, 1]."""
    _check_bounds_pair(lam, Lam)
    return float(np.sqrt(lam / Lam))


def korn_identity_residual(u, hx: float, hy: float) -> float:
    """Max-norm defect of the pointwise identity
    |sym grad u|^2 - |skw grad u|^2 = div[(grad u)u - (div u)u] + |div u|^2
    for nodal values u of shape (nx, ny, 2) on a uniform Cartesian grid.

    Both sides are built from centered differences along genuinely different
    routes (the right side differences the divergence of an already
    differenced product), so the defect measures discrete-calculus
    consistency; it vanishes at order h^2 under refinement for smooth fields.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 3 or u.shape[2] != 2:
        raise ValueError(f"expected (nx, ny, 2) nodal values, got {u.shape}")
    nx, ny = u.shape[:2]
    if nx < 5 or ny < 5:
        raise GridTooCoarse(
            f"need at least 5 nodes per direction for nested stencils, got {nx}x{ny}"
        )

    def d_x(f):
        return (f[2:, 1:-1] - f[:-2, 1:-1]) / (2.0 * hx)

    def d_y(f):
        return (f[1:-1, 2:] - f[1:-1, :-2]) / (2.0 * hy)

    # first derivatives on the depth-1 interior
    gx = d_x(u)           # (nx-2, ny-2, 2): du_i/dx
    gy = d_y(u)           # du_i/dy
    grad = np.stack([gx, gy], axis=-1)              # (...,2,2): grad[i,k] = d_k u_i
    div = grad[..., 0, 0] + grad[..., 1, 1]
    u_in = u[1:-1, 1:-1]

    gs = sym(grad)
    ga = skw(grad)
    lhs = np.sum(gs * gs, axis=(-2, -1)) - np.sum(ga * ga, axis=(-2, -1))

    # g = (grad u)u - (div u)u, then its divergence on the depth-2 interior
    g = np.einsum("...ik,...k->...i", grad, u_in) - div[..., None] * u_in
    div_g = d_x(g)[..., 0] + d_y(g)[..., 1]
    rhs = div_g + (div[1:-1, 1:-1]) ** 2

    return float(np.abs(lhs[1:-1, 1:-1] - rhs).max())


@dataclass
class ElasticityField:
    """Position-dependent elasticity action with certified bounds.

    action(points) maps (...,2) coordinates to (...,2,2,2,2) component
    arrays.  sym_bounds = (mu0, mue) bound E.C(x)[E]/|E|^2 on symmetric E;
    lin_bounds_pair additionally bounds the quotient on all of Lin when the
    action does not annihilate skew tensors (both certificates are recorded
    because different results assume different ones).  The bounds are
    caller-supplied and spot-verified at sample points, never silently
    clamped.
    """

    action: Callable[[np.ndarray], np.ndarray]
    mu0: float
    mue: float
    c0: Optional[ElasticityTensor] = None
    regular_at_infinity: bool = False
    lin_bounds_pair: Optional[tuple[float, float]] = None
    name: str = ""

    def __post_init__(self):
        _check_bounds_pair(self.mu0, self.mue)

    def __call__(self, points) -> np.ndarray:
        return self.action(np.asarray(points, dtype=float))

    def check_bounds_at(self, points, tol: float = 1e-9):
        """Verify the declared Sym bounds at the sampled points.

        Raises BoundsViolated naming the worst offender; returns the sampled
        (min, max) eigenvalue range when the certificate holds.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        act = self(pts)
        m = np.einsum("aij,...ijhk,bhk->...ab", _VOIGT, act, _VOIGT)
        m = 0.5 * (m + np.swapaxes(m, -1, -2))
        ev = np.linalg.eigvalsh(m)
        lo, hi = float(ev[..., 0].min()), float(ev[..., -1].max())
        slack = tol * max(self.mue, 1.0)
        if lo < self.mu0 - slack or hi > self.mue + slack:
            k = int(np.argmin(ev[..., 0])) if lo < self.mu0 - slack else int(np.argmax(ev[..., -1]))
            raise BoundsViolated(
                f"sampled Sym eigenvalues [{lo:.6g}, {hi:.6g}] violate declared "
                f"({self.mu0:.6g}, {self.mue:.6g}) near point index {k}"
            )
        return lo, hi

    def check_limit_along_ray(self, direction, radii) -> np.ndarray:
        """|C(r d) - C0| along a ray; meaningful when regular_at_infinity."""
        if self.c0 is None:
            raise ValueError("field declares no limit tensor")
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        pts = np.asarray(radii, dtype=float)[:, None] * d[None, :]
        act = self(pts)
        return np.sqrt(np.sum((act - self.c0.c) ** 2, axis=(-4, -3, -2, -1)))


def constant_field(C, regular_at_infinity: bool = True, name: str = "") -> ElasticityField:
    """Wrap a constant tensor (or IsotropicModuli) as an ElasticityField."""
    if isinstance(C, IsotropicModuli):
        C = C.tensor()
    if not isinstance(C, ElasticityTensor):
        C = ElasticityTensor(C)
    mu0, mue = C.bounds
    comp = C.c.copy()

    def action(points):
        pts = np.asarray(points, dtype=float)
        return np.broadcast_to(comp, pts.shape[:-1] + (2, 2, 2, 2)).copy()

    return ElasticityField(
        action=action,
        mu0=mu0,
        mue=mue,
        c0=C,
        regular_at_infinity=regular_at_infinity,
        name=name or "constant",
    )
