"""Exterior Dirichlet solver via the simple-layer representation.

The solution is sought as u(x) = v[psi](x) + kappa with

    v[psi](x) = int U(x - y) psi(y) ds_y ,

the quadrature uses the periodic trapezoid rule plus the exact log-splitting
weights (Martensen-Kussmaul), spectrally accurate on smooth curves.  The
equilibrium space (densities whose layer potential is constant on the
boundary) is computed by solving for constant right-hand sides; its weighted
pairing with boundary data is the solvability residual that detects the
Stokes paradox.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from .curves import BoundaryCurve
from .errors import (
    CurveNotSmooth,
    DegenerateBasis,
    NotAnEllipse,
    PointInsideBody,
    SingularSystem,
)
from .kelvin import FundamentalSolution
from .tensors import IsotropicModuli, apply_tensor

__all__ = [
    "SingleLayerOperator",
    "assemble_single_layer",
    "kress_log_weights",
    "EquilibriumBasis",
    "equilibrium_basis",
    "paradox_residual",
    "ellipse_compatibility",
    "ExteriorSolution",
    "solve_dirichlet",
    "evaluate",
    "evaluate_gradient",
    "MSpaceField",
    "m_space_representative",
    "net_traction",
    "circle_traction_total",
]


def _as_kernel(c0) -> FundamentalSolution:
    if isinstance(c0, FundamentalSolution):
        return c0
    if isinstance(c0, IsotropicModuli):
        return FundamentalSolution.isotropic(c0)
    return FundamentalSolution.from_tensor(c0)


def _check_data(curve: BoundaryCurve, data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape != (curve.n, 2):
        raise ValueError(f"boundary data must have shape ({curve.n}, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("boundary data contains non-finite values")
    return arr


def kress_log_weights(n: int) -> np.ndarray:
    """Quadrature weights R_j for the periodic integral of
    f(s) log(4 sin^2((t-s)/2)) ds at offsets t - s_j = 2 pi j / n; exact
    for trigonometric polynomials of degree < n/2."""
    j = np.arange(n)
    d = 2.0 * np.pi * j / n
    m = np.arange(1, n // 2)
    r = np.cos(np.outer(d, m)) / m
    return -(4.0 * np.pi / n) * (r.sum(axis=1) + np.cos(n * d / 2.0) / n)


def _cond_estimate(a: np.ndarray, lu) -> float:
    """1-norm condition estimate from an existing LU factorization."""
    (gecon,) = get_lapack_funcs(("gecon",), (a,))
    rcond, info = gecon(lu[0], np.linalg.norm(a, 1), norm="1")
    if info != 0 or not np.isfinite(rcond):
        return float("inf")
    return float(1.0 / max(rcond, 1e-300))


@dataclass
class SingleLayerOperator:
    """Dense Nystrom discretization of the simple-layer boundary map."""

    curve: BoundaryCurve
    kernel: FundamentalSolution
    mat: np.ndarray  # (2N, 2N), interleaved node-component ordering
    _lu: Optional[tuple] = field(default=None, repr=False)

    @property
    def lu(self):
        if self._lu is None:
            self._lu = lu_factor(self.mat)
        return self._lu

    @property
    def cond(self) -> float:
        """1-norm condition estimate of the assembled operator."""
        return _cond_estimate(self.mat, self.lu)

    def apply(self, density) -> np.ndarray:
        psi = np.asarray(density, dtype=float).reshape(-1)
        return (self.mat @ psi).reshape(self.curve.n, 2)

    def solve(self, rhs) -> np.ndarray:
        b = np.asarray(rhs, dtype=float).reshape(-1)
        x = lu_solve(self.lu, b)
        x += lu_solve(self.lu, b - self.mat @ x)  # one refinement step
        return x.reshape(self.curve.n, 2)


def assemble_single_layer(curve: BoundaryCurve, c0) -> SingleLayerOperator:
    """Assemble the 2N x 2N matrix mapping nodal densities to v[psi] at the nodes.

    The kernel's log part is integrated by the exact periodic log-splitting
    weights; the smooth remainder by the plain trapezoid rule.  On the rounded
    polygon the same composite rule applies but only with algebraic accuracy,
    which is reported as a CurveNotSmooth warning.
    """
    kernel = _as_kernel(c0)
    if not curve.smooth:
        warnings.warn(
            "curve is only piecewise-smooth: quadrature accuracy downgrades "
            "from spectral to the composite trapezoid rate",
            CurveNotSmooth,
            stacklevel=2,
        )
    n = curve.n
    t = curve.t
    pts = curve.points
    speed = curve.speed

    dt = t[:, None] - t[None, :]
    log_fac = 4.0 * np.sin(dt / 2.0) ** 2
    dvec = pts[:, None, :] - pts[None, :, :]
    r2 = np.sum(dvec * dvec, axis=-1)

    np.fill_diagonal(r2, 1.0)
    np.fill_diagonal(log_fac, 1.0)
    phi = np.arctan2(dvec[..., 1], dvec[..., 0])

    # smooth remainder M2 = Phi0 * (1/2) log(r^2 / 4 sin^2) + Phi(direction)
    smooth_log = 0.5 * np.log(r2 / log_fac)
    m2 = kernel.phi0[None, None] * smooth_log[..., None, None] + kernel.angular_part(phi)
    tang_angle = np.arctan2(curve.tangent[:, 1], curve.tangent[:, 0])
    diag = kernel.phi0[None] * np.log(speed)[:, None, None] + kernel.angular_part(tang_angle)
    m2[np.arange(n), np.arange(n)] = diag

    rvec = kress_log_weights(n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    rmat = rvec[idx]

    a = rmat[..., None, None] * (0.5 * kernel.phi0)[None, None] + (2.0 * np.pi / n) * m2
    a *= speed[None, :, None, None]
    mat = a.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)
    return SingleLayerOperator(curve=curve, kernel=kernel, mat=mat)


@dataclass
class EquilibriumBasis:
    """Two densities spanning the space of constant-trace layer potentials.

    Each density is normalized to unit weighted L2 norm (all compatibility
    verdicts are invariant under this choice).  totals holds sum_k w_k psi_i
    column-wise; its invertibility is the discrete form of the classical
    rank-two property.
    """

    curve: BoundaryCurve
    psi: np.ndarray            # (2, N, 2)
    totals: np.ndarray         # (2, 2), column i = total of psi_i
    boundary_values: np.ndarray  # (2, 2): constant trace of v[psi_i]
    cond_totals: float

    def density(self, i: int) -> np.ndarray:
        return self.psi[i]


def equilibrium_basis(op: SingleLayerOperator, cond_limit: float = 1e8) -> EquilibriumBasis:
    """Solve A psi_i = const e_i and normalize; certify the totals matrix."""
    curve = op.curve
    n = curve.n
    psi = np.empty((2, n, 2))
    bvals = np.empty((2, 2))
    for i in range(2):
        rhs = np.zeros((n, 2))
        rhs[:, i] = 1.0
        sol = op.solve(rhs)
        norm = np.sqrt(curve.inner_product(sol, sol))
        if not np.isfinite(norm) or norm == 0.0:
            raise DegenerateBasis("layer solve for a constant trace degenerated")
        psi[i] = sol / norm
        bvals[i] = np.array([0.0, 0.0])
        bvals[i][i] = 1.0 / norm
    totals = np.stack([curve.total(psi[0]), curve.total(psi[1])], axis=-1)
    cond = float(np.linalg.cond(totals))
    if not np.isfinite(cond) or cond > cond_limit:
        raise DegenerateBasis(
            f"totals matrix condition {cond:.3g} exceeds {cond_limit:g}; "
            "discretization failure or curve outside the method's scope"
        )
    return EquilibriumBasis(
        curve=curve, psi=psi, totals=totals, boundary_values=bvals, cond_totals=cond
    )


def paradox_residual(data, basis: EquilibriumBasis) -> np.ndarray:
    """Weighted pairings of the boundary data with the equilibrium densities.

    The zero vector (within tolerance) is equivalent to the existence of a
    decaying finite-energy exterior solution; any nonzero constant datum
    yields a nonzero residual - the paradox."""
    u = _check_data(basis.curve, data)
    w = basis.curve.weights
    return np.array(
        [np.einsum("k,ki,ki->", w, u, basis.psi[0]),
         np.einsum("k,ki,ki->", w, u, basis.psi[1])]
    )


def ellipse_compatibility(data, curve: BoundaryCurve) -> np.ndarray:
    """Quadrature of data / |grad f| over an ellipse boundary.

    Agrees with paradox_residual up to an invertible 2x2 rescaling; the
    closed-form counterpart of the computed equilibrium pairing."""
    if curve.kind not in ("ellipse", "circle") or curve.grad_f_norm is None:
        raise NotAnEllipse("curve was not constructed as ellipse(a, b)")
    u = _check_data(curve, data)
    return np.einsum("k,ki->i", curve.weights / curve.grad_f_norm, u)


@dataclass
class ExteriorSolution:
    """Pair (psi, kappa) realizing u = v[psi] + kappa outside the curve."""

    curve: BoundaryCurve
    kernel: FundamentalSolution
    psi: np.ndarray           # (N, 2)
    kappa: np.ndarray         # (2,)
    cond: float               # condition estimate of the augmented system
    replay_error: float       # max |v[psi] + kappa - data| at the nodes

    @property
    def total_density(self) -> np.ndarray:
        return self.curve.total(self.psi)


def solve_dirichlet(op: SingleLayerOperator, data, cond_limit: float = 1e12) -> ExteriorSolution:
    """Solve the augmented square system

        [ A   1 ] [psi  ]   [data]
        [ W   0 ] [kappa] = [ 0  ]

    enforcing the zero-total side condition; the far field then satisfies
    u - kappa = O(1/r)."""
    curve = op.curve
    u = _check_data(curve, data)
    n = curve.n
    m = 2 * n + 2
    aug = np.zeros((m, m))
    aug[: 2 * n, : 2 * n] = op.mat
    for c in range(2):
        aug[c : 2 * n : 2, 2 * n + c] = 1.0
        aug[2 * n + c, c : 2 * n : 2] = curve.weights
    rhs = np.zeros(m)
    rhs[: 2 * n] = u.reshape(-1)

    lu = lu_factor(aug)
    cond = _cond_estimate(aug, lu)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularSystem(f"augmented system condition {cond:.3g} exceeds {cond_limit:g}")
    x = lu_solve(lu, rhs)
    x += lu_solve(lu, rhs - aug @ x)
    psi = x[: 2 * n].reshape(n, 2)
    kappa = x[2 * n :]
    replay = np.abs(op.apply(psi) + kappa - u).max()
    return ExteriorSolution(
        curve=curve, kernel=op.kernel, psi=psi, kappa=kappa, cond=cond,
        replay_error=float(replay),
    )


def _layer_eval(curve, kernel, psi, x, want_gradient=False, chunk: int = 4096):
    pts = np.atleast_2d(np.asarray(x, dtype=float)).reshape(-1, 2)
    out = np.zeros((pts.shape[0], 2))
    grad = np.zeros((pts.shape[0], 2, 2)) if want_gradient else None
    wpsi = curve.weights[:, None] * psi
    for lo in range(0, pts.shape[0], chunk):
        hi = min(lo + chunk, pts.shape[0])
        d = pts[lo:hi, None, :] - curve.points[None, :, :]
        out[lo:hi] = np.einsum("mnij,nj->mi", kernel(d), wpsi)
        if want_gradient:
            grad[lo:hi] = np.einsum("mnijk,nj->mik", kernel.gradient(d), wpsi)
    return out, grad


def evaluate(solution: ExteriorSolution, x) -> np.ndarray:
    """u(x) = v[psi](x) + kappa at points strictly outside the curve.

    Plain-quadrature evaluation: accuracy degrades within about one node
    spacing of the boundary."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(solution.curve.is_inside(pts.reshape(-1, 2))):
        raise PointInsideBody("evaluation point lies inside the body")
    val, _ = _layer_eval(solution.curve, solution.kernel, solution.psi, pts)
    val = val + solution.kappa
    return val.reshape(pts.shape) if np.asarray(x).ndim > 1 else val[0]


def evaluate_gradient(solution: ExteriorSolution, x) -> np.ndarray:
    """grad u at exterior points, from the exact kernel gradient."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(solution.curve.is_inside(pts.reshape(-1, 2))):
        raise PointInsideBody("evaluation point lies inside the body")
    _, g = _layer_eval(solution.curve, solution.kernel, solution.psi, pts, want_gradient=True)
    return g.reshape(pts.shape[:-1] + (2, 2)) if np.asarray(x).ndim > 1 else g[0]


@dataclass
class MSpaceField:
    """Boundary-vanishing log-growing field h = v[psi'] - v[psi']|_boundary.

    Built from an equilibrium density psi'; its net traction equals the
    (nonzero) total of psi', and h grows like Phi0 log r * total at infinity.
    """

    curve: BoundaryCurve
    kernel: FundamentalSolution
    psi_prime: np.ndarray
    boundary_value: np.ndarray   # (2,) constant trace of v[psi']
    trace_deviation: float       # max deviation of the replayed trace

    @property
    def net_traction(self) -> np.ndarray:
        return self.curve.total(self.psi_prime)

    def __call__(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        val, _ = _layer_eval(self.curve, self.kernel, self.psi_prime, pts)
        val = val.reshape(pts.shape) - self.boundary_value
        return val if np.asarray(x).ndim > 1 else val[0]

    def gradient(self, x) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        _, g = _layer_eval(self.curve, self.kernel, self.psi_prime, pts, want_gradient=True)
        return g.reshape(pts.shape[:-1] + (2, 2)) if np.asarray(x).ndim > 1 else g[0]

    def log_comparison(self, x) -> np.ndarray:
        """h(x) - Phi0 log|x| total(psi'): bounded as |x| grows."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(pts, axis=-1)
        lead = np.log(r)[..., None] * (self.kernel.phi0 @ self.net_traction)
        return self(pts) - lead


def m_space_representative(op: SingleLayerOperator, psi_prime) -> MSpaceField:
    """Wrap an equilibrium density as the obstruction-space field h."""
    curve = op.curve
    psi = np.asarray(psi_prime, dtype=float)
    trace = op.apply(psi)
    bval = trace.mean(axis=0)
    dev = float(np.abs(trace - bval).max())
    return MSpaceField(
        curve=curve, kernel=op.kernel, psi_prime=psi, boundary_value=bval,
        trace_deviation=dev,
    )


def net_traction(solution: ExteriorSolution) -> np.ndarray:
    """Net boundary traction of the represented solution = total density.

    The layer-potential flux identity: the traction functional over the
    boundary (normal pointing out of the exterior domain) equals
    sum_k w_k psi_k.  Cross-validated in tests by large-circle quadrature."""
    return solution.total_density


def circle_traction_total(gradient_fn, c0, radius: float, n_nodes: int = 1024,
                          toward_origin: bool = False) -> np.ndarray:
    """Quadrature of the traction of a field over the circle |x| = radius.

    gradient_fn(points) -> (...,2,2) Cartesian gradients; c0 is the constant
    tensor producing the stress.  By default the normal points away from the
    origin (flux out of the disk); toward_origin=True flips it, matching the
    convention of a boundary seen from the exterior domain."""
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    nrm = np.stack([np.cos(t), np.sin(t)], axis=-1)
    pts = radius * nrm
    if toward_origin:
        nrm = -nrm
    grad = gradient_fn(pts)
    stress = apply_tensor(c0, grad)
    trac = np.einsum("nik,nk->ni", stress, nrm)
    return (radius * 2.0 * np.pi / n_nodes) * trac.sum(axis=0)
