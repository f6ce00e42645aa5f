"""Variational solver on truncated exterior domains and energy diagnostics.

The exterior domain is replaced by the annulus 1 < r < r_max with a
configurable outer condition; the solver minimizes the discrete energy
int grad(u) . C[grad(u)] over bilinear elements.  The module also measures
the quantities the theory estimates: interior/exterior energy profiles and
their rate-gamma monotonicity, the interior bound with its boundary
functional, the truncated work-energy defect, net tractions, far-field decay
exponents, the volume potential, and the contraction fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NotContracting, RadiusOutOfGrid, SolverDiverged
from .kelvin import FundamentalSolution
from .polar import DiscreteField, PolarGrid
from .tensors import ElasticityField

__all__ = [
    "VariationalProblem",
    "solve_annulus",
    "EnergyProfile",
    "energy_profiles",
    "GrowthReport",
    "growth_monotonicity_check",
    "CaccioppoliReport",
    "caccioppoli_check",
    "energy_identity_residual",
    "net_traction_discrete",
    "DecayFit",
    "decay_exponent_fit",
    "volume_potential",
    "ContractionReport",
    "contraction_solve",
]


@dataclass
class VariationalProblem:
    """Data of the truncated exterior problem.

    inner_data / outer_data: nodal (n_theta, 2) arrays, callables of theta,
    or None for zero.  outer_kind is "dirichlet" or "traction_free" (natural
    condition: the outer ring stays free).  force, when present, must be
    supported strictly inside r_max / 2.
    """

    field: ElasticityField
    inner_data: object = None
    outer_kind: str = "dirichlet"
    outer_data: object = None
    force: Optional[Callable] = None

    def __post_init__(self):
        if self.outer_kind not in ("dirichlet", "traction_free"):
            raise ValueError(f"unknown outer condition {self.outer_kind!r}")

    def boundary_values(self, grid: PolarGrid, which: str) -> np.ndarray:
        data = self.inner_data if which == "inner" else self.outer_data
        if data is None:
            return np.zeros((grid.n_theta, 2))
        if callable(data):
            return np.asarray(data(grid.thetas), dtype=float).reshape(grid.n_theta, 2)
        arr = np.asarray(data, dtype=float)
        if arr.shape != (grid.n_theta, 2):
            raise ValueError(f"boundary data must be (n_theta, 2), got {arr.shape}")
        return arr


def _assemble_stiffness(grid: PolarGrid, action_qp: np.ndarray,
                        chunk: int = 16384) -> sp.csr_matrix:
    """K[(node a, m), (node b, h)] = int d_k N_a C_mkhl d_l N_b, chunked."""
    cells = grid.cells
    grad = grid.qp_shape_gradients
    wq = grid.qp_weights
    ndof = 2 * grid.n_nodes
    mats = []
    for lo in range(0, grid.n_cells, chunk):
        hi = min(lo + chunk, grid.n_cells)
        ke = np.einsum(
            "cq,cqak,cqmkhl,cqbl->cambh",
            wq[lo:hi], grad[lo:hi], action_qp[lo:hi], grad[lo:hi],
            optimize=True,
        )
        cc = cells[lo:hi]
        ones = np.ones((1, 1, 1, 1, 1), dtype=np.int64)
        rows = 2 * cc[:, :, None, None, None] + np.arange(2)[None, None, :, None, None] * ones
        cols = 2 * cc[:, None, None, :, None] + np.arange(2)[None, None, None, None, :] * ones
        rows, cols = np.broadcast_arrays(rows, cols)
        mats.append(
            sp.coo_matrix(
                (ke.ravel(), (rows.ravel(), cols.ravel())), shape=(ndof, ndof)
            ).tocsr()
        )
    out = mats[0]
    for m in mats[1:]:
        out = out + m
    return out


def _force_vector(grid: PolarGrid, force: Callable) -> np.ndarray:
    f_qp = np.asarray(force(grid.qp_points), dtype=float)
    fe = np.einsum("cq,qa,cqm->cam", grid.qp_weights, grid.qp_shapes, f_qp)
    b = np.zeros(2 * grid.n_nodes)
    np.add.at(b, (2 * grid.cells[:, :, None] + np.arange(2)).ravel(), fe.ravel())
    return b


def _check_force_support(grid: PolarGrid, force: Callable):
    f_qp = np.asarray(force(grid.qp_points), dtype=float)
    mags = np.linalg.norm(f_qp, axis=-1)
    outside = grid.qp_radii > 0.5 * grid.r_max
    if mags[outside].max(initial=0.0) > 1e-12 * max(mags.max(), 1.0):
        raise ValueError("volume force must be supported strictly inside r_max / 2")


def _dirichlet_mask(grid: PolarGrid, problem: VariationalProblem):
    fixed = np.zeros(2 * grid.n_nodes, dtype=bool)
    vals = np.zeros(2 * grid.n_nodes)
    inner = problem.boundary_values(grid, "inner")
    ids = grid.node_id(0, np.arange(grid.n_theta))
    fixed[2 * ids] = fixed[2 * ids + 1] = True
    vals[2 * ids] = inner[:, 0]
    vals[2 * ids + 1] = inner[:, 1]
    if problem.outer_kind == "dirichlet":
        outer = problem.boundary_values(grid, "outer")
        ids = grid.node_id(grid.n_r - 1, np.arange(grid.n_theta))
        fixed[2 * ids] = fixed[2 * ids + 1] = True
        vals[2 * ids] = outer[:, 0]
        vals[2 * ids + 1] = outer[:, 1]
    return fixed, vals


def solve_annulus(
    problem: VariationalProblem,
    grid: PolarGrid,
    check_bounds: bool = True,
    residual_tol: float = 1e-8,
) -> DiscreteField:
    """Minimize the discrete energy subject to the boundary conditions.

    Raises BoundsViolated when spot-checked material samples leave the
    declared bounds, SolverDiverged when the direct solve cannot reach the
    requested relative residual (ill-conditioning proxy).
    """
    pts = grid.qp_points
    action = problem.field(pts)
    if check_bounds:
        flat = pts.reshape(-1, 2)
        problem.field.check_bounds_at(flat[:: max(flat.shape[0] // 257, 1)])
    if problem.force is not None:
        _check_force_support(grid, problem.force)

    K = _assemble_stiffness(grid, action)
    b = _force_vector(grid, problem.force) if problem.force is not None else np.zeros(2 * grid.n_nodes)
    fixed, vals = _dirichlet_mask(grid, problem)
    free = ~fixed

    rhs = b[free] - K[free][:, fixed] @ vals[fixed]
    Kff = K[free][:, free].tocsc()
    x = spla.spsolve(Kff, rhs)
    scale = max(np.abs(rhs).max(), np.abs(Kff @ x).max(), 1e-300)
    rel = np.abs(Kff @ x - rhs).max() / scale
    if not np.all(np.isfinite(x)) or rel > residual_tol:
        raise SolverDiverged(f"direct solve residual {rel:.3g} exceeds {residual_tol:g}")

    u = vals.copy()
    u[free] = x
    return DiscreteField(grid, u.reshape(grid.n_r, grid.n_theta, 2))


# -- energy bookkeeping --------------------------------------------------------


def _dirichlet_integrand_qp(u: DiscreteField) -> np.ndarray:
    """|grad u|^2 + |div u|^2 at the Gauss points, (n_cells, nq)."""
    g = u.gradient_at_qp()
    div = g[..., 0, 0] + g[..., 1, 1]
    return np.sum(g * g, axis=(-2, -1)) + div * div


def _ring_sums(grid: PolarGrid, cell_qp_values: np.ndarray) -> np.ndarray:
    per_cell = np.sum(cell_qp_values * grid.qp_weights, axis=-1)
    return per_cell.reshape(grid.n_r - 1, grid.n_theta).sum(axis=1)


@dataclass
class EnergyProfile:
    """Interior energy G and exterior tail Q of int(|grad u|^2 + |div u|^2).

    radii are the grid ring radii; G[k] integrates over r < radii[k], Q[k]
    over the grid portion beyond, so G + Q = G[-1] = total at every radius.
    """

    radii: np.ndarray
    G: np.ndarray
    Q: np.ndarray

    @property
    def total(self) -> float:
        return float(self.G[-1])


def energy_profiles(u: DiscreteField) -> EnergyProfile:
    grid = u.grid
    ring = _ring_sums(grid, _dirichlet_integrand_qp(u))
    G = np.concatenate([[0.0], np.cumsum(ring)])
    return EnergyProfile(radii=grid.radii.copy(), G=G, Q=G[-1] - G)


def _dyadic_rings(grid: PolarGrid, lo: float, hi: float) -> list[int]:
    targets = []
    r = lo
    while r <= hi * (1 + 1e-12):
        targets.append(r)
        r *= 2.0
    rings = sorted({grid.nearest_ring(t) for t in targets})
    return [k for k in rings if 0 < k < grid.n_r]


@dataclass
class GrowthReport:
    """Monotonicity audit of G(R)/R^gamma (nondecreasing for interior-growth
    class fields) and R^gamma Q(R) (nonincreasing for decaying fields).

    Violations are reported as the worst fractional drop/rise between
    consecutive sampled radii; nothing is raised."""

    gamma: float
    radii: np.ndarray
    g_scaled: np.ndarray        # G(R) / R^gamma
    q_scaled: np.ndarray        # R^gamma Q(R)
    worst_g_violation: float    # max fractional decrease of g_scaled
    worst_q_violation: float    # max fractional increase of q_scaled
    tolerance: float
    degenerate: bool

    @property
    def g_ok(self) -> bool:
        return self.degenerate or self.worst_g_violation <= self.tolerance

    @property
    def q_ok(self) -> bool:
        return self.degenerate or self.worst_q_violation <= self.tolerance


def growth_monotonicity_check(
    profile: EnergyProfile,
    gamma: float,
    radii: Optional[np.ndarray] = None,
    tolerance: float = 0.01,
) -> GrowthReport:
    """Audit the two rate-gamma monotonicities on dyadic sample radii.

    The interior inequality needs the field to solve the homogeneous equation
    down to the center or to vanish on the inner boundary with zero net
    traction; the exterior one needs a decaying finite-energy field.  The
    report only measures; the caller asserts on the class that applies.
    """
    grid_radii = profile.radii
    if radii is None:
        rmax = grid_radii[-1]
        radii = []
        r = 2.0
        while r <= rmax / 2 * (1 + 1e-12):
            radii.append(r)
            r *= 2.0
        radii = np.asarray(radii)
    idx = sorted({int(np.argmin(np.abs(grid_radii - r))) for r in np.atleast_1d(radii)})
    idx = [k for k in idx if 0 < k < grid_radii.size]
    rs = grid_radii[idx]
    G = profile.G[idx]
    Q = profile.Q[idx]

    total = profile.total
    # constant fields produce pure round-off energy (~1e-30); flag them
    if total <= 1e-20 or not np.isfinite(total):
        return GrowthReport(gamma, rs, np.zeros_like(rs), np.zeros_like(rs),
                            0.0, 0.0, tolerance, degenerate=True)

    g_scaled = G / rs**gamma
    q_scaled = rs**gamma * Q
    with np.errstate(divide="ignore", invalid="ignore"):
        g_drop = np.where(g_scaled[:-1] > 0, 1.0 - g_scaled[1:] / g_scaled[:-1], 0.0)
        q_rise = np.where(q_scaled[:-1] > 0, q_scaled[1:] / q_scaled[:-1] - 1.0, 0.0)
    return GrowthReport(
        gamma=gamma,
        radii=rs,
        g_scaled=g_scaled,
        q_scaled=q_scaled,
        worst_g_violation=float(np.maximum(g_drop, 0.0).max(initial=0.0)),
        worst_q_violation=float(np.maximum(q_rise, 0.0).max(initial=0.0)),
        tolerance=tolerance,
        degenerate=False,
    )


# -- boundary functionals --------------------------------------------------------


def _ring_traction_data(u: DiscreteField, problem: VariationalProblem, ring: int):
    """Gradient, stress and normal data on a grid ring.

    Returns (points, grad, stress) with grad from the 3-point ring stencils
    and stress = C[grad] evaluated with the problem's material."""
    grid = u.grid
    grad = grid.ring_gradient(u.values, ring)
    pts = np.stack(
        [grid.radii[ring] * np.cos(grid.thetas), grid.radii[ring] * np.sin(grid.thetas)],
        axis=-1,
    )
    action = problem.field(pts)
    stress = np.einsum("nmkhl,nhl->nmk", action, grad)
    return pts, grad, stress


def sigma_boundary_functional(u: DiscreteField, problem: VariationalProblem) -> float:
    """The three-term boundary-plus-force functional

        sigma(u) = 2 int_{boundary} u.s(u)
                   - mu0 int_{boundary} n.[grad u - (div u) 1] u
                   + 2 int f.u ,

    with the normal pointing out of the annulus into the hole (n = -e_r)."""
    grid = u.grid
    pts, grad, stress = _ring_traction_data(u, problem, 0)
    n = -pts / grid.radii[0]
    uv = u.values[0]
    w = grid.radii[0] * grid.dtheta

    s_u = np.einsum("nmk,nk->nm", stress, n)
    term1 = 2.0 * w * np.einsum("nm,nm->", uv, s_u)

    div = grad[..., 0, 0] + grad[..., 1, 1]
    m = grad - div[:, None, None] * np.eye(2)
    mu_vec = np.einsum("nmk,nk->nm", m, uv)
    term2 = -problem.field.mu0 * w * np.einsum("nm,nm->", n, mu_vec)

    term3 = 0.0
    if problem.force is not None:
        f_qp = np.asarray(problem.force(grid.qp_points), dtype=float)
        term3 = 2.0 * float(
            np.sum(grid.qp_weights * np.einsum("cqm,cqm->cq", f_qp, u.values_at_qp()))
        )
    return float(term1 + term2 + term3)


@dataclass
class CaccioppoliReport:
    """Both sides of the interior bound at radius R: the gradient energy over
    1 < r < R against R^-2 int_{R<r<2R} |u|^2 + sigma(u)."""

    radius: float
    lhs: float
    tail_term: float
    sigma: float
    ratio: float
    degenerate: bool


def caccioppoli_check(u: DiscreteField, problem: VariationalProblem, radius: float) -> CaccioppoliReport:
    grid = u.grid
    if 2.0 * radius > grid.r_max * (1 + 1e-12) or radius <= grid.r_min:
        raise RadiusOutOfGrid(f"need r_min < R and 2R <= r_max, got R={radius}")
    kR = grid.nearest_ring(radius)
    k2R = grid.nearest_ring(2.0 * radius)
    R = grid.radii[kR]

    g = u.gradient_at_qp()
    grad_sq = np.sum(g * g, axis=(-2, -1))
    ring_grad = _ring_sums(grid, grad_sq)
    lhs = float(ring_grad[:kR].sum())

    vals_sq = np.sum(u.values_at_qp() ** 2, axis=-1)
    ring_vals = _ring_sums(grid, vals_sq)
    tail = float(ring_vals[kR:k2R].sum()) / R**2

    sigma = sigma_boundary_functional(u, problem)
    denom = tail + sigma
    degenerate = lhs == 0.0 and abs(denom) < 1e-300
    ratio = float("nan") if degenerate else lhs / denom if denom != 0 else float("inf")
    return CaccioppoliReport(
        radius=R, lhs=lhs, tail_term=tail, sigma=sigma, ratio=ratio, degenerate=degenerate
    )


def energy_identity_residual(u: DiscreteField, problem: VariationalProblem, radius: float) -> float:
    """Relative defect of the truncated work-energy relation

        int_{1<r<R} grad u . C[grad u] = int_{r=1} u.s(u) + int_{r=R} u.s(u),

    inner normal = -e_r (out of the annulus), outer normal = +e_r."""
    grid = u.grid
    kR = grid.nearest_ring(radius)
    if kR <= 0:
        raise RadiusOutOfGrid(f"radius {radius} below the first interior ring")
    R = grid.radii[kR]

    g = u.gradient_at_qp()
    action = problem.field(grid.qp_points)
    dens = np.einsum("cqmk,cqmkhl,cqhl->cq", g, action, g)
    ring_e = _ring_sums(grid, dens)
    energy = float(ring_e[:kR].sum())

    total_work = 0.0
    for ring, sign in ((0, -1.0), (kR, +1.0)):
        pts, grad, stress = _ring_traction_data(u, problem, ring)
        r = grid.radii[ring]
        n = sign * pts / r
        s_u = np.einsum("nmk,nk->nm", stress, n)
        total_work += r * grid.dtheta * float(np.einsum("nm,nm->", u.values[ring], s_u))

    scale = max(abs(energy), 1e-300)
    return abs(energy - total_work) / scale


def net_traction_discrete(u: DiscreteField, problem: VariationalProblem,
                          radius: Optional[float] = None) -> np.ndarray:
    """Quadrature of the traction over a grid circle with the normal pointing
    toward the hole (the boundary functional of the exterior domain).

    Defaults to the inner boundary r = 1; pass another radius for the flux
    conservation cross-check.  Vanishes for decaying solutions."""
    grid = u.grid
    ring = 0 if radius is None else grid.nearest_ring(radius)
    pts, grad, stress = _ring_traction_data(u, problem, ring)
    r = grid.radii[ring]
    n = -pts / r
    s_u = np.einsum("nmk,nk->nm", stress, n)
    return r * grid.dtheta * s_u.sum(axis=0)


# -- decay fits --------------------------------------------------------------


@dataclass
class DecayFit:
    """Log-log regression of max_theta |u - u0| against r."""

    alpha: float
    u0: np.ndarray
    residual: float
    radii: np.ndarray
    distances: np.ndarray
    poor_fit: bool


def decay_exponent_fit(
    u: DiscreteField,
    radii: Optional[np.ndarray] = None,
    poor_fit_tol: float = 0.1,
) -> DecayFit:
    """Fit u - u0 = O(r^-alpha) on (at least 5) dyadic radii.

    u0 is the angular mean at the largest fitting radius; radii are snapped to
    grid rings and default to the dyadic ladder inside [2, r_max/4] (the outer
    quarter is dropped to suppress truncation pollution)."""
    grid = u.grid
    if radii is None:
        rings = _dyadic_rings(grid, 2.0, grid.r_max / 4.0)
    else:
        rings = sorted({grid.nearest_ring(r) for r in np.atleast_1d(radii)})
        rings = [k for k in rings if 0 < k < grid.n_r]
    if len(rings) < 5:
        raise ValueError(f"need >= 5 distinct fitting radii, got {len(rings)}")

    u0 = u.angular_mean(rings[-1])
    rs = grid.radii[rings]
    d = np.array([u.max_over_ring(k, offset=u0) for k in rings])
    if np.any(d <= 0):
        raise ValueError("field coincides with its angular mean at a fitting radius")
    coef, res = np.polyfit(np.log(rs), np.log(d), 1, full=True)[:2]
    rms = float(np.sqrt(res[0] / len(rings))) if res.size else 0.0
    return DecayFit(
        alpha=float(-coef[0]),
        u0=u0,
        residual=rms,
        radii=rs,
        distances=d,
        poor_fit=rms > poor_fit_tol,
    )


# -- volume potential -------------------------------------------------------


def volume_potential(
    force: Callable,
    kernel: FundamentalSolution,
    grid: PolarGrid,
    refine_levels: int = 2,
    chunk: int = 1024,
) -> DiscreteField:
    """v_f(x) = int U(x - y) f(y) dv_y at the grid nodes by direct quadrature.

    Cells hosting or adjacent to a target node are re-integrated on a
    subdivided Gauss rule (the kernel's log singularity is integrable, so two
    refinement levels suffice for ~1e-4 absolute accuracy)."""
    pts_q = grid.qp_points
    w_q = grid.qp_weights
    f_q = np.asarray(force(pts_q), dtype=float)
    mags = np.linalg.norm(f_q, axis=-1)
    support_cells = np.nonzero(mags.max(axis=1) > 1e-14 * mags.max(initial=0.0))[0]
    targets = grid.node_points()
    out = np.zeros((targets.shape[0], 2))
    if support_cells.size == 0:
        return DiscreteField(grid, out.reshape(grid.n_r, grid.n_theta, 2))

    src_pts = pts_q[support_cells].reshape(-1, 2)
    src_wf = (w_q[support_cells][..., None] * f_q[support_cells]).reshape(-1, 2)

    for lo in range(0, targets.shape[0], chunk):
        hi = min(lo + chunk, targets.shape[0])
        d = targets[lo:hi, None, :] - src_pts[None, :, :]
        r2 = np.sum(d * d, axis=-1)
        bad = r2 < 1e-28
        if np.any(bad):
            d[bad] = 1.0
        kern = kernel(d)
        if np.any(bad):
            kern[bad] = 0.0
        out[lo:hi] = np.einsum("tsij,sj->ti", kern, src_wf)

    # re-integrate the near cells per target with subdivided quadrature
    centers = pts_q[support_cells].mean(axis=1)
    diam = np.sqrt(w_q[support_cells].sum(axis=1)) * 2.0
    gx, gw = np.polynomial.legendre.leggauss(4)
    for c_idx, cell in enumerate(support_cells):
        center = centers[c_idx]
        near = np.nonzero(np.linalg.norm(targets - center, axis=1) < diam[c_idx])[0]
        if near.size == 0:
            continue
        ic = cell // grid.n_theta
        jc = cell % grid.n_theta
        r0, r1 = grid.radii[ic], grid.radii[ic + 1]
        t0 = grid.thetas[jc]
        t1 = t0 + grid.dtheta
        ns = 2 ** refine_levels * 2
        redges = np.linspace(r0, r1, ns + 1)
        tedges = np.linspace(t0, t1, ns + 1)
        rq = (0.5 * (redges[1:] + redges[:-1])[:, None] +
              0.5 * np.diff(redges)[:, None] * gx[None, :]).ravel()
        tq = (0.5 * (tedges[1:] + tedges[:-1])[:, None] +
              0.5 * np.diff(tedges)[:, None] * gx[None, :]).ravel()
        wr = (0.5 * np.diff(redges)[:, None] * gw[None, :]).ravel()
        wt = (0.5 * np.diff(tedges)[:, None] * gw[None, :]).ravel()
        RQ, TQ = np.meshgrid(rq, tq, indexing="ij")
        WQ = np.outer(wr, wt) * RQ
        pts_fine = np.stack([RQ * np.cos(TQ), RQ * np.sin(TQ)], axis=-1).reshape(-1, 2)
        f_fine = np.asarray(force(pts_fine), dtype=float)
        wf_fine = WQ.reshape(-1, 1) * f_fine

        d_coarse = targets[near][:, None, :] - pts_q[cell][None, :, :]
        coarse = np.einsum(
            "tsij,sj->ti", kernel(d_coarse), (w_q[cell][:, None] * f_q[cell])
        )
        d_fine = targets[near][:, None, :] - pts_fine[None, :, :]
        r2 = np.sum(d_fine * d_fine, axis=-1)
        ok = r2 > 1e-28
        kern = np.zeros(r2.shape + (2, 2))
        kern[ok] = kernel(d_fine[ok])
        fine = np.einsum("tsij,sj->ti", kern, wf_fine)
        out[near] += fine - coarse

    return DiscreteField(grid, out.reshape(grid.n_r, grid.n_theta, 2))


# -- contraction fixed point --------------------------------------------------


@dataclass
class ContractionReport:
    factors: np.ndarray
    q: float
    n_iter: int
    converged: bool
    c0_scale: float

    @property
    def worst_factor(self) -> float:
        return float(self.factors.max()) if self.factors.size else 0.0

    @property
    def n_contraction_steps(self) -> int:
        """Applications of the fixed-point map beyond the source term v_f."""
        return max(self.n_iter - 1, 0)


def _grad_q_norm(grid: PolarGrid, flat_values: np.ndarray, q: float) -> float:
    f = DiscreteField(grid, flat_values.reshape(grid.n_r, grid.n_theta, 2))
    g = f.gradient_at_qp()
    mag = np.sqrt(np.sum(g * g, axis=(-2, -1)))
    return float(np.sum(grid.qp_weights * mag**q) ** (1.0 / q))


def contraction_solve(
    problem: VariationalProblem,
    grid: PolarGrid,
    c0_scale: Optional[float] = None,
    q: float = 2.0,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> tuple[DiscreteField, ContractionReport]:
    """Fixed-point iteration v_{k+1} = v_f + Q[v_k] for the heterogeneous
    problem, preconditioned by the comparison material C0 = scale * (identity
    product) C0_ijhk = scale * d_ih d_jk.

    Q inverts the discrete C0-operator on the same grid and boundary
    conditions (one factorization, reused), the desk-scale stand-in for the
    whole-plane kernel convolution; the limit therefore solves exactly the
    same discrete system as solve_annulus.  Per-iteration contraction factors
    are measured in the gradient L^q norm; with the default scale = the upper
    Lin bound of the material, the factor is bounded by the relative contrast
    (scale - lower) / scale.  Raises NotContracting after three consecutive
    factors above 1.
    """
    if c0_scale is None:
        if problem.field.lin_bounds_pair is not None:
            c0_scale = problem.field.lin_bounds_pair[1]
        else:
            c0_scale = problem.field.mue
    d = np.eye(2)
    c0_action = c0_scale * np.einsum("ih,jk->ijhk", d, d)

    pts = grid.qp_points
    action = problem.field(pts)
    Kc = _assemble_stiffness(grid, action)
    K0 = _assemble_stiffness(
        grid, np.broadcast_to(c0_action, pts.shape[:-1] + (2, 2, 2, 2))
    )
    b = _force_vector(grid, problem.force) if problem.force is not None else np.zeros(2 * grid.n_nodes)
    fixed, vals = _dirichlet_mask(grid, problem)
    free = ~fixed
    rhs = b[free] - Kc[free][:, fixed] @ vals[fixed]
    Kc_ff = Kc[free][:, free].tocsc()
    K0_ff = K0[free][:, free].tocsc()
    green0 = spla.factorized(K0_ff)

    w = np.zeros(rhs.size)
    factors = []
    prev_inc_norm = None
    full = vals.copy()
    n_bad = 0
    converged = False
    n_iter = 0
    scale_norm = None
    for k in range(max_iter):
        inc = green0(rhs - Kc_ff @ w)
        w = w + inc
        n_iter = k + 1
        full[free] = w
        inc_full = np.zeros_like(full)
        inc_full[free] = inc
        inc_norm = _grad_q_norm(grid, inc_full, q)
        if scale_norm is None:
            scale_norm = max(inc_norm, 1e-300)
        if prev_inc_norm is not None and prev_inc_norm > 0:
            fac = inc_norm / prev_inc_norm
            factors.append(fac)
            n_bad = n_bad + 1 if fac > 1.0 else 0
            if n_bad >= 3:
                raise NotContracting(
                    f"gradient-L^{q:g} factors exceeded 1 for 3 consecutive "
                    f"iterations (last {fac:.3g}); contrast too large"
                )
        prev_inc_norm = inc_norm
        if inc_norm <= tol * scale_norm:
            converged = True
            break

    field_out = DiscreteField(grid, full.reshape(grid.n_r, grid.n_theta, 2))
    return field_out, ContractionReport(
        factors=np.asarray(factors),
        q=q,
        n_iter=n_iter,
        converged=converged,
        c0_scale=float(c0_scale),
    )
