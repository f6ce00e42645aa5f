import numpy as np
import pytest

from stokes_lab.errors import NotStronglyElliptic, SingularPoint
from stokes_lab.kelvin import FundamentalSolution, acoustic_tensor, fundamental_matrix
from stokes_lab.tensors import (
    ElasticityTensor,
    IsotropicModuli,
    apply_tensor,
)

ISO = IsotropicModuli(1.0, 1.0)


def random_spd_tensor(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3))
    m = a @ a.T + 3.0 * np.eye(3)
    from stokes_lab.tensors import _VOIGT

    return ElasticityTensor(np.einsum("aij,ab,bhk->ijhk", _VOIGT, m, _VOIGT))


def pde_residual(fs, c, x, h, e=np.array([1.0, 0.0])):
    """Centered-difference residual of div C[grad (U e)] at x."""
    res = np.zeros(2)
    dirs = np.eye(2)
    for j in range(2):
        for k in range(2):
            if j == k:
                d2 = (fs(x + h * dirs[j]) - 2 * fs(x) + fs(x - h * dirs[j])) @ e / h**2
            else:
                d2 = (
                    fs(x + h * dirs[j] + h * dirs[k])
                    - fs(x + h * dirs[j] - h * dirs[k])
                    - fs(x - h * dirs[j] + h * dirs[k])
                    + fs(x - h * dirs[j] - h * dirs[k])
                ) @ e / (4 * h**2)
            res += np.einsum("ih,h->i", c.c[:, j, :, k], d2)
    return np.abs(res).max()


class TestKernel:
    def test_evenness(self):
        fs = FundamentalSolution.isotropic(ISO)
        d = np.array([[0.3, -1.7], [2.0, 0.1], [-0.4, -0.9]])
        assert np.allclose(fs(d), fs(-d), atol=1e-15)

    def test_symmetry_isotropic(self):
        fs = FundamentalSolution.isotropic(ISO)
        u = fs(np.array([0.7, -0.2]))
        assert np.allclose(u, u.T)

    def test_singular_point(self):
        fs = FundamentalSolution.isotropic(ISO)
        with pytest.raises(SingularPoint):
            fs(np.zeros(2))
        with pytest.raises(SingularPoint):
            fs.gradient(np.zeros(2))

    def test_split_structure(self):
        """U(d) = Phi0 log|d| + Phi(d/|d|) exactly as stored."""
        fs = FundamentalSolution.isotropic(ISO)
        d = np.array([1.3, -0.6])
        r = np.linalg.norm(d)
        phi = np.arctan2(d[1], d[0])
        assert np.allclose(fs(d), fs.phi0 * np.log(r) + fs.angular_part(phi))
        # degree-zero homogeneity of the angular part
        assert np.allclose(fs(3.7 * d) - fs(d), fs.phi0 * np.log(3.7))

    def test_pde_residual_isotropic(self):
        fs = FundamentalSolution.isotropic(ISO)
        x = np.array([2.0, 1.0])
        res = [pde_residual(fs, ISO.tensor(), x, h) for h in (1e-2, 5e-3, 2.5e-3)]
        assert res[-1] < 1e-6
        orders = [np.log2(res[i] / res[i + 1]) for i in range(2)]
        assert all(1.7 < o < 2.3 for o in orders)

    def test_pde_residual_anisotropic(self):
        c = random_spd_tensor(3)
        fs = FundamentalSolution.from_tensor(c)
        x = np.array([-1.2, 1.9])
        res = [pde_residual(fs, c, x, h, e=np.array([0.3, -1.0])) for h in (1e-2, 5e-3)]
        assert res[-1] < 1e-5
        assert np.log2(res[0] / res[1]) > 1.7

    def test_force_balance_isotropic(self):
        """Total traction of U e over a circle enclosing the origin = -e."""
        fs = FundamentalSolution.isotropic(ISO)
        n = 512
        t = 2 * np.pi * np.arange(n) / n
        pts = 3.0 * np.stack([np.cos(t), np.sin(t)], axis=-1)
        nrm = pts / 3.0
        for e in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
            gradu = np.einsum("nijk,j->nik", fs.gradient(pts), e)
            trac = np.einsum("nik,nk->ni", apply_tensor(ISO.tensor(), gradu), nrm)
            total = (3.0 * 2 * np.pi / n) * trac.sum(axis=0)
            assert np.allclose(total, -e, atol=1e-8)

    def test_force_balance_anisotropic(self):
        c = random_spd_tensor(9)
        fs = FundamentalSolution.from_tensor(c)
        n = 512
        t = 2 * np.pi * np.arange(n) / n
        pts = 2.0 * np.stack([np.cos(t), np.sin(t)], axis=-1)
        nrm = pts / 2.0
        e = np.array([0.0, 1.0])
        gradu = np.einsum("nijk,j->nik", fs.gradient(pts), e)
        trac = np.einsum("nik,nk->ni", apply_tensor(c, gradu), nrm)
        total = (2.0 * 2 * np.pi / n) * trac.sum(axis=0)
        assert np.allclose(total, -e, atol=1e-8)

    def test_routes_agree_up_to_constant(self):
        """Closed form and angular representation differ by a constant matrix
        (the kernel is unique modulo constants); gradients agree exactly."""
        fs_a = FundamentalSolution.isotropic(ISO)
        fs_b = FundamentalSolution.from_tensor(ISO.tensor(), n_angles=256)
        d = np.stack(
            [np.array([np.cos(a), np.sin(a)]) * r
             for a, r in zip(np.linspace(0, 6, 25), np.linspace(0.2, 9, 25))]
        )
        diff = fs_a(d) - fs_b(d)
        assert np.abs(diff - diff.mean(axis=0)).max() < 1e-12
        assert np.allclose(fs_a.gradient(d), fs_b.gradient(d), atol=1e-12)
        assert np.allclose(fs_a.phi0, fs_b.phi0, atol=1e-14)

    def test_gradient_matches_finite_differences(self):
        c = random_spd_tensor(5)
        fs = FundamentalSolution.from_tensor(c)
        x = np.array([0.8, -1.4])
        h = 1e-6
        g = fs.gradient(x)
        for k in range(2):
            dx = np.zeros(2)
            dx[k] = h
            fd = (fs(x + dx) - fs(x - dx)) / (2 * h)
            assert np.allclose(g[:, :, k], fd, atol=1e-8)

    def test_not_strongly_elliptic(self):
        with pytest.raises(NotStronglyElliptic):
            FundamentalSolution.from_tensor(np.zeros((2, 2, 2, 2)))


class TestHelpers:
    def test_acoustic_tensor_isotropic(self):
        n = np.array([0.6, 0.8])
        g = acoustic_tensor(ISO.tensor(), n)
        expect = np.eye(2) + 2.0 * np.outer(n, n)  # mu I + (lam+mu) n x n
        assert np.allclose(g, expect)

    def test_fundamental_matrix_shortcut(self):
        d = np.array([0.5, 1.5])
        assert np.allclose(fundamental_matrix(ISO, d), FundamentalSolution.isotropic(ISO)(d))
        with pytest.raises(SingularPoint):
            fundamental_matrix(ISO, np.zeros(2))
