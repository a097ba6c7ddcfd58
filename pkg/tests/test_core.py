import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite as nph
from scipy.integrate import quad

from phaseflow.core import (
    Anisotropic2D, Free, Harmonic, Linear, PhaseField, Quartic, WavepacketFamily, coherent_sigma, derivative,
    hermite, hermite_gaussian_integral, ho_eigen_eta, ho_eigenstate, ho_eta_values, make_grid, make_model,
    make_position_grid, make_wavepacket, square_grid,
)
from phaseflow.errors import DegreeTooHigh, GridTooSmall, InvalidExtent, UsageError

MODELS = [Harmonic(), Free(), Quartic(), Anisotropic2D(), Linear(v=(0.5,), f=(-0.3,)), Harmonic(m=2.0, omega=0.7)]
coord = st.floats(-2.0, 2.0, allow_nan=False)


def complex_step(f, z, k, h=1e-30):
    zc = z.astype(complex)
    zc[k] += 1j * h
    return f(zc).imag / h


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.kind)
@settings(max_examples=25, deadline=None)
@given(data=st.data())
def test_model_gradients_match_complex_step(model, data):
    D = model.D
    z = np.array(data.draw(st.lists(coord, min_size=2 * D, max_size=2 * D)))

    def H(zz):
        return model.H(zz[:D], zz[D:])
    grad = np.array([complex_step(H, z, k) for k in range(2 * D)])
    np.testing.assert_allclose(model.dH_dq(z[:D], z[D:]), grad[:D], atol=1e-12)
    np.testing.assert_allclose(model.dH_dp(z[:D], z[D:]), grad[D:], atol=1e-12)

    def G(zz):
        return np.concatenate([model.dH_dq(zz[:D], zz[D:]), model.dH_dp(zz[:D], zz[D:])])
    hess = np.stack([complex_step(G, z, k) for k in range(2 * D)], axis=1)
    np.testing.assert_allclose(model.hessian(z[:D], z[D:]), hess, atol=1e-11)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(0, 30), x=st.floats(-3, 3))
def test_hermite_matches_numpy(n, x):
    want = nph.hermval(x, [0] * n + [1])
    assert hermite(n, x) == pytest.approx(want, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("n", [0, 1, 4, 9])
@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_hermite_gaussian_integral_against_quadrature(n, alpha):
    for z in (-1.2, 0.0, 0.9):
        num, _ = quad(lambda x: np.exp(-(x - z) ** 2) * hermite(n, alpha * x), -np.inf, np.inf)
        assert hermite_gaussian_integral(n, alpha, z) == pytest.approx(num, rel=1e-8, abs=1e-10)


def test_hermite_degree_limit():
    with pytest.raises(DegreeTooHigh):
        hermite(31, 0.5)
    with pytest.raises(DegreeTooHigh):
        hermite(-1, 0.5)


def test_derivative_is_exact_on_low_degree_polynomials():
    x = np.linspace(-1, 2, 31)
    h = x[1] - x[0]
    for acc in (2, 4, 6, 8):
        f = x ** acc
        np.testing.assert_allclose(derivative(f, 0, h, 1, acc), acc * x ** (acc - 1), atol=1e-8)
        np.testing.assert_allclose(derivative(f, 0, h, 2, acc), acc * (acc - 1) * x ** (acc - 2), atol=1e-6)


def test_derivative_convergence_order():
    errs = []
    for n in (41, 81):
        x = np.linspace(0, 2, n)
        errs.append(np.max(np.abs(derivative(np.sin(x), 0, x[1] - x[0], 1, 4) - np.cos(x))))
    assert errs[0] / errs[1] > 12  # fourth order: ideally 16


def test_grid_validation():
    with pytest.raises(InvalidExtent):
        make_grid((1.0, -1.0), (-1.0, 1.0), 16)
    with pytest.raises(InvalidExtent):
        make_grid([(-1, 1)] * 3, [(-1, 1)] * 3, 8)
    g = square_grid(2.0, 9)
    assert g.shape == (9, 9)
    assert g.points().shape == (2, 9, 9)
    assert g.index_of([0.0, 2.0]) == (4, 8)


@settings(max_examples=25, deadline=None)
@given(q=st.floats(-3, 3), p=st.floats(-3, 3))
def test_index_coords_round_trip(q, p):
    g = make_grid((-4.0, 4.0), (-5.0, 3.0), 33, 17)
    c = g.to_index_coords(np.array([q, p]))
    back = np.asarray(g.lower) + c * np.asarray(g.spacing)
    np.testing.assert_allclose(back, [q, p], atol=1e-12)
    assert g.contains(np.array([q, p])) == (-5.0 <= p <= 3.0)


def test_family_validation():
    with pytest.raises(UsageError):
        WavepacketFamily(sigma=-1.0)
    with pytest.raises(UsageError):
        WavepacketFamily(gauge="bogus")
    with pytest.raises(UsageError):
        make_model("nonsense")
    with pytest.raises(UsageError):
        make_model("harmonic", omega=-1.0)


@settings(max_examples=20, deadline=None)
@given(q=st.floats(-3, 3), p=st.floats(-4, 4), sigma=st.floats(0.4, 1.5))
def test_wavepacket_unit_norm_and_mean_momentum(q, p, sigma):
    xg = make_position_grid((-14.0, 14.0), 1024)
    u = make_wavepacket(WavepacketFamily(sigma=sigma), q, p, xg)
    assert u.norm_sq() == pytest.approx(1.0, abs=1e-10)
    x = xg.axis(0)
    assert np.sum(x * np.abs(u.values) ** 2 * xg.weights()) == pytest.approx(q, abs=1e-9)


def test_wavepacket_tail_rejected():
    xg = make_position_grid((-5.0, 5.0), 256)
    with pytest.raises(GridTooSmall):
        make_wavepacket(WavepacketFamily(sigma=1.0), 4.5, 0.0, xg)


def test_ho_eigenstates_orthonormal():
    xg = make_position_grid((-12.0, 12.0), 1024)
    states = [ho_eigenstate(n, Harmonic(), xg).values for n in range(8)]
    gram = np.array([[np.sum(np.conj(a) * b * xg.weights()) for b in states] for a in states])
    np.testing.assert_allclose(gram, np.eye(8), atol=1e-12)


def test_phase_eigenfunction_norm_and_modulus():
    model = Harmonic()
    g = square_grid(8.0, 161)
    for n in range(5):
        eta = ho_eigen_eta(n, model, g)
        assert eta.norm_sq() == pytest.approx(1.0, abs=1e-9)
    # modulus depends on (q, p) only through H
    q = np.array([1.0, 0.0, -0.6])
    p = np.array([0.0, 1.0, 0.8])
    mods = np.abs(ho_eta_values(3, model, 1.0, q, p))
    np.testing.assert_allclose(mods, mods[0], rtol=1e-12)


def test_coherent_sigma():
    assert coherent_sigma(Harmonic(m=2.0, omega=0.5)) == pytest.approx(np.sqrt(1.0 / (2 * 2.0 * 0.5)))


def test_phase_field_inner_product():
    g = square_grid(8.0, 129)
    a = ho_eigen_eta(0, Harmonic(), g)
    b = ho_eigen_eta(1, Harmonic(), g)
    assert abs(a.inner(b)) < 1e-10
    assert isinstance(a.with_values(2 * a.values), PhaseField)
    assert a.with_values(2 * a.values).norm_sq() == pytest.approx(4.0, rel=1e-9)
