import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from phaseflow import quantization as qz
from phaseflow import transform
from phaseflow.core import (
    Anisotropic2D, Free, Harmonic, PhaseField, Quartic, WavepacketFamily, coherent_sigma, ho_eigen_eta,
    square_grid,
)
from phaseflow.errors import EnergyBelowMinimum, NoClosedOrbit, SingularJacobian, UsageError

HO = Harmonic()


def test_action_integral_examples():
    assert qz.action_integral(HO, 3.0) == pytest.approx(6 * np.pi, abs=1e-8)
    assert qz.action_integral(Harmonic(m=2.0, omega=0.5), 1.0) == pytest.approx(4 * np.pi, abs=1e-8)
    assert qz.action_integral(HO, 0.0) == 0.0
    ref, _ = quad(lambda q: np.sqrt(2 * (1 - q**4)), -1, 1, epsabs=1e-13, epsrel=1e-13)
    assert qz.action_integral(Quartic(), 1.0) == pytest.approx(2 * ref, abs=1e-6)


def test_action_integral_errors():
    with pytest.raises(EnergyBelowMinimum):
        qz.action_integral(HO, -0.5)
    with pytest.raises(NoClosedOrbit):
        qz.action_integral(Free(), 1.0)
    with pytest.raises(UsageError):
        qz.action_integral(HO, 1.0, dof=1)


@settings(max_examples=10, deadline=None)
@given(E=st.floats(0.05, 8.0))
def test_action_scales_like_quartic_virial(E):
    # J(E) = J(1) E^(3/4) for p^2/2 + q^4
    J1 = qz.action_integral(Quartic(), 1.0)
    assert qz.action_integral(Quartic(), E) == pytest.approx(J1 * E**0.75, rel=1e-8)


def test_frozen_dof_actions_on_anisotropic_oscillator():
    a = Anisotropic2D()
    for i, w in enumerate(a.omegas):
        assert qz.action_integral(a, 1.5, dof=i) == pytest.approx(2 * np.pi * 1.5 / w, abs=1e-8)


def test_harmonic_levels_miss_zero_point():
    res = qz.bohr_sommerfeld_levels(HO, 4, compare_exact=True)
    np.testing.assert_allclose(res.energies, np.arange(5), atol=1e-10)
    np.testing.assert_allclose(res.exact, np.arange(5) + 0.5, atol=1e-8)
    assert res.quantum_numbers == [(n,) for n in range(5)]
    np.testing.assert_allclose(res.relative_errors, 0.5 / (np.arange(5) + 0.5), atol=1e-8)


def test_two_dimensional_levels_sorted_and_complete():
    a = Anisotropic2D()
    res = qz.bohr_sommerfeld_levels(a, 3)
    assert len(res.quantum_numbers) == 10
    assert np.all(np.diff(res.energies) >= 0)
    want = [n1 * a.omegas[0] + n2 * a.omegas[1] for n1, n2 in res.quantum_numbers]
    np.testing.assert_allclose(res.energies, want, atol=1e-8)


def test_levels_errors():
    with pytest.raises(UsageError):
        qz.bohr_sommerfeld_levels(HO, -1)
    with pytest.raises(NoClosedOrbit):
        qz.bohr_sommerfeld_levels(Free(), 2)


def test_quartic_levels_increase():
    res = qz.bohr_sommerfeld_levels(Quartic(), 5)
    assert np.all(np.diff(res.energies) > 0)
    # J(E_n) = 2 pi n
    for n, E in enumerate(res.energies):
        assert qz.action_integral(Quartic(), E) == pytest.approx(2 * np.pi * n, abs=1e-8)


def test_phase_winding_of_oscillator_states():
    g = square_grid(8.0, 161)
    for n in range(4):
        w, raw = qz.phase_winding(ho_eigen_eta(n, HO, g), HO, float(n))
        assert w == n and abs(raw - n) < 1e-3
    assert qz.phase_winding(ho_eigen_eta(0, HO, g), HO, 0.0) == (0, 0.0)
    with pytest.raises(EnergyBelowMinimum):
        qz.phase_winding(ho_eigen_eta(0, HO, g), HO, -1.0)


def test_phase_winding_of_quartic_eigenstate_at_its_level():
    from phaseflow.core import make_grid, make_position_grid
    from phaseflow.reference import eigensolve
    states = eigensolve(Quartic(), make_position_grid((-8.0, 8.0), 1024), 4)
    fam = WavepacketFamily(sigma=np.sqrt(0.5))
    g = make_grid((-6.0, 6.0), (-14.0, 14.0), 97, 211)
    res = qz.bohr_sommerfeld_levels(Quartic(), 3)
    for n in (1, 2, 3):
        eta = transform.lift(states[n].state, fam, g, "separable")
        assert qz.phase_winding(eta, Quartic(), float(res.energies[n]))[0] == n


def test_separability():
    a = Anisotropic2D()
    consts = [qz.dof_energy(a, 0), qz.dof_energy(a, 1)]
    assert qz.separability_check(a, consts).max_abs <= 1e-12
    # q1 alone is not conserved in its own pair
    assert qz.separability_check(a, [qz.coordinate(0)]).max_abs > 0.1


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_pdhdp_invariance(seed):
    a = Anisotropic2D()
    pts = qz.random_points(2, 8, seed)
    for xf in (qz.identity_transform(2), qz.scaling_transform([2.0, 0.5]), qz.polar_transform()):
        assert qz.pdhdp_invariance_check(a, xf, pts).max_abs <= 1e-10


def test_polar_transform_singular_at_origin():
    with pytest.raises(SingularJacobian):
        qz.pdhdp_invariance_check(Anisotropic2D(), qz.polar_transform(), (np.zeros((2, 1)), np.ones((2, 1))))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.2, 3.0), min_size=2, max_size=2), st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_transforms_round_trip_and_preserve_p_dq(q, p):
    q = np.array(q)[:, None]
    p = np.array(p)[:, None]
    for xf in (qz.scaling_transform([2.0, 0.5]), qz.polar_transform()):
        np.testing.assert_allclose(xf.inverse(xf.forward(q)), q, atol=1e-12)
        # P . dQ = p . dq for any displacement dq: P^T J = p^T
        P = xf.momenta(q, p)
        J = xf.jacobian(q)
        np.testing.assert_allclose(np.einsum("a...,ab...->b...", P, J), p, atol=1e-12)
