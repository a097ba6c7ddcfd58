import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseflow import reference
from phaseflow.core import Free, Harmonic, Linear, Quartic, WavepacketFamily, ho_eigenstate, make_position_grid, make_wavepacket
from phaseflow.errors import GridTooCoarse, GridTooSmall, OutflowDetected, UsageError

HO = Harmonic()
XG = make_position_grid((-12.0, 12.0), 512)
QUARTIC_E0 = 0.6679862591554857  # ground level of p^2/2 + q^4


def test_oscillator_spectrum_and_states():
    pairs = reference.eigensolve(HO, XG, 6)
    np.testing.assert_allclose([e.energy for e in pairs], np.arange(6) + 0.5, atol=1e-10)
    for n, ep in enumerate(pairs):
        exact = ho_eigenstate(n, HO, XG).values.real
        # rightmost lobe positive; Hermite functions share that convention
        np.testing.assert_allclose(ep.state.values.real, exact, atol=1e-10)
        assert ep.state.norm_sq() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=8, deadline=None)
@given(m=st.floats(0.5, 2.0), omega=st.floats(0.5, 2.0))
def test_oscillator_levels_scale(m, omega):
    model = Harmonic(m=m, omega=omega)
    xg = make_position_grid((-14.0, 14.0), 512)
    got = [e.energy for e in reference.eigensolve(model, xg, 3, check=False)]
    np.testing.assert_allclose(got, omega * (np.arange(3) + 0.5), atol=1e-9)


def test_quartic_ground_level():
    ep = reference.eigensolve(Quartic(), make_position_grid((-6.0, 6.0), 512), 1)[0]
    assert ep.energy == pytest.approx(QUARTIC_E0, abs=1e-10)
    auto = reference.eigensolve_auto(Quartic(), 11)
    assert auto[0].energy == pytest.approx(QUARTIC_E0, abs=1e-9)
    assert np.all(np.diff([e.energy for e in auto]) > 0)


def test_eigensolve_errors():
    with pytest.raises(GridTooCoarse):
        reference.eigensolve(HO, make_position_grid((-12.0, 12.0), 48), 8)
    with pytest.raises(GridTooSmall):
        reference.eigensolve(HO, make_position_grid((-2.5, 2.5), 128), 3, check=False)
    with pytest.raises(UsageError):
        reference.eigensolve(Linear(), XG, 2)
    with pytest.raises(UsageError):
        reference.eigensolve(HO, XG, 0)


def test_ground_state_phase_rotation():
    psi = ho_eigenstate(0, HO, XG)
    out = reference.schrodinger_evolve(psi, HO, 2.0, 1e-3)
    np.testing.assert_allclose(out.values, psi.values * np.exp(-1j * 1.0), atol=1e-6)  # Strang error O(dt^2)
    assert out.time_tag == pytest.approx(2.0)


def test_coherent_packet_follows_classical_orbit():
    fam = WavepacketFamily(sigma=np.sqrt(0.5))
    psi = make_wavepacket(fam, 2.0, 0.0, XG)
    t = np.pi / 2
    out = reference.schrodinger_evolve(psi, HO, t, 1e-3)
    x = XG.axis(0)
    w = np.abs(out.values) ** 2 * XG.weights()
    assert np.sum(x * w) == pytest.approx(0.0, abs=1e-6)
    assert out.norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_strang_second_order():
    fam = WavepacketFamily(sigma=0.6)
    psi = make_wavepacket(fam, 1.0, 0.5, XG)
    ref = reference.schrodinger_evolve(psi, Quartic(lam=0.1), 1.0, 1e-4)
    errs = [np.sqrt(np.sum(np.abs(reference.schrodinger_evolve(psi, Quartic(lam=0.1), 1.0, dt).values
                                  - ref.values) ** 2 * XG.weights())) for dt in (0.02, 0.01)]
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_partial_last_step_hits_final_time():
    psi = ho_eigenstate(1, HO, XG)
    out = reference.schrodinger_evolve(psi, HO, 0.7, 0.3)
    two = reference.schrodinger_evolve(reference.schrodinger_evolve(psi, HO, 0.6, 0.3), HO, 0.1, 0.1)
    np.testing.assert_allclose(out.values, two.values, atol=1e-14)
    assert out.time_tag == pytest.approx(0.7)


def test_outflow_detected():
    fam = WavepacketFamily(sigma=0.5)
    psi = make_wavepacket(fam, 0.0, 6.0, make_position_grid((-8.0, 8.0), 512))
    with pytest.raises(OutflowDetected):
        reference.schrodinger_evolve(psi, Free(), 3.0, 1e-2)
    with pytest.raises(UsageError):
        reference.schrodinger_evolve(psi, Free(), 1.0, -1.0)
