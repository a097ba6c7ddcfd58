import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from phaseflow import classical, dynamics
from phaseflow.classical import FlowConfig
from phaseflow.core import Free, Harmonic, PhaseField, Quartic, ho_eigen_eta, make_grid, square_grid
from phaseflow.dynamics import GaugeSpec
from phaseflow.errors import AllMasked, GaugeUnsupported, GridMismatch, OutflowDetected, UsageError

HO = Harmonic()


def blob(grid, q0=1.0, p0=0.0, width=1.0):
    q, p = grid.mesh()
    return PhaseField(grid, np.exp(-((q[0] - q0) ** 2 + (p[0] - p0) ** 2) / (2 * width**2)))


def test_order2_matches_symbolic_oracle_on_quartic():
    q, p, hb = sp.symbols("q p hbar", real=True)
    H = p**2 / 2 + q**4
    eta = sp.exp(-(q**2 + p**2) / 2 + sp.I * q * p / 3)
    Hpp, Hqp, Hqq = sp.diff(H, p, 2), sp.diff(H, q, p), sp.diff(H, q, 2)
    rhs = ((-sp.I / (2 * hb)) * p**2 * Hpp - Hqp / 2) * eta \
        + p * (Hpp * sp.diff(eta, q) - Hqp * sp.diff(eta, p)) \
        + (sp.I * hb / 2) * (Hpp * sp.diff(eta, q, 2) - 2 * Hqp * sp.diff(eta, q, p) + Hqq * sp.diff(eta, p, 2))
    q0, p0 = 0.4, -0.3
    want = complex(rhs.subs({q: q0, p: p0, hb: 0.7}).evalf(20))

    g = make_grid((q0 - 4.0, q0 + 4.0), (p0 - 4.0, p0 + 4.0), 161)
    qq, pp = g.mesh()
    f = sp.lambdify((q, p), eta, "numpy")
    got = dynamics.se_rhs_order2(PhaseField(g, f(qq[0], pp[0])), Quartic(), hbar=0.7)
    i = g.index_of([q0, p0])
    assert got.values[i] == pytest.approx(want, rel=1e-7)


def test_order2_term_is_half_quantum_for_oscillator_states():
    g = square_grid(8.0, 161)
    for n in range(4):
        eta = ho_eigen_eta(n, HO, g)
        corr = 1j * dynamics.se_rhs_order2(eta, HO).values
        assert np.sqrt(np.sum(np.abs(corr - 0.5 * eta.values) ** 2) / np.sum(np.abs(eta.values) ** 2)) < 1e-6


def test_first_order_residuals_for_oscillator_states():
    g = square_grid(8.0, 161)
    for n in range(4):
        eta = ho_eigen_eta(n, HO, g)
        assert dynamics.tise_residual(eta, float(n), HO).relative < 1e-5
        assert dynamics.tise_residual(eta, n + 1.0, HO).relative == pytest.approx(1.0, abs=1e-5)
        e = dynamics.tise_residual(eta, float(n), HO, gauge=GaugeSpec("energy")).relative
        assert e == pytest.approx(dynamics.tise_residual(eta, float(n), HO).relative, rel=1e-12)
    with pytest.raises(UsageError):
        dynamics.tise_residual(eta, 0.0, HO, order=3)


def test_kvn_gauge_does_not_remove_the_residual():
    g = square_grid(8.0, 161)
    eta = ho_eigen_eta(2, HO, g)
    plain = dynamics.tise_residual(eta, 2.0, HO).relative
    kvn = dynamics.tise_residual(eta, 2.0, HO, gauge=GaugeSpec("kvn", np.pi / 2)).relative
    assert kvn >= plain
    assert kvn > 0.1


def test_amplitude_and_phase_residuals():
    g = square_grid(8.0, 161)
    q, p = g.mesh()
    rA, rb = dynamics.amplitude_phase_residuals(ho_eigen_eta(0, HO, g), 0.0, HO)
    assert rA.max_abs < 1e-5 and rb.max_abs < 1e-5
    away = np.hypot(q[0], p[0]) > 1.0  # ten cells from the zero of (q - ip)^n
    for n in range(1, 6):
        rA, rb = dynamics.amplitude_phase_residuals(ho_eigen_eta(n, HO, g), float(n), HO)
        assert np.max(np.abs(rb.field.values[away & rb.mask])) < 1e-4
        assert not rb.mask[g.index_of([0.0, 0.0])]
    flat = PhaseField(g, np.exp(-(q[0] ** 2 + p[0] ** 2) / 8))
    _, rb = dynamics.amplitude_phase_residuals(flat, 0.0, Free())
    np.testing.assert_allclose(rb.field.values[rb.mask], (p[0] ** 2 / 2)[rb.mask], atol=1e-12)
    with pytest.raises(AllMasked):
        dynamics.amplitude_phase_residuals(flat.with_values(np.zeros(g.shape)), 0.0, HO)


def test_quartic_gauge_moduli():
    g = square_grid(7.0, 97)
    eta = blob(g, 0.5, 0.5, 0.35)
    a = dynamics.se_evolve(eta, Quartic(), 0.5)
    b = dynamics.se_evolve(eta, Quartic(), 0.5, gauge=GaugeSpec("kvn"))
    assert np.max(np.abs(np.abs(a.values) - np.abs(b.values))) < 1e-8


def test_modulus_transported_like_density():
    g = square_grid(7.0, 97)
    eta = blob(g)
    out = dynamics.se_evolve(eta, HO, 1.3)
    rho = classical.liouville_step(classical.DensityField.from_field(eta), HO, 1e-3, 1300)
    assert np.max(np.abs(np.abs(out.values) - np.sqrt(rho.values))) < 1e-6


@settings(max_examples=8, deadline=None)
@given(q0=st.floats(-1.0, 1.0), p0=st.floats(-1.0, 1.0), t=st.floats(0.1, 2.0))
def test_norm_and_gauge_moduli(q0, p0, t):
    g = square_grid(7.0, 81)
    eta = blob(g, q0, p0, 0.7)
    runs = [dynamics.se_evolve(eta, HO, t, gauge=GaugeSpec(k)) for k in ("none", "energy", "kvn")]
    for r in runs[1:]:
        assert np.max(np.abs(np.abs(r.values) - np.abs(runs[0].values))) < 1e-12
    h = dynamics.se_evolve(eta, HO, t)
    assert h.norm_sq() == pytest.approx(eta.norm_sq(), rel=1e-5)


def test_free_particle_phase_is_action():
    g = square_grid(4.0, 81, center=(1.0, 2.0))
    q, p = g.mesh()
    eta = PhaseField(g, np.exp(-(q[0] ** 2 + (p[0] - 2.0) ** 2) / 0.3))
    for hbar in (1.0, 0.5):
        out = dynamics.se_evolve(eta, Free(), 1.0, hbar=hbar)
        assert dynamics.peak_phase_change(eta, out) == pytest.approx(np.angle(np.exp(2j / hbar)), abs=1e-6)
    en = dynamics.se_evolve(eta, Free(), 1.0, gauge=GaugeSpec("energy"))
    assert dynamics.peak_phase_change(eta, en) == pytest.approx(np.angle(np.exp(4j)), abs=1e-6)


def test_regauge_matches_direct_propagation():
    g = square_grid(7.0, 97)
    eta = blob(g, 1.0, 0.5, 0.7)
    plain = dynamics.se_evolve(eta, HO, 1.0)
    for kind in ("energy", "kvn"):
        direct = dynamics.se_evolve(eta, HO, 1.0, gauge=GaugeSpec(kind))
        conv = dynamics.regauge(plain, HO, 1.0, "none", kind)
        np.testing.assert_allclose(conv.values, direct.values, atol=1e-8)
        back = dynamics.regauge(conv, HO, 1.0, kind, "none")
        np.testing.assert_allclose(back.values, plain.values, atol=1e-12)


def test_single_and_repeated_remaps_agree():
    g = square_grid(7.0, 97)
    eta = blob(g, 1.0, 0.0, 0.8)
    a = dynamics.se_evolve(eta, HO, 1.0)
    b = dynamics.se_evolve(eta, HO, 1.0, FlowConfig(remap_every=250))
    assert np.max(np.abs(a.values - b.values)) < 1e-4


def test_errors():
    g = square_grid(7.0, 97)
    eta = blob(g)
    assert dynamics.se_evolve(eta, HO, 0.0) is eta
    with pytest.raises(UsageError):
        dynamics.se_evolve(eta, HO, -1.0)
    with pytest.raises(UsageError):
        GaugeSpec("bogus")
    g2 = make_grid([(-3, 3), (-3, 3)], [(-3, 3), (-3, 3)], 9)
    with pytest.raises(GridMismatch):
        dynamics.se_evolve(PhaseField(g2, np.zeros(g2.shape)), HO, 1.0)
    with pytest.raises(OutflowDetected):
        dynamics.se_evolve(blob(square_grid(3.0, 41), 1.0, 1.0, 0.3), Free(), 3.0)

    class Driven(Harmonic):
        autonomous = False
    with pytest.raises(GaugeUnsupported):
        dynamics.se_evolve(eta, Driven(), 1.0, gauge=GaugeSpec("kvn"))
    with pytest.raises(GaugeUnsupported):
        dynamics.action_table(Driven(), g, 1.0)
