"""Invariant suites run by ``phaseflow validate``.

Every check returns a :class:`CheckResult`; suites run them (optionally in a
thread pool capped by ``PHASEFLOW_THREADS``) and report in a fixed order.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import classical, dynamics, quantization, reference, transform
from .core import (
    Anisotropic2D, Harmonic, PhaseField, PositionWavefunction, Quartic, WavepacketFamily, coherent_sigma,
    hermite, hermite_gaussian_integral, ho_eigen_eta, ho_eigenstate, ho_eta_values, l2_relative,
    make_position_grid, square_grid,
)
from .core.fd import derivative
from .core.models import MODEL_KINDS


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}/{self.name}: {self.value:.3e} (tol {self.tolerance:.1e})"


HO = Harmonic()
HO_FAMILY = WavepacketFamily(sigma=coherent_sigma(HO))


def _xgrid():
    return make_position_grid((-12.0, 12.0), 512)


def _pgrid(n=97, half=7.0):
    return square_grid(half, n)


# core

def core_gradients(seed=42):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for kind in ("harmonic", "free", "quartic", "anisotropic2d"):
        m = MODEL_KINDS[kind]()
        D = m.D
        q, p = rng.uniform(-1.5, 1.5, (2, D, 16))
        h = 1e-5
        for i in range(D):
            e = np.zeros((D, 1))
            e[i] = h
            fd_q = (m.H(q + e, p) - m.H(q - e, p)) / (2 * h)
            fd_p = (m.H(q, p + e) - m.H(q, p - e)) / (2 * h)
            for an, fd in ((m.dH_dq(q, p)[i], fd_q), (m.dH_dp(q, p)[i], fd_p)):
                worst = max(worst, np.max(np.abs(an - fd) / np.maximum(1.0, np.abs(an))))
        Hs = m.hessian(q, p)
        worst = max(worst, np.max(np.abs(Hs - np.swapaxes(Hs, 0, 1))))
    return worst, 1e-6


def core_hermite_gaussian():
    # trapezoid on a wide uniform grid is spectrally accurate for Gaussian integrands
    x = np.linspace(-25.0, 25.0, 5001)
    worst = 0.0
    for n in range(7):
        for a in (0.5, 0.9):
            for z in (0.0, 1.0, 1 + 0.5j):
                exact = hermite_gaussian_integral(n, a, z)
                num = np.trapezoid(np.exp(-(x - z) ** 2) * hermite(n, a * x), x)
                worst = max(worst, abs(num - exact) / max(abs(exact), 1.0))  # odd n at z = 0 vanish
    return worst, 1e-8


def core_eta_norm():
    g = square_grid(9.0, 121)
    return max(abs(ho_eigen_eta(n, HO, g).norm_sq() - 1) for n in range(4)), 1e-6


def core_modulus_depends_on_H():
    theta = np.linspace(0, 2 * np.pi, 17)
    worst = 0.0
    for n in range(4):
        for E in (0.5, 2.0):
            r = np.sqrt(2 * E)
            v = np.abs(ho_eta_values(n, HO, 1.0, r * np.cos(theta), r * np.sin(theta)))
            worst = max(worst, np.ptp(v) / v.max())
    return worst, 1e-10


# transform

def transform_round_trip():
    xg, g = _xgrid(), _pgrid()
    worst = 0.0
    for n in range(3):
        psi = ho_eigenstate(n, HO, xg)
        back = transform.project(transform.lift(psi, HO_FAMILY, g, "separable"), HO_FAMILY, xg, "separable")
        worst = max(worst, l2_relative(back.values, psi.values, xg.weights()))
    return worst, 1e-6


def transform_inner_products():
    xg, g = _xgrid(), _pgrid()
    a = ho_eigenstate(1, HO, xg)
    b = a.with_values(a.values + 0.5j * ho_eigenstate(2, HO, xg).values)
    la, lb = (transform.lift(s, HO_FAMILY, g, "separable") for s in (a, b))
    return abs(la.inner(lb) - a.inner(b)) / abs(a.inner(b)), 1e-6


def transform_kernel_hermitian(seed=42):
    rng = np.random.default_rng(seed)
    z, zp = rng.uniform(-2, 2, (2, 2, 32))
    k1 = transform.kernel(HO_FAMILY, z, zp)
    k2 = transform.kernel(HO_FAMILY, zp, z)
    return float(np.max(np.abs(k1 - np.conj(k2)))), 1e-14


def transform_idempotent(seed=42):
    g = _pgrid(121, 9.0)
    q, p = g.mesh()
    rng = np.random.default_rng(seed)
    c = rng.normal(size=(4, 2))
    vals = sum((c[k, 0] + 1j * c[k, 1]) * np.exp(-((q[0] - k + 1.5) ** 2 + (p[0] + 0.5 * k - 0.7) ** 2) / 1.2)
               for k in range(4))
    eta = PhaseField(g, vals)
    once = transform.project_Q(eta, HO_FAMILY)
    twice = transform.project_Q(once, HO_FAMILY)
    return np.sqrt(np.sum(np.abs(twice.values - once.values) ** 2)) / np.sqrt(np.sum(np.abs(vals) ** 2)), 1e-6


def _smooth_psi(xg):
    x = xg.axis(0)
    v = np.exp(-((x - 0.4) ** 2) / 1.5 + 0.8j * x) + 0.4 * np.exp(-((x + 1.0) ** 2) / 0.8 - 0.3j * x)
    psi = PositionWavefunction(xg, v.astype(complex))
    return psi.with_values(psi.values / psi.norm())


def ladder_errors(order=8):
    """Ladder overlaps against ``i hbar d eta/dp`` and ``(hbar/i) d eta/dq - p eta``."""
    xg, g = _xgrid(), _pgrid(121, 7.5)
    psi = _smooth_psi(xg)
    eta = transform.lift(psi, HO_FAMILY, g, "separable")
    X, P = transform.ladder_overlaps(psi, HO_FAMILY, g)
    e_p = derivative(eta.values, 1, g.dp[0], 1, order)
    e_q = derivative(eta.values, 0, g.dq[0], 1, order)
    pm = g.mesh()[1][0]
    ex = l2_relative(X.values, 1j * e_p)
    ep = l2_relative(P.values, -1j * e_q - pm * eta.values)
    return ex, ep


def transform_ladder_x():
    return ladder_errors()[0], 1e-4


def transform_ladder_p():
    return ladder_errors()[1], 1e-4


def transform_projected_momentum():
    xg, g = _xgrid(), _pgrid(145, 9.0)
    psi = _smooth_psi(xg)
    lhs = transform.projected_momentum(psi, HO_FAMILY, g)
    rhs = transform.spectral_momentum(psi)
    return l2_relative(lhs.values, rhs.values, xg.weights()), 1e-4


# classical

def classical_rk4_order():
    errs = []
    for dt in (0.02, 0.01):
        tr = classical.integrate_trajectory(HO, [1.0, 0.0], 2.0, classical.FlowConfig(dt=dt))
        errs.append(np.hypot(tr.final[0] - np.cos(2.0), tr.final[1] + np.sin(2.0)))
    # halving dt must cut the error by at least 2^4 / 2; report the shortfall factor
    return 8.0 / (errs[0] / errs[1]), 1.0


def classical_composition():
    g = _pgrid(33, 3.0)
    pts = g.points()
    fwd, _ = classical.flow_map(Quartic(), pts, 0.7, 1e-3)
    back = classical.backtrack(Quartic(), fwd, 0.7, 1e-3)
    return float(np.max(np.abs(back - pts))), 1e-9


def classical_stationary_density():
    g = _pgrid(97, 7.0)
    q, p = g.mesh()
    rho = classical.DensityField(g, np.exp(-HO.H(q, p)))
    out = classical.liouville_step(rho, HO, 1e-3, 1571)
    return float(np.max(np.abs(out.values - rho.values))), 1e-6


# dynamics

def _blob(g, q0=1.0, p0=0.0, width=1.0):
    q, p = g.mesh()
    return PhaseField(g, np.exp(-((q[0] - q0) ** 2 + (p[0] - p0) ** 2) / (2 * width**2)))


def dynamics_amplitude_transport():
    g = _pgrid(97, 7.0)
    eta = _blob(g)
    cfg = classical.FlowConfig()
    out = dynamics.se_evolve(eta, HO, 1.3, cfg)
    rho = classical.liouville_step(classical.DensityField.from_field(eta), HO, 1e-3, 1300, cfg)
    return float(np.max(np.abs(np.abs(out.values) - np.sqrt(rho.values)))), 1e-6


def dynamics_phase_action():
    from .core.models import Free
    g = square_grid(4.0, 81, center=(1.0, 2.0))
    model = Free()
    eta = PhaseField(g, np.exp(-((g.mesh()[0][0]) ** 2 + (g.mesh()[1][0] - 2.0) ** 2) / 0.3))
    out = dynamics.se_evolve(eta, model, 1.0)
    traj = classical.integrate_trajectory(model, [0.0, 2.0], 1.0)
    S = classical.accumulate_action(traj, model)
    return abs(dynamics.peak_phase_change(eta, out) - S), 1e-4


def dynamics_norm():
    g = _pgrid(97, 7.0)
    eta = _blob(g)
    out = dynamics.se_evolve(eta, HO, 2 * np.pi)
    return abs(out.norm_sq() / eta.norm_sq() - 1), 1e-6


def dynamics_gauge_moduli():
    g = _pgrid(97, 7.0)
    eta = _blob(g, 0.5, 0.5, 0.35)
    a = dynamics.se_evolve(eta, Quartic(), 0.5)
    b = dynamics.se_evolve(eta, Quartic(), 0.5, gauge=dynamics.GaugeSpec("kvn"))
    return float(np.max(np.abs(np.abs(a.values) - np.abs(b.values)))), 1e-8


def dynamics_kvn_not_smaller():
    g = square_grid(8.0, 161)
    eta = ho_eigen_eta(2, HO, g)
    plain = dynamics.tise_residual(eta, 2.0, HO).relative
    kvn = dynamics.tise_residual(eta, 2.0, HO, gauge=dynamics.GaugeSpec("kvn", np.pi / 2)).relative
    # value is the plain/kvn ratio; the kvn gauge must not shrink the residual
    return plain / kvn, 1.0


# quantization

def quantization_monotone():
    worst = -np.inf
    for m in (HO, Quartic()):
        J = quantization._actions_1d(m, np.linspace(0.2, 6.0, 12))
        worst = max(worst, -np.min(np.diff(J)))
    return max(worst, 0.0), 0.0


def quantization_triangle_action():
    res = quantization.bohr_sommerfeld_levels(HO, 3)
    J = [quantization.action_integral(HO, E) for E in res.energies]
    return max(abs(j - 2 * np.pi * n) for n, j in enumerate(J)), 1e-8


def quantization_triangle_winding():
    res = quantization.bohr_sommerfeld_levels(HO, 3)
    g = square_grid(8.0, 129)
    states = reference.eigensolve(HO, _xgrid(), 4)
    raw = [quantization.phase_winding(transform.lift(s.state, HO_FAMILY, g, "separable"), HO, float(E))[1]
           for s, E in zip(states, res.energies)]
    return max(abs(w - n) for n, w in enumerate(raw)), 1e-3


def quantization_beta_w():
    E = 2.0
    g = square_grid(8.0, 161)
    eta = ho_eigen_eta(2, HO, g)
    pts, phase = quantization.orbit_phase(eta, HO, E)
    q, p = pts[:, 0], pts[:, 1]
    sel = np.flatnonzero(p > 0.3 * np.sqrt(2 * E))
    sel = sel[(sel > 0) & (sel < len(q) - 1)]
    dbdq = (phase[sel + 1] - phase[sel - 1]) / (q[sel + 1] - q[sel - 1])
    return float(np.max(np.abs(dbdq - p[sel]))), 1e-3


def quantization_separability():
    a = Anisotropic2D()
    cs = [quantization.dof_energy(a, 0), quantization.dof_energy(a, 1)]
    return quantization.separability_check(a, cs).max_abs, 1e-12


def quantization_pdhdp():
    a = Anisotropic2D()
    pts = quantization.random_points(2, 16)
    xfs = (quantization.identity_transform(2), quantization.scaling_transform([2.0, 0.5]),
           quantization.polar_transform())
    return max(quantization.pdhdp_invariance_check(a, xf, pts).max_abs for xf in xfs), 1e-10


# reference

def reference_cross():
    xg = _xgrid()
    g = square_grid(8.0, 129)
    worst = 0.0
    for ep in reference.eigensolve(HO, xg, 4):
        n = round(ep.energy - 0.5)
        eta = transform.lift(ep.state, HO_FAMILY, g, "separable")
        worst = max(worst, l2_relative(eta.values, ho_eigen_eta(n, HO, g).values))
    return worst, 1e-5


def reference_zero_point():
    xg = _xgrid()
    g = square_grid(7.0, 97)
    psi = ho_eigenstate(0, HO, xg)
    eta = transform.lift(psi, HO_FAMILY, g, "separable")
    a = dynamics.se_evolve(eta, HO, 2.0)
    b = transform.lift(reference.schrodinger_evolve(psi, HO, 2.0, 1e-3), HO_FAMILY, g, "separable")
    expected = b.values * np.exp(1j * 1.0)  # missing hbar omega t / 2 hbar
    return l2_relative(a.values, expected), 1e-4


SUITES = {
    "core": [core_gradients, core_hermite_gaussian, core_eta_norm, core_modulus_depends_on_H],
    "transform": [transform_round_trip, transform_inner_products, transform_kernel_hermitian,
                  transform_idempotent, transform_ladder_x, transform_ladder_p, transform_projected_momentum],
    "classical": [classical_rk4_order, classical_composition, classical_stationary_density],
    "dynamics": [dynamics_amplitude_transport, dynamics_phase_action, dynamics_norm, dynamics_gauge_moduli,
                 dynamics_kvn_not_smaller],
    "quantization": [quantization_monotone, quantization_triangle_action, quantization_triangle_winding,
                     quantization_beta_w, quantization_separability, quantization_pdhdp],
    "reference": [reference_cross, reference_zero_point],
}


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("PHASEFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _run(job):
    suite, fn = job
    value, tol = fn()
    return CheckResult(suite, fn.__name__, float(value), float(tol))


def run_suites(names, threads: int | None = None) -> list:
    jobs = [(s, fn) for s in names for fn in SUITES[s]]
    threads = threads or thread_cap()
    if threads == 1:
        return [_run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run, jobs))  # map keeps submission order
