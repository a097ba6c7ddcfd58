"""Action integrals, Bohr-Sommerfeld levels, orbit phase winding, and canonical-invariance checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .classical import _rk4_step, interpolate
from .core.grids import PhaseField
from .core.models import Anisotropic2D, HamiltonianModel
from .errors import (
    AmplitudeZeroOnOrbit, EnergyBelowMinimum, NoClosedOrbit, OrbitOutsideGrid, RootNotBracketed,
    SingularJacobian, UsageError,
)

ORBIT_STEPS = 2000
COARSE_STEPS_PER_RADIAN = 100
CLOSURE_TOL = 1e-8


class FrozenDOF(HamiltonianModel):
    """One ``(q_i, p_i)`` pair of a model with every other pair held at ``base``."""

    D = 1

    def __init__(self, parent: HamiltonianModel, dof: int, base=None):
        if not 0 <= dof < parent.D:
            raise UsageError(f"dof must be in [0, {parent.D})")
        self.parent = parent
        self.dof = dof
        if base is None:
            mn = parent.minimum()
            if mn is None:
                raise UsageError("model has no minimum; pass the frozen point explicitly")
            base = mn[0]
        self.base = np.asarray(base, dtype=float)
        self.kind = f"{parent.kind}[{dof}]"
        self.m = getattr(parent, "m", 1.0)

    def _full(self, q, p):
        P = self.parent.D
        shape = np.broadcast(q[0], p[0]).shape
        dtype = np.result_type(q, p, float)
        Q = np.empty((P,) + shape, dtype=dtype)
        Pm = np.empty((P,) + shape, dtype=dtype)
        for k in range(P):
            Q[k] = self.base[k]
            Pm[k] = self.base[P + k]
        Q[self.dof] = q[0]
        Pm[self.dof] = p[0]
        return Q, Pm

    def H(self, q, p):
        return self.parent.H(*self._full(q, p))

    def dH_dq(self, q, p):
        return self.parent.dH_dq(*self._full(q, p))[self.dof:self.dof + 1]

    def dH_dp(self, q, p):
        return self.parent.dH_dp(*self._full(q, p))[self.dof:self.dof + 1]

    def d2H_dq2(self, q, p):
        i = self.dof
        return self.parent.d2H_dq2(*self._full(q, p))[i:i + 1, i:i + 1]

    def d2H_dqdp(self, q, p):
        i = self.dof
        return self.parent.d2H_dqdp(*self._full(q, p))[i:i + 1, i:i + 1]

    def d2H_dp2(self, q, p):
        i = self.dof
        return self.parent.d2H_dp2(*self._full(q, p))[i:i + 1, i:i + 1]

    def minimum(self):
        P = self.parent.D
        z = np.array([self.base[self.dof], self.base[P + self.dof]])
        return z, float(self.parent.H(self.base[:P, None], self.base[P:, None])[0])

    def potential(self, x):
        x = np.asarray(x, dtype=float)
        return self.H(x[None], np.zeros((1,) + x.shape)) - self.minimum()[1]


def reduced_models(model: HamiltonianModel):
    if model.D == 1:
        return [model]
    return [FrozenDOF(model, i) for i in range(model.D)]


def _minimum(model):
    mn = model.minimum()
    if mn is None:
        raise NoClosedOrbit(f"model {model.kind!r} has no potential minimum, so no orbit closes")
    return mn


def turning_points(model: HamiltonianModel, energies) -> np.ndarray:
    """Start points ``(q_t, p_min)`` with ``q_t > q_min`` on each energy shell (1D model)."""
    (qm, pm), Hmin = _minimum(model)
    out = np.empty((2, len(energies)))
    for k, E in enumerate(energies):
        def f(q):
            return float(model.H(np.array([q]), np.array([pm]))) - E
        L = 1.0
        while f(qm + L) < 0:
            L *= 2
            if L > 1e8:
                raise NoClosedOrbit(f"energy {E:g} has no turning point")
        out[:, k] = brentq(f, qm, qm + L, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200), pm
    return out


def _section(model, z0):
    v0 = model.flow(z0)
    speed = np.linalg.norm(v0, axis=0)
    if np.any(speed == 0):
        raise NoClosedOrbit("orbit start is an equilibrium")
    return v0 / speed, speed


def periods(model: HamiltonianModel, z0, n_steps: int = ORBIT_STEPS, max_periods: float = 1e4):
    """Return times of 1D orbits starting at ``z0`` (shape ``(2, M)``).

    A coarse RK4 scan finds the first negative-to-positive crossing of the
    plane through the start normal to the initial velocity; Newton passes over
    exactly ``n_steps`` RK4 steps then pin the discrete return time.
    """
    z0 = np.asarray(z0, dtype=float)
    nrm, speed = _section(model, z0)
    T = _coarse_periods(model, z0, max_periods)
    T, _ = _refine(model, z0, T, nrm, speed, _radius(model, z0), n_steps)
    return T


def _radius(model, z0):
    (qm, pm), _ = _minimum(model)
    return np.hypot(z0[0] - qm, z0[1] - pm)


def _coarse_periods(model, z0, max_periods: float = 1e4):
    nrm, speed = _section(model, z0)
    radius = _radius(model, z0)
    hc = radius / speed / COARSE_STEPS_PER_RADIAN
    M = z0.shape[1]
    T = np.full(M, np.nan)
    left = np.zeros(M, dtype=bool)
    z, t = z0.copy(), np.zeros(M)
    g_old = np.zeros(M)
    max_iter = int(max_periods * 2 * np.pi * COARSE_STEPS_PER_RADIAN)
    for _ in range(max_iter):
        zn, _ = _rk4_step(model, z, None, hc, None)
        g_new = np.sum((zn - z0) * nrm, axis=0)
        left |= g_new < 0
        hit = left & (g_old < 0) & (g_new >= 0) & np.isnan(T)
        if hit.any():
            s = -g_old[hit] / (g_new[hit] - g_old[hit])
            T[hit] = t[hit] + s * hc[hit]
        if not np.isnan(T).any():
            break
        z, t, g_old = zn, t + hc, g_new
    else:
        raise NoClosedOrbit("orbit did not return to its start section")
    return T


def _refine(model, z0, T, nrm, speed, radius, n_steps, rate=None, newton: bool = True):
    """Run ``n_steps`` RK4 steps over the estimated period and integrate ``rate``.

    With ``newton`` the return time is iterated to convergence first. Without
    it a single pass is made; since orbits start at a turning point, where
    ``p.dH/dp = 0``, an error ``dT`` in the period changes the integral only at
    third order in ``dT``. The closure test always measures the miss transverse
    to the flow, after removing the along-track offset.
    """
    for _ in range(8 if newton else 1):
        zT, a = _orbit_run(model, z0, T, n_steps, rate)
        along = np.sum((zT - z0) * nrm, axis=0)
        corr = along / speed
        if np.all(np.abs(corr) <= 1e-13 * T):
            break
        T = T - corr
    miss = np.linalg.norm(zT - z0 - along * nrm, axis=0)
    if np.any(miss > CLOSURE_TOL * (1.0 + radius)):
        raise NoClosedOrbit(f"orbit misses its start by {miss.max():.2e}")
    return T, a


def _orbit_run(model, z0, T, n_steps, rate=None, record=False):
    h = T / n_steps
    z = z0.copy()
    a = np.zeros(z0.shape[1]) if rate is not None else None
    pts = [z] if record else None
    for _ in range(n_steps):
        z, a = _rk4_step(model, z, a, h, rate)
        if record:
            pts.append(z)
    if record:
        return z, a, np.stack(pts)
    return z, a


def _pdhdp(model):
    def rate(z):
        return model.p_dot_dHdp(z[:1], z[1:])
    return rate


def _actions_1d(model: HamiltonianModel, energies, n_steps: int = ORBIT_STEPS) -> np.ndarray:
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    _, Hmin = _minimum(model)
    scale = max(1.0, abs(Hmin))
    if np.any(energies < Hmin - 1e-14 * scale):
        raise EnergyBelowMinimum(f"energy {energies.min():g} is below the minimum {Hmin:g}")
    J = np.zeros_like(energies)
    live = energies > Hmin + 1e-14 * scale
    if live.any():
        z0 = turning_points(model, energies[live])
        T = _coarse_periods(model, z0)
        nrm, speed = _section(model, z0)
        radius = _radius(model, z0)
        _, J[live] = _refine(model, z0, T, nrm, speed, radius, n_steps, _pdhdp(model), newton=False)
    return J


def action_integral(model: HamiltonianModel, E: float, dof: int = 0, n_steps: int = ORBIT_STEPS) -> float:
    """``J_i = int_0^T p_i dH/dp_i dt`` over one closed orbit of the ``(q_i, p_i)`` flow.

    For ``D = 2`` the energy refers to the selected pair alone, with the other
    pair frozen at the minimum.
    """
    if not 0 <= dof < model.D:
        raise UsageError(f"dof must be in [0, {model.D})")
    red = reduced_models(model)[dof]
    return float(_actions_1d(red, [E], n_steps)[0])


def _levels_1d(model, targets, tol, n_steps, sections: int = 8):
    """Solve ``J(E) = target`` for every target by vectorized multisection.

    Each pass evaluates ``J`` at ``sections - 1`` interior points of every
    bracket and keeps the sub-interval where ``J - target`` changes sign, so a
    pass does the work of ``log2(sections)`` bisection steps.
    """
    (_, _), Hmin = _minimum(model)
    targets = np.asarray(targets, dtype=float)
    hi = np.full(targets.shape, Hmin + 1.0)
    for _ in range(200):
        short = _actions_1d(model, hi, n_steps) < targets
        if not short.any():
            break
        hi[short] = Hmin + 2 * (hi[short] - Hmin)
    else:
        raise RootNotBracketed("could not bracket the action targets")
    out = np.full(targets.shape, Hmin)
    idx = np.flatnonzero(targets > 0)
    if idx.size == 0:
        return out
    tg = targets[idx]
    lo, hi = np.full(idx.size, Hmin), hi[idx]
    frac = np.arange(1, sections) / sections
    while np.max(hi - lo) > tol * max(1.0, np.max(np.abs(hi))):
        trial = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        J = _actions_1d(model, trial.ravel(), n_steps).reshape(trial.shape)
        below = J < tg[:, None]
        k = below.sum(axis=1)  # J is increasing, so this counts sub-intervals passed
        width = hi - lo
        new_lo = np.where(k > 0, lo + width * k / sections, lo)
        hi = np.where(k < sections - 1, lo + width * (k + 1) / sections, hi)
        lo = new_lo
    out[idx] = 0.5 * (lo + hi)
    return out


@dataclass(frozen=True)
class SpectrumResult:
    quantum_numbers: list
    energies: np.ndarray
    exact: np.ndarray | None = None
    actions: np.ndarray | None = None

    @property
    def relative_errors(self):
        if self.exact is None:
            return None
        return np.abs(self.energies - self.exact) / np.abs(self.exact)

    def with_exact(self, exact) -> "SpectrumResult":
        return SpectrumResult(self.quantum_numbers, self.energies, np.asarray(exact, dtype=float), self.actions)


def bohr_sommerfeld_levels(model: HamiltonianModel, n_max: int, hbar: float = 1.0, tol: float = 1e-13,
                           n_steps: int = ORBIT_STEPS, compare_exact: bool = False) -> SpectrumResult:
    """Levels from ``J_i(E_i) = n_i h`` with ``h = 2 pi hbar``.

    One-dimensional models give ``n = 0..n_max``. Separable two-dimensional
    models give every ``(n1, n2)`` with ``n1 + n2 <= n_max``, sorted by energy,
    with ``E = H_min + sum_i (E_i - H_min)``.
    """
    if n_max < 0:
        raise UsageError("n_max must be >= 0")
    h = 2 * np.pi * hbar
    ns = np.arange(n_max + 1)
    reds = reduced_models(model)
    per_dof = [_levels_1d(r, ns * h, tol, n_steps) for r in reds]
    _, Hmin = _minimum(model)
    if model.D == 1:
        qn = [(int(n),) for n in ns]
        E = per_dof[0]
    else:
        qn, E = [], []
        for n1 in ns:
            for n2 in ns:
                if n1 + n2 <= n_max:
                    qn.append((int(n1), int(n2)))
                    E.append(Hmin + (per_dof[0][n1] - Hmin) + (per_dof[1][n2] - Hmin))
        order = np.argsort(E, kind="stable")
        qn = [qn[k] for k in order]
        E = np.asarray(E)[order]
    res = SpectrumResult(qn, np.asarray(E), None, np.array([sum(q) for q in qn]) * h)
    if compare_exact:
        res = res.with_exact(exact_levels(model, qn, hbar))
    return res


def exact_levels(model: HamiltonianModel, quantum_numbers, hbar: float = 1.0) -> np.ndarray:
    """Reference energies for the requested quantum numbers (products of 1D solves)."""
    from .reference import eigensolve_auto

    reds = reduced_models(model)
    kmax = [max(q[i] for q in quantum_numbers) + 1 for i in range(len(reds))]
    per = [np.array([ep.energy for ep in eigensolve_auto(r, k, hbar)]) for r, k in zip(reds, kmax)]
    _, Hmin = _minimum(model)
    return np.array([Hmin + sum(per[i][q[i]] - Hmin for i in range(len(reds))) for q in quantum_numbers])


def orbit_samples(model: HamiltonianModel, E: float, n_steps: int = ORBIT_STEPS):
    """Points ``(n_steps + 1, 2)`` along the closed ``H = E`` orbit of a 1D model, and its period."""
    z0 = turning_points(model, [E])
    T = periods(model, z0, n_steps)
    _, _, pts = _orbit_run(model, z0, T, n_steps, record=True)
    return pts[:, :, 0], float(T[0])


def orbit_phase(eta: PhaseField, model: HamiltonianModel, E: float, n_steps: int = ORBIT_STEPS,
                floor: float = 1e-8, interp_order: int = 5):
    """Unwrapped ``arg eta`` along the ``H = E`` orbit, in flow order.

    Returns ``(points, phase)`` with ``phase[0] = arg eta(start)``.
    """
    if eta.grid.D != 1 or model.D != 1:
        raise UsageError("orbit phases are implemented for one-dimensional systems")
    pts, _ = orbit_samples(model, E, n_steps)
    if not np.all(eta.grid.contains(pts.T, margin=3)):
        raise OrbitOutsideGrid(f"the H = {E:g} orbit leaves the phase grid")
    vals = interpolate(np.asarray(eta.values), eta.grid, pts.T, interp_order)
    amax = np.abs(eta.values).max()
    if amax == 0 or np.min(np.abs(vals)) < floor * amax:
        raise AmplitudeZeroOnOrbit(f"|eta| drops below {floor:g} of its maximum on the orbit")
    steps = np.angle(vals[1:] * np.conj(vals[:-1]))
    phase = np.angle(vals[0]) + np.concatenate([[0.0], np.cumsum(steps)])
    return pts, phase


def phase_winding(eta: PhaseField, model: HamiltonianModel, E: float, n_steps: int = ORBIT_STEPS,
                  floor: float = 1e-8):
    """Net change of ``arg eta`` around the ``H = E`` orbit in units of ``2 pi``.

    Returns ``(rounded, raw)``. An orbit collapsed onto the minimum winds zero times.
    """
    (_, _), Hmin = _minimum(model)
    if E <= Hmin + 1e-14 * max(1.0, abs(Hmin)):
        if E < Hmin - 1e-14 * max(1.0, abs(Hmin)):
            raise EnergyBelowMinimum(f"energy {E:g} is below the minimum {Hmin:g}")
        return 0, 0.0
    _, phase = orbit_phase(eta, model, E, n_steps, floor)
    raw = (phase[-1] - phase[0]) / (2 * np.pi)
    return int(np.rint(raw)), float(raw)


# canonical-invariance checks


@dataclass(frozen=True)
class PhaseFunction:
    """A phase-space function with analytic gradients; arrays are ``(D, ...)``."""

    name: str
    value: Callable
    grad_q: Callable
    grad_p: Callable


def hamiltonian_function(model: HamiltonianModel) -> PhaseFunction:
    return PhaseFunction("H", model.H, model.dH_dq, model.dH_dp)


def dof_energy(model: Anisotropic2D, i: int) -> PhaseFunction:
    """``p_i^2 / 2m + m omega_i^2 q_i^2 / 2``."""
    m, w = model.m, model.omegas[i]

    def value(q, p):
        return p[i] ** 2 / (2 * m) + 0.5 * m * w**2 * q[i] ** 2

    def gq(q, p):
        out = np.zeros(np.broadcast(q, p).shape)
        out[i] = m * w**2 * q[i]
        return out

    def gp(q, p):
        out = np.zeros(np.broadcast(q, p).shape)
        out[i] = p[i] / m
        return out

    return PhaseFunction(f"c{i}", value, gq, gp)


def coordinate(i: int, momentum: bool = False) -> PhaseFunction:
    """``q_i`` (or ``p_i``) as a phase function."""
    def value(q, p):
        return (p if momentum else q)[i]

    def unit(q, p, on):
        out = np.zeros(np.broadcast(q, p).shape)
        if on:
            out[i] = 1.0
        return out

    return PhaseFunction(("p" if momentum else "q") + str(i), value,
                         lambda q, p: unit(q, p, not momentum), lambda q, p: unit(q, p, momentum))


@dataclass(frozen=True)
class CheckReport:
    values: np.ndarray
    max_abs: float
    points: np.ndarray = field(repr=False, default=None)


def random_points(D: int, n: int, seed: int = 42, scale: float = 2.0):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-scale, scale, size=(2 * D, n))
    return z[:D], z[D:]


def separability_check(model: HamiltonianModel, constants, points=None, n_points: int = 64,
                       seed: int = 42) -> CheckReport:
    """Per-pair brackets ``{c_i, H}_j = dc_i/dq_j dH/dp_j - dc_i/dp_j dH/dq_j`` (no sum over j).

    ``values[i, j, k]`` is the bracket of constant ``i`` in pair ``j`` at point ``k``.
    """
    q, p = points if points is not None else random_points(model.D, n_points, seed)
    q, p = np.asarray(q, dtype=float), np.asarray(p, dtype=float)
    Hq, Hp = model.dH_dq(q, p), model.dH_dp(q, p)
    vals = np.stack([c.grad_q(q, p) * Hp - c.grad_p(q, p) * Hq for c in constants])
    return CheckReport(vals, float(np.max(np.abs(vals))), np.concatenate([q, p]))


@dataclass(frozen=True)
class CoordinateTransform:
    """Point transformation ``Q = f(q)`` extended to momenta by ``p = J(q)^T P``.

    ``jacobian(q)[a, b] = dQ_a / dq_b``; all callables take ``(D, ...)`` arrays.
    """

    name: str
    forward: Callable
    inverse: Callable
    jacobian: Callable

    def momenta(self, q, p):
        """``P = J(q)^{-T} p``."""
        return np.einsum("ab...,b...->a...", _inv_T(self.jacobian(q)), p)


def _inv_T(J):
    """``J^{-T}`` for a ``(D, D, ...)`` stack, returned in the same layout."""
    Jm = np.moveaxis(J, (0, 1), (-2, -1))
    return np.moveaxis(np.swapaxes(np.linalg.inv(Jm), -1, -2), (-2, -1), (0, 1))


def identity_transform(D: int = 1) -> CoordinateTransform:
    def jac(q):
        q = np.asarray(q)
        return np.broadcast_to(np.eye(D).reshape((D, D) + (1,) * (q.ndim - 1)), (D, D) + q.shape[1:])
    return CoordinateTransform("identity", lambda q: q, lambda Q: Q, jac)


def scaling_transform(factors) -> CoordinateTransform:
    f = np.asarray(factors, dtype=float)
    D = f.size

    def col(a, like):
        return a.reshape((-1,) + (1,) * (np.ndim(like) - 1))

    def jac(q):
        q = np.asarray(q)
        return np.broadcast_to(np.diag(f).reshape((D, D) + (1,) * (q.ndim - 1)), (D, D) + q.shape[1:])
    return CoordinateTransform("scaling", lambda q: col(f, q) * q, lambda Q: Q / col(f, Q), jac)


def polar_transform() -> CoordinateTransform:
    """``(q1, q2) -> (r, theta)``."""
    def fwd(q):
        return np.stack([np.hypot(q[0], q[1]), np.arctan2(q[1], q[0])])

    def inv(Q):
        return np.stack([Q[0] * np.cos(Q[1]), Q[0] * np.sin(Q[1])])

    def jac(q):
        r2 = q[0] ** 2 + q[1] ** 2
        r = np.sqrt(r2)
        return np.stack([np.stack([q[0] / r, q[1] / r]), np.stack([-q[1] / r2, q[0] / r2])])
    return CoordinateTransform("polar", fwd, inv, jac)


def pdhdp_invariance_check(model: HamiltonianModel, xf: CoordinateTransform, points, step: float = 1e-20,
                           jac_floor: float = 1e-12) -> CheckReport:
    """Compare ``p.dH/dp`` with ``P.dK/dP`` for ``K(Q, P) = H(f^-1(Q), J^T P)``.

    ``dK/dP`` is taken by complex-step differentiation, so the comparison is
    free of truncation error. ``points`` is ``(q, p)`` with ``(D, n)`` arrays.
    """
    q, p = (np.asarray(a, dtype=float) for a in points)
    if q.ndim == 1:
        q, p = q[:, None], p[:, None]
    D = q.shape[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        J = xf.jacobian(q)
        det = np.linalg.det(np.moveaxis(J, (0, 1), (-2, -1)))
    if not np.all(np.abs(det) >= jac_floor):  # NaN from 0/0 counts as singular
        raise SingularJacobian(f"transform {xf.name!r} has |det J| below {jac_floor:g} at a test point")
    P = xf.momenta(q, p)
    Q = xf.forward(q)
    qb = xf.inverse(Q)
    Jb = xf.jacobian(qb)
    lhs = model.p_dot_dHdp(q, p)
    rhs = np.zeros_like(lhs)
    for a in range(D):
        Pc = P.astype(complex)
        Pc[a] += 1j * step
        pc = np.einsum("ab...,a...->b...", Jb, Pc)
        rhs += P[a] * model.H(qb, pc).imag / step
    disc = np.abs(rhs - lhs) / np.maximum(np.abs(lhs), 1e-300)
    disc = np.where(lhs == 0, np.abs(rhs - lhs), disc)
    return CheckReport(disc, float(disc.max()), np.concatenate([q, p]))
