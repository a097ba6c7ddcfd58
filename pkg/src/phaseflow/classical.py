"""Classical flow: RK4 trajectories, action integrals, grid Poisson brackets, Liouville transport."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.ndimage import map_coordinates

from .core.fd import phase_field_gradient
from .core.grids import EPS_BOUNDARY, DensityField, PhaseField, PhaseGrid, boundary_mass
from .core.models import HamiltonianModel
from .errors import EnergyDrift, GridMismatch, NoClosedOrbit, OutflowDetected, TooFewSamples, UsageError

MIN_SAMPLES = 100


@dataclass(frozen=True)
class FlowConfig:
    """Time stepping and transport settings.

    ``remap_every`` is the number of RK4 steps between interpolations in the
    semi-Lagrangian transports; 0 means one interpolation for the whole
    interval (exact for autonomous flows, since characteristics compose).
    """

    dt: float = 1e-3
    order: int = 4
    energy_tol: float = 1e-8
    remap_every: int = 0
    interp_order: int = 5

    def __post_init__(self):
        if not self.dt > 0:
            raise UsageError("dt must be positive")
        if not self.energy_tol > 0:
            raise UsageError("energy_tol must be positive")
        if self.order != 4:
            raise UsageError("only the fourth-order Runge-Kutta integrator is available")
        if self.remap_every < 0:
            raise UsageError("remap_every must be >= 0")
        if self.interp_order not in (1, 3, 5):
            raise UsageError("interp_order must be 1, 3 or 5")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray  # (n_samples, 2D)
    action: np.ndarray  # running int (p.dH/dp - H) dt
    energy: float

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]

    def __len__(self):
        return len(self.times)


def _lagrangian_rate(model):
    def rate(z):
        D = model.D
        return model.lagrangian(z[:D], z[D:])
    return rate


def _rk4_step(model, z, a, h, rate):
    def f(y):
        return model.flow(y)

    k1 = f(z)
    z2 = z + 0.5 * h * k1
    k2 = f(z2)
    z3 = z + 0.5 * h * k2
    k3 = f(z3)
    z4 = z + h * k3
    k4 = f(z4)
    z_new = z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    if rate is not None:
        # the accumulated quantity rides along as an extra row of the state
        a = a + (h / 6) * (rate(z) + 2 * rate(z2) + 2 * rate(z3) + rate(z4))
    return z_new, a


def n_steps_for(t: float, dt: float) -> int:
    return max(1, int(np.ceil(abs(t) / dt - 1e-9)))


def flow_map(model: HamiltonianModel, z, t: float, dt: float, rate=None, n_steps: int | None = None):
    """Advance points ``z`` (shape ``(2D, ...)``) by time ``t`` (may be negative).

    Returns ``(z_t, A)`` with ``A = int_0^t rate(z(s)) ds`` when ``rate`` is given.
    """
    z = np.array(z, dtype=float)
    n = n_steps if n_steps is not None else n_steps_for(t, dt)
    h = t / n
    a = np.zeros(z.shape[1:]) if rate is not None else None
    for _ in range(n):
        z, a = _rk4_step(model, z, a, h, rate)
    return z, a


def backtrack(model: HamiltonianModel, points, t: float, dt: float, with_action: bool = False):
    """Feet of the characteristics that arrive at ``points`` after time ``t``.

    With ``with_action`` also returns the Lagrangian integral along each
    forward segment from foot to arrival point.
    """
    rate = _lagrangian_rate(model) if with_action else None
    feet, a = flow_map(model, points, -t, dt, rate)
    if with_action:
        return feet, -a
    return feet


def integrate_trajectory(model: HamiltonianModel, z0, t_final: float, cfg: FlowConfig = FlowConfig()) -> Trajectory:
    if not t_final > 0:
        raise UsageError("t_final must be positive")
    z = np.asarray(z0, dtype=float).reshape(2 * model.D)
    D = model.D
    n = n_steps_for(t_final, cfg.dt)
    h = t_final / n
    pts = np.empty((n + 1, 2 * D))
    act = np.empty(n + 1)
    pts[0], act[0] = z, 0.0
    rate = _lagrangian_rate(model)
    a = np.zeros(())
    for k in range(n):
        z, a = _rk4_step(model, z, a, h, rate)
        pts[k + 1], act[k + 1] = z, a
    energy = float(model.H(pts[0, :D], pts[0, D:]))
    drift = np.max(np.abs(model.H(pts[:, :D].T, pts[:, D:].T) - energy))
    if drift > cfg.energy_tol * max(1.0, abs(energy)):
        raise EnergyDrift(f"energy drift {drift:.2e} exceeds tolerance {cfg.energy_tol:.1e}; reduce dt")
    return Trajectory(np.linspace(0.0, t_final, n + 1), pts, act, energy)


def accumulate_action(traj: Trajectory, model: HamiltonianModel) -> float:
    """``int (p.dH/dp - H) dt`` along a sampled trajectory (Simpson's rule)."""
    if len(traj) < MIN_SAMPLES:
        raise TooFewSamples(f"{len(traj)} samples; at least {MIN_SAMPLES} are needed for the action quadrature")
    D = model.D
    L = model.lagrangian(traj.points[:, :D].T, traj.points[:, D:].T)
    return float(simpson(L, x=traj.times))


def find_period(model: HamiltonianModel, z0, cfg: FlowConfig = FlowConfig(), t_max: float = 1e3,
                tol: float = 1e-8) -> float:
    """First return time to ``z0``.

    Watches the signed distance to the hyperplane through ``z0`` normal to the
    initial velocity; the first negative-to-positive crossing after leaving the
    start is refined by bisection on the RK4 step.
    """
    z0 = np.asarray(z0, dtype=float).reshape(2 * model.D)
    v0 = model.flow(z0[:, None])[:, 0]
    speed = np.linalg.norm(v0)
    if speed == 0.0:
        raise NoClosedOrbit("start point is an equilibrium")
    nrm = v0 / speed

    def g(z):
        return float(np.dot(z - z0, nrm))

    z, t = z0.copy(), 0.0
    h = cfg.dt
    left = False
    scale = np.linalg.norm(z0) + 1.0
    while t < t_max:
        z_new, _ = _rk4_step(model, z[:, None], None, h, None)
        z_new = z_new[:, 0]
        if not left and g(z_new) < 0:
            left = True
        if left and g(z) < 0 <= g(z_new):
            lo, hi = 0.0, h
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                zm, _ = _rk4_step(model, z[:, None], None, mid, None)
                if g(zm[:, 0]) < 0:
                    lo = mid
                else:
                    hi = mid
            T = t + 0.5 * (lo + hi)
            zT, _ = _rk4_step(model, z[:, None], None, 0.5 * (lo + hi), None)
            miss = np.linalg.norm(zT[:, 0] - z0)
            if miss > tol * scale:
                raise NoClosedOrbit(f"orbit crosses its start section {miss:.2e} away from the start point")
            return T
        z, t = z_new, t + h
    raise NoClosedOrbit(f"no return to the start point within t = {t_max:g}")


def orbit_integral(model: HamiltonianModel, z0, period: float, n_steps: int = 2000, rate=None):
    """Sample one period uniformly and integrate ``rate`` along it.

    Returns ``(times, points (n+1, 2D), integral)``.
    """
    z = np.asarray(z0, dtype=float).reshape(2 * model.D, 1)
    h = period / n_steps
    pts = np.empty((n_steps + 1, z.shape[0]))
    pts[0] = z[:, 0]
    a = np.zeros(1) if rate is not None else None
    for k in range(n_steps):
        z, a = _rk4_step(model, z, a, h, rate)
        pts[k + 1] = z[:, 0]
    return np.linspace(0.0, period, n_steps + 1), pts, (float(a[0]) if rate is not None else None)


def _field_grid(f):
    grid = getattr(f, "grid", None)
    if grid is None:
        raise UsageError("bracket operands must be fields or a Hamiltonian model")
    return grid


def poisson_bracket(B, C, accuracy: int = 4) -> PhaseField:
    """``{B, C} = sum_i dB/dq_i dC/dp_i - dB/dp_i dC/dq_i`` on the grid.

    ``B`` is a phase or density field. ``C`` is another field on the same grid
    or a :class:`HamiltonianModel`, whose analytic gradient is then used.
    """
    grid = _field_grid(B)
    D = grid.D
    Bq, Bp = phase_field_gradient(np.asarray(B.values), grid.spacing, D, accuracy)
    if isinstance(C, HamiltonianModel):
        if C.D != D:
            raise GridMismatch(f"model has D={C.D} but the field grid has D={D}")
        q, p = grid.mesh()
        Cq, Cp = C.dH_dq(q, p), C.dH_dp(q, p)
    else:
        if _field_grid(C) != grid:
            raise GridMismatch("bracket operands are sampled on different phase grids")
        Cq, Cp = phase_field_gradient(np.asarray(C.values), grid.spacing, D, accuracy)
    out = sum(Bq[i] * Cp[i] - Bp[i] * Cq[i] for i in range(D))
    return PhaseField(grid, out, getattr(B, "time_tag", 0.0))


def interpolate(values: np.ndarray, grid: PhaseGrid, feet: np.ndarray, order: int = 3) -> np.ndarray:
    """Spline interpolation of grid samples at points ``feet`` (zero outside)."""
    coords = grid.to_index_coords(feet)
    kw = dict(order=order, mode="grid-constant", cval=0.0, prefilter=order > 1)
    if np.iscomplexobj(values):
        return (map_coordinates(values.real, coords, **kw)
                + 1j * map_coordinates(values.imag, coords, **kw))
    return map_coordinates(values, coords, **kw)


def remap_schedule(t: float, cfg: FlowConfig):
    """Split ``t`` into ``(sub_interval, steps_per_sub)`` chunks of whole RK4 steps."""
    n = n_steps_for(t, cfg.dt)
    per = n if cfg.remap_every == 0 else cfg.remap_every
    chunks = []
    done = 0
    while done < n:
        k = min(per, n - done)
        chunks.append(k)
        done += k
    h = t / n
    return [(k * h, k) for k in chunks]


def check_outflow(values: np.ndarray, grid: PhaseGrid, eps_boundary: float, when: str):
    bm = boundary_mass(values, grid.weights())
    if bm > eps_boundary:
        raise OutflowDetected(f"boundary mass {bm:.2e} {when} exceeds {eps_boundary:.1e}; enlarge the grid")


def liouville_step(rho: DensityField, model: HamiltonianModel, dt: float, n_steps: int,
                   cfg: FlowConfig | None = None, eps_boundary: float = EPS_BOUNDARY) -> DensityField:
    """Evolve ``d rho/dt = -{rho, H}`` for ``n_steps`` steps of ``dt``.

    Semi-Lagrangian: every grid point is traced back along its characteristic
    and the density is read off there by spline interpolation (quintic by default).
    """
    cfg = cfg or FlowConfig(dt=dt)
    if model.D != rho.grid.D:
        raise GridMismatch("model and density have different dimensions")
    grid = rho.grid
    vals = np.asarray(rho.values, dtype=float)
    check_outflow(np.sqrt(vals), grid, eps_boundary, "before transport")
    pts = grid.points()
    for sub_t, k in remap_schedule(dt * n_steps, FlowConfig(dt=dt, remap_every=cfg.remap_every)):
        feet, _ = flow_map(model, pts, -sub_t, dt, n_steps=k)
        vals = np.maximum(interpolate(vals, grid, feet, cfg.interp_order), 0.0)
        check_outflow(np.sqrt(vals), grid, eps_boundary, "during transport")
    return DensityField(grid, vals, rho.time_tag + dt * n_steps)
