"""Hamiltonian models with analytic gradients and Hessians.

All evaluators take ``q`` and ``p`` arrays of shape ``(D, ...)`` and broadcast
over the trailing axes. Hessian blocks are returned as ``(D, D, ...)``.
Complex inputs are accepted (used for complex-step derivatives).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError


def _z(q):
    return np.zeros_like(np.asarray(q), dtype=np.result_type(q, float))


class HamiltonianModel:
    D: int = 1
    kind: str = "base"
    autonomous = True

    def H(self, q, p):
        raise NotImplementedError

    def dH_dq(self, q, p):
        raise NotImplementedError

    def dH_dp(self, q, p):
        raise NotImplementedError

    def d2H_dq2(self, q, p):
        raise NotImplementedError

    def d2H_dqdp(self, q, p):
        """Mixed block ``[i, j] = d^2 H / dq_i dp_j``."""
        raise NotImplementedError

    def d2H_dp2(self, q, p):
        raise NotImplementedError

    def lagrangian(self, q, p):
        """``p . dH/dp - H``, the integrand of the phase along a trajectory."""
        return np.sum(p * self.dH_dp(q, p), axis=0) - self.H(q, p)

    def p_dot_dHdp(self, q, p):
        return np.sum(p * self.dH_dp(q, p), axis=0)

    def flow(self, z):
        """Hamilton's equations ``(dH/dp, -dH/dq)`` for ``z = (q, p)``."""
        q, p = z[: self.D], z[self.D:]
        return np.concatenate([self.dH_dp(q, p), -self.dH_dq(q, p)])

    def hessian(self, q, p):
        """Full ``(2D, 2D, ...)`` Hessian in ``(q, p)`` ordering."""
        a, b, c = self.d2H_dq2(q, p), self.d2H_dqdp(q, p), self.d2H_dp2(q, p)
        top = np.concatenate([a, b], axis=1)
        bot = np.concatenate([np.swapaxes(b, 0, 1), c], axis=1)
        return np.concatenate([top, bot], axis=0)

    def minimum(self):
        """``(z_min, H_min)`` for confining models, else ``None``."""
        return None

    def potential(self, x):
        """``V(x)`` for models of the form ``p^2/2m + V(x)``; ``None`` otherwise."""
        return None

    @property
    def confining(self) -> bool:
        return self.minimum() is not None


@dataclass(frozen=True)
class Harmonic(HamiltonianModel):
    m: float = 1.0
    omega: float = 1.0
    kind = "harmonic"
    D = 1

    def H(self, q, p):
        return np.sum(p**2, axis=0) / (2 * self.m) + 0.5 * self.m * self.omega**2 * np.sum(q**2, axis=0)

    def dH_dq(self, q, p):
        return self.m * self.omega**2 * q + _z(p)

    def dH_dp(self, q, p):
        return p / self.m + _z(q)

    def d2H_dq2(self, q, p):
        return (self.m * self.omega**2 + _z(q[0] + p[0]))[None, None]

    def d2H_dqdp(self, q, p):
        return _z(q[0] + p[0])[None, None]

    def d2H_dp2(self, q, p):
        return (1.0 / self.m + _z(q[0] + p[0]))[None, None]

    def minimum(self):
        return np.zeros(2), 0.0

    def potential(self, x):
        return 0.5 * self.m * self.omega**2 * x**2

    def zeta(self, hbar: float = 1.0) -> float:
        """Oscillator length ``sqrt(hbar / m omega)``."""
        return np.sqrt(hbar / (self.m * self.omega))


@dataclass(frozen=True)
class Free(HamiltonianModel):
    m: float = 1.0
    kind = "free"
    D = 1

    def H(self, q, p):
        return np.sum(p**2, axis=0) / (2 * self.m) + _z(q[0])

    def dH_dq(self, q, p):
        return _z(q + p)

    def dH_dp(self, q, p):
        return p / self.m + _z(q)

    def d2H_dq2(self, q, p):
        return _z(q[0] + p[0])[None, None]

    def d2H_dqdp(self, q, p):
        return _z(q[0] + p[0])[None, None]

    def d2H_dp2(self, q, p):
        return (1.0 / self.m + _z(q[0] + p[0]))[None, None]

    def potential(self, x):
        return np.zeros_like(x)


@dataclass(frozen=True)
class Quartic(HamiltonianModel):
    """``H = p^2 / 2m + lam q^4``."""

    m: float = 1.0
    lam: float = 1.0
    kind = "quartic"
    D = 1

    def H(self, q, p):
        return np.sum(p**2, axis=0) / (2 * self.m) + self.lam * np.sum(q**4, axis=0)

    def dH_dq(self, q, p):
        return 4 * self.lam * q**3 + _z(p)

    def dH_dp(self, q, p):
        return p / self.m + _z(q)

    def d2H_dq2(self, q, p):
        return (12 * self.lam * q[0] ** 2 + _z(p[0]))[None, None]

    def d2H_dqdp(self, q, p):
        return _z(q[0] + p[0])[None, None]

    def d2H_dp2(self, q, p):
        return (1.0 / self.m + _z(q[0] + p[0]))[None, None]

    def minimum(self):
        return np.zeros(2), 0.0

    def potential(self, x):
        return self.lam * x**4


@dataclass(frozen=True)
class Anisotropic2D(HamiltonianModel):
    m: float = 1.0
    omega1: float = 1.0
    omega2: float = np.sqrt(2.0)
    kind = "anisotropic2d"
    D = 2

    @property
    def omegas(self):
        return np.array([self.omega1, self.omega2])

    def _w2(self, q):
        return (self.omegas**2).reshape((2,) + (1,) * (np.ndim(q) - 1))

    def H(self, q, p):
        return np.sum(p**2, axis=0) / (2 * self.m) + 0.5 * self.m * np.sum(self._w2(q) * q**2, axis=0)

    def dH_dq(self, q, p):
        return self.m * self._w2(q) * q + _z(p)

    def dH_dp(self, q, p):
        return p / self.m + _z(q)

    def d2H_dq2(self, q, p):
        base = _z(q[0] + p[0])
        out = np.zeros((2, 2) + base.shape, dtype=base.dtype)
        out[0, 0] = self.m * self.omega1**2 + base
        out[1, 1] = self.m * self.omega2**2 + base
        return out

    def d2H_dqdp(self, q, p):
        base = _z(q[0] + p[0])
        return np.zeros((2, 2) + base.shape, dtype=base.dtype)

    def d2H_dp2(self, q, p):
        base = _z(q[0] + p[0])
        out = np.zeros((2, 2) + base.shape, dtype=base.dtype)
        out[0, 0] = out[1, 1] = 1.0 / self.m + base
        return out

    def minimum(self):
        return np.zeros(4), 0.0


@dataclass(frozen=True)
class Linear(HamiltonianModel):
    """``H = v . p + f . q``; every second derivative vanishes."""

    v: tuple = (1.0,)
    f: tuple = (0.0,)
    kind = "linear"

    @property
    def D(self):
        return len(self.v)

    def _col(self, a, like):
        return np.asarray(a, dtype=float).reshape((-1,) + (1,) * (np.ndim(like) - 1))

    def H(self, q, p):
        return np.sum(self._col(self.v, p) * p + self._col(self.f, q) * q, axis=0)

    def dH_dq(self, q, p):
        return self._col(self.f, q) + _z(q + p)

    def dH_dp(self, q, p):
        return self._col(self.v, p) + _z(q + p)

    def _zero_block(self, q, p):
        base = _z(q[0] + p[0])
        return np.zeros((self.D, self.D) + base.shape, dtype=base.dtype)

    d2H_dq2 = d2H_dqdp = d2H_dp2 = _zero_block


MODEL_KINDS = {
    "harmonic": Harmonic,
    "free": Free,
    "quartic": Quartic,
    "anisotropic2d": Anisotropic2D,
    "linear": Linear,
}


def make_model(kind: str, **params) -> HamiltonianModel:
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise UsageError(f"unknown model kind {kind!r}; choose from {sorted(MODEL_KINDS)}") from None
    model = cls(**params)
    for name, value in params.items():
        if name in ("m",) and value <= 0:
            raise UsageError("mass must be positive")
        if name.startswith("omega") and value <= 0:
            raise UsageError(f"{name} must be positive")
    return model
