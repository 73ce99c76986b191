"""Model parameters and the classical kink profile of the XXZ chain.

The anisotropy is parametrised three ways, ``2*delta = q + 1/q`` and
``delta = cosh(eta)`` with ``q = exp(-eta)``.  Sites are integers in a window
``[a, b]``; the kink sits at the real position ``r``.

All per-site quantities use hyperbolic forms (tanh/sech and ratios of cosh)
evaluated through exponentials of differences, so they stay finite far from
the kink.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

#: Terms of the infinite lattice sums below this size are dropped.
TAIL_TOL = 1e-15


@dataclass(frozen=True)
class ModelParams:
    """Parameters of a spin-J XXZ kink chain on the window ``[a, b]``.

    ``two_j`` is the doubled spin so that half-integer J is exact.
    """

    two_j: int
    delta: float
    r: float
    window: tuple[int, int]

    @cached_property
    def eta(self) -> float:
        return math.acosh(self.delta)

    @cached_property
    def q(self) -> float:
        # 1/(delta + sqrt(delta^2 - 1)) avoids cancellation at large delta
        return 1.0 / (self.delta + math.sqrt(self.delta * self.delta - 1.0))

    @property
    def J(self) -> float:
        return self.two_j / 2

    @property
    def delta_inv(self) -> float:
        return 1.0 / self.delta

    @cached_property
    def kappa(self) -> float:
        """The boundary-field coefficient ``sqrt(1 - delta**-2)``."""
        return math.sqrt(1.0 - self.delta ** -2)

    @property
    def sites(self) -> np.ndarray:
        a, b = self.window
        return np.arange(a, b + 1)

    @property
    def n_sites(self) -> int:
        a, b = self.window
        return b - a + 1

    def replace(self, **changes) -> "ModelParams":
        fields = dict(two_j=self.two_j, delta=self.delta, r=self.r, window=self.window)
        fields.update(changes)
        return make_params(**fields)


def make_params(two_j: int, delta: float, r: float = 0.0,
                window: tuple[int, int] = (-4, 4)) -> ModelParams:
    """Validate and build a :class:`ModelParams`.

    Raises
    ------
    ValueError
        If ``delta <= 1``, ``two_j < 0`` or the window is empty.
    """
    if not delta > 1.0 or not math.isfinite(delta):
        raise ValueError("delta must exceed 1")
    if int(two_j) != two_j or two_j < 0:
        raise ValueError("two_j must be a non-negative integer")
    a, b = (int(w) for w in window)
    if a > b:
        raise ValueError(f"empty window [{a}, {b}]")
    return ModelParams(two_j=int(two_j), delta=float(delta), r=float(r), window=(a, b))


def reduce_r(r: float) -> tuple[float, int]:
    """Split ``r`` into ``(r mod 1, shift)`` with ``r = r_mod + shift``."""
    shift = math.floor(r)
    return r - shift, int(shift)


def _cosh_ratio(u, v):
    """``cosh(u) / cosh(v)`` without overflow."""
    u = np.abs(np.asarray(u, dtype=float))
    v = np.abs(np.asarray(v, dtype=float))
    return np.exp(u - v) * (1.0 + np.exp(-2 * u)) / (1.0 + np.exp(-2 * v))


def cos_theta(params: ModelParams, x) -> np.ndarray:
    return np.tanh(params.eta * (np.asarray(x, dtype=float) - params.r))


def sin_theta(params: ModelParams, x) -> np.ndarray:
    t = np.abs(params.eta * (np.asarray(x, dtype=float) - params.r))
    return 2.0 * np.exp(-t) / (1.0 + np.exp(-2 * t))


def eps_plus(params: ModelParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = params.eta * (x - params.r)
    return _cosh_ratio(u, u + params.eta) / params.delta


def eps_minus(params: ModelParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = params.eta * (x - params.r)
    return _cosh_ratio(u, u - params.eta) / params.delta


def eps_bulk(params: ModelParams, x) -> np.ndarray:
    """The two-sided well ``2 cosh^2(u) / (cosh(u - eta) cosh(u + eta))``."""
    x = np.asarray(x, dtype=float)
    u = params.eta * (x - params.r)
    return 2.0 * _cosh_ratio(u, u - params.eta) * _cosh_ratio(u, u + params.eta)


@dataclass(frozen=True)
class KinkProfile:
    sites: np.ndarray
    theta: np.ndarray
    cos_theta: np.ndarray
    sin_theta: np.ndarray
    eps_plus: np.ndarray
    eps_minus: np.ndarray
    eps: np.ndarray
    gamma_bond: np.ndarray  # length n_sites - 1, bond (x, x+1)

    def frames(self) -> np.ndarray:
        """Orthonormal frames ``(f1, f2, f3=u)`` per site, shape ``(n, 3, 3)``."""
        c, s = self.cos_theta, self.sin_theta
        z = np.zeros_like(c)
        f1 = np.stack([c, z, -s], axis=-1)
        f2 = np.stack([z, z + 1.0, z], axis=-1)
        f3 = np.stack([s, z, c], axis=-1)
        return np.stack([f1, f2, f3], axis=1)

    @property
    def u(self) -> np.ndarray:
        """Classical spin directions ``(sin theta, 0, cos theta)``, shape ``(n, 3)``."""
        return np.stack([self.sin_theta, np.zeros_like(self.sin_theta), self.cos_theta], axis=-1)


def kink_profile(params: ModelParams) -> KinkProfile:
    """Per-site kink angles and potential coefficients over the window.

    The stored ``eps`` is two-sided in the bulk and one-sided at the window
    ends (``eps_plus`` at ``a``, ``eps_minus`` at ``b``).
    """
    x = params.sites
    c = cos_theta(params, x)
    s = sin_theta(params, x)
    ep = eps_plus(params, x)
    em = eps_minus(params, x)
    eps = ep + em
    eps[0] = ep[0]
    eps[-1] = em[-1]
    if len(x) == 1:
        eps[0] = 0.0
    gamma = ep[:-1] + params.kappa * c[:-1]
    return KinkProfile(
        sites=x,
        theta=np.arctan2(s, c),
        cos_theta=c,
        sin_theta=s,
        eps_plus=ep,
        eps_minus=em,
        eps=eps,
        gamma_bond=gamma,
    )


def check_angle_identities(params: ModelParams, x: int) -> np.ndarray:
    """Residuals of the five trigonometric identities of the kink angles at ``x``.

    For the identities that come in a ``+``/``-`` pair the larger residual is
    returned.  Needs ``x - 1`` and ``x + 1`` inside the window.
    """
    a, b = params.window
    if not a <= x - 1 or not x + 1 <= b:
        raise ValueError(f"site {x} needs both neighbours inside [{a}, {b}]")
    c = lambda y: float(cos_theta(params, y))  # noqa: E731
    s = lambda y: float(sin_theta(params, y))  # noqa: E731
    d_inv, kap = params.delta_inv, params.kappa
    e = float(eps_bulk(params, x))
    res = np.empty(5)
    res[0] = abs(c(x - 1) + c(x + 1) - e * c(x))
    res[1] = abs(d_inv * (s(x - 1) + s(x + 1)) - e * s(x))
    r13, r14, r15 = [], [], []
    for sign in (+1, -1):
        y = x + sign
        r13.append(abs(s(x) * s(y) + d_inv * c(x) * c(y) - d_inv))
        r14.append(abs(d_inv * c(x) * s(y) - s(x) * c(y) + sign * kap * s(x)))
        ep = float(eps_plus(params, x) if sign > 0 else eps_minus(params, x))
        r15.append(abs(d_inv * s(y) * s(x) + c(y) * c(x) - sign * kap * c(x) - ep))
    res[2], res[3], res[4] = max(r13), max(r14), max(r15)
    return res


def _lattice_sum(term, start: int, tol: float = TAIL_TOL) -> float:
    """Sum ``term(x)`` over ``x = start, start+1, ...`` until terms drop below tol."""
    total = 0.0
    x = start
    while True:
        t = term(x)
        total += t
        if abs(t) < tol and x > start + 2:
            return total
        x += 1


def zero_mode_l1(params: ModelParams, tol: float = TAIL_TOL) -> float:
    """``sum_x sech(eta (x - r))`` over all of Z."""
    right = _lattice_sum(lambda x: float(sin_theta(params, x)), math.ceil(params.r), tol)
    left = _lattice_sum(lambda k: float(sin_theta(params, math.ceil(params.r) - 1 - k)), 0, tol)
    return right + left


def classical_magnetization(params: ModelParams, tol: float = TAIL_TOL) -> float:
    """``mu = sum_x [cos theta_x - sgn(x - 1/2)]`` over all of Z.

    The sum converges because ``cos theta_x -> +-1`` exponentially.
    """
    lo = min(0, math.floor(params.r)) - 1
    hi = max(1, math.ceil(params.r)) + 1
    core = sum(float(cos_theta(params, x)) - (1.0 if x >= 1 else -1.0) for x in range(lo, hi + 1))
    right = _lattice_sum(lambda k: float(cos_theta(params, hi + 1 + k)) - 1.0, 0, tol)
    left = _lattice_sum(lambda k: float(cos_theta(params, lo - 1 - k)) + 1.0, 0, tol)
    return core + right + left


def window_magnetization(params: ModelParams) -> float:
    """Classical magnetisation ``sum_{x in window} cos theta_x`` (in units of J)."""
    return float(np.sum(cos_theta(params, params.sites)))
