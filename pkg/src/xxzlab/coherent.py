"""Coherent spin states, the grand-canonical kink vectors and fluctuation
operators of the product ground states.

The expectation ``omega`` used here is the normalised grand-canonical state
at ``z = q^r``.  On a window this is exactly the product of coherent states
along the classical kink, so single-site expectations are exact at any
window size.
"""
from __future__ import annotations

import cmath
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .kinkmath import ModelParams, cos_theta, kink_profile, sin_theta
from .spinchain import SectorBasis, SpinSite, _check_size, kron_chain, log_binom


# -- single-site coherent states ------------------------------------------

@dataclass(frozen=True)
class CoherentState:
    two_j: int
    theta: float
    phi: float = 0.0

    @property
    def coefficients(self) -> np.ndarray:
        """Components on ``m = J .. -J`` (``k = J - m`` lowerings)."""
        k = np.arange(self.two_j + 1)
        half = self.theta / 2
        c, s = math.cos(half), math.sin(half)
        mag = np.exp(0.5 * log_binom(self.two_j, k)) * _pow(c, self.two_j - k) * _pow(s, k)
        return mag * np.exp(1j * k * self.phi)

    def direction(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


def _pow(base: float, k: np.ndarray) -> np.ndarray:
    # 0**0 = 1, keeps exact zeros at the poles
    return np.where(k == 0, 1.0, np.power(base, k.astype(float)))


def coherent_by_rotation(two_j: int, theta: float, phi: float = 0.0) -> np.ndarray:
    """``exp(theta/2 (S- e^{i phi} - S+ e^{-i phi})) |J>`` by dense exponential."""
    site = SpinSite(two_j)
    gen = 0.5 * theta * (site.Sm * cmath.exp(1j * phi) - site.Sp * cmath.exp(-1j * phi))
    top = np.zeros(two_j + 1, dtype=complex)
    top[0] = 1.0
    return sla.expm(gen) @ top


# -- grand-canonical vectors ----------------------------------------------

def grand_canonical_vector(params: ModelParams, z: complex, normalize: bool = True,
                           dim_cap: int = 10**6) -> np.ndarray:
    """``sum_M z^M Phi^(M)`` on the full product basis of the window.

    Powers ``z^M`` with half-integer ``M`` use the principal branch.
    """
    if abs(z) == 0:
        raise ValueError("z must be nonzero")
    _check_size(params, dim_cap)
    basis = SectorBasis(params.two_j, params.window, None)
    K = basis.configs
    M = params.n_sites * params.J - K.sum(axis=1)
    logz = cmath.log(z)
    logc = (0.5 * log_binom(params.two_j, K).sum(axis=1)
            + math.log(params.q) * (K @ basis.sites) + M * logz.real)
    vec = np.exp(logc - logc.max()) * np.exp(1j * M * logz.imag)
    if normalize:
        vec /= np.linalg.norm(vec)
    return vec


def product_coherent_vector(params: ModelParams, phi: float = 0.0) -> np.ndarray:
    """``prod_x e^{-iJ phi} |(theta_x, phi)>`` on the window (full basis)."""
    prof = kink_profile(params)
    phase = cmath.exp(-1j * params.J * phi)
    return kron_chain([phase * CoherentState(params.two_j, t, phi).coefficients[:, None]
                       for t in prof.theta]).ravel()


def kink_z(params: ModelParams, phi: float = 0.0) -> complex:
    return math.exp(-params.eta * params.r) * cmath.exp(-1j * phi)


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_c |a - c b|`` over unit complex ``c`` (both normalised first)."""
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    ov = np.vdot(b, a)
    c = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.linalg.norm(a - c * b))


def overlap_decay_check(params: ModelParams, a_n: int, a_m: int) -> dict[str, float]:
    """Distance between the embedded kink product states on ``[-a_n+1, a_n]``
    and ``[-a_m+1, a_m]`` (outside: local bottom/top states), at ``phi = 0``.

    Returns the exact distance ``lhs``, the closed-form ``bound`` and flags
    for ``lhs**2 <= bound`` (what the product estimate gives) and for
    ``lhs <= bound``.
    """
    if a_m < a_n:
        raise ValueError("need a_n <= a_m")
    q, r, J = params.q, params.r, params.J
    # log of the overlap; sites -a_m+1..-a_n overlap with the bottom state,
    # a_n+1..a_m with the top state
    x_left = np.arange(a_n, a_m)
    x_right = np.arange(a_n + 1, a_m + 1)
    log_ov = (-J * np.log1p(q ** (2 * (x_left + r))).sum()
              - J * np.log1p(q ** (2 * (x_right - r))).sum())
    lhs_sq = -2.0 * math.expm1(log_ov)
    lhs = math.sqrt(max(lhs_sq, 0.0))
    bound = (2 * J * q ** (2 * a_n) * (1 - q ** (2 * (a_m - a_n))) / (1 - q * q)
             * (q ** (2 * r) + q ** (2 - 2 * r)))
    return {"lhs": lhs, "lhs_sq": lhs_sq, "bound": bound,
            "squared_form_holds": lhs_sq <= bound + 1e-15,
            "stated_form_holds": lhs <= bound + 1e-15}


def overlap_by_vectors(params: ModelParams, a_n: int, a_m: int) -> float:
    """Same distance as :func:`overlap_decay_check` from explicit vectors on
    ``[-a_m+1, a_m]`` (small windows only)."""
    big = params.replace(window=(-a_m + 1, a_m))
    prof = kink_profile(big)
    outer = []
    inner = []
    for x, t in zip(prof.sites, prof.theta):
        coh = CoherentState(params.two_j, t).coefficients[:, None]
        outer.append(coh)
        if -a_n + 1 <= x <= a_n:
            inner.append(coh)
        else:
            ref = np.zeros((params.two_j + 1, 1), dtype=complex)
            ref[0 if x > 0 else -1] = 1.0
            inner.append(ref)
    return float(np.linalg.norm(kron_chain(outer) - kron_chain(inner)))


def window_for_tolerance(params: ModelParams, tol: float = 1e-24, start: int = 1) -> int:
    """Smallest ``a`` with ``2J q^{2a}/(1-q^2) (q^{2r} + q^{2-2r}) <= tol``."""
    q, r, J = params.q, params.r, params.J
    pref = 2 * J / (1 - q * q) * (q ** (2 * r) + q ** (2 - 2 * r))
    a = max(start, 0)
    if pref <= tol:
        return a
    return max(a, math.ceil(math.log(tol / pref) / (2 * math.log(q))))


def alpha(phi: float, cos_t) -> np.ndarray:
    half = phi / 2
    return math.sin(half) / (math.cos(half) + 1j * np.asarray(cos_t) * math.sin(half))


def phase_rotation_check(params: ModelParams, phi: float) -> float:
    """Residual of the disentangled form of ``e^{i phi S3_tot}`` acting on the
    kink product state."""
    if not abs(phi) < math.pi:
        raise ValueError("need |phi| < pi")
    if float(params.two_j + 1) ** params.n_sites > 20000:
        raise ValueError("window too large for the dense check")
    prof = kink_profile(params)
    site = SpinSite(params.two_j)
    tj = params.two_j
    lhs_sites, rhs_sites = [], []
    for t, c, s in zip(prof.theta, prof.cos_theta, prof.sin_theta):
        sigma = CoherentState(tj, t).coefficients
        rot = site.rotated(t)
        lhs_sites.append(np.exp(1j * phi * site.m) * sigma)
        pref = (math.cos(phi / 2) + 1j * c * math.sin(phi / 2)) ** tj
        gen = -1j * alpha(phi, c) * s * rot["Sm"]
        rhs_sites.append(pref * (sla.expm(gen) @ sigma))
    lhs = kron_chain([v[:, None] for v in lhs_sites]).ravel()
    rhs = kron_chain([v[:, None] for v in rhs_sites]).ravel()
    return float(np.linalg.norm(lhs - rhs))


def phase_relation_residual(params: ModelParams, modulus: float, phi: float) -> float:
    """``|Psi(|z| e^{-i phi}) - e^{-i phi S3_tot} Psi(|z|)|`` (normalised vectors)."""
    basis = SectorBasis(params.two_j, params.window, None)
    a = grand_canonical_vector(params, modulus * cmath.exp(-1j * phi))
    b = np.exp(-1j * phi * basis.magnetization()) * grand_canonical_vector(params, modulus)
    return float(np.linalg.norm(a - b))


# -- fluctuation operators ------------------------------------------------

def _as_field(params: ModelParams, v) -> dict[int, np.ndarray]:
    """Normalise a direction field to ``{site: 3-vector}``."""
    if isinstance(v, dict):
        items = {int(x): np.asarray(w, dtype=float) for x, w in v.items()}
    else:
        arr = np.asarray(v, dtype=float)
        if arr.ndim != 2 or arr.shape != (params.n_sites, 3):
            raise ValueError("field must be a dict or an (n_sites, 3) array")
        items = {int(x): w for x, w in zip(params.sites, arr)}
    a, b = params.window
    for x, w in items.items():
        if w.shape != (3,):
            raise ValueError(f"vector at site {x} must have 3 components")
        if not a <= x <= b:
            raise ValueError(f"site {x} outside window [{a}, {b}]")
    return {x: w for x, w in items.items() if np.any(w)}


def _u(params: ModelParams, x: int) -> np.ndarray:
    return np.array([float(sin_theta(params, x)), 0.0, float(cos_theta(params, x))])


def tangent_projection(params: ModelParams, x: int, v) -> np.ndarray:
    """``(v.f1, v.f2)`` at site ``x``."""
    c, s = float(cos_theta(params, x)), float(sin_theta(params, x))
    v = np.asarray(v, dtype=float)
    return np.array([c * v[0] - s * v[2], v[1]])


def from_tangent(params: ModelParams, x: int, vt) -> np.ndarray:
    c, s = float(cos_theta(params, x)), float(sin_theta(params, x))
    return np.array([c * vt[0], vt[1], -s * vt[0]])


def random_tangent_field(params: ModelParams, rng: np.random.Generator,
                         scale: float = 1.0) -> dict[int, np.ndarray]:
    """Field with a random tangent vector on every site, lengths uniform in
    ``[scale / 2, 3 scale / 2]``."""
    out = {}
    for x in params.sites:
        vt = rng.standard_normal(2)
        vt *= scale * rng.uniform(0.5, 1.5) / np.linalg.norm(vt)
        out[int(x)] = from_tangent(params, int(x), vt)
    return out


@dataclass
class FluctuationOperator:
    """``F_J(v) = J^{-1/2} sum_x (v_x.S_x - omega(v_x.S_x))`` for a finitely
    supported field ``v``."""

    params: ModelParams
    field: dict = field(default_factory=dict)

    def __post_init__(self):
        self.field = _as_field(self.params, self.field)

    def site_matrix(self, x: int) -> np.ndarray:
        """Centred single-site term ``J^{-1/2}(v_x.S - J v_x.u_x)``."""
        site = SpinSite(self.params.two_j)
        v = self.field[x]
        J = self.params.J
        return (site.vec(v) - J * (v @ _u(self.params, x)) * np.eye(site.two_j + 1)) / math.sqrt(J)

    def matrix(self) -> np.ndarray:
        """Dense matrix on the full window product space."""
        n = self.params.n_sites
        d = self.params.two_j + 1
        _check_size(self.params, 5000)
        out = np.zeros((d**n, d**n), dtype=complex)
        for x in self.field:
            i = x - self.params.window[0]
            ops = [np.eye(d)] * n
            ops = list(ops)
            ops[i] = self.site_matrix(x)
            out += kron_chain(ops)
        return out

    def covariance(self, other: "FluctuationOperator | None" = None) -> complex:
        """``omega(F(v) F(w))`` from the closed form
        ``1/2 (v.w - (v.u)(w.u) + i (v x w).u)``."""
        w_field = self.field if other is None else other.field
        total = 0j
        for x, v in self.field.items():
            if x in w_field:
                w = w_field[x]
                u = _u(self.params, x)
                total += 0.5 * (v @ w - (v @ u) * (w @ u) + 1j * np.cross(v, w) @ u)
        return total

    def inner(self, other: "FluctuationOperator | None" = None) -> complex:
        """``<v, w> = 2 omega(F(v) F(w))``, the complex inner product of the
        tangent projections."""
        return 2 * self.covariance(other)


def expectation(params: ModelParams, x: int, op: np.ndarray) -> complex:
    """``omega(op_x)`` for a single-site operator."""
    sigma = CoherentState(params.two_j, float(np.arctan2(sin_theta(params, x), cos_theta(params, x)))).coefficients
    return complex(np.vdot(sigma, op @ sigma))


def site_char_closed_form(two_j: int, v, u) -> complex:
    """``{cos(|v|/2) + i (v.u/|v|) sin(|v|/2)}^{2J}``."""
    v = np.asarray(v, dtype=float)
    nv = float(np.linalg.norm(v))
    if nv == 0:
        return 1.0 + 0j
    return (math.cos(nv / 2) + 1j * (v @ np.asarray(u)) / nv * math.sin(nv / 2)) ** two_j


def site_char_dense(two_j: int, v, theta: float) -> complex:
    """``<(theta,0)| e^{i v.S} |(theta,0)>`` by dense exponential."""
    site = SpinSite(two_j)
    sigma = CoherentState(two_j, theta).coefficients
    return complex(np.vdot(sigma, sla.expm(1j * site.vec(v)) @ sigma))


@dataclass
class CharacteristicResult:
    exact: complex
    single_site_formula: complex
    gaussian_limit: float
    gaussian_stated: float


def characteristic_function(params: ModelParams, v) -> CharacteristicResult:
    """``omega(e^{i F_J(v)})`` three ways.

    ``exact`` multiplies dense single-site exponentials of the centred
    terms (the state is a product state, so this is exact);
    ``single_site_formula`` uses the closed form for the uncentred
    exponential with ``v/sqrt(J)`` and removes the centring phase.
    ``gaussian_limit`` is ``exp(-omega(F^2)/2)``; ``gaussian_stated`` is
    ``exp(-<v,v>/2)`` with ``<v,v> = 2 omega(F^2)``.
    """
    F = FluctuationOperator(params, v)
    J = params.J
    exact = 1.0 + 0j
    closed = 1.0 + 0j
    for x, vx in F.field.items():
        u = _u(params, x)
        theta = float(np.arctan2(u[0], u[2]))
        sigma = CoherentState(params.two_j, theta).coefficients
        exact *= complex(np.vdot(sigma, sla.expm(1j * F.site_matrix(x)) @ sigma))
        closed *= cmath.exp(-1j * math.sqrt(J) * (vx @ u)) * site_char_closed_form(params.two_j, vx / math.sqrt(J), u)
    var = F.covariance().real
    return CharacteristicResult(exact, closed, math.exp(-var / 2), math.exp(-var))


def field_hash(field_: dict) -> str:
    items = sorted((int(x), tuple(float(c) for c in np.asarray(w))) for x, w in field_.items())
    return hashlib.sha1(repr(items).encode()).hexdigest()[:12]


def clt_rows(records):
    """``records``: iterable of ``(params, field, CharacteristicResult)``."""
    header = ["two_j", "site_count", "v_hash", "exact_re", "exact_im", "gauss", "abs_err"]
    rows = []
    for params, fld, res in records:
        f = _as_field(params, fld)
        rows.append([params.two_j, len(f), field_hash(f), res.exact.real, res.exact.imag,
                     res.gaussian_limit, abs(res.exact - res.gaussian_limit)])
    return header, rows


def grand_canonical_energy_residual(params: ModelParams, z: complex) -> float:
    """``|H Psi(z)| / max diag(H)`` for the normalised grand-canonical vector."""
    from .spinchain import build_xxz_hamiltonian
    H = build_xxz_hamiltonian(params).matrix
    vec = grand_canonical_vector(params, z)
    return float(np.linalg.norm(H @ vec) / max(1.0, np.abs(H.diagonal()).max()))

