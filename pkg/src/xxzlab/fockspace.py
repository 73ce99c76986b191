"""Truncated boson Fock spaces and the boson form of the kink Hamiltonian.

Occupation configurations use the same lexicographic ordering as the spin
configurations of :mod:`xxzlab.spinchain`.  With cap ``2J`` the boson state
``|n>`` corresponds to the rotated spin state obtained from the local tops by
``n_x`` lowerings, so the spin/boson correspondence is the identity on
indices.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .jacobi import build_jacobi
from .kinkmath import ModelParams, kink_profile
from .spinchain import ConfigBasis, SectorBasis, SparseOperator, _enumerate, build_xxz_hamiltonian, rotation_operator


class FockBasis(ConfigBasis):
    """Occupations ``n_x <= n_cap`` on a window, optionally with fixed total
    ``N`` or bounded total ``n_max``."""

    def __init__(self, window: tuple[int, int], n_cap: int, N: int | None = None,
                 n_max: int | None = None):
        if n_cap < 0:
            raise ValueError("n_cap must be non-negative")
        if N is not None and n_max is not None:
            raise ValueError("give at most one of N and n_max")
        a, b = window
        if a > b:
            raise ValueError(f"empty window [{a}, {b}]")
        self.N = N
        self.n_max = n_max
        configs = _enumerate(b - a + 1, int(n_cap), N, n_max)
        super().__init__(window, n_cap, configs)

    @property
    def n_cap(self) -> int:
        return self.cap

    def total(self) -> np.ndarray:
        return self.configs.sum(axis=1)

    def tag(self) -> tuple:
        return ("fock", self.window, self.cap, self.N, self.n_max, self.dim)


def g_factor(two_j: int, n) -> np.ndarray:
    """``g_J(n) = max(0, 1 - n/(2J))``, evaluated as ``(2J - n)/(2J)`` so that
    each value is the correctly rounded exact fraction."""
    n = np.asarray(n, dtype=float)
    return np.maximum(0.0, (two_j - n) / two_j)


def g_factor_exact(two_j: int, n: int) -> Fraction:
    return max(Fraction(0), 1 - Fraction(n, two_j))


# -- elementary operators --------------------------------------------------

def _shift(basis: ConfigBasis, i: int, di: int, j: int | None = None, dj: int = 0):
    """Source indices and target indices for ``n_i += di`` (and ``n_j += dj``),
    keeping only targets inside the basis."""
    K = basis.configs
    tgt_cfg = K.copy()
    tgt_cfg[:, i] += di
    if j is not None:
        tgt_cfg[:, j] += dj
    tgt = basis.index(tgt_cfg)
    src = np.nonzero(tgt >= 0)[0]
    return src, tgt[src]


def annihilator(basis: ConfigBasis, i: int) -> sp.csr_matrix:
    """``a_x`` on site index ``i`` (0-based in the window), compressed to the basis."""
    src, tgt = _shift(basis, i, -1)
    amp = np.sqrt(basis.configs[src, i].astype(float))
    return sp.csr_matrix((amp, (tgt, src)), shape=(basis.dim, basis.dim))


def creator(basis: ConfigBasis, i: int) -> sp.csr_matrix:
    return annihilator(basis, i).T.tocsr()


def number_operator(basis: ConfigBasis, i: int) -> sp.csr_matrix:
    return sp.diags(basis.configs[:, i].astype(float)).tocsr()


def total_number(basis: ConfigBasis) -> sp.csr_matrix:
    return sp.diags(basis.configs.sum(axis=1).astype(float)).tocsr()


def sup_number_operator(basis: ConfigBasis, h: float) -> SparseOperator:
    """The pinning term ``h sup_x N_x`` (diagonal)."""
    if h < 0:
        raise ValueError("h must be non-negative")
    top = basis.configs.max(axis=1) if basis.n_sites else np.zeros(basis.dim)
    return SparseOperator(basis.tag(), sp.diags(h * top.astype(float)).tocsr(), True)


def _hopping(basis: ConfigBasis, i: int, amp_fn) -> sp.csr_matrix:
    """Upper-triangle-free assembly of one bond's ``a*_{i+1} (..) a_i`` term;
    the caller symmetrises.  ``amp_fn(n_i, n_j)`` gives the amplitude."""
    src, tgt = _shift(basis, i, -1, i + 1, +1)
    K = basis.configs
    amp = amp_fn(K[src, i].astype(float), K[src, i + 1].astype(float))
    return sp.csr_matrix((amp, (tgt, src)), shape=(basis.dim, basis.dim))


def build_boson_hamiltonian(params: ModelParams, basis: FockBasis) -> SparseOperator:
    """Second quantisation of the window Jacobi matrix, compressed to ``basis``.

    No additive constants: the vacuum has energy zero.  With a cap the
    hopping into states beyond the cap is dropped (the operator is
    ``P H P``).
    """
    _check_window(params, basis)
    h = build_jacobi(params)
    n = basis.configs.astype(float)
    diag = n @ h.diagonal
    T = sp.csr_matrix((basis.dim, basis.dim))
    for i in range(basis.n_sites - 1):
        T = T + _hopping(basis, i, lambda ni, nj: np.sqrt(ni * (nj + 1.0)))
    H = -params.delta_inv * (T + T.T) + sp.diags(diag)
    return SparseOperator(basis.tag(), H.tocsr(), True)


def _check_window(params: ModelParams, basis: ConfigBasis):
    if tuple(params.window) != tuple(basis.window):
        raise ValueError(f"basis window {basis.window} differs from params window {params.window}")


def build_spin_parts(params: ModelParams, basis: FockBasis) -> dict[str, SparseOperator]:
    """The kinematical, dynamical and transition parts of ``H/J`` in boson form.

    ``H_kin`` is the ``g_J``-dressed hopping operator, ``H_dyn`` collects the
    ``(N_x - N_{x+1})^2`` and boundary ``N^2`` terms, ``H_tran`` changes the
    particle number by one.  Requires ``n_cap <= 2J``.
    """
    _check_window(params, basis)
    tj = params.two_j
    if basis.cap > tj:
        raise ValueError(f"n_cap = {basis.cap} exceeds 2J = {tj}")
    prof = kink_profile(params)
    d_inv, kap = params.delta_inv, params.kappa
    n = basis.configs.astype(float)
    g = g_factor(tj, n)

    # kinematical
    diag = (g * n) @ prof.eps
    T = sp.csr_matrix((basis.dim, basis.dim))
    for i in range(basis.n_sites - 1):
        T = T + _hopping(basis, i, lambda ni, nj: np.sqrt(ni * g_factor(tj, ni - 1)
                                                          * g_factor(tj, nj) * (nj + 1.0)))
    H_kin = -d_inv * (T + T.T) + sp.diags(diag)

    # dynamical
    dn = n[:, :-1] - n[:, 1:]
    dyn = (dn * dn) @ prof.gamma_bond / tj
    dyn += kap / tj * (prof.cos_theta[-1] * n[:, -1] ** 2 - prof.cos_theta[0] * n[:, 0] ** 2)
    H_dyn = sp.diags(dyn).tocsr()

    # transition: kappa/sqrt(2J) sum_bonds [s_{x+1} B_{x+1} N_x - s_x B_x N_{x+1}]
    s = prof.sin_theta
    Ncoef = np.zeros((basis.dim, basis.n_sites))
    for i in range(basis.n_sites - 1):
        # B_{i+1} multiplies s_{i+1} N_i, B_i multiplies -s_i N_{i+1}
        Ncoef[:, i + 1] += s[i + 1] * n[:, i]
        Ncoef[:, i] -= s[i] * n[:, i + 1]
    R = sp.csr_matrix((basis.dim, basis.dim))
    for i in range(basis.n_sites):
        # a*_i g^(1/2)(N_i): n_i -> n_i + 1 with amplitude sqrt(g(n_i) (n_i + 1))
        src, tgt = _shift(basis, i, +1)
        amp = np.sqrt(g_factor(tj, n[src, i]) * (n[src, i] + 1.0)) * Ncoef[src, i]
        R = R + sp.csr_matrix((amp, (tgt, src)), shape=(basis.dim, basis.dim))
    # N_x commutes with B_y for x != y, so the raising half and its adjoint
    # together give the Hermitian sum
    H_tran = kap / math.sqrt(tj) * (R + R.T)

    tag = basis.tag()
    return {"H_kin": SparseOperator(tag, H_kin.tocsr(), True),
            "H_dyn": SparseOperator(tag, H_dyn, True),
            "H_tran": SparseOperator(tag, H_tran.tocsr(), True)}


def zero_mode_state(params: ModelParams, basis: FockBasis, v=None) -> np.ndarray:
    """Normalised ``(a*(v))^N |0>`` components ``prod_x v_x^{n_x} / sqrt(n_x!)``
    (default ``v`` = the zero mode)."""
    if v is None:
        from .jacobi import zero_mode
        v = zero_mode(params)[0]
    v = np.asarray(v, dtype=float)
    K = basis.configs
    with np.errstate(divide="ignore"):
        logv = np.log(np.abs(v))
    from scipy.special import gammaln
    logc = np.where(K > 0, K * logv, 0.0).sum(axis=1) - 0.5 * gammaln(K + 1.0).sum(axis=1)
    sign = np.prod(np.where(K % 2 == 1, np.sign(v), 1.0), axis=1)
    vec = sign * np.exp(logc - logc.max())
    return vec / np.linalg.norm(vec)


# -- spin <-> boson correspondence ----------------------------------------

def spin_boson_map(two_j: int, window: tuple[int, int]) -> dict:
    """Index bijection between the spin product basis and the cap-``2J``
    Fock basis.

    The boson configuration ``n`` labels the rotated state with ``n_x``
    lowerings at site ``x``; with both bases ordered lexicographically the
    map is the identity on indices.  Returned with the two bases so callers
    can check it.
    """
    spin = SectorBasis(two_j, window, None)
    fock = FockBasis(window, two_j)
    boson_index = fock.index(spin.configs)
    if np.any(boson_index < 0) or np.any(boson_index != np.arange(spin.dim)):
        raise RuntimeError("spin and boson orderings disagree")
    return {"spin": spin, "fock": fock, "spin_to_boson": boson_index}


def rotated_spin_matrix(params: ModelParams) -> np.ndarray:
    """``U^T H U`` on the full spin space: the Hamiltonian in the basis of
    rotated product states, indexed like the cap-``2J`` Fock basis."""
    U = rotation_operator(params)
    H = build_xxz_hamiltonian(params).toarray()
    return U.T @ H @ U


def check_site_correspondence(two_j: int, theta: float = 0.0) -> dict[str, float]:
    """Residuals of ``(2J)^(-1/2) S~- = a* g^(1/2)`` and ``J - S~3 = N`` on
    one site, in the rotated eigenbasis (where the relations must hold
    exactly)."""
    from .spinchain import SpinSite
    site = SpinSite(two_j)
    U = site.rotation(theta)
    # rotated operators expressed in the rotated basis are the plain ones
    Sm = U.T @ (U @ site.Sm @ U.T) @ U
    Sz = U.T @ (U @ site.Sz @ U.T) @ U
    basis = FockBasis((0, 0), two_j)
    a = annihilator(basis, 0).toarray()
    G = np.diag(np.sqrt(g_factor(two_j, basis.configs[:, 0])))
    N = np.diag(basis.configs[:, 0].astype(float))
    return {"lowering": float(np.abs(Sm / math.sqrt(two_j) - a.T @ G).max()),
            "number": float(np.abs(two_j / 2 * np.eye(two_j + 1) - Sz - N).max())}


def decomposition_difference(params: ModelParams) -> dict[str, float]:
    """Max entrywise difference between ``H/J`` (spin assembly, rotated) and
    ``H_kin + H_dyn + H_tran`` on the cap-``2J`` Fock space."""
    m = spin_boson_map(params.two_j, params.window)
    spin = rotated_spin_matrix(params) / params.J
    parts = build_spin_parts(params, m["fock"])
    total = sum(p.toarray() for p in parts.values())
    idx = m["spin_to_boson"]
    diff = np.abs(spin[np.ix_(idx, idx)] - total)
    return {"total": float(diff.max()),
            "scale": float(np.abs(spin).max())}


def spectrum_rows(n_cap: int, n_sites: int, sector, values):
    header = ["n_cap", "sites", "N_sector", "index", "value"]
    label = "full" if sector is None else sector
    return header, [[n_cap, n_sites, label, i, float(v)] for i, v in enumerate(values)]


def difference_rows(diffs: dict[str, float]):
    return ["term", "max_abs_diff"], [[k, v] for k, v in diffs.items()]


def b_operator(basis: ConfigBasis, two_j: int, i: int) -> sp.csr_matrix:
    """``B_x = g^(1/2) a_x + a*_x g^(1/2)`` on site index ``i``."""
    src, tgt = _shift(basis, i, +1)
    n = basis.configs[src, i].astype(float)
    R = sp.csr_matrix((np.sqrt(g_factor(two_j, n) * (n + 1.0)), (tgt, src)),
                      shape=(basis.dim, basis.dim))
    return (R + R.T).tocsr()


def magnetization_deviation(params: ModelParams, basis: FockBasis) -> sp.csr_matrix:
    """``(1/J) sum_{x in window} (S3_x - J sgn(x - 1/2)) - mu`` in boson form.

    ``S3_x = cos(theta_x)(J - N_x) - sin(theta_x) sqrt(2J)/2 B_x``; the
    constant is ``sum_window (cos theta_x - sgn(x - 1/2)) - mu``, i.e. minus
    the part of ``mu`` outside the window.
    """
    from .kinkmath import classical_magnetization
    _check_window(params, basis)
    prof = kink_profile(params)
    J = params.J
    sgn = np.where(prof.sites >= 1, 1.0, -1.0)
    const = float(np.sum(prof.cos_theta - sgn)) - classical_magnetization(params)
    n = basis.configs.astype(float)
    out = sp.diags(const - (n @ prof.cos_theta) / J).tocsr()
    for i, s in enumerate(prof.sin_theta):
        out = out - (s / math.sqrt(2 * J)) * b_operator(basis, params.two_j, i)
    return out.tocsr()
