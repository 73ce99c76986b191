"""Numerical checks of the operator bounds and large-J convergence statements.

Every comparison is made on one finite window: the Jacobi data (gap, norm,
zero mode) and the boson Hamiltonian are those of the same window as the
spin system.  Random states are Gaussian vectors normalised to the unit
sphere, drawn from ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fockspace import (FockBasis, annihilator, build_boson_hamiltonian, build_spin_parts,
                        g_factor, magnetization_deviation, sup_number_operator, total_number)
from .jacobi import jacobi_norm, spectral_report, zero_mode
from .kinkmath import ModelParams, classical_magnetization, cos_theta, make_params, zero_mode_l1
from .spinchain import SectorBasis, sector_gap


SEED = 2003
PASS_TOL = 1e-12


@dataclass
class BoundReport:
    name: str
    params: dict
    lhs: float
    rhs: float
    margin: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.margin = self.rhs - self.lhs
        self.passed = bool(self.margin >= -PASS_TOL)


def _param_dict(params: ModelParams, **extra) -> dict:
    d = {"two_j": params.two_j, "delta": params.delta, "r": params.r,
         "window": f"{params.window[0]}:{params.window[1]}"}
    d.update(extra)
    return d


def random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_state(rng, basis: FockBasis, max_occ: int | None = None, N: int | None = None) -> np.ndarray:
    """Random unit vector supported on configurations with ``n_x <= max_occ``
    (and total ``N`` if given)."""
    mask = np.ones(basis.dim, dtype=bool)
    if max_occ is not None:
        mask &= basis.configs.max(axis=1) <= max_occ
    if N is not None:
        mask &= basis.total() == N
    idx = np.nonzero(mask)[0]
    psi = np.zeros(basis.dim)
    if idx.size:
        psi[idx] = random_unit(rng, idx.size)
    return psi


# -- cached per-window data -------------------------------------------------

@dataclass
class WindowData:
    params: ModelParams
    basis: FockBasis
    h_tilde: sp.csr_matrix
    parts: dict
    gap: float
    h_norm: float
    v0: np.ndarray
    v0_l1: float

    @property
    def H_kin(self):
        return self.parts["H_kin"].matrix

    @property
    def H_dyn(self):
        return self.parts["H_dyn"].matrix

    @property
    def H_tran(self):
        return self.parts["H_tran"].matrix


def window_data(params: ModelParams, basis: FockBasis) -> WindowData:
    rep = spectral_report(params, k=4)
    v0, n2, _ = zero_mode(params)
    return WindowData(params, basis, build_boson_hamiltonian(params, basis).matrix,
                      {k: v for k, v in build_spin_parts(params, basis).items()},
                      rep.gap, jacobi_norm(params), v0 / n2, zero_mode_l1(params))


def _zero_mode_weight(wd: WindowData, psi: np.ndarray) -> float:
    """``<psi, A* G^(1/2) P0 G^(1/2) A psi> = |sum_y w_y g^(1/2)(N_y) a_y psi|^2``."""
    basis = wd.basis
    acc = np.zeros(basis.dim)
    for i, w in enumerate(wd.v0):
        a_psi = annihilator(basis, i) @ psi
        acc += w * np.sqrt(g_factor(wd.params.two_j, basis.configs[:, i])) * a_psi
    return float(acc @ acc)


# -- individual bounds ------------------------------------------------------

def kin_bound_reports(wd: WindowData, psi: np.ndarray, n_j: int, tag: str = "") -> list[BoundReport]:
    """Lower and upper bounds on ``<H_kin>`` for a state in the cap-``2 n_J`` space."""
    p = wd.params
    kin = float(psi @ (wd.H_kin @ psi))
    num = float(psi @ (total_number(wd.basis) @ psi))
    lower = ((wd.gap * g_factor(p.two_j, 2 * n_j) - 1.0 / p.J) * num
             - wd.gap * _zero_mode_weight(wd, psi))
    pd = _param_dict(p, n_cap=wd.basis.cap, n_j=n_j, sample=tag)
    return [BoundReport("kin_lower", pd, lower, kin),
            BoundReport("kin_upper", pd, kin, wd.h_norm * num)]


def norm_bound_reports(wd: WindowData, psi_n: np.ndarray, N: int, n_j: int,
                       tag: str = "") -> list[BoundReport]:
    """``|(H~ - H_kin) psi_N|`` and ``|H_dyn psi_N|`` against their bounds."""
    p = wd.params
    diff = float(np.linalg.norm((wd.h_tilde - wd.H_kin) @ psi_n))
    dyn = float(np.linalg.norm(wd.H_dyn @ psi_n))
    pd = _param_dict(p, n_cap=wd.basis.cap, n_j=n_j, N=N, sample=tag)
    return [BoundReport("kin_vs_boson", pd, diff, 2 * (1 + p.delta_inv) * n_j * N / p.J),
            BoundReport("dyn_norm", pd, dyn, 4 * n_j * N / p.J)]


def tran_bound_report(wd: WindowData, psi: np.ndarray, n_j: int, tag: str = "") -> BoundReport:
    p = wd.params
    lhs = float(np.linalg.norm(wd.H_tran @ psi))
    rhs = 2 * p.kappa * wd.v0_l1 * math.sqrt((2 * n_j + 1) * (4 * n_j) ** 2 / p.J)
    return BoundReport("tran_norm", _param_dict(p, n_cap=wd.basis.cap, n_j=n_j, sample=tag), lhs, rhs)


def verify_kin_lower_bound(params: ModelParams, n_j: int, sample_count: int,
                           seed: int = SEED) -> list[BoundReport]:
    """Random states in the cap-``2 n_J`` space against both kinetic bounds."""
    _check_nj(params, n_j)
    basis = FockBasis(params.window, 2 * n_j)
    wd = window_data(params, basis)
    rng = np.random.default_rng(seed)
    out = []
    for s in range(sample_count):
        out += kin_bound_reports(wd, random_unit(rng, basis.dim), n_j, f"{seed}:{s}")
    return out


def verify_norm_bounds(params: ModelParams, n_j: int, N: int, sample_count: int = 1,
                       seed: int = SEED) -> list[BoundReport]:
    """Random ``N``-particle states with ``n_x <= 2 n_J`` against the
    kinetic-difference and dynamical bounds, and random cap-``2 n_J`` states
    against the transition bound."""
    _check_nj(params, n_j)
    if N > 2 * n_j * params.n_sites:
        raise ValueError("N exceeds the cap-2n_J capacity of the window")
    basis = FockBasis(params.window, 2 * n_j + 1)
    wd = window_data(params, basis)
    rng = np.random.default_rng(seed)
    out = []
    for s in range(sample_count):
        tag = f"{seed}:{s}"
        out += norm_bound_reports(wd, random_state(rng, basis, 2 * n_j, N), N, n_j, tag)
        out.append(tran_bound_report(wd, random_state(rng, basis, 2 * n_j), n_j, tag))
    return out


def _check_nj(params: ModelParams, n_j: int):
    if not 0 < n_j < params.J:
        raise ValueError(f"need 0 < n_J < J (n_J = {n_j}, J = {params.J})")


def bound_suite(n_reports: int = 500, seed: int = SEED, max_two_j: int = 16,
                max_sites: int = 5, max_nj: int = 3, samples_per_config: int = 5) -> list[BoundReport]:
    """Randomised sweep over window, spin and cap producing ``n_reports``
    reports (five per random state: two kinetic, two norm, one transition).

    Configurations and states come from one generator, so equal seeds give
    identical reports.
    """
    rng = np.random.default_rng(seed)
    out: list[BoundReport] = []
    while len(out) < n_reports:
        two_j = int(rng.integers(3, max_two_j + 1))
        J = two_j / 2
        n_j = int(rng.integers(1, min(max_nj, math.ceil(J) - 1) + 1))
        n_sites = int(rng.integers(2, max_sites + 1))
        delta = float(rng.uniform(1.05, 4.0))
        r = float(rng.uniform(0.0, 1.0))
        a = -int(rng.integers(0, n_sites))
        params = make_params(two_j, delta, r, (a, a + n_sites - 1))
        basis = FockBasis(params.window, 2 * n_j + 1)
        wd = window_data(params, basis)
        for s in range(samples_per_config):
            tag = f"{seed}:{len(out)}"
            psi = random_state(rng, basis, 2 * n_j)
            out += kin_bound_reports(wd, psi, n_j, tag)
            N = int(rng.integers(0, 2 * n_j * n_sites + 1))
            out += norm_bound_reports(wd, random_state(rng, basis, 2 * n_j, N), N, n_j, tag)
            out.append(tran_bound_report(wd, psi, n_j, tag))
    return out[:n_reports]


def bound_rows(reports: list[BoundReport]):
    keys = ["two_j", "delta", "r", "window", "n_cap", "n_j", "N", "sample"]
    header = ["name"] + keys + ["lhs", "rhs", "margin", "pass"]
    rows = []
    for rep in reports:
        rows.append([rep.name] + [rep.params.get(k, "") for k in keys]
                    + [rep.lhs, rep.rhs, rep.margin, int(rep.passed)])
    return header, rows


def summary(suite: str, reports: list[BoundReport]) -> dict:
    passed = sum(r.passed for r in reports)
    worst = min((r.margin for r in reports), default=float("nan"))
    return {"suite": suite, "total": len(reports), "passed": passed,
            "failed": len(reports) - passed, "worst_margin": worst}


# -- strong convergence ---------------------------------------------------

def kink_center_site(r: float) -> int:
    """Nearest lattice site to ``r`` (ties go left)."""
    return math.ceil(r - 0.5)


def occupation_state(basis: FockBasis, occ: dict[int, int]) -> np.ndarray:
    cfg = np.zeros(basis.n_sites, dtype=np.int64)
    for x, n in occ.items():
        cfg[x - basis.window[0]] = n
    idx = basis.index(cfg)[0]
    if idx < 0:
        raise ValueError(f"occupation {occ} not in basis")
    psi = np.zeros(basis.dim)
    psi[idx] = 1.0
    return psi


@dataclass
class ConvergenceRow:
    two_j: int
    residual: float
    bound: float
    s3_residual: float
    s3_bound_stated: float
    s3_bound_corrected: float
    tran_part: float
    number_conserving_part: float


def strong_convergence_residual(params_list: list[ModelParams], psi_spec: dict[int, int],
                                pad: int = 2) -> list[ConvergenceRow]:
    """``|(H_J/J - H~) psi|`` and ``|(S3/J - mu) psi|`` for a fixed occupation
    vector ``psi_spec`` (``{site: n}``) across spins.

    Each parameter set's window must contain the support of ``psi`` with
    ``pad`` sites to spare on both sides.
    """
    n_psi = int(sum(psi_spec.values()))
    rows = []
    for params in params_list:
        a, b = params.window
        if psi_spec and (min(psi_spec) - pad < a or max(psi_spec) + pad > b):
            raise ValueError("psi support (plus padding) outside window")
        cap = n_psi + 1
        if cap > params.two_j:
            raise ValueError(f"2J = {params.two_j} too small for N_psi = {n_psi}")
        basis = FockBasis(params.window, cap, n_max=n_psi + 1)
        psi = occupation_state(basis, psi_spec)
        parts = build_spin_parts(params, basis)
        Ht = build_boson_hamiltonian(params, basis).matrix
        nc = (parts["H_kin"].matrix + parts["H_dyn"].matrix - Ht) @ psi
        tr = parts["H_tran"].matrix @ psi
        res = float(np.linalg.norm(nc + tr))
        J, l1 = params.J, zero_mode_l1(params)
        bound = ((3 + params.delta_inv) * n_psi ** 2 / J
                 + 2 * params.kappa * l1 * math.sqrt((n_psi + 1) * (2 * n_psi) ** 2 / J))
        s3 = float(np.linalg.norm(magnetization_deviation(params, basis) @ psi))
        sgn = np.where(params.sites >= 1, 1.0, -1.0)
        tail = abs(float(np.sum(cos_theta(params, params.sites) - sgn)) - classical_magnetization(params))
        stated = (n_psi + 2 * math.sqrt(n_psi + 1) * l1) / J
        corrected = n_psi / J + math.sqrt(2 / J) * math.sqrt(n_psi + 1) * l1 + tail
        rows.append(ConvergenceRow(params.two_j, res, bound, s3, stated, corrected,
                                   float(np.linalg.norm(tr)), float(np.linalg.norm(nc))))
    return rows


def fit_power(xs, ys) -> float:
    """Least-squares slope ``p`` of ``log y = c - p log x``."""
    xs, ys = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    if len(xs) < 3:
        raise ValueError("need at least three points for a rate fit")
    return float(-np.polyfit(xs, ys, 1)[0])


def convergence_rows(rows: list[ConvergenceRow]):
    header = ["two_j", "residual", "bound", "s3_residual", "s3_bound_stated",
              "s3_bound_corrected", "tran_part", "number_conserving_part"]
    return header, [[r.two_j, r.residual, r.bound, r.s3_residual, r.s3_bound_stated,
                     r.s3_bound_corrected, r.tran_part, r.number_conserving_part] for r in rows]


# -- spectral concentration ------------------------------------------------

@dataclass
class ConcentrationRow:
    two_j: int
    E: float
    N_E: int
    residual: float
    residual_number_conserving: float
    delta_j: float
    count: int
    multiplicity: int
    isolation_margin: float
    testable: bool
    n_bound_ok: bool


def sector_eigenpairs(params: ModelParams, N: int):
    """Full spectrum of ``H~`` on the ``N``-particle sector (cap ``N``, so
    exact)."""
    basis = FockBasis(params.window, max(N, 0), N=N)
    H = build_boson_hamiltonian(params, basis).toarray()
    w, v = np.linalg.eigh(H)
    return basis, w, v


def default_schedule(J: float) -> tuple[int, float]:
    """``n_J = max(1, [(J / ln J)^(1/3)])`` and ``h_J = (ln J / J)^(1/6)``."""
    lj = math.log(J) if J > 1 else 1.0
    n_j = max(1, int(math.floor((J / lj) ** (1 / 3))))
    return n_j, (lj / J) ** (1 / 6)


def pinned_operator(params: ModelParams, basis: FockBasis, h: float):
    parts = build_spin_parts(params, basis)
    K = sum(p.matrix for p in parts.values()) + sup_number_operator(basis, h).matrix
    return K.tocsr()


def spectral_concentration_check(params_list: list[ModelParams], N_E: int = 1, index: int | None = None,
                                 isolation_factor: float = 10.0, schedule=default_schedule
                                 ) -> list[ConcentrationRow]:
    """Pseudo-eigenvector test of an eigenvalue ``E`` of ``H~`` for growing J.

    ``E`` is eigenvalue number ``index`` of ``H~`` in the ``N_E``-particle
    sector (default: the lowest one above zero).  For each J the residual
    ``|(H_J/J - E) psi_E|`` is reported in full and without the transition
    term, and the eigenvalues of the pinned ``H_J/J + h_J sup N`` inside
    ``(E - ln J / J, E + ln J / J)`` are counted.  The count is compared with
    the multiplicity only when the nearest other eigenvalue of ``H~`` (sectors
    up to ``N_E + 1``) is at least ``isolation_factor * delta_J`` away;
    otherwise the row is marked untestable.
    """
    rows = []
    for params in params_list:
        J = params.J
        basis_e, w, v = sector_eigenpairs(params, N_E)
        ztol = 1e-8 * max(1.0, np.abs(w).max())
        if index is None:
            pos = np.nonzero(w > ztol)[0] if N_E > 0 else np.array([0])
            k = int(pos[0])
        else:
            k = index
        E = float(w[k])
        mult = int(np.sum(np.abs(w - E) <= 1e-9 * max(1.0, abs(E))))
        others = []
        for N in range(0, N_E + 2):
            ww = sector_eigenpairs(params, N)[1] if N != N_E else w
            others.append(ww)
        allw = np.sort(np.concatenate(others))
        # remove one copy of E per unit multiplicity in its own sector
        dist = np.abs(allw - E)
        dist = np.sort(dist)[mult:]
        margin = float(dist[0]) if dist.size else float("inf")

        cap = min(N_E + 1, params.two_j)
        basis = FockBasis(params.window, cap, n_max=N_E + 1)
        psi = np.zeros(basis.dim)
        psi[basis.index(basis_e.configs)] = v[:, k]
        parts = build_spin_parts(params, basis)
        nc = (parts["H_kin"].matrix + parts["H_dyn"].matrix) @ psi - E * psi
        full = nc + parts["H_tran"].matrix @ psi

        n_j, h_j = schedule(J)
        pin_basis = FockBasis(params.window, min(max(2 * n_j, N_E), params.two_j))
        K = pinned_operator(params, pin_basis, h_j).toarray()
        ev = np.linalg.eigvalsh(K)
        delta_j = math.log(J) / J if J > 1 else float("inf")
        count = int(np.sum(np.abs(ev - E) < delta_j))
        testable = margin >= isolation_factor * delta_j
        gap = spectral_report(params, k=4).gap
        n_ok = N_E <= E / gap + 1e-9 if N_E > 0 else True
        rows.append(ConcentrationRow(params.two_j, E, N_E, float(np.linalg.norm(full)),
                                     float(np.linalg.norm(nc)), delta_j, count, mult, margin,
                                     bool(testable), bool(n_ok)))
    return rows


def concentration_rows(rows: list[ConcentrationRow]):
    header = ["two_j", "E", "N_E", "residual", "residual_number_conserving", "delta_j",
              "count", "multiplicity", "isolation_margin", "testable", "n_bound_ok"]
    return header, [[r.two_j, r.E, r.N_E, r.residual, r.residual_number_conserving, r.delta_j,
                     r.count, r.multiplicity, r.isolation_margin, int(r.testable),
                     int(r.n_bound_ok)] for r in rows]


# -- pinned spectra -----------------------------------------------------------

def hausdorff(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return float("inf")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass
class PinnedRow:
    two_j: int
    n_j: int
    h_j: float
    n_cap: int
    dim: int
    eigenvalues: np.ndarray
    reference: np.ndarray
    distance: float
    unpinned_reference: np.ndarray
    unpinned_distance: float


def boson_levels(one_particle, E_max: float, zero_tol: float = 1e-9) -> np.ndarray:
    """Distinct values ``sum_i n_i lambda_i < E_max`` of the second-quantised
    spectrum (no cap), from one-particle eigenvalues ``lambda_i``.

    Eigenvalues within ``zero_tol`` of zero contribute nothing and are
    skipped, so the zero mode may be occupied arbitrarily.
    """
    lams = sorted(float(x) for x in one_particle if x > zero_tol)
    levels = {0.0}
    for lam in lams:
        if lam >= E_max:
            break
        new = set()
        for e in levels:
            k = 1
            while e + k * lam < E_max:
                new.add(e + k * lam)
                k += 1
        levels |= new
    return np.array(sorted(levels))


def pinned_spectrum_convergence(params_list: list[ModelParams], E_max: float,
                                schedule=default_schedule) -> list[PinnedRow]:
    """Low spectrum of ``H_J/J + h_J sup_x N_x`` on the cap-``2 n_J`` space.

    The primary reference is ``H~ + h_J sup_x N_x`` on the same space (the
    pinned boson operator); the distance to the spectrum of the plain,
    uncapped ``H~`` below ``E_max`` is reported too.
    """
    rows = []
    for params in params_list:
        n_j, h_j = schedule(params.J)
        if h_j * n_j <= E_max:
            raise ValueError(f"pinning too weak at 2J = {params.two_j}: "
                             f"h_J n_J = {h_j * n_j:.4g} <= E_max = {E_max:.4g}")
        cap = min(2 * n_j, params.two_j)
        basis = FockBasis(params.window, cap)
        pin = sup_number_operator(basis, h_j).matrix
        K = (pinned_operator(params, basis, h_j)).toarray()
        ref = (build_boson_hamiltonian(params, basis).matrix + pin).toarray()
        ev = np.linalg.eigvalsh(K)
        rv = np.linalg.eigvalsh(ref)
        ev, rv = ev[ev < E_max], rv[rv < E_max]
        plain = boson_levels(spectral_report(params, k=params.n_sites).extra["all_eigenvalues"],
                             E_max)
        rows.append(PinnedRow(params.two_j, n_j, h_j, cap, basis.dim, ev, rv, hausdorff(ev, rv),
                              plain, hausdorff(ev, plain)))
    return rows


def pinned_rows(rows: list[PinnedRow]):
    header = ["two_j", "n_j", "h_j", "n_cap", "dim", "n_eigs", "n_ref", "distance",
              "unpinned_distance", "eigenvalues"]
    return header, [[r.two_j, r.n_j, r.h_j, r.n_cap, r.dim, len(r.eigenvalues), len(r.reference),
                     r.distance, r.unpinned_distance,
                     " ".join(f"{x:.17g}" for x in r.eigenvalues)] for r in rows]


# -- conjecture trend --------------------------------------------------------

def classical_sector(params: ModelParams) -> int:
    """Doubled magnetisation nearest to ``J sum_window cos theta_x`` with the
    parity of ``|window| * 2J``."""
    target = params.two_j * float(np.sum(cos_theta(params, params.sites)))
    parity = (params.n_sites * params.two_j) % 2
    lo = math.floor(target)
    cands = [m for m in (lo - 1, lo, lo + 1, lo + 2) if m % 2 == parity]
    return min(cands, key=lambda m: (abs(m - target), m))


@dataclass
class TrendRow:
    two_j: int
    M: float
    gap: float
    gap_over_j: float
    gamma_tilde: float
    difference: float


def conjecture_trend(two_j_list, delta: float, r: float, window, M_rule=classical_sector,
                     solver: str = "auto") -> list[TrendRow]:
    """``gamma_{J,M}/J`` against the window Jacobi gap for the sector picked
    by ``M_rule`` (doubled ``M`` as a function of the parameters)."""
    rows = []
    gt = None
    for tj in two_j_list:
        params = make_params(tj, delta, r, window)
        if gt is None:
            gt = spectral_report(params, k=4).gap
        two_m = M_rule(params)
        dim = len(SectorBasis(tj, window, two_m).configs)
        if dim < 2:
            raise ValueError(f"sector 2M = {two_m} has dimension {dim}")
        g = sector_gap(params, two_m / 2, solver=solver)
        rows.append(TrendRow(tj, two_m / 2, g.gap, g.gap_over_j, gt, abs(g.gap_over_j - gt)))
    return rows


def trend_ok(diffs, band: float = 0.05) -> bool:
    """Non-increasing, allowing one increase of at most ``band`` (relative)."""
    inversions = 0
    for a, b in zip(diffs, diffs[1:]):
        if b > a:
            if b > a * (1 + band):
                return False
            inversions += 1
    return inversions <= 1


def trend_rows(rows: list[TrendRow]):
    header = ["two_j", "M", "gap", "gap_over_j", "gamma_tilde", "difference"]
    return header, [[r.two_j, r.M, r.gap, r.gap_over_j, r.gamma_tilde, r.difference] for r in rows]

