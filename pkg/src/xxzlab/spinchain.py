"""Spin-J XXZ kink Hamiltonian, magnetisation sectors and their ground states.

Local basis ordering is ``m = J, J-1, ..., -J``; a configuration is stored
through the lowering counts ``k_x = J - m_x`` (``0 .. 2J``), so lexicographic
order in ``k`` over sites ``a..b`` is the same as lexicographic order with
``m`` descending.  The same integer arrays double as boson occupation numbers
in :mod:`xxzlab.fockspace`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.special import gammaln

from .kinkmath import ModelParams, kink_profile
from .linalg import ConvergenceError, lowest_eigenpairs

#: Full-space dimension above which assembly must be sector-restricted.
DIM_CAP = 10**6


# -- single-site operators -------------------------------------------------

@dataclass(frozen=True)
class SpinSite:
    two_j: int

    @cached_property
    def m(self) -> np.ndarray:
        return self.two_j / 2 - np.arange(self.two_j + 1)

    @cached_property
    def Sz(self) -> np.ndarray:
        return np.diag(self.m)

    @cached_property
    def Sp(self) -> np.ndarray:
        J, m = self.two_j / 2, self.m
        # <m+1|S+|m> lives one row above the diagonal
        return np.diag(np.sqrt(J * (J + 1) - m[1:] * (m[1:] + 1)), 1)

    @cached_property
    def Sm(self) -> np.ndarray:
        return self.Sp.T.copy()

    @cached_property
    def Sx(self) -> np.ndarray:
        return (self.Sp + self.Sm) / 2

    @cached_property
    def Sy(self) -> np.ndarray:
        return (self.Sp - self.Sm) / 2j

    def vec(self, v) -> np.ndarray:
        """``v . S`` for a real 3-vector ``v``."""
        return v[0] * self.Sx + v[1] * self.Sy + v[2] * self.Sz

    def rotation(self, theta: float) -> np.ndarray:
        """``exp(-i theta S^2)``; real because ``-i S^2`` is real."""
        gen = -(self.Sp - self.Sm) / 2
        return sla.expm(theta * gen)

    def rotated(self, theta: float) -> dict[str, np.ndarray]:
        """Rotated operators ``U S^i U^dagger`` with ``U = exp(-i theta S^2)``."""
        U = self.rotation(theta)
        out = {}
        for name in ("Sx", "Sy", "Sz", "Sp", "Sm"):
            out[name] = U @ getattr(self, name) @ U.T
        return out


def log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


# -- configuration bases ---------------------------------------------------

def _enumerate(n_sites: int, cap: int, total: int | None, total_max: int | None) -> np.ndarray:
    """All ``k`` in ``{0..cap}^n`` in lexicographic order, optionally with a
    fixed sum or a bounded sum."""
    if total is not None and (total < 0 or total > cap * n_sites):
        return np.zeros((0, n_sites), dtype=np.int64)
    limit = total if total is not None else (total_max if total_max is not None
                                             else cap * n_sites)
    rows = []
    cur = [0] * n_sites

    def rec(i, remaining):
        if i == n_sites:
            if total is None or remaining == 0:
                rows.append(cur.copy())
            return
        rest = n_sites - i - 1
        for k in range(0, min(cap, remaining) + 1):
            if total is not None and remaining - k > cap * rest:
                continue
            cur[i] = k
            rec(i + 1, remaining - k)
        cur[i] = 0

    if n_sites == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if float(cap + 1) ** n_sites <= 4e6:
        grids = np.indices((cap + 1,) * n_sites, dtype=np.int64).reshape(n_sites, -1).T
        sums = grids.sum(axis=1)
        if total is not None:
            grids = grids[sums == total]
        elif total_max is not None:
            grids = grids[sums <= total_max]
        return np.ascontiguousarray(grids)
    rec(0, limit)
    return np.asarray(rows, dtype=np.int64).reshape(-1, n_sites)


def count_fixed_sum(n_sites: int, cap: int, total: int) -> int:
    """Number of ``k in {0..cap}^n`` with ``sum k = total`` (dynamic programming)."""
    ways = [1] + [0] * total
    for _ in range(n_sites):
        new = [0] * (total + 1)
        for s, w in enumerate(ways):
            if w:
                for k in range(0, min(cap, total - s) + 1):
                    new[s + k] += w
        ways = new
    return ways[total]


class ConfigBasis:
    """Ordered list of occupation/lowering-count configurations with lookup."""

    def __init__(self, window: tuple[int, int], cap: int, configs: np.ndarray):
        self.window = (int(window[0]), int(window[1]))
        self.cap = int(cap)
        self.configs = np.ascontiguousarray(configs, dtype=np.int64)
        n = self.n_sites
        self._radix = (self.cap + 1) ** np.arange(n - 1, -1, -1, dtype=np.int64)
        if n and float(self.cap + 1) ** n > 2**62:
            raise ValueError("configuration code would overflow int64")
        self.codes = self.configs @ self._radix if len(self.configs) else np.zeros(0, np.int64)
        if np.any(np.diff(self.codes) <= 0):
            raise ValueError("configurations must be strictly lexicographically increasing")

    @property
    def n_sites(self) -> int:
        return self.window[1] - self.window[0] + 1

    @property
    def dim(self) -> int:
        return len(self.configs)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.window[0], self.window[1] + 1)

    def index(self, configs) -> np.ndarray:
        """Indices of ``configs`` in the basis, ``-1`` where absent."""
        configs = np.atleast_2d(np.asarray(configs, dtype=np.int64))
        inside = np.all((configs >= 0) & (configs <= self.cap), axis=1)
        codes = configs @ self._radix
        pos = np.searchsorted(self.codes, codes)
        pos = np.minimum(pos, max(self.dim - 1, 0))
        found = inside & (self.dim > 0) & (self.codes[pos] == codes)
        return np.where(found, pos, -1)

    def tag(self) -> tuple:
        return (type(self).__name__, self.window, self.cap, self.dim)


class SectorBasis(ConfigBasis):
    """Spin configurations with fixed total magnetisation ``M`` (or all, if
    ``two_m`` is ``None``).  ``two_m`` is the doubled magnetisation."""

    def __init__(self, two_j: int, window: tuple[int, int], two_m: int | None = None):
        a, b = window
        n = b - a + 1
        self.two_j = int(two_j)
        self.two_m = two_m
        if two_m is None:
            configs = _enumerate(n, self.two_j, None, None)
        else:
            twice_lowerings = n * self.two_j - int(two_m)
            if twice_lowerings % 2 or not 0 <= twice_lowerings <= 2 * n * self.two_j:
                raise ValueError(f"M = {two_m}/2 is not admissible on {n} sites of spin {two_j}/2")
            configs = _enumerate(n, self.two_j, twice_lowerings // 2, None)
        super().__init__(window, self.two_j, configs)

    @property
    def M(self) -> float | None:
        return None if self.two_m is None else self.two_m / 2

    def magnetization(self) -> np.ndarray:
        return self.n_sites * self.two_j / 2 - self.configs.sum(axis=1)

    def labels(self) -> list[str]:
        """Configuration strings: per site ``2m`` as a signed integer."""
        two_m = self.two_j - 2 * self.configs
        return [" ".join(f"{v:+d}" for v in row) for row in two_m]

    def tag(self) -> tuple:
        return ("spin", self.window, self.two_j, self.two_m, self.dim)


def admissible_two_m(two_j: int, n_sites: int) -> list[int]:
    top = n_sites * two_j
    return list(range(-top, top + 1, 2))


def to_two_m(M) -> int:
    two_m = round(2 * float(M))
    if abs(two_m - 2 * float(M)) > 1e-9:
        raise ValueError(f"M = {M} is not a multiple of 1/2")
    return int(two_m)


# -- operators -------------------------------------------------------------

@dataclass
class SparseOperator:
    """Symmetric (or general) sparse matrix tied to the basis it acts on."""

    basis: tuple
    matrix: sp.csr_matrix
    symmetric: bool = True

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, v):
        return self.matrix @ v

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def triplets(self):
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data


def _check_size(params: ModelParams, cap: int = DIM_CAP):
    if params.n_sites < 2:
        raise ValueError("window needs at least two sites")
    if params.two_j < 1:
        raise ValueError("two_j must be at least 1")
    dim = float(params.two_j + 1) ** params.n_sites
    if dim > cap:
        raise ValueError(f"full space dimension {dim:.0f} exceeds cap {cap}; "
                         "assemble in a magnetisation sector instead")


def _lower_amp(two_j, k):
    """``<k+1| S^- |k>`` with ``k = J - m``."""
    return np.sqrt((two_j - k) * (k + 1.0))


def _raise_amp(two_j, k):
    """``<k-1| S^+ |k>``."""
    return np.sqrt(k * (two_j - k + 1.0))


def build_xxz_hamiltonian(params: ModelParams, two_m: int | None = None,
                          basis: SectorBasis | None = None,
                          dim_cap: int = DIM_CAP) -> SparseOperator:
    """Kink Hamiltonian as a sparse matrix in a sector (or the full space).

    Matrix elements are generated directly on the configuration list; the
    hopping part is assembled as ``T + T^T`` so the result is exactly
    symmetric.
    """
    if basis is None:
        if two_m is None:
            _check_size(params, dim_cap)
        elif params.n_sites < 2 or params.two_j < 1:
            _check_size(params)
        basis = SectorBasis(params.two_j, params.window, two_m)
    tj = params.two_j
    J = tj / 2
    K = basis.configs
    m = J - K
    dim = basis.dim
    d_inv, kap = params.delta_inv, params.kappa
    diag = np.zeros(dim)
    rows, cols, vals = [], [], []
    for i in range(basis.n_sites - 1):
        diag += J * J - m[:, i] * m[:, i + 1] + J * kap * (m[:, i] - m[:, i + 1])
        # S+_i S-_{i+1}: k_i -> k_i - 1, k_{i+1} -> k_{i+1} + 1
        ok = (K[:, i] > 0) & (K[:, i + 1] < tj)
        src = np.nonzero(ok)[0]
        tgt_cfg = K[src].copy()
        tgt_cfg[:, i] -= 1
        tgt_cfg[:, i + 1] += 1
        tgt = basis.index(tgt_cfg)
        amp = _raise_amp(tj, K[src, i]) * _lower_amp(tj, K[src, i + 1])
        rows.append(tgt)
        cols.append(src)
        vals.append(-0.5 * d_inv * amp)
    r = np.concatenate(rows) if rows else np.zeros(0, int)
    c = np.concatenate(cols) if cols else np.zeros(0, int)
    v = np.concatenate(vals) if vals else np.zeros(0)
    T = sp.csr_matrix((v, (r, c)), shape=(dim, dim))
    H = T + T.T + sp.diags(diag)
    return SparseOperator(basis.tag(), H.tocsr(), True)


def total_sz(basis: SectorBasis) -> sp.csr_matrix:
    return sp.diags(basis.magnetization()).tocsr()


def kron_chain(ops: list[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1))
    for o in ops:
        out = np.kron(out, o)
    return out


def site_operator(site_op: np.ndarray, i: int, n_sites: int) -> sp.csr_matrix:
    d = site_op.shape[0]
    left = sp.identity(d**i, format="csr")
    right = sp.identity(d ** (n_sites - i - 1), format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(site_op)), right, format="csr")


def rotated_hamiltonian(params: ModelParams) -> SparseOperator:
    """Full-space Hamiltonian rebuilt from the rotated spin operators.

    Uses the bond form written with ``S~ = U S U^dagger``,
    ``U = exp(-i theta_x S^2_x)``, and the bond couplings ``gamma_{x,x+1}``
    of the kink profile.
    """
    _check_size(params)
    prof = kink_profile(params)
    site = SpinSite(params.two_j)
    n, J = params.n_sites, params.J
    d_inv, kap = params.delta_inv, params.kappa
    rot = [site.rotated(t) for t in prof.theta]
    c, s = prof.cos_theta, prof.sin_theta

    def op(name, i):
        return site_operator(rot[i][name], i, n)

    dim = (params.two_j + 1) ** n
    H = sp.csr_matrix((dim, dim), dtype=complex)
    eye = sp.identity(dim, format="csr")
    for i in range(n - 1):
        g = prof.gamma_bond[i]
        H = H + J * J * eye
        H = H - 0.5 * d_inv * (op("Sp", i) @ op("Sm", i + 1) + op("Sm", i) @ op("Sp", i + 1))
        H = H - g * (op("Sz", i) @ op("Sz", i + 1))
        H = H + J * kap * (c[i] * op("Sz", i) - c[i + 1] * op("Sz", i + 1))
        H = H + kap * (s[i] * op("Sx", i) @ op("Sz", i + 1) - s[i + 1] * op("Sz", i) @ op("Sx", i + 1))
        H = H - J * kap * (s[i] * op("Sx", i) - s[i + 1] * op("Sx", i + 1))
    if H.nnz and abs(H.imag).max() > 1e-12:
        raise RuntimeError("rotated Hamiltonian has a non-negligible imaginary part")
    return SparseOperator(("spin", params.window, params.two_j, None, dim), H.real.tocsr(), True)


def rotation_operator(params: ModelParams) -> np.ndarray:
    """Dense ``prod_x exp(-i theta_x S^2_x)`` on the full space (real)."""
    _check_size(params, 20000)
    prof = kink_profile(params)
    site = SpinSite(params.two_j)
    return kron_chain([site.rotation(t) for t in prof.theta])


# -- ground states and gaps ------------------------------------------------

def ground_state(params: ModelParams, M, normalize: bool = True,
                 basis: SectorBasis | None = None) -> tuple[SectorBasis, np.ndarray]:
    """Zero-energy vector of sector ``M`` from the product formula.

    Coefficients ``prod_x binom(2J, J - m_x)^(1/2) q^(x (J - m_x))`` are
    formed in log space and shifted by their maximum before exponentiation.
    """
    two_m = to_two_m(M)
    if basis is None:
        top = params.n_sites * params.two_j
        if abs(two_m) > top:
            raise ValueError(f"M = {M} outside [-{top / 2}, {top / 2}]")
        basis = SectorBasis(params.two_j, params.window, two_m)
    K = basis.configs
    logc = 0.5 * log_binom(params.two_j, K).sum(axis=1) + math.log(params.q) * (K @ basis.sites)
    vec = np.exp(logc - logc.max())
    if normalize:
        vec /= np.linalg.norm(vec)
    return basis, vec


def zero_tol_for(H) -> float:
    return 1e-8 * float(np.abs(H.diagonal()).max())


@dataclass
class SectorGap:
    two_j: int
    delta: float
    n_sites: int
    M: float
    dim: int
    e0: float
    gap: float
    solver: str
    steps: int
    zero_tol: float
    eigenvalues: np.ndarray

    @property
    def gap_over_j(self) -> float:
        return self.gap / (self.two_j / 2)


def sector_gap(params: ModelParams, M, k: int = 3, solver: str = "auto") -> SectorGap:
    """Lowest excitation of the kink Hamiltonian inside sector ``M``.

    The ground eigenvalue is checked to lie in the zero band and to be simple.
    """
    two_m = to_two_m(M)
    basis = SectorBasis(params.two_j, params.window, two_m)
    if basis.dim < 2:
        raise ValueError(f"sector M = {M} has dimension {basis.dim}; no gap")
    H = build_xxz_hamiltonian(params, basis=basis).matrix
    res = lowest_eigenpairs(H, k=min(k, basis.dim), solver=solver, tol=1e-10)
    w = np.sort(res.values)
    ztol = zero_tol_for(H)
    if abs(w[0]) > ztol:
        raise ConvergenceError(f"ground eigenvalue {w[0]:.3e} is not in the zero band",
                               res.steps, abs(w[0]))
    if w[1] <= 10 * ztol:
        raise ValueError("sector ground state is not simple")
    return SectorGap(params.two_j, params.delta, params.n_sites, two_m / 2, basis.dim,
                     float(w[0]), float(w[1]), res.solver, res.steps, ztol, w)


def sector_gap_rows(gaps: list[SectorGap]):
    header = ["two_j", "delta", "sites", "M", "dim", "e0", "gap", "gap_over_j"]
    rows = [[g.two_j, g.delta, g.n_sites, g.M, g.dim, g.e0, g.gap, g.gap_over_j] for g in gaps]
    return header, rows


def ground_state_rows(basis: SectorBasis, vec: np.ndarray):
    return ["configuration", "coefficient"], [[lab, c] for lab, c in zip(basis.labels(), vec)]


def ground_state_residual(params: ModelParams, M) -> tuple[float, float]:
    """``(|H Phi|, max diagonal of H)`` for the normalised sector ground state."""
    basis, vec = ground_state(params, M)
    H = build_xxz_hamiltonian(params, basis=basis).matrix
    return float(np.linalg.norm(H @ vec)), float(np.abs(H.diagonal()).max())
