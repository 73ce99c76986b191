"""The one-particle Jacobi operator of the boson limit on a finite window.

On the window ``[a, b]`` the matrix is tridiagonal with constant
off-diagonal ``-1/delta`` and diagonal ``eps_x``, replaced by the one-sided
values ``eps_plus(a)`` and ``eps_minus(b)`` at the two ends.  With these
boundary rows the sech profile is an exact zero mode for every window.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .kinkmath import ModelParams, eps_bulk, kink_profile, sin_theta
from .linalg import ConvergenceError, lanczos, tridiagonal_eigh

log = logging.getLogger(__name__)

#: Eigenvalues below ``continuum_edge - EDGE_MARGIN`` are candidates for isolation.
EDGE_MARGIN = 1e-3
#: Candidates need an inverse participation ratio of at least ``IPR_FACTOR / L``.
IPR_FACTOR = 5.0
ZERO_TOL_REL = 1e-8


@dataclass(frozen=True)
class SymTridiagonal:
    diagonal: np.ndarray
    offdiag: np.ndarray
    window: tuple[int, int]

    @property
    def dim(self) -> int:
        return len(self.diagonal)

    def toarray(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.offdiag, 1)
                + np.diag(self.offdiag, -1))

    def __matmul__(self, v):
        v = np.asarray(v)
        out = self.diagonal[:, None] * v if v.ndim == 2 else self.diagonal * v
        out[:-1] += (self.offdiag[:, None] if v.ndim == 2 else self.offdiag) * v[1:]
        out[1:] += (self.offdiag[:, None] if v.ndim == 2 else self.offdiag) * v[:-1]
        return out

    @property
    def shape(self):
        return (self.dim, self.dim)

    def inf_norm(self) -> float:
        row = np.abs(self.diagonal).copy()
        row[:-1] += np.abs(self.offdiag)
        row[1:] += np.abs(self.offdiag)
        return float(row.max())


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    gap: float
    continuum_edge: float
    isolated_below_edge: list[tuple[float, float]]
    solver: str
    zero_tol: float
    edge_margin: float = EDGE_MARGIN
    ipr_threshold: float = 0.0
    steps: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n_isolated(self) -> int:
        return len(self.isolated_below_edge)


def build_jacobi(params: ModelParams, boundary: str = "one_sided") -> SymTridiagonal:
    """Assemble the truncated Jacobi matrix on ``params.window``.

    ``boundary="dirichlet"`` keeps the two-sided bulk well at the end sites
    instead; this plain truncation breaks the exact zero mode and is only
    used to study boundary effects.
    """
    if params.n_sites < 2:
        raise ValueError("window needs at least two sites")
    if boundary == "one_sided":
        d = kink_profile(params).eps.copy()
    elif boundary == "dirichlet":
        d = eps_bulk(params, params.sites)
    else:
        raise ValueError(f"unknown boundary {boundary!r}")
    e = np.full(params.n_sites - 1, -params.delta_inv)
    return SymTridiagonal(d, e, params.window)


def zero_mode(params: ModelParams) -> tuple[np.ndarray, float, float]:
    """Unnormalised zero mode ``sech(eta (x - r))`` on the window, with its
    l2 and l1 norms on the window."""
    v = sin_theta(params, params.sites)
    return v, float(np.linalg.norm(v)), float(np.sum(np.abs(v)))


def zero_mode_residual(params: ModelParams, boundary: str = "one_sided") -> float:
    """``|h v0| / |v0|`` on the window."""
    h = build_jacobi(params, boundary)
    v, n2, _ = zero_mode(params)
    return float(np.linalg.norm(h @ v) / n2)


def zero_mode_projector(params: ModelParams) -> np.ndarray:
    v, n2, _ = zero_mode(params)
    w = v / n2
    return np.outer(w, w)


def ipr(vectors: np.ndarray) -> np.ndarray:
    """Inverse participation ratio ``sum |v|^4 / (sum |v|^2)^2`` per column."""
    p = np.abs(vectors) ** 2
    return np.sum(p * p, axis=0) / np.sum(p, axis=0) ** 2


def _solve(h: SymTridiagonal, k: int, solver: str):
    if solver in ("auto", "dense"):
        w, v = tridiagonal_eigh(h.diagonal, h.offdiag, k, want_vectors=True)
        return w, v, "dense", 0
    if solver == "lanczos":
        res = lanczos(h, k, tol=1e-12, want_vectors=True, max_steps=h.dim)
        return res.values, res.vectors, "lanczos", res.steps
    raise ValueError(f"unknown solver {solver!r}")


def spectral_report(params: ModelParams, k: int = 6, want_vectors: bool = False,
                    solver: str = "auto", h: SymTridiagonal | None = None) -> SpectralReport:
    """Lowest ``k`` eigenvalues of the Jacobi matrix, its gap and bound states.

    The gap is the smallest eigenvalue above the zero band
    ``[.., zero_tol]`` with ``zero_tol = 1e-8 * |h|_inf``.  An eigenvalue in
    ``(zero_tol, edge - 1e-3)`` counts as isolated when its eigenvector has
    inverse participation ratio at least ``5 / L`` (``L`` = window
    half-width); the rest are finite-size continuum states.

    ``solver="auto"`` uses the LAPACK tridiagonal routine at every size (it
    is linear in the dimension per eigenpair); ``"lanczos"`` is kept as an
    independent cross-check.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if h is None:
        h = build_jacobi(params)
    k = min(k, h.dim)
    zero_tol = ZERO_TOL_REL * h.inf_norm()
    edge = 2.0 * (1.0 - params.delta_inv)

    w, v, used, steps = _solve(h, k, solver)
    # make sure at least one eigenvalue above the zero band is present
    kk = k
    while np.all(w <= zero_tol) and kk < h.dim:
        kk = min(h.dim, 2 * kk + 1)
        w, v, used, steps = _solve(h, kk, solver)
    above = w[w > zero_tol]
    gap = float(above[0]) if above.size else float("nan")

    # every eigenvalue below the edge must be in hand before classifying
    while kk < h.dim and w[-1] < edge - EDGE_MARGIN:
        kk = min(h.dim, 2 * kk)
        w, v, used, steps = _solve(h, kk, solver)
    half_width = max(1.0, (h.dim - 1) / 2)
    threshold = IPR_FACTOR / half_width
    iprs = ipr(v)
    isolated = [(float(lam), float(p)) for lam, p in zip(w, iprs)
                if zero_tol < lam < edge - EDGE_MARGIN and p >= threshold]

    return SpectralReport(
        eigenvalues=np.asarray(w[:k]),
        eigenvectors=np.asarray(v[:, :k]) if want_vectors else None,
        gap=gap,
        continuum_edge=edge,
        isolated_below_edge=isolated,
        solver=used,
        zero_tol=zero_tol,
        ipr_threshold=threshold,
        steps=steps,
        extra={"all_eigenvalues": np.asarray(w), "ipr": np.asarray(iprs)},
    )


def lowest_continuum_eigenvalue(report: SpectralReport) -> float:
    """Lowest computed eigenvalue above the zero band that is not isolated."""
    iso = {lam for lam, _ in report.isolated_below_edge}
    for lam in report.extra["all_eigenvalues"]:
        if lam > report.zero_tol and float(lam) not in iso:
            return float(lam)
    return float("nan")


def jacobi_gap(params: ModelParams) -> float:
    return spectral_report(params, k=4).gap


def jacobi_norm(params: ModelParams) -> float:
    """Operator norm (largest eigenvalue) of the window Jacobi matrix."""
    h = build_jacobi(params)
    top = tridiagonal_eigh(h.diagonal, h.offdiag)[0][-1]
    return float(top)


@dataclass
class PhaseCell:
    delta_inv: float
    r: float
    gap: float
    continuum_edge: float
    n_isolated: int
    eigenvalues: np.ndarray
    error: str = ""


def _phase_cell(delta_inv, r, window, k):
    from .kinkmath import make_params

    try:
        params = make_params(1, 1.0 / delta_inv, r, window)
        rep = spectral_report(params, k=k)
        return PhaseCell(delta_inv, r, rep.gap, rep.continuum_edge, rep.n_isolated,
                         rep.eigenvalues)
    except (ConvergenceError, ValueError, np.linalg.LinAlgError) as exc:
        nan = float("nan")
        return PhaseCell(delta_inv, r, nan, nan, -1, np.full(k, nan), error=str(exc))


def phase_diagram(delta_inv_grid, r_grid, window: tuple[int, int] = (-60, 60),
                  k: int = 6, threads: int = 1) -> list[PhaseCell]:
    """Gap and number of isolated eigenvalues over a ``(1/delta, r)`` grid.

    Cells are returned row-major (``delta_inv`` outer, ``r`` inner); a cell
    whose solve fails carries the error message instead of aborting the scan.
    """
    d_grid = np.atleast_1d(np.asarray(delta_inv_grid, dtype=float))
    r_grid = np.atleast_1d(np.asarray(r_grid, dtype=float))
    if d_grid.size == 0 or r_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any((d_grid <= 0) | (d_grid >= 1)):
        raise ValueError("delta_inv values must lie in (0, 1)")
    tasks = [(d, r) for d in d_grid for r in r_grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: _phase_cell(t[0], t[1], window, k), tasks))
    return [_phase_cell(d, r, window, k) for d, r in tasks]


def phase_rows(cells: list[PhaseCell], k: int):
    header = ["delta_inv", "r", "gap", "continuum_edge", "n_isolated"] + [
        f"eig{i}" for i in range(k)]
    rows = []
    for c in cells:
        eig = list(c.eigenvalues[:k]) + [float("nan")] * (k - len(c.eigenvalues))
        rows.append([c.delta_inv, c.r, c.gap, c.continuum_edge, c.n_isolated] + eig)
    return header, rows

