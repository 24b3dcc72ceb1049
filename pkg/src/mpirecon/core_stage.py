"""Recovery of the core operator field from scan samples.

Each matrix row of the core operator couples to one signal channel:
channel ``i`` observes ``sum_j I[A_ij](r_k) v_j(k)``.  Rows therefore
decouple into independent least-squares problems, each regularized by
the squared Laplacian and solved by conjugate gradients on the normal
equations.  With a single available channel only that row is recovered
(partial data), which is enough to deconvolve against the matching
kernel entry downstream.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np
import scipy.sparse as sp

from .forward import CoreOperatorField
from .geometry import GridGeometry
from .interpolation import InterpolationScheme, interpolation_matrix
from .solvers import CgResult, conjugate_gradient

LAPLACIAN_UNITS = ("pixel", "physical")


def _second_difference(n: int, step: float) -> sp.csr_matrix:
    """1D second difference with replicate (Neumann) boundary."""
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sp.diags([off, main, off], offsets=(-1, 0, 1), format="csr") / step**2


def laplacian_matrix(shape: tuple, spacing: tuple = (1.0, 1.0)) -> sp.csr_matrix:
    """5-point Laplacian on raveled row-major images, replicate boundary."""
    h, w = shape
    if h < 3 or w < 3:
        raise ValueError(f"Laplacian needs a grid of at least 3 x 3, got {shape}")
    dx, dy = spacing
    return sp.kron(sp.eye(h), _second_difference(w, dx)) + sp.kron(
        _second_difference(h, dy), sp.eye(w)
    )


def laplacian_apply(field: np.ndarray, spacing: tuple = (1.0, 1.0)) -> np.ndarray:
    """Apply the replicate-boundary 5-point Laplacian to a grid image."""
    field = np.asarray(field, dtype=float)
    return (laplacian_matrix(field.shape, spacing) @ field.ravel()).reshape(field.shape)


@dataclasses.dataclass(frozen=True)
class CoreStageConfig:
    """Regularization, solver budget and reconstruction target.

    ``rows`` lists the core-operator matrix rows to recover; partial data
    provides the matching signal channels only.  ``laplacian_units``
    selects whether the regularizer acts in pixel units (default; makes
    gamma resolution-coupled and keeps its working value light) or in
    physical meters.
    """

    grid: GridGeometry
    gamma: float = 1e-7
    cg_tolerance: float = 1e-3
    cg_max_iterations: int = 10_000
    rows: tuple = (0, 1)
    laplacian_units: str = "pixel"

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.cg_tolerance <= 0:
            raise ValueError("cg_tolerance must be positive")
        if len(self.rows) == 0:
            raise ValueError("rows must be nonempty")
        if self.laplacian_units not in LAPLACIAN_UNITS:
            raise ValueError(f"laplacian_units must be one of {LAPLACIAN_UNITS}")

    def laplacian_spacing(self) -> tuple:
        if self.laplacian_units == "physical":
            return self.grid.spacing
        return (1.0, 1.0)


@dataclasses.dataclass
class CoreStageSolution:
    """Recovered field plus per-row solver records and the count of
    samples dropped for leaving the grid hull."""

    field: CoreOperatorField
    cg: dict
    dropped_samples: int


def _normal_operator(sample_matrix, velocities, gamma, reg, n_kept):
    n = velocities.shape[1]
    n_pix = sample_matrix.shape[1]

    def apply(x):
        xs = x.reshape(n, n_pix)
        out = np.zeros_like(xs)
        if n_kept > 0:
            t = np.zeros(sample_matrix.shape[0])
            for j in range(n):
                t += (sample_matrix @ xs[j]) * velocities[:, j]
            for j in range(n):
                out[j] = (sample_matrix.T @ (t * velocities[:, j])) / n_kept
        if gamma > 0:
            for j in range(n):
                out[j] += gamma * (reg @ xs[j])
        return out.ravel()

    return apply


def solve_core_stage(
    signal_values: np.ndarray,
    positions: np.ndarray,
    velocities: np.ndarray,
    config: CoreStageConfig,
    scheme: InterpolationScheme | None = None,
) -> CoreStageSolution:
    """Minimize the per-sample misfit ``|s_k - I[A](r_k) v_k|^2`` (mean
    over samples) plus ``gamma ||Laplacian A||^2`` entry-wise, row by row.

    ``signal_values`` carries one column per entry of ``config.rows``.
    Samples outside the grid hull are dropped with a warning; the row
    solves run CG to ``cg_tolerance`` on the relative residual and report
    non-convergence without discarding the iterate.
    """
    if scheme is None:
        scheme = InterpolationScheme()
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    velocities = np.atleast_2d(np.asarray(velocities, dtype=float))
    signal_values = np.atleast_2d(np.asarray(signal_values, dtype=float))
    n = velocities.shape[1]
    rows = tuple(config.rows)
    if any(not 0 <= r < n for r in rows):
        raise ValueError(f"rows {rows} out of range for dimension {n}")
    if signal_values.shape != (positions.shape[0], len(rows)):
        raise ValueError(
            f"signal values must have shape (samples, {len(rows)}), got {signal_values.shape}"
        )
    if not np.all(np.isfinite(velocities)):
        raise ValueError("velocities must be finite")

    inside = config.grid.contains(positions)
    n_kept = int(np.count_nonzero(inside))
    dropped = positions.shape[0] - n_kept
    if dropped:
        warnings.warn(f"dropped {dropped} samples outside the grid hull", stacklevel=2)
    if n_kept == 0 and config.gamma == 0.0:
        raise ValueError("no usable samples and gamma = 0: the normal operator is zero")

    grid = config.grid
    if n_kept > 0:
        sample_matrix = interpolation_matrix(grid, positions[inside], scheme)
        kept_v = velocities[inside]
        kept_s = signal_values[inside]
    else:
        sample_matrix = sp.csr_matrix((0, grid.n_pixels))
        kept_v = velocities[:0]
        kept_s = signal_values[:0]

    lap = laplacian_matrix(grid.shape, config.laplacian_spacing())
    reg = (lap.T @ lap).tocsr()
    operator = _normal_operator(sample_matrix, kept_v, config.gamma, reg, n_kept)

    entries = {}
    cg_records: dict[int, CgResult] = {}
    for idx, row in enumerate(rows):
        b = np.zeros((n, grid.n_pixels))
        if n_kept > 0:
            for j in range(n):
                b[j] = (sample_matrix.T @ (kept_s[:, idx] * kept_v[:, j])) / n_kept
        result = conjugate_gradient(
            operator, b.ravel(), config.cg_tolerance, config.cg_max_iterations
        )
        if not result.converged:
            warnings.warn(
                f"core-stage CG for row {row} stopped at relative residual "
                f"{result.final_residual:.3e} after {result.iterations} iterations",
                stacklevel=2,
            )
        cg_records[row] = result
        solution = result.x.reshape(n, grid.n_pixels)
        for j in range(n):
            entries[(row, j)] = solution[j].reshape(grid.shape)

    field = CoreOperatorField(
        entries=entries, dimension=n, geometry=grid, populated_rows=rows
    )
    return CoreStageSolution(field=field, cg=cg_records, dropped_samples=dropped)


def extract_trace(field: CoreOperatorField) -> np.ndarray:
    """Pixel-wise sum of the diagonal entries; requires all of them."""
    missing = [r for r in range(field.dimension) if not field.has_entry(r, r)]
    if missing:
        raise ValueError(
            f"diagonal entries {missing} are not populated (partial data: "
            "use extract_entry on an available row instead)"
        )
    return sum(field.entry(r, r) for r in range(field.dimension))


def extract_entry(field: CoreOperatorField, row: int, col: int) -> np.ndarray:
    """A single populated entry's image."""
    return field.entry(row, col)
