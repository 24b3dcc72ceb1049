"""Closed-form Langevin-model quantities.

The magnetization response of superparamagnetic particles in the
equilibrium (Langevin) approximation induces a matrix-valued convolution
kernel in field space.  This module evaluates the Langevin function and
its derivative, the saturation field scale of a particle ensemble, the
matrix kernel and its trace, and samples either of them on a regular
reconstruction grid.

All evaluations work in normalized field coordinates ``y / h`` to avoid
overflow; ``h`` (ampere per meter) rescales the kernel resolution and is
usually the saturation field of the particles.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .geometry import GridGeometry

BOLTZMANN_CONSTANT = 1.38064852e-23  # J/K
VACUUM_PERMEABILITY = 4.0e-7 * np.pi  # H/m

# Below this argument magnitude the closed forms lose more digits to the
# 1/z^2-style cancellations than the truncated series lose to their z^6
# tails; 2e-2 balances both error sources near 1e-13.
TAYLOR_CUTOFF = 2e-2


@dataclasses.dataclass(frozen=True)
class ParticleModel:
    """Physical parameters of the particle ensemble (all strictly positive)."""

    temperature: float  # K
    saturation_magnetization: float  # J/(m^3 T)
    core_diameter: float  # m
    boltzmann_constant: float = BOLTZMANN_CONSTANT  # J/K
    vacuum_permeability: float = VACUUM_PERMEABILITY  # H/m

    def __post_init__(self):
        for name in dataclasses.fields(self):
            value = getattr(self, name.name)
            if not (value > 0 and np.isfinite(value)):
                raise ValueError(f"ParticleModel.{name.name} must be strictly positive, got {value}")


@dataclasses.dataclass(frozen=True)
class KernelSpec:
    """Resolution scale ``h`` (A/m), scan dimension and series cutoff."""

    h: float
    dimension: int = 2
    taylor_cutoff: float = TAYLOR_CUTOFF

    def __post_init__(self):
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"kernel resolution h must be positive, got {self.h}")
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.taylor_cutoff <= 0:
            raise ValueError("taylor_cutoff must be positive")


def saturation_field(model: ParticleModel) -> float:
    """Saturation field of the ensemble in A/m.

    ``k_b T / (mu0 M_sat (pi/6) d^3)``: thermal energy over the magnetic
    energy of one particle core per unit field.
    """
    core_volume = (np.pi / 6.0) * model.core_diameter**3
    return float(
        model.boltzmann_constant
        * model.temperature
        / (model.vacuum_permeability * model.saturation_magnetization * core_volume)
    )


def langevin(z, cutoff: float = TAYLOR_CUTOFF):
    """Langevin function ``coth(z) - 1/z``.

    Odd, bounded by 1 in magnitude, saturating to +-1 for large arguments.
    Below ``cutoff`` the series ``z/3 - z^3/45 + 2 z^5/945`` is used.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = np.abs(z) < cutoff
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        zz = z[~small]
        out[~small] = 1.0 / np.tanh(zz) - 1.0 / zz
    zs = z[small]
    out[small] = zs / 3.0 - zs**3 / 45.0 + 2.0 * zs**5 / 945.0
    return float(out[0]) if scalar else out


def langevin_prime(z, cutoff: float = TAYLOR_CUTOFF):
    """Derivative of the Langevin function, ``1/z^2 - 1/sinh(z)^2``.

    Even, with values in (0, 1/3]; the limit at zero is 1/3.  Below
    ``cutoff`` the series ``1/3 - z^2/15 + 2 z^4/189`` is used; for very
    large arguments ``1/sinh^2`` overflows and the term is dropped,
    leaving ``1/z^2``.
    """
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = np.abs(z) < cutoff
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        zz = z[~small]
        sinh2 = np.sinh(zz) ** 2
        inv_sinh2 = np.where(np.isinf(sinh2), 0.0, 1.0 / sinh2)
        out[~small] = 1.0 / zz**2 - inv_sinh2
    zs = z[small]
    out[small] = 1.0 / 3.0 - zs**2 / 15.0 + 2.0 * zs**4 / 189.0
    return float(out[0]) if scalar else out


def _langevin_over_z(z, cutoff: float):
    """``L(z)/z`` with its even series ``1/3 - z^2/45 + 2 z^4/945`` near zero."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    small = np.abs(z) < cutoff
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        zz = z[~small]
        out[~small] = (1.0 / np.tanh(zz) - 1.0 / zz) / zz
    zs = z[small]
    out[small] = 1.0 / 3.0 - zs**2 / 45.0 + 2.0 * zs**4 / 945.0
    return out


def _anisotropic_coefficient(z, cutoff: float):
    """``(L'(z) - L(z)/z) / z^2``, the weight of the rank-one part.

    Near zero the closed form is a 0/0 cancellation; the series
    ``-2/45 + 8 z^2/945`` takes over below ``cutoff``.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(z)
    small = np.abs(z) < cutoff
    zz = z[~small]
    out[~small] = (langevin_prime(zz, cutoff) - _langevin_over_z(zz, cutoff)) / zz**2
    zs = z[small]
    out[small] = -2.0 / 45.0 + 8.0 * zs**2 / 945.0
    return out


def _normalized_field(y, spec: KernelSpec):
    """``(y/h, |y/h|)`` with at least one batch axis; single shared code
    path so that identities between kernel flavours hold bit-for-bit."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != spec.dimension:
        raise ValueError(
            f"expected trailing axis of size {spec.dimension}, got shape {y.shape}"
        )
    yh = np.atleast_2d(y) / spec.h
    return yh, np.linalg.norm(yh, axis=-1)


def kernel_matrix(y, spec: KernelSpec) -> np.ndarray:
    """Matrix-valued kernel at field offset ``y`` (A/m), rescaled by ``h``.

    Eigenvalue ``L'(|y/h|)`` along ``y``, ``L(|y/h|)/|y/h|`` on the
    orthogonal complement, both divided by ``h``; continuous limit
    ``I/(3h)`` at the origin.  Symmetric positive semidefinite.
    """
    n = spec.dimension
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise ValueError(f"expected field vector of shape ({n},), got {y.shape}")
    yh, z = _normalized_field(y, spec)
    iso = _langevin_over_z(z, spec.taylor_cutoff)[0]
    aniso = _anisotropic_coefficient(z, spec.taylor_cutoff)[0]
    return (iso * np.eye(n) + aniso * np.outer(yh[0], yh[0])) / spec.h


def kernel_entry(y, row: int, col: int, spec: KernelSpec):
    """Single entry of the matrix kernel; ``y`` may carry leading batch axes."""
    n = spec.dimension
    if not (0 <= row < n and 0 <= col < n):
        raise IndexError(f"entry ({row}, {col}) out of range for dimension {n}")
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 1
    yh, z = _normalized_field(y, spec)
    aniso = _anisotropic_coefficient(z, spec.taylor_cutoff)
    value = aniso * yh[..., row] * yh[..., col]
    if row == col:
        value = value + _langevin_over_z(z, spec.taylor_cutoff)
    value = value / spec.h
    return float(value[0]) if scalar else value


def trace_kernel(y, spec: KernelSpec):
    """Trace of the matrix kernel: ``(L'(z) + (n-1) L(z)/z) / h`` with
    ``z = |y/h|``.

    Radially symmetric, strictly positive, peaking at ``n/(3h)`` in the
    origin.  ``y`` may carry leading batch axes.
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 1
    _, z = _normalized_field(y, spec)
    value = (
        langevin_prime(z, spec.taylor_cutoff)
        + (spec.dimension - 1) * _langevin_over_z(z, spec.taylor_cutoff)
    ) / spec.h
    return float(value[0]) if scalar else value


def _wrap_offsets(n: int) -> np.ndarray:
    """Signed pixel offsets in circular-convolution order: 0, 1, ..., -1."""
    k = np.arange(n)
    return np.where(k <= (n - 1) // 2, k, k - n)


def discretize_kernel(
    grid: GridGeometry,
    spec: KernelSpec,
    entry_selector,
    gradient,
) -> np.ndarray:
    """Sample a kernel entry on the pixel-offset lattice of ``grid``.

    ``entry_selector`` is the string ``"trace"`` or a ``(row, col)`` pair.
    ``gradient`` holds the per-axis diagonal entries of the selection-field
    gradient in (A/m)/m; pixel offsets are mapped to field space through it
    before evaluation.  The returned image has the same pixel count as the
    grid, with the kernel peak on the zero-shift pixel ``[0, 0]`` of the
    circular-convolution convention (values are raw kernel samples, no
    pixel-area factor).
    """
    if spec.dimension != 2:
        raise ValueError("kernel discretization is defined for 2D scans only")
    gradient = np.asarray(gradient, dtype=float).reshape(-1)
    if gradient.shape != (2,):
        raise ValueError(f"expected 2 gradient diagonal entries, got {gradient.shape}")
    h_pix, w_pix = grid.shape
    off_x = _wrap_offsets(w_pix) * grid.spacing[0] * gradient[0]
    off_y = _wrap_offsets(h_pix) * grid.spacing[1] * gradient[1]
    field = np.stack(np.meshgrid(off_x, off_y), axis=-1)  # (H, W, 2)
    if entry_selector == "trace":
        return trace_kernel(field, spec)
    row, col = entry_selector
    return kernel_entry(field, int(row), int(col), spec)
