"""FFP scanner geometry and scanning trajectories.

A field-free-point scanner superposes a static selection field with a
diagonal gradient on a spatially homogeneous drive field, so the applied
field is ``H(x, t) = G (x - r(t))`` with the field-free point ``r(t)``
tracing the scanning trajectory.  Gradient and drive amplitudes are
stored mu0-scaled (tesla per meter, tesla), the convention scanner data
sheets use; division by mu0 recovers A/m units.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .kernels import VACUUM_PERMEABILITY


@dataclasses.dataclass(frozen=True)
class ScannerConfig:
    """Static description of a 2D FFP scan sequence.

    gradient          -- per-axis diagonal entries of mu0*G in T/m
    drive_amplitudes  -- per-axis drive amplitude in T (mu0-scaled)
    drive_frequencies -- per-axis drive frequency in Hz
    sample_rate       -- acquisition rate in Hz
    repetition_time   -- length of one drive period in s
    excitation_*      -- optional fast 1D excitation superposed on x
    sensitivity       -- constant receive-coil sensitivity matrix
    """

    gradient: tuple
    drive_amplitudes: tuple
    drive_frequencies: tuple
    sample_rate: float
    repetition_time: float
    excitation_amplitude: float | None = None
    excitation_frequency: float | None = None
    sensitivity: np.ndarray | None = None
    vacuum_permeability: float = VACUUM_PERMEABILITY

    def __post_init__(self):
        g = np.asarray(self.gradient, dtype=float)
        if np.any(g == 0.0) or not np.all(np.isfinite(g)):
            raise ValueError("gradient diagonal entries must be nonzero and finite")
        n_samples = self.sample_rate * self.repetition_time
        if n_samples <= 0 or abs(n_samples - round(n_samples)) > 1e-9 * max(n_samples, 1.0):
            raise ValueError(
                "sample_rate * repetition_time must be a positive integer, "
                f"got {n_samples}"
            )

    @property
    def dimension(self) -> int:
        return len(self.gradient)

    @property
    def samples_per_period(self) -> int:
        return int(round(self.sample_rate * self.repetition_time))

    def gradient_field(self) -> np.ndarray:
        """Per-axis gradient diagonal in (A/m) per meter."""
        return np.asarray(self.gradient, dtype=float) / self.vacuum_permeability

    def position_amplitudes(self) -> np.ndarray:
        """Per-axis FFP excursion in meters: drive amplitude over |gradient|."""
        return np.asarray(self.drive_amplitudes, dtype=float) / np.abs(
            np.asarray(self.gradient, dtype=float)
        )

    def sensitivity_matrix(self) -> np.ndarray:
        if self.sensitivity is None:
            return np.eye(self.dimension)
        return np.asarray(self.sensitivity, dtype=float)


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """Time-stamped FFP positions and velocities (SI units).

    ``source`` records whether velocities are analytic derivatives or
    forward differences of sampled positions.
    """

    times: np.ndarray  # (L,) s
    positions: np.ndarray  # (L, n) m
    velocities: np.ndarray  # (L, n) m/s
    source: str  # "analytic" | "sampled"

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "velocities", np.asarray(self.velocities, dtype=float))
        if self.positions.shape != self.velocities.shape:
            raise ValueError("positions and velocities must have equal shapes")
        if self.positions.shape[0] != self.times.shape[0]:
            raise ValueError("times length does not match positions")
        if self.source not in ("analytic", "sampled"):
            raise ValueError(f"unknown trajectory source {self.source!r}")

    def __len__(self) -> int:
        return self.times.shape[0]


def _period_times(config: ScannerConfig, sample_count: int | None) -> np.ndarray:
    if sample_count is None:
        sample_count = config.samples_per_period
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    return config.repetition_time * np.arange(sample_count) / sample_count


def lissajous(config: ScannerConfig, sample_count: int | None = None) -> Trajectory:
    """Co-sinusoidal trajectory ``r_i(t) = A_i cos(2 pi f_i t)`` over one
    repetition period, with analytic velocities.

    Position amplitudes are the drive amplitudes divided by the absolute
    gradient entry per axis.
    """
    t = _period_times(config, sample_count)
    amps = config.position_amplitudes()
    freqs = np.asarray(config.drive_frequencies, dtype=float)
    phase = 2.0 * np.pi * freqs[None, :] * t[:, None]
    positions = amps[None, :] * np.cos(phase)
    velocities = -2.0 * np.pi * freqs[None, :] * amps[None, :] * np.sin(phase)
    return Trajectory(times=t, positions=positions, velocities=velocities, source="analytic")


def excited_trajectory(config: ScannerConfig, sample_count: int | None = None) -> Trajectory:
    """Sinusoidal trajectory with a fast 1D excitation superposed on x:
    ``r_x = A_x sin(2 pi f_x t) + A_e sin(2 pi f_e t)``,
    ``r_y = A_y sin(2 pi f_y t)``; analytic velocities."""
    if config.excitation_amplitude is None or config.excitation_frequency is None:
        raise ValueError("excitation amplitude and frequency must be set")
    t = _period_times(config, sample_count)
    amps = config.position_amplitudes()
    freqs = np.asarray(config.drive_frequencies, dtype=float)
    a_exc = config.excitation_amplitude / abs(config.gradient[0])
    f_exc = config.excitation_frequency

    phase = 2.0 * np.pi * freqs[None, :] * t[:, None]
    positions = amps[None, :] * np.sin(phase)
    velocities = 2.0 * np.pi * freqs[None, :] * amps[None, :] * np.cos(phase)
    exc_phase = 2.0 * np.pi * f_exc * t
    positions[:, 0] += a_exc * np.sin(exc_phase)
    velocities[:, 0] += 2.0 * np.pi * f_exc * a_exc * np.cos(exc_phase)
    return Trajectory(times=t, positions=positions, velocities=velocities, source="analytic")


def trajectory_from_samples(positions: np.ndarray, times: np.ndarray) -> Trajectory:
    """Trajectory from sampled positions, velocities by forward differences.

    ``v_k = (r_{k+1} - r_k) / (t_{k+1} - t_k)``; the final sample repeats
    the last computed velocity so the trajectory keeps its length.
    """
    positions = np.asarray(positions, dtype=float)
    times = np.asarray(times, dtype=float)
    if positions.ndim != 2 or positions.shape[0] < 2:
        raise ValueError("need at least two position samples")
    if times.shape != (positions.shape[0],):
        raise ValueError("times must be one value per position sample")
    dt = np.diff(times)
    if np.any(dt <= 0):
        raise ValueError("times must be strictly increasing")
    velocities = np.empty_like(positions)
    velocities[:-1] = np.diff(positions, axis=0) / dt[:, None]
    velocities[-1] = velocities[-2]
    return Trajectory(times=times, positions=positions, velocities=velocities, source="sampled")


def decimate(trajectory: Trajectory, keep_every: int) -> Trajectory:
    """Keep every ``keep_every``-th sample; velocities carry over unchanged
    (they were computed at the full rate first)."""
    if keep_every < 1:
        raise ValueError("keep_every must be at least 1")
    sl = slice(None, None, keep_every)
    return Trajectory(
        times=trajectory.times[sl],
        positions=trajectory.positions[sl],
        velocities=trajectory.velocities[sl],
        source=trajectory.source,
    )


def field_at(config: ScannerConfig, x, t_index: int, trajectory: Trajectory) -> np.ndarray:
    """Applied field ``G (x - r(t))`` in A/m at position ``x`` and sample
    ``t_index`` of the trajectory."""
    x = np.asarray(x, dtype=float)
    return config.gradient_field() * (x - trajectory.positions[t_index])
