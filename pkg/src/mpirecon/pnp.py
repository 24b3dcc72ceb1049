"""Zero-shot plug-and-play deconvolution with half-quadratic splitting.

The trace of the core operator is the concentration blurred by the
scalar trace kernel; this module inverts that blur by alternating a
Tikhonov data-fidelity solve with a denoising step, rebalancing the
split automatically: the noise level fed to the denoiser is estimated
from the current data-fidelity iterate as its pixel standard deviation,
and the coupling follows ``nu_k = lam / sigma_k^2`` with ``lam`` frozen
after the first iteration.  Iterates are lower-clipped at a percentile
each round to keep denoiser artifacts from negative-valued regions in
check.

The convolution operator is the plain circular convolution with the
kernel image as given (its scale is the caller's contract; the pipeline
normalizes kernel images to unit sum).
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from .denoisers import DenoiserRef, open_denoiser
from .solvers import CgResult, conjugate_gradient


@dataclasses.dataclass(frozen=True)
class PnPConfig:
    """Loop length, initial coupling, trimming and inner-solver budget."""

    nu0: float = 1e-5
    n_iterations: int = 10
    trim_percentile: float = 5.0
    cg_tolerance: float = 1e-3
    cg_max_iterations: int = 10_000
    denoiser: DenoiserRef = DenoiserRef("total-variation")

    def __post_init__(self):
        if self.nu0 <= 0:
            raise ValueError("nu0 must be positive")
        if not 0 <= self.trim_percentile < 50:
            raise ValueError("trim_percentile must lie in [0, 50)")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be at least 1")


@dataclasses.dataclass
class PnPState:
    """Live iterates of the splitting loop."""

    rho1: np.ndarray
    rho2: np.ndarray
    sigma: float
    nu: float
    lam: float | None


@dataclasses.dataclass
class PnPIterationRecord:
    iteration: int
    nu: float  # coupling used by the Tikhonov step of this iteration
    sigma: float  # noise level estimated from the trimmed iterate
    lam: float  # fixed product after iteration 0
    cg_iterations: int
    cg_residual: float


@dataclasses.dataclass
class PnPDiagnostics:
    records: list
    lam: float | None
    degenerate: bool  # constant iterate forced an early stop


@dataclasses.dataclass
class PnPResult:
    image: np.ndarray
    diagnostics: PnPDiagnostics


def _convolver(kernel_image: np.ndarray):
    spectrum = np.fft.fft2(kernel_image)

    def forward(image):
        return np.real(np.fft.ifft2(np.fft.fft2(image) * spectrum))

    def adjoint(image):
        return np.real(np.fft.ifft2(np.fft.fft2(image) * np.conj(spectrum)))

    return forward, adjoint


def tikhonov_step(
    u: np.ndarray,
    rho2: np.ndarray,
    nu: float,
    kernel_image: np.ndarray,
    cg_tolerance: float = 1e-3,
    cg_max_iterations: int = 10_000,
) -> tuple[np.ndarray, CgResult]:
    """Penalized data-fidelity solve ``(C^T C + nu I) rho1 = C^T u + nu rho2``
    with ``C`` the circular convolution by the kernel image."""
    if u.shape != rho2.shape or u.shape != kernel_image.shape:
        raise ValueError("u, rho2 and kernel image must share one shape")
    if nu <= 0:
        raise ValueError("nu must be positive")
    forward, adjoint = _convolver(kernel_image)
    shape = u.shape

    def operator(x):
        img = x.reshape(shape)
        return (adjoint(forward(img)) + nu * img).ravel()

    b = (adjoint(u) + nu * rho2).ravel()
    result = conjugate_gradient(operator, b, cg_tolerance, cg_max_iterations)
    if not result.converged:
        warnings.warn(
            f"Tikhonov CG stopped at relative residual {result.final_residual:.3e} "
            f"after {result.iterations} iterations",
            stacklevel=2,
        )
    return result.x.reshape(shape), result


def estimate_noise(rho1: np.ndarray) -> float:
    """Noise level as the population standard deviation of the pixels."""
    rho1 = np.asarray(rho1, dtype=float)
    if rho1.size == 0:
        raise ValueError("empty image")
    return float(np.std(rho1))


def percentile_trim(rho1: np.ndarray, percentile: float) -> np.ndarray:
    """Raise values below the given percentile to the percentile value
    (lower clipping; linear interpolation between order statistics)."""
    if not 0 <= percentile < 50:
        raise ValueError("percentile must lie in [0, 50)")
    rho1 = np.asarray(rho1, dtype=float)
    if percentile == 0:
        return rho1.copy()
    return np.maximum(rho1, np.percentile(rho1, percentile))


def denoise(image: np.ndarray, sigma: float, ref, session=None) -> np.ndarray:
    """Denoise at the declared noise level under the normalization contract:
    the image is affinely mapped to [0, 1], ``sigma`` is rescaled by the
    same factor, and the map is inverted afterwards.

    ``ref`` is a DenoiserRef; a ``session`` (an open backend) may be
    passed to reuse one external process across calls.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    image = np.asarray(image, dtype=float)
    low = float(image.min())
    span = float(image.max()) - low
    if span == 0.0:
        return image.copy()
    normalized = (image - low) / span
    backend = session if session is not None else open_denoiser(ref)
    try:
        out = backend(normalized, sigma / span)
    finally:
        if session is None:
            backend.close()
    return out * span + low


def zero_shot_pnp(u: np.ndarray, kernel_image: np.ndarray, config: PnPConfig) -> PnPResult:
    """Run the splitting loop with automatic noise scheduling.

    Per iteration: Tikhonov step at coupling ``nu_k``, percentile trim,
    noise estimation, (first iteration only) ``lam = nu0 sigma^2``,
    denoising at the estimated level, then ``nu_{k+1} = lam / sigma^2``.
    A zero noise estimate means the iterate degenerated to a constant;
    the loop stops early and returns the current denoised iterate.
    """
    u = np.asarray(u, dtype=float)
    state = PnPState(
        rho1=np.zeros_like(u),
        rho2=np.zeros_like(u),
        sigma=0.0,
        nu=config.nu0,
        lam=None,
    )
    records = []
    degenerate = False
    session = open_denoiser(config.denoiser)
    try:
        for k in range(config.n_iterations):
            state.rho1, cg = tikhonov_step(
                u,
                state.rho2,
                state.nu,
                kernel_image,
                config.cg_tolerance,
                config.cg_max_iterations,
            )
            state.rho1 = percentile_trim(state.rho1, config.trim_percentile)
            state.sigma = estimate_noise(state.rho1)
            if k == 0:
                state.lam = config.nu0 * state.sigma**2
            records.append(
                PnPIterationRecord(
                    iteration=k,
                    nu=state.nu,
                    sigma=state.sigma,
                    lam=state.lam,
                    cg_iterations=cg.iterations,
                    cg_residual=cg.final_residual,
                )
            )
            if state.sigma == 0.0:
                degenerate = True
                break
            state.rho2 = denoise(state.rho1, state.sigma, config.denoiser, session=session)
            state.nu = state.lam / state.sigma**2
    finally:
        session.close()
    return PnPResult(
        image=state.rho2,
        diagnostics=PnPDiagnostics(records=records, lam=state.lam, degenerate=degenerate),
    )
