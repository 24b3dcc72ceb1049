"""Matrix-free conjugate gradient for symmetric positive semidefinite systems."""

from __future__ import annotations

import dataclasses

import numpy as np


@dataclasses.dataclass
class CgResult:
    """Solution plus convergence record of one CG run.

    ``residuals[k]`` is the relative residual norm ||b - A x_k|| / ||b||
    after iteration k (entry 0 is the initial residual).
    """

    x: np.ndarray
    iterations: int
    residuals: list
    converged: bool

    @property
    def final_residual(self) -> float:
        return self.residuals[-1]


def conjugate_gradient(
    operator,
    b: np.ndarray,
    tolerance: float,
    max_iterations: int,
    x0: np.ndarray | None = None,
) -> CgResult:
    """Solve ``operator(x) = b`` by plain (unpreconditioned) CG.

    ``operator`` must be a symmetric positive semidefinite callable.
    Terminates when the relative residual norm drops to ``tolerance`` or
    after ``max_iterations``; the iterate is returned either way.
    """
    b = np.asarray(b, dtype=float)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return CgResult(x=np.zeros_like(b), iterations=0, residuals=[0.0], converged=True)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - operator(x) if x0 is not None else b.copy()
    p = r.copy()
    rr = float(r @ r)
    residuals = [np.sqrt(rr) / b_norm]
    iterations = 0
    for _ in range(max_iterations):
        if residuals[-1] <= tolerance:
            break
        ap = operator(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            break  # operator numerically lost definiteness along p
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        rr_next = float(r @ r)
        residuals.append(np.sqrt(rr_next) / b_norm)
        p = r + (rr_next / rr) * p
        rr = rr_next
        iterations += 1
    return CgResult(
        x=x,
        iterations=iterations,
        residuals=residuals,
        converged=residuals[-1] <= tolerance,
    )
