"""Low-rank matrix completion by singular value thresholding.

Solves the nuclear-norm completion program (equality-constrained when the
observations are clean, Frobenius-ball-constrained when they are noisy) with
the SVT iteration, and provides the diagnostics that predict when completion
works: subspace coherence, the sample-count bound, the noise radius, and the
recovery-error bound, plus the error metrics the experiments report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sampling import ObservedMatrix

_ORTHO_TOL = 1e-10
# Relative residual past which the SVT iteration is declared divergent.
_DIVERGENCE_LIMIT = 1e6


@dataclass
class SvtParams:
    """Solver knobs; ``None`` means derive the standard default at solve time.

    tau defaults to 5 * sqrt(n1 * n2) (five times the geometric-mean
    dimension) and step to 1.2 / p with p the occupancy ratio.  When
    noise_radius is set the iteration also stops once the observed residual
    ||P(X - Y)||_F falls inside that ball.
    """

    tau: float | None = None
    step: float | None = None
    tol: float = 1e-4
    max_iter: int = 500
    noise_radius: float | None = None

    def __post_init__(self) -> None:
        if self.tau is not None and not self.tau > 0.0:
            raise ValueError("tau must be positive")
        if self.step is not None and not self.step > 0.0:
            raise ValueError("step must be positive")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.noise_radius is not None and self.noise_radius < 0.0:
            raise ValueError("noise_radius must be nonnegative")


@dataclass
class CompletionResult:
    """Outcome of one completion solve."""

    recovered: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))


@dataclass(frozen=True)
class CoherenceReport:
    """Coherence diagnostics of a matrix at a given rank.

    mu_u and mu_v are the coherences of the left and right singular
    subspaces, each in [1, n/r]; mu_max is their maximum; mu1 scales the
    largest entry of sum_k u_k v_k^H by sqrt(n1 n2 / r).
    """

    rank_used: int
    mu_u: float
    mu_v: float
    mu_max: float
    mu1: float


def shrink_singular_values(m: np.ndarray, tau: float) -> np.ndarray:
    """Soft-threshold the singular values of a matrix by tau."""
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ vh


def svt_complete(observed: ObservedMatrix,
                 params: SvtParams | None = None) -> CompletionResult:
    """Complete a partially observed matrix by the SVT iteration.

    Iterates X_k = shrink(Y_{k-1}, tau); Y_k = Y_{k-1} + step * P(M - X_k),
    with the dual variable kick-started at k0 * step * P(M) so the first
    shrinkage is not all-zero.  Convergence means the relative observed
    residual ||P(X - M)||_F / ||P(M)||_F fell below tol, or the residual
    entered the noise_radius ball when one is set.  Non-convergence is
    reported through the flag, never raised; a divergent run (possible when
    the step is large and few entries are observed) stops early and returns
    the lowest-residual iterate seen instead of the runaway one.
    """
    if params is None:
        params = SvtParams()
    mask = observed.mask.bool_array()
    m_count = observed.mask.num_observed
    if m_count < 1:
        raise ValueError("need at least one observed entry")
    y = np.asarray(observed.values, dtype=complex)
    if not np.all(np.isfinite(y.real)) or not np.all(np.isfinite(y.imag)):
        raise ValueError("observed entries must be finite")
    n1, n2 = y.shape
    p = m_count / (n1 * n2)
    tau = params.tau if params.tau is not None else 5.0 * math.sqrt(n1 * n2)
    step = params.step if params.step is not None else 1.2 / p

    norm_obs = np.linalg.norm(y)
    if norm_obs == 0.0:
        return CompletionResult(recovered=np.zeros_like(y), iterations=0,
                                final_residual=0.0, converged=True,
                                residuals=np.zeros(0))
    k0 = math.ceil(tau / (step * np.linalg.norm(y, 2)))
    dual = (k0 * step) * y

    x = np.zeros_like(y)
    best_x = x
    best_rel = math.inf
    rel = math.inf
    residuals: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, params.max_iter + 1):
        x = shrink_singular_values(dual, tau)
        resid = (x - y) * mask
        resid_norm = float(np.linalg.norm(resid))
        rel = resid_norm / norm_obs
        residuals.append(rel)
        if rel < best_rel:
            best_rel = rel
            best_x = x
        if rel <= params.tol:
            converged = True
            break
        if params.noise_radius is not None and resid_norm <= params.noise_radius:
            converged = True
            break
        # Runaway residual means the step is too large for this mask; stop
        # before the dual overflows and fall back to the best iterate seen.
        if rel > _DIVERGENCE_LIMIT:
            x, rel = best_x, best_rel
            break
        dual -= step * resid
        if not np.all(np.isfinite(dual)):
            x, rel = best_x, best_rel
            break
    return CompletionResult(recovered=x, iterations=iterations,
                            final_residual=rel, converged=converged,
                            residuals=np.asarray(residuals))


def coherence_of_subspace(basis: np.ndarray) -> float:
    """Coherence of the subspace spanned by orthonormal columns.

    (n / r) * max_i ||P e_i||^2, which for an orthonormal basis is n/r times
    the largest squared row norm.  Ranges from 1 (spread evenly over
    coordinates) to n/r (aligned with coordinate axes).
    """
    b = np.asarray(basis)
    if b.ndim != 2 or b.shape[1] < 1:
        raise ValueError("basis must be a 2-D array with at least one column")
    n, r = b.shape
    gram = b.conj().T @ b
    if np.max(np.abs(gram - np.eye(r))) > _ORTHO_TOL:
        raise ValueError("basis columns must be orthonormal")
    return n / r * float(np.max(np.sum(np.abs(b) ** 2, axis=1)))


def matrix_coherence(m: np.ndarray, rank_threshold: float = 1e-8,
                     rank: int | None = None) -> CoherenceReport:
    """Coherence report of a matrix from its compact SVD.

    The rank defaults to the numerical rank (singular values above
    rank_threshold * sigma_1); pass ``rank`` to evaluate the report at an
    assumed rank instead, e.g. at the target count when the true rank may
    have collapsed below it.
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError("input must be a matrix")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0.0:
        raise ValueError("coherence of the zero matrix is undefined")
    if rank is None:
        r = int(np.count_nonzero(s > rank_threshold * s[0]))
    else:
        if not 1 <= rank <= min(a.shape):
            raise ValueError("rank must lie in [1, min(n1, n2)]")
        r = rank
    n1, n2 = a.shape
    ur = u[:, :r]
    vr = vh[:r].conj().T
    mu_u = coherence_of_subspace(ur)
    mu_v = coherence_of_subspace(vr)
    e = ur @ vh[:r]
    mu1 = float(np.max(np.abs(e))) * math.sqrt(n1 * n2 / r)
    return CoherenceReport(rank_used=r, mu_u=mu_u, mu_v=mu_v,
                           mu_max=max(mu_u, mu_v), mu1=mu1)


def theorem1_bound(n1: int, n2: int, r: int, mu0: float, mu1: float,
                   beta: float, constant: float = 1.0
                   ) -> tuple[float, float | None]:
    """Sample counts that guarantee exact completion with high probability.

    Returns (required, improved): the generic count
    C * max(mu1^2, sqrt(mu0) * mu1, mu0 * n^(1/4)) * n * r * beta * log(n)
    with n = max(n1, n2), and the smaller count C * mu0 * n^(6/5) * r * beta
    * log(n) available when r <= n^(1/5) / mu0 (None otherwise).  Reporting
    aid only; the constants are not pinned by theory.
    """
    if beta <= 2.0:
        raise ValueError("beta must exceed 2")
    if constant <= 0.0:
        raise ValueError("constant must be positive")
    if r < 1 or n1 < 1 or n2 < 1:
        raise ValueError("dimensions and rank must be positive")
    if not mu0 > 0.0 or not mu1 > 0.0:
        raise ValueError("coherences must be positive")
    n = max(n1, n2)
    generic = (constant * max(mu1 ** 2, math.sqrt(mu0) * mu1, mu0 * n ** 0.25)
               * n * r * beta * math.log(n))
    improved = None
    if r <= n ** 0.2 / mu0:
        improved = constant * mu0 * n ** 1.2 * r * beta * math.log(n)
    return generic, improved


def noise_radius(m: int, sigma: float) -> float:
    """Frobenius radius of the observed-noise ball: sigma * sqrt(m + sqrt(8m))."""
    if m < 1:
        raise ValueError("m must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be nonnegative")
    return sigma * math.sqrt(m + math.sqrt(8.0 * m))


def recovery_error_bound(p: float, n1: int, n2: int, delta: float) -> float:
    """Worst-case Frobenius recovery error for noisy completion.

    4 * sqrt((2 + p) / p * min(n1, n2)) * delta + 2 * delta, for occupancy
    ratio p in (0, 1].
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("occupancy must lie in (0, 1]")
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    return 4.0 * math.sqrt((2.0 + p) / p * min(n1, n2)) * delta + 2.0 * delta


def relative_error(zhat: np.ndarray, z: np.ndarray) -> float:
    """||Zhat - Z||_F / ||Z||_F against a nonzero reference."""
    a = np.asarray(getattr(zhat, "values", zhat))
    b = np.asarray(getattr(z, "values", z))
    denom = np.linalg.norm(b)
    if denom == 0.0:
        raise ValueError("reference matrix must be nonzero")
    return float(np.linalg.norm(a - b) / denom)


def samples_per_df(m: int, n1: int, n2: int, r: int) -> float:
    """Observed samples per degree of freedom, m / (r * (n1 + n2 - r))."""
    if r < 1 or r > min(n1, n2):
        raise ValueError("rank must lie in [1, min(n1, n2)]")
    if m < 0:
        raise ValueError("m must be nonnegative")
    return m / (r * (n1 + n2 - r))
