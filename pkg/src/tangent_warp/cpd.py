"""Non-rigid coherent point drift.

The reference set ``Y`` (M x D) is treated as the centroids of an
equal-weight Gaussian mixture, optionally mixed with a uniform outlier
density ``1 / area`` of weight ``omega``.  EM alternates the posterior of
every observation ``X`` (N x D) over the centroids with a regularized update
of the displacement field ``f(y) = y + sum_m w_m exp(-|y - y_m|^2 / 2 beta^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIGMA2_FLOOR = 1e-12


class RegistrationError(RuntimeError):
    """Raised when EM produces a singular system or non-finite values."""


@dataclass(frozen=True)
class RegistrationConfig:
    lam: float = 10.0
    omega: float = 0.0
    beta: float = 1.0
    max_iter: int = 100
    tol: float = 1e-8
    area: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not 0 <= self.omega < 1:
            raise ValueError(f"omega must lie in [0, 1), got {self.omega}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if self.omega > 0 and not (self.area is not None and self.area > 0):
            raise ValueError("area must be > 0 when omega > 0")


@dataclass(eq=False)
class RegistrationResult:
    """Outcome of :func:`cpd_register`.

    ``Y``, ``G`` and ``beta`` are kept so the fitted field can be applied to
    points other than the reference set (see :meth:`apply`).
    """

    W: np.ndarray
    Z: np.ndarray
    P: np.ndarray
    sigma2: float
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    Y: np.ndarray | None = None
    G: np.ndarray | None = None
    beta: float = 1.0

    def apply(self, points) -> np.ndarray:
        """Evaluate the fitted map at arbitrary points."""
        return warp_points(points, self.Y, self.W, self.beta)


def _check_set(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or len(a) == 0:
        raise ValueError(f"{name} must be a non-empty (n, D) array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def sq_distances(A, B) -> np.ndarray:
    """Squared Euclidean distances, ``out[i, j] = |A_i - B_j|^2``."""
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def gaussian_kernel(Y, beta: float = 1.0) -> np.ndarray:
    Y = _check_set(Y, "Y")
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    return np.exp(-sq_distances(Y, Y) / (2.0 * beta * beta))


def initial_sigma2(X, Y) -> float:
    X = _check_set(X, "X")
    Y = _check_set(Y, "Y")
    N, D = X.shape
    M = len(Y)
    return float(sq_distances(X, Y).sum() / (D * M * N))


def _outlier_log_term(M, D, sigma2, omega, area):
    # log of omega/(1-omega) * M * (2 pi sigma2)^(D/2) / area
    return (np.log(omega) - np.log1p(-omega) + np.log(M)
            + 0.5 * D * np.log(2 * np.pi * sigma2) - np.log(area))


def posterior(X, Z, sigma2: float, omega: float = 0.0, area: float | None = None) -> np.ndarray:
    """Posterior ``P[m, n] = p(m | x_n)`` of centroid ``m`` given observation ``n``.

    Columns are normalized in the log domain, so far-away observations do not
    underflow to an all-zero column.  The outlier share of column ``n`` is
    ``1 - P[:, n].sum()``.
    """
    X = _check_set(X, "X")
    Z = _check_set(Z, "Z")
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    M, D = Z.shape
    logk = -sq_distances(Z, X) / (2.0 * sigma2)
    kmax = logk.max(axis=0)
    num = np.exp(logk - kmax)
    den = num.sum(axis=0)
    if omega > 0:
        if area is None or not area > 0:
            raise ValueError("area must be > 0 when omega > 0")
        with np.errstate(over="ignore"):
            den = den + np.exp(_outlier_log_term(M, D, sigma2, omega, area) - kmax)
    return num / den


def m_step(X, Y, P, G, lam: float, sigma2: float):
    """Update the kernel weights and the variance for fixed posteriors.

    Solves ``(diag(P1) G + lam sigma2 I) W = P X - diag(P1) Y``, which is the
    usual CPD system multiplied through by ``diag(P1)`` so centroids that own
    no posterior mass simply get ``w_m = 0``.  Returns ``(W, sigma2_new)``;
    ``sigma2_new`` below :data:`SIGMA2_FLOOR` signals a collapse.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    M, D = Y.shape
    P1 = P.sum(axis=1)
    Pt1 = P.sum(axis=0)
    PX = P @ X
    A = P1[:, None] * G + lam * sigma2 * np.eye(M)
    # sum_n P[m, n] (x_n - y_m) summed directly: forming P X - diag(P1) Y
    # cancels to roundoff when X is close to Y, and near collapse that
    # roundoff is divided by lam * sigma2 along the null space of G
    B = np.einsum("mn,mnd->md", P, X[None, :, :] - Y[:, None, :])
    try:
        W = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise RegistrationError(
            f"singular M-step system (M={M}, sigma2={sigma2:.3g}, "
            f"min row mass={P1.min():.3g}): {exc}") from exc
    Z = Y + G @ W
    Np = P1.sum()
    if Np <= 0:
        return W, 0.0
    resid = (np.einsum("n,nd,nd->", Pt1, X, X)
             - 2.0 * np.einsum("md,md->", PX, Z)
             + np.einsum("m,md,md->", P1, Z, Z))
    return W, max(float(resid / (Np * D)), 0.0)


def transform(Y, W, G) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    W = np.asarray(W, dtype=float)
    G = np.asarray(G, dtype=float)
    if W.shape != Y.shape or G.shape != (len(Y), len(Y)):
        raise ValueError(f"shape mismatch: Y {Y.shape}, W {W.shape}, G {G.shape}")
    return Y + G @ W


def warp_points(points, Y, W, beta: float = 1.0) -> np.ndarray:
    """Apply ``f(x) = x + sum_m w_m G(x, y_m)`` to arbitrary points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        return warp_points(pts[None, :], Y, W, beta)[0]
    if len(pts) == 0:
        return pts.copy()
    K = np.exp(-sq_distances(pts, np.asarray(Y, dtype=float)) / (2.0 * beta * beta))
    return pts + K @ np.asarray(W, dtype=float)


def objective(X, Z, P, W, G, sigma2: float, lam: float = 10.0, omega: float = 0.0,
              area: float | None = None) -> float:
    """Jensen upper bound on the negative log-likelihood plus the regularizer.

    All constants are kept, so the value is the literal double sum over
    observations and mixture components (outlier component included), plus
    ``lam / 2 * tr(W^T G W)``.
    """
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    M, D = Z.shape
    Np = P.sum()
    data = (np.sum(P * sq_distances(Z, X)) / (2.0 * sigma2)
            + 0.5 * D * Np * np.log(2 * np.pi * sigma2)
            - Np * np.log((1.0 - omega) / M))
    if omega > 0:
        out_mass = np.sum(1.0 - P.sum(axis=0))
        data -= out_mass * (np.log(omega) - np.log(area))
    reg = 0.5 * lam * np.trace(W.T @ G @ W)
    return float(data + reg)


def _posterior_entropy(P):
    out = np.clip(1.0 - P.sum(axis=0), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.sum(np.where(P > 0, P * np.log(P), 0.0))
        h -= np.sum(np.where(out > 0, out * np.log(out), 0.0))
    return float(h)


def cpd_register(X, Y, config: RegistrationConfig | None = None) -> RegistrationResult:
    """Register the reference set ``Y`` onto the observations ``X``.

    ``objective_trace`` holds, per iteration, the bound from :func:`objective`
    minus the entropy of the posteriors it was evaluated with.  That is the EM
    free energy: the M-step minimizes it for fixed posteriors and the E-step
    for fixed parameters, so the trace never increases.  Iteration stops when
    it drops by less than ``config.tol``, when the variance collapses below
    :data:`SIGMA2_FLOOR`, or after ``config.max_iter`` iterations.
    """
    cfg = config or RegistrationConfig()
    X = _check_set(X, "X")
    Y = _check_set(Y, "Y")
    if len(X) < 2 or len(Y) < 2:
        raise ValueError("both point sets need at least 2 points")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: X is {X.shape[1]}-D, Y is {Y.shape[1]}-D")
    M, D = Y.shape
    G = gaussian_kernel(Y, cfg.beta)
    W = np.zeros_like(Y)
    Z = Y.copy()
    sigma2 = initial_sigma2(X, Y)
    if sigma2 < SIGMA2_FLOOR:
        P = posterior(X, Z, 1.0, cfg.omega, cfg.area)
        return RegistrationResult(W, Z, P, sigma2, [], 0, True, Y, G, cfg.beta)

    trace = []
    converged = False
    collapsed = False
    it = 0
    P = None
    while it < cfg.max_iter:
        it += 1
        P = posterior(X, Z, sigma2, cfg.omega, cfg.area)
        W_new, sigma2_new = m_step(X, Y, P, G, cfg.lam, sigma2)
        Z_new = transform(Y, W_new, G)
        if not (np.all(np.isfinite(W_new)) and np.isfinite(sigma2_new)):
            raise RegistrationError(f"non-finite values at iteration {it}")
        W, Z = W_new, Z_new
        final = collapsed
        if sigma2_new < SIGMA2_FLOOR:
            # W was solved with the pre-collapse variance; take one more step
            # at the floor so W and P agree with the collapsed state
            collapsed = True
        sigma2 = max(sigma2_new, SIGMA2_FLOOR)
        value = objective(X, Z, P, W, G, sigma2, cfg.lam, cfg.omega, cfg.area) \
            - _posterior_entropy(P)
        if not np.isfinite(value):
            raise RegistrationError(f"non-finite objective at iteration {it}")
        trace.append(value)
        if final:
            sigma2 = max(sigma2_new, 0.0)
            break
        if not collapsed and len(trace) > 1 and abs(trace[-2] - trace[-1]) < cfg.tol:
            converged = True
            break
    converged = converged or collapsed

    return RegistrationResult(W=W, Z=Z, P=P, sigma2=float(sigma2), objective_trace=trace,
                              iterations=it, converged=converged, Y=Y, G=G, beta=cfg.beta)
