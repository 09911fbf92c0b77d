"""Parametric nearest-neighbour model for persistence diagram points.

Diagram points are first mapped to x = (birth, persistence), which lives in
the half plane R x R+.  The RST model for such a set combines a KDE shape
term raised to a nonnegative power alpha with an exponential interaction in
the nearest-neighbour distances, with one coefficient theta_k per neighbour
order up to the cluster size K.  The conditional density of a point given
its K nearest neighbours y_1..y_K is

    f(x | y) = KDE(x)^alpha * exp(-sum_k theta_k d_(k)(x))
               / integral over the box of the same expression in z,

where d_(k)(z) is the k-th smallest Euclidean distance from z to the
neighbour set.  The log pseudolikelihood sums the per-point log conditional
densities; the KDE is the Gaussian estimator fitted on the transformed
points themselves, with Silverman's rule for its bandwidth unless one is
given.  The normalizing integral is a tensor-grid trapezoid quadrature over
a box clipped to persistence >= 0.

Fitting alternates a bisection step for alpha (on the finite-difference
derivative of the profile log pseudolikelihood) with a Nelder-Mead step for
theta, until the objective is stationary.  Parameter variances come from
the inverse observed information (finite-difference Hessian in theta).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .kde import SUPERLEVEL, kde_values
from .persistence import PersistenceDiagram


class DegenerateModelError(RuntimeError):
    """The model cannot be evaluated on this data (vanishing normalizer,
    zero spread, ...); the §4-style 'not fittable' situation."""


class VarianceUnavailableError(RuntimeError):
    """The observed information at the optimum is singular or not positive."""


class FitFailedError(RuntimeError):
    """No joint convergence; carries the best iterate found."""

    def __init__(self, message, alpha=None, theta=None, log_pl=None):
        super().__init__(message)
        self.alpha = alpha
        self.theta = theta
        self.log_pl = log_pl


@dataclass(frozen=True)
class RstConfig:
    """Model and optimizer settings.

    k: cluster size (number of neighbour orders / theta coefficients).
    alpha_range: search interval for the KDE exponent.
    bandwidth: diagram-space KDE bandwidth; Silverman's rule when None.
    integration_box: ((x1_lo, x1_hi), (x2_lo, x2_hi)); automatic when None
        (transformed bounding box widened by box_margin bandwidths, clipped
        to x2 >= 0).
    quadrature: trapezoid nodes per axis for the normalizing integral.
    """

    k: int = 3
    alpha_range: tuple[float, float] = (0.0, 3.0)
    bandwidth: float | None = None
    integration_box: tuple[tuple[float, float], tuple[float, float]] | None = None
    quadrature: tuple[int, int] = (64, 64)
    box_margin: float = 3.0
    max_outer: int = 50
    outer_tol: float = 1e-8
    alpha_tol: float = 1e-4
    theta_xatol: float = 1e-5
    theta_fatol: float = 1e-9


@dataclass(frozen=True)
class RstFit:
    """Fitted model: exponent, interaction coefficients, their variances,
    and the attained log pseudolikelihood."""

    alpha: float
    theta: np.ndarray
    variances: np.ndarray
    log_pl: float
    k: int

    def to_dict(self) -> dict:
        return {
            "alpha": float(self.alpha),
            "theta": [float(v) for v in self.theta],
            "variances": [float(v) for v in self.variances],
            "log_pl": float(self.log_pl),
            "k": int(self.k),
        }


def transform(diagram: PersistenceDiagram) -> np.ndarray:
    """Map a diagram to (birth, persistence) points in R x R+."""
    if len(diagram) == 0:
        raise ValueError("cannot transform an empty diagram")
    if diagram.direction == SUPERLEVEL:
        x2 = diagram.births - diagram.deaths
    else:
        x2 = diagram.deaths - diagram.births
    if (x2 < 0).any():
        raise ValueError("diagram has points with negative persistence for its direction")
    return np.column_stack([diagram.births, x2])


def _distance_matrix(pts: np.ndarray) -> np.ndarray:
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(d, np.inf)
    return d


def nn_stat(points, k: int) -> float:
    """Sum over all points of the distance to their k-th nearest neighbour.

    Equidistant neighbours are ordered by point index (stable sort), which
    does not change the summed distance.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if pts.shape[0] <= k:
        raise ValueError(f"need more than {k} points, got {pts.shape[0]}")
    d = _distance_matrix(pts)
    order = np.argsort(d, axis=1, kind="stable")
    kth = order[:, k - 1]
    return float(d[np.arange(pts.shape[0]), kth].sum())


def silverman_bandwidth(points) -> float:
    """Silverman's rule for a 2-D scalar-bandwidth Gaussian KDE."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n < 2:
        raise DegenerateModelError("need at least 2 points for a bandwidth")
    sigma = float(np.sqrt(pts.var(axis=0, ddof=1).mean()))
    if sigma <= 0.0 or not np.isfinite(sigma):
        raise DegenerateModelError("points have zero spread; KDE bandwidth undefined")
    # d = 2 makes the (4 / (d + 2))^(1/(d+4)) prefactor equal to 1
    return sigma * n ** (-1.0 / 6.0)


def _integration_box(pts: np.ndarray, bandwidth: float, margin: float):
    lo = pts.min(axis=0) - margin * bandwidth
    hi = pts.max(axis=0) + margin * bandwidth
    lo[1] = max(0.0, lo[1])
    return ((float(lo[0]), float(hi[0])), (float(lo[1]), float(hi[1])))


def _trapezoid_grid(box, quadrature):
    (x_lo, x_hi), (y_lo, y_hi) = box
    qx, qy = (int(q) for q in quadrature)
    if qx < 2 or qy < 2:
        raise ValueError(f"quadrature needs >= 2 nodes per axis, got {quadrature}")
    if not (x_hi > x_lo and y_hi > y_lo):
        raise ValueError(f"degenerate integration box {box}")
    xs = np.linspace(x_lo, x_hi, qx)
    ys = np.linspace(y_lo, y_hi, qy)
    wx = np.full(qx, xs[1] - xs[0])
    wx[[0, -1]] *= 0.5
    wy = np.full(qy, ys[1] - ys[0])
    wy[[0, -1]] *= 0.5
    nodes = np.column_stack([np.repeat(xs, qy), np.tile(ys, qx)])
    weights = np.outer(wx, wy).ravel()
    return nodes, weights


def _sorted_dists(queries: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """(m, k) ascending distances from each query to the reference points."""
    d = np.sqrt(((queries[:, None, :] - refs[None, :, :]) ** 2).sum(axis=2))
    d.sort(axis=1)
    return d


def _log_shape(density_values: np.ndarray, alpha: float) -> np.ndarray:
    """alpha * log(density), with density == 0 mapped to -inf (alpha > 0)
    or 0 (alpha == 0, the constant-shape limit)."""
    if alpha == 0.0:
        return np.zeros_like(density_values)
    with np.errstate(divide="ignore"):
        return alpha * np.log(density_values)


def conditional_density(x, neighbors, alpha, theta, density, box, quadrature=(64, 64)) -> float:
    """Conditional density of x given its neighbour set, self-normalized by
    trapezoid quadrature of the unnormalized expression over the box.

    ``density`` is a vectorized callable (m, 2) -> (m,) for the KDE shape
    term.  Raises DegenerateModelError when the normalizer is not finite.
    """
    if alpha < 0.0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    x = np.asarray(x, dtype=float).reshape(1, 2)
    nbrs = np.asarray(neighbors, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if nbrs.shape != (theta.size, 2):
        raise ValueError(f"need K={theta.size} neighbours, got shape {nbrs.shape}")
    nodes, weights = _trapezoid_grid(box, quadrature)
    s_x = _sorted_dists(x, nbrs)[0]
    s_q = _sorted_dists(nodes, nbrs)
    log_num = _log_shape(np.asarray(density(x)), alpha)[0] - float(s_x @ theta)
    a = _log_shape(np.asarray(density(nodes)), alpha) - s_q @ theta
    m = a.max()
    if not np.isfinite(m):
        raise DegenerateModelError("conditional density vanishes on the whole box")
    log_den = m + np.log(float(weights @ np.exp(a - m)))
    if not np.isfinite(log_den):
        raise DegenerateModelError("normalizing integral underflowed")
    return float(np.exp(log_num - log_den))


class _Workspace:
    """Precomputed quantities for repeated log-pseudolikelihood evaluation
    on one transformed point set."""

    def __init__(self, points, cfg: RstConfig):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("transformed points must be an (n, 2) array")
        n = pts.shape[0]
        if n <= cfg.k:
            raise ValueError(f"need more than K={cfg.k} points, got {n}")
        self.points = pts
        self.cfg = cfg
        d = _distance_matrix(pts)
        order = np.argsort(d, axis=1, kind="stable")
        self.neighbor_idx = order[:, : cfg.k]
        self.s = np.take_along_axis(d, self.neighbor_idx, axis=1)  # (n, K)
        self.bandwidth = cfg.bandwidth if cfg.bandwidth is not None else silverman_bandwidth(pts)
        if self.bandwidth <= 0.0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        self.box = cfg.integration_box or _integration_box(pts, self.bandwidth, cfg.box_margin)
        self.nodes, self.weights = _trapezoid_grid(self.box, cfg.quadrature)
        self.log_kde_points = np.log(kde_values(pts, self.bandwidth, pts))
        kde_q = kde_values(pts, self.bandwidth, self.nodes)
        with np.errstate(divide="ignore"):
            self.log_kde_nodes = np.log(kde_q)
        # sorted distances from each quadrature node to each point's
        # neighbour set, built in chunks to bound memory
        q = self.nodes.shape[0]
        big = np.empty((n, q, cfg.k))
        nbr_coords = pts[self.neighbor_idx]  # (n, K, 2)
        for i in range(n):
            big[i] = _sorted_dists(self.nodes, nbr_coords[i])
        self.node_dists = big

    def log_pl(self, alpha: float, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        interaction = self.node_dists @ theta  # (n, q)
        if alpha == 0.0:
            a = -interaction
        else:
            a = alpha * self.log_kde_nodes[None, :] - interaction
        m = a.max(axis=1)
        if not np.isfinite(m).all():
            raise DegenerateModelError("conditional density vanishes on the whole box")
        den = np.exp(a - m[:, None]) @ self.weights
        log_den = m + np.log(den)
        num = alpha * self.log_kde_points - self.s @ theta
        value = float((num - log_den).sum())
        if not np.isfinite(value):
            raise DegenerateModelError("log pseudolikelihood is not finite")
        return value


def log_pseudolikelihood(points, alpha: float, theta, cfg: RstConfig | None = None) -> float:
    """Sum over points of the log conditional density given K neighbours."""
    theta = np.asarray(theta, dtype=float)
    if cfg is None:
        cfg = RstConfig(k=theta.size)
    if cfg.k != theta.size:
        raise ValueError(f"theta has {theta.size} entries but cfg.k = {cfg.k}")
    if alpha < 0.0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    return _Workspace(points, cfg).log_pl(alpha, theta)


def _profile_alpha(ws: _Workspace, theta, cfg: RstConfig) -> float:
    """Maximize log-PL in alpha at fixed theta: bisection on the finite
    difference derivative, then never worse than either endpoint."""
    lo, hi = cfg.alpha_range
    step = 1e-5 * max(1.0, hi - lo)

    def g(a):
        return ws.log_pl(a, theta)

    def dg(a):
        a0 = max(lo, a - step)
        a1 = min(hi, a + step)
        return (g(a1) - g(a0)) / (a1 - a0)

    if dg(lo) <= 0.0:
        cand = lo
    elif dg(hi) >= 0.0:
        cand = hi
    else:
        a, b = lo, hi
        while b - a > cfg.alpha_tol:
            mid = 0.5 * (a + b)
            d = dg(mid)
            if d > 0.0:
                a = mid
            elif d < 0.0:
                b = mid
            else:
                a = b = mid
        cand = 0.5 * (a + b)
    options = sorted({lo, hi, cand})
    values = [g(a) for a in options]
    return options[int(np.argmax(values))]


def _theta_variances(ws: _Workspace, alpha: float, theta: np.ndarray) -> np.ndarray:
    """Diagonal of the inverse observed information (finite differences)."""
    k = theta.size
    f0 = ws.log_pl(alpha, theta)
    steps = 1e-4 * np.maximum(1.0, np.abs(theta))

    def f(offsets):
        return ws.log_pl(alpha, theta + offsets)

    hess = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = steps[i]
        hess[i, i] = (f(ei) - 2.0 * f0 + f(-ei)) / steps[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = steps[j]
            hess[i, j] = hess[j, i] = (
                f(ei + ej) - f(ei - ej) - f(-ei + ej) + f(-ei - ej)
            ) / (4.0 * steps[i] * steps[j])
    info = -hess
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise VarianceUnavailableError(f"observed information is singular: {exc}")
    diag = np.diag(cov)
    if not (np.isfinite(diag).all() and (diag > 0.0).all()):
        raise VarianceUnavailableError(
            "observed information is not positive definite at the optimum"
        )
    return diag.copy()


def fit(points, cfg: RstConfig | None = None) -> RstFit:
    """Alternating profile maximization of the log pseudolikelihood.

    alpha by bisection over cfg.alpha_range, theta by Nelder-Mead from the
    previous iterate (zero initially), until the objective changes by less
    than cfg.outer_tol or cfg.max_outer rounds pass (FitFailedError then,
    carrying the best iterate).  Variances come from the inverse observed
    information in theta; a non-positive information raises
    VarianceUnavailableError.
    """
    if cfg is None:
        cfg = RstConfig()
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] <= cfg.k + 1:
        raise ValueError(f"need more than K+1={cfg.k + 1} points, got {pts.shape}")
    ws = _Workspace(pts, cfg)
    theta = np.zeros(cfg.k)
    alpha = 0.0
    previous = -np.inf
    current = None
    converged = False
    for _ in range(cfg.max_outer):
        alpha = _profile_alpha(ws, theta, cfg)
        res = minimize(
            lambda th: -ws.log_pl(alpha, th),
            theta,
            method="Nelder-Mead",
            options={
                "xatol": cfg.theta_xatol,
                "fatol": cfg.theta_fatol,
                "maxfev": 4000,
            },
        )
        theta = np.asarray(res.x, dtype=float)
        current = -float(res.fun)
        if abs(current - previous) < cfg.outer_tol:
            converged = True
            break
        previous = current
    if not converged:
        raise FitFailedError(
            f"no joint convergence after {cfg.max_outer} outer iterations",
            alpha=alpha,
            theta=theta,
            log_pl=current,
        )
    variances = _theta_variances(ws, alpha, theta)
    return RstFit(alpha=float(alpha), theta=theta, variances=variances,
                  log_pl=current, k=cfg.k)


def select_k(points, candidates, cfg: RstConfig | None = None) -> tuple[int, RstFit]:
    """Fit every candidate cluster size, return the AIC minimizer.

    AIC = 2 (K + 1) - 2 log_pl (alpha counts as one parameter); ties go to
    the smaller K.  Candidates whose fit fails are skipped; if all fail,
    FitFailedError.
    """
    ks = sorted({int(k) for k in candidates})
    if not ks:
        raise ValueError("candidates must be nonempty")
    if cfg is None:
        cfg = RstConfig()
    best = None
    failures = []
    for k in ks:
        try:
            fitted = fit(points, replace(cfg, k=k))
        except (FitFailedError, DegenerateModelError, VarianceUnavailableError, ValueError) as exc:
            failures.append(f"K={k}: {exc}")
            continue
        aic = 2.0 * (k + 1) - 2.0 * fitted.log_pl
        if best is None or aic < best[0]:
            best = (aic, k, fitted)
    if best is None:
        raise FitFailedError("all candidate fits failed: " + "; ".join(failures))
    return best[1], best[2]
