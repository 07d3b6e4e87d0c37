"""Nonparametric IMs: empirical likelihood, bootstrap, and sample-split
relative likelihood.

The empirical likelihood ratio plays the role of the relative likelihood.
Because its sampling distribution depends on the unknown law, the
calibration layer is approximate: bootstrap calibration resamples the
data, split-likelihood calibration bounds the contour by a Markov
inequality. Neither carries a finite-sample strong validity guarantee;
the diagnostics in the validity module measure how far off they are.
"""
import numpy as np
from scipy import special

from ._optim import newton_bracketed
from ._rng import TAG_RESAMPLE, substream
from .contours import ANALYTIC_TOL, Contour
from .errors import EmptyAssertion


def quantile_estimate(y, r):
    """The ceil(n r)-th order statistic, the smallest empirical-likelihood
    maximizer of the r-th quantile; the contour steps only at data points."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    k = int(np.ceil(n * r))
    if not (1 <= k <= n):
        raise ValueError("need 0 < r <= 1 with at least one observation")
    return float(np.partition(y, k - 1)[k - 1])


def _quantile_eta_from_u(u, n, r):
    """eta = (nr/u)^u (n(1-r)/(n-u))^(n-u), with 0^0 = 1."""
    u = np.asarray(u, dtype=float)
    log_eta = (
        special.xlogy(u, n * r)
        - special.xlogy(u, u)
        + special.xlogy(n - u, n * (1.0 - r))
        - special.xlogy(n - u, n - u)
    )
    return np.exp(np.minimum(log_eta, 0.0))


def el_quantile_eta(y, r, thetas):
    """Normalized empirical likelihood ratio for the r-th quantile.

    The effective count u is #{y <= theta} left of the estimate,
    #{y < theta} right of it, and exactly n r at the estimate, making the
    ratio 1 there and a step function with jumps only at data points.
    """
    y = np.sort(np.asarray(y, dtype=float))
    n = len(y)
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    that = quantile_estimate(y, r)
    le = np.searchsorted(y, th, side="right").astype(float)
    lt = np.searchsorted(y, th, side="left").astype(float)
    u = np.where(th < that, le, np.where(th > that, lt, n * r))
    out = _quantile_eta_from_u(u, n, r)
    return out if np.ndim(thetas) else float(out[0])


def el_mean_eta(y, mu, tol=1e-12, max_iter=50):
    """Normalized empirical likelihood ratio for the mean.

    Solved through the dual: lambda satisfies
    sum (y_i - mu) / (1 + lambda (y_i - mu)) = 0 and
    eta = exp(-sum log(1 + lambda (y_i - mu))). Outside the open convex
    hull of the data no distribution supported on the sample has mean mu,
    so eta = 0 there.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    scalar = np.ndim(mu) == 0
    mus = np.atleast_1d(np.asarray(mu, dtype=float))
    lo, hi = float(y.min()), float(y.max())
    out = np.zeros_like(mus)
    for i, m in enumerate(mus):
        if not (lo < m < hi):
            out[i] = 1.0 if (lo == hi == m) else 0.0
            continue
        d = y - m
        dmin, dmax = d.min(), d.max()
        eps = 1e-10
        lam_lo = (-1.0 + eps) / dmax
        lam_hi = (-1.0 + eps) / dmin

        def g(lam):
            return float(np.sum(d / (1.0 + lam * d)))

        def gprime(lam):
            return float(-np.sum(d**2 / (1.0 + lam * d) ** 2))

        lam = newton_bracketed(g, gprime, lam_lo, lam_hi, x0=0.0,
                               tol=tol, max_iter=max_iter)
        out[i] = np.exp(-np.sum(np.log1p(lam * d)))
    out = np.minimum(out, 1.0)
    return float(out[0]) if scalar else out


def im_bootstrap(y, eta, estimate, domain, B=2000, seed=None):
    """Bootstrap-calibrated contour for a generic statistic:

        pi(theta) = (1/B) sum_b 1{ eta(y_b, t_hat) <= eta(y, theta) },

    resamples y_b drawn with replacement, t_hat the estimate from the
    original sample (held fixed across resamples). eta(y, .) must be
    vectorized over theta; eta(y_b, t_hat) is a scalar per resample. The
    contour equals 1 at t_hat by construction. No finite-sample validity
    guarantee attaches to this calibration.
    """
    if seed is None:
        raise ValueError("seed is required")
    if B < 200:
        raise ValueError("need at least 200 bootstrap resamples")
    y = np.asarray(y, dtype=float)
    n = len(y)
    rng = substream(seed, TAG_RESAMPLE)
    idx = rng.integers(0, n, size=(B, n))
    eta_b = np.empty(B)
    for b in range(B):
        eta_b[b] = float(eta(y[idx[b]], estimate))
    eta_b.sort()
    th = domain.points()[:, 0]
    t_obs = np.asarray(eta(y, th), dtype=float)
    pi = np.searchsorted(eta_b, t_obs, side="right") / B
    se = np.sqrt(pi * (1.0 - pi) / B)
    meta = {
        "engine": "bootstrap", "mc_size": B, "seed": seed, "std_err": se,
        "sup_witness": ((float(estimate),), 1.0),
        "tol_sup": max(3.0 * float(se[np.argmax(pi)]), 1e-9),
    }
    return Contour(domain, pi.reshape(domain.shape), meta=meta)


def im_bootstrap_quantile(y, r, domain, B=2000, seed=None):
    """Bootstrap-calibrated empirical likelihood contour for the r-th
    quantile, with the resampling loop vectorized."""
    if seed is None:
        raise ValueError("seed is required")
    if B < 200:
        raise ValueError("need at least 200 bootstrap resamples")
    y = np.asarray(y, dtype=float)
    n = len(y)
    that = quantile_estimate(y, r)
    k = int(np.ceil(n * r))
    rng = substream(seed, TAG_RESAMPLE)
    idx = rng.integers(0, n, size=(B, n))
    Yb = y[idx]
    that_b = np.partition(Yb, k - 1, axis=1)[:, k - 1]
    le = (Yb <= that).sum(axis=1).astype(float)
    lt = (Yb < that).sum(axis=1).astype(float)
    u_b = np.where(that < that_b, le, np.where(that > that_b, lt, n * r))
    eta_b = np.sort(_quantile_eta_from_u(u_b, n, r))
    th = domain.points()[:, 0]
    t_obs = el_quantile_eta(y, r, th)
    pi = np.searchsorted(eta_b, t_obs, side="right") / B
    se = np.sqrt(pi * (1.0 - pi) / B)
    meta = {
        "engine": "bootstrap-quantile", "mc_size": B, "seed": seed,
        "std_err": se, "sup_witness": ((that,), 1.0),
        "tol_sup": max(3.0 * float(se[np.argmax(pi)]), 1e-9),
    }
    return Contour(domain, pi.reshape(domain.shape), meta=meta)


def split_indices(n, split_frac=0.5):
    """First ceil(n * split_frac) points train the ranking; the rest fit
    the reference parameter."""
    n1 = int(np.ceil(n * split_frac))
    if not (1 <= n1 < n):
        raise ValueError("split leaves an empty chunk")
    return np.arange(n1), np.arange(n1, n)


def im_split_lr(y, loglik, mle, domain, split_frac=0.5):
    """Split likelihood-ratio contour:

        eta_split(theta) = p_theta(y1) / p_that2(y1),
        pi(theta) = min(1, eta_split(theta)),

    y1 the first chunk, that2 the second chunk's fitted parameter. The
    Markov inequality gives P{pi(Theta) <= alpha} <= alpha under any law
    in the model, a universal but conservative calibration.

    loglik(chunk, thetas) -> per-theta log likelihood of the chunk;
    mle(chunk) -> fitted parameter of the chunk.
    """
    y = np.asarray(y, dtype=float)
    i1, i2 = split_indices(len(y), split_frac)
    y1, y2 = y[i1], y[i2]
    that2 = mle(y2)
    th = domain.points()[:, 0]
    log_eta = np.asarray(loglik(y1, th), dtype=float) - float(
        loglik(y1, np.atleast_1d(that2))[0]
    )
    pi = np.minimum(1.0, np.exp(log_eta))
    that1 = mle(y1)
    meta = {
        "engine": "split-lr", "split_frac": split_frac,
        "sup_witness": ((float(that1),), 1.0), "tol_sup": ANALYTIC_TOL,
        "std_err": np.zeros_like(pi),
    }
    return Contour(domain, pi.reshape(domain.shape), meta=meta)


def im_split_normal(y, sigma, domain, split_frac=0.5):
    """Split-LR contour for a normal mean with known sigma, closed form:
    eta_split = exp{-n1 [(m1 - theta)^2 - (m1 - m2)^2] / (2 sigma^2)}."""

    def loglik(chunk, thetas):
        chunk = np.asarray(chunk, dtype=float)
        th = np.asarray(thetas, dtype=float).reshape(-1)
        return -((chunk[:, None] - th[None, :]) ** 2).sum(axis=0) / (
            2.0 * sigma**2
        )

    def mle(chunk):
        return float(np.mean(chunk))

    return im_split_lr(y, loglik, mle, domain, split_frac)
