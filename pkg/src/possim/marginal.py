"""Marginal and conditional IMs for interest parameters.

Marginalization replaces the relative likelihood with its profile over the
fiber {theta : g(theta) = phi} and takes the supremum of the calibration
probability over the same fiber:

    eta_pr(y, phi) = sup_{g(theta) = phi} eta(y, theta)
    pi(phi) = sup_{g(theta) = phi} P_{Y|theta}{eta_pr(Y, phi) <= eta_pr(y, phi)}

When eta_pr(Y, phi) is a pivot the supremum is free and the contour has a
closed form; the registered normal-sample interest parameters use those.
Otherwise the fiber is discretized and each fiber point calibrated by
Monte Carlo.

Conditioning is simpler: an IM built from a conditional density is an
ordinary IM for that model, so im_conditional just dispatches.
"""
import numpy as np
from scipy import optimize, special, stats

from ._optim import gamma_mle_shape
from ._rng import TAG_GRID, substream
from .contours import ANALYTIC_TOL, Contour
from .engine import IMConfig, _mc_meta, build_im, im_vacuous
from .errors import EmptyFiber


def _t_mean_marginal(model, y, config):
    """Normal sample, mean interest: the profile relative likelihood is
    (1 + t^2/(n-1))^{-n/2}, decreasing in |t|, and t is a pivot, so the
    contour is the two-sided t p-value."""
    y = np.asarray(y, dtype=float)
    n = model.n
    dom = config.theta_grid
    mus = dom.points()[:, 0]
    ybar = y.mean()
    s = y.std(ddof=1)
    tstat = np.sqrt(n) * (ybar - mus) / s
    pi = 2.0 * stats.t.sf(np.abs(tstat), df=n - 1)
    meta = {
        "engine": "pivot-t",
        "sup_witness": ((float(ybar),), 1.0),
        "tol_sup": ANALYTIC_TOL,
        "std_err": np.zeros_like(pi),
    }
    return Contour(dom, pi.reshape(dom.shape), meta=meta)


def _h_lr(w, n):
    return 0.5 * n * np.log(w / n) - 0.5 * w + 0.5 * n


def _var_marginal(model, y, config):
    """Normal sample, variance interest. With W = SS/lambda ~ chi2(n-1),
    the profile log relative likelihood is h(W) = (n/2)log(W/n) - W/2 + n/2,
    maximal at W = n. The contour is the probability of {h(W) <= h(w_obs)},
    a two-sided chi-square tail split at the roots of h(w) = h(w_obs)."""
    y = np.asarray(y, dtype=float)
    n = model.n
    ss = float(((y - y.mean()) ** 2).sum())
    dom = config.theta_grid
    lams = dom.points()[:, 0]
    if np.any(lams <= 0):
        raise EmptyFiber("variance grid must be positive")
    pi = np.empty_like(lams)
    for j, lam in enumerate(lams):
        w = ss / lam
        if w == n:
            pi[j] = 1.0
            continue
        c = _h_lr(w, n)
        if w < n:
            w_lo = w
            hi = 2.0 * n
            while _h_lr(hi, n) > c:
                hi *= 2.0
            w_hi = optimize.brentq(lambda t: _h_lr(t, n) - c, n, hi,
                                   xtol=1e-12, rtol=1e-15)
        else:
            w_hi = w
            lo = n / 2.0
            while _h_lr(lo, n) > c:
                lo /= 2.0
            w_lo = optimize.brentq(lambda t: _h_lr(t, n) - c, lo, n,
                                   xtol=1e-12, rtol=1e-15)
        pi[j] = stats.chi2.cdf(w_lo, n - 1) + stats.chi2.sf(w_hi, n - 1)
    meta = {
        "engine": "pivot-lr-chi2",
        "sup_witness": ((ss / n,), 1.0),
        "tol_sup": ANALYTIC_TOL,
        "std_err": np.zeros_like(pi),
    }
    return Contour(dom, pi.reshape(dom.shape), meta=meta)


def _gamma_profile_eta(model, Y, mu):
    """eta_pr(Y, mu) for a batch of gamma samples at one mean value.

    The inner maximization over shape at fixed mean solves
    log(a) - digamma(a) = ybar/mu + log(mu) - meanlog - 1, the same
    equation as the unconstrained shape MLE with a shifted constant."""
    Y = model.data_batch(Y)
    n = model.n
    ybar = Y.mean(axis=-1)
    meanlog = np.log(Y).mean(axis=-1)
    c = ybar / mu + np.log(mu) - meanlog - 1.0
    a = gamma_mle_shape(np.maximum(c, 1e-12))
    prof = n * (
        (a - 1.0) * meanlog
        - a * ybar / mu
        - a * np.log(mu / a)
        - special.gammaln(a)
    )
    return np.exp(prof - model.logpdf_sup(Y))


def _gamma_mean_marginal(model, y, config, fiber_shapes=None):
    y = np.asarray(y, dtype=float)
    dom = config.theta_grid
    mus = dom.points()[:, 0]
    if np.any(mus <= 0):
        raise EmptyFiber("gamma mean grid must be positive")
    if fiber_shapes is None:
        a_hat = model.mle(y)[0]
        fiber_shapes = np.geomspace(a_hat / 8.0, a_hat * 8.0, 25)
    fiber_shapes = np.asarray(fiber_shapes, dtype=float)
    M = config.mc_size
    t_obs = np.array([_gamma_profile_eta(model, y, mu)[0] for mu in mus])
    pi = np.empty_like(mus)
    for j, mu in enumerate(mus):
        best = 0.0
        for f, a in enumerate(fiber_shapes):
            rng = substream(config.seed, TAG_GRID, j, f)
            Y = model.sample(np.array([a, mu / a]), M, rng)
            eta = _gamma_profile_eta(model, Y, mu)
            best = max(best, np.count_nonzero(eta <= t_obs[j]) / M)
        pi[j] = best
    se = np.sqrt(pi * (1.0 - pi) / M)
    meta = _mc_meta("fiber-mc", config, pi, se)
    meta["sup_witness"] = ((float(y.mean()),), 1.0)
    meta["fiber_size"] = len(fiber_shapes)
    return Contour(dom, pi.reshape(dom.shape), meta=meta)


MARGINALS = {
    ("normal_unknown_var", "mean"): _t_mean_marginal,
    ("normal_unknown_var", "variance"): _var_marginal,
    ("gamma", "mean"): _gamma_mean_marginal,
}


def im_marginal(model, y, interest, config, **kw):
    """Marginal IM contour for a registered interest parameter.

    config.theta_grid is the grid of the interest parameter, not of the
    full parameter.
    """
    key = (model.name, interest)
    if key not in MARGINALS:
        known = ", ".join(f"{m}:{p}" for m, p in sorted(MARGINALS))
        raise KeyError(f"no marginal rule for {key}; registered: {known}")
    return MARGINALS[key](model, y, config, **kw)


def im_conditional(model, y, config):
    """IM from a conditional model (the conditioning is baked into the
    model's density, e.g. a chain observation given its predecessor)."""
    return im_vacuous(model, y, config)


def profile_relative_likelihood(model, y, interest, values):
    """eta_pr(y, phi) over an array of interest-parameter values."""
    key = (model.name, interest)
    if key == ("gamma", "mean"):
        return np.array(
            [_gamma_profile_eta(model, y, float(v))[0] for v in values]
        )
    if key == ("normal_unknown_var", "mean"):
        y = np.asarray(y, dtype=float)
        n = model.n
        t = np.sqrt(n) * (y.mean() - np.asarray(values)) / y.std(ddof=1)
        return (1.0 + t**2 / (n - 1.0)) ** (-0.5 * n)
    if key == ("normal_unknown_var", "variance"):
        y = np.asarray(y, dtype=float)
        ss = float(((y - y.mean()) ** 2).sum())
        w = ss / np.asarray(values, dtype=float)
        return np.exp(_h_lr(w, model.n))
    raise KeyError(f"no profile rule for {key}")
