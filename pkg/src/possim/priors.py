"""Prior information states: vacuous, precise, or possibilistic.

A possibilistic prior is a normalized contour q on the parameter space
(sup q = 1); its alpha-cuts {q >= alpha} are the nested credal constraints
the combination rules integrate over. A precise prior is an ordinary
probability density. Vacuous means no prior information at all.
"""
import numpy as np
from scipy import optimize, stats

from ._rng import TAG_PRIOR, substream
from .contours import Contour
from .errors import NotNormalized


class VacuousPrior:
    kind = "vacuous"

    def __repr__(self):
        return "VacuousPrior()"


class PrecisePrior:
    """Probability prior given by a log density and a sampler.

    `family` optionally tags a known parametric family as a
    (name, params) pair so conjugate updates can be recognized,
    e.g. ("beta", (a, b)) or ("normal", (mean, var)).
    """

    kind = "precise"

    def __init__(self, logpdf, sampler, family=None):
        self._logpdf = logpdf
        self._sampler = sampler
        self.family = family

    def logpdf(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        return np.asarray(self._logpdf(thetas), dtype=float)

    def sample(self, m, rng):
        return self._sampler(m, rng)


class PossibilisticPrior:
    """Prior contour q with optional closed-form alpha-cuts.

    q maps a (k, dim) parameter array to k values in [0, 1] with sup 1.
    alpha_cut(alpha), when given, returns (lo, hi) interval bounds of
    {q >= alpha} for one-dimensional parameters.
    """

    kind = "possibilistic"

    def __init__(self, q, alpha_cut=None, label="possibilistic"):
        self._q = q
        self._alpha_cut = alpha_cut
        self.label = label

    def weight(self, thetas):
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim == 1:
            thetas = thetas.reshape(-1, 1)
        w = np.asarray(self._q(thetas), dtype=float)
        if np.any(w < -1e-12) or np.any(w > 1.0 + 1e-12):
            raise NotNormalized("prior contour values must lie in [0, 1]")
        return np.clip(w, 0.0, 1.0)

    def alpha_cut(self, alpha):
        if self._alpha_cut is None:
            raise NotImplementedError(f"{self.label} has no closed-form cuts")
        return self._alpha_cut(float(alpha))

    def contour_on(self, domain):
        vals = self.weight(domain.points()).reshape(domain.shape)
        return Contour(domain, vals, meta={"engine": f"prior[{self.label}]"},
                       check=False)


def prior_weight(prior, thetas):
    """The prior factor entering eta: 1 (vacuous), the contour q (possibilistic),
    or the density (precise)."""
    thetas = np.asarray(thetas, dtype=float)
    k = thetas.shape[0] if thetas.ndim > 1 else thetas.reshape(-1, 1).shape[0]
    if isinstance(prior, VacuousPrior) or prior is None:
        return np.ones(k)
    if isinstance(prior, PossibilisticPrior):
        return prior.weight(thetas)
    if isinstance(prior, PrecisePrior):
        return np.exp(np.asarray(prior.logpdf(thetas), dtype=float).reshape(-1))
    raise TypeError("unknown prior kind")


def beta_prior(a, b):
    a, b = float(a), float(b)
    return PrecisePrior(
        logpdf=lambda th: stats.beta.logpdf(np.asarray(th).reshape(-1), a, b),
        sampler=lambda m, rng: rng.beta(a, b, size=(m, 1)),
        family=("beta", (a, b)),
    )


def normal_prior(mean, var):
    mean, var = float(mean), float(var)
    sd = np.sqrt(var)
    return PrecisePrior(
        logpdf=lambda th: stats.norm.logpdf(np.asarray(th).reshape(-1), mean, sd),
        sampler=lambda m, rng: rng.normal(mean, sd, size=(m, 1)),
        family=("normal", (mean, var)),
    )


def markov_prior(bound):
    """Contour from the moment constraint E|Theta| <= bound:
    q(theta) = min(1, bound/|theta|), by Markov's inequality. The alpha-cut
    is the interval {|theta| < bound/alpha}."""
    bound = float(bound)
    if bound <= 0:
        raise ValueError("need a positive moment bound")

    def q(thetas):
        t = np.abs(np.asarray(thetas, dtype=float)).reshape(len(thetas), -1)[:, 0]
        with np.errstate(divide="ignore"):
            return np.minimum(1.0, bound / np.maximum(t, 1e-300))

    def cut(alpha):
        if alpha <= 0:
            return (-np.inf, np.inf)
        return (-bound / alpha, bound / alpha)

    return PossibilisticPrior(q, alpha_cut=cut, label=f"markov[{bound}]")


def table_prior(domain, values, label="table"):
    """Possibilistic prior from explicit contour values on a grid.

    Off-grid queries snap to the nearest grid node; intended for finite
    parameter spaces and for piecewise-constant contours.
    """
    vals = np.asarray(values, dtype=float).reshape(domain.shape)
    if abs(vals.max() - 1.0) > 1e-9:
        raise NotNormalized("table prior must attain 1 somewhere")
    pts = domain.points()

    def q(thetas):
        thetas = np.asarray(thetas, dtype=float)
        if thetas.ndim == 1:
            thetas = thetas.reshape(-1, 1)
        d2 = ((thetas[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
        return vals.reshape(-1)[np.argmin(d2, axis=1)]

    return PossibilisticPrior(q, label=label)


def prob2poss_mc(logpdf, sampler, n=100_000, rng=None):
    """Outer consonant approximation of a continuous probability prior.

    contour(theta) = P{p(X) <= p(theta)} for X drawn from the prior,
    estimated by Monte Carlo. Returns (q_function, stderr_function); wrap
    the first in a PossibilisticPrior to use it downstream.
    """
    if rng is None:
        raise ValueError("rng is required")
    x = sampler(n, rng)
    ref = np.sort(np.asarray(logpdf(x), dtype=float))

    def q(thetas):
        lp = np.asarray(logpdf(np.asarray(thetas, dtype=float)), dtype=float)
        return np.searchsorted(ref, lp, side="right") / float(n)

    def stderr(thetas):
        p = q(thetas)
        return np.sqrt(p * (1.0 - p) / n)

    return q, stderr


def prob2poss_prior(base, mc=100_000, seed=None):
    """Possibilistic prior from the probability-to-possibility transform
    of a precise prior: q(theta) = P{p(X) <= p(theta)}, X ~ prior. Exact
    for the beta and normal families, Monte Carlo otherwise."""
    fam = getattr(base, "family", None)
    if fam is not None:
        name, params = fam

        def q(thetas):
            th = np.asarray(thetas, dtype=float)
            if th.ndim > 1:
                th = th[:, 0]
            return posterior_contour_values(name, params, th)

        return PossibilisticPrior(q, label=f"prob2poss[{name}]")
    if seed is None:
        raise ValueError("seed is required for the Monte Carlo transform")
    rng = substream(seed, TAG_PRIOR)
    qf, _ = prob2poss_mc(base.logpdf, base.sampler, n=mc, rng=rng)

    def q(thetas):
        th = np.asarray(thetas, dtype=float)
        if th.ndim > 1:
            th = th[:, 0]
        return qf(th)

    return PossibilisticPrior(q, label="prob2poss[mc]")


def _beta_levelset_contour(a, b, theta):
    """P{f(T) <= f(theta)} for T ~ Beta(a, b), by density level sets."""
    th = float(theta)
    if not (0.0 <= th <= 1.0):
        return 0.0
    f = stats.beta.pdf(th, a, b)
    if a == 1.0 and b == 1.0:
        return 1.0
    if a < 1.0 and b < 1.0:
        # bathtub density: {f(T) <= f(theta)} is the middle interval
        # around the antimode
        anti = (a - 1.0) / (a + b - 2.0)
        g = lambda x: stats.beta.pdf(x, a, b) - f
        eps = 1e-14
        lo = optimize.brentq(g, eps, anti, xtol=1e-14) if g(eps) > 0 else 0.0
        hi = optimize.brentq(g, anti, 1 - eps, xtol=1e-14) if g(1 - eps) > 0 else 1.0
        return float(stats.beta.cdf(hi, a, b) - stats.beta.cdf(lo, a, b))
    if a <= 1.0 < b:
        # decreasing density: {f(T) <= f(theta)} = {T >= theta}
        return float(stats.beta.sf(th, a, b))
    if b <= 1.0 < a:
        return float(stats.beta.cdf(th, a, b))
    mode = (a - 1.0) / (a + b - 2.0)
    fmode = stats.beta.pdf(mode, a, b)
    if f >= fmode:
        return 1.0
    g = lambda x: stats.beta.pdf(x, a, b) - f
    eps = 1e-14
    lo = optimize.brentq(g, eps, mode, xtol=1e-14) if g(eps) < 0 else 0.0
    hi = optimize.brentq(g, mode, 1 - eps, xtol=1e-14) if g(1 - eps) < 0 else 1.0
    return float(stats.beta.cdf(lo, a, b) + stats.beta.sf(hi, a, b))


def posterior_contour_values(family, params, thetas):
    """Density-ordering contour of a known posterior on a grid of points.

    contour(theta) = P{q(T) <= q(theta)} with T distributed by the
    posterior and q its density. Exact for normal; level-set roots plus
    the beta CDF for beta.
    """
    thetas = np.asarray(thetas, dtype=float).reshape(-1)
    if family == "normal":
        mean, var = params
        z = np.abs(thetas - mean) / np.sqrt(var)
        return 2.0 * stats.norm.sf(z)
    if family == "beta":
        a, b = params
        return np.asarray([_beta_levelset_contour(a, b, t) for t in thetas])
    raise KeyError(f"no closed-form posterior contour for family {family!r}")
