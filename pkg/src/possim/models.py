"""Sampling models.

Each model knows how to evaluate log densities on batches of datasets and
parameter grids, draw datasets, compute the MLE, and report the supremum of
the likelihood per dataset. Relative likelihood is always

    eta(y, theta) = p_theta(y) / sup_t p_t(y),

computed in log space through the same vectorized code path for observed
data and simulated data, so exact ties stay exact.

Conventions: `loglik_matrix(Y, thetas)` takes a batch of m datasets and a
(k, dim) parameter array and returns an (m, k) matrix; `logpdf_sup(Y)`
returns (m,); `sample(theta, m, rng)` returns datasets with batch axis 0.
"""
import numpy as np
from scipy import special, stats

from ._optim import gamma_mle_shape
from .contours import IntervalAxis, ParamDomain, domain_1d
from .errors import UnboundedLikelihood

_LOG2PI = np.log(2.0 * np.pi)


def _as_param_matrix(thetas, dim):
    th = np.asarray(thetas, dtype=float)
    if dim == 1:
        return th.reshape(-1, 1)
    if th.ndim == 1:
        th = th.reshape(1, -1)
    if th.shape[1] != dim:
        raise ValueError(f"expected parameters of dimension {dim}")
    return th


class Model:
    """Base class; subclasses fill in the likelihood and sampler."""

    name = "model"
    param_names = ("theta",)
    pivot_hint = False

    @property
    def theta_dim(self):
        return len(self.param_names)

    def params(self, thetas):
        return _as_param_matrix(thetas, self.theta_dim)

    def data_batch(self, Y):
        """Normalize datasets to a batch with axis 0."""
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == self._data_ndim:
            Y = Y[None, ...]
        return Y

    def log_rel_lik(self, Y, thetas):
        """(m, k) matrix of log relative likelihoods."""
        Y = self.data_batch(Y)
        ll = self.loglik_matrix(Y, thetas)
        return ll - self.logpdf_sup(Y)[:, None]

    def rel_lik(self, y, thetas):
        """Relative likelihood of one dataset over a parameter grid."""
        return np.exp(self.log_rel_lik(y, thetas)[0])

    def support(self):
        """Finite data support as a batch array, or None."""
        return None

    def loglik_matrix(self, Y, thetas):
        raise NotImplementedError

    def logpdf_sup(self, Y):
        raise NotImplementedError

    def sample(self, theta, m, rng):
        raise NotImplementedError

    def mle(self, y):
        raise NotImplementedError

    def default_domain(self, y):
        raise NotImplementedError


class Binomial(Model):
    """y successes out of n trials, success probability theta."""

    param_names = ("theta",)
    _data_ndim = 0

    def __init__(self, n):
        self.n = int(n)

    name = "binomial"

    def loglik_matrix(self, Y, thetas):
        th = self.params(thetas)[:, 0]
        y = np.asarray(Y, dtype=float).reshape(-1)
        coeff = (
            special.gammaln(self.n + 1)
            - special.gammaln(y + 1)
            - special.gammaln(self.n - y + 1)
        )
        return (
            coeff[:, None]
            + special.xlogy(y[:, None], th[None, :])
            + special.xlogy(self.n - y[:, None], 1.0 - th[None, :])
        )

    def logpdf_sup(self, Y):
        y = np.asarray(Y, dtype=float).reshape(-1)
        phat = y / self.n
        coeff = (
            special.gammaln(self.n + 1)
            - special.gammaln(y + 1)
            - special.gammaln(self.n - y + 1)
        )
        return coeff + special.xlogy(y, phat) + special.xlogy(self.n - y, 1.0 - phat)

    def sample(self, theta, m, rng):
        th = float(np.asarray(theta).reshape(-1)[0])
        return rng.binomial(self.n, th, size=m).astype(float)

    def mle(self, y):
        return np.array([float(y) / self.n])

    def support(self):
        return np.arange(self.n + 1, dtype=float)

    def default_domain(self, y):
        return domain_1d("theta", 0.0, 1.0, 201)


class NormalKnownVar(Model):
    """Mean of n observations with known sdev; data is the sample mean."""

    param_names = ("mu",)
    pivot_hint = True
    _data_ndim = 0

    def __init__(self, sigma, n):
        self.sigma = float(sigma)
        self.n = int(n)
        if self.sigma <= 0 or self.n < 1:
            raise ValueError("need sigma > 0 and n >= 1")
        self._sd = self.sigma / np.sqrt(self.n)

    name = "normal_known_var"

    def loglik_matrix(self, Y, thetas):
        th = self.params(thetas)[:, 0]
        ybar = np.asarray(Y, dtype=float).reshape(-1)
        z2 = (ybar[:, None] - th[None, :]) ** 2 / self._sd**2
        return -0.5 * (_LOG2PI + 2.0 * np.log(self._sd)) - 0.5 * z2

    def logpdf_sup(self, Y):
        m = np.asarray(Y, dtype=float).reshape(-1).shape[0]
        return np.full(m, -0.5 * (_LOG2PI + 2.0 * np.log(self._sd)))

    def sample(self, theta, m, rng):
        th = float(np.asarray(theta).reshape(-1)[0])
        return rng.normal(th, self._sd, size=m)

    def mle(self, y):
        return np.array([float(y)])

    def default_domain(self, y):
        c = float(y)
        h = 4.5 * self._sd
        return domain_1d("mu", c - h, c + h, 201)


class NormalUnknownVar(Model):
    """iid normal sample, both mean and variance unknown."""

    param_names = ("mu", "var")
    pivot_hint = True
    _data_ndim = 1

    def __init__(self, n):
        self.n = int(n)
        if self.n < 2:
            raise ValueError("need n >= 2")

    name = "normal_unknown_var"

    def _stats(self, Y):
        Y = np.asarray(Y, dtype=float)
        ybar = Y.mean(axis=-1)
        ss = ((Y - ybar[..., None]) ** 2).sum(axis=-1)
        return ybar, ss

    def loglik_matrix(self, Y, thetas):
        th = self.params(thetas)
        mu, var = th[:, 0], th[:, 1]
        ybar, ss = self._stats(self.data_batch(Y))
        quad = ss[:, None] + self.n * (ybar[:, None] - mu[None, :]) ** 2
        return -0.5 * self.n * (_LOG2PI + np.log(var[None, :])) - quad / (
            2.0 * var[None, :]
        )

    def logpdf_sup(self, Y):
        ybar, ss = self._stats(self.data_batch(Y))
        vhat = ss / self.n
        return -0.5 * self.n * (_LOG2PI + np.log(vhat) + 1.0)

    def sample(self, theta, m, rng):
        th = np.asarray(theta, dtype=float).reshape(-1)
        return rng.normal(th[0], np.sqrt(th[1]), size=(m, self.n))

    def mle(self, y):
        ybar, ss = self._stats(np.asarray(y, dtype=float))
        return np.array([float(ybar), float(ss) / self.n])

    def default_domain(self, y):
        mu, vhat = self.mle(y)
        h = 4.5 * np.sqrt(vhat / self.n)
        return ParamDomain([
            IntervalAxis("mu", mu - h, mu + h, 61),
            IntervalAxis("var", vhat / 5.0, vhat * 5.0, 61),
        ])


class Gamma(Model):
    """iid gamma sample; parameters (shape, scale)."""

    param_names = ("shape", "scale")
    _data_ndim = 1

    def __init__(self, n):
        self.n = int(n)
        if self.n < 2:
            raise ValueError("need n >= 2")

    name = "gamma"

    def loglik_matrix(self, Y, thetas):
        th = self.params(thetas)
        a, b = th[:, 0], th[:, 1]
        Y = self.data_batch(Y)
        sumlog = np.log(Y).sum(axis=-1)
        sumy = Y.sum(axis=-1)
        return (
            (a[None, :] - 1.0) * sumlog[:, None]
            - sumy[:, None] / b[None, :]
            - self.n * (a * np.log(b) + special.gammaln(a))[None, :]
        )

    def logpdf_sup(self, Y):
        Y = self.data_batch(Y)
        meanlog = np.log(Y).mean(axis=-1)
        ybar = Y.mean(axis=-1)
        c = np.log(ybar) - meanlog
        a = gamma_mle_shape(c)
        b = ybar / a
        # at the MLE, sum(y)/b = n * a
        return self.n * (
            (a - 1.0) * meanlog - a - a * np.log(b) - special.gammaln(a)
        )

    def sample(self, theta, m, rng):
        th = np.asarray(theta, dtype=float).reshape(-1)
        return rng.gamma(th[0], th[1], size=(m, self.n))

    def mle(self, y):
        y = np.asarray(y, dtype=float)
        c = np.log(y.mean()) - np.log(y).mean()
        a = float(gamma_mle_shape(c))
        return np.array([a, float(y.mean()) / a])

    def default_domain(self, y):
        a, b = self.mle(y)
        return ParamDomain([
            IntervalAxis("shape", a / 4.0, a * 4.0, 61),
            IntervalAxis("scale", b / 4.0, b * 4.0, 61),
        ])


def linkage_cell_probs(phi):
    """Four-cell probabilities ((2+phi)/4, (1-phi)/4, (1-phi)/4, phi/4)."""
    phi = np.asarray(phi, dtype=float)
    return np.stack(
        [(2.0 + phi) / 4.0, (1.0 - phi) / 4.0, (1.0 - phi) / 4.0, phi / 4.0],
        axis=-1,
    )


# named one-parameter curves inside a probability simplex:
# name -> (map, parameter name, cell count, default (lo, hi, points))
CURVES = {
    "linkage": (linkage_cell_probs, "phi", 4, (0.01, 0.99, 99)),
}


class Multinomial(Model):
    """Frequency table over k cells from n trials; the parameter is the cell
    probability vector.

    A named `curve` restricts evaluation and sampling to a one-dimensional
    curve inside the simplex. The relative likelihood stays normalized by
    the unrestricted closed-simplex MLE y/n (0 log 0 = 0), so on a curve the
    contour is the slice of the full-simplex IM along the curve and its
    maximum is below 1 unless y/n lies on the curve.
    """

    _data_ndim = 1
    name = "multinomial"

    def __init__(self, n, k=None, curve=None):
        self.n = int(n)
        if curve is not None:
            if isinstance(curve, str):
                try:
                    curve_fn, pname, ck, cdom = CURVES[curve]
                except KeyError:
                    raise ValueError(f"unknown curve {curve!r}") from None
            else:
                curve_fn, pname, ck, cdom = curve
            if k is not None and int(k) != ck:
                raise ValueError(f"curve {pname!r} lives in a {ck}-cell simplex")
            self.k = ck
            self.curve = curve_fn
            self.param_names = (pname,)
            self._curve_domain = cdom
        else:
            if k is None:
                raise ValueError("need the cell count k (or a curve)")
            self.k = int(k)
            if self.k < 2:
                raise ValueError("need k >= 2")
            self.curve = None
            self.param_names = tuple(f"p{i + 1}" for i in range(self.k))

    def _probs(self, thetas):
        th = self.params(thetas)
        if self.curve is not None:
            return self.curve(th[:, 0])
        if np.any(th < 0) or np.any(np.abs(th.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("rows must be probability vectors")
        return th

    def _coeff(self, Y):
        return special.gammaln(self.n + 1) - special.gammaln(Y + 1).sum(axis=-1)

    def loglik_matrix(self, Y, thetas):
        Y = self.data_batch(Y)
        p = self._probs(thetas)
        out = np.broadcast_to(self._coeff(Y)[:, None], (Y.shape[0], p.shape[0])).copy()
        for c in range(self.k):
            out += special.xlogy(Y[:, c, None], p[None, :, c])
        return out

    def logpdf_sup(self, Y):
        Y = self.data_batch(Y)
        return self._coeff(Y) + special.xlogy(Y, Y / self.n).sum(axis=-1)

    def sample(self, theta, m, rng):
        p = self._probs(np.asarray(theta, dtype=float).reshape(1, -1))[0]
        return rng.multinomial(self.n, p, size=m).astype(float)

    def mle(self, y):
        y = np.asarray(y, dtype=float).reshape(-1)
        return y / self.n

    def default_domain(self, y):
        if self.curve is None:
            raise ValueError("a simplex-valued parameter needs an explicit curve")
        lo, hi, pts = self._curve_domain
        return domain_1d(self.param_names[0], lo, hi, pts)


class OddsRatioConditional(Model):
    """Second-arm count V given total U = u in a 2x2 table, indexed by the
    log odds ratio theta:

        p_theta(v | u) proportional to C(n2, v) C(n1, u - v) exp(theta v)

    on v in {max(0, u - n1), ..., min(u, n2)}. At the endpoints of the
    support the likelihood supremum is 1 (attained in the limit
    theta -> -inf or +inf).
    """

    param_names = ("theta",)
    _data_ndim = 0
    _THETA_CAP = 50.0

    def __init__(self, n1, n2, u):
        self.n1 = int(n1)
        self.n2 = int(n2)
        self.u = int(u)
        lo = max(0, self.u - self.n1)
        hi = min(self.u, self.n2)
        if hi < lo:
            raise ValueError("empty support: incompatible (n1, n2, u)")
        self.v_support = np.arange(lo, hi + 1)
        v = self.v_support.astype(float)
        self._logw = (
            special.gammaln(self.n2 + 1)
            - special.gammaln(v + 1)
            - special.gammaln(self.n2 - v + 1)
            + special.gammaln(self.n1 + 1)
            - special.gammaln(self.u - v + 1)
            - special.gammaln(self.n1 - self.u + v + 1)
        )
        self._sup_cache = {}

    name = "odds_ratio_conditional"

    def _logz(self, th):
        th = np.asarray(th, dtype=float)
        v = self.v_support.astype(float)
        return special.logsumexp(
            self._logw[None, :] + th[..., None] * v[None, :], axis=-1
        )

    def loglik_matrix(self, Y, thetas):
        th = self.params(thetas)[:, 0]
        v = np.asarray(Y, dtype=float).reshape(-1)
        idx = np.rint(v - self.v_support[0]).astype(int)
        return (
            self._logw[idx][:, None]
            + th[None, :] * v[:, None]
            - self._logz(th)[None, :]
        )

    def _logsup_one(self, v):
        v = int(v)
        if v in self._sup_cache:
            return self._sup_cache[v]
        if v == self.v_support[0] or v == self.v_support[-1]:
            out = 0.0
        else:
            th = self._mle_of(v)
            idx = v - self.v_support[0]
            out = float(self._logw[idx] + th * v - self._logz(th))
        self._sup_cache[v] = out
        return out

    def logpdf_sup(self, Y):
        v = np.rint(np.asarray(Y, dtype=float).reshape(-1)).astype(int)
        return np.asarray([self._logsup_one(vi) for vi in v])

    def _mean_v(self, th):
        v = self.v_support.astype(float)
        logp = self._logw + th * v - self._logz(th)
        return float(np.sum(v * np.exp(logp)))

    def _mle_of(self, v):
        from scipy.optimize import brentq

        cap = self._THETA_CAP
        if v <= self.v_support[0]:
            return -cap
        if v >= self.v_support[-1]:
            return cap
        return brentq(lambda t: self._mean_v(t) - v, -cap, cap, xtol=1e-12)

    def mle(self, y):
        return np.array([self._mle_of(int(round(float(y))))])

    def sample(self, theta, m, rng):
        th = float(np.asarray(theta).reshape(-1)[0])
        logp = self._logw + th * self.v_support - self._logz(th)
        p = np.exp(logp)
        p = p / p.sum()
        return rng.choice(self.v_support.astype(float), size=m, p=p)

    def support(self):
        return self.v_support.astype(float)

    def default_domain(self, y):
        th = float(self.mle(y)[0])
        if abs(th) >= self._THETA_CAP:
            th = 0.0
        return domain_1d("theta", th - 4.0, th + 4.0, 201)


class AR1Conditional(Model):
    """Second observation of an AR(1) chain given the first:
    Y2 | Y1 = y1  ~  N(theta * y1, sigma^2)."""

    param_names = ("theta",)
    pivot_hint = True
    _data_ndim = 0

    def __init__(self, sigma, y1):
        self.sigma = float(sigma)
        self.y1 = float(y1)
        if self.sigma <= 0:
            raise ValueError("need sigma > 0")
        if self.y1 == 0.0:
            raise UnboundedLikelihood("y1 = 0 leaves theta unidentified")

    name = "ar1_conditional"

    def loglik_matrix(self, Y, thetas):
        th = self.params(thetas)[:, 0]
        y2 = np.asarray(Y, dtype=float).reshape(-1)
        z2 = (y2[:, None] - th[None, :] * self.y1) ** 2 / self.sigma**2
        return -0.5 * (_LOG2PI + 2.0 * np.log(self.sigma)) - 0.5 * z2

    def logpdf_sup(self, Y):
        m = np.asarray(Y, dtype=float).reshape(-1).shape[0]
        return np.full(m, -0.5 * (_LOG2PI + 2.0 * np.log(self.sigma)))

    def sample(self, theta, m, rng):
        th = float(np.asarray(theta).reshape(-1)[0])
        return rng.normal(th * self.y1, self.sigma, size=m)

    def mle(self, y):
        return np.array([float(y) / self.y1])

    def default_domain(self, y):
        c = float(y) / self.y1
        h = 4.5 * self.sigma / abs(self.y1)
        return domain_1d("theta", c - h, c + h, 201)


class GIGConditional(Model):
    """Scale observation S given the ancillary u, density

        p_theta(s | u) = s^{-1} exp{-u (theta/s + s/theta)} / Z(u),

    s, theta > 0. The normalizer does not involve theta; it is computed by
    quadrature of the rescaled integrand exp{-2u (cosh x - 1)}, which is
    exact to machine precision on [-50, 50]. X = log(S/theta) is a pivot.
    """

    param_names = ("theta",)
    pivot_hint = True
    _data_ndim = 0

    def __init__(self, u):
        from scipy import integrate

        self.u = float(u)
        if self.u <= 0:
            raise ValueError("need u > 0")
        val, _ = integrate.quad(
            lambda x: np.exp(-2.0 * self.u * (np.cosh(x) - 1.0)), -50.0, 50.0
        )
        # Z(u) = exp(-2u) * integral of the rescaled integrand
        self._log_z = np.log(val) - 2.0 * self.u

    name = "gig_conditional"

    def loglik_matrix(self, Y, thetas):
        th = self.params(thetas)[:, 0]
        s = np.asarray(Y, dtype=float).reshape(-1)
        ratio = th[None, :] / s[:, None] + s[:, None] / th[None, :]
        return -np.log(s)[:, None] - self.u * ratio - self._log_z

    def logpdf_sup(self, Y):
        s = np.asarray(Y, dtype=float).reshape(-1)
        return -np.log(s) - 2.0 * self.u - self._log_z

    def sample(self, theta, m, rng):
        """Rejection from N(0, 1/(2u)) on the pivot scale; acceptance is
        exp{-2u (cosh x - 1 - x^2/2)} <= 1, close to 1 for moderate u."""
        th = float(np.asarray(theta).reshape(-1)[0])
        out = np.empty(m)
        have = 0
        sd = 1.0 / np.sqrt(2.0 * self.u)
        while have < m:
            k = max(64, int(1.2 * (m - have)))
            x = rng.normal(0.0, sd, size=k)
            acc_logp = -2.0 * self.u * (np.cosh(x) - 1.0 - 0.5 * x * x)
            keep = np.log(rng.uniform(size=k)) <= acc_logp
            x = x[keep]
            take = min(len(x), m - have)
            out[have : have + take] = x[:take]
            have += take
        return th * np.exp(out)

    def mle(self, y):
        return np.array([float(y)])

    def default_domain(self, y):
        s = float(y)
        return domain_1d("theta", s / 4.0, s * 4.0, 201)


MODELS = {
    "binomial": Binomial,
    "normal_known_var": NormalKnownVar,
    "normal_unknown_var": NormalUnknownVar,
    "gamma": Gamma,
    "multinomial": Multinomial,
    "odds_ratio_conditional": OddsRatioConditional,
    "ar1_conditional": AR1Conditional,
    "gig_conditional": GIGConditional,
}


def relative_likelihood(model, y, thetas):
    """eta(y, theta) on a parameter grid, normalized by the MLE fit."""
    return model.rel_lik(y, thetas)
