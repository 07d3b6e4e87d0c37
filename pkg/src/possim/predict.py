"""Predictive IMs for future observables.

Three routes, ordered by how the parameter uncertainty enters:

  option 3  joint relative likelihood of (data, future), calibrated
            jointly; the sharpest of the three
  option 2  two-dimensional calibration of (future pivot, parameter
            pivot), then extension to the future quantity
  option 1  separate possibility representation f_theta of the future
            observable combined with the parameter contour pi_y by the
            product-of-p-values rule

        K(u, v) = uv (1 - log uv),  K(0, .) = 0,

            the survival function of chi-square(4) at -2 log(uv).

Closed forms cover the normal mean problem and the multinomial
next-observation problem; generic tools (poss_repr, predict_opt1) build
option-1 contours for anything with a density and a sampler.
"""
import numpy as np
from scipy import special, stats

from ._optim import golden_section_max
from ._rng import TAG_SIM, substream
from .contours import ANALYTIC_TOL, Contour, domain_1d, domain_labels
from .errors import EmptyAssertion

TIE_TOL = 1e-12


def fisher_combine(u, v):
    """K(u, v) = uv(1 - log uv) with K = 0 when uv = 0.

    Combines two possibility values like Fisher's rule combines p-values:
    -2 log(uv) referred to chi-square(4)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    p = u * v
    with np.errstate(divide="ignore", invalid="ignore"):
        out = p * (1.0 - np.log(p))
    out = np.where(p <= 0.0, 0.0, out)
    return np.minimum(out, 1.0) if out.ndim else float(min(out, 1.0))


def predict_opt1(f_table, pi):
    """Option-1 contour values from a precomputed possibility table.

    f_table has one row per parameter grid point and one column per
    future-value grid point; pi is the parameter contour on the same
    parameter grid. Returns max over rows of K(f, pi)."""
    f_table = np.asarray(f_table, dtype=float)
    pi = np.asarray(pi, dtype=float).reshape(-1)
    if f_table.shape[0] != pi.shape[0]:
        raise ValueError("f_table rows must match pi length")
    return fisher_combine(f_table, pi[:, None]).max(axis=0)


def poss_repr_mc(logpdf, sampler, z_values, m, rng):
    """Monte Carlo possibility representation of a density:
    f(z) = P{p(Z) <= p(z)}, Z drawn from the density itself."""
    Z = sampler(m, rng)
    ref = np.sort(np.asarray(logpdf(Z), dtype=float))
    lp = np.asarray(logpdf(np.asarray(z_values, dtype=float)), dtype=float)
    return np.searchsorted(ref, lp, side="right") / float(m)


def poss_repr_normal(mu, sigma, z_values):
    """Exact possibility representation of N(mu, sigma^2)."""
    z = np.asarray(z_values, dtype=float)
    return 2.0 * stats.norm.sf(np.abs(z - mu) / sigma)


# -- normal mean problem -----------------------------------------------------


def predict_normal(ybar, n, sigma, z_values, option=3, theta_pad=6.0,
                   theta_points=801):
    """Plausibility of a future N(theta, sigma^2) draw after observing the
    mean of n such draws, by the requested option.

    Option 3: chi2(1) survival of (z - ybar)^2 / (sigma^2 (1 + 1/n)).
    Option 2: chi2(2) survival of the same ratio.
    Option 1: sup over theta of K(f_theta(z), pi(theta)) with both factors
    in closed form; the sup is a dense grid plus golden refinement.
    """
    ybar, sigma = float(ybar), float(sigma)
    z = np.asarray(z_values, dtype=float)
    ratio = (z - ybar) ** 2 / (sigma**2 * (1.0 + 1.0 / n))
    if option == 3:
        return stats.chi2.sf(ratio, 1)
    if option == 2:
        return stats.chi2.sf(ratio, 2)
    if option != 1:
        raise ValueError("option must be 1, 2, or 3")

    def k_at(th, zz):
        f = stats.chi2.sf((zz - th) ** 2 / sigma**2, 1)
        p = stats.chi2.sf(n * (th - ybar) ** 2 / sigma**2, 1)
        return fisher_combine(f, p)

    lo = min(z.min(), ybar) - theta_pad * sigma
    hi = max(z.max(), ybar) + theta_pad * sigma
    th_grid = np.linspace(lo, hi, theta_points)
    out = np.empty_like(z)
    for i, zz in enumerate(z):
        vals = k_at(th_grid, zz)
        j = int(np.argmax(vals))
        best = float(vals[j])
        if 0 < j < len(th_grid) - 1:
            _, ref = golden_section_max(
                lambda t: float(k_at(np.array([t]), zz)[0]),
                th_grid[j - 1], th_grid[j + 1], tol=1e-10,
            )
            best = max(best, ref)
        out[i] = best
    return out


# -- multinomial next observation --------------------------------------------


def _mult_log_num(counts, nplus1):
    """log sup_theta prod theta_k^{c_k} = sum c_k log(c_k / (n+1))."""
    c = np.asarray(counts, dtype=float)
    return special.xlogy(c, c / nplus1).sum(axis=-1)


def multinomial_pred_eta(y):
    """Closed-form joint relative plausibility of the next category:

    eta(y, z) = N_z / max_w N_w with N_z the maximized joint likelihood of
    the counts y augmented by one observation in category z."""
    y = np.asarray(y, dtype=float)
    n1 = y.sum() + 1.0
    g = lambda c: special.xlogy(c, c / n1)
    base = g(y).sum()
    logN = base - g(y) + g(y + 1.0)
    return np.exp(logN - logN.max())


def _mult_eta_batch(Y, Z, n1):
    """eta for simulated (counts, next category) pairs, vectorized."""
    g = lambda c: special.xlogy(c, c / n1)
    base = g(Y).sum(axis=1)
    logN = base[:, None] - g(Y) + g(Y + 1.0)
    picked = logN[np.arange(len(Z)), Z]
    return np.exp(picked - logN.max(axis=1))


def predict_multinomial(y, mc_size=10_000, seed=None, n_candidates=64,
                        exact_grid=2001):
    """Option-3 plausibility contour of the next category after counts y.

        pi_y(z) = sup_theta P_{(Y,Z)|theta}{eta(Y, Z) <= eta(y, z)}

    with eta the add-one maximized joint relative likelihood. For two
    categories the parameter is scalar and the supremum runs exactly over
    a dense grid with (Y, Z) enumerated; otherwise the supremum is over a
    finite candidate set (the observed MLE, the K add-one MLEs, and a
    Dirichlet cloud around the counts) with Monte Carlo calibration.
    """
    y = np.asarray(y, dtype=int)
    K = len(y)
    n = int(y.sum())
    eta_obs = multinomial_pred_eta(y)
    dom = domain_labels("category", tuple(range(K)))

    if K == 2:
        th = np.linspace(0.0, 1.0, exact_grid)
        c1 = np.arange(n + 1, dtype=float)
        counts = np.stack([c1, n - c1], axis=1)
        n1 = n + 1.0
        g = lambda c: special.xlogy(c, c / n1)
        base = g(counts).sum(axis=1)
        logN = base[:, None] - g(counts) + g(counts + 1.0)
        eta_atoms = np.exp(logN - logN.max(axis=1, keepdims=True))
        logpmf = (
            special.gammaln(n + 1)
            - special.gammaln(c1 + 1)
            - special.gammaln(n - c1 + 1)
        )
        # joint mass of {eta(Y, Z) <= eta_obs(z)} for every theta; keep the sup
        pi_full = np.zeros(K)
        for j, t in enumerate(th):
            lp = logpmf + special.xlogy(c1, t) + special.xlogy(n - c1, 1.0 - t)
            pmf = np.exp(lp)
            pz = np.array([t, 1.0 - t])
            for z_obs in range(K):
                tot = 0.0
                for z_sim in range(K):
                    hit = eta_atoms[:, z_sim] <= eta_obs[z_obs] + TIE_TOL
                    tot += (pmf * hit).sum() * pz[z_sim]
                pi_full[z_obs] = max(pi_full[z_obs], tot)
        meta = {"engine": "exact", "tol_sup": ANALYTIC_TOL,
                "sup_witness": ((int(np.argmax(eta_obs)),), 1.0)}
        return Contour(dom, pi_full, meta=meta)

    if seed is None:
        raise ValueError("seed is required for the Monte Carlo route")
    mle = y / n
    cand = [mle]
    for z in range(K):
        cand.append((y + np.eye(K, dtype=int)[z]) / (n + 1.0))
    rng = substream(seed, TAG_SIM, 0)
    cand.extend(rng.dirichlet(y + 1.0, size=n_candidates))
    cand = np.asarray(cand)
    n1 = n + 1.0
    pi = np.zeros(K)
    for c_idx, th in enumerate(cand):
        rng = substream(seed, TAG_SIM, 1 + c_idx)
        Y = rng.multinomial(n, th, size=mc_size).astype(float)
        Z = rng.choice(K, size=mc_size, p=th)
        eta_sim = _mult_eta_batch(Y, Z, n1)
        for z in range(K):
            frac = np.count_nonzero(eta_sim <= eta_obs[z] + TIE_TOL) / mc_size
            pi[z] = max(pi[z], frac)
    se = np.sqrt(pi * (1.0 - pi) / mc_size)
    meta = {
        "engine": "mc-candidates", "mc_size": mc_size, "seed": seed,
        "std_err": se, "tol_sup": max(3.0 * float(se[np.argmax(pi)]), 1e-9),
        "sup_witness": ((int(np.argmax(eta_obs)),), 1.0),
    }
    return Contour(dom, pi, meta=meta)


# -- maximum of future draws -------------------------------------------------


def max_of_k_logpdf(logpdf_one, logcdf_one, k):
    """Density of the maximum of k iid draws: k p(z) F(z)^(k-1)."""

    def lp(z):
        return np.log(k) + logpdf_one(z) + (k - 1.0) * logcdf_one(z)

    return lp


def predict_gamma_max(model, y, pi_contour, k, z_axis, mc_size=2000,
                      seed=None):
    """Option-1 contour for the maximum of k future gamma draws.

    pi_contour is a joint (shape, scale) contour for the same data; each
    grid parameter gets a Monte Carlo possibility representation of the
    max-of-k density, and the combination rule K merges the two layers.
    """
    if seed is None:
        raise ValueError("seed is required")
    grid = pi_contour.domain.points()
    pi = pi_contour.values.reshape(-1)
    z = z_axis.values
    f_table = np.empty((grid.shape[0], len(z)))
    for i, (a, b) in enumerate(grid):
        rng = substream(seed, TAG_SIM, i)
        draws = rng.gamma(a, b, size=(mc_size, k)).max(axis=1)
        lp = (np.log(k) + stats.gamma.logpdf(draws, a, scale=b)
              + (k - 1.0) * stats.gamma.logcdf(draws, a, scale=b))
        ref = np.sort(lp)
        lp_z = (np.log(k) + stats.gamma.logpdf(z, a, scale=b)
                + (k - 1.0) * stats.gamma.logcdf(z, a, scale=b))
        f_table[i] = np.searchsorted(ref, lp_z, side="right") / mc_size
    vals = predict_opt1(f_table, pi)
    # witness: at the MLE the mode of the max density has f = 1 and pi = 1
    a_hat, b_hat = model.mle(y)
    z_star, _ = golden_section_max(
        lambda t: np.log(k) + stats.gamma.logpdf(t, a_hat, scale=b_hat)
        + (k - 1.0) * stats.gamma.logcdf(t, a_hat, scale=b_hat),
        z.min(), z.max(), tol=1e-9,
    )
    dom = domain_1d(z_axis.name, z_axis.lo, z_axis.hi, z_axis.n)
    se = np.sqrt(vals * (1.0 - vals) / mc_size)
    meta = {
        "engine": "opt1-maxk", "mc_size": mc_size, "seed": seed,
        "std_err": se, "sup_witness": ((float(z_star),), 1.0),
        "tol_sup": max(3.0 * float(se[np.argmax(vals)]), 1e-9), "k": k,
    }
    return Contour(dom, vals, meta=meta)
