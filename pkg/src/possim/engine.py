"""Inferential model construction.

The central object is the plausibility contour of a strongly valid IM,

    pi_y(theta) = P_{Y|theta}{ eta(Y, theta) <= eta(y, theta) },

with eta the relative likelihood (vacuous prior) or the prior-weighted
relative likelihood (possibilistic prior). Evaluation routes:

  exact       finite data support, probabilities summed directly
  pivot       eta(Y, theta) has a theta-free law; one shared Monte Carlo
              sample at the MLE calibrates every grid point
  mc          fresh substream per grid point, inclusive <= counting
  importance  one sample at the MLE reweighted to each grid point

Monte Carlo plausibilities live on the lattice {0, 1/M, ..., 1}. All
randomness derives from (seed, site) substreams, so results do not depend
on evaluation order or the number of threads.
"""
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._optim import golden_section_max
from ._rng import TAG_GRID, TAG_PRIOR, TAG_SHARED, substream
from .contours import ANALYTIC_TOL, Contour
from .errors import DegeneratePosterior, EmptyCut, LowESS, NotNormalized
from .priors import (
    PossibilisticPrior,
    PrecisePrior,
    VacuousPrior,
    posterior_contour_values,
    prior_weight,
)

ENGINES = ("auto", "exact", "pivot", "mc", "importance")
EXACT_SUPPORT_LIMIT = 2000
TIE_TOL = 1e-12
MIN_ESS = 50.0


@dataclass
class IMConfig:
    """Evaluation settings shared by the IM constructors.

    theta_grid: ParamDomain the contour is evaluated on.
    mc_size: Monte Carlo sample size M per site (>= 100).
    alpha_levels: resolution R of the midpoint rule for the prior
        integral (>= 10); the exact step-sum rule ignores it.
    seed: base seed, required for any Monte Carlo route.
    engine: one of auto, exact, pivot, mc, importance.
    threads: worker threads for per-grid-point loops (None = 1).
    refine_sup: refine the observed-data likelihood supremum off-grid
        by golden section when its grid argmax is interior.
    """

    theta_grid: object
    mc_size: int = 5000
    alpha_levels: int = 100
    seed: int = None
    engine: str = "auto"
    threads: int = None
    refine_sup: bool = True

    def __post_init__(self):
        if self.mc_size < 100:
            raise ValueError("mc_size must be at least 100")
        if self.alpha_levels < 10:
            raise ValueError("alpha_levels must be at least 10")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")

    def n_threads(self):
        return max(1, int(self.threads or 1))


def _resolve_engine(model, config):
    if config.engine != "auto":
        return config.engine
    sup = model.support()
    if sup is not None and len(sup) <= EXACT_SUPPORT_LIMIT:
        return "exact"
    if model.pivot_hint:
        return "pivot"
    return "mc"


def _run_indexed(fn, n, threads):
    """fn(j) fills slot j of preallocated outputs; order-free and
    thread-count-free by construction."""
    if threads <= 1:
        for j in range(n):
            fn(j)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(fn, range(n)))


def _mc_meta(engine, config, pi, se):
    j = int(np.argmax(pi))
    tol = max(3.0 * float(se.reshape(-1)[j]), ANALYTIC_TOL)
    return {
        "engine": engine,
        "mc_size": config.mc_size,
        "seed": config.seed,
        "std_err": se,
        "tol_sup": tol,
    }


# -- vacuous prior -----------------------------------------------------------


def im_vacuous(model, y, config):
    """Strongly valid IM contour for the vacuous prior."""
    engine = _resolve_engine(model, config)
    dom = config.theta_grid
    grid = dom.points()
    t_obs = model.rel_lik(y, grid)
    witness = (tuple(model.mle(y)), 1.0)

    if engine == "exact":
        atoms = model.support()
        ll = model.loglik_matrix(atoms, grid)
        eta = np.exp(ll - model.logpdf_sup(atoms)[:, None])
        p = np.exp(ll)
        # complement sum so the all-atoms case is exactly 1
        miss = eta > t_obs[None, :] + TIE_TOL
        pi = np.clip(1.0 - (p * miss).sum(axis=0), 0.0, 1.0)
        meta = {
            "engine": "exact",
            "sup_witness": witness,
            "tol_sup": ANALYTIC_TOL,
            "std_err": np.zeros_like(pi),
        }
        return Contour(dom, pi.reshape(dom.shape), meta=meta)

    M = config.mc_size
    if engine == "pivot":
        if not model.pivot_hint:
            raise ValueError(f"model {model.name} does not declare a pivot")
        theta_ref = model.mle(y)
        rng = substream(config.seed, TAG_SHARED)
        Y = model.sample(theta_ref, M, rng)
        eta_ref = np.sort(np.exp(model.log_rel_lik(Y, theta_ref.reshape(1, -1))[:, 0]))
        pi = np.searchsorted(eta_ref, t_obs, side="right") / M
        se = np.sqrt(pi * (1.0 - pi) / M)
        meta = _mc_meta("pivot", config, pi, se)
        meta["sup_witness"] = witness
        return Contour(dom, pi.reshape(dom.shape), meta=meta)

    if engine == "mc":
        k = grid.shape[0]
        pi = np.empty(k)

        def work(j):
            rng = substream(config.seed, TAG_GRID, j)
            th = grid[j].reshape(1, -1)
            Y = model.sample(grid[j], M, rng)
            eta = np.exp(model.log_rel_lik(Y, th)[:, 0])
            pi[j] = np.count_nonzero(eta <= t_obs[j]) / M

        _run_indexed(work, k, config.n_threads())
        se = np.sqrt(pi * (1.0 - pi) / M)
        meta = _mc_meta("mc", config, pi, se)
        meta["sup_witness"] = witness
        return Contour(dom, pi.reshape(dom.shape), meta=meta)

    if engine == "importance":
        return _im_importance(model, y, config, t_obs, witness)

    raise ValueError(f"unknown engine {engine!r}")


def _im_importance(model, y, config, t_obs, witness):
    """One sample at the MLE, reweighted to every grid point.

    Weights w_m(theta) = p_theta(Y_m) / p_mle(Y_m); the plausibility is the
    self-normalized weighted frequency of eta(Y_m, theta) <= eta(y, theta).
    """
    dom = config.theta_grid
    grid = dom.points()
    M = config.mc_size
    theta_ref = model.mle(y)
    rng = substream(config.seed, TAG_SHARED)
    Y = model.sample(theta_ref, M, rng)
    ll_ref = model.loglik_matrix(Y, theta_ref.reshape(1, -1))[:, 0]
    lsup = model.logpdf_sup(Y)
    k = grid.shape[0]
    pi = np.empty(k)
    ess = np.empty(k)
    chunk = max(1, int(2**22 // max(M, 1)))
    for lo in range(0, k, chunk):
        hi = min(k, lo + chunk)
        ll = model.loglik_matrix(Y, grid[lo:hi])
        w = np.exp(ll - ll_ref[:, None])
        eta = np.exp(ll - lsup[:, None])
        hit = eta <= t_obs[None, lo:hi] + 0.0
        # weights can underflow to zero far from the reference; report
        # zero plausibility and zero ESS there instead of 0/0
        wsum = w.sum(axis=0)
        safe = np.where(wsum > 0.0, wsum, 1.0)
        pi[lo:hi] = np.where(wsum > 0.0, (w * hit).sum(axis=0) / safe, 0.0)
        w2 = (w**2).sum(axis=0)
        ess[lo:hi] = np.where(w2 > 0.0, wsum**2 / np.where(w2 > 0, w2, 1.0),
                              0.0)
    if ess.min() < MIN_ESS:
        warnings.warn(
            f"effective sample size {ess.min():.1f} below {MIN_ESS:.0f} at "
            "some grid points; importance estimates there are unreliable",
            LowESS,
        )
    se = np.sqrt(np.maximum(pi * (1.0 - pi), 0.0) / np.maximum(ess, 1.0))
    meta = _mc_meta("importance", config, pi, se)
    meta["sup_witness"] = witness
    meta["ess"] = ess
    return Contour(dom, pi.reshape(dom.shape), meta=meta)


def im_vacuous_naive(model, y, config):
    """Vacuous-prior contour without the dimension reduction step:

        pi(theta) = sup_t P_{Y|t}{ eta(Y, t) <= eta(y, theta) }.

    Dominates im_vacuous pointwise by construction (the sup includes
    t = theta, with the same substream per grid site)."""
    dom = config.theta_grid
    grid = dom.points()
    t_obs = model.rel_lik(y, grid)
    M = config.mc_size
    k = grid.shape[0]
    counts = np.zeros((k, k))

    def work(i):
        rng = substream(config.seed, TAG_GRID, i)
        th = grid[i].reshape(1, -1)
        Y = model.sample(grid[i], M, rng)
        col = np.sort(np.exp(model.log_rel_lik(Y, th)[:, 0]))
        counts[i] = np.searchsorted(col, t_obs, side="right") / M

    _run_indexed(work, k, config.n_threads())
    pi = counts.max(axis=0)
    se = np.sqrt(pi * (1.0 - pi) / M)
    meta = _mc_meta("mc-naive", config, pi, se)
    meta["sup_witness"] = (tuple(model.mle(y)), 1.0)
    return Contour(dom, pi.reshape(dom.shape), meta=meta)


# -- possibilistic prior -----------------------------------------------------


def _obs_log_num(model, y, prior, dom, refine):
    """log sup_t p_t(y) q(t), grid max with optional interior refinement.

    Returns (log_sup, argmax_point)."""
    grid = dom.points()
    logq = np.log(np.maximum(prior_weight(prior, grid), 1e-300))
    ll = model.loglik_matrix(model.data_batch(y), grid)[0]
    score = ll + logq
    j = int(np.argmax(score))
    best_x, best_f = grid[j], float(score[j])
    if refine and dom.ndim == 1 and not dom.axes[0].is_discrete():
        xs = dom.axes[0].values
        if 0 < j < len(xs) - 1:
            def f(x):
                lx = model.loglik_matrix(model.data_batch(y),
                                         np.array([[x]]))[0, 0]
                qx = float(prior_weight(prior, np.array([[x]]))[0])
                return lx + np.log(max(qx, 1e-300))
            x_r, f_r = golden_section_max(f, xs[j - 1], xs[j + 1],
                                          tol=1e-10 * (xs[1] - xs[0]) + 1e-14)
            if f_r > best_f:
                best_x, best_f = np.array([x_r]), f_r
    return best_f, best_x


def im_partial(model, y, prior, config, choquet_rule="exact"):
    """IM contour under a possibilistic prior q:

        eta(y, theta) = p_theta(y) q(theta) / sup_t p_t(y) q(t)
        pi_y(theta) = integral_0^1 sup_{q(t) > alpha}
                          P_{Y|t}{ eta(Y, t) <= eta(y, theta) } dalpha.

    For the piecewise-constant grid prior the integral is a finite sum over
    the distinct prior levels v_1 > ... > v_L > 0: with S_l the running max
    of the per-site Monte Carlo probabilities over {q >= v_l},

        pi = sum_l (v_l - v_{l+1}) S_l,

    which is exact given the per-site estimates (choquet_rule="exact").
    choquet_rule="midpoint" instead averages the cut suprema over R
    midpoint levels; it converges to the step sum as R grows and serves as
    an independent check.
    """
    if isinstance(prior, VacuousPrior) or prior is None:
        return im_vacuous(model, y, config)
    if not isinstance(prior, PossibilisticPrior):
        raise TypeError("im_partial needs a possibilistic (or vacuous) prior")
    dom = config.theta_grid
    grid = dom.points()
    k = grid.shape[0]
    M = config.mc_size
    q = prior_weight(prior, grid)
    logq = np.log(np.maximum(q, 1e-300))
    if q.max() < 1.0 - 1e-9:
        raise NotNormalized("prior contour does not attain 1 on the grid")

    log_num, arg_num = _obs_log_num(model, y, prior, dom,
                                    config.refine_sup)
    ll_obs = model.loglik_matrix(model.data_batch(y), grid)[0]
    # thresholds, one per target grid point, computed once
    t_obs = np.exp(ll_obs + logq - log_num)

    # the refined argmax joins the grid as an extra denominator site so the
    # sample etas and the thresholds share one sup; when refinement is off
    # (or found nothing) this is the grid argmax and the max is a no-op
    extra = np.asarray(arg_num, dtype=float).reshape(1, -1)
    logq_extra = float(np.log(max(float(prior_weight(prior, extra)[0]),
                                  1e-300)))

    # per-site probabilities P_{Y|t}{eta(Y,t) <= t_obs_j}; sample denominators
    # sup_t p_t(Y) q(t) are exact grid maxima computed in chunks
    counts = np.zeros((k, k))
    live = np.nonzero(q > 0.0)[0]
    engine = _resolve_engine(model, config)
    mc_engine = engine not in ("exact",)

    if engine == "exact":
        atoms = model.support()
        ll_atoms = model.loglik_matrix(atoms, grid)
        den_atoms = (ll_atoms + logq[None, :]).max(axis=1)
        den_atoms = np.maximum(
            den_atoms, model.loglik_matrix(atoms, extra)[:, 0] + logq_extra)
        eta_atoms = np.exp(ll_atoms + logq[None, :] - den_atoms[:, None])
        p_atoms = np.exp(ll_atoms)
        for i in live:
            hit = eta_atoms[:, i, None] <= t_obs[None, :] + TIE_TOL
            counts[i] = np.minimum((p_atoms[:, i, None] * hit).sum(axis=0), 1.0)
    else:
        def work(idx):
            i = live[idx]
            rng = substream(config.seed, TAG_GRID, int(i))
            Y = model.sample(grid[i], M, rng)
            ll_i = model.loglik_matrix(Y, grid[i].reshape(1, -1))[:, 0]
            den = np.full(M, -np.inf)
            chunk = max(1, int(2**22 // max(M, 1)))
            for lo in range(0, k, chunk):
                hi = min(k, lo + chunk)
                block = model.loglik_matrix(Y, grid[lo:hi]) + logq[None, lo:hi]
                den = np.maximum(den, block.max(axis=1))
            den = np.maximum(
                den, model.loglik_matrix(Y, extra)[:, 0] + logq_extra)
            eta_i = np.sort(np.exp(ll_i + logq[i] - den))
            counts[i] = np.searchsorted(eta_i, t_obs + TIE_TOL, side="right") / M

        _run_indexed(work, len(live), config.n_threads())

    order = live[np.argsort(q[live], kind="stable")[::-1]]
    levels = q[order]
    if choquet_rule == "exact":
        pi = np.zeros(k)
        running = np.zeros(k)
        i = 0
        n_live = len(order)
        while i < n_live:
            v = levels[i]
            j = i
            while j < n_live and levels[j] == v:
                running = np.maximum(running, counts[order[j]])
                j += 1
            v_next = levels[j] if j < n_live else 0.0
            pi += (v - v_next) * running
            i = j
    elif choquet_rule == "midpoint":
        R = config.alpha_levels
        mids = (np.arange(R) + 0.5) / R
        pi = np.zeros(k)
        for alpha in mids:
            cut = order[levels > alpha]
            if len(cut) == 0:
                raise EmptyCut(f"prior cut at level {alpha:.4g} is empty")
            pi += counts[cut].max(axis=0)
        pi /= R
    else:
        raise ValueError("choquet_rule must be 'exact' or 'midpoint'")

    pi = np.minimum(pi, 1.0)
    if mc_engine:
        se = np.sqrt(pi * (1.0 - pi) / M)
    else:
        se = np.zeros_like(pi)
    meta = _mc_meta(f"partial-{choquet_rule}", config, pi, se)
    meta["engine"] = f"partial-{engine}-{choquet_rule}"
    meta["sup_witness"] = (tuple(np.atleast_1d(arg_num)), 1.0)
    meta["alpha_levels"] = config.alpha_levels
    return Contour(dom, pi.reshape(dom.shape), meta=meta)


# -- precise prior -----------------------------------------------------------


def _conjugate_posterior(model, y, prior):
    fam = prior.family
    if fam is None:
        return None
    name, params = fam
    if name == "beta" and model.name == "binomial":
        a, b = params
        return "beta", (a + float(y), b + model.n - float(y))
    if name == "normal" and model.name == "normal_known_var":
        m0, v0 = params
        vn = model.sigma**2 / model.n
        var_post = 1.0 / (1.0 / v0 + 1.0 / vn)
        mean_post = var_post * (m0 / v0 + float(y) / vn)
        return "normal", (mean_post, var_post)
    return None


def im_complete(model, y, prior, config):
    """IM contour under a precise (probability) prior: the posterior is
    summarized by its density-ordering contour

        pi_y(theta) = Q_y{ q_y(T) <= q_y(theta) },

    the outer consonant approximation of the posterior. Conjugate pairs
    evaluate in closed form; otherwise the posterior is reached by
    self-normalized importance sampling from the prior with likelihood
    weights, which fails loudly when the effective sample size collapses.
    """
    if not isinstance(prior, PrecisePrior):
        raise TypeError("im_complete needs a precise prior")
    dom = config.theta_grid
    grid = dom.points()
    conj = _conjugate_posterior(model, y, prior)
    if conj is not None:
        family, params = conj
        pi = posterior_contour_values(family, params, grid[:, 0])
        if family == "normal":
            mode = params[0]
        else:
            a, b = params
            mode = (a - 1.0) / (a + b - 2.0) if (a > 1 and b > 1) else (
                0.0 if a <= 1 else 1.0)
        meta = {
            "engine": f"complete-{family}",
            "sup_witness": ((mode,), 1.0),
            "tol_sup": ANALYTIC_TOL,
            "posterior": (family, params),
        }
        return Contour(dom, pi.reshape(dom.shape), meta=meta)

    # importance route: draws from the prior, likelihood weights
    M = config.mc_size
    rng = substream(config.seed, TAG_PRIOR)
    th = prior.sample(M, rng)
    th = np.asarray(th, dtype=float).reshape(M, -1)
    logw = model.loglik_matrix(model.data_batch(y), th)[0]
    w = np.exp(logw - logw.max())
    ess = w.sum() ** 2 / (w**2).sum()
    if ess < MIN_ESS:
        raise DegeneratePosterior(
            f"effective sample size {ess:.1f} < {MIN_ESS:.0f}; the prior "
            "barely overlaps the likelihood"
        )
    w = w / w.sum()
    # posterior density ordering statistic, up to a constant
    stat_draws = prior.logpdf(th) + logw
    stat_grid = prior.logpdf(grid) + model.loglik_matrix(
        model.data_batch(y), grid)[0]
    order = np.argsort(stat_draws, kind="stable")
    cum = np.cumsum(w[order])
    pos = np.searchsorted(stat_draws[order], stat_grid, side="right")
    pi = np.where(pos > 0, cum[np.maximum(pos - 1, 0)], 0.0)
    # witness: refined mode of the posterior ordering statistic
    j = int(np.argmax(stat_grid))
    mode_x = grid[j]
    if dom.ndim == 1 and 0 < j < grid.shape[0] - 1 and config.refine_sup:
        xs = dom.axes[0].values

        def f(x):
            xx = np.array([[x]])
            return float(prior.logpdf(xx)[0]
                         + model.loglik_matrix(model.data_batch(y), xx)[0, 0])

        x_r, _ = golden_section_max(f, xs[j - 1], xs[j + 1])
        mode_x = np.array([x_r])
    pi = np.minimum(pi, 1.0)
    se = np.sqrt(pi * (1.0 - pi) / max(ess, 1.0))
    meta = _mc_meta("complete-is", config, pi, se)
    meta["ess"] = float(ess)
    meta["sup_witness"] = (tuple(np.atleast_1d(mode_x)), 1.0)
    return Contour(dom, pi.reshape(dom.shape), meta=meta)


def build_im(model, y, prior, config, **kw):
    """Dispatch on the prior kind: vacuous, possibilistic, or precise."""
    if prior is None or isinstance(prior, VacuousPrior):
        return im_vacuous(model, y, config)
    if isinstance(prior, PossibilisticPrior):
        return im_partial(model, y, prior, config, **kw)
    if isinstance(prior, PrecisePrior):
        return im_complete(model, y, prior, config)
    raise TypeError(f"unrecognized prior {prior!r}")
