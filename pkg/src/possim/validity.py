"""Empirical calibration diagnostics.

Strong validity requires P{pi_Y(Theta) <= alpha} <= alpha for every alpha
and every generator consistent with the prior. The checks here simulate
that probability on an alpha grid and compare the exceedance to
alpha + b(delta, n), where

    b(delta, n) = sqrt(log(2 / delta) / (2 n))

is the Dvoretzky-Kiefer-Wolfowitz band: a simulated exceedance within the
band is consistent with exact validity at confidence 1 - delta.

Also here: exact finite-space checks that need no simulation at all
(consonant outer dominance over every subset, and the two coherence
inequalities linking prior and posterior upper/lower probabilities).
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from ._rng import TAG_GRID, TAG_RESAMPLE, TAG_SIM, substream
from .nonparam import _quantile_eta_from_u, el_quantile_eta
from .priors import posterior_contour_values, prior_weight


def dkw_band(delta, n_sim):
    return float(np.sqrt(np.log(2.0 / delta) / (2.0 * n_sim)))


@dataclass
class ValidityReport:
    """Exceedance curves per generator with the shared DKW band."""

    alphas: np.ndarray
    exceedance: dict
    n_sim: int
    delta: float = 0.01
    band: float = field(init=False)

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=float)
        self.band = dkw_band(self.delta, self.n_sim)

    def violation(self, name):
        return float(np.max(self.exceedance[name] - self.alphas))

    @property
    def worst_violation(self):
        return max(self.violation(name) for name in self.exceedance)

    @property
    def passed(self):
        return self.worst_violation <= self.band

    def lines(self):
        out = []
        for name in self.exceedance:
            v = self.violation(name)
            ok = "pass" if v <= self.band else "FAIL"
            out.append(
                f"{name}: max(exceedance - alpha) = {v:+.4f} "
                f"(band {self.band:.4f}) {ok}"
            )
        return out


def exceedance_profile(pi_values, alphas):
    """P-hat{pi <= alpha} on an alpha grid."""
    pi_values = np.sort(np.asarray(pi_values, dtype=float))
    alphas = np.asarray(alphas, dtype=float)
    return np.searchsorted(pi_values, alphas, side="right") / len(pi_values)


def check_strong_validity(pi_by_generator, alphas, delta=0.01):
    """Build a ValidityReport from simulated pi_Y(theta) draws, one array
    per generator; all arrays must share a length."""
    sizes = {len(v) for v in pi_by_generator.values()}
    if len(sizes) != 1:
        raise ValueError("generators must use the same number of simulations")
    n_sim = sizes.pop()
    exc = {
        name: exceedance_profile(vals, alphas)
        for name, vals in pi_by_generator.items()
    }
    return ValidityReport(alphas=np.asarray(alphas, dtype=float),
                          exceedance=exc, n_sim=n_sim, delta=delta)


def check_coverage(pi_values, alpha):
    """Non-coverage rate of the level-alpha region: fraction of simulated
    pi_Y(theta_true) at or below alpha (the region keeps plausibility
    strictly above alpha)."""
    pi_values = np.asarray(pi_values, dtype=float)
    return float(np.count_nonzero(pi_values <= alpha) / len(pi_values))


# -- simulators for pi_Y(theta) under specific constructions ------------------


def sim_pi_vacuous_exact(model, theta_star, n_sim, seed):
    """Exact per-dataset contour values at theta_star for a finite-support
    model, sampled under theta_star. The contour of every support atom is
    computed once; simulation only draws atoms."""
    atoms = model.support()
    if atoms is None:
        raise ValueError("model has no finite support")
    th = np.asarray([theta_star], dtype=float).reshape(1, -1)
    ll = model.loglik_matrix(atoms, th)[:, 0]
    eta = np.exp(ll - model.logpdf_sup(atoms))
    p = np.exp(ll)
    # pi(atom) = total mass of atoms with eta <= eta(atom)
    order = np.argsort(eta, kind="stable")
    cum = np.cumsum(p[order])
    pi_atom = np.empty(len(atoms))
    j = 0
    while j < len(atoms):
        k = j
        while k + 1 < len(atoms) and eta[order[k + 1]] <= eta[order[j]] + 1e-12:
            k += 1
        pi_atom[order[j : k + 1]] = min(cum[k], 1.0)
        j = k + 1
    rng = substream(seed, TAG_SIM)
    draws = rng.choice(len(atoms), size=n_sim, p=p / p.sum())
    return pi_atom[draws]


def sim_pi_vacuous_pivot(model, theta_star, n_sim, mc_size, seed):
    """Contour values at theta_star when eta(Y, theta) is a pivot: one
    shared eta sample calibrates every simulated dataset."""
    if not model.pivot_hint:
        raise ValueError(f"model {model.name} does not declare a pivot")
    th = np.asarray([theta_star], dtype=float).reshape(1, -1)
    rng = substream(seed, TAG_GRID, 0)
    Yref = model.sample(th[0], mc_size, rng)
    eta_ref = np.sort(np.exp(model.log_rel_lik(Yref, th)[:, 0]))
    rng = substream(seed, TAG_SIM)
    Y = model.sample(th[0], n_sim, rng)
    t = np.exp(model.log_rel_lik(Y, th)[:, 0])
    return np.searchsorted(eta_ref, t, side="right") / mc_size


def sim_pi_partial(model, prior, theta_star, domain, n_sim, mc_size, seed):
    """Contour values at theta_star for the possibilistic-prior IM, the
    generator being the point mass at theta_star (consistent with the
    prior whenever q(theta_star) = 1).

    The per-site eta reference samples are drawn once and shared across
    simulated datasets; each dataset only recomputes its own threshold.
    Reference etas and thresholds use the same grid-max denominator, so
    tie handling is identical on both sides of the comparison."""
    grid = domain.points()
    k = grid.shape[0]
    q = prior_weight(prior, grid)
    logq = np.log(np.maximum(q, 1e-300))
    live = np.nonzero(q > 0.0)[0]

    # shared per-site sorted eta samples, grid-max sample denominators
    refs = {}
    for i in live:
        rng = substream(seed, TAG_GRID, int(i))
        Y = model.sample(grid[i], mc_size, rng)
        ll_i = model.loglik_matrix(Y, grid[i].reshape(1, -1))[:, 0]
        den = (model.loglik_matrix(Y, grid) + logq[None, :]).max(axis=1)
        refs[int(i)] = np.sort(np.exp(ll_i + logq[i] - den))

    th_star = np.asarray([theta_star], dtype=float).reshape(1, -1)
    q_star = float(prior_weight(prior, th_star)[0])
    rng = substream(seed, TAG_SIM)
    Ysim = model.sample(th_star[0], n_sim, rng)
    ll_star = model.loglik_matrix(Ysim, th_star)[:, 0]
    den_obs = (model.loglik_matrix(Ysim, grid) + logq[None, :]).max(axis=1)
    t_sim = np.exp(ll_star + np.log(q_star) - den_obs)

    # running-max step sum over descending prior levels, vectorized in sims
    order = live[np.argsort(q[live], kind="stable")[::-1]]
    levels = q[order]
    pi = np.zeros(n_sim)
    running = np.zeros(n_sim)
    i = 0
    while i < len(order):
        v = levels[i]
        j = i
        while j < len(order) and levels[j] == v:
            ref = refs[int(order[j])]
            c = np.searchsorted(ref, t_sim + 1e-12, side="right") / mc_size
            running = np.maximum(running, c)
            j += 1
        v_next = levels[j] if j < len(order) else 0.0
        pi += (v - v_next) * running
        i = j
    return np.minimum(pi, 1.0)


def sim_pi_complete_beta_binomial(n, a, b, n_sim, seed):
    """Contour values pi_Y(Theta) with Theta ~ Beta(a, b) and
    Y | Theta ~ Binomial(n, Theta), the posterior contour in closed form."""
    rng = substream(seed, TAG_SIM)
    th = rng.beta(a, b, size=n_sim)
    y = rng.binomial(n, th)
    out = np.empty(n_sim)
    for s in range(n_sim):
        out[s] = posterior_contour_values(
            "beta", (a + y[s], b + n - y[s]), np.array([th[s]])
        )[0]
    return out


def sim_pi_split_normal(n, sigma, theta_star, n_sim, seed, split_frac=0.5):
    """Split-LR contour values at the true mean, vectorized closed form."""
    n1 = int(np.ceil(n * split_frac))
    rng = substream(seed, TAG_SIM)
    Y = rng.normal(theta_star, sigma, size=(n_sim, n))
    m1 = Y[:, :n1].mean(axis=1)
    m2 = Y[:, n1:].mean(axis=1)
    log_eta = -n1 * ((m1 - theta_star) ** 2 - (m1 - m2) ** 2) / (
        2.0 * sigma**2
    )
    return np.minimum(1.0, np.exp(log_eta))


def sim_pi_bootstrap_quantile(sampler, n, r, theta_star, n_sim, B, seed,
                              chunk=100):
    """Bootstrap-quantile contour values at the true quantile.

    sampler(rng, size) draws datasets with the target law. Memory-bounded
    by chunking the (sims x resamples x n) index tensor."""
    rng_data = substream(seed, TAG_SIM)
    out = np.empty(n_sim)
    done = 0
    s_idx = 0
    while done < n_sim:
        m = min(chunk, n_sim - done)
        Y = sampler(rng_data, (m, n))
        k = int(np.ceil(n * r))
        that = np.partition(Y, k - 1, axis=1)[:, k - 1]
        rng_b = substream(seed, TAG_RESAMPLE, s_idx)
        idx = rng_b.integers(0, n, size=(m, B, n))
        Yb = np.take_along_axis(Y[:, None, :], idx, axis=2)
        that_b = np.partition(Yb, k - 1, axis=2)[:, :, k - 1]
        le = (Yb <= that[:, None, None]).sum(axis=2).astype(float)
        lt = (Yb < that[:, None, None]).sum(axis=2).astype(float)
        u_b = np.where(
            that[:, None] < that_b, le,
            np.where(that[:, None] > that_b, lt, n * r),
        )
        eta_b = _quantile_eta_from_u(u_b, n, r)
        t_obs = np.array(
            [el_quantile_eta(Y[i], r, theta_star) for i in range(m)]
        )
        out[done : done + m] = (eta_b <= t_obs[:, None]).mean(axis=1)
        done += m
        s_idx += 1
    return out


# -- exact finite-space checks ------------------------------------------------


def check_outer_dominance(pmf):
    """Exhaustive check that the consonant approximation dominates the
    probability it came from: max contour over A >= P(A) for all 2^n
    subsets A (the empty set holds trivially with margin 0). Exact
    rational arithmetic throughout.

    pmf maps atoms to Fraction (or int/str convertible) masses summing
    to 1. Returns (ok, worst_margin, n_subsets); worst_margin is the
    minimum of max-contour - P(A), non-negative iff ok.
    """
    atoms = list(pmf.keys())
    p = [Fraction(pmf[a]) for a in atoms]
    if sum(p) != 1:
        raise ValueError("masses must sum to 1 exactly")
    contour = [sum(pj for pj in p if pj <= pi) for pi in p]
    n = len(atoms)
    # empty set: sup over nothing is 0, P is 0, margin 0
    worst = Fraction(0)
    count = 1
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            count += 1
            prob = sum(p[i] for i in subset)
            upper = max(contour[i] for i in subset)
            margin = upper - prob
            if margin < worst:
                worst = margin
    return worst >= 0, worst, count


def check_half_coherence(pi_by_y, prior_q):
    """Both coherence inequalities on a finite parameter space, checked
    over every assertion.

    pi_by_y: sequence of posterior contour arrays, one per possible
    dataset y, each over the same finite parameter grid. prior_q: prior
    contour on that grid. For every non-empty A (proper for the lower
    side):

        min_y [1 - max_{not A} pi_y]  <=  1 - max_{not A} q
        max_y [max_A pi_y]            >=  max_A q

    Returns a dict with the worst slack of each inequality (negative
    numbers mean violation) and the number of assertions checked.
    """
    pi_by_y = [np.asarray(v, dtype=float).reshape(-1) for v in pi_by_y]
    q = np.asarray(prior_q, dtype=float).reshape(-1)
    nt = len(q)
    if any(len(v) != nt for v in pi_by_y):
        raise ValueError("contours and prior must share the grid")
    worst_lower = np.inf
    worst_upper = np.inf
    count = 0
    for size in range(1, nt + 1):
        for subset in combinations(range(nt), size):
            count += 1
            a = np.zeros(nt, dtype=bool)
            a[list(subset)] = True
            upper_prior = q[a].max()
            sup_y = max(v[a].max() for v in pi_by_y)
            worst_upper = min(worst_upper, sup_y - upper_prior)
            if size < nt:
                lower_prior = 1.0 - q[~a].max()
                inf_y = min(1.0 - v[~a].max() for v in pi_by_y)
                worst_lower = min(worst_lower, lower_prior - inf_y)
    return {
        "worst_upper_slack": float(worst_upper),
        "worst_lower_slack": float(worst_lower),
        "n_assertions": count,
        "ok": worst_upper >= -1e-12 and worst_lower >= -1e-12,
    }
