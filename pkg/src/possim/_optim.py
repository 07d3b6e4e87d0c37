"""Small numeric helpers shared across modules."""
import numpy as np

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, tol=1e-8, max_iter=200):
    """Maximize a unimodal scalar function on [lo, hi].

    Returns (x, f(x)). Plain golden-section; good enough for the local
    refinement of grid suprema where the bracket is one grid cell wide.
    """
    a, b = float(lo), float(hi)
    if b < a:
        a, b = b, a
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    c = b - INV_PHI * h
    d = a + INV_PHI * h
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if h <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + INV_PHI * h
            fd = f(d)
    if fc >= fd:
        return c, fc
    return d, fd


def newton_bracketed(g, gprime, lo, hi, x0=None, tol=1e-12, max_iter=50):
    """Root of g on [lo, hi] by Newton steps with bisection fallback.

    g(lo) and g(hi) must have opposite signs. Each Newton step that leaves
    the bracket is replaced by a bisection step, so convergence is assured.
    """
    a, b = float(lo), float(hi)
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    if np.sign(ga) == np.sign(gb):
        raise ValueError("root not bracketed")
    x = 0.5 * (a + b) if x0 is None else float(x0)
    if not (a < x < b):
        x = 0.5 * (a + b)
    for _ in range(max_iter):
        gx = g(x)
        if abs(gx) < tol:
            return x
        if np.sign(gx) == np.sign(ga):
            a, ga = x, gx
        else:
            b, gb = x, gx
        d = gprime(x)
        step_ok = d != 0.0 and np.isfinite(d)
        if step_ok:
            xn = x - gx / d
            step_ok = a < xn < b
        x = xn if step_ok else 0.5 * (a + b)
    return x


def gamma_mle_shape(logmean_minus_meanlog, tol=1e-12, max_iter=60):
    """Shape MLE for a gamma sample, vectorized over the statistic

    c = log(mean y) - mean(log y), which is >= 0 by Jensen. Solves
    log(a) - digamma(a) = c by Newton from the standard closed-form start.
    """
    from scipy import special

    c = np.asarray(logmean_minus_meanlog, dtype=float)
    c = np.maximum(c, 1e-12)
    a = (3.0 - c + np.sqrt((c - 3.0) ** 2 + 24.0 * c)) / (12.0 * c)
    for _ in range(max_iter):
        g = np.log(a) - special.digamma(a) - c
        gp = 1.0 / a - special.polygamma(1, a)
        step = g / gp
        a_new = a - step
        bad = (a_new <= 0) | ~np.isfinite(a_new)
        a_new = np.where(bad, a / 2.0, a_new)
        done = np.all(np.abs(a_new - a) <= tol * np.maximum(1.0, np.abs(a)))
        a = a_new
        if done:
            break
    return a
