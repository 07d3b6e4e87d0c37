"""Command line interface.

    im contour  CONFIG.toml [--out FILE] [--seed N] [--threads N] ...
    im region   CONFIG.toml --alpha A
    im predict  CONFIG.toml [--out FILE]
    im validate CONFIG.toml

Configs are TOML with [model], [data], [prior], [engine] tables plus
[predict] or [validate] where relevant. Command line flags override the
[engine] table. Any Monte Carlo route requires a seed (flag or config).

Exit status: 0 on success, 2 for configuration problems, 3 for runtime
failures inside the numerical engines.
"""
import sys

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .contours import Contour, IntervalAxis, LabelAxis, ParamDomain
from .engine import ENGINES, IMConfig, _conjugate_posterior, build_im
from .errors import (
    ConfigError,
    DegeneratePosterior,
    EmptyAssertion,
    EmptyCut,
    EmptyFiber,
    NotNormalized,
    UnboundedLikelihood,
)
from .marginal import im_marginal
from .models import MODELS
from .nonparam import (
    el_mean_eta,
    im_bootstrap,
    im_bootstrap_quantile,
    im_split_normal,
)
from .predict import predict_gamma_max, predict_multinomial, predict_normal
from .priors import (
    PrecisePrior,
    VacuousPrior,
    beta_prior,
    markov_prior,
    normal_prior,
    prob2poss_prior,
    table_prior,
)
from . import validity as validity_mod

ENGINE_FAILURES = (
    NotNormalized,
    EmptyCut,
    EmptyFiber,
    EmptyAssertion,
    UnboundedLikelihood,
    DegeneratePosterior,
    FloatingPointError,
)


def _load(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML: {e}") from e


def _need(table, key, where):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]", key=key)
    return table[key]


def _domain_from(spec):
    if isinstance(spec, dict):
        spec = [spec]
    axes = []
    for ax in spec:
        name = _need(ax, "name", "engine.grid")
        if "labels" in ax:
            axes.append(LabelAxis(name, tuple(ax["labels"])))
        else:
            axes.append(IntervalAxis(
                name, float(_need(ax, "lo", "engine.grid")),
                float(_need(ax, "hi", "engine.grid")),
                int(_need(ax, "n", "engine.grid")),
            ))
    return ParamDomain(axes)


_MODEL_ALIASES = {
    "normal": "normal_known_var",
    "normal_known": "normal_known_var",
    "normal_unknown": "normal_unknown_var",
    "odds_ratio": "odds_ratio_conditional",
    "ar1": "ar1_conditional",
    "gig": "gig_conditional",
}


def _canon_model_name(name):
    name = str(name).strip().lower().replace("-", "_")
    return _MODEL_ALIASES.get(name, name)


def _build_model(cfg):
    table = _need(cfg, "model", "config")
    name = _canon_model_name(_need(table, "name", "model"))
    if name not in MODELS:
        known = ", ".join(sorted(MODELS))
        raise ConfigError(f"unknown model {name!r}; known: {known}", key="name")
    kwargs = {k: v for k, v in table.items() if k != "name"}
    try:
        return MODELS[name](**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad parameters for model {name!r}: {e}") from e


def _build_prior(cfg, domain):
    table = cfg.get("prior", {"kind": "vacuous"})
    kind = table.get("kind", table.get("family", "vacuous"))
    if kind in ("precise", "possibilistic"):
        kind = _need(table, "family", "prior")
    if kind == "prob2poss-of":
        kind = "prob2poss"
    if kind == "vacuous":
        return VacuousPrior()
    if kind == "markov":
        bound = table.get("K", table.get("bound"))
        if bound is None:
            raise ConfigError("missing key 'K' in [prior]", key="K")
        return markov_prior(float(bound))
    if kind == "beta":
        return beta_prior(_need(table, "a", "prior"), _need(table, "b", "prior"))
    if kind == "normal":
        return normal_prior(_need(table, "mean", "prior"),
                            _need(table, "var", "prior"))
    if kind == "table":
        return table_prior(domain, _need(table, "values", "prior"))
    if kind == "prob2poss":
        fam = _need(table, "family", "prior")
        if fam == "beta":
            base = beta_prior(_need(table, "a", "prior"),
                              _need(table, "b", "prior"))
        elif fam == "normal":
            base = normal_prior(_need(table, "mean", "prior"),
                                _need(table, "var", "prior"))
        else:
            raise ConfigError(f"unknown prob2poss family {fam!r}", key="family")
        return prob2poss_prior(base)
    raise ConfigError(f"unknown prior kind {kind!r}", key="kind")


def _get_data(cfg):
    table = _need(cfg, "data", "config")
    y = _need(table, "y", "data")
    return np.asarray(y, dtype=float) if isinstance(y, list) else float(y)


def _coerce(text):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return [_coerce(t) for t in inner.split(",")] if inner else []
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _split_top(text, sep=","):
    """Split on sep outside square brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p for p in parts if p.strip()]


def _parse_kv(text, where):
    out = {}
    for item in _split_top(text):
        if "=" not in item:
            raise ConfigError(f"expected key=value in --{where}: {item!r}",
                              key=where)
        k, v = item.split("=", 1)
        out[k.strip()] = _coerce(v)
    return out


def _parse_prior_flag(text):
    head, _, rest = text.partition(":")
    table = {"kind": head.strip()}
    if rest:
        table.update(_parse_kv(rest, "prior"))
    return table


def _parse_grid_flag(text, model):
    axes = []
    for i, chunk in enumerate(_split_top(text)):
        name, _, span = chunk.strip().rpartition("=")
        name = name.strip()
        parts = span.split(":")
        if len(parts) != 3:
            raise ConfigError(f"expected lo:hi:n in --grid, got {chunk!r}",
                              key="grid")
        if not name:
            name = (model.param_names[i]
                    if model is not None and i < len(model.param_names)
                    else f"axis{i + 1}")
        axes.append({"name": name, "lo": float(parts[0]),
                     "hi": float(parts[1]), "n": int(parts[2])})
    return axes


def _overlay_flags(cfg, model, args, data, prior, grid):
    """Flags mirror config keys one-to-one and win over the file."""
    if model is not None:
        table = dict(cfg.get("model", {}))
        table["name"] = model
        cfg["model"] = table
    if args is not None:
        cfg.setdefault("model", {}).update(_parse_kv(args, "args"))
    if data is not None:
        cfg["data"] = _parse_kv(data, "data")
    if prior is not None:
        cfg["prior"] = _parse_prior_flag(prior)
    if grid is not None:
        built = None
        name = cfg.get("model", {}).get("name")
        if name is not None and _canon_model_name(name) in MODELS:
            built = _build_model(cfg)
        cfg.setdefault("engine", {})["grid"] = _parse_grid_flag(grid, built)
    return cfg


def _engine_config(cfg, model, data, seed, threads, engine, mc_size):
    table = cfg.get("engine", {})
    if "grid" in table:
        domain = _domain_from(table["grid"])
    elif model is not None:
        domain = model.default_domain(data)
    else:
        raise ConfigError("missing [engine] grid", key="grid")
    seed = seed if seed is not None else table.get("seed")
    engine = engine or table.get("engine", "auto")
    if engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}", key="engine")
    threads = threads if threads is not None else table.get("threads")
    mc_size = mc_size if mc_size is not None else table.get("mc_size", 5000)
    try:
        return IMConfig(
            theta_grid=domain,
            mc_size=int(mc_size),
            alpha_levels=int(table.get("alpha_levels", 100)),
            seed=None if seed is None else int(seed),
            engine=engine,
            threads=None if threads is None else int(threads),
            refine_sup=bool(table.get("refine_sup", True)),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _needs_seed(model, y, config, prior=None, interest=None):
    if model is None:
        return False
    if config.engine == "exact":
        return False
    if interest is not None:
        # the location and spread marginals have closed forms
        return model.name != "normal_unknown_var"
    if isinstance(prior, PrecisePrior):
        return _conjugate_posterior(model, y, prior) is None
    sup = model.support()
    if config.engine == "auto" and sup is not None and len(sup) <= 2000:
        return False
    return True


def _contour_from_config(cfg, seed, threads, engine, mc_size):
    kind = cfg.get("model", {}).get("name", "")
    if kind == "bootstrap_quantile":
        table = cfg["model"]
        y = _get_data(cfg)
        config = _engine_config(cfg, None, y, seed, threads, engine, mc_size)
        if config.seed is None:
            raise ConfigError("a seed is required (flag --seed or [engine] "
                              "seed)", key="seed")
        return im_bootstrap_quantile(
            y, float(_need(table, "r", "model")), config.theta_grid,
            B=int(table.get("B", 2000)), seed=config.seed,
        )
    if kind == "bootstrap_mean":
        table = cfg["model"]
        y = _get_data(cfg)
        config = _engine_config(cfg, None, y, seed, threads, engine, mc_size)
        if config.seed is None:
            raise ConfigError("a seed is required (flag --seed or [engine] "
                              "seed)", key="seed")
        return im_bootstrap(
            y, el_mean_eta, float(np.mean(y)), config.theta_grid,
            B=int(table.get("B", 2000)), seed=config.seed,
        )
    if kind == "split_normal":
        table = cfg["model"]
        y = _get_data(cfg)
        config = _engine_config(cfg, None, y, seed, threads, engine, mc_size)
        return im_split_normal(
            y, float(_need(table, "sigma", "model")), config.theta_grid,
            split_frac=float(table.get("split_frac", 0.5)),
        )
    model = _build_model(cfg)
    y = _get_data(cfg)
    config = _engine_config(cfg, model, y, seed, threads, engine, mc_size)
    prior = _build_prior(cfg, config.theta_grid)
    interest = cfg.get("marginal", {}).get("interest")
    if config.seed is None and _needs_seed(model, y, config, prior, interest):
        raise ConfigError("a seed is required (flag --seed or [engine] seed)",
                          key="seed")
    if interest is not None:
        if not isinstance(prior, VacuousPrior):
            raise ConfigError("marginal IMs take no prior", key="interest")
        try:
            return im_marginal(model, y, interest, config)
        except KeyError as e:
            raise ConfigError(str(e), key="interest") from e
    return build_im(model, y, prior, config)


def _emit(contour, out):
    text = contour.to_csv()
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")


def _run(fn):
    try:
        fn()
    except ConfigError as e:
        key = f" (key: {e.key})" if e.key else ""
        click.echo(f"config error: {e}{key}", err=True)
        sys.exit(2)
    except ENGINE_FAILURES as e:
        click.echo(f"engine error: {type(e).__name__}: {e}", err=True)
        sys.exit(3)


@click.group()
def main():
    """Possibilistic inferential models."""


def _spec_options(fn):
    """Flags mirroring the config tables, shared by contour and region."""
    opts = [
        click.option("--model", "model_name", default=None,
                     help="Model name ([model] name)."),
        click.option("--args", "model_args", default=None,
                     help="Model parameters, k=v comma list ([model])."),
        click.option("--data", "data_kv", default=None,
                     help="Observed data, e.g. y=7 or y=[1,2] ([data])."),
        click.option("--prior", "prior_spec", default=None,
                     help="Prior, e.g. vacuous | markov:K=1 | beta:a=2,b=2."),
        click.option("--grid", "grid_spec", default=None,
                     help="Grid lo:hi:n per axis, comma separated ([engine] "
                          "grid)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False),
                required=False)
@_spec_options
@click.option("--out", "-o", type=click.Path(dir_okay=False), default=None,
              help="CSV output path (default: stdout).")
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--engine", type=click.Choice(ENGINES), default=None)
@click.option("--mc-size", "--mc", "mc_size", type=int, default=None)
def contour(config, model_name, model_args, data_kv, prior_spec, grid_spec,
            out, seed, threads, engine, mc_size):
    """Plausibility contour on the configured grid."""

    def go():
        cfg = _load(config) if config else {}
        _overlay_flags(cfg, model_name, model_args, data_kv, prior_spec,
                       grid_spec)
        c = _contour_from_config(cfg, seed, threads, engine, mc_size)
        _emit(c, out)

    _run(go)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False),
                required=False)
@_spec_options
@click.option("--alpha", type=float, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--engine", type=click.Choice(ENGINES), default=None)
@click.option("--mc-size", "--mc", "mc_size", type=int, default=None)
def region(config, model_name, model_args, data_kv, prior_spec, grid_spec,
           alpha, seed, threads, engine, mc_size):
    """Level-alpha plausibility region (plausibility strictly above alpha)."""

    def go():
        cfg = _load(config) if config else {}
        _overlay_flags(cfg, model_name, model_args, data_kv, prior_spec,
                       grid_spec)
        c = _contour_from_config(cfg, seed, threads, engine, mc_size)
        reg = c.region(alpha)
        if reg.is_empty:
            click.echo(f"alpha={alpha:g}: empty region")
            return
        dom = c.domain
        if dom.ndim == 1 and not dom.axes[0].is_discrete():
            spans = ", ".join(f"[{lo:.6g}, {hi:.6g}]"
                              for lo, hi in reg.intervals())
            click.echo(f"alpha={alpha:g}: {spans}")
        else:
            pts = reg.points()
            click.echo(f"alpha={alpha:g}: {len(pts)} grid points")
            for p in pts:
                click.echo("  " + " ".join(str(v) for v in p))
        if reg.touches_boundary():
            click.echo("warning: region touches the grid boundary; widen "
                       "the grid", err=True)

    _run(go)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--mc-size", type=int, default=None)
def predict(config, out, seed, threads, mc_size):
    """Predictive plausibility of a future observable."""

    def go():
        cfg = _load(config)
        table = _need(cfg, "predict", "config")
        kind = _need(table, "kind", "predict")
        if kind == "normal":
            y = _get_data(cfg)
            n = int(_need(table, "n", "predict"))
            sigma = float(_need(table, "sigma", "predict"))
            ybar = float(np.mean(y))
            zspec = _need(table, "z", "predict")
            z = np.linspace(float(zspec["lo"]), float(zspec["hi"]),
                            int(zspec["n"]))
            option = int(table.get("option", 3))
            vals = predict_normal(ybar, n, sigma, z, option=option)
            dom = ParamDomain([IntervalAxis("z", z[0], z[-1], len(z))])
            c = Contour(dom, vals, meta={
                "engine": f"predict-normal-opt{option}",
                "sup_witness": ((ybar,), 1.0), "tol_sup": 1e-9,
            })
            _emit(c, out)
            return
        if kind == "multinomial":
            y = np.asarray(_need(cfg.get("data", {}), "y", "data"), dtype=int)
            s = seed if seed is not None else cfg.get("engine", {}).get("seed")
            m = mc_size if mc_size is not None else cfg.get(
                "engine", {}).get("mc_size", 10_000)
            if len(y) > 2 and s is None:
                raise ConfigError("a seed is required", key="seed")
            c = predict_multinomial(y, mc_size=int(m),
                                    seed=None if s is None else int(s))
            _emit(c, out)
            return
        if kind == "gamma_max":
            model = _build_model(cfg)
            y = _get_data(cfg)
            config_im = _engine_config(cfg, model, y, seed, threads, None,
                                       mc_size)
            if config_im.seed is None:
                raise ConfigError("a seed is required", key="seed")
            config_im.engine = "importance"
            pi = build_im(model, y, VacuousPrior(), config_im)
            zspec = _need(table, "z", "predict")
            z_axis = IntervalAxis("z", float(zspec["lo"]), float(zspec["hi"]),
                                  int(zspec["n"]))
            c = predict_gamma_max(
                model, y, pi, int(_need(table, "k", "predict")), z_axis,
                mc_size=int(table.get("f_mc_size", 2000)),
                seed=config_im.seed,
            )
            _emit(c, out)
            return
        raise ConfigError(f"unknown predict kind {kind!r}", key="kind")

    _run(go)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--n-sim", type=int, default=None)
def validate(config, seed, n_sim):
    """Strong-validity diagnostic for a configured case."""

    def go():
        cfg = _load(config)
        table = _need(cfg, "validate", "config")
        case = _need(table, "case", "validate")
        s = seed if seed is not None else table.get("seed")
        if s is None:
            raise ConfigError("a seed is required", key="seed")
        s = int(s)
        n = int(n_sim if n_sim is not None else table.get("n_sim", 5000))
        alphas = np.asarray(table.get(
            "alphas", np.round(np.arange(0.01, 0.51, 0.01), 2).tolist()))
        delta = float(table.get("delta", 0.01))
        sims = {}
        if case == "binomial_exact":
            from .models import Binomial

            model = Binomial(int(_need(table, "n_trials", "validate")))
            for th in table.get("theta_stars", [0.3, 0.5, 0.7]):
                sims[f"theta={th}"] = validity_mod.sim_pi_vacuous_exact(
                    model, float(th), n, s)
        elif case == "normal_pivot":
            from .models import NormalKnownVar

            model = NormalKnownVar(float(table.get("sigma", 1.0)),
                                   int(table.get("n_obs", 10)))
            for th in table.get("theta_stars", [0.0]):
                sims[f"theta={th}"] = validity_mod.sim_pi_vacuous_pivot(
                    model, float(th), n, int(table.get("mc_size", 10_000)), s)
        elif case == "beta_binomial":
            sims["beta-binomial"] = validity_mod.sim_pi_complete_beta_binomial(
                int(table.get("n_trials", 16)), float(table.get("a", 2.0)),
                float(table.get("b", 3.0)), n, s)
        elif case == "normal_markov":
            from .models import NormalKnownVar

            model = NormalKnownVar(float(table.get("sigma", 1.0)),
                                   int(table.get("n_obs", 10)))
            prior = markov_prior(float(table.get("bound", 1.0)))
            dom = _domain_from(_need(table, "grid", "validate"))
            for th in table.get("theta_stars", [0.0]):
                sims[f"theta={th}"] = validity_mod.sim_pi_partial(
                    model, prior, float(th), dom, n,
                    int(table.get("mc_size", 2000)), s)
        elif case == "split_normal":
            for th in table.get("theta_stars", [0.0]):
                sims[f"theta={th}"] = validity_mod.sim_pi_split_normal(
                    int(table.get("n_obs", 20)), float(table.get("sigma", 1.0)),
                    float(th), n, s)
        elif case == "bootstrap_quantile_gamma":
            shape = float(table.get("shape", 3.0))
            scale = float(table.get("scale", 1.0))
            r = float(table.get("r", 0.7))
            from scipy import stats as sps

            theta_star = float(sps.gamma.ppf(r, shape, scale=scale))
            sims["bootstrap-quantile"] = validity_mod.sim_pi_bootstrap_quantile(
                lambda rng, size: rng.gamma(shape, scale, size=size),
                int(table.get("n_obs", 25)), r, theta_star, n,
                int(table.get("B", 2000)), s)
        else:
            raise ConfigError(f"unknown validate case {case!r}", key="case")
        report = validity_mod.check_strong_validity(sims, alphas, delta=delta)
        for line in report.lines():
            click.echo(line)
        click.echo("verdict: " + ("pass" if report.passed else "FAIL"))

    _run(go)


if __name__ == "__main__":
    main()
