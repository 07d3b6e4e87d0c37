"""Possibilistic inferential models: strongly valid plausibility contours
for parameters and predictions, with empirical calibration diagnostics."""

from .contours import (
    Contour,
    IntervalAxis,
    LabelAxis,
    ParamDomain,
    Region,
    consonify,
    domain_1d,
    domain_labels,
    extend_to,
    prob2poss,
)
from .engine import (
    IMConfig,
    build_im,
    im_complete,
    im_partial,
    im_vacuous,
    im_vacuous_naive,
)
from .errors import (
    ConfigError,
    DegeneratePosterior,
    EmptyAssertion,
    EmptyCut,
    EmptyFiber,
    IndependenceRequired,
    LowESS,
    NotNormalized,
    UnboundedLikelihood,
    UncoveredTarget,
)
from .marginal import im_conditional, im_marginal, profile_relative_likelihood
from .models import MODELS, relative_likelihood
from .nonparam import (
    el_mean_eta,
    el_quantile_eta,
    im_bootstrap,
    im_bootstrap_quantile,
    im_split_lr,
    im_split_normal,
)
from .predict import (
    fisher_combine,
    poss_repr_mc,
    poss_repr_normal,
    predict_gamma_max,
    predict_multinomial,
    predict_normal,
    predict_opt1,
)
from .priors import (
    PossibilisticPrior,
    PrecisePrior,
    VacuousPrior,
    beta_prior,
    markov_prior,
    normal_prior,
    prob2poss_mc,
    prob2poss_prior,
    table_prior,
)
from .validity import (
    ValidityReport,
    check_coverage,
    check_half_coherence,
    check_outer_dominance,
    check_strong_validity,
    dkw_band,
)

__version__ = "0.1.0"

__all__ = [
    "Contour", "IntervalAxis", "LabelAxis", "ParamDomain", "Region",
    "consonify", "domain_1d", "domain_labels", "extend_to", "prob2poss",
    "IMConfig", "build_im", "im_complete", "im_partial", "im_vacuous",
    "im_vacuous_naive",
    "im_conditional", "im_marginal", "profile_relative_likelihood",
    "MODELS", "relative_likelihood",
    "el_mean_eta", "el_quantile_eta", "im_bootstrap",
    "im_bootstrap_quantile", "im_split_lr", "im_split_normal",
    "fisher_combine", "poss_repr_mc", "poss_repr_normal",
    "predict_gamma_max", "predict_multinomial", "predict_normal",
    "predict_opt1",
    "PossibilisticPrior", "PrecisePrior", "VacuousPrior", "beta_prior",
    "markov_prior", "normal_prior", "prob2poss_mc", "prob2poss_prior",
    "table_prior",
    "ValidityReport", "check_coverage", "check_half_coherence",
    "check_outer_dominance", "check_strong_validity", "dkw_band",
    "ConfigError", "DegeneratePosterior", "EmptyAssertion", "EmptyCut",
    "EmptyFiber", "IndependenceRequired", "LowESS", "NotNormalized",
    "UnboundedLikelihood", "UncoveredTarget",
]
