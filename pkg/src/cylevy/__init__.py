"""Ornstein-Uhlenbeck processes driven by cylindrical symmetric Levy noise.

Membership criteria for the state space, exact and approximate simulation of
the diagonal system, invariant laws and irreducibility estimates.
"""
__version__ = "0.1.0"

from .criteria import (  # noqa: E402
    CriterionReport,
    admissible_weight,
    cylindrical_criterion,
    cylindrical_term,
    f0_closed_form,
    ou_criterion,
    ou_term,
    sufficient_check,
)
from .cylindrical import (  # noqa: E402
    Ball,
    EnsembleStats,
    OUModel,
    TruncatedState,
    convergence_to_invariant,
    h_norm_profile,
    irreducibility_estimate,
    sample_invariant,
    simulate,
    step,
    support_full_precheck,
)
from .heat_example import HeatScenario, run_scenario  # noqa: E402
from .levy_measure import (  # noqa: E402
    CompoundPoissonSymmetric,
    StableFamily,
    SymmetricLevyMeasure,
    TableDensity,
    TemperedStable,
)
from .model import Spectrum  # noqa: E402
from .numerics import SeriesVerdict, Verdict, classify_series, integrate  # noqa: E402
from .ou1d import OUParams, StableLaw, convolution_scale, invariant_scale  # noqa: E402
