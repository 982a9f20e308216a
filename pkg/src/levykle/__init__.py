"""Truncated Karhunen-Loeve expansions of square-integrable Levy processes.

The package splits into small layers: ``special`` (exponential integral and
its tabulated inverse), ``models`` (generating triples, tail integrals and
the stock processes), ``basis`` (the closed-form sine eigenbasis and path
reconstruction), ``shotnoise`` (series samplers for the coefficient vector),
``oracles``/``validation`` (independent checks) and ``cli``.
"""

from .basis import KleBasis, PathApproximation, reconstruct, variance_capture
from .models import (
    GeneratingTriple,
    LevyModel,
    ModelConditionError,
    SplitModel,
    TailIntegral,
    as_split,
    center,
    from_density,
    make_brownian,
    make_cp_exponential,
    make_gamma,
    make_variance_gamma,
    model_from_config,
    psi_second_derivative,
)
from .oracles import (
    brute_force_coeffs,
    coeff_char_exponent,
    direct_series_subordinator,
    empirical_cf,
    ks_two_sample,
    mixed_fourth_cumulant,
)
from .shotnoise import (
    ArrivalStream,
    CoefficientSample,
    ShotConfig,
    TruncationCapError,
    arrival_stream,
    derive_rng,
    extend_dimension,
    sample_coeffs,
    sample_coeffs_batch,
    sample_coeffs_centered,
    sample_coeffs_finite_variation,
    write_coefficients_csv,
)
from .special import (
    BracketError,
    MonotoneInverseTable,
    QuadratureError,
    build_e1_inverse,
    default_e1_inverse,
    exp_integral_e1,
    invert_monotone,
    quad,
)
from .validation import run_validation

__version__ = "0.1.0"

__all__ = [
    "ArrivalStream",
    "BracketError",
    "CoefficientSample",
    "GeneratingTriple",
    "KleBasis",
    "LevyModel",
    "ModelConditionError",
    "MonotoneInverseTable",
    "PathApproximation",
    "QuadratureError",
    "ShotConfig",
    "SplitModel",
    "TailIntegral",
    "TruncationCapError",
    "arrival_stream",
    "as_split",
    "brute_force_coeffs",
    "build_e1_inverse",
    "center",
    "coeff_char_exponent",
    "default_e1_inverse",
    "derive_rng",
    "direct_series_subordinator",
    "empirical_cf",
    "exp_integral_e1",
    "extend_dimension",
    "from_density",
    "invert_monotone",
    "ks_two_sample",
    "make_brownian",
    "make_cp_exponential",
    "make_gamma",
    "make_variance_gamma",
    "mixed_fourth_cumulant",
    "model_from_config",
    "psi_second_derivative",
    "quad",
    "reconstruct",
    "run_validation",
    "sample_coeffs",
    "sample_coeffs_batch",
    "sample_coeffs_centered",
    "sample_coeffs_finite_variation",
    "variance_capture",
    "write_coefficients_csv",
]
