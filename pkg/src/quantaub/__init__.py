"""Quantified Tauberian remainder estimates.

Submodules:

``growth``        weight sequences, associated functions and growth checks
``testfn``        band-limited test functions with a sign pattern
``tauber``        one-sided Tauberian conditions and the convolution sandwich
``rates``         boundary classes, error terms and optimised decay rates
``appendix``      regeneration of the table of decay rates
``berry_esseen``  numerical check of a Berry-Esseen type inequality
``cli``           batch front end
"""

__version__ = "0.1.0"

from .errors import (AssertionFault, FlatObjective, NumericalFault, SchemaError,  # noqa: E402
                     TauberError)
from .growth import (CompositeWeight, GrowthSequence, WeightFunction, associated_function,  # noqa: E402
                     check_log_convex, check_non_quasianalytic, check_positive_increase,
                     check_regular_growth, inverse_monotone)
from .testfn import TestFunction, berry_esseen_phi, build_phi_n, verify_testfn  # noqa: E402
from .tauber import (HigherOrderData, TauberianData, check_condition_T, check_condition_T_m,  # noqa: E402
                     fourier_pairing, sandwich_bounds, sandwich_bounds_m)
from .rates import (BoundaryClass, RateResult, error_term, optimize_rate, theorem_1_4_rate,  # noqa: E402
                    wiener_ikehara_rate)
from .appendix import ROWS, appendix_table  # noqa: E402
from .berry_esseen import DistributionPair, be_rhs, integral_term, modulus_term, sup_diff, verify_be  # noqa: E402

__all__ = [
    "__version__",
    "TauberError", "SchemaError", "NumericalFault", "AssertionFault", "FlatObjective",
    "GrowthSequence", "WeightFunction", "CompositeWeight", "associated_function", "check_log_convex",
    "check_non_quasianalytic", "check_positive_increase", "check_regular_growth", "inverse_monotone",
    "TestFunction", "build_phi_n", "berry_esseen_phi", "verify_testfn",
    "TauberianData", "HigherOrderData", "check_condition_T", "check_condition_T_m", "sandwich_bounds",
    "sandwich_bounds_m", "fourier_pairing",
    "BoundaryClass", "RateResult", "error_term", "optimize_rate", "theorem_1_4_rate", "wiener_ikehara_rate",
    "ROWS", "appendix_table",
    "DistributionPair", "sup_diff", "modulus_term", "integral_term", "be_rhs", "verify_be",
]
