"""Position-auction mechanisms, first-price equilibrium bids, and the numeric
verification oracles that certify them."""

from .auction import (
    AuctionOutcome,
    ExpressiveBidProfile,
    MechanismSpec,
    ScalingVector,
    SimplifiedBidProfile,
    SlotCurve,
    ValueProfile,
    first_price_payments,
    greedy_allocate,
    run_auction,
    second_price_payments,
    vcg_payments_from_bids,
)
from .bayes import (
    AllocProbInput,
    BayesSetting,
    alloc_prob,
    best_response_scan,
    bstar_binomial,
    bstar_derivative,
    bstar_integral,
    check_auxiliary_lemmas,
    check_lemma1,
    check_lemma2,
    check_ode,
    expected_utility,
    myerson_expected_payment,
    truthful_utility_onedim,
    truthful_win_probability,
)
from .bidtable import EquilibriumBidTable, tabulate_bstar
from .complete_info import (
    DeviationGrid,
    NashReport,
    VcgResult,
    check_payment_floor,
    construct_equilibrium_bids,
    is_efficient,
    truthful_vcg,
    verify_nash,
)
from .distributions import (
    EmpiricalCDF,
    Power,
    TruncatedExponential,
    Uniform,
    ValueDistribution,
    distribution_from_descriptor,
    z_derivative_identity_check,
    z_function,
)
from .kernels import USING_COMPILED
from .quadrature import QuadratureConfig, QuadratureError, integrate
from .simulate import RevenueEstimate, simulate_revenue

__version__ = "0.1.0"

__all__ = [
    "AllocProbInput",
    "AuctionOutcome",
    "BayesSetting",
    "DeviationGrid",
    "EmpiricalCDF",
    "EquilibriumBidTable",
    "ExpressiveBidProfile",
    "MechanismSpec",
    "NashReport",
    "Power",
    "QuadratureConfig",
    "QuadratureError",
    "RevenueEstimate",
    "ScalingVector",
    "SimplifiedBidProfile",
    "SlotCurve",
    "TruncatedExponential",
    "Uniform",
    "USING_COMPILED",
    "ValueDistribution",
    "ValueProfile",
    "VcgResult",
    "alloc_prob",
    "best_response_scan",
    "bstar_binomial",
    "bstar_derivative",
    "bstar_integral",
    "check_auxiliary_lemmas",
    "check_lemma1",
    "check_lemma2",
    "check_ode",
    "check_payment_floor",
    "construct_equilibrium_bids",
    "distribution_from_descriptor",
    "expected_utility",
    "first_price_payments",
    "greedy_allocate",
    "integrate",
    "is_efficient",
    "myerson_expected_payment",
    "run_auction",
    "second_price_payments",
    "simulate_revenue",
    "tabulate_bstar",
    "truthful_utility_onedim",
    "truthful_vcg",
    "truthful_win_probability",
    "vcg_payments_from_bids",
    "verify_nash",
    "z_derivative_identity_check",
    "z_function",
]
