"""Monte Carlo pricing of American-style path-dependent contracts.

Least-squares Monte Carlo over moving-window Asian and look-back options and
callable certificates, with interchangeable regression bases (polynomials,
randomized feed-forward and recurrent networks, truncated path signatures)
and Chebyshev / randomized-spot Delta and Gamma estimators.
"""

from .basis_poly import BasisTooLargeError, PolyBasisSpec, poly_count, poly_features
from .basis_random_nets import RffnnSpec, RrnnSpec, rffnn_features, rrnn_features
from .basis_signature import (
    PiecewiseLinearPath,
    SignatureBasisSpec,
    SignatureStream,
    TruncatedSignature,
    lead_lag,
    sig_feature_dim,
    signature,
    signature_features,
    time_join,
)
from .features import (
    GlobalStandardization,
    RiskSetSpec,
    StandardizedFeatures,
    extract_risk_factors,
    standardize,
)
from .lsmc import (
    BasisSpec,
    ExercisePolicy,
    PriceEstimate,
    ProductSpec,
    RegressionConfig,
    fit_policy,
    price_certificate_non_callable,
    price_with_policy,
    run_experiment,
)
from .market_model import (
    ModelParams,
    PathBatch,
    discount_factor,
    simulate_paths,
    simulate_paths_with_spots,
    write_paths_csv,
)
from .oracles import (
    TreeSpec,
    bs_closed_form,
    tree_greeks,
    tree_price_american,
    tree_price_european,
)
from .payoffs import (
    CertificateSpec,
    OptionSpec,
    WindowSpec,
    certificate_coupon,
    certificate_coupons,
    certificate_redemption,
    exercise_value,
    standard_certificate,
    window_stat,
)
from .sensitivities import (
    ChebGreeksConfig,
    ChebyshevInterpolant,
    GreekReport,
    chebyshev_greeks,
    make_lsmc_spot_pricer,
    regression_greeks,
)

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "BasisTooLargeError",
    "CertificateSpec",
    "ChebGreeksConfig",
    "ChebyshevInterpolant",
    "ExercisePolicy",
    "GlobalStandardization",
    "GreekReport",
    "ModelParams",
    "OptionSpec",
    "PathBatch",
    "PiecewiseLinearPath",
    "PolyBasisSpec",
    "PriceEstimate",
    "ProductSpec",
    "RegressionConfig",
    "RffnnSpec",
    "RiskSetSpec",
    "RrnnSpec",
    "SignatureBasisSpec",
    "SignatureStream",
    "StandardizedFeatures",
    "TreeSpec",
    "TruncatedSignature",
    "WindowSpec",
    "bs_closed_form",
    "certificate_coupon",
    "certificate_coupons",
    "certificate_redemption",
    "chebyshev_greeks",
    "discount_factor",
    "exercise_value",
    "extract_risk_factors",
    "fit_policy",
    "lead_lag",
    "make_lsmc_spot_pricer",
    "poly_count",
    "poly_features",
    "price_certificate_non_callable",
    "price_with_policy",
    "regression_greeks",
    "rffnn_features",
    "rrnn_features",
    "run_experiment",
    "sig_feature_dim",
    "signature",
    "signature_features",
    "simulate_paths",
    "simulate_paths_with_spots",
    "standard_certificate",
    "standardize",
    "time_join",
    "tree_greeks",
    "tree_price_american",
    "tree_price_european",
    "window_stat",
    "write_paths_csv",
]
