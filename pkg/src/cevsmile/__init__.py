"""Option pricing when the Black-Scholes variance is drawn from a CEV law.

The submodules are:

- ``specfun``: special functions (Bessel, incomplete gamma, Mills ratios)
- ``cev_dist``: the CEV terminal law, its atom and moments
- ``bsm``: the Black-Scholes kernel, greeks and implied volatility
- ``pricer``: mixture prices, digitals, skew integrals and hedge ratios
- ``asymptotics``: small- and large-maturity expansions
- ``mgf``: closed-form CGFs and wing slopes
- ``mc_oracle``: Monte-Carlo samplers and price estimates
- ``cli``: the command-line front end
"""
__version__ = "0.1.0"

from .cev_dist import BoundaryBehaviour, CevModel, mass_at_zero, moment  # noqa: E402
from .errors import (  # noqa: E402
    ArbitrageError,
    CevError,
    DegenerateDenominator,
    DomainError,
    RegimeNotSupported,
    ToleranceNotMet,
)
from .pricer import QuadratureConfig, SmilePoint, call_price, implied_vol_at, put_price, smile  # noqa: E402

__all__ = [
    "__version__",
    "BoundaryBehaviour",
    "CevModel",
    "QuadratureConfig",
    "SmilePoint",
    "call_price",
    "put_price",
    "implied_vol_at",
    "smile",
    "mass_at_zero",
    "moment",
    "CevError",
    "DomainError",
    "ArbitrageError",
    "ToleranceNotMet",
    "RegimeNotSupported",
    "DegenerateDenominator",
]
