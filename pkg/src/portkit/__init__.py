"""Portfolio analytics toolkit.

Covers mean-variance optimization and rolling tangent-portfolio backtests
under four moment-estimation models, online (universal) portfolio selection,
diversity-weighted portfolios, VaR/ES risk measurement with bootstrap
confidence intervals, and factor-regression + ARMA/GARCH return forecasting.

All randomness is seeded and reproducible; see ``portkit.synthetic`` for the
RNG conventions.
"""

__version__ = "0.1.0"
