"""Bias-variance calibrated estimators for simulation derivatives."""

from ._biascal import *  # noqa: F401,F403
from ._biascal import __doc__  # noqa: F401
