"""Stein's method toolkit for multivariate max-stable laws with discrete angular measures."""

from .measures import (AngularMeasure, DomainError, MaxStableLaw, Rectangle, cdf, exponent_complement,
                       marginal_check, pushforward_alpha, tv_distance)
from .sampling import Estimate, FrechetParams, RngStream

__version__ = "0.1.0"
