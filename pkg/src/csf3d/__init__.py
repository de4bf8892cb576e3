"""Curve shortening flow of closed space curves with parabolic rescaling.

Modules
-------
geometry      spectral derivatives, Frenet frame, arclength resampling
flow          physical and rescaled flow integrators
rescale       blow-up time estimation and the parabolic change of variables
functionals   Gaussian-weighted length and its dissipation terms
zelenjak      pointwise checks of the weight ``|eta| exp(-|xi|^2/4)``
scenarios     named initial curves and circle oracles
"""

__version__ = "0.1.0"
