"""
Samplers: random streams, resampling, tempered SMC, coupled kernels and
the unbiased estimators.

Only the model-independent parts are imported here; import
``samplers.smc``, ``samplers.adaptation``, ``samplers.coupled_kernels``
and ``samplers.estimator`` directly.
"""

from .resampling import (
    conditional_systematic_resample,
    coupled_conditional_systematic,
    ess,
    maximal_coupling_discrete,
    multinomial_resample,
    normalize,
    rotation_coupling,
    systematic_resample,
)
from .rng import RngStream

__all__ = [
    "RngStream",
    "conditional_systematic_resample",
    "coupled_conditional_systematic",
    "ess",
    "maximal_coupling_discrete",
    "multinomial_resample",
    "normalize",
    "rotation_coupling",
    "systematic_resample",
]
