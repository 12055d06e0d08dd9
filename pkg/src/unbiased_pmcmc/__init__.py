"""
Unbiased Particle MCMC

Coupled particle MCMC on tempered SMC paths, with unbiased estimators of
posterior expectations for Bayesian models.
"""

__version__ = "0.1.0"
__author__ = "unbiased-pmcmc developers"
