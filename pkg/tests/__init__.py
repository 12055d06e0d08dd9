"""
Test package for unbiased particle MCMC.
"""
