"""
Target models for tempered SMC and coupled particle MCMC.
"""

from .base import GeneratorKernelModel, Model, ModelPoint
from .conjugate import ConjugateGaussianModel, ConstantLikelihoodModel
from .ggm import GGMModel, GGMPoint, ggm_synthetic, run_ggm_chain
from .gwishart import Graph, GWishartParams, gwishart_sample
from .horseshoe import HorseshoeModel, HorseshoeState
from .mixture import MixtureModel
from .registry import available_models, build_model, load_matrix_csv

__all__ = [
    "Model",
    "GeneratorKernelModel",
    "ModelPoint",
    "ConjugateGaussianModel",
    "ConstantLikelihoodModel",
    "GGMModel",
    "GGMPoint",
    "ggm_synthetic",
    "run_ggm_chain",
    "Graph",
    "GWishartParams",
    "gwishart_sample",
    "HorseshoeModel",
    "HorseshoeState",
    "MixtureModel",
    "available_models",
    "build_model",
    "load_matrix_csv",
]
