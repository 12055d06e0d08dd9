"""
Model registry: builds a target by name from configuration parameters.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

import numpy as np

from ..models.error_handling import ConfigurationError
from .base import Model
from .conjugate import (
    ConjugateGaussianModel,
    ConstantLikelihoodModel,
    conjugate_simulate,
)
from .ggm import GGMModel, ggm_synthetic
from .gwishart import GWishartParams
from .horseshoe import HorseshoeModel, horseshoe_simulate
from .mixture import MixtureModel, mixture_simulate

logger = logging.getLogger(__name__)


def load_matrix_csv(path: str, min_columns: int = 1) -> np.ndarray:
    """Read a numeric CSV (comma separated, '#' comments) as a 2-d array."""
    file_path = Path(path).expanduser()
    if not file_path.exists():
        raise ConfigurationError(f"data file not found: {file_path}")
    try:
        data = np.loadtxt(file_path, delimiter=",", ndmin=2, comments="#")
    except ValueError as e:
        raise ConfigurationError(f"could not parse {file_path} as numeric CSV: {e}")
    if data.shape[1] < min_columns:
        raise ConfigurationError(
            f"{file_path} has {data.shape[1]} columns, need at least {min_columns}"
        )
    logger.info(f"Loaded {data.shape[0]} x {data.shape[1]} matrix from {file_path}")
    return data


def _build_mixture(params: Dict[str, Any], data_path: Optional[str]) -> Model:
    d_x = int(params.get("d_x", 2))
    if data_path:
        y = load_matrix_csv(data_path).ravel()
    else:
        y = mixture_simulate(
            x_star=params.get("x_star"),
            d_y=int(params.get("d_y", 100)),
            seed=int(params.get("data_seed", 0)),
        )
    return MixtureModel(y, d_x=d_x)


def _build_horseshoe(params: Dict[str, Any], data_path: Optional[str]) -> Model:
    if data_path:
        # column 0 is y, the remaining columns form W
        data = load_matrix_csv(data_path, min_columns=2)
        y, W = data[:, 0], data[:, 1:]
    else:
        y, W = horseshoe_simulate(
            seed=int(params.get("data_seed", 0)),
            n=int(params.get("n", 100)),
            p=int(params.get("p", 20)),
            sigma2=float(params.get("sigma2", 8.0)),
        )
    return HorseshoeModel(
        y,
        W,
        target_index=int(params.get("target_index", 9)),
        threshold=float(params.get("threshold", 0.01)),
    )


def _build_ggm(params: Dict[str, Any], data_path: Optional[str]) -> Model:
    delta = float(params.get("delta", 3.0))
    if data_path:
        Y = load_matrix_csv(data_path, min_columns=2)
    else:
        Y, _, _ = ggm_synthetic(
            p=int(params.get("p", 5)),
            n=int(params.get("n", 50)),
            sparsity=float(params.get("sparsity", 0.3)),
            seed=int(params.get("data_seed", 0)),
        )
    D = params.get("D")
    D = np.eye(Y.shape[1]) if D is None else np.asarray(D, dtype=float)
    return GGMModel(Y=Y, params=GWishartParams(delta=delta, D=D))


def _build_conjugate(params: Dict[str, Any], data_path: Optional[str]) -> Model:
    if data_path:
        y = load_matrix_csv(data_path)
    else:
        y = conjugate_simulate(
            n=int(params.get("n", 10)),
            d=int(params.get("d", 1)),
            x_true=params.get("x_true"),
            noise_sd=float(params.get("noise_sd", 1.0)),
            seed=int(params.get("data_seed", 0)),
        )
    return ConjugateGaussianModel(
        y,
        prior_mean=float(params.get("prior_mean", 0.0)),
        prior_sd=float(params.get("prior_sd", 1.0)),
        noise_sd=float(params.get("noise_sd", 1.0)),
        kernel=str(params.get("kernel", "exact")),
        step_size=float(params.get("step_size", 0.5)),
    )


def _build_constant(params: Dict[str, Any], data_path: Optional[str]) -> Model:
    return ConstantLikelihoodModel(log_c=float(params.get("log_c", 0.0)))


MODEL_BUILDERS: Dict[str, Callable[[Dict[str, Any], Optional[str]], Model]] = {
    MixtureModel.name: _build_mixture,
    HorseshoeModel.name: _build_horseshoe,
    GGMModel.name: _build_ggm,
    ConjugateGaussianModel.name: _build_conjugate,
    ConstantLikelihoodModel.name: _build_constant,
}


def available_models():
    return sorted(MODEL_BUILDERS)


def build_model(
    name: str,
    params: Optional[Mapping[str, Any]] = None,
    data_path: Optional[str] = None,
) -> Model:
    """Instantiate a registered model."""
    builder = MODEL_BUILDERS.get(name)
    if builder is None:
        raise ConfigurationError(
            f"unknown model '{name}'; available: {', '.join(available_models())}"
        )
    model = builder(dict(params or {}), data_path)
    logger.debug(f"Built model {model.describe()}")
    return model
