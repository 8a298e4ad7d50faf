"""Build the forward model, prior and synthetic data described by a config."""
from dataclasses import dataclass
import os

import numpy as np

from ..helmholtz import (
    Geometry,
    HelmholtzModel,
    ObservationData,
    default_receivers,
    generate_synthetic_data,
    medium,
    ten_source_positions,
    two_source_positions,
)
from ..mapsolver import InverseProblem
from ..prior import PriorSpec, build_prior
from .config import ConfigError
from .seeds import base_seed


@dataclass
class Experiment:
    model: object
    prior: object
    problem: object
    m_true: np.ndarray
    medium_name: str
    noise_seed: int


def build_geometry(config, preset=None):
    preset = preset or config["geometry.preset"]
    if config["geometry.sources"] is not None:
        sources = np.array(config["geometry.sources"])
    elif preset == "two_source":
        sources = two_source_positions()
    elif preset == "ten_source":
        sources = ten_source_positions()
    else:
        raise ConfigError("geometry.preset = custom needs geometry.sources")
    subset = config["geometry.source_subset"]
    if subset is not None:
        if any(i < 0 or i >= len(sources) for i in subset):
            raise ConfigError(f"geometry.source_subset {subset} out of range for {len(sources)} sources")
        sources = sources[subset]
    receivers = config["geometry.receivers"]
    receivers = default_receivers() if receivers is None else np.array(receivers)
    try:
        return Geometry(sources, receivers, config["geometry.eps_source"], config["geometry.source_model"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_model(config, preset=None):
    if config["mesh.n"] < 1:
        raise ConfigError("mesh.n must be positive")
    try:
        return HelmholtzModel(config["mesh.n"], config["helmholtz.kappa"], build_geometry(config, preset))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_prior_from(config, model):
    spec = PriorSpec(config["prior.gamma"], config["prior.beta"], config["prior.eta"], config["prior.mean"])
    try:
        return build_prior(spec, model.param_space)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_experiment(config, medium_name=None, preset=None, model=None, prior=None, counter=None):
    """Model, prior and data for one target medium.

    Data come from ``data.path`` when set, otherwise they are synthesized at the target with the
    noise seed of the config.
    """
    model = model if model is not None else build_model(config, preset)
    prior = prior if prior is not None else build_prior_from(config, model)
    name = medium_name or config["target.name"]
    m_true = medium(model, name, background=config["target.background"])
    seed = base_seed(config, "noise")
    if config["data.path"] is not None:
        try:
            data, receivers = ObservationData.from_csv(config["data.path"])
        except (OSError, ValueError, IndexError) as exc:
            raise ConfigError(f"cannot load data from {config['data.path']}: {exc}") from None
        if data.D.shape != (model.n_sources, model.geometry.n_receivers):
            raise ConfigError(f"data shape {data.D.shape} does not match the geometry")
        if not np.allclose(receivers, model.geometry.receivers):
            raise ConfigError("data receivers differ from the configured receivers")
    else:
        if config["noise.pct"] < 0:
            raise ConfigError("noise.pct must be nonnegative")
        data = generate_synthetic_data(model, m_true, config["noise.pct"], seed, sigma=config["noise.sigma"],
                                       counter=counter)
    return Experiment(model, prior, InverseProblem(model, data, prior), m_true, name, seed)


def map_options(config):
    return {"tol": config["map.tol"], "max_iter": config["map.max_iter"], "gn_switch": config["map.gn_switch"]}


def save_data(exp, out_dir, name=None):
    path = os.path.join(out_dir, name or f"data_{exp.medium_name}.csv")
    exp.problem.data.to_csv(path, exp.model.geometry.receivers)
    return path
