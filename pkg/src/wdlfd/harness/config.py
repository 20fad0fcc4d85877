"""Declarative experiment configuration.

A config file is a YAML mapping whose keys mirror :class:`ExperimentConfig`;
unknown keys are rejected. Gaussian domains are written as::

    sources:
      - class1: {mean: [0, 3], cov: 0.5}
        class2: {mean: [1.5, -1.5], cov: [0.5, 0.5]}

where ``cov`` is a scalar (isotropic), a list (diagonal) or a full matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np
import yaml

from ..core import BadCovariance, WdlfdError


class ConfigError(WdlfdError, ValueError):
    pass


@dataclass(frozen=True)
class GaussianSpec:
    mean: tuple
    cov: tuple  # full d x d matrix, row-major nested tuples

    @classmethod
    def build(cls, mean, cov) -> "GaussianSpec":
        mean = np.asarray(mean, dtype=np.float64).reshape(-1)
        d = len(mean)
        cov_arr = np.asarray(cov, dtype=np.float64)
        if cov_arr.ndim == 0:
            cov_arr = float(cov_arr) * np.eye(d)
        elif cov_arr.ndim == 1:
            if len(cov_arr) != d:
                raise BadCovariance(f"diagonal covariance of length {len(cov_arr)} for dimension {d}")
            cov_arr = np.diag(cov_arr)
        if cov_arr.shape != (d, d):
            raise BadCovariance(f"covariance shape {cov_arr.shape} for dimension {d}")
        if not np.allclose(cov_arr, cov_arr.T):
            raise BadCovariance("covariance is not symmetric")
        try:
            np.linalg.cholesky(cov_arr)
        except np.linalg.LinAlgError as exc:
            raise BadCovariance("covariance is not positive definite") from exc
        return cls(tuple(mean.tolist()), tuple(map(tuple, cov_arr.tolist())))

    @property
    def chol(self) -> np.ndarray:
        return np.linalg.cholesky(np.asarray(self.cov))


@dataclass(frozen=True)
class DomainSpec:
    class1: GaussianSpec
    class2: GaussianSpec

    @classmethod
    def from_dict(cls, data) -> "DomainSpec":
        if not isinstance(data, dict) or set(data) != {"class1", "class2"}:
            raise ConfigError("a domain needs exactly the keys class1 and class2")
        specs = []
        for key in ("class1", "class2"):
            entry = data[key]
            if not isinstance(entry, dict) or set(entry) - {"mean", "cov"} or "mean" not in entry:
                raise ConfigError(f"{key} needs 'mean' and optionally 'cov'")
            specs.append(GaussianSpec.build(entry["mean"], entry.get("cov", 0.5)))
        return cls(*specs)

    def to_dict(self) -> dict:
        return {k: {"mean": list(g.mean), "cov": [list(r) for r in g.cov]}
                for k, g in (("class1", self.class1), ("class2", self.class2))}


def _iso(mean, var=0.5) -> GaussianSpec:
    return GaussianSpec.build(mean, var)


def default_sources() -> tuple:
    """Four 2-D source domains in which class conditionals vary widely.

    Class-1 sources sit on a circle of radius 3 around (0, 0). Class-2 sources
    average to (8, 0): three lie on an arc beyond (8, 0) and the fourth sits
    at (1.5, -1.5), closer to (0, 0) than any class-1 source.
    """
    class1 = [(0.0, 3.0), (-3.0, 0.0), (0.0, -3.0), (3.0, 0.0)]
    class2 = [(1.5, -1.5), (10.2, 3.5), (10.2, -2.0), (10.1, 0.0)]
    return tuple(DomainSpec(_iso(a), _iso(b)) for a, b in zip(class1, class2))


def default_target() -> DomainSpec:
    return DomainSpec(_iso((0.0, 0.0)), _iso((8.0, 0.0)))


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "synthetic"
    sources: tuple = field(default_factory=default_sources)
    target: DomainSpec = field(default_factory=default_target)
    source_sizes: tuple = (20, 60, 100, 200)
    target_test_size: int = 60
    target_train_size: Optional[int] = None
    trials: int = 20
    seed: int = 0
    k: int = 3
    delta: float = 0.25
    significance: float = 0.05
    exponent: int = 1
    radius_exponent: int = 2
    effective_n: Optional[float] = None
    lambda_pen: Optional[float] = None
    gamma_sep: Optional[float] = None
    source_files: tuple = ()
    target_file: Optional[str] = None
    workers: int = 1
    out_csv: Optional[str] = None
    out_summary: Optional[str] = None

    @property
    def num_sources(self) -> int:
        return len(self.source_files) if self.mode == "files" else len(self.sources)

    def validate(self) -> "ExperimentConfig":
        if self.mode not in ("synthetic", "files"):
            raise ConfigError(f"mode must be 'synthetic' or 'files', got {self.mode!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.target_test_size < 1 or any(int(s) < 2 for s in self.source_sizes):
            raise ConfigError("sample counts must be >= 1 per class")
        if not self.source_sizes:
            raise ConfigError("source_sizes must not be empty")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if not 0 < self.significance < 1:
            raise ConfigError("significance must lie in (0, 1)")
        if self.exponent not in (1, 2) or self.radius_exponent not in (1, 2):
            raise ConfigError("exponents must be 1 or 2")
        if self.lambda_pen is not None and self.gamma_sep is not None:
            raise ConfigError("set at most one of lambda_pen and gamma_sep")
        if self.mode == "synthetic":
            if not self.sources:
                raise ConfigError("at least one source domain is required")
            dims = {len(g.mean) for dom in self.sources + (self.target,) for g in (dom.class1, dom.class2)}
            if len(dims) != 1:
                raise ConfigError("all Gaussian means must share one dimension")
        elif not self.source_files or not self.target_file:
            raise ConfigError("files mode needs source_files and target_file")
        return self


_FIELDS = {f.name for f in fields(ExperimentConfig)}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a key/value mapping")
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kwargs = dict(data)
    if "sources" in kwargs:
        kwargs["sources"] = tuple(DomainSpec.from_dict(d) for d in kwargs["sources"])
    if "target" in kwargs:
        kwargs["target"] = DomainSpec.from_dict(kwargs["target"])
    for key in ("source_sizes", "source_files"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        cfg = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data or {})
