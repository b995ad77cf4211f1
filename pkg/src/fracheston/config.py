"""Scenario configuration: a versioned JSON document with fail-fast parsing.

Unknown keys are rejected so a typo cannot silently fall back to a default.
All numeric defaults mirror the experiment parameter set used throughout
(sigma = 0.5 is a documented non-published default; the Feller condition
2*6*0.05 = 0.6 >= 0.25 holds).
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .params import ModelParams, hurst_of_alpha

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ScenarioConfig:
    schema_version: int = SCHEMA_VERSION
    r: float = 0.02
    lam: float = 0.5
    kappa: float = 6.0
    theta: float = 0.05
    sigma: float = 0.5
    gamma: float = -2.0
    v0: float = 0.0
    z0: float = 0.05
    w0: float = 1000.0
    s0: float = 100.0
    horizon: float = 1.0
    step: float = 0.001
    alphas: tuple = (0.05, 0.5, 0.95)
    rhos: tuple = (-0.7, 0.0, 0.7)
    positivity_map: str = "abs"
    delta: float = 0.49
    n_paths: int = 1000
    n_sample_paths: int = 5
    atoms: int = 64
    levels: tuple = (64, 128, 256)
    seed: int = 20240801
    out_dir: str = "out"
    threads: int = 1

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}; "
                             f"this build reads version {SCHEMA_VERSION}")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.n_paths < 2:
            raise ValueError("n_paths must be at least 2")
        for a in self.alphas:
            self.model_params(a, 0.0)  # validates regime + Feller at load time

    def model_params(self, alpha: float, rho: float) -> ModelParams:
        """ModelParams for one (alpha, rho) cell; alpha in {-1, 0} selects
        the classical Heston baseline (hurst = 1/2)."""
        if alpha in (-1.0, 0.0):
            alpha = 0.0
        return ModelParams(r=self.r, lam=self.lam, kappa=self.kappa,
                           theta=self.theta, sigma=self.sigma, rho=rho,
                           gamma=self.gamma, hurst=hurst_of_alpha(alpha),
                           v0=self.v0, z0=self.z0, w0=self.w0,
                           horizon=self.horizon)

    def canonical_json(self) -> str:
        # out_dir and threads do not influence any emitted number, so they
        # stay out of the hash: equal hashes mean byte-identical CSVs
        doc = dataclasses.asdict(self)
        doc.pop("out_dir")
        doc.pop("threads")
        return json.dumps(doc, sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def with_(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


_JSON_KEY_MAP = {"lambda": "lam"}  # accept the market-price name as written


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    kwargs = {}
    for key, val in raw.items():
        name = _JSON_KEY_MAP.get(key, key)
        if name not in known:
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(val, list):
            val = tuple(val)
        kwargs[name] = val
    return ScenarioConfig(**kwargs)
