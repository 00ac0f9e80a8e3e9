"""Run configuration: a flat key/value JSON file with a versioned schema.

parse -> serialize -> parse is the identity (round-trip invariant); every
out-of-range field is rejected with a message naming it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

from .errors import ConfigError
from .graph import MEASURES
from .hdp import Hyperparams, Schedule

CONFIG_VERSION = 1


@dataclass
class RunConfig:
    # inputs: exactly one of archive / synth_spec
    archive: str | None = None
    synth_spec: str | None = None
    stopwords: str | None = None
    lemma_lexicon: str | None = None
    language: str = "english"
    min_token_len: int = 2

    # corpus shaping
    energy_fraction: float = 0.9
    window_years: int = 5
    lag_years: int = 2

    # per-epoch HDP inference
    gamma: float = 1.0
    alpha0: float = 1.0
    eta: float = 0.5
    gamma_prior_shape: float = 1.0
    gamma_prior_rate: float = 0.1
    alpha0_prior_shape: float = 1.0
    alpha0_prior_rate: float = 0.1
    k_init: int = 2
    burn_in: int = 500
    sweeps: int = 500
    resample_every: int = 5
    min_mass: int = 1
    shuffle_tokens: bool = False

    # similarity graph
    measure: str = "jaccard"
    threshold: float = 0.1
    jaccard_top_k: int = 0

    # run control
    master_seed: int = 0
    out_dir: str = "run"
    jobs: int = 1
    config_version: int = CONFIG_VERSION

    def validate(self) -> None:
        def fail(field_name, why):
            raise ConfigError(f"config field {field_name!r} {why}")

        if self.config_version != CONFIG_VERSION:
            fail("config_version", f"must be {CONFIG_VERSION}")
        if (self.archive is None) == (self.synth_spec is None):
            fail("archive/synth_spec", "exactly one must be set")
        if not 0.0 < self.energy_fraction <= 1.0:
            fail("energy_fraction", "must be in (0, 1]")
        if self.window_years < 1:
            fail("window_years", "must be >= 1")
        if not 1 <= self.lag_years <= self.window_years:
            fail("lag_years", "must be in [1, window_years]")
        for name in ("gamma", "alpha0", "eta", "gamma_prior_shape",
                     "gamma_prior_rate", "alpha0_prior_shape",
                     "alpha0_prior_rate"):
            if getattr(self, name) <= 0:
                fail(name, "must be > 0")
        for name in ("k_init", "burn_in", "sweeps", "jobs", "min_token_len"):
            if getattr(self, name) < 1:
                fail(name, "must be >= 1")
        for name in ("resample_every", "min_mass", "jaccard_top_k",
                     "master_seed"):
            if getattr(self, name) < 0:
                fail(name, "must be >= 0")
        if self.measure not in MEASURES:
            fail("measure", f"must be one of {MEASURES}")
        if not 0.0 <= self.threshold < 1.0:
            fail("threshold", "must be in [0, 1)")
        if not self.language:
            fail("language", "must be nonempty")
        if not self.out_dir:
            fail("out_dir", "must be nonempty")

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            gamma=self.gamma, alpha0=self.alpha0, eta=self.eta,
            gamma_prior=(self.gamma_prior_shape, self.gamma_prior_rate),
            alpha0_prior=(self.alpha0_prior_shape, self.alpha0_prior_rate))

    def schedule(self) -> Schedule:
        return Schedule(burn_in=self.burn_in, sweeps=self.sweeps,
                        resample_every=self.resample_every)

    def to_dict(self) -> dict:
        return asdict(self)


def config_from_dict(obj: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        config = RunConfig(**obj)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    config.validate()
    return config


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a flat JSON object")
    return config_from_dict(obj)


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
