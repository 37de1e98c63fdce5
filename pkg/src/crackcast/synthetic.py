"""Synthetic crack-propagation corpus with exogenous drivers.

Stands in for the proprietary inspection data: each defect gets a latent,
strictly increasing crack length driven by a power-law growth recurrence
whose rate is modulated by exogenous features (a seasonal temperature
proxy, a tonnage proxy and static infrastructure channels). Observations
add Gaussian measurement noise plus occasional cold-weather dips: the
rail compresses, the ultrasonic reading shrinks, the crack itself never
does. Dips are bounded below the pipeline's physical-drop filter so a
generated corpus survives ingestion.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

import numpy as np

from .series import DefectSeries, add_months
from .validation import dataclass_from_dict

# A dip in the observed (not latent) length is attached to cold steps so
# the measurement artifact is predictable from the temperature channel.
_DROP_TEMP_GAIN = 3.0
_DROP_SIZE_LOW = 0.35


@dataclass
class GenConfig:
    n_defects: int = 500
    step_months: int = 3
    growth_coeff_range: tuple[float, float] = (0.05, 0.18)
    growth_exponent_range: tuple[float, float] = (0.55, 0.85)
    feature_count: int = 4
    noise_std_mm: float = 0.8
    drop_probability: float = 0.12
    drop_max_mm: float = 14.0
    series_length_range: tuple[int, int] = (10, 40)
    initial_length_range: tuple[float, float] = (5.0, 25.0)
    seed: int = 0

    def __post_init__(self):
        for name in (
            "growth_coeff_range",
            "growth_exponent_range",
            "series_length_range",
            "initial_length_range",
        ):
            low, high = getattr(self, name)
            if low > high:
                raise ValueError(f"{name} must satisfy low <= high, got ({low}, {high})")
            setattr(self, name, (low, high))
        if self.n_defects < 0:
            raise ValueError("n_defects must be >= 0")
        if self.feature_count < 1:
            raise ValueError("feature_count must be >= 1")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must lie in [0, 1]")
        if self.drop_max_mm >= 15.0:
            raise ValueError("drop_max_mm must stay below the 15 mm drop filter")
        if self.noise_std_mm < 0:
            raise ValueError("noise_std_mm must be >= 0")
        if self.growth_coeff_range[0] <= 0:
            raise ValueError("growth coefficients must be positive")
        if self.initial_length_range[0] <= 0:
            raise ValueError("initial lengths must be positive")

    def to_dict(self) -> dict:
        return {
            "n_defects": self.n_defects,
            "step_months": self.step_months,
            "growth_coeff_range": list(self.growth_coeff_range),
            "growth_exponent_range": list(self.growth_exponent_range),
            "feature_count": self.feature_count,
            "noise_std_mm": self.noise_std_mm,
            "drop_probability": self.drop_probability,
            "drop_max_mm": self.drop_max_mm,
            "series_length_range": list(self.series_length_range),
            "initial_length_range": list(self.initial_length_range),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GenConfig":
        return dataclass_from_dict(cls, payload)


def generate_corpus(config: GenConfig) -> list[DefectSeries]:
    """Draw `config.n_defects` synthetic defect series, reproducibly.

    Per-defect randomness comes from seeds spawned off the master seed,
    so generation is order-independent and parallel-safe.
    """
    master = np.random.SeedSequence(config.seed)
    corpus_rng = np.random.default_rng(master.spawn(1)[0])
    m = config.feature_count
    # Channel layout: 0 = tonnage proxy (dynamic), 1 = temperature proxy
    # (dynamic, seasonal), 2.. = static infrastructure channels.
    growth_weights = np.zeros(m)
    growth_weights[0] = 0.35
    if m > 1:
        growth_weights[1] = -0.15
    if m > 2:
        growth_weights[2:] = corpus_rng.uniform(-0.25, 0.25, size=m - 2)

    defect_seeds = master.spawn(config.n_defects)
    return [
        _generate_defect(f"D{i:05d}", config, growth_weights, np.random.default_rng(s))
        for i, s in enumerate(defect_seeds)
    ]


def _generate_defect(
    defect_id: str, config: GenConfig, growth_weights: np.ndarray, rng: np.random.Generator
) -> DefectSeries:
    m = config.feature_count
    t_lo, t_hi = config.series_length_range
    n_steps = int(rng.integers(t_lo, t_hi + 1))
    start = dt.date(2012, 1, 1) + dt.timedelta(days=int(rng.integers(0, 3000)))
    dates = [add_months(start, i * config.step_months) for i in range(n_steps)]

    features = np.zeros((n_steps, m))
    features[:, 0] = rng.normal(0.0, 1.0, size=n_steps)
    if m > 1:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        steps_per_year = max(1, round(12 / config.step_months))
        season = np.cos(2.0 * np.pi * np.arange(n_steps) / steps_per_year + phase)
        features[:, 1] = season + rng.normal(0.0, 0.3, size=n_steps)
    if m > 2:
        features[:, 2:] = rng.normal(0.0, 1.0, size=m - 2)

    coeff = rng.uniform(*config.growth_coeff_range)
    exponent = rng.uniform(*config.growth_exponent_range)
    latent = np.empty(n_steps)
    latent[0] = rng.uniform(*config.initial_length_range)
    rates = np.exp(features @ growth_weights)
    for j in range(1, n_steps):
        latent[j] = latent[j - 1] + coeff * latent[j - 1] ** exponent * rates[j - 1]

    observed = latent + rng.normal(0.0, config.noise_std_mm, size=n_steps)
    if config.drop_probability > 0:
        temp = features[:, 1] if m > 1 else np.zeros(n_steps)
        cold_bias = 2.0 / (1.0 + np.exp(_DROP_TEMP_GAIN * temp))
        p_drop = np.minimum(1.0, config.drop_probability * cold_bias)
        dropped = rng.random(n_steps) < p_drop
        sizes = rng.uniform(_DROP_SIZE_LOW, 1.0, size=n_steps) * config.drop_max_mm
        observed = observed - dropped * sizes
    observed = np.maximum(observed, 0.0)

    return DefectSeries(defect_id=defect_id, dates=dates, lengths_mm=observed, features=features)
