import math

import numpy as np
import pytest

from twinellip.rates import (
    Configuration,
    RateScale,
    SampleParams,
    Variant,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def make_config(variant, psi_deg=30.0, delta_deg=60.0, c=1000.0, **kwargs):
    sample = SampleParams.from_psi_delta(math.radians(psi_deg), math.radians(delta_deg))
    return Configuration(variant=variant, sample=sample, scale=RateScale(c), **kwargs)


def random_sample(rng, psi_lo_deg=1.0, psi_hi_deg=89.0):
    psi = math.radians(rng.uniform(psi_lo_deg, psi_hi_deg))
    delta = rng.uniform(-math.pi, math.pi)
    return SampleParams.from_psi_delta(psi, delta)


@pytest.fixture
def mirror_config():
    return Configuration(
        variant=Variant.UNENTANGLED,
        sample=SampleParams(1.0, 1.0),
        scale=RateScale(1000.0),
    )
