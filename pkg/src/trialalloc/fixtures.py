"""Bundled example configurations.

Two ready-to-run JSON problem configurations ship with the package so the
CLI can be exercised without writing a config first:

``maize_network``
    The five-sub-region maize trialing network (variance components for both
    model variants, the sub-regional genetic covariance matrix and genotype
    counts), paired with an uncorrelated 31-genotype kinship.

``maize_family_blocks``
    The same network with family-block kinship (families of equal size,
    within-family correlation r, variance calibrated to unit average
    semivariance), plus a batch sweep over (r, f, m) combinations.
"""
from __future__ import annotations

import json
from importlib import resources

from .errors import ValidationError

__all__ = ["available_fixtures", "fixture_path", "load_fixture"]


def _data_root():
    return resources.files("trialalloc") / "data"


def available_fixtures() -> list:
    """Names of the bundled configurations."""
    return sorted(p.name[:-5] for p in _data_root().iterdir()
                  if p.name.endswith(".json"))


def fixture_path(name: str):
    """Filesystem path of a bundled configuration."""
    path = _data_root() / f"{name}.json"
    if not path.is_file():
        raise ValidationError(
            f"unknown fixture {name!r}; bundled: {', '.join(available_fixtures())}"
        )
    return path


def load_fixture(name: str) -> dict:
    with fixture_path(name).open() as fh:
        return json.load(fh)
