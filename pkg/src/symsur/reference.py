"""Bundled reference logit programs for five embedding benchmarks.

One text file per dataset under ``data/``, one serialized program per line,
in the grammar of :mod:`symsur.exprcore`. These double as golden fixtures
for the test suite and as ready-made demo models.
"""

from __future__ import annotations

from importlib import resources

from .exprcore import Program, parse

__all__ = ["REFERENCE_SETS", "load_reference_texts", "load_reference_programs"]

REFERENCE_SETS = ("sst2g", "20ng", "mnist", "cifar10", "msc17")


def load_reference_texts(name: str) -> list[str]:
    if name not in REFERENCE_SETS:
        raise KeyError(f"unknown reference set {name!r}; have {REFERENCE_SETS}")
    payload = resources.files("symsur").joinpath(f"data/logits_{name}.txt").read_text()
    return [line for line in payload.splitlines() if line.strip()]


def load_reference_programs(name: str) -> list[Program]:
    return [parse(text) for text in load_reference_texts(name)]
