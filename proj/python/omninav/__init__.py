"""Python access to the omninav reflex navigation core."""

from ._core import (
    Error,
    IoError,
    ParameterError,
    ScenarioError,
    diff_drive,
    fuse,
    run_scenario,
    run_suite,
    select_direction,
    sentence,
    similarity,
    slice_azimuths,
    top_indices,
    transform_scores,
)

__all__ = [
    "Error",
    "IoError",
    "ParameterError",
    "ScenarioError",
    "diff_drive",
    "fuse",
    "run_scenario",
    "run_suite",
    "select_direction",
    "sentence",
    "similarity",
    "slice_azimuths",
    "top_indices",
    "transform_scores",
]
