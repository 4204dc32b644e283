"""
Shared command-line options: run flags, pipeline flag overrides, config
loading and rich rendering for ``self.stdout``.
"""

import argparse
from pathlib import Path

import pydantic
from django.core.management.base import CommandError
from rich.console import Console

from src.apps.bench.schemas import BenchSuite
from src.apps.clouds.schemas import ClassCatalog
from src.apps.files.services import load_model
from src.apps.pipeline.schemas import PipelineConfig
from src.common.exceptions import ValidationError
from src.common.types import ClusteringMode, RefinerName, ScorerName
from src.config.env import env
from src.config.others.logging_conf import configure_logging
from src.xlib.enum_to_env import enum_to_env

# (flag, field, type, help)
_PIPELINE_FLAGS = (
    ("--r-d", "r_d", float, "Density radius r_d in meters (default 0.04)."),
    ("--theta-d", "theta_d", int, "Density threshold theta_d (default 30)."),
    ("--link-radius", "link_radius", float, "Grouping link radius (default r_d)."),
    ("--k", "k", int, "Secondaries per local scene (default 7)."),
    ("--nms-iou", "nms_iou", float, "NMS IoU threshold (default 0.3)."),
    ("--min-proposal-points", "min_proposal_points", int, "Minimum proposal size (theta_d)."),
    ("--distance-min-points", "distance_min_points", int, "Distance mode: smallest component."),
    ("--merge-min-weight", "merge_min_weight", float, "adjacent_merge: minimum secondary weight."),
    ("--merge-gap", "merge_gap", float, "adjacent_merge: contact gap in meters (default r_d)."),
)


def add_pipeline_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline overrides")
    group.add_argument(
        "--config",
        type=str,
        default=None,
        help="PipelineConfig JSON (default: PIPELINE_CONFIG_PATH, then built-in defaults).",
    )
    for flag, dest, kind, text in _PIPELINE_FLAGS:
        group.add_argument(flag, dest=dest, type=kind, default=None, help=text)
    group.add_argument("--scorer", default=None, help=f"One of {[s.value for s in ScorerName]}.")
    group.add_argument("--mode", default=None, help=f"One of {[m.value for m in ClusteringMode]}.")
    group.add_argument("--refiner", default=None, help=f"One of {[r.value for r in RefinerName]}.")
    group.add_argument(
        "--voting",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Enable / disable LP voting.",
    )
    group.add_argument(
        "--multi-round-voting",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Let voted LPs vote in later rounds.",
    )
    group.add_argument(
        "--local-scenes",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Enable / disable the local-scene stage.",
    )


def pipeline_config(options: dict) -> PipelineConfig:
    """File config (explicit or from the environment) with flag overrides on top."""
    path = options.get("config") or env.PIPELINE_CONFIG_PATH
    config = load_model(Path(path), PipelineConfig) if path else PipelineConfig()
    overrides = {dest: options.get(dest) for _, dest, _, _ in _PIPELINE_FLAGS}
    overrides.update(
        voting=options.get("voting"),
        multi_round_voting=options.get("multi_round_voting"),
        local_scenes=options.get("local_scenes"),
        threads=options.get("threads"),
    )
    enums = (("scorer", ScorerName), ("mode", ClusteringMode), ("refiner", RefinerName))
    for name, enum_cls in enums:
        if options.get(name) is not None:
            overrides[name] = enum_to_env(enum_cls, options[name])
    try:
        return config.with_overrides(**overrides)
    except pydantic.ValidationError as exc:
        raise ValidationError(f"invalid pipeline option: {exc.errors(include_url=False)}") from exc


def load_catalog(path: str | None) -> ClassCatalog | None:
    return load_model(Path(path), ClassCatalog) if path else None


def load_suite(path: str | None) -> BenchSuite:
    return load_model(Path(path), BenchSuite) if path else BenchSuite()


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--log-level",
        default=None,
        help="Override LOG_LEVEL for this run (DEBUG, INFO, WARNING, ...).",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Cap on worker threads (default: THREADS env var, 0 = all cores).",
    )


def start_run(options: dict) -> None:
    """Configure logging for the run and check the run flags."""
    configure_logging(options.get("log_level"))
    threads = options.get("threads")
    if threads is not None and threads < 0:
        raise CommandError(f"--threads must be >= 0, got {threads}", returncode=2)


def render(*renderables, color: bool = False) -> str:
    console = Console(width=120, force_terminal=color, no_color=not color, soft_wrap=True)
    with console.capture() as capture:
        for item in renderables:
            console.print(item)
    return capture.get()
