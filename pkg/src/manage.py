#!/usr/bin/env python
"""Command-line entry point: ``python -m src.manage <command> [options]``."""

import os
import sys

import pydantic
import structlog

from src.common.exceptions import (
    ApplicationError,
    MalformedFileError,
    UsageError,
    ValidationError,
    render_error,
)

COMMANDS = ("synth", "segment", "eval", "bench", "ablate")

logger = structlog.get_logger(__name__)


def _usage() -> str:
    return "usage: python -m src.manage {" + ",".join(COMMANDS) + "} [options]"


def setup_django() -> None:
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "src.config.django.base")
    try:
        import django
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    django.setup()


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not argv or argv[0] in ("-h", "--help"):
        print(_usage())
        return 0 if argv else 2

    setup_django()
    from django.core.management import call_command
    from django.core.management.base import CommandError

    name, rest = argv[0], argv[1:]
    try:
        if name not in COMMANDS:
            raise ValidationError(f"unknown command {name!r}; expected one of {list(COMMANDS)}")
        # call_command parses without exiting: usage errors surface as CommandError
        call_command(name, *rest)
        return 0
    except ApplicationError as exc:
        return render_error(exc)
    except CommandError as exc:
        return render_error(UsageError(str(exc)))
    except pydantic.ValidationError as exc:
        return render_error(MalformedFileError(str(exc.errors(include_url=False))))
    except SystemExit as exc:
        # --help on a command
        return exc.code if isinstance(exc.code, int) else 0
    except Exception:
        logger.exception("command_crashed", command=name)
        return 1


if __name__ == "__main__":
    sys.exit(main())
