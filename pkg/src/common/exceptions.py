"""
Shared exception classes and the CLI error renderer.
"""

import json
import sys


class ApplicationError(Exception):
    """Base exception for all application-level errors."""

    code = "application_error"

    def __init__(self, message: str = "An error occurred.", exit_code: int = 1):
        self.message = message
        self.exit_code = exit_code
        super().__init__(message)


class ValidationError(ApplicationError):
    code = "validation_error"

    def __init__(self, message: str = "Validation error."):
        super().__init__(message=message, exit_code=2)


class NotFoundError(ApplicationError):
    code = "not_found"

    def __init__(self, message: str = "Resource not found."):
        super().__init__(message=message, exit_code=3)


class MalformedFileError(ApplicationError):
    code = "malformed_file"

    def __init__(self, message: str = "Malformed file."):
        super().__init__(message=message, exit_code=4)


class UsageError(ApplicationError):
    """Bad command line, reported by the command parser or a run flag check."""

    code = "command_error"

    def __init__(self, message: str = "Invalid command line."):
        super().__init__(message=message, exit_code=2)


class InfeasibleSceneError(ApplicationError):
    code = "infeasible_scene"

    def __init__(self, message: str = "Scene placement is infeasible."):
        super().__init__(message=message, exit_code=5)


def render_error(exc: ApplicationError, stream=None) -> int:
    """Write a machine-readable error line on stderr, return the exit code."""
    stream = stream or sys.stderr
    stream.write(json.dumps({"error": exc.code, "detail": exc.message}) + "\n")
    return exc.exit_code
