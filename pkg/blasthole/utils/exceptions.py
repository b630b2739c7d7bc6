import functools
import sys

import click
from marshmallow.exceptions import ValidationError

from blasthole.utils.constants import EXIT_ERROR, EXIT_MISS
from blasthole.utils.logger import logger


class BlastholeError(Exception):
    """Base class for every error raised by the package"""


class InvalidInputError(BlastholeError, ValueError):
    """Input violates an operation's precondition"""


class ConfigError(BlastholeError):
    """Configuration is inconsistent or unusable"""


class DegenerateAxisError(InvalidInputError):
    """Antiparallel normals: no rotation axis can be derived"""


class DegenerateHullError(InvalidInputError):
    """Fewer than three non-collinear footprint points"""


class DegenerateFitError(InvalidInputError):
    """Collinear points or a near-infinite circle radius"""


class NoCircleError(BlastholeError):
    """RANSAC found no candidate with enough inliers"""


class NoHoleError(BlastholeError):
    """No candidate survived the gates"""


class DetectionMiss(BlastholeError):
    """A detection stage found nothing; the caller keeps approaching"""


class CoarseMiss(DetectionMiss):
    pass


class FineMiss(DetectionMiss):
    pass


class TrackLostError(BlastholeError):
    """The cone was lost for too many consecutive frames"""


class MissionError(BlastholeError):
    """The mission state machine left its transition cycle"""


def format_validation_errors(error):
    """Flatten marshmallow messages to the first message per field"""
    if isinstance(error.messages, dict):
        return {
            field: messages[0] if isinstance(messages, list) else messages
            for field, messages in error.messages.items()
        }
    if isinstance(error.messages, list):
        return error.messages[0] if len(error.messages) > 0 else "error"
    return str(error.messages)


def handle_errors(command):
    """Map exceptions raised by a command onto the CLI exit-code contract"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except DetectionMiss as error:
            logger.warning(f"Detection miss: {str(error)}")
            click.echo(f"miss: {error}", err=True)
            sys.exit(EXIT_MISS)
        except ValidationError as error:
            formatted_errors = format_validation_errors(error)
            logger.warning(f"Validation error: {formatted_errors}")
            click.echo(f"error: {formatted_errors}", err=True)
            sys.exit(EXIT_ERROR)
        except (InvalidInputError, ConfigError, OSError) as error:
            logger.warning(f"Input error: {str(error)}")
            click.echo(f"error: {error}", err=True)
            sys.exit(EXIT_ERROR)
        except click.exceptions.Exit:
            raise
        except Exception as error:
            logger.error(f"Unhandled exception: {str(error)}", exc_info=True)
            click.echo(f"internal error: {error}", err=True)
            sys.exit(EXIT_ERROR)

    return wrapper
