"""
Configuration du journal avec structlog.

Développement / test : sortie console lisible.
Production : lignes JSON (un objet JSON par ligne).

Le basculement est automatique selon APP_ENV. Tout part sur stderr :
stdout reste réservé à la sortie des commandes.
"""

import logging.config

import structlog

from src.config.env import env

# ── Processeurs partagés structlog ──────────────────────────────────────
# Exécutés pour chaque événement de journal, quel que soit l'environnement.

shared_processors: list[structlog.types.Processor] = [
    structlog.contextvars.merge_contextvars,
    structlog.stdlib.filter_by_level,
    structlog.stdlib.add_logger_name,
    structlog.stdlib.add_log_level,
    structlog.stdlib.PositionalArgumentsFormatter(),
    structlog.processors.TimeStamper(fmt="iso"),
    structlog.processors.StackInfoRenderer(),
    structlog.processors.UnicodeDecoder(),
]


def _renderer() -> structlog.types.Processor:
    if env.is_production:
        # Rendu JSON pour la production (un objet JSON par ligne)
        return structlog.processors.JSONRenderer()
    return structlog.dev.ConsoleRenderer(colors=env.is_development)


def build_logging_dict(level: str | None = None) -> dict:
    """Dictionnaire LOGGING stdlib routé via ProcessorFormatter."""
    level = (level or env.LOG_LEVEL).upper()
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "structlog": {
                "()": structlog.stdlib.ProcessorFormatter,
                "processors": [
                    structlog.stdlib.ProcessorFormatter.remove_processors_meta,
                    _renderer(),
                ],
            },
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "stream": "ext://sys.stderr",
                "formatter": "structlog",
            },
        },
        "root": {
            "handlers": ["console"],
            "level": "WARNING",
        },
        "loggers": {
            "src": {
                "handlers": ["console"],
                "level": level,
                "propagate": False,
            },
        },
    }


def configure_logging(level: str | None = None) -> None:
    """Configure structlog + stdlib. Appelé une fois par src.manage."""
    structlog.configure(
        processors=[
            *shared_processors,
            # Préparation pour l'intégration de la journalisation stdlib
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    logging.config.dictConfig(build_logging_dict(level))
