"""
Paramètres Django.

Seule la machinerie des commandes de gestion est utilisée : pas de base de
données, pas d'URL. Les valeurs viennent de src/config/env.py.
"""

from src.config.env import env

# ── Cœur ────────────────────────────────────────────────────────────────

DEBUG = env.is_development
USE_TZ = True
DATABASES = {}

# ── Applications Installées ─────────────────────────────────────────────

LOCAL_APPS = [
    "src.cli",
]

INSTALLED_APPS = LOCAL_APPS

# ── Journalisation ──────────────────────────────────────────────────────
# structlog est configuré par chaque commande (configure_logging).

LOGGING_CONFIG = None
