"""NR-U offloading engine - session loss of licensed/unlicensed offloading strategies."""

__version__ = "0.1.0"
__license__ = "MIT"

# Import key components for easier access
from .config import ConfigManager, ScenarioConfig
from .exceptions import NruOffloadError
from .pipeline import StrategyReport, evaluate_point, evaluate_strategy

# Set up null handler to prevent logging warnings if app doesn't configure logging
import logging
logging.getLogger(__name__).addHandler(logging.NullHandler())

__all__ = [
    "ConfigManager",
    "NruOffloadError",
    "ScenarioConfig",
    "StrategyReport",
    "evaluate_point",
    "evaluate_strategy",
]
