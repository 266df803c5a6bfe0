"""
命令列模組
"""

from .app import EXIT_CONFIG_ERROR, EXIT_INFEASIBLE, app
from .commands import cmd_analyze, cmd_figures, cmd_simulate, cmd_tune

__all__ = [
    "app",
    "EXIT_CONFIG_ERROR",
    "EXIT_INFEASIBLE",
    "cmd_analyze",
    "cmd_figures",
    "cmd_simulate",
    "cmd_tune",
]
