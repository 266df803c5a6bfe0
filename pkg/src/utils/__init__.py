"""
工具模組

提供日誌、設定讀取、結果匯出與穩態分佈快取等通用功能。
"""

from .cache import StationaryCache, get_cache
from .config import Config, get_config, get_env, load_config, reset_config
from .export import ReportExporter, export_rows
from .logging import get_logger, setup_logging

__all__ = [
    "setup_logging",
    "get_logger",
    "load_config",
    "get_env",
    "Config",
    "get_config",
    "reset_config",
    "ReportExporter",
    "export_rows",
    "StationaryCache",
    "get_cache",
]
