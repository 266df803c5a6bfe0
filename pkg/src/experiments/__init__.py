"""
實驗模組

產生各圖表所需的 CSV 資料。
"""

from .figures import (
    DEFAULT_GAMMA_GRID,
    FigureId,
    build_figure,
    figure_compare,
    figure_sensitivity,
    figure_validate,
    gamma_critical,
)

__all__ = [
    "DEFAULT_GAMMA_GRID",
    "FigureId",
    "build_figure",
    "figure_compare",
    "figure_sensitivity",
    "figure_validate",
    "gamma_critical",
]
