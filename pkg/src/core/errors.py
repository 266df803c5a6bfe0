"""
例外類別

模型、求解器與設定檔共用的錯誤階層。
"""

from typing import Optional


class DisseminationError(Exception):
    """所有控制資訊散播模型錯誤的基底類別"""


class ModelDomainError(DisseminationError, ValueError):
    """參數超出模型定義域（例如 ber ∉ [0,1)、d > r、γN/2 ≥ 1）"""


class ConvergenceError(DisseminationError, RuntimeError):
    """
    穩態分佈求解未收斂

    Attributes:
        residual: 最後一次迭代的殘差 ‖πP − π‖∞
        iterations: 已執行的迭代次數
    """

    def __init__(self, message: str, residual: float, iterations: int = 0):
        super().__init__(f"{message}（殘差 {residual:.3e}，迭代 {iterations} 次）")
        self.residual = residual
        self.iterations = iterations


class ConfigError(DisseminationError, ValueError):
    """
    實驗設定檔錯誤

    Attributes:
        field_paths: 出錯欄位的路徑，例如 ["scenario.mu", "run.seed"]
    """

    def __init__(self, message: str, field_paths: Optional[list[str]] = None):
        self.field_paths = field_paths or []
        if self.field_paths:
            message = f"{message}: {', '.join(self.field_paths)}"
        super().__init__(message)
