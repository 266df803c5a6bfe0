"""
結果匯出模組

把報告物件或列字典整理成 pandas DataFrame，支援匯出格式：
- CSV（12 位有效數字，缺值留空）
- JSON (.json)
"""

import json
import math
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Optional, Union

import pandas as pd

DEFAULT_PRECISION = 12


def _as_row(item: Any) -> dict:
    if isinstance(item, dict):
        return item
    if hasattr(item, "to_row"):
        return item.to_row()
    raise TypeError(f"無法轉換為資料列: {type(item).__name__}")


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    if hasattr(value, "item"):
        return value.item()
    return value


class ReportExporter:
    """報告匯出器"""

    def __init__(
        self,
        rows: Union[pd.DataFrame, Iterable[Any]],
        columns: Optional[list[str]] = None,
        precision: int = DEFAULT_PRECISION,
    ):
        """
        初始化匯出器

        Args:
            rows: DataFrame，或字典 / 具 to_row() 的報告物件序列
            columns: 固定的欄位順序，未指定時依第一次出現的順序
            precision: CSV 的有效位數
        """
        if isinstance(rows, pd.DataFrame):
            self.frame = rows.copy()
        else:
            records = [_as_row(item) for item in rows]
            self.frame = pd.DataFrame.from_records(records) if records else pd.DataFrame()
        if columns is not None:
            self.frame = self.frame.reindex(columns=columns)
        self.precision = precision
        self.timestamp = datetime.now().isoformat()

    def to_dataframe(self) -> pd.DataFrame:
        """取得 DataFrame"""
        return self.frame

    def to_csv(self, path: Optional[str] = None) -> str:
        """
        匯出為 CSV

        Args:
            path: 輸出路徑，None 時只回傳字串

        Returns:
            CSV 字串
        """
        text = self.frame.to_csv(index=False, float_format=f"%.{self.precision}g", na_rep="")
        if path is not None:
            out = Path(path)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text, encoding="utf-8")
        return text

    def to_json(self, indent: int = 2) -> str:
        """
        匯出為 JSON 格式

        Args:
            indent: 縮排空格數

        Returns:
            JSON 字串
        """
        records = [
            {key: _json_safe(value) for key, value in record.items()}
            for record in self.frame.to_dict(orient="records")
        ]
        export_data = {
            "export_info": {
                "format": "json",
                "exported_at": self.timestamp,
                "rows": len(records),
            },
            "rows": records,
        }
        return json.dumps(export_data, ensure_ascii=False, indent=indent)


def export_rows(
    rows: Union[pd.DataFrame, Iterable[Any]],
    path: Optional[str] = None,
    format: str = "csv",
    precision: int = DEFAULT_PRECISION,
    columns: Optional[list[str]] = None,
) -> str:
    """
    便捷函數：匯出結果列

    Args:
        rows: 結果列
        path: 輸出路徑，None 時只回傳字串
        format: csv 或 json
        precision: CSV 有效位數
        columns: 固定欄位順序

    Returns:
        匯出內容
    """
    exporter = ReportExporter(rows, columns=columns, precision=precision)
    if format == "csv":
        return exporter.to_csv(path)
    if format == "json":
        content = exporter.to_json()
        if path is not None:
            out = Path(path)
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(content, encoding="utf-8")
        return content
    raise ValueError(f"不支援的格式: {format}")
