"""
穩態分佈快取模組

把求得的穩態分佈存成本地 JSON 檔，供參數掃描重複使用，支援：
- 依 (λ, μ, R) 取得 / 儲存
- 列出所有快取
- 刪除單一快取
- 清空全部快取
"""

import hashlib
import json
from datetime import datetime
from pathlib import Path
from typing import Optional

import numpy as np

from ..markov.solver import StationaryDistribution


class StationaryCache:
    """穩態分佈快取管理器"""

    def __init__(self, cache_dir: str = ".cache/stationary"):
        """
        初始化快取管理器

        Args:
            cache_dir: 快取目錄路徑
        """
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _make_key(self, lam: float, mu: float, capacity: int) -> str:
        """生成快取鍵值"""
        combined = f"{lam!r}|{mu!r}|{capacity}"
        return hashlib.sha256(combined.encode('utf-8')).hexdigest()[:16]

    def get(self, lam: float, mu: float, capacity: int) -> Optional[StationaryDistribution]:
        """
        取得快取的穩態分佈

        Args:
            lam: 每時槽平均新增元素數
            mu: 元素平均壽命的倒數
            capacity: 容量 R

        Returns:
            快取的分佈，若不存在或檔案損壞則返回 None
        """
        key = self._make_key(lam, mu, capacity)
        cache_file = self.cache_dir / f"{key}.json"

        if not cache_file.exists():
            return None

        try:
            data = json.loads(cache_file.read_text(encoding='utf-8'))
            return StationaryDistribution(
                pi=np.asarray(data['pi'], dtype=float),
                residual=float(data['residual']),
                method="cache",
            )
        except (json.JSONDecodeError, KeyError, ValueError):
            # 快取檔案損壞，刪除
            cache_file.unlink()
            return None

    def set(self, lam: float, mu: float, capacity: int, distribution: StationaryDistribution) -> str:
        """
        儲存穩態分佈

        Args:
            lam: 每時槽平均新增元素數
            mu: 元素平均壽命的倒數
            capacity: 容量 R
            distribution: 穩態分佈

        Returns:
            快取 ID
        """
        key = self._make_key(lam, mu, capacity)
        cache_file = self.cache_dir / f"{key}.json"

        cache_data = {
            'timestamp': datetime.now().isoformat(),
            'lambda': lam,
            'mu': mu,
            'capacity': capacity,
            'method': distribution.method,
            'residual': distribution.residual,
            'pi': distribution.pi.tolist(),
        }

        cache_file.write_text(json.dumps(cache_data), encoding='utf-8')
        return key

    def list_all(self) -> list[dict]:
        """
        列出所有快取項目

        Returns:
            快取項目列表，包含 id、lambda、mu、capacity、timestamp、size
        """
        items = []

        for f in self.cache_dir.glob("*.json"):
            try:
                data = json.loads(f.read_text(encoding='utf-8'))
                items.append({
                    'id': f.stem,
                    'lambda': data['lambda'],
                    'mu': data['mu'],
                    'capacity': data['capacity'],
                    'timestamp': data.get('timestamp'),
                    'size': f.stat().st_size,
                })
            except (json.JSONDecodeError, KeyError, ValueError):
                # 損壞的快取檔案，刪除
                f.unlink()
                continue

        # 按時間排序，最新的在前
        return sorted(items, key=lambda x: x['timestamp'] or "", reverse=True)

    def delete(self, cache_id: str) -> bool:
        """
        刪除單一快取

        Args:
            cache_id: 快取 ID

        Returns:
            是否成功刪除
        """
        cache_file = self.cache_dir / f"{cache_id}.json"

        if cache_file.exists():
            cache_file.unlink()
            return True

        return False

    def clear_all(self) -> int:
        """
        清空所有快取

        Returns:
            刪除的快取數量
        """
        count = 0

        for f in self.cache_dir.glob("*.json"):
            f.unlink()
            count += 1

        return count

    def get_stats(self) -> dict:
        """
        取得快取統計資訊

        Returns:
            包含 total_count、total_size 的字典
        """
        items = self.list_all()
        total_size = sum(item['size'] for item in items)

        return {
            'total_count': len(items),
            'total_size': total_size,
            'total_size_kb': round(total_size / 1024, 2),
        }


# 全域快取實例
_cache_instance: Optional[StationaryCache] = None


def get_cache(cache_dir: Optional[str] = None) -> StationaryCache:
    """取得全域快取實例（預設目錄取自 DISSEMINATION_CACHE_DIR）"""
    global _cache_instance
    if _cache_instance is None or (cache_dir and Path(cache_dir) != _cache_instance.cache_dir):
        from .config import get_config
        _cache_instance = StationaryCache(cache_dir or get_config().cache_dir)
    return _cache_instance
