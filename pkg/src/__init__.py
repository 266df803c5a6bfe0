"""
控制資訊散播模型 (Incremental Dissemination)

有損無線網路中完整傾印、增量與累積差分更新的解析模型、參數調校器與時槽模擬器。
"""

__version__ = "0.1.0"
