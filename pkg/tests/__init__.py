"""
測試模組

包含所有單元測試和整合測試。
"""
