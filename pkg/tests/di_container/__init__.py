"""
DI Containerテストパッケージ。
"""
