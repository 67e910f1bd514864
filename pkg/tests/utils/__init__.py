"""
ユーティリティテストパッケージ。
"""
