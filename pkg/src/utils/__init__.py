"""
ユーティリティパッケージ。

共通ユーティリティ機能を提供します。
"""
