"""
DI Containerパッケージ。

依存性注入コンテナの実装を提供します。
"""
