"""
Repositoriesパッケージ。

データ永続化層の実装を提供します。
"""
