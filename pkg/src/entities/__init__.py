"""
Entitiesパッケージ。

ドメインモデル層のエンティティと値オブジェクトを提供します。
"""
