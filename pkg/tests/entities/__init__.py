"""
Entitiesテストパッケージ。
"""
