"""
統合テストパッケージ。
"""
