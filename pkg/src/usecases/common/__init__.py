"""
共通インターフェースパッケージ。
"""
