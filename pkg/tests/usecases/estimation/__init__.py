"""
推定テストパッケージ。
"""
