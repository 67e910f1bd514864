"""
設定テストパッケージ。
"""
