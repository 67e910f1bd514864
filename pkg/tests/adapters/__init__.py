"""
Adaptersテストパッケージ。
"""
