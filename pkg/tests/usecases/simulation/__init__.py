"""
シミュレーションテストパッケージ。
"""
