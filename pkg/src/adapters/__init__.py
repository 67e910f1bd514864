"""
Adaptersパッケージ。

外部システムとの接続を担当する実装層を提供します。
"""
