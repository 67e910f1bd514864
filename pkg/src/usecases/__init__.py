"""
UseCasesパッケージ。

ビジネスロジック層のユースケースを提供します。
"""
