"""
UseCasesテストパッケージ。
"""
