"""コマンドラインエントリーポイント"""

import sys
from collections.abc import Sequence

from src.adapters.controllers.cli import main as cli_main
from src.di_container.bootstrap import bootstrap, shutdown


def main(argv: Sequence[str] | None = None) -> int:
    """ブートストラップ後にCLIを実行し、終了コードを返す。"""
    bootstrap()
    try:
        return cli_main(argv)
    finally:
        shutdown()


if __name__ == "__main__":
    sys.exit(main())
