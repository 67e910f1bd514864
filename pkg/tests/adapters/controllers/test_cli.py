"""
コマンドラインコントローラーのテスト。

小さな標本数で各サブコマンドを実行し、出力ファイルと終了コードを検証します。
"""

import json
import os
from pathlib import Path
from unittest.mock import patch

import pytest

from src.adapters.controllers.cli import (
    EXIT_DOMAIN_ERROR,
    EXIT_IO_ERROR,
    EXIT_OK,
    build_overrides,
    build_parser,
    main,
)
from src.di_container.container import DIContainer
from src.di_container.providers import register_all_providers

STMC_ARGS = ["--method", "stmc", "--finest-steps", "40", "--samples", "8", "--timings", "off"]


@pytest.fixture(autouse=True)
def setup_container() -> None:
    """テスト環境でプロバイダーを登録。"""
    with patch.dict(os.environ, {"APP_ENV": "test"}):
        DIContainer.reset()
        register_all_providers()
        yield
    DIContainer.reset()


def _load(directory: Path) -> dict:
    return json.loads((directory / "result.json").read_text(encoding="utf-8"))


class TestBuildParser:
    """build_parserのテスト。"""

    def test_run_arguments(self) -> None:
        """runサブコマンドの引数解析テスト。"""
        args = build_parser().parse_args(["run", *STMC_ARGS, "--adaptive"])
        assert args.command == "run"
        assert args.method == "stmc"
        assert args.finest_steps == 40
        assert args.timings is False
        assert args.adaptive is True

    def test_defaults(self) -> None:
        """未指定の引数のテスト。"""
        args = build_parser().parse_args(["run"])
        assert args.timings is True
        assert args.adaptive is None
        assert args.coupling_signs is None

    def test_list_arguments(self) -> None:
        """カンマ区切りの引数のテスト。"""
        args = build_parser().parse_args(
            ["release-sweep", "--heights", "0.1,0.5", "--methods", "mlmc", "--integrators", "gl,se"]
        )
        assert args.heights == [0.1, 0.5]
        assert args.methods == ["mlmc"]
        assert args.integrators == ["gl", "se"]

    def test_invalid_choice_exits(self) -> None:
        """不正な選択肢で終了コード2となるテスト。"""
        with pytest.raises(SystemExit) as exc_info:
            build_parser().parse_args(["run", "--coupling-signs", "maybe"])
        assert exc_info.value.code == 2

    def test_missing_command_exits(self) -> None:
        """サブコマンドなしのテスト。"""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestBuildOverrides:
    """build_overridesのテスト。"""

    def test_qoi_name_normalized(self) -> None:
        """評価量名のハイフンが変換されるテスト。"""
        args = build_parser().parse_args(["run", "--qoi", "mean-position", "--eps", "0.01"])
        overrides = build_overrides(args)
        assert overrides["qoi"]["kind"] == "mean_position"
        assert overrides["estimator"]["eps"] == 0.01
        assert overrides["simulation"]["integrator"] is None

    def test_pdf_forces_binned_field(self) -> None:
        """pdfサブコマンドでビン分割濃度場になるテスト。"""
        args = build_parser().parse_args(["pdf", "--qoi", "mean-position", "--bins", "5"])
        overrides = build_overrides(args)
        assert overrides["qoi"]["kind"] == "binned_field"
        assert overrides["qoi"]["bins"] == 5


class TestRunCommand:
    """サブコマンド実行のテスト。"""

    def test_run_stmc(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """固定刻み・固定標本数のStMC実行テスト。"""
        code = main(["run", *STMC_ARGS, "--output-dir", str(tmp_path)])
        assert code == EXIT_OK
        data = _load(tmp_path)
        assert data["schema_version"] == 1
        assert data["command"] == "run"
        assert data["result"]["method"] == "stmc"
        assert data["result"]["total_cost_steps"] == 8 * 40
        assert data["timings"] == {"wall_seconds": 0.0, "pilot_wall_seconds": 0.0}
        assert len(data["levels"]) == 1
        assert isinstance(data["result"]["estimate"], float)
        assert str(tmp_path / "result.json") in capsys.readouterr().out

    def test_rerun_is_byte_identical(self, tmp_path: Path) -> None:
        """同じ引数の再実行で同一のファイルになるテスト。"""
        argv = ["run", *STMC_ARGS, "--seed", "11", "--output-dir", str(tmp_path)]
        assert main(argv) == EXIT_OK
        first = (tmp_path / "result.json").read_bytes()
        assert main(argv) == EXIT_OK
        assert (tmp_path / "result.json").read_bytes() == first

    def test_seed_changes_result(self, tmp_path: Path) -> None:
        """シードが異なれば推定値が変わるテスト。"""
        argv = ["run", *STMC_ARGS, "--qoi", "mean-position"]
        assert main([*argv, "--seed", "1", "--output-dir", str(tmp_path / "a")]) == EXIT_OK
        assert main([*argv, "--seed", "2", "--output-dir", str(tmp_path / "b")]) == EXIT_OK
        first = _load(tmp_path / "a")["result"]["estimate"]
        second = _load(tmp_path / "b")["result"]["estimate"]
        assert first != second

    def test_variance_decay(self, tmp_path: Path) -> None:
        """分散減衰スイープの出力テスト。"""
        code = main(
            [
                "variance-decay",
                "--qoi",
                "mean-position",
                "--samples",
                "16",
                "--max-level",
                "2",
                "--output-dir",
                str(tmp_path),
            ]
        )
        assert code == EXIT_OK
        lines = (tmp_path / "variance_decay.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "level,h,var_Y,mean_Y,n_samples,cost_steps"
        assert len(lines) == 4
        result = _load(tmp_path)["result"]
        assert result["kind"] == "variance_decay"
        assert result["rows"] == 3

    def test_coupling_comparison(self, tmp_path: Path) -> None:
        """反射符号あり・なしの比較スイープの出力テスト。"""
        code = main(
            [
                "coupling-comparison",
                "--qoi",
                "mean-position",
                "--samples",
                "16",
                "--max-level",
                "2",
                "--output-dir",
                str(tmp_path),
            ]
        )
        assert code == EXIT_OK
        lines = (tmp_path / "coupling_comparison.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "level,h,var_Y,var_Y_no_signs,abs_mean_Y,abs_mean_Y_no_signs,n_samples"
        assert len(lines) == 4
        result = _load(tmp_path)["result"]
        assert result["kind"] == "coupling_comparison"
        assert "slope_no_signs" in result

    def test_pdf(self, tmp_path: Path) -> None:
        """濃度分布の出力テスト。"""
        code = main(["pdf", *STMC_ARGS, "--bins", "4", "--output-dir", str(tmp_path)])
        assert code == EXIT_OK
        result = _load(tmp_path)["result"]
        assert len(result["estimate"]) == 4
        assert result["concentration_sum"] == pytest.approx(1.0, abs=1e-9)
        lines = (tmp_path / "pdf.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "bin_lo,bin_hi,concentration,std_error"
        assert len(lines) == 5

    def test_config_error(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """設定ファイルの不変条件違反で終了コード2となるテスト。"""
        config_path = tmp_path / "bad.ini"
        config_path.write_text("[model]\neps_reg = 0.6\n", encoding="utf-8")
        code = main(["run", "--config", str(config_path), "--output-dir", str(tmp_path / "out")])
        assert code == EXIT_DOMAIN_ERROR
        assert "error:" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_stability_error(self, tmp_path: Path) -> None:
        """SEの安定性条件違反で終了コード2となるテスト。"""
        code = main(["run", "--coarse-steps", "20", "--output-dir", str(tmp_path)])
        assert code == EXIT_DOMAIN_ERROR

    def test_missing_config_file(self, tmp_path: Path) -> None:
        """設定ファイルがない場合に終了コード3となるテスト。"""
        code = main(["run", "--config", str(tmp_path / "missing.ini")])
        assert code == EXIT_IO_ERROR

    def test_output_dir_is_file(self, tmp_path: Path) -> None:
        """出力先がファイルの場合に終了コード3となるテスト。"""
        target = tmp_path / "occupied"
        target.write_text("", encoding="utf-8")
        code = main(["run", *STMC_ARGS, "--output-dir", str(target)])
        assert code == EXIT_IO_ERROR


class TestEntryPoint:
    """src.main のテスト。"""

    def test_main_bootstraps(self, tmp_path: Path) -> None:
        """ブートストラップを経由した実行テスト。"""
        from src.main import main as entry_main

        DIContainer.reset()
        code = entry_main(["run", *STMC_ARGS, "--output-dir", str(tmp_path)])
        assert code == EXIT_OK
        assert (tmp_path / "result.json").exists()
