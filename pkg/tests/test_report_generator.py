"""Report Generator 模块测试."""

import math

import numpy as np
import pytest
import yaml

from src.config import ReportConfig
from src.report_generator import ReportGenerator, manifest_path, violations_path


class TestReportGenerator:
    """测试 ReportGenerator."""

    @pytest.fixture
    def generator(self):
        """创建 Generator 实例."""
        return ReportGenerator()

    def test_init_default_config(self):
        """测试使用默认配置初始化."""
        generator = ReportGenerator()
        assert generator.config.delimiter == ","
        assert generator.config.float_format == "{:.17g}"

    def test_init_custom_config(self):
        """测试使用自定义配置初始化."""
        generator = ReportGenerator(ReportConfig(delimiter="\t"))
        assert generator.generate_table(["a", "b"], [(1, 2)]) == "a\tb\n1\t2\n"

    @pytest.mark.parametrize(
        "value, expected",
        [
            (True, "true"),
            (np.bool_(False), "false"),
            (3, "3"),
            (np.int64(-4), "-4"),
            (0.1, "0.10000000000000001"),
            (np.float64(2.5), "2.5"),
            (math.nan, "nan"),
            (math.inf, "inf"),
            (None, ""),
            ("142", "142"),
        ],
    )
    def test_format_value(self, generator, value, expected):
        """测试单元格格式."""
        assert generator.format_value(value) == expected

    def test_float_round_trips(self, generator):
        """测试 17 位有效数字可精确还原."""
        value = 1.0 / 3.0
        assert float(generator.format_value(value)) == value


class TestGenerateTable:
    """测试结果表."""

    def test_header_and_rows(self):
        """测试表头与数据行."""
        text = ReportGenerator().generate_table(["n", "value", "exhaustive"], [(1, 0.5, True), (2, 0.25, False)])
        assert text == "n,value,exhaustive\n1,0.5,true\n2,0.25,false\n"

    def test_empty_rows(self):
        """测试只有表头."""
        assert ReportGenerator().generate_table(["a"], []) == "a\n"

    def test_write_table(self, tmp_path):
        """测试写入时自动创建目录."""
        path = tmp_path / "nested" / "koch-build.csv"
        ReportGenerator().write_table(str(path), ["index", "x"], [(0, 0.0)])
        assert path.read_text(encoding="utf-8") == "index,x\n0,0\n"


class TestManifest:
    """测试运行清单."""

    def test_yaml_sorted(self):
        """测试清单为键排序的 YAML 且数值转换为内置类型."""
        text = ReportGenerator().generate_manifest(
            command="quadform",
            parameters={"epsilon": np.float64(0.01), "radii": (0.1, 0.2)},
            seed=np.int64(5),
            budgets={"vertex_budget": 1679617},
            config_hash="abc",
            summary={"value": 1.5, "converged": np.bool_(True)},
        )
        data = yaml.safe_load(text)
        assert list(data) == sorted(data)
        assert data["command"] == "quadform"
        assert data["parameters"] == {"epsilon": 0.01, "radii": [0.1, 0.2]}
        assert data["seed"] == 5
        assert data["summary"]["converged"] is True

    def test_deterministic(self):
        """测试相同输入产生相同文本."""
        kwargs = dict(command="lift", parameters={}, seed=0, budgets={}, config_hash="h", summary={"n": 1})
        assert ReportGenerator().generate_manifest(**kwargs) == ReportGenerator().generate_manifest(**kwargs)

    def test_write_manifest_and_lines(self, tmp_path):
        """测试清单与违例文件写在结果表旁."""
        out = str(tmp_path / "czcheck.csv")
        generator = ReportGenerator()
        path = generator.write_manifest(
            out, command="czcheck", parameters={}, seed=0, budgets={}, config_hash="h", summary={}
        )
        assert path == str(tmp_path / "czcheck.manifest.txt")
        assert yaml.safe_load((tmp_path / "czcheck.manifest.txt").read_text(encoding="utf-8"))["command"] == "czcheck"
        lines_path = generator.write_lines(violations_path(out), ["a", "b"])
        assert lines_path == str(tmp_path / "czcheck.violations.txt")
        assert (tmp_path / "czcheck.violations.txt").read_text(encoding="utf-8") == "a\nb\n"


class TestPaths:
    """测试派生路径."""

    def test_paths(self):
        """测试 <stem>.manifest.txt 与 <stem>.violations.txt."""
        assert manifest_path("results/quadform.csv") == "results/quadform.manifest.txt"
        assert violations_path("out.tsv") == "out.violations.txt"
