"""Tests for Exporter."""
import json

import numpy as np
import pandas as pd
import pytest

from storage.export import Exporter


def test_config_hash_ignores_key_order():
    """Хеш не зависит от порядка ключей."""
    first = {"experiment": {"kind": "dual_linear", "detect": 1}, "grid": {"step": 0.001}}
    second = {"grid": {"step": 0.001}, "experiment": {"detect": 1, "kind": "dual_linear"}}

    assert Exporter.config_hash(first) == Exporter.config_hash(second)
    assert Exporter.config_hash(first) != Exporter.config_hash({**first, "grid": {"step": 0.002}})


def test_split_complex_columns():
    """Комплексная колонка раскладывается на _re и _imag."""
    frame = pd.DataFrame({"m": [0, 1], "chi": np.array([1 + 2j, -3j])})
    split = Exporter.split_complex(frame)

    assert list(split.columns) == ["m", "chi_re", "chi_imag"]
    np.testing.assert_array_equal(split["chi_imag"], [2.0, -3.0])


def test_csv_keeps_full_precision(tmp_path):
    """17 значащих цифр: значения читаются обратно без потерь."""
    values = np.array([1 / 3, np.pi * 1e-12, -2.0 ** 0.5])
    path = tmp_path / "values.csv"
    Exporter.export_to_csv(pd.DataFrame({"x": values}), path)

    np.testing.assert_array_equal(pd.read_csv(path, float_precision="round_trip")["x"].to_numpy(), values)


def test_json_converts_numpy_values(tmp_path):
    """numpy-числа, массивы и комплексные значения пишутся в JSON."""
    path = tmp_path / "report.json"
    Exporter.export_to_json({"rank": np.int64(3), "ok": np.bool_(True), "v": np.arange(2), "z": 1 + 1j}, path)

    assert json.loads(path.read_text(encoding="utf-8")) == {
        "rank": 3, "ok": True, "v": [0, 1], "z": {"re": 1.0, "imag": 1.0},
    }


def test_bundle_into_existing_directory(tmp_path):
    """Существующий каталог пополняется; временный каталог удаляется."""
    out = tmp_path / "out"
    out.mkdir()
    (out / "notes.txt").write_text("keep", encoding="utf-8")
    artifacts = {"spikes.csv": pd.DataFrame({"m": [0]}), "report.json": {"a": 1}}
    Exporter.export_bundle(artifacts, {"experiment": {"kind": "x"}}, {"lam": 0.0}, out)

    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "notes.txt", "report.json", "spikes.csv"]
    assert not any(p.name.startswith(".combspec-") for p in tmp_path.iterdir())
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["artifacts"] == ["report.json", "spikes.csv"]
    assert set(manifest["versions"]) == {"numpy", "scipy", "pandas", "pyyaml"}


def test_bundle_rejects_file_path(tmp_path):
    """Путь вывода указывает на файл."""
    target = tmp_path / "file"
    target.write_text("x", encoding="utf-8")
    with pytest.raises(NotADirectoryError):
        Exporter.export_bundle({}, {}, {}, target)
