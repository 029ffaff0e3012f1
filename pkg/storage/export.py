"""Export results to files."""
import hashlib
import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Dict, Union

import numpy as np
import pandas as pd
import scipy
import yaml

from config.config import Config

Artifact = Union[pd.DataFrame, dict]


def _plain(value):
    """Перевести numpy-типы в обычные для json.dump."""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "imag": float(value.imag)}
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class Exporter:
    """Экспортер результатов."""

    @staticmethod
    def config_hash(settings: Dict) -> str:
        """SHA-256 нормализованной конфигурации."""
        text = json.dumps(settings, sort_keys=True, default=_plain, ensure_ascii=False)
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    @staticmethod
    def module_versions() -> Dict[str, str]:
        return {
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "pyyaml": yaml.__version__,
        }

    @staticmethod
    def split_complex(frame: pd.DataFrame) -> pd.DataFrame:
        """Комплексные колонки x -> x_re, x_imag."""
        columns = {}
        for name in frame.columns:
            values = frame[name].to_numpy()
            if np.iscomplexobj(values):
                columns[f"{name}_re"] = values.real
                columns[f"{name}_imag"] = values.imag
            else:
                columns[name] = frame[name]
        return pd.DataFrame(columns, index=frame.index)

    @staticmethod
    def export_to_csv(frame: pd.DataFrame, output_path: Path) -> None:
        """
        Экспортировать таблицу в CSV.

        Числа пишутся с 17 значащими цифрами, чтобы повторное чтение
        давало те же значения бит в бит.
        """
        output_path.parent.mkdir(parents=True, exist_ok=True)
        frame = Exporter.split_complex(frame)
        frame.to_csv(output_path, index=False, float_format=Config.CSV_FLOAT_FORMAT, lineterminator="\n")

    @staticmethod
    def export_to_json(data: dict, output_path: Path) -> None:
        """Экспортировать словарь в JSON."""
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, 'w', encoding='utf-8') as f:
            json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True, default=_plain)
            f.write("\n")

    @staticmethod
    def build_manifest(settings: Dict, artifacts: Dict[str, Artifact], tolerances: Dict) -> dict:
        """Манифест запуска: хеш конфигурации, версии модулей, допуски и список файлов."""
        return {
            "config_hash": Exporter.config_hash(settings),
            "config": settings,
            "versions": Exporter.module_versions(),
            "tolerances": tolerances,
            "artifacts": sorted(artifacts),
        }

    @staticmethod
    def export_bundle(artifacts: Dict[str, Artifact], settings: Dict, tolerances: Dict,
                      output_dir: Path) -> Path:
        """
        Записать все артефакты и manifest.json в output_dir.

        Файлы сначала пишутся во временный каталог рядом с output_dir и
        переносятся только после успешной записи всех файлов; при ошибке
        output_dir не меняется.
        """
        output_dir = Path(output_dir)
        parent = output_dir.resolve().parent
        if output_dir.exists() and not output_dir.is_dir():
            raise NotADirectoryError(f"output path {output_dir} is not a directory")
        if output_dir.exists() and not os.access(output_dir, os.W_OK):
            raise PermissionError(f"output directory {output_dir} is not writable")
        parent.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=".combspec-", dir=parent))
        try:
            for name, artifact in artifacts.items():
                if isinstance(artifact, pd.DataFrame):
                    Exporter.export_to_csv(artifact, stage / name)
                else:
                    Exporter.export_to_json(artifact, stage / name)
            manifest = Exporter.build_manifest(settings, artifacts, tolerances)
            Exporter.export_to_json(manifest, stage / "manifest.json")

            if not output_dir.exists():
                os.replace(stage, output_dir)
            else:
                for path in sorted(stage.iterdir()):
                    os.replace(path, output_dir / path.name)
        finally:
            shutil.rmtree(stage, ignore_errors=True)

        print(f"✅ Результаты экспортированы в: {output_dir}")
        return output_dir

    @staticmethod
    def print_summary(kind: str, artifacts: Dict[str, Artifact]) -> None:
        """Вывести сводку по артефактам запуска."""
        if not artifacts:
            print("⚠️  Нет данных для отображения")
            return

        print("\n" + "=" * 60)
        print(f"📊 СВОДКА: {kind}")
        print("=" * 60)
        for name in sorted(artifacts):
            artifact = artifacts[name]
            if isinstance(artifact, pd.DataFrame):
                print(f"  {name:<24} {len(artifact):>10} строк")
            else:
                print(f"  {name:<24} {len(artifact):>10} полей")
        print("=" * 60)
