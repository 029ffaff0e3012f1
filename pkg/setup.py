#!/usr/bin/env python3
"""Environment check: dependencies, output directory and sample configurations."""

import importlib
import sys
from pathlib import Path

PACKAGES = ['numpy', 'scipy', 'pandas', 'dotenv', 'yaml', 'pytest']
SAMPLES = Path(__file__).resolve().parent / 'data_samples'


def check_packages():
    """Вернуть список неустановленных пакетов."""
    print("📦 Зависимости:")
    missing = []
    for name in PACKAGES:
        try:
            module = importlib.import_module(name)
        except ImportError:
            print(f"  ✗ {name:<8} не установлен")
            missing.append(name)
        else:
            print(f"  ✓ {name:<8} {getattr(module, '__version__', '')}")
    return missing


def check_output_dir():
    """Каталог результатов по умолчанию должен быть доступен для записи."""
    from config.config import Config

    Config.validate()
    target = Config.OUTPUT_DIR
    target.mkdir(parents=True, exist_ok=True)
    print(f"\n📁 Каталог результатов: {target}")


def check_samples():
    """Прогнать проверку всех конфигураций из data_samples."""
    from data.loader import validate_config
    from models.errors import ConfigValidationError

    print("\n🧾 Примеры конфигураций:")
    broken = []
    for path in sorted(SAMPLES.glob('*.yaml')):
        try:
            cfg = validate_config(path)
        except ConfigValidationError as e:
            print(f"  ✗ {path.name}: {len(e.errors)} ошибок")
            broken.append(path.name)
        else:
            print(f"  ✓ {path.name} ({cfg.kind})")
    return broken


def main():
    print("\n🔧 CombSpec - проверка окружения")
    print("=" * 60)

    missing = check_packages()
    if missing:
        print(f"\n⚠️  Установите зависимости: pip install -r requirements.txt ({', '.join(missing)})")
        return 1
    try:
        check_output_dir()
        broken = check_samples()
    except Exception as e:
        print(f"\n❌ Ошибка: {e}")
        return 1

    print("\n" + "=" * 60)
    if broken:
        return 1
    print("🚀 Дальше:")
    print("   python run.py run --config data_samples/dual_linear.yaml --out-dir output/dual_linear")
    print("   python -m pytest tests/")
    print("   документация: README.md, docs/ARCHITECTURE.md, docs/FORMULAS.md")
    return 0


if __name__ == "__main__":
    sys.exit(main())
