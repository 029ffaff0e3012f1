"""Configuration management."""
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

ENV_PREFIX = "COMBSPEC_"


def _env(name: str, default: str) -> str:
    return os.getenv(ENV_PREFIX + name, default)


class Config:
    """Настройки запуска по умолчанию (переопределяются переменными COMBSPEC_*)."""

    # Export settings
    OUTPUT_DIR = Path(_env('OUTPUT_DIR', 'output'))
    CSV_FLOAT_FORMAT = _env('CSV_FLOAT_FORMAT', '%.17g')

    # Parallelism
    THREADS = int(_env('THREADS', '1'))

    # Numerical defaults
    TOOTH_FLOOR = float(_env('TOOTH_FLOOR', '1e-8'))
    LOCKIN_TAU = float(_env('LOCKIN_TAU', '0.2'))
    SHOTS = int(_env('SHOTS', '4096'))
    MAX_TERMS = int(_env('MAX_TERMS', '2000000'))

    @classmethod
    def output_override(cls):
        """Каталог из COMBSPEC_OUTPUT_DIR, если переменная задана."""
        value = os.getenv(ENV_PREFIX + 'OUTPUT_DIR')
        return Path(value) if value else None

    @classmethod
    def validate(cls):
        """Validate configuration."""
        if cls.THREADS < 1:
            raise ValueError(f"{ENV_PREFIX}THREADS должно быть >= 1")
        if not 0 < cls.TOOTH_FLOOR < 1:
            raise ValueError(f"{ENV_PREFIX}TOOTH_FLOOR должно лежать в (0, 1)")
        if cls.LOCKIN_TAU <= 0:
            raise ValueError(f"{ENV_PREFIX}LOCKIN_TAU должно быть > 0")
        if cls.SHOTS < 2 or cls.MAX_TERMS < 1:
            raise ValueError(f"{ENV_PREFIX}SHOTS и {ENV_PREFIX}MAX_TERMS должны быть положительными")
        return True

    @classmethod
    def print_config(cls):
        """Вывести текущую конфигурацию."""
        print("\n⚙️  КОНФИГУРАЦИЯ:")
        print("=" * 50)
        print(f"Выходная папка: {cls.OUTPUT_DIR}")
        print(f"Потоков: {cls.THREADS}")
        print(f"Порог зубцов ε: {cls.TOOTH_FLOOR}")
        print(f"τ lock-in: {cls.LOCKIN_TAU}")
        print(f"Выстрелов: {cls.SHOTS}")
        print(f"Лимит троек: {cls.MAX_TERMS}")
        print(f"Формат CSV: {cls.CSV_FLOAT_FORMAT}")
        print("=" * 50)
