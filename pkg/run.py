#!/usr/bin/env python3
"""Точка входа в симулятор многогребёночной спектроскопии."""

import sys
from cli.main import main

if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\n👋 Программа завершена пользователем")
        sys.exit(1)
