"""Entry point for `python -m backend.app`"""
from .cli import main

raise SystemExit(main())
