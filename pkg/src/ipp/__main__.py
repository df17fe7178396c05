"""Allow running the CLI via ``python -m ipp``."""

from .cli import main

main()
