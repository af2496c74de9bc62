"""Entry point for python -m qfb."""

from .cli import main

if __name__ == "__main__":
    main()
