"""Allow `python -m lgd`."""
from .cli.lgd_cli import main

if __name__ == "__main__":
    main()
