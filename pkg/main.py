import sys

from cli import main

# Entry point for `python main.py <command> ...`
if __name__ == "__main__":
    sys.exit(main())
