# __main__.py
# python -m covert_game <comando> [opciones]

import sys

from covert_game.cli import main

if __name__ == "__main__":
    sys.exit(main())
