import sys

from drtubes.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
