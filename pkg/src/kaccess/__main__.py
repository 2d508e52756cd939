import sys

from kaccess.cli import main

if __name__ == "__main__":
    sys.exit(main())
