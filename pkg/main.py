import sys

from xdmt.cli import main

if __name__ == '__main__':
    sys.exit(main())
