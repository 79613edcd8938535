import sys

from . import cthermo

if __name__ == '__main__':
    sys.exit(cthermo.main())
