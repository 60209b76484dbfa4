import sys

from percept.cli import main

sys.exit(main())
