import sys

from simstream.cli import main

sys.exit(main())
