import sys

from condstates.cli import main

sys.exit(main())
