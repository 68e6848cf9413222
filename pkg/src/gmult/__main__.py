import sys

from gmult.cli import main

sys.exit(main())
