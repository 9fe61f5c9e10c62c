import sys

from vaeguard.cli import main

sys.exit(main())
