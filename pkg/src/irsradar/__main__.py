import sys

from irsradar.harness.cli import main

sys.exit(main())
