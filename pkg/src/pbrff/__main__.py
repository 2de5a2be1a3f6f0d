import sys

from pbrff.harness.cli import main

sys.exit(main())
