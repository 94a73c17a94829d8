import sys

from prepaid_ems.cli import main

sys.exit(main())
