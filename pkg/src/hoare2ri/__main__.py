import sys

from hoare2ri.cli import main

sys.exit(main())
