import sys

from hsilbp.cli import main

sys.exit(main())
