import sys

from mzi_pigeonhole._cli import main

sys.exit(main())
