import sys

from rivetline.cli import main

sys.exit(main())
