import sys

from sicmag.main import main

sys.exit(main())
