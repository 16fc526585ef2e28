import sys

from thermo_formalism.cli import main

sys.exit(main())
