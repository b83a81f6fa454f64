from plicfw.cli import main
import sys

sys.exit(main())
