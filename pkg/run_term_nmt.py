"""Run TermNMT from the project root.

This launcher imports the package entrypoint so you can run:

    python run_term_nmt.py --out-dir out synth

instead of using the `-m` flag.
"""

import sys

from TermNMT.term_nmt_app import main

if __name__ == "__main__":
    sys.exit(main())
