"""Run the anchorkit test suite from a source checkout.

    python run_tests.py          # fast suites
    python run_tests.py --slow   # include the desk-scale reproductions
"""
import os
import sys

import pytest

if __name__ == "__main__":
    project_root = os.path.dirname(os.path.abspath(__file__))
    sys.path.insert(0, project_root)

    args = [a for a in sys.argv[1:] if a != "--slow"]
    if "--slow" in sys.argv[1:]:
        os.environ["ANCHORKIT_RUN_SLOW"] = "1"
    sys.exit(pytest.main(["-v", os.path.join(project_root, "tests"), *args]))
