#!/usr/bin/env python3
"""Run the acceptance suite and print one line per criterion."""
import os
import subprocess
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.exit(subprocess.call([sys.executable, "-m", "pytest", "-q", "-s",
                          os.path.join(root, "tests", "test_acceptance.py")], cwd=root))
