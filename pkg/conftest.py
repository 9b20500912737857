import os
import sys
import tempfile

# Tests import numerics.*, lab.*, utils.* the same way main.py does
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# Keep test runs from writing the log next to the sources
os.environ.setdefault("PERIMETER_LAB_LOG", os.path.join(tempfile.gettempdir(), "perimeter_lab_tests.log"))
