# Required for Python package imports
