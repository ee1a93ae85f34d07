"""iterflow: iterative workflow engine with reuse-optimized execution plans."""

__version__ = "0.1.0"
