"""p-Laplacian eigenvalue and mountain-pass solvers on weighted graphs."""

__version__ = "0.1.0"
