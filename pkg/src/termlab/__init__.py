"""Term candidate extraction, termhood statistics and kernel-SVM term ranking."""

from termlab.errors import InputError, NumericalError, TermlabError

__version__ = "0.1.0"

__all__ = ["InputError", "NumericalError", "TermlabError", "__version__"]
