"""tcmflow: multi-agent TCM consultation, syndrome differentiation, prescription retrieval."""

__version__ = "0.1.0"
