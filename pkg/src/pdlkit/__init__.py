"""Decision procedures for propositional dynamic logic sequents."""

__version__ = "0.1.0"
