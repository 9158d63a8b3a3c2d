"""Context-aware intent detection for long-form email conversations."""

__version__ = "0.1.0"
