"""Hate-speech detection toolkit for English and Hindi-English code-mixed text.

Provides corpus handling, language-specific text normalization, WordPiece
tokenization, contextual embedding backends with trainable classifier heads,
evaluation metrics, and an HTTP annotation service.
"""

__version__ = "0.1.0"
