"""monoglot: one multilingual seq2seq model for translation, grammatical
error correction and style transfer via monolingual application."""

__version__ = "0.1.0"
