"""
legalex: disability and compensation entity extraction from court rulings.

A batch pipeline that segments rulings (percent-symbol windows or embedding
retrieval over token blocks), extracts entities with a regex baseline or a
chat-completion model, flags likely hallucinations from token probabilities,
scores extractions against gold labels and derives point-value statistics.
"""

__version__ = "0.1.0"
__author__ = "legalex project"
