"""
Text parsing for rulings.

This package contains:
- Corpus loading, cleaning and header scope filtering
- Token blocks and percent-symbol windows
- The regex baseline extractor (keywords, percentages, amounts)
- Parsing of chat-model answers
"""
