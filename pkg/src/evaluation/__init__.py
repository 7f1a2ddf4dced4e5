"""
Evaluation of segmentation and extraction.

This package contains:
- Gold dataset loading and Dataset-2 curation
- Segmentation QA, accuracy/recall scoring and report formatting
- The negative-segment hallucination benchmark and threshold sweep
"""
