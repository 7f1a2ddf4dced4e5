"""
Test suite for the legalex extraction pipeline.

This package contains:
- Unit tests for parsers, retrieval, extraction, evaluation and stats
- End-to-end CLI tests with the mock embedder and fixture-backed model
- Shared fixtures in conftest.py
"""
