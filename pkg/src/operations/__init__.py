"""
High-level operation orchestration modules.

This package contains:
- Preflight checks run before every CLI command
- Prompt rendering, model clients and the extraction run
"""
