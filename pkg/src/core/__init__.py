"""
Core infrastructure modules for the extraction pipeline.

This package contains cross-cutting concerns including:
- Domain records exchanged between stages
- Configuration loading and validation
- Centralized logging setup
- Artifact writing with provenance headers
- HTTP calls with bounded retries
"""
