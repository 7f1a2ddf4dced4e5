"""Shared fixtures and builders for the test suite."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pytest
import yaml

import src.core.logger as logger_module
from src.core.config import PipelineConfig
from src.core.models import Document


def build_config(tmp_path: Path, paths: Optional[Dict[str, Any]] = None, **sections: Any) -> PipelineConfig:
    """
    A validated config writing into tmp_path, with offline defaults.

    Keyword arguments replace whole config sections, e.g.
    ``build_config(tmp_path, segmenter={"block_size": 4})``.
    """
    data: Dict[str, Any] = {
        "config_version": 1,
        "environment": {"provenance_timestamp": "2024-01-01T00:00:00Z"},
        "logging": _logging_section(tmp_path),
        "performance": {"max_workers": 2, "show_progress": False},
        "paths": {"corpus": str(tmp_path / "corpus"), "output_dir": str(tmp_path / "output")},
    }
    data.update(sections)
    if paths:
        data["paths"].update(paths)
    return PipelineConfig(**data)


def _logging_section(tmp_path: Path) -> Dict[str, Any]:
    return {
        "level": "DEBUG",
        "operations_log": str(tmp_path / "logs" / "operations_{timestamp}.log"),
        "debug_log": str(tmp_path / "logs" / "debug_{timestamp}.log"),
        "errors_log": str(tmp_path / "logs" / "errors_{timestamp}.log"),
        "console_output": False,
    }


def write_config_files(tmp_path: Path, paths: Dict[str, Any], **sections: Any) -> Dict[str, Path]:
    """Write config.yml and paths.yml for CLI runs; returns both paths."""
    data: Dict[str, Any] = {
        "config_version": 1,
        "environment": {"provenance_timestamp": "2024-01-01T00:00:00Z"},
        "logging": _logging_section(tmp_path),
        "performance": {"max_workers": 2, "show_progress": False},
    }
    data.update(sections)
    config_path = tmp_path / "config.yml"
    paths_path = tmp_path / "paths.yml"
    config_path.write_text(yaml.safe_dump(data, allow_unicode=True), encoding="utf-8")
    paths_path.write_text(yaml.safe_dump(paths, allow_unicode=True), encoding="utf-8")
    return {"config": config_path, "paths": paths_path}


def make_document(doc_id: str, text: str, **fields: Any) -> Document:
    """A document that has already been through cleaning and scope filtering."""
    values: Dict[str, Any] = {
        "id": doc_id,
        "source_path": f"{doc_id}.txt",
        "raw_text": text,
        "cleaned_text": text,
        "header": text[:2000],
        "in_scope": True,
    }
    values.update(fields)
    return Document(**values)


@pytest.fixture
def config(tmp_path):
    return build_config(tmp_path)


@pytest.fixture
def fresh_logging(monkeypatch):
    """Allow setup_logging to run again, then restore the root logger."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    monkeypatch.setattr(logger_module, "_logging_initialized", False)
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)
