"""
Configuration loading and validation module.

This module provides centralized configuration management using Pydantic for
validation and YAML for human-readable config files. It supports:
- Environment variable substitution (${VAR_NAME} syntax)
- Multiple config file loading (main config + paths config)
- Type validation and default values mirroring each stage's invariants
- Regex patterns compiled at load time, so a bad pattern is a config error
- A stable config hash recorded in every artifact's provenance header

API credentials are never part of the configuration; they are read from the
environment variables named by LLM_API_KEY_ENV and EMBED_API_KEY_ENV.

Usage:
    from src.core.config import load_config

    config = load_config()
    print(config.segmenter.block_size)
"""

import hashlib
import json
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

from src.core.models import EntityKind


# Load environment variables from .env file if present
# This allows local development without setting system env vars
load_dotenv()

CONFIG_VERSION = 1

LLM_API_KEY_ENV = "LEGALEX_LLM_API_KEY"
EMBED_API_KEY_ENV = "LEGALEX_EMBED_API_KEY"

# Percent-symbol search and percentage capture, as used by the regex baseline.
# The capture pattern keeps its unescaped "." (any character) unless the
# corrected variant is selected.
VERBATIM_PERCENT_PATTERN = r"[\w\d\s\n,.]{0,1}%"
VERBATIM_PERCENTAGE_CAPTURE = r"(\d+(?:,\d+)?(?:.\d+)?)\s*%"
CORRECTED_PERCENTAGE_CAPTURE = r"(\d+(?:,\d+)?(?:\.\d+)?)\s*%"


class ConfigurationError(ValueError):
    """Raised for configuration problems detected outside pydantic validation."""


def _compile_patterns(patterns: List[str]) -> List[str]:
    for pattern in patterns:
        try:
            re.compile(pattern)
        except re.error as e:
            raise ValueError(f"invalid regular expression {pattern!r}: {e}") from e
    return patterns


def _all_kind_values() -> List[str]:
    return [kind.value for kind in EntityKind]


# ==============================================================================
# PYDANTIC MODELS FOR CONFIGURATION VALIDATION
# ==============================================================================

class EnvironmentConfig(BaseModel):
    """
    Environment-level settings.

    provenance_timestamp pins the timestamp written into artifact headers;
    leave it unset to stamp the current UTC time. Pin it when reruns must be
    byte-identical.
    """
    profile: str = Field(default="development", description="Configuration profile name")
    min_python_version: str = Field(default="3.8", description="Minimum required Python version")
    provenance_timestamp: Optional[str] = Field(default=None)


class LoggingConfig(BaseModel):
    """
    Logging configuration for structured output to multiple destinations.

    JSON formatting enables easy parsing and analysis of logs by external tools.
    Multiple log files allow filtering by severity without post-processing.
    """
    level: str = Field(default="INFO", description="Log level: DEBUG, INFO, WARNING, ERROR, CRITICAL")
    operations_log: str = Field(default="logs/operations_{timestamp}.log")
    debug_log: str = Field(default="logs/debug_{timestamp}.log")
    errors_log: str = Field(default="logs/errors_{timestamp}.log")
    console_output: bool = Field(default=True, description="Also output to console")
    max_bytes: int = Field(default=10485760, description="Max log file size in bytes")
    backup_count: int = Field(default=5, description="Number of rotated log files to keep")
    json_format: bool = Field(default=True, description="Use JSON formatting for structured logs")


class ScopeConfig(BaseModel):
    """Header keyword rules; both lists empty accepts every ruling."""
    must_patterns: List[str] = Field(default_factory=list)
    must_not_patterns: List[str] = Field(default_factory=list)

    @field_validator('must_patterns', 'must_not_patterns')
    @classmethod
    def validate_patterns(cls, v: List[str]) -> List[str]:
        return _compile_patterns(v)


class CorpusConfig(BaseModel):
    """Loading, cleaning and scope filtering of ruling texts."""
    file_glob: str = Field(default="*.txt")
    header_code_patterns: List[str] = Field(default_factory=list)
    header_chars: int = Field(default=2000, ge=1)
    scope: ScopeConfig = Field(default_factory=ScopeConfig)
    infer_ruling_date: bool = Field(default=True)
    only_in_scope: bool = Field(default=True, description="Later stages skip out-of-scope rulings")

    @field_validator('header_code_patterns')
    @classmethod
    def validate_patterns(cls, v: List[str]) -> List[str]:
        return _compile_patterns(v)


class SegmenterConfig(BaseModel):
    """
    Token blocks and percent-symbol windows.

    block_size and expansion_radius are in whitespace tokens and blocks;
    regex_window_chars is in characters on each side of a match.
    """
    block_size: int = Field(default=120, ge=1)
    expansion_radius: int = Field(default=1, ge=0)
    regex_window_chars: int = Field(default=500, ge=0)
    percent_pattern: str = Field(default=VERBATIM_PERCENT_PATTERN)
    merge_windows: bool = Field(default=True, description="Merge overlapping regex windows")

    @field_validator('percent_pattern')
    @classmethod
    def validate_pattern(cls, v: str) -> str:
        _compile_patterns([v])
        return v


class EmbedderSpec(BaseModel):
    """
    Embedding backend.

    "mock" hashes character n-grams into ``dim`` buckets (offline, seeded);
    "remote" speaks the OpenAI-embeddings wire format at ``url``.
    """
    backend: str = Field(default="mock", pattern="^(mock|remote)$")
    model: str = Field(default="mock-char-ngram")
    url: Optional[str] = Field(default=None)
    dim: int = Field(default=64, ge=1)
    seed: int = Field(default=13)
    ngram_size: int = Field(default=3, ge=1)
    batch_size: int = Field(default=32, ge=1)
    max_concurrent_requests: int = Field(default=2, ge=1)
    retry_limit: int = Field(default=2, ge=0)
    timeout: float = Field(default=30.0, gt=0)
    backoff_seconds: float = Field(default=1.0, ge=0)

    @property
    def identity(self) -> str:
        """Recorded in persisted indices; loading under another identity fails."""
        if self.backend == "mock":
            return f"mock:{self.model}:dim={self.dim}:seed={self.seed}:n={self.ngram_size}"
        return f"remote:{self.model}"

    @model_validator(mode='after')
    def validate_remote_url(self) -> "EmbedderSpec":
        if self.backend == "remote" and not self.url:
            raise ValueError("remote embedder requires url")
        return self


class RetrievalConfig(BaseModel):
    """
    Similarity search settings.

    ``queries`` overrides the generated query text per entity kind;
    ``exemplars`` lists expected text blocks per kind for query generation.
    """
    embedder: EmbedderSpec = Field(default_factory=EmbedderSpec)
    k: int = Field(default=3, ge=1, description="Blocks retrieved per query")
    top_m: int = Field(default=8, ge=1, description="Terms per generated query")
    min_term_length: int = Field(default=2, ge=1)
    queries: Dict[str, str] = Field(default_factory=dict)
    exemplars: Dict[str, List[str]] = Field(default_factory=dict)

    @field_validator('queries', 'exemplars')
    @classmethod
    def validate_kinds(cls, v: Dict[str, Any]) -> Dict[str, Any]:
        for key in v:
            EntityKind(key)
        return v


class RegexExtractionConfig(BaseModel):
    """Keyword lists for the regex baseline (lower-case, matched as word prefixes)."""
    keywords: Dict[str, List[str]] = Field(default_factory=lambda: {
        "physical": ["física", "físico"],
        "psychological": ["psicológica", "psicológico", "psíquica", "psíquico"],
        "psychophysical": ["psicofísica", "psicofísico"],
    })
    moral_damage_keywords: List[str] = Field(default_factory=lambda: ["daño moral"])
    corrected_patterns: bool = Field(default=False, description="Escape the '.' in the percent patterns")

    @field_validator('keywords')
    @classmethod
    def validate_keywords(cls, v: Dict[str, List[str]]) -> Dict[str, List[str]]:
        for group in ("physical", "psychological"):
            if not v.get(group):
                raise ValueError(f"keyword list '{group}' must not be empty")
        return v

    @property
    def percent_capture_pattern(self) -> str:
        return CORRECTED_PERCENTAGE_CAPTURE if self.corrected_patterns else VERBATIM_PERCENTAGE_CAPTURE


class LlmConfig(BaseModel):
    """
    Chat-completion backend.

    "http" speaks the OpenAI-chat wire format at ``endpoint``; "mock" answers
    from a JSONL fixture keyed by prompt SHA-256 (paths.llm_fixtures).
    """
    backend: str = Field(default="mock", pattern="^(mock|http)$")
    endpoint: Optional[str] = Field(default=None)
    model: str = Field(default="mock-model")
    temperature: float = Field(default=0.0, ge=0.0)
    max_output_tokens: int = Field(default=256, ge=1)
    request_logprobs: bool = Field(default=True)
    max_concurrent_requests: int = Field(default=4, ge=1)
    retry_limit: int = Field(default=2, ge=0)
    timeout: float = Field(default=60.0, gt=0)
    backoff_seconds: float = Field(default=1.0, ge=0)
    save_prompts: bool = Field(default=False, description="Write prompts_<method>.jsonl next to extractions")
    kinds: List[str] = Field(default_factory=_all_kind_values)

    @field_validator('kinds')
    @classmethod
    def validate_kinds(cls, v: List[str]) -> List[str]:
        for key in v:
            EntityKind(key)
        return v

    @model_validator(mode='after')
    def validate_endpoint(self) -> "LlmConfig":
        if self.backend == "http" and not self.endpoint:
            raise ValueError("http llm backend requires endpoint")
        return self


DEFAULT_PROMPT_TEMPLATE = (
    "Sos un asistente que extrae datos de sentencias judiciales.\n"
    "{entity_kind_instruction}\n\n"
    "Fragmentos de la sentencia:\n"
    "{segments}\n"
)

DEFAULT_INSTRUCTIONS = {
    "physical_disability": "Indicá el porcentaje de incapacidad física y el monto otorgado por ella.",
    "psychological_disability": "Indicá el porcentaje de incapacidad psicológica y el monto otorgado por ella.",
    "psychophysical_disability": "Indicá el porcentaje de incapacidad psicofísica y el monto otorgado por ella.",
    "moral_damage": "Indicá el monto otorgado en concepto de daño moral.",
}


class PromptConfig(BaseModel):
    """
    Prompt template and per-kind instructions.

    The template uses str.format placeholders {entity_kind_instruction} and
    {segments}; literal braces must be doubled.
    """
    system_message: Optional[str] = Field(default=None)
    template: str = Field(default=DEFAULT_PROMPT_TEMPLATE)
    instructions: Dict[str, str] = Field(default_factory=lambda: dict(DEFAULT_INSTRUCTIONS))
    segment_delimiter: str = Field(default="\n-----\n")

    @field_validator('instructions')
    @classmethod
    def validate_kinds(cls, v: Dict[str, str]) -> Dict[str, str]:
        for key in v:
            EntityKind(key)
        return v


class HallucinationConfig(BaseModel):
    """Minimum-probability flagging; a generation is flagged when p_min < p_u."""
    p_u: float = Field(default=0.5, ge=0.0, le=1.0)
    sweep_grid: List[float] = Field(default_factory=lambda: [round(0.1 * i, 1) for i in range(11)])

    @field_validator('sweep_grid')
    @classmethod
    def validate_grid(cls, v: List[float]) -> List[float]:
        for p_u in v:
            if not 0.0 <= p_u <= 1.0:
                raise ValueError(f"sweep threshold {p_u} outside [0, 1]")
        return sorted(v)


class EvalConfig(BaseModel):
    """Numeric tolerances for value matching (absolute)."""
    percentage_tolerance: float = Field(default=0.01, ge=0.0)
    amount_tolerance: float = Field(default=0.01, ge=0.0)


class StatsConfig(BaseModel):
    """Point value and distribution settings."""
    source_method: str = Field(default="llm", pattern="^(llm|regex)$")
    bin_edges: List[float] = Field(default_factory=lambda: [float(e) for e in range(0, 101, 10)])
    below_threshold: float = Field(default=30.0)
    above_threshold: float = Field(default=50.0)
    monthly_aggregate: str = Field(default="mean", pattern="^(mean|median)$")
    jurisdictions: List[str] = Field(default_factory=list, description="Empty keeps every jurisdiction")
    year: Optional[int] = Field(default=None)
    psychophysical_as_physical: bool = Field(default=False)

    @field_validator('bin_edges')
    @classmethod
    def validate_edges(cls, v: List[float]) -> List[float]:
        if len(v) < 2 or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("bin_edges must hold at least two strictly ascending values")
        return v


class PerformanceConfig(BaseModel):
    """
    Worker pool settings.

    max_workers bounds per-document work in the CLI; HTTP concurrency is
    bounded separately by the llm and embedder sections.
    """
    max_workers: int = Field(default=4, ge=1, le=32)
    show_progress: bool = Field(default=True)


class PathsConfig(BaseModel):
    """
    Path configuration loaded from paths.yml.

    Paths are kept in a separate file to allow easy environment-specific
    overrides without modifying the main configuration.
    """
    corpus: str = Field(description="Directory of .txt rulings or a JSONL manifest")
    output_dir: str = Field(default="output")
    gold: Optional[str] = Field(default=None)
    negatives: Optional[str] = Field(default=None)
    cpi: Optional[str] = Field(default=None)
    exemplars: Optional[str] = Field(default=None)
    llm_fixtures: Optional[str] = Field(default=None)
    queries: Optional[str] = Field(default=None, description="Defaults to <output_dir>/queries.yml")
    index: Optional[str] = Field(default=None, description="Persisted index reused by extract")

    @field_validator('corpus', 'output_dir', 'gold', 'negatives', 'cpi', 'exemplars',
                     'llm_fixtures', 'queries', 'index')
    @classmethod
    def validate_path(cls, v: Optional[str]) -> Optional[str]:
        """Expand environment variables in path."""
        if v is None:
            return None
        return os.path.expandvars(v)

    @property
    def queries_path(self) -> Path:
        return Path(self.queries) if self.queries else Path(self.output_dir) / "queries.yml"


class PipelineConfig(BaseModel):
    """
    Top-level application configuration.

    This aggregates all configuration sections into a single validated object
    that is passed throughout the application.
    """
    config_version: int
    environment: EnvironmentConfig = Field(default_factory=EnvironmentConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    corpus: CorpusConfig = Field(default_factory=CorpusConfig)
    segmenter: SegmenterConfig = Field(default_factory=SegmenterConfig)
    retrieval: RetrievalConfig = Field(default_factory=RetrievalConfig)
    regex_extraction: RegexExtractionConfig = Field(default_factory=RegexExtractionConfig)
    llm: LlmConfig = Field(default_factory=LlmConfig)
    prompts: PromptConfig = Field(default_factory=PromptConfig)
    hallucination: HallucinationConfig = Field(default_factory=HallucinationConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)
    stats: StatsConfig = Field(default_factory=StatsConfig)
    performance: PerformanceConfig = Field(default_factory=PerformanceConfig)
    paths: PathsConfig

    @field_validator('config_version')
    @classmethod
    def validate_version(cls, v: int) -> int:
        if v != CONFIG_VERSION:
            raise ValueError(f"unsupported config_version {v} (expected {CONFIG_VERSION})")
        return v


# ==============================================================================
# CONFIGURATION LOADING FUNCTIONS
# ==============================================================================

def _substitute_env_vars(data: Any) -> Any:
    """
    Recursively substitute environment variables in configuration data.

    Supports ${VAR_NAME} syntax only. If the environment variable
    is not set, keeps the original string for later error handling.

    Args:
        data: Configuration data (dict, list, str, or primitive)

    Returns:
        Data with environment variables substituted
    """
    if isinstance(data, dict):
        return {k: _substitute_env_vars(v) for k, v in data.items()}
    elif isinstance(data, list):
        return [_substitute_env_vars(item) for item in data]
    elif isinstance(data, str):
        # Only ${VAR} form here: bare $ is common in regex patterns and prompts
        pattern = re.compile(r'\$\{([A-Za-z_][A-Za-z0-9_]*)\}')

        def replace_var(match):
            var_name = match.group(1)
            return os.environ.get(var_name, match.group(0))

        return pattern.sub(replace_var, data)
    else:
        return data


def load_config(
    config_path: Optional[Path] = None,
    paths_config_path: Optional[Path] = None
) -> PipelineConfig:
    """
    Load and validate pipeline configuration from YAML files.

    This function:
    1. Loads the main configuration file (defaults to config/example_config.yml)
    2. Loads the paths configuration file (defaults to config/paths.example.yml)
    3. Substitutes environment variables using ${VAR_NAME} syntax
    4. Validates all configuration using Pydantic models
    5. Returns a fully validated PipelineConfig object

    Args:
        config_path: Path to main config file (optional, defaults to example_config.yml)
        paths_config_path: Path to paths config file (optional, defaults to paths.example.yml)

    Returns:
        Validated PipelineConfig object

    Raises:
        FileNotFoundError: If config files don't exist
        ValueError: If config validation fails (including invalid regex patterns)
        yaml.YAMLError: If YAML parsing fails
    """
    config_path = Path(config_path) if config_path is not None else Path("config/example_config.yml")
    if paths_config_path is None:
        paths_config_path = Path("config/paths.example.yml")
    else:
        paths_config_path = Path(paths_config_path)

    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")
    if not paths_config_path.exists():
        raise FileNotFoundError(f"Paths configuration file not found: {paths_config_path}")

    with open(config_path, 'r', encoding='utf-8') as f:
        config_data = yaml.safe_load(f) or {}

    with open(paths_config_path, 'r', encoding='utf-8') as f:
        paths_data = yaml.safe_load(f) or {}

    config_data = _substitute_env_vars(config_data)
    paths_data = _substitute_env_vars(paths_data)

    config_data['paths'] = paths_data

    # Pydantic will raise ValidationError if config is invalid
    try:
        pipeline_config = PipelineConfig(**config_data)
    except Exception as e:
        raise ValueError(f"Configuration validation failed: {e}") from e

    return pipeline_config


def config_hash(config: PipelineConfig) -> str:
    """
    SHA-256 over the canonical JSON form of the configuration.

    Recomputing it from the same config always yields the same digest, which
    is what artifact provenance headers are checked against.
    """
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
