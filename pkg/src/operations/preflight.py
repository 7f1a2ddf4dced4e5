"""
Preflight checks run before every CLI command.

Validates what a command needs before any stage starts: a supported Python
and config version, the input files the command reads, a writable output
directory, credentials for remote backends and fixture files for mock ones.

Critical failures block the command; non-critical ones are reported only.

Usage:
    from src.operations.preflight import run_preflight_checks

    passed, results = run_preflight_checks(config, command="extract", needs_llm=True)
    if not passed:
        print_preflight_results(results)
        sys.exit(1)
"""

import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from src.core.config import CONFIG_VERSION, EMBED_API_KEY_ENV, LLM_API_KEY_ENV, PipelineConfig
from src.core.logger import get_logger, log_preflight_check

logger = get_logger(__name__)

# (required, optional) inputs per command; optional inputs only need to exist when configured
COMMAND_INPUTS: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    "ingest": (("corpus",), ()),
    "segment": (("corpus",), ()),
    "index": (("corpus",), ()),
    "query-gen": (("corpus",), ("exemplars",)),
    "extract": (("corpus",), ("index", "gold")),
    "label-assist": ((), ()),
    "eval": (("gold",), ("corpus", "index")),
    "bench-hallucination": ((), ("gold", "negatives")),
    "stats": (("corpus",), ("cpi",)),
}

# ==============================================================================
# PREFLIGHT CHECK RESULT DATA STRUCTURES
# ==============================================================================

@dataclass
class PreflightCheckResult:
    """
    Result of an individual preflight check.

    Attributes:
        check_name: Name of the check
        passed: Whether the check passed
        message: Human-readable description of the result
        details: Additional structured details about the check
        critical: Whether failure of this check should block execution
    """
    check_name: str
    passed: bool
    message: str
    details: Dict[str, Any]
    critical: bool = True


def _result(check_name: str, passed: bool, message: str, issues: List[str],
            critical: bool = True, **details: Any) -> PreflightCheckResult:
    details["issues"] = issues
    result = PreflightCheckResult(check_name, passed, message, details, critical)
    log_preflight_check(logger, check_name, passed, message)
    return result

# ==============================================================================
# INDIVIDUAL PREFLIGHT CHECK FUNCTIONS
# ==============================================================================

def check_python_version(config: PipelineConfig) -> PreflightCheckResult:
    current = sys.version_info
    min_version_str = config.environment.min_python_version
    major, minor = (int(part) for part in min_version_str.split(".")[:2])
    current_str = f"{current.major}.{current.minor}.{current.micro}"
    passed = (current.major, current.minor) >= (major, minor)
    return _result(
        "python_version", passed, f"Python {current_str} (minimum: {min_version_str})", [],
        current_version=current_str, min_version=min_version_str,
    )


def check_config_version(config: PipelineConfig) -> PreflightCheckResult:
    passed = config.config_version == CONFIG_VERSION
    issues = [] if passed else [f"config_version {config.config_version}, expected {CONFIG_VERSION}"]
    return _result("config_version", passed, f"config_version {config.config_version}", issues)


def check_inputs_exist(config: PipelineConfig, command: Optional[str]) -> PreflightCheckResult:
    """
    Verify the inputs ``command`` reads exist.

    Required inputs must be configured and exist; optional inputs only need
    to exist when configured.
    """
    issues = []
    required, optional = COMMAND_INPUTS.get(command or "", ((), ()))
    checked = 0
    for name in required + optional:
        value = getattr(config.paths, name)
        if value is None:
            if name in required:
                issues.append(f"paths.{name} is required by '{command}' but not configured")
            continue
        checked += 1
        if not Path(value).exists():
            issues.append(f"paths.{name} does not exist: {value}")
    passed = not issues
    return _result(
        "inputs_exist", passed,
        f"{checked - len(issues)}/{checked} configured inputs found" if checked else "no inputs to check",
        issues, command=command,
    )


def check_output_writable(config: PipelineConfig) -> PreflightCheckResult:
    output_dir = Path(config.paths.output_dir)
    issues = []
    if output_dir.exists():
        if not output_dir.is_dir():
            issues.append(f"output_dir is not a directory: {output_dir}")
        elif not os.access(output_dir, os.W_OK):
            issues.append(f"output_dir is not writable: {output_dir}")
    else:
        parent = next((p for p in output_dir.absolute().parents if p.exists()), None)
        if parent is None or not os.access(parent, os.W_OK):
            issues.append(f"cannot create output_dir {output_dir}")
    passed = not issues
    return _result("output_writable", passed,
                   f"Output directory {output_dir} usable" if passed else f"{len(issues)} issues found",
                   issues, output_dir=str(output_dir))


def check_credentials(config: PipelineConfig, needs_llm: bool, needs_embedder: bool) -> PreflightCheckResult:
    """
    Remote backends without an API key in the environment.

    Non-critical: local OpenAI-compatible servers usually need no key.
    """
    issues = []
    if needs_llm and config.llm.backend == "http" and not os.environ.get(LLM_API_KEY_ENV):
        issues.append(f"{LLM_API_KEY_ENV} not set for the http llm backend")
    if needs_embedder and config.retrieval.embedder.backend == "remote" and not os.environ.get(EMBED_API_KEY_ENV):
        issues.append(f"{EMBED_API_KEY_ENV} not set for the remote embedder")
    passed = not issues
    return _result("credentials", passed,
                   "Credentials present for remote backends" if passed else f"{len(issues)} credentials missing",
                   issues, critical=False)


def check_mock_fixtures(config: PipelineConfig, needs_llm: bool) -> PreflightCheckResult:
    issues = []
    if needs_llm and config.llm.backend == "mock":
        fixtures = config.paths.llm_fixtures
        if not fixtures:
            issues.append("mock llm backend needs paths.llm_fixtures")
        elif not Path(fixtures).exists():
            issues.append(f"mock llm fixtures not found: {fixtures}")
    passed = not issues
    return _result("mock_fixtures", passed,
                   "Mock fixtures available" if passed else "Mock fixtures missing", issues)

# ==============================================================================
# MAIN PREFLIGHT RUNNER
# ==============================================================================

def run_preflight_checks(
    config: PipelineConfig,
    command: Optional[str] = None,
    needs_llm: bool = False,
    needs_embedder: bool = False,
) -> Tuple[bool, List[PreflightCheckResult]]:
    """
    Run every preflight check for ``command``.

    Returns:
        Tuple of (all_critical_passed, list_of_all_results)
    """
    results = [
        check_python_version(config),
        check_config_version(config),
        check_inputs_exist(config, command),
        check_output_writable(config),
        check_credentials(config, needs_llm, needs_embedder),
        check_mock_fixtures(config, needs_llm),
    ]
    all_critical_passed = all(r.passed for r in results if r.critical)
    passed_checks = sum(1 for r in results if r.passed)

    logger.log(
        logging.INFO if all_critical_passed else logging.ERROR,
        f"Preflight checks complete: {passed_checks}/{len(results)} passed",
        extra={
            "stage": "preflight",
            "operation": "summary",
            "metadata": {
                "command": command,
                "total_checks": len(results),
                "passed": passed_checks,
                "overall_passed": all_critical_passed,
            }
        }
    )
    return all_critical_passed, results


def print_preflight_results(results: List[PreflightCheckResult]) -> None:
    """Print human-readable preflight results to the console."""
    print("\n" + "=" * 70)
    print("PREFLIGHT CHECK RESULTS")
    print("=" * 70)

    for result in results:
        status_symbol = "✓" if result.passed else "✗"
        status_text = "PASS" if result.passed else "FAIL"
        critical_marker = " [CRITICAL]" if result.critical else ""
        print(f"\n{status_symbol} {result.check_name.upper()}: {status_text}{critical_marker}")
        print(f"  {result.message}")
        if not result.passed:
            for issue in result.details.get("issues", []):
                print(f"    - {issue}")

    print("\n" + "=" * 70)
    critical_failed = sum(1 for r in results if r.critical and not r.passed)
    if critical_failed > 0:
        print(f"❌ {critical_failed} CRITICAL CHECKS FAILED - CANNOT PROCEED")
    else:
        print("✅ ALL CRITICAL CHECKS PASSED")
    print("=" * 70 + "\n")
