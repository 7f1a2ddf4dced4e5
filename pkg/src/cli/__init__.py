"""
Command-line interface.

One entry point, ``python -m src.cli.pipeline``, with a subcommand per stage:
ingest, segment, index, query-gen, extract, label-assist, eval,
bench-hallucination and stats.
"""
