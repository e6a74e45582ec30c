"""Error types shared across the pipeline."""


class PipelineError(Exception):
    """Fatal data or processing error (CLI exit code 1)."""


class UsageError(PipelineError):
    """Configuration or invocation error (CLI exit code 2)."""
