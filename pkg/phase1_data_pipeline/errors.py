"""
Data pipeline exceptions.
"""

from __future__ import annotations


class ManifestError(ValueError):
    """Manifest failed to parse or validate. `violations` holds (trial_id, message) pairs."""

    def __init__(self, message: str, violations: list[tuple[str, str]] | None = None):
        self.violations = list(violations or [])
        if self.violations:
            shown = "; ".join(f"{tid}: {msg}" for tid, msg in self.violations[:10])
            more = f" (+{len(self.violations) - 10} more)" if len(self.violations) > 10 else ""
            message = f"{message}: {shown}{more}"
        super().__init__(message)


class SceneGenerationError(RuntimeError):
    """Synthetic scene constraints could not be satisfied within the retry budget."""
