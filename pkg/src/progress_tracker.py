"""
Real-time progress tracking for concurrent model audits.
"""

import threading
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, Optional

from rich.table import Table

from .validity import CHECK_EXCURSION, CHECK_MATHERON, CHECK_NAMES, CHECK_TRIANGLE, ValidityCheck


@dataclass
class CheckOutcome:
    """Verdict and margin of one finished check."""
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass
class ModelProgress:
    """Track progress for a single model."""
    model_id: str
    label: str
    current_step: int
    total_steps: int
    status: str  # 'running', 'completed', 'failed'
    error: Optional[str] = None
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None
    outcomes: Dict[str, CheckOutcome] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == 'completed' and all(o.passed for o in self.outcomes.values())


class ProgressTracker:
    """Thread-safe progress table for the validate subcommand."""

    CHECK_STEPS = list(CHECK_NAMES)
    STEP_LABELS = {
        CHECK_TRIANGLE: "Triangle inequality",
        CHECK_MATHERON: "Matheron search",
        CHECK_EXCURSION: "Excursion eligibility",
    }

    def __init__(self, total_models: int):
        """
        Initialize the progress tracker.

        Args:
            total_models: Total number of models to audit
        """
        self.total_models = total_models
        self.models: Dict[str, ModelProgress] = {}
        self._lock = threading.Lock()

    def add_model(self, model_id: str, label: str):
        """Register a model for tracking."""
        with self._lock:
            self.models[model_id] = ModelProgress(
                model_id=model_id,
                label=label,
                current_step=0,
                total_steps=len(self.CHECK_STEPS),
                status='running',
                start_time=datetime.now(),
            )

    def record_check(self, model_id: str, check: ValidityCheck):
        """
        Store a finished check and advance the model to the next step.

        Args:
            model_id: Model identifier
            check: Result of the check
        """
        with self._lock:
            if model_id not in self.models:
                return
            progress = self.models[model_id]
            progress.outcomes[check.name] = CheckOutcome(
                name=check.name, passed=check.passed, margin=check.margin, detail=check.detail
            )
            if check.name in self.CHECK_STEPS:
                progress.current_step = max(progress.current_step, self.CHECK_STEPS.index(check.name) + 1)

    def mark_completed(self, model_id: str):
        with self._lock:
            if model_id not in self.models:
                return
            progress = self.models[model_id]
            progress.status = 'completed'
            progress.end_time = datetime.now()
            progress.current_step = progress.total_steps

    def mark_failed(self, model_id: str, error_message: str):
        """Mark an audit that raised (not a failing verdict)."""
        with self._lock:
            if model_id not in self.models:
                return
            progress = self.models[model_id]
            progress.status = 'failed'
            progress.error = error_message
            progress.end_time = datetime.now()

    @staticmethod
    def _verdict_cell(outcome: Optional[CheckOutcome]) -> str:
        if outcome is None:
            return "[dim]…[/dim]"
        if outcome.passed:
            return f"[green]✓ pass[/green] ({outcome.margin:.2e})"
        return f"[red]✗ fail[/red] ({outcome.margin:.2e})"

    def generate_table(self) -> Table:
        """
        Build the verdict table (rows = models, columns = checks).
        Reads a snapshot taken under the lock so concurrent updates never tear a row.
        """
        with self._lock:
            snapshot = [
                (p.label, p.current_step, p.total_steps, p.status, p.error, dict(p.outcomes))
                for p in self.models.values()
            ]

        table = Table(title="Transiogram Model Validity", show_header=True, header_style="bold magenta")
        table.add_column("Model", style="cyan", no_wrap=True)
        table.add_column("Progress", width=18)
        for step in self.CHECK_STEPS:
            table.add_column(self.STEP_LABELS[step], no_wrap=True)
        table.add_column("Verdict", no_wrap=True)

        for label, current, total, status, error, outcomes in snapshot:
            pct = (current / total) * 100
            filled = int(pct / 10)
            bar = f"[{'█' * filled}{' ' * (10 - filled)}] {pct:.0f}%"
            cells = [self._verdict_cell(outcomes.get(step)) for step in self.CHECK_STEPS]

            if status == 'failed':
                verdict = f"[red]✗ error[/red] {error or ''}"[:60]
            elif status == 'running':
                verdict = "[yellow]⟳ running[/yellow]"
            elif all(o.passed for o in outcomes.values()):
                verdict = "[green]✓ PASS[/green]"
            else:
                verdict = "[red]✗ FAIL[/red]"
            table.add_row(label, bar, *cells, verdict)

        return table

    def get_summary(self) -> str:
        with self._lock:
            snapshot = list(self.models.values())

        passed = sum(1 for p in snapshot if p.passed)
        errored = sum(1 for p in snapshot if p.status == 'failed')
        running = sum(1 for p in snapshot if p.status == 'running')
        failed = len(snapshot) - passed - errored - running
        return f"\nTotal: {self.total_models} | ✓ {passed} pass | ✗ {failed} fail | ⚠️  {errored} error | ⟳ {running}"

    def generate_detailed_report(self) -> str:
        """Per-model list of failing checks with their margins."""
        lines = ["=" * 80, "VALIDITY FAILURE REPORT", "=" * 80, ""]

        with self._lock:
            snapshot = list(self.models.values())

        failing = [p for p in snapshot if not p.passed]
        if not failing:
            lines.append("All models passed every check.")
            lines.append("")
        else:
            for p in failing:
                lines.append(f"Model: {p.label}")
                if p.error:
                    lines.append(f"  Error: {p.error}")
                for name in self.CHECK_STEPS:
                    outcome = p.outcomes.get(name)
                    if outcome is not None and not outcome.passed:
                        extra = f" [{outcome.detail}]" if outcome.detail else ""
                        lines.append(f"  - {self.STEP_LABELS[name]}: margin {outcome.margin:.6e}{extra}")
                lines.append("")

        lines.append("=" * 80)
        return "\n".join(lines)
