"""
Environment verification for the transiogram toolkit.
Checks interpreter, packages, configuration and templates before a run.
"""

import importlib
import os
import sys
from typing import List, Optional, Tuple

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .errors import ConfigError
from .settings import load_settings
from .template_renderer import DEFAULT_TEMPLATES_DIR

KEY_PACKAGES = [
    ("numpy", "numpy"),
    ("scipy", "scipy"),
    ("pandas", "pandas"),
    ("pydantic", "pydantic"),
    ("PyYAML", "yaml"),
    ("Jinja2", "jinja2"),
    ("rich", "rich"),
    ("python-dotenv", "dotenv"),
    ("click", "click"),
]

REQUIRED_TEMPLATES = ["validity_report.md.j2", "simulation_sidecar.txt.j2"]


class SystemRequirements:
    """Verify system requirements and dependencies."""

    def __init__(self, config_path: Optional[str] = None, templates_dir: Optional[str] = None,
                 output_dir: Optional[str] = None, console: Optional[Console] = None):
        """
        Initialize system requirements checker.

        Args:
            config_path: config.json to parse (defaults to the usual lookup)
            templates_dir: Jinja2 template directory
            output_dir: Directory outputs are written to
            console: Console for the results table
        """
        self.console = console or Console()
        self.config_path = config_path
        self.templates_dir = templates_dir or DEFAULT_TEMPLATES_DIR
        self.output_dir = output_dir

        self.checks_passed: List[Tuple[str, str]] = []
        self.checks_failed: List[Tuple[str, str, str]] = []  # (name, error, fix)
        self.checks_warning: List[Tuple[str, str, str]] = []  # (name, warning, fix)

    def check_python_version(self) -> bool:
        """Check if Python version is 3.9 or higher."""
        version = sys.version_info
        if (version.major, version.minor) >= (3, 9):
            self.checks_passed.append(("Python Version", f"{version.major}.{version.minor}.{version.micro}"))
            return True
        self.checks_failed.append((
            "Python Version",
            f"Python {version.major}.{version.minor} found, but 3.9+ required",
            "Install Python 3.9 or higher",
        ))
        return False

    def check_python_packages(self) -> bool:
        """Check that the key packages import."""
        missing = []
        for name, module in KEY_PACKAGES:
            try:
                importlib.import_module(module)
            except ImportError:
                missing.append(name)

        if missing:
            self.checks_failed.append((
                "Python Packages",
                f"Missing packages: {', '.join(missing)}",
                "Run: pip install -r requirements.txt",
            ))
            return False
        self.checks_passed.append(("Python Packages", f"{len(KEY_PACKAGES)} key packages verified"))
        return True

    def check_config(self) -> bool:
        """Parse config.json (or $TRANSIOGRAM_CONFIG) into Settings."""
        try:
            settings = load_settings(self.config_path)
        except ConfigError as e:
            self.checks_failed.append(("Configuration", str(e), "Fix config.json or unset TRANSIOGRAM_CONFIG"))
            return False
        if self.output_dir is None:
            self.output_dir = settings.output.directory
        self.checks_passed.append(("Configuration", f"threads={settings.threads}, log level {settings.logging.level}"))
        return True

    def check_templates(self) -> bool:
        """Report templates must exist for --report and simulate sidecars."""
        missing = [t for t in REQUIRED_TEMPLATES if not os.path.exists(os.path.join(self.templates_dir, t))]
        if missing:
            self.checks_failed.append((
                "Templates",
                f"Missing templates: {', '.join(missing)}",
                f"Restore them under {self.templates_dir}",
            ))
            return False
        self.checks_passed.append(("Templates", f"{len(REQUIRED_TEMPLATES)} templates found"))
        return True

    def check_output_directory(self) -> bool:
        """Warn when the output directory cannot be created or written."""
        path = self.output_dir or "output"
        try:
            os.makedirs(path, exist_ok=True)
            writable = os.access(path, os.W_OK)
        except OSError as e:
            writable = False
            path = f"{path} ({e})"
        if not writable:
            self.checks_warning.append(("Output Directory", f"{path} is not writable", "Pass --output to another location"))
            return False
        self.checks_passed.append(("Output Directory", os.path.abspath(path)))
        return True

    def check_numerics(self) -> bool:
        """Smoke test: the indicator variogram of an uncorrelated median split is 1/4."""
        from .validity import indicator_variogram_from_correlogram

        value = indicator_variogram_from_correlogram(0.0, 0.5)
        analytic = indicator_variogram_from_correlogram(0.0, 0.0)
        if abs(analytic - 0.25) > 1e-12 or not 0.0 < value < 0.25:
            self.checks_failed.append((
                "Numerics",
                f"indicator variogram smoke test returned {analytic!r}, {value!r}",
                "Reinstall numpy/scipy",
            ))
            return False
        self.checks_passed.append(("Numerics", "quadrature and root finding available"))
        return True

    def run_all_checks(self) -> bool:
        """
        Run all system requirement checks.

        Returns:
            True if all critical checks pass, False otherwise
        """
        self.console.print("\n[bold cyan]System Requirements Verification[/bold cyan]")
        self.console.print("=" * 60 + "\n")

        checks = [
            ("Python Version", self.check_python_version),
            ("Python Packages", self.check_python_packages),
            ("Configuration", self.check_config),
            ("Templates", self.check_templates),
            ("Output Directory", self.check_output_directory),
            ("Numerics", self.check_numerics),
        ]

        for check_name, check_func in checks:
            try:
                check_func()
            except Exception as e:
                self.checks_failed.append((
                    check_name,
                    f"Check failed with error: {str(e)}",
                    "Review the error and ensure all dependencies are properly installed",
                ))

        self._display_results()

        if self.checks_failed:
            return False
        if self.checks_warning:
            self.console.print("\n[yellow]⚠️  Warnings detected.[/yellow]")
        else:
            self.console.print("\n[green]✓ All system requirements verified![/green]")
        return True

    def _display_results(self) -> None:
        """Display check results in a formatted table."""
        table = Table(title="Verification Results", show_header=True, header_style="bold magenta")
        table.add_column("Component", style="cyan", width=20)
        table.add_column("Status", width=10)
        table.add_column("Details", width=50)

        for name, details in self.checks_passed:
            table.add_row(name, "[green]✓ PASS[/green]", details)
        for name, warning, _ in self.checks_warning:
            table.add_row(name, "[yellow]⚠ WARN[/yellow]", warning)
        for name, error, _ in self.checks_failed:
            table.add_row(name, "[red]✗ FAIL[/red]", error)

        self.console.print(table)

        if self.checks_failed:
            self.console.print("\n[bold red]✗ Critical Issues Found[/bold red]")
            for i, (name, error, fix) in enumerate(self.checks_failed, 1):
                self.console.print(Panel(
                    f"[red]Error:[/red] {error}\n\n[cyan]Fix:[/cyan]\n{fix}",
                    title=f"{i}. {name}",
                    border_style="red",
                ))
