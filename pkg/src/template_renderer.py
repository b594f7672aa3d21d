"""
Template rendering for human-readable run reports (Markdown validity report and the
plain-text block of a simulation sidecar) using Jinja2.
"""

import os
from datetime import datetime
from typing import Any, Dict, List, Optional, Union

from jinja2 import Environment, FileSystemLoader, StrictUndefined

DEFAULT_TEMPLATES_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "templates")


class TemplateRenderer:
    """Handles rendering of the report and sidecar templates."""

    def __init__(self, templates_dir: Optional[str] = None):
        """
        Initialize the template renderer.

        Args:
            templates_dir: Directory containing Jinja2 templates (defaults to ./templates
                next to the src package)
        """
        self.templates_dir = templates_dir or DEFAULT_TEMPLATES_DIR
        self.env = Environment(
            loader=FileSystemLoader(self.templates_dir),
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
            undefined=StrictUndefined,
            autoescape=False,  # Markdown and plain text, not HTML
        )

        self.env.filters['markdown_escape'] = self.markdown_escape
        self.env.filters['format_margin'] = self.format_margin
        self.env.filters['format_points'] = self.format_points

    @staticmethod
    def markdown_escape(text: Union[str, Any]) -> str:
        """Escape characters that break Markdown table cells."""
        if not isinstance(text, str):
            text = str(text)
        return text.replace('\\', '\\\\').replace('|', '\\|').replace('\n', ' ')

    @staticmethod
    def format_margin(value: Any) -> str:
        """Signed scientific notation for margins and eigenvalues."""
        try:
            return f"{float(value):+.6e}"
        except (TypeError, ValueError):
            return str(value)

    @staticmethod
    def format_points(points: Optional[List[List[float]]], limit: int = 12) -> str:
        """
        Compact coordinate list for witnesses, truncated after `limit` points.

        Examples:
            >>> TemplateRenderer.format_points([[0.0, 0.0], [0.5, 0.0]])
            '(0, 0) (0.5, 0)'
        """
        if not points:
            return ""
        shown = " ".join(f"({x:.6g}, {y:.6g})" for x, y in points[:limit])
        if len(points) > limit:
            shown += f" … (+{len(points) - limit} more)"
        return shown

    def render_validity_report(self, reports: List[Dict[str, Any]], parameters: Dict[str, Any]) -> str:
        """
        Render the Markdown validity report.

        Args:
            reports: ValidityReport.to_dict() for every audited model
            parameters: Search parameters recorded in the run manifest

        Returns:
            Markdown document
        """
        template = self.env.get_template('validity_report.md.j2')
        return template.render(
            reports=reports,
            parameters=parameters,
            generated=datetime.now().isoformat(timespec='seconds'),
            passed=sum(1 for r in reports if r['passed']),
        )

    def render_simulation_sidecar(self, metadata: Dict[str, Any]) -> str:
        """
        Render the plain-text parameter block stored next to a simulated grid.

        Args:
            metadata: Simulation parameters and realised proportions
        """
        template = self.env.get_template('simulation_sidecar.txt.j2')
        return template.render(**metadata)
