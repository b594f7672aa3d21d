"""
Run manifests written next to every CLI output.
"""

import time
from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from . import __version__
from .empirical import CURVE_SCHEMA_VERSION
from .utils import load_json, prepare_output_path, save_json


class RunManifest(BaseModel):
    """Everything needed to re-run a subcommand and compare its outputs."""
    subcommand: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    inputs: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    seed: Optional[int] = None
    version: str = __version__
    curve_schema_version: str = CURVE_SCHEMA_VERSION
    started: str = Field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))
    wall_clock_seconds: float = 0.0

    @staticmethod
    def path_for(output: str) -> str:
        return f"{output}.manifest.json"

    def add_output(self, path: str) -> None:
        if path not in self.outputs:
            self.outputs.append(path)

    def write(self, output: str, started_at: Optional[float] = None) -> str:
        """
        Serialize the manifest next to `output`.

        Args:
            output: Primary output path of the run
            started_at: time.perf_counter() value at the start of the run

        Returns:
            Path of the manifest file
        """
        if started_at is not None:
            self.wall_clock_seconds = round(time.perf_counter() - started_at, 6)
        path = prepare_output_path(self.path_for(output))
        save_json(path, self.model_dump(mode="json"))
        return path

    @classmethod
    def read(cls, path: str) -> "RunManifest":
        return cls.model_validate(load_json(path))
