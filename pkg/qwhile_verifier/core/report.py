"""
Report - Machine-readable run report combining verdicts and numeric sections.
"""

from typing import Any, Dict, List, Optional, Sequence
import datetime
import json
import logging
import os

from ..config.tolerances import Settings, resolve
from .verdict import Verdict

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class RunReport:
    """
    Report for one CLI command: command echo, settings, verdicts, sections.
    Reports are deterministic given inputs and seed; wall time is only
    included when requested.
    """

    def __init__(self, command: Sequence[str], settings: Optional[Settings] = None,
                 include_timing: bool = False):
        """
        Initialize an empty report.

        Args:
            command: The command line (or a description) that produced the report
            settings: Effective tolerances, budgets and seed
            include_timing: Whether to record wall time
        """
        self.command = list(command)
        self.settings = resolve(settings)
        self.include_timing = include_timing
        self.verdicts: List[Verdict] = []
        self.sections: Dict[str, Any] = {}
        self.notes: List[str] = []
        self._started = datetime.datetime.now()
        self.wall_time: Optional[float] = None

    def add_verdict(self, verdict: Verdict) -> Verdict:
        self.verdicts.append(verdict)
        return verdict

    def extend(self, verdicts: Sequence[Verdict]):
        for verdict in verdicts:
            self.add_verdict(verdict)

    def add_note(self, text: str):
        """One line of context shown under the verdicts of the text summary."""
        self.notes.append(text)

    def add_section(self, name: str, data: Any):
        """
        Attach a named block of JSON-serializable data.

        Args:
            name: Section name
            data: Section content
        """
        if name in self.sections:
            raise ValueError(f"Section '{name}' already present in report")
        self.sections[name] = data

    @property
    def holds(self) -> bool:
        return all(v.holds for v in self.verdicts)

    def finish(self):
        self.wall_time = (datetime.datetime.now() - self._started).total_seconds()

    def to_dict(self) -> Dict[str, Any]:
        ordered = sorted(self.verdicts, key=lambda v: (v.provenance, v.name))
        data = {
            'schema': SCHEMA_VERSION,
            'command': self.command,
            'tolerances': dict(sorted(self.settings.tolerances.items())),
            'budgets': dict(sorted(self.settings.budgets.items())),
            'seed': self.settings.seed,
            'holds': self.holds,
            'verdicts': [v.to_dict() for v in ordered],
            'sections': self.sections,
        }
        if self.notes:
            data['notes'] = self.notes
        if self.include_timing and self.wall_time is not None:
            data['wall_time'] = self.wall_time
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"command: {' '.join(self.command)}"]
        for verdict in sorted(self.verdicts, key=lambda v: (v.provenance, v.name)):
            status = "ok  " if verdict.holds else "FAIL"
            lines.append(f"  [{status}] {verdict.provenance}  margin={verdict.margin:.3e}")
        lines.extend(f"  note: {note}" for note in self.notes)
        lines.append(f"overall: {'holds' if self.holds else 'fails'} "
                     f"({sum(v.holds for v in self.verdicts)}/{len(self.verdicts)} verdicts hold)")
        return "\n".join(lines)

    def save(self, output_dir: str, run_id: Optional[str] = None) -> str:
        """
        Save the report as JSON.

        Args:
            output_dir: Directory to save results
            run_id: Unique identifier (default: timestamp)

        Returns:
            Path of the written file
        """
        os.makedirs(output_dir, exist_ok=True)
        if run_id is None:
            run_id = self._started.strftime("%Y%m%d_%H%M%S")
        name = (self.command[0] if self.command else "report").replace(' ', '_')
        filepath = os.path.join(output_dir, f"{name}_{run_id}.json")
        with open(filepath, 'w') as f:
            f.write(self.to_json())
        logger.info("Report saved to %s", filepath)
        return filepath
