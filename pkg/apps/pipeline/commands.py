"""
Shared plumbing for the pipeline's management commands.
"""
from typing import Any, Dict

from django.core.management.base import BaseCommand, CommandError

from .runners import USAGE


class RunnerCommand(BaseCommand):
    """A management command that hands its flags to a runner and reports the result.

    Runner failures become ``CommandError``: exit status 2 for bad flags,
    1 for anything that went wrong while running.
    """

    requires_system_checks = []

    def add_geometry_arguments(self, parser):
        group = parser.add_argument_group('grid geometry')
        group.add_argument('--m-x', type=int, dest='m_x', help='Longitudinal cell count (default 36)')
        group.add_argument('--m-y', type=int, dest='m_y', help='Lateral cell count (default 21)')
        group.add_argument('--cell-length', type=float, dest='cell_length', help='Cell length in meters (default 5.0)')
        group.add_argument('--cell-width', type=float, dest='cell_width', help='Cell width in meters (default 0.875)')

    def usage_error(self, message: str) -> CommandError:
        return CommandError(message, returncode=2)

    def finish(self, result: Dict[str, Any]) -> Dict[str, Any]:
        metrics = result.get('metrics', {}) or {}
        if 'error' in metrics:
            if metrics.get('error_kind') == USAGE:
                raise self.usage_error(metrics['error'])
            raise CommandError(metrics['error'])
        for art in result.get('artifacts', []) or []:
            self.stdout.write(art['path'])
        summary = (result.get('evidence') or {}).get('summary') or (result.get('evidence') or {}).get('table')
        if summary:
            self.stdout.write(summary)
        return result
