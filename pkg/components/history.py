from datetime import datetime

from components.results import STATUS_ICONS
from utils.database import get_run_history


def format_run_history(history):
    """
    Text listing of recorded runs, newest first.

    Args:
        history (list): Records as returned by ``get_run_history``

    Returns:
        str: One block per run
    """
    if not history:
        return 'No recorded runs.'
    lines = [f'Found {len(history)} recorded run(s).']
    for record in history:
        created_at = record.get('created_at') or ''
        try:
            formatted_date = datetime.fromisoformat(created_at).strftime('%Y-%m-%d %H:%M:%S')
        except ValueError:
            formatted_date = created_at or 'unknown date'
        status = record.get('status') or 'Unknown'
        icon = STATUS_ICONS.get(status, '[?]')
        model = record.get('model') or '-'
        lines.append(f'{icon} #{record["id"]} {record["command"]} {formatted_date} '
                     f'model={model} d={record.get("dimension")} status={status}')
        config = record.get('config') or {}
        if config:
            domain = ', '.join(f'{k}={config[k]}' for k in ('L', 'a', 'b', 'c') if config.get(k) is not None)
            lines.append(f'    domain {domain}; budget {config.get("budget")}; seed {config.get("seed")}')
    return '\n'.join(lines)


def render_run_history(command=None, limit=20, url=None):
    """Fetch and format the recorded runs."""
    return format_run_history(get_run_history(command, limit, url))
