"""Run configuration: built-in defaults, then a JSON document, then command-line flags."""
import json
from dataclasses import asdict, dataclass, field, fields

from utils.errors import DataParseError
from utils.geometry import make_domain

EXPONENT_CHOICES = ('auto', 'paper', 'dimensional')
BUDGET_CHOICES = ('smoke', 'desk', 'thorough')

DIMENSION_DEFAULTS = {
    2: {'L': 1.0, 'a': 0.7, 'b': 0.5, 'c': None},
    3: {'L': 1.0, 'a': 0.5, 'b': 0.5, 'c': 0.5},
}


@dataclass(frozen=True)
class RunConfig:
    dimension: int = 2
    L: float = 1.0
    a: float = 0.7
    b: float = 0.5
    c: float | None = None
    model: str | None = None
    model_params: dict = field(default_factory=dict)
    face_data: str | None = None
    budget: str = 'desk'
    seed: int = 0
    out: str | None = None
    bog_exponent: str = 'auto'

    def domain(self):
        return make_domain(self.L, self.a, self.b, self.c, self.dimension)

    def to_dict(self):
        return asdict(self)


FIELD_NAMES = {f.name for f in fields(RunConfig)}


def load_config_file(path):
    """
    Read a JSON configuration document.

    Raises:
        DataParseError: When the file cannot be read, is not a JSON object or has unknown keys
    """
    try:
        with open(path, encoding='utf-8') as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataParseError(f'cannot read config {path}: {exc}') from exc
    if not isinstance(data, dict):
        raise DataParseError(f'config {path} must be a JSON object')
    unknown = set(data) - FIELD_NAMES
    if unknown:
        raise DataParseError(f'unknown config keys: {sorted(unknown)}')
    return data


def parse_model_params(pairs):
    """Turn ``key=value`` strings into a dict, numbers converted to float."""
    params = {}
    for pair in pairs or ():
        if '=' not in pair:
            raise DataParseError(f'model parameter {pair!r} is not of the form key=value')
        key, value = pair.split('=', 1)
        try:
            params[key.strip()] = float(value)
        except ValueError:
            params[key.strip()] = value.strip()
    return params


def build_config(file_data=None, overrides=None):
    """
    Merge configuration sources, later ones winning: defaults, file, flags.

    Half-sides not given anywhere take the defaults of the chosen dimension.
    The domain is validated before returning.

    Args:
        file_data (dict, optional): Content of the JSON document
        overrides (dict, optional): Values from command-line flags; ``None`` entries are ignored

    Returns:
        RunConfig: The merged configuration

    Raises:
        OrderingViolation: When the half-sides are not admissible
        DataParseError: On values of the wrong type
    """
    merged = {}
    for source in (file_data or {}, overrides or {}):
        merged.update({k: v for k, v in source.items() if v is not None})
    dimension = int(merged.get('dimension', 2))
    if dimension not in DIMENSION_DEFAULTS:
        raise DataParseError(f'dimension must be 2 or 3, got {dimension}')
    for key, value in DIMENSION_DEFAULTS[dimension].items():
        merged.setdefault(key, value)
    merged['dimension'] = dimension
    if merged.get('budget', 'desk') not in BUDGET_CHOICES:
        raise DataParseError(f'unknown budget {merged["budget"]!r}')
    if merged.get('bog_exponent', 'auto') not in EXPONENT_CHOICES:
        raise DataParseError(f'unknown exponent setting {merged["bog_exponent"]!r}')
    try:
        for key in ('L', 'a', 'b', 'c'):
            if merged.get(key) is not None:
                merged[key] = float(merged[key])
        merged['seed'] = int(merged.get('seed', 0))
    except (TypeError, ValueError) as exc:
        raise DataParseError(f'invalid numeric config value: {exc}') from exc
    config = RunConfig(**{k: v for k, v in merged.items() if k in FIELD_NAMES})
    config.domain()
    return config
