from pathlib import Path

from .errors import ConfigurationError


def parse_config_text(text: str) -> dict[str, str | None]:
    """
    Parses flat ``key = value`` lines.\n
    ``#`` starts a comment, blank values become None.
    """
    values = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigurationError(f'line {number}: expected "key = value", got {raw_line.strip()!r}')
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigurationError(f'line {number}: missing key')
        if key in values:
            raise ConfigurationError(f'line {number}: duplicate key {key!r}')
        values[key] = value or None
    return values


def read_config_file(path) -> dict[str, str | None]:
    return parse_config_text(Path(path).read_text(encoding='utf-8'))


def format_config(values: dict, header: str | None = None) -> str:
    lines = [f'# {line}' for line in header.splitlines()] if header else []
    for key, value in values.items():
        if value is None:
            value = ''
        elif isinstance(value, bool):
            value = 'true' if value else 'false'
        lines.append(f'{key} = {value}')
    return '\n'.join(lines) + '\n'


def write_config_file(path, values: dict, header: str | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_config(values, header), encoding='utf-8')
    return path
