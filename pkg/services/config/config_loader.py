# services/config/config_loader.py

import configparser
import dataclasses
import io
import logging
import re
from dataclasses import replace

from services.config.presets import get_preset
from services.config.session_config import SECTIONS, SessionConfig
from services.errors import ConfigError

logger = logging.getLogger('ConfigLoader')  # pylint: disable=no-member

SECTION_RE = re.compile(r'^\s*\[([^\]]+)\]')
KEY_RE = re.compile(r'^\s*([^#;=\s][^=:]*?)\s*[=:]')


def _line_index(text):
    """
    Maps (section, key) and section names to their 1-based line numbers.
    """
    index = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        match = SECTION_RE.match(line)
        if match:
            section = match.group(1).strip()
            index.setdefault((section, None), number)
            continue
        match = KEY_RE.match(line)
        if match and section is not None:
            index.setdefault((section, match.group(1).strip()), number)
    return index


def _section_types(config, section):
    target = config if section == 'session' else getattr(config, section)
    types = {f.name: f.type for f in dataclasses.fields(target)}
    if section == 'session':
        types = {name: t for name, t in types.items() if name not in SECTIONS}
        types['preset'] = str
    return types


def _coerce(raw, type_, field_name, line):
    kind = type_ if isinstance(type_, type) else {'int': int, 'float': float, 'str': str}.get(str(type_), str)
    try:
        if kind is int:
            try:
                return int(raw, 0)
            except ValueError:
                value = float(raw)
                if not value.is_integer():
                    raise
                return int(value)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(field_name, f"cannot parse '{raw}' as {kind.__name__}", line) from None


def _parse(text, source_name):
    parser = configparser.ConfigParser(
        inline_comment_prefixes=('#', ';'), interpolation=None, default_section='__defaults__',
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source_name)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"{e.section}.{e.option}", "duplicate key", e.lineno) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(e.section, "duplicate section", e.lineno) from None
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError('<file>', "key outside of any section", e.lineno) from None
    except configparser.ParsingError as e:
        line, _ = e.errors[0]
        raise ConfigError('<file>', "not a 'key = value' line", line) from None
    return parser


def loads_config(text, base=None, source_name='<config>'):
    """
    Parses INI text over `base` (or a preset named by `session.preset`, or the
    built-in defaults). Unknown sections and keys are errors.
    """
    parser = _parse(text, source_name)
    lines = _line_index(text)

    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(section, f"unknown section; expected one of {', '.join(SECTIONS)}", lines.get((section, None)))

    config = base if base is not None else SessionConfig()
    if parser.has_option('session', 'preset'):
        config = get_preset(parser.get('session', 'preset')).config

    values = {}
    for section in SECTIONS:
        if not parser.has_section(section):
            continue
        types = _section_types(config, section)
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in types:
                raise ConfigError(f"{section}.{key}", f"unknown key; expected one of {', '.join(sorted(types))}", line)
            if key == 'preset':
                continue
            values.setdefault(section, {})[key] = (_coerce(raw, types[key], f"{section}.{key}", line), line)

    try:
        return _apply(config, values)
    except ConfigError as e:
        if e.line is None:
            section, _, key = e.field.partition('.')
            line = values.get(section, {}).get(key, (None, None))[1]
            if line is not None:
                raise ConfigError(e.field, str(e).split(': ', 1)[-1], line) from None
        raise


def _apply(config, values):
    changes = {}
    for section, entries in values.items():
        plain = {key: value for key, (value, _) in entries.items()}
        if section == 'session':
            changes.update(plain)
        else:
            changes[section] = replace(getattr(config, section), **plain)
    return replace(config, **changes)


def load_config(path, base=None):
    with open(path, 'r', encoding='utf-8') as file_obj:
        text = file_obj.read()
    config = loads_config(text, base=base, source_name=str(path))
    logger.info(f"Loaded config from {path}")
    return config


def dumps_config(config):
    """
    The resolved config in the same INI format; loads_config reads it back unchanged.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section in SECTIONS:
        parser[section] = {key: repr(value) if isinstance(value, float) else str(value)
                           for key, value in config.section(section).items()}
    buffer = io.StringIO()
    parser.write(buffer)
    return buffer.getvalue()


def resolve_config(preset=None, config_path=None, seed=None, n_blocks=None):
    """
    Preset (or defaults), then the config file, then command-line overrides.
    """
    config = get_preset(preset).config if preset else SessionConfig()
    if config_path:
        config = load_config(config_path, base=config)
    overrides = {}
    if seed is not None:
        overrides['seed'] = seed
    if n_blocks is not None:
        overrides['n_blocks'] = n_blocks
    return replace(config, **overrides) if overrides else config
