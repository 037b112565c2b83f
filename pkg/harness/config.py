"""Harness environment and experiment configuration."""

import configparser
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from gradflow.config import config as profiles
from gradflow.errors import ConfigError

load_dotenv()

KINDS = ('tv-dirichlet', 'tv-neumann', 'wflow', 'smooth-ls', 'certify-kl', 'rates-table', 'stability')

REQUIRED_KEYS: Dict[str, tuple] = {
    'tv-dirichlet': ('instance.preset', 'solver.horizon'),
    'tv-neumann': ('instance.preset', 'solver.horizon'),
    'wflow': ('instance.preset', 'solver.tau', 'solver.horizon'),
    'smooth-ls': ('instance.preset',),
    'certify-kl': ('instance.cloud',),
    'rates-table': ('instance.p', 'instance.alpha', 'instance.c', 'instance.e0'),
    'stability': ('instance.preset', 'solver.eps'),
}

_GROUPS = ('instance', 'solver', 'checks')
_PLAIN_KEYS = ('kind', 'seed', 'output_dir', 'profile')


class HarnessConfig:
    """Environment-driven settings of the batch runner."""

    WORKERS: int = int(os.environ.get('GRADFLOW_WORKERS') or os.cpu_count() or 1)
    OUTPUT_DIR: str = os.environ.get('GRADFLOW_OUTPUT_DIR') or 'artifacts'
    PROFILE: str = os.environ.get('GRADFLOW_PROFILE') or 'default'

    @classmethod
    def get_workers(cls) -> int:
        """Worker cap, re-read from GRADFLOW_WORKERS."""
        raw = os.environ.get('GRADFLOW_WORKERS')
        if not raw:
            return max(1, cls.WORKERS)
        try:
            workers = int(raw)
        except ValueError:
            raise ConfigError(f"GRADFLOW_WORKERS must be an integer, got '{raw}'") from None
        if workers < 1:
            raise ConfigError(f"GRADFLOW_WORKERS must be at least 1, got {workers}")
        return workers

    @classmethod
    def get_output_dir(cls) -> Path:
        return Path(os.environ.get('GRADFLOW_OUTPUT_DIR') or cls.OUTPUT_DIR)

    @classmethod
    def get_profile(cls) -> str:
        return os.environ.get('GRADFLOW_PROFILE') or cls.PROFILE


def parse_value(text: str) -> Any:
    """
    Parse one INI value.

    true/false become booleans, integers and floats are converted, comma
    lists are parsed element-wise, anything else stays a string.
    """
    text = text.strip()
    if ',' in text:
        return [parse_value(part) for part in text.split(',') if part.strip()]
    lowered = text.lower()
    if lowered in ('true', 'false'):
        return lowered == 'true'
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


class ExperimentConfig(BaseModel):
    """One validated experiment section."""

    name: str
    kind: str
    seed: int = 0
    output_dir: Optional[str] = None
    profile: Optional[str] = None
    instance: Dict[str, Any] = Field(default_factory=dict)
    solver: Dict[str, Any] = Field(default_factory=dict)
    checks: Dict[str, Any] = Field(default_factory=dict)

    @field_validator('kind')
    @classmethod
    def validate_kind(cls, v: str) -> str:
        if v not in KINDS:
            raise ValueError(f"Unknown experiment kind '{v}'. Must be one of: {', '.join(KINDS)}")
        return v

    @field_validator('profile')
    @classmethod
    def validate_profile(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in profiles:
            raise ValueError(f"Unknown profile '{v}'. Must be one of: {', '.join(sorted(profiles))}")
        return v

    @model_validator(mode='after')
    def validate_keys(self) -> 'ExperimentConfig':
        from harness.presets import known_presets

        for key in REQUIRED_KEYS[self.kind]:
            group, field = key.split('.', 1)
            if field not in getattr(self, group):
                raise ValueError(f"Missing required key '{key}' for kind '{self.kind}'")
        preset = self.instance.get('preset')
        if preset is not None and preset not in known_presets(self.kind):
            raise ValueError(
                f"Unknown preset '{preset}' for kind '{self.kind}'. "
                f"Must be one of: {', '.join(sorted(known_presets(self.kind)))}"
            )
        for key in ('tau', 'horizon'):
            value = self.solver.get(key)
            if value is not None and not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"solver.{key} must be a positive number, got {value!r}")
        return self

    def get(self, key: str, default: Any = None) -> Any:
        """Dotted lookup such as 'solver.tau'."""
        group, field = key.split('.', 1)
        return getattr(self, group).get(field, default)


def _section_to_config(name: str, section: configparser.SectionProxy) -> ExperimentConfig:
    data: Dict[str, Any] = {'name': name, 'instance': {}, 'solver': {}, 'checks': {}}
    for key, raw in section.items():
        if '.' in key:
            group, field = key.split('.', 1)
            if group not in _GROUPS:
                raise ConfigError(f"[{name}] unknown key group '{group}' in '{key}'")
            data[group][field] = parse_value(raw)
        elif key in _PLAIN_KEYS:
            data[key] = parse_value(raw) if key == 'seed' else raw.strip()
        else:
            raise ConfigError(f"[{name}] unknown key '{key}'")
    try:
        return ExperimentConfig(**data)
    except ValidationError as exc:
        messages = '; '.join(err['msg'] for err in exc.errors())
        raise ConfigError(f"[{name}] {messages}") from None


def load_experiments(source: Union[str, Path], text: bool = False) -> List[ExperimentConfig]:
    """
    Parse an INI experiment file (or INI text) into validated configs.

    Args:
        source: Path to the file, or the INI text itself when text=True
        text: Treat source as INI text

    Returns:
        One ExperimentConfig per section, in file order

    Raises:
        ConfigError: On unreadable files, syntax errors or invalid sections
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        if text:
            parser.read_string(str(source))
        else:
            path = Path(source)
            if not path.is_file():
                raise ConfigError(f"Config file not found: {path}")
            parser.read(path, encoding='utf-8')
    except configparser.Error as exc:
        raise ConfigError(f"Cannot parse experiment config: {exc}") from None
    sections = parser.sections()
    if not sections:
        raise ConfigError("Experiment config defines no sections")
    return [_section_to_config(name, parser[name]) for name in sections]
