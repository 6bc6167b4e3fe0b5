#!/usr/bin/env python3

"""
Experiment configuration.

Layering (later wins): built-in defaults, config file (INI sections or a flat
key = value file), the .env file next to the code, BOP_* environment variables.
"""

import configparser
import logging
import os
from dataclasses import asdict, dataclass, fields
from typing import Optional, Tuple

from dotenv import load_dotenv

from bag_kernels import BagKernelConfig
from path_kernels import KERNEL_EDIT, PathKernelConfig
from utils import fingerprint

logger = logging.getLogger(__name__)

ENV_PREFIX = 'BOP_'
FLAT_SECTION = 'flat'

# Section each key is documented under in config.ini
SECTIONS = {
    's': 'bag', 'D': 'bag',
    'sigma_vertex': 'kernel', 'sigma_edge': 'kernel', 'sigma_change_new': 'kernel',
    'sigma_change_classic': 'kernel', 'sigma_matching': 'kernel',
    'nu': 'svm', 'c_grid': 'svm', 'indefinite_threshold': 'svm',
    'spur_ratio': 'ingest', 'anchor_slope': 'ingest', 'png_foreground': 'ingest',
    'workers': 'harness', 'classes': 'harness', 'train_per_class': 'harness', 'log_dir': 'harness',
}


class SettingsError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSettings:
    s: int = 5
    D: int = 2
    sigma_vertex: float = 0.1
    sigma_edge: float = 0.1
    nu: float = 0.9
    sigma_change_new: float = 0.3
    sigma_change_classic: float = 1.0
    sigma_matching: float = 1.0
    spur_ratio: float = 1.0
    anchor_slope: float = 0.75
    png_foreground: str = 'light'
    workers: int = 1
    classes: Tuple[str, ...] = ('hands', 'tools', 'dudes')
    train_per_class: int = 5
    c_grid: Tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
    indefinite_threshold: float = 1e-6
    log_dir: str = 'logs'

    def __post_init__(self):
        checks = [
            (self.s >= 1, 's', 'must be >= 1'),
            (self.D >= 0, 'D', 'must be >= 0'),
            (self.sigma_vertex > 0, 'sigma_vertex', 'must be > 0'),
            (self.sigma_edge > 0, 'sigma_edge', 'must be > 0'),
            (0 < self.nu <= 1, 'nu', 'must be in (0, 1]'),
            (self.sigma_change_new > 0, 'sigma_change_new', 'must be > 0'),
            (self.sigma_change_classic > 0, 'sigma_change_classic', 'must be > 0'),
            (self.sigma_matching > 0, 'sigma_matching', 'must be > 0'),
            (self.spur_ratio >= 0, 'spur_ratio', 'must be >= 0'),
            (self.anchor_slope > 0, 'anchor_slope', 'must be > 0'),
            (self.png_foreground in ('light', 'dark'), 'png_foreground', "must be 'light' or 'dark'"),
            (self.workers >= 1, 'workers', 'must be >= 1'),
            (self.train_per_class >= 1, 'train_per_class', 'must be >= 1'),
            (len(self.c_grid) > 0 and all(c > 0 for c in self.c_grid), 'c_grid', 'must list positive values'),
            (self.indefinite_threshold >= 0, 'indefinite_threshold', 'must be >= 0'),
        ]
        for ok, key, message in checks:
            if not ok:
                raise SettingsError(f"Invalid setting {key}={getattr(self, key)!r}: {message}")

    def path_kernel_config(self) -> PathKernelConfig:
        return PathKernelConfig(sigma_vertex=self.sigma_vertex, sigma_edge=self.sigma_edge, D=self.D)

    def bag_kernel_config(self, path_kernel=KERNEL_EDIT) -> BagKernelConfig:
        sigma_change = self.sigma_change_new if path_kernel == KERNEL_EDIT else self.sigma_change_classic
        return BagKernelConfig(nu=self.nu, sigma_change=sigma_change,
                               sigma_matching=self.sigma_matching, path_kernel=path_kernel)

    def to_payload(self) -> dict:
        payload = asdict(self)
        payload['classes'] = list(self.classes)
        payload['c_grid'] = list(self.c_grid)
        return payload

    def fingerprint(self, selector='') -> str:
        return fingerprint({'settings': self.to_payload(), 'kernel': selector})


def _convert(name, raw, default):
    text = str(raw).strip()
    try:
        if isinstance(default, bool):
            return text.lower() in ('1', 'true', 'yes', 'on')
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            items = [item.strip() for item in text.split(',') if item.strip()]
            if default and isinstance(default[0], float):
                return tuple(float(item) for item in items)
            return tuple(items)
        return text
    except ValueError as exc:
        raise SettingsError(f"Invalid value for {name}: {raw!r}") from exc


def _read_config_file(config_path) -> dict:
    with open(config_path, 'r', encoding='utf-8') as handle:
        text = handle.read()
    if not any(line.strip().startswith('[') for line in text.splitlines()):
        text = f"[{FLAT_SECTION}]\n" + text

    parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'))
    try:
        parser.read_string(text, source=str(config_path))
    except configparser.Error as exc:
        raise SettingsError(f"Cannot parse {config_path}: {exc}") from exc

    values = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            values[key.lower()] = value
    return values


def load_settings(config_path: Optional[str] = None, env_path: Optional[str] = None,
                  overrides: Optional[dict] = None) -> ExperimentSettings:
    """Resolve settings from defaults, file, .env, environment and explicit overrides."""
    if env_path is None:
        env_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), '.env')
    load_dotenv(env_path)

    file_values = {}
    if config_path:
        if not os.path.exists(config_path):
            raise SettingsError(f"Configuration file not found: {config_path}")
        file_values = _read_config_file(config_path)

    defaults = ExperimentSettings()
    resolved = {}
    for spec in fields(ExperimentSettings):
        name = spec.name
        default = getattr(defaults, name)
        raw = os.getenv(ENV_PREFIX + name.upper(), file_values.get(name.lower()))
        if overrides and overrides.get(name) is not None:
            value = overrides[name]
            resolved[name] = _convert(name, value, default) if isinstance(value, str) else value
        elif raw is not None:
            resolved[name] = _convert(name, raw, default)

    unknown = set(file_values) - {spec.name.lower() for spec in fields(ExperimentSettings)}
    if unknown:
        logger.warning("Ignoring unknown configuration keys: %s", ', '.join(sorted(unknown)))

    try:
        settings = ExperimentSettings(**resolved)
    except TypeError as exc:
        raise SettingsError(str(exc)) from exc
    logger.debug("Settings resolved from %s: %s", config_path or 'defaults', settings)
    return settings
