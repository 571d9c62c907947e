#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Configurations related utilities based on the :mod:`configobj` system

Experiment configurations are validated against the specifications of
:file:`kdgan/config.ini`. Keys may be given in sections or as flat dotted
names like ``agkd.p = 0.7``.
"""
import hashlib
import json
import logging
import os
import pathlib
import pprint

import configobj
import platformdirs

try:
    import configobj.validate as validate
except ImportError:
    import validate

from . import KdganError
from . import util as kutil

#: Configuration specifications file
CFGSPECS_FILE = os.path.join(os.path.dirname(__file__), "config.ini")

#: Environment variable overriding the output root of runs
RUN_DIR_ENV = "KD_DLGAN_RUN_DIR"

#: Configurations shipped with the package, loadable by name
BUNDLED_CONFIGS = {"desk": os.path.join(os.path.dirname(__file__), "desk.cfg")}

#: Ablation presets, applied over the [agkd] and [cgkd] sections
PRESETS = {
    "baseline": {"agkd.enabled": False, "cgkd.enabled": False},
    "vanilla_kd": {"agkd.enabled": True, "agkd.aggregate": False, "cgkd.enabled": False},
    "agkd": {"agkd.enabled": True, "cgkd.enabled": False},
    "cgkd": {"agkd.enabled": False, "cgkd.enabled": True},
    "full": {"agkd.enabled": True, "cgkd.enabled": True},
}

#: Keys that may change when resuming a run
RESUME_FREE_KEYS = (
    "run.name",
    "run.output_root",
    "train.steps",
    "train.eval_every",
    "train.checkpoint_every",
    "train.sample_every",
    "train.log_every",
    "data.prefetch",
)

logger = logging.getLogger(__name__)


class ConfigError(KdganError):
    pass


def is_path(value):
    """Convert to :class:`pathlib.Path`"""
    if value is None:
        return
    try:
        return pathlib.Path(os.path.expanduser(str(value)))
    except Exception as e:
        raise validate.VdtTypeError(value) from e


def is_probability(value):
    """A float in [0, 1]"""
    value = validate.is_float(value)
    if not 0 <= value <= 1:
        raise validate.VdtValueError(value)
    return value


def is_fraction(value):
    """A float in (0, 1]"""
    value = validate.is_float(value)
    if not 0 < value <= 1:
        raise validate.VdtValueError(value)
    return value


#: Default kdgan validator fonctions
VALIDATOR_FUNCTIONS = {
    "path": is_path,
    "probability": is_probability,
    "fraction": is_fraction,
}


def get_validator():
    """Get a :class:`configobj.validate.Validator` instance"""
    return validate.Validator(VALIDATOR_FUNCTIONS)


def get_cfgspecs(cfgspecsfile=CFGSPECS_FILE):
    return configobj.ConfigObj(cfgspecsfile, interpolation=False, list_values=False)


def unflatten(flat):
    """Convert dotted keys to nested dicts

    Example
    -------
    >>> unflatten({"agkd.p": 0.5, "cgkd": {"weight": 2}})
    {'agkd': {'p': 0.5}, 'cgkd': {'weight': 2}}
    """
    out = {}
    for key, value in flat.items():
        if isinstance(value, dict):
            value = unflatten(value)
        parts = key.split(".")
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"Configuration key {key} conflicts with a scalar value")
        if isinstance(value, dict) and isinstance(node.get(parts[-1]), dict):
            merge_dicts(node[parts[-1]], value)
        else:
            node[parts[-1]] = value
    return out


def merge_dicts(base, other):
    """Recursively merge `other` into `base` in place"""
    for key, value in other.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            merge_dicts(base[key], value)
        else:
            base[key] = value
    return base


def parse_overrides(items):
    """Convert a list of ``"section.key=value"`` strings to a flat dict"""
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Invalid configuration override, expected key=value: {item}")
        value = value.strip()
        if "," in value:
            value = [v.strip() for v in value.split(",") if v.strip()]
        out[key.strip()] = value
    return out


def _read_raw(cfgfile):
    if cfgfile is None:
        return {}
    if isinstance(cfgfile, dict):
        return unflatten(dict(cfgfile))
    if not os.path.exists(cfgfile) and cfgfile in BUNDLED_CONFIGS:
        cfgfile = BUNDLED_CONFIGS[cfgfile]
    if not os.path.exists(cfgfile):
        raise ConfigError(f"Configuration file not found: {cfgfile}")
    try:
        raw = configobj.ConfigObj(str(cfgfile), interpolation=False, list_values=True)
    except configobj.ConfigObjError as e:
        raise ConfigError(f"Can't parse configuration file {cfgfile}: {e}") from e
    return unflatten(raw.dict())


def load_config(cfgfile=None, overrides=None, preset=None):
    """Get a validated experiment configuration

    Parameters
    ----------
    cfgfile: str, dict, None
        Configuration file, name of a :data:`BUNDLED_CONFIGS` entry or content,
        merged over the defaults
    overrides: dict, None
        Flat dotted keys applied over the file
    preset: str, None
        Ablation preset, superseding ``run.preset``

    Return
    ------
    configobj.ConfigObj
    """
    content = _read_raw(cfgfile)
    if overrides:
        merge_dicts(content, unflatten(dict(overrides)))
    cfg = configobj.ConfigObj(content, configspec=get_cfgspecs(), interpolation=False)
    success = cfg.validate(get_validator(), preserve_errors=True)
    if success is not True:
        msg = f"Error while validating config: {cfgfile}\n"
        msg += pprint.pformat(configobj.flatten_errors(cfg, success))
        logger.error(msg)
        raise ConfigError(msg)
    extra = configobj.get_extra_values(cfg)
    if extra:
        names = [".".join(path + (name,)) for path, name in extra]
        msg = "Unknown configuration keys: " + ", ".join(sorted(names))
        logger.error(msg)
        raise ConfigError(msg)
    preset = preset or cfg["run"]["preset"]
    if preset:
        apply_preset(cfg, preset)
    return cfg


def apply_preset(cfg, name):
    """Apply an ablation preset in place"""
    if name not in PRESETS:
        raise ConfigError(f"Invalid preset: {name}. Choose one of: {', '.join(PRESETS)}")
    for key, value in PRESETS[name].items():
        section, option = key.split(".")
        cfg[section][option] = value
    cfg["run"]["preset"] = name
    logger.debug(f"Applied preset: {name}")
    return cfg


def flatten_config(cfg):
    """Flat dict of dotted keys"""
    out = {}
    for key, value in cfg.items():
        if isinstance(value, dict):
            for subkey, subvalue in flatten_config(value).items():
                out[f"{key}.{subkey}"] = subvalue
        else:
            out[key] = value
    return out


def config_hash(cfg, exclude=()):
    """Stable sha256 hex digest of a configuration

    Parameters
    ----------
    cfg: dict
    exclude: list(str)
        Dotted keys left out of the hash
    """
    flat = {key: value for key, value in flatten_config(cfg).items() if key not in exclude}
    dump = json.dumps(flat, sort_keys=True, cls=kutil.KdganJSONEncoder)
    return hashlib.sha256(dump.encode()).hexdigest()


def write_snapshot(cfg, path):
    """Write the validated configuration, reloadable by :func:`load_config`

    None values are left out since they are the defaults.
    """
    path = kutil.check_dir(path)
    snap = configobj.ConfigObj(interpolation=False)
    for key, value in cfg.items():
        if isinstance(value, dict):
            snap[key] = {
                k: (str(v) if isinstance(v, pathlib.Path) else v) for k, v in value.items() if v is not None
            }
    snap.filename = path
    snap.write()
    logger.debug(f"Wrote configuration snapshot: {path}")
    return path


def get_output_root(cfg):
    """Root of run directories

    Precedence: ``$KD_DLGAN_RUN_DIR``, ``run.output_root``, then the user data directory.
    """
    if os.environ.get(RUN_DIR_ENV):
        return pathlib.Path(os.environ[RUN_DIR_ENV])
    if cfg["run"]["output_root"] is not None:
        return pathlib.Path(cfg["run"]["output_root"])
    return pathlib.Path(platformdirs.user_data_dir("kdgan")) / "runs"
