"""Named array configurations and boards, bundled or from a user config.

The bundled presets carry the synthesized clock of each published design
point; a JSON config file with the same shape ({"presets": {...},
"boards": [...]}) extends or overrides them.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Optional

from .perfmodel import BoardSpec
from .quadfp import MaddMode
from .systolic import ArrayConfig, ConfigError


def _bundled(name: str) -> dict:
    return json.loads(resources.files("quadgemm.data").joinpath(name).read_text())


def load_presets(config_path: Optional[str] = None) -> dict[str, dict]:
    presets = dict(_bundled("presets.json")["presets"])
    if config_path:
        with open(config_path) as fh:
            user = json.load(fh)
        presets.update(user.get("presets", {}))
    return presets


def load_boards(config_path: Optional[str] = None) -> dict[str, BoardSpec]:
    entries = list(_bundled("boards.json")["boards"])
    if config_path:
        with open(config_path) as fh:
            user = json.load(fh)
        entries.extend(user.get("boards", []))
    return {e["name"]: BoardSpec(e["name"], e["bandwidth_gbs"]) for e in entries}


def make_config(preset: Optional[str] = None,
                config_path: Optional[str] = None,
                p_r: Optional[int] = None, p_c: Optional[int] = None,
                m_tile: Optional[int] = None, f_mhz: Optional[float] = None,
                madd_mode: MaddMode = MaddMode.FUSED) -> ArrayConfig:
    """Resolve a preset name plus per-field overrides into an ArrayConfig."""
    fields: dict = {}
    if preset is not None:
        table = load_presets(config_path)
        if preset not in table:
            raise ConfigError(
                f"unknown preset {preset!r}; available: {', '.join(sorted(table))}")
        fields.update(table[preset])
    for key, val in (("p_r", p_r), ("p_c", p_c), ("m_tile", m_tile), ("f_mhz", f_mhz)):
        if val is not None:
            fields[key] = val
    missing = {"p_r", "p_c", "m_tile", "f_mhz"} - fields.keys()
    if missing:
        raise ConfigError(f"array configuration missing {sorted(missing)}; "
                          "give --preset or all geometry flags")
    return ArrayConfig(p_r=fields["p_r"], p_c=fields["p_c"],
                       m_tile=fields["m_tile"], f_mhz=fields["f_mhz"],
                       madd_mode=madd_mode)
