"""YAML scene descriptions.

Schema::

    shadow_attenuation_db: -20          # optional
    include_interactions: true          # optional
    targets:
      - type: sphere
        center: [0.0, 0.0, 0.0]
        radius: 0.15
      - type: point
        position: [0.6, 0.0, 0.0]
        amplitude_db: -10.0             # optional, default 0
        phase_deg: 0.0                  # optional
      - type: articulated
        scatterers:
          - rest_position: [0.3, 0.0, -0.6]
            pivot: [0.3, 0.0, 0.0]
            axis: [0.0, 1.0, 0.0]
            amplitude_deg: 30.0
            period_s: 1.0
            phase_deg: 0.0
            amplitude_db: -6.0
"""

from __future__ import annotations

import math

import yaml

from .scattering import (
    ArticulatedCluster,
    ArticulatedScatterer,
    PointScatterer,
    Scene,
    SphereTarget,
)


class SceneFormatError(ValueError):
    pass


def _amp(entry) -> complex:
    mag = 10.0 ** (float(entry.get("amplitude_db", 0.0)) / 20.0)
    ph = math.radians(float(entry.get("phase_deg", 0.0)))
    return complex(mag * math.cos(ph), mag * math.sin(ph))


def _vec(entry, key, default=None):
    v = entry.get(key, default)
    if v is None or len(v) != 3:
        raise SceneFormatError(f"target field {key!r} must be a 3-vector")
    return (float(v[0]), float(v[1]), float(v[2]))


def scene_from_dict(doc: dict) -> Scene:
    if not isinstance(doc, dict) or "targets" not in doc:
        raise SceneFormatError("scene document must contain a 'targets' list")
    targets = []
    for i, entry in enumerate(doc["targets"]):
        kind = entry.get("type")
        if kind == "sphere":
            targets.append(SphereTarget(_vec(entry, "center"), float(entry["radius"])))
        elif kind == "point":
            targets.append(PointScatterer(_vec(entry, "position"), _amp(entry)))
        elif kind == "articulated":
            scats = tuple(
                ArticulatedScatterer(
                    rest_position=_vec(s, "rest_position"),
                    pivot=_vec(s, "pivot"),
                    axis=_vec(s, "axis", (0.0, 1.0, 0.0)),
                    amplitude_rad=math.radians(float(s.get("amplitude_deg", 30.0))),
                    period_s=float(s.get("period_s", 1.0)),
                    phase_rad=math.radians(float(s.get("phase_deg", 0.0))),
                    amplitude=_amp(s),
                )
                for s in entry.get("scatterers", [])
            )
            if not scats:
                raise SceneFormatError(f"target {i}: empty articulated cluster")
            targets.append(ArticulatedCluster(scats))
        else:
            raise SceneFormatError(f"target {i}: unknown type {kind!r}")
    return Scene(
        targets=tuple(targets),
        shadow_attenuation_db=float(doc.get("shadow_attenuation_db", -20.0)),
        include_interactions=bool(doc.get("include_interactions", True)),
    )


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return scene_from_dict(doc)


def parse_scene(text: str) -> Scene:
    return scene_from_dict(yaml.safe_load(text))
