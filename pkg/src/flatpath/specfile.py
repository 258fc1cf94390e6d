"""Surface spec files: JSON documents naming a builtin or listing polygons.

Two shapes are accepted:

    {"builtin": "torus_from_basis", "params": {"u": [1, 0], "v": [0.618, 1]},
     "name": "golden-shear"}

    {"name": "square", "polygons": [[[0,0],[1,0],[1,1],[0,1]]],
     "gluings": [[[0,0],[0,2]], [[0,1],[0,3]]]}
"""
from __future__ import annotations

import json
import math

from .errors import FlatPathError, SpecFileError
from .surface import BUILTIN_SURFACES, TranslationSurface, build_surface


def parse_angle(text: str) -> float:
    """Radians, or degrees with a 'deg:' prefix."""
    text = str(text).strip()
    if text.startswith("deg:"):
        return math.radians(float(text[4:]))
    return float(text)


def load_spec(path) -> TranslationSurface:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SpecFileError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecFileError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise SpecFileError(f"{path}: top level must be an object")

    name = doc.get("name")
    if "builtin" in doc:
        builtin = doc["builtin"]
        if builtin not in BUILTIN_SURFACES:
            raise SpecFileError(
                f"{path}: unknown builtin {builtin!r}; choose from "
                f"{sorted(BUILTIN_SURFACES)}")
        params = doc.get("params", {})
        if not isinstance(params, dict):
            raise SpecFileError(f"{path}: params must be an object")
        try:
            surface = BUILTIN_SURFACES[builtin](**params)
        except TypeError as exc:
            raise SpecFileError(f"{path}: bad params for {builtin}: {exc}") from exc
        except FlatPathError as exc:
            raise SpecFileError(f"{path}: {exc}") from exc
        if name:
            surface.name = str(name)
        return surface

    if "polygons" not in doc or "gluings" not in doc:
        raise SpecFileError(f"{path}: need either a builtin or polygons+gluings")
    try:
        polygons = [[(float(x), float(y)) for x, y in poly] for poly in doc["polygons"]]
        gluings = [((int(a[0]), int(a[1])), (int(b[0]), int(b[1])))
                   for a, b in doc["gluings"]]
    except (TypeError, ValueError) as exc:
        raise SpecFileError(f"{path}: malformed polygons/gluings: {exc}") from exc
    return build_surface(polygons, gluings, name=str(name) if name else None)
