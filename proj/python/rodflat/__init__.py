"""Low-distortion planar embeddings of 3D rod structures."""

import json

from ._rodflat import (
    Error,
    InputError,
    Structure,
    deploy,
    detect_overlaps,
    export_svg,
    generate,
    mesh_surface_regions,
    tutte_embedding,
)
from . import _rodflat


def flatten(structure, init="tutte", tol=1e-4, max_outer=10, seed=None):
    """Return (coords, metrics) where coords has shape (m, 2)."""
    coords, metrics = _rodflat.flatten(structure, init, tol, max_outer, seed)
    return coords, json.loads(metrics)


def metrics(structure, coords):
    return json.loads(_rodflat.metrics(structure, coords))


__all__ = [
    "Error",
    "InputError",
    "Structure",
    "deploy",
    "detect_overlaps",
    "export_svg",
    "flatten",
    "generate",
    "mesh_surface_regions",
    "metrics",
    "tutte_embedding",
]
