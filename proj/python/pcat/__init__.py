"""Automated pericoronary adipose tissue (PCAT) measurement for cardiac CTA.

Thin Python face over the C++ core. Arrays are indexed [x, y, z] with
spacing (sx, sy, sz) in mm (the nibabel convention); masks are uint8.
"""

from ._core import (
    PcatError,
    __version__,
    connected_components,
    dice,
    distance_transform,
    load_mask,
    load_volume,
    measure_lpcat,
    measure_rpcat,
    pearson_r2,
    render_phantom,
    save_mask,
    save_volume,
    skeletonize,
    split_arteries,
    straight_tube_phantom_json,
    two_vessel_phantom_json,
    y_phantom_json,
)

__all__ = [
    "PcatError",
    "__version__",
    "connected_components",
    "dice",
    "distance_transform",
    "load_mask",
    "load_volume",
    "measure_lpcat",
    "measure_rpcat",
    "pearson_r2",
    "render_phantom",
    "save_mask",
    "save_volume",
    "skeletonize",
    "split_arteries",
    "straight_tube_phantom_json",
    "two_vessel_phantom_json",
    "y_phantom_json",
]
