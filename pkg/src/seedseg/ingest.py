"""Image and seed-mask I/O plus the synthetic two-rectangles scene.

Conventions: grayscale intensities are floats in [0, 1]; image pixel
(row r, col c) corresponds to node (i=c, j=r), i.e. row 0 sits at x2 = 0.
Seed masks are RGB images sized (N1+1) x (N2+1): a red-dominant pixel marks
an Outside node, blue-dominant marks Inside, anything else is Free.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .grid import GridField, GridSpec, node_coordinates


class IngestError(ValueError):
    """Unreadable or malformed image/mask input."""


class SceneError(ValueError):
    """Synthetic scene geometry leaves the domain."""


class MaskConflictError(ValueError):
    """A node would be labeled both Inside and Outside."""


class SeedLabel(enum.IntEnum):
    FREE = 0
    INSIDE = 1
    OUTSIDE = 2


@dataclass(frozen=True)
class Image:
    """Grayscale raster with intensities in [0, 1], row-major."""

    width: int
    height: int
    intensities: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.intensities, dtype=np.float64)
        if vals.shape != (self.height, self.width):
            raise IngestError(
                f"intensity array {vals.shape} does not match "
                f"{self.height}x{self.width}"
            )
        if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
            raise IngestError("intensities must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "intensities", vals)


@dataclass(frozen=True)
class SeedMask:
    """Per-node Inside/Outside/Free labels, shaped (N2+1, N1+1)."""

    spec: GridSpec
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        lab = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if lab.shape != self.spec.node_shape:
            raise IngestError(
                f"label array {lab.shape} does not match grid {self.spec.node_shape}"
            )
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @classmethod
    def all_free(cls, spec: GridSpec) -> "SeedMask":
        return cls(spec, np.zeros(spec.node_shape, dtype=np.uint8))

    @property
    def inside(self) -> np.ndarray:
        return self.labels == SeedLabel.INSIDE

    @property
    def outside(self) -> np.ndarray:
        return self.labels == SeedLabel.OUTSIDE

    def union(self, other: "SeedMask") -> "SeedMask":
        """Merge two masks; conflicting Inside/Outside labels are an error."""
        if other.spec != self.spec:
            raise IngestError("masks live on different grids")
        conflict = (self.inside & other.outside) | (self.outside & other.inside)
        if conflict.any():
            raise MaskConflictError(
                f"{int(conflict.sum())} node(s) labeled both Inside and Outside"
            )
        merged = np.where(other.labels != SeedLabel.FREE, other.labels, self.labels)
        return SeedMask(self.spec, merged)


@dataclass(frozen=True)
class SceneParams:
    """Geometry of the two-rectangles test scene (domain coordinates)."""

    left_center: tuple[float, float] = (0.4, 0.5)
    right_center: tuple[float, float] = (0.6, 0.5)
    width: float = 0.1
    height: float = 0.4
    edge_thickness: float = 0.04
    hole_height: float = 0.04


# ---------------------------------------------------------------------------
# image files


def _read_pgm(path: Path) -> Image:
    data = path.read_bytes()
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise IngestError(f"{path}: truncated PGM header at byte {start}")
        return data[start:pos]

    magic = token()
    if magic != b"P5":
        raise IngestError(f"{path}: not a binary PGM (magic {magic!r} at byte 0)")
    try:
        width, height, maxval = int(token()), int(token()), int(token())
    except ValueError as exc:
        raise IngestError(f"{path}: bad PGM header near byte {pos}: {exc}") from exc
    if maxval <= 0 or maxval > 65535:
        raise IngestError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace after maxval
    bytes_per = 1 if maxval < 256 else 2
    need = width * height * bytes_per
    raw = data[pos : pos + need]
    if len(raw) != need:
        raise IngestError(
            f"{path}: expected {need} sample bytes at byte {pos}, got {len(raw)}"
        )
    dtype = np.uint8 if bytes_per == 1 else ">u2"
    samples = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    return Image(width, height, (samples / maxval).reshape(height, width))


def load_image(path) -> Image:
    """Read a grayscale PGM (P5) or PNG, scaled to [0, 1] by the format max."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    if path.suffix.lower() == ".pgm" or path.read_bytes()[:2] == b"P5":
        return _read_pgm(path)
    try:
        img = PILImage.open(path)
        img.load()
    except Exception as exc:
        raise IngestError(f"{path}: cannot decode image: {exc}") from exc
    if img.mode == "I;16":
        arr = np.asarray(img, dtype=np.float64) / 65535.0
    elif img.mode in ("L", "I", "RGB", "RGBA"):
        if img.mode != "L":
            img = img.convert("L")
        arr = np.asarray(img, dtype=np.float64) / 255.0
    else:
        raise IngestError(f"{path}: unsupported image mode {img.mode}")
    return Image(img.width, img.height, np.clip(arr, 0.0, 1.0))


def save_pgm(img: Image, path) -> None:
    """Write an 8-bit binary PGM; intensities rounded to 0..255."""
    samples = np.rint(img.intensities * 255.0).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    Path(path).write_bytes(header + samples.tobytes())


def image_to_field(img: Image, spec: GridSpec, method: str = "nearest") -> GridField:
    """Sample image intensities at grid node positions.

    ``nearest`` clamps at the image border (node i maps to pixel
    min(i, width-1) on a matched grid); ``bilinear`` interpolates between the
    four surrounding pixel centers with edge-clamped padding.
    """
    x1, x2 = node_coordinates(spec)
    # fractional pixel coordinates of the nodes
    px = x1 / spec.L1 * (img.width - 1) if img.width > 1 else np.zeros_like(x1)
    py = x2 / spec.L2 * (img.height - 1) if img.height > 1 else np.zeros_like(x2)
    if method == "nearest":
        ci = np.clip(np.rint(px).astype(int), 0, img.width - 1)
        cj = np.clip(np.rint(py).astype(int), 0, img.height - 1)
        vals = img.intensities[cj, ci]
    elif method == "bilinear":
        i0 = np.clip(np.floor(px).astype(int), 0, img.width - 1)
        j0 = np.clip(np.floor(py).astype(int), 0, img.height - 1)
        i1 = np.minimum(i0 + 1, img.width - 1)
        j1 = np.minimum(j0 + 1, img.height - 1)
        fx = np.clip(px - i0, 0.0, 1.0)
        fy = np.clip(py - j0, 0.0, 1.0)
        top = img.intensities[j0, i0] * (1 - fx) + img.intensities[j0, i1] * fx
        bot = img.intensities[j1, i0] * (1 - fx) + img.intensities[j1, i1] * fx
        vals = top * (1 - fy) + bot * fy
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return GridField.from_grid(spec, vals)


# ---------------------------------------------------------------------------
# synthetic scene

def _rect_mask(x1, x2, center, width, height):
    return (
        (np.abs(x1 - center[0]) <= width / 2)
        & (np.abs(x2 - center[1]) <= height / 2)
    )


def scene_intensity(params: SceneParams, x1, x2):
    """Evaluate the two-rectangles scene: 0 on outline bands, 1 elsewhere.

    The outline band runs inward from each rectangle boundary with the given
    thickness; a hole of ``hole_height`` interrupts each rectangle's inner
    vertical edge (the one facing the other rectangle), centered vertically.
    """
    out = np.ones_like(np.asarray(x1, dtype=np.float64))
    for center, inner_sign in ((params.left_center, +1), (params.right_center, -1)):
        outer = _rect_mask(x1, x2, center, params.width, params.height)
        inner = _rect_mask(
            x1,
            x2,
            center,
            params.width - 2 * params.edge_thickness,
            params.height - 2 * params.edge_thickness,
        )
        band = outer & ~inner
        # hole in the inner vertical edge, centered at mid-height
        if params.hole_height > 0:
            edge_x = center[0] + inner_sign * params.width / 2
            hole = (
                (np.abs(x2 - center[1]) <= params.hole_height / 2)
                & (np.abs(x1 - edge_x) <= params.edge_thickness)
                & (inner_sign * (x1 - edge_x) <= 0)
            )
            band = band & ~hole
        out = np.where(band, 0.0, out)
    return out


def _check_scene(params: SceneParams, spec: GridSpec) -> None:
    if params.edge_thickness <= 0:
        raise SceneError("edge thickness must be positive")
    for cx, cy in (params.left_center, params.right_center):
        if not (
            0 <= cx - params.width / 2
            and cx + params.width / 2 <= spec.L1
            and 0 <= cy - params.height / 2
            and cy + params.height / 2 <= spec.L2
        ):
            raise SceneError("rectangle leaves the domain")


def synth_two_rectangles(params: SceneParams, spec: GridSpec) -> GridField:
    """Two-rectangles test scene evaluated at grid nodes."""
    _check_scene(params, spec)
    x1, x2 = node_coordinates(spec)
    return GridField.from_grid(spec, scene_intensity(params, x1, x2))


def scene_image(params: SceneParams, width: int, height: int,
                L1: float = 1.0, L2: float = 1.0) -> Image:
    """Rasterize the scene at pixel centers of a width x height image."""
    x1 = (np.arange(width) + 0.5) / width * L1
    x2 = (np.arange(height) + 0.5) / height * L2
    xx, yy = np.meshgrid(x1, x2)
    return Image(width, height, scene_intensity(params, xx, yy))


# ---------------------------------------------------------------------------
# seed masks

RED_MIN = 128
OTHER_MAX = 64


def labels_from_rgb(rgb: np.ndarray) -> np.ndarray:
    """Decode an (H, W, 3) uint8 array to seed labels.

    Red-dominant (R > 128, G and B < 64) means Outside, blue-dominant means
    Inside, everything else Free.
    """
    r = rgb[..., 0].astype(np.int32)
    g = rgb[..., 1].astype(np.int32)
    b = rgb[..., 2].astype(np.int32)
    labels = np.zeros(rgb.shape[:2], dtype=np.uint8)
    labels[(r > RED_MIN) & (g < OTHER_MAX) & (b < OTHER_MAX)] = SeedLabel.OUTSIDE
    labels[(b > RED_MIN) & (r < OTHER_MAX) & (g < OTHER_MAX)] = SeedLabel.INSIDE
    return labels


def load_seed_mask(path, spec: GridSpec) -> SeedMask:
    """Read an RGB seed-mask PNG sized (N1+1) x (N2+1)."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    try:
        img = PILImage.open(path)
        img.load()
    except Exception as exc:
        raise IngestError(f"{path}: cannot decode image: {exc}") from exc
    if img.mode not in ("RGB", "RGBA"):
        raise IngestError(f"{path}: seed mask must be RGB, got mode {img.mode}")
    rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    if rgb.shape[:2] != spec.node_shape:
        raise IngestError(
            f"{path}: mask is {rgb.shape[1]}x{rgb.shape[0]}, grid wants "
            f"{spec.N1 + 1}x{spec.N2 + 1}"
        )
    return SeedMask(spec, labels_from_rgb(rgb))


def save_seed_mask(mask: SeedMask, path) -> None:
    """Write a seed mask as an RGB PNG (red = Outside, blue = Inside)."""
    rgb = np.full(mask.spec.node_shape + (3,), 255, dtype=np.uint8)
    rgb[mask.outside] = (255, 0, 0)
    rgb[mask.inside] = (0, 0, 255)
    PILImage.fromarray(rgb, "RGB").save(path)


def synth_bar_seed(center, width, height, label: SeedLabel,
                   spec: GridSpec) -> SeedMask:
    """Axis-aligned bar of seed nodes; everything outside the bar is Free."""
    if not (
        0 <= center[0] - width / 2
        and center[0] + width / 2 <= spec.L1
        and 0 <= center[1] - height / 2
        and center[1] + height / 2 <= spec.L2
    ):
        raise SceneError("seed bar leaves the domain")
    x1, x2 = node_coordinates(spec)
    labels = np.zeros(spec.node_shape, dtype=np.uint8)
    labels[_rect_mask(x1, x2, center, width, height)] = label
    return SeedMask(spec, labels)


def rasterize_strokes(strokes, spec: GridSpec) -> SeedMask:
    """Turn {label, polyline (domain coords), radius (pixels)} strokes into a mask.

    The radius is measured in node units (one node step = one pixel of the
    source image).  Conflicting Inside/Outside coverage raises.
    """
    x1, x2 = node_coordinates(spec)
    mask = SeedMask.all_free(spec)
    for stroke in strokes:
        label = SeedLabel[str(stroke["label"]).upper()]
        radius = float(stroke.get("radius", 1.0))
        r1 = max(radius * spec.h1, spec.h1 / 2)
        r2 = max(radius * spec.h2, spec.h2 / 2)
        pts = [(float(p[0]), float(p[1])) for p in stroke["polyline"]]
        if not pts:
            continue
        covered = np.zeros(spec.node_shape, dtype=bool)
        segs = list(zip(pts, pts[1:])) or [(pts[0], pts[0])]
        for (ax, ay), (bx, by) in segs:
            n = max(int(np.hypot((bx - ax) / r1, (by - ay) / r2) * 2), 1)
            for t in np.linspace(0.0, 1.0, n + 1):
                cx, cy = ax + t * (bx - ax), ay + t * (by - ay)
                covered |= ((x1 - cx) / r1) ** 2 + ((x2 - cy) / r2) ** 2 <= 1.0
        labels = np.zeros(spec.node_shape, dtype=np.uint8)
        if label != SeedLabel.FREE:
            labels[covered] = label
            mask = mask.union(SeedMask(spec, labels))
        else:  # erase
            merged = mask.labels.copy()
            merged[covered] = SeedLabel.FREE
            mask = SeedMask(spec, merged)
    return mask
