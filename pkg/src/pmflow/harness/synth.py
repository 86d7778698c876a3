"""Synthetic segmentation problems, integers end to end.

An image is a stack of random constant-intensity rectangles over a constant
background, plus clipped integer noise.  Each interior grid point becomes
one seed problem: its single foreground seed pixel, the whole border as
background seeds, and capacities derived from intensity differences.

All weight maps land in small integer ranges on purpose: capacities stay
far inside CAP_MAX even at the top of the lambda ladder, and identical
configs regenerate bit-identical problems on any machine.
"""

from __future__ import annotations

import numpy as np

from ..parametric import SeedProblem

INTENSITY_MAX = 255


def synth_image(width: int, height: int, rng, regions: int = 4, noise: int = 10):
    """Rectangle-stack image and its region map.

    Returns (image, region_map), both (height, width) int64.  region_map
    holds 0 for background and the 1-based index of the topmost rectangle
    covering the pixel; noise perturbs intensities but not regions.
    """
    img = np.full((height, width), int(rng.integers(0, INTENSITY_MAX + 1)), np.int64)
    region = np.zeros((height, width), np.int64)
    for rid in range(1, regions + 1):
        w = int(rng.integers(max(1, width // 4), max(2, 3 * width // 4)))
        h = int(rng.integers(max(1, height // 4), max(2, 3 * height // 4)))
        x0 = int(rng.integers(0, max(1, width - w + 1)))
        y0 = int(rng.integers(0, max(1, height - h + 1)))
        img[y0:y0 + h, x0:x0 + w] = int(rng.integers(0, INTENSITY_MAX + 1))
        region[y0:y0 + h, x0:x0 + w] = rid
    if noise:
        img = img + rng.integers(-noise, noise + 1, (height, width))
        np.clip(img, 0, INTENSITY_MAX, out=img)
    return img, region


def seed_coords(width: int, height: int, rows: int, cols: int):
    """Interior seed lattice: row i sits at y = (i+1)*height // (rows+1),
    column j at x = (j+1)*width // (cols+1); row-major order."""
    ys = [(i + 1) * height // (rows + 1) for i in range(rows)]
    xs = [(j + 1) * width // (cols + 1) for j in range(cols)]
    return [(x, y) for y in ys for x in xs]


def _pairwise_weights(img: np.ndarray) -> np.ndarray:
    """Contrast-gated neighbor capacities, symmetric per edge, (4, n)."""
    height, width = img.shape
    nbr = np.zeros((4, height, width), np.int64)
    dx = np.abs(img[:, :-1] - img[:, 1:])
    wx = 1 + ((INTENSITY_MAX - dx) * 63) // INTENSITY_MAX
    nbr[1, :, :-1] = wx  # RIGHT
    nbr[0, :, 1:] = wx   # LEFT
    dy = np.abs(img[:-1, :] - img[1:, :])
    wy = 1 + ((INTENSITY_MAX - dy) * 63) // INTENSITY_MAX
    nbr[3, :-1, :] = wy  # DOWN
    nbr[2, 1:, :] = wy   # UP
    return nbr.reshape(4, -1)


def _border_indices(width: int, height: int):
    idx = np.arange(width * height).reshape(height, width)
    border = np.concatenate([idx[0, :], idx[-1, :], idx[1:-1, 0], idx[1:-1, -1]])
    return frozenset(int(p) for p in border)


def problem_for_seed(img: np.ndarray, seed_x: int, seed_y: int,
                     pairwise: np.ndarray | None = None) -> SeedProblem:
    """One seed problem: terminals from similarity to the seed intensity.

    Pixels close to the seed's intensity get strong, steeply growing source
    mass; dissimilar pixels lean toward the sink.  The seed itself and the
    border are hard constraints.
    """
    height, width = img.shape
    dsim = np.abs(img - img[seed_y, seed_x])  # 0..255
    sink_base = 1 + (dsim * 63) // INTENSITY_MAX
    unary_base = 1 + ((INTENSITY_MAX - dsim) * 15) // INTENSITY_MAX
    unary_slope = 1 + ((INTENSITY_MAX - dsim) * 7) // INTENSITY_MAX
    if pairwise is None:
        pairwise = _pairwise_weights(img)
    seed_idx = seed_y * width + seed_x
    bg = _border_indices(width, height)
    if seed_idx in bg:
        raise ValueError(f"seed ({seed_x}, {seed_y}) sits on the border")
    return SeedProblem(
        width=width, height=height,
        unary_base=unary_base.reshape(-1),
        unary_slope=unary_slope.reshape(-1),
        sink_base=sink_base.reshape(-1),
        pairwise=pairwise,
        fg_seeds=frozenset({seed_idx}),
        bg_seeds=bg,
    )


def truth_mask(region: np.ndarray, seed_x: int, seed_y: int) -> np.ndarray:
    """Flat uint8 mask of the region containing the seed."""
    return (region == region[seed_y, seed_x]).astype(np.uint8).reshape(-1)


def generate_batch(config):
    """All seed problems and truth masks for a config, deterministically.

    Returns (meta, problems, truths).  The same config always produces the
    same bytes: the generator consumes the rng in a fixed order.
    """
    rng = np.random.default_rng(config.rng_seed)
    img, region = synth_image(config.width, config.height, rng,
                              config.regions, config.noise)
    pairwise = _pairwise_weights(img)
    problems = []
    truths = []
    coords = seed_coords(config.width, config.height,
                         config.seed_rows, config.seed_cols)
    for x, y in coords:
        problems.append(problem_for_seed(img, x, y, pairwise))
        truths.append(truth_mask(region, x, y))
    meta = {
        "width": config.width,
        "height": config.height,
        "seed_rows": config.seed_rows,
        "seed_cols": config.seed_cols,
        "regions": config.regions,
        "noise": config.noise,
        "rng_seed": config.rng_seed,
        "lambda_values": list(config.lambda_values),
        "seed_coords": [list(c) for c in coords],
    }
    return meta, problems, truths


def quantize_weights(values, scale: int = 1 << 16) -> np.ndarray:
    """Float weights to integers: round half up at the given scale.

    For callers bringing real-valued energies; everything generated here is
    already integer.
    """
    if scale < 1:
        raise ValueError("scale must be positive")
    arr = np.asarray(values, np.float64)
    out = np.floor(arr * scale + 0.5).astype(np.int64)
    if out.size and int(out.min()) < 0:
        raise ValueError("weights must be non-negative")
    return out
