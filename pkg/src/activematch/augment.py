"""Image augmentation: contrastive pairs, weak flips, and RandAugment+Cutout.

All transforms operate on float32 HWC arrays in [0, 1], preserve shape, clamp
the output range, and draw randomness only from the Generator passed in.
Geometric ops use nearest-neighbor resampling for bit-exact reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

_GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float32)
_FILL = 0.5


class AugmentConfigError(Exception):
    pass


@dataclass
class AugmentPolicy:
    kind: str  # contrastive | weak | strong
    crop_padding: int = 4
    flip_prob: float = 0.5
    color_strength: float = 0.5
    color_prob: float = 0.8
    gray_prob: float = 0.2
    blur_prob: float = 0.5
    ra_num_ops: int = 2
    ra_magnitude: int = 10
    cutout_size: int = 16

    def __post_init__(self):
        for p in (self.flip_prob, self.color_prob, self.gray_prob, self.blur_prob):
            if not 0.0 <= p <= 1.0:
                raise AugmentConfigError(f"probability {p} outside [0, 1]")
        if self.kind == "strong" and self.ra_num_ops < 1:
            raise AugmentConfigError("strong policy needs ra_num_ops >= 1")


def contrastive_policy(**overrides) -> AugmentPolicy:
    return AugmentPolicy(kind="contrastive", **overrides)


def weak_policy(flip_prob: float = 0.5) -> AugmentPolicy:
    return AugmentPolicy(kind="weak", flip_prob=flip_prob)


def strong_policy(image_side: int, **overrides) -> AugmentPolicy:
    """Strong policy with the cutout square scaled to the image (16 px at side 32)."""
    cutout = overrides.pop("cutout_size", max(1, image_side // 2))
    if cutout > image_side:
        raise AugmentConfigError(f"cutout size {cutout} exceeds image side {image_side}")
    return AugmentPolicy(kind="strong", cutout_size=cutout, **overrides)


# ---------------------------------------------------------------------------
# primitive transforms


def _hflip(img: np.ndarray) -> np.ndarray:
    return img[:, ::-1]


def _pad_crop(img: np.ndarray, padding: int, rng: np.random.Generator) -> np.ndarray:
    h, w = img.shape[:2]
    padded = np.pad(img, ((padding, padding), (padding, padding), (0, 0)), mode="reflect")
    top = int(rng.integers(0, 2 * padding + 1))
    left = int(rng.integers(0, 2 * padding + 1))
    return padded[top : top + h, left : left + w]


def _brightness(img, factor):
    return img * factor


def _contrast(img, factor):
    mean = img.mean()
    return (img - mean) * factor + mean


def _saturation(img, factor):
    gray = (img @ _GRAY_WEIGHTS)[:, :, None]
    return gray + (img - gray) * factor


def _color_jitter(img: np.ndarray, strength: float, rng: np.random.Generator) -> np.ndarray:
    lo, hi = 1.0 - strength, 1.0 + strength
    for fn in (_brightness, _contrast, _saturation):
        img = fn(img, float(rng.uniform(lo, hi)))
    return img


def _grayscale(img):
    gray = img @ _GRAY_WEIGHTS
    return np.repeat(gray[:, :, None], img.shape[2], axis=2)


def _blur(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    sigma = float(rng.uniform(0.1, 2.0))
    return gaussian_filter(img, sigma=(sigma, sigma, 0), mode="reflect")


def _affine_nn(img: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Apply the inverse affine map (output -> input) with nearest-neighbor lookup."""
    h, w = img.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    src_x = matrix[0, 0] * (xs - cx) + matrix[0, 1] * (ys - cy) + matrix[0, 2] + cx
    src_y = matrix[1, 0] * (xs - cx) + matrix[1, 1] * (ys - cy) + matrix[1, 2] + cy
    ix = np.rint(src_x).astype(np.int64)
    iy = np.rint(src_y).astype(np.int64)
    valid = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    out = np.full_like(img, _FILL)
    out[valid] = img[iy[valid], ix[valid]]
    return out


def _rotate(img, degrees):
    rad = np.deg2rad(degrees)
    c, s = np.cos(rad), np.sin(rad)
    return _affine_nn(img, np.array([[c, -s, 0.0], [s, c, 0.0]]))


def _shear_x(img, factor):
    return _affine_nn(img, np.array([[1.0, factor, 0.0], [0.0, 1.0, 0.0]]))


def _shear_y(img, factor):
    return _affine_nn(img, np.array([[1.0, 0.0, 0.0], [factor, 1.0, 0.0]]))


def _translate_x(img, pixels):
    return _affine_nn(img, np.array([[1.0, 0.0, -pixels], [0.0, 1.0, 0.0]]))


def _translate_y(img, pixels):
    return _affine_nn(img, np.array([[1.0, 0.0, 0.0], [0.0, 1.0, -pixels]]))


def _autocontrast(img):
    out = img.copy()
    for c in range(img.shape[2]):
        ch = img[:, :, c]
        lo, hi = ch.min(), ch.max()
        if hi > lo:
            out[:, :, c] = (ch - lo) / (hi - lo)
    return out


def _equalize(img):
    img = np.clip(img, 0.0, 1.0)
    out = img.copy()
    for c in range(img.shape[2]):
        ch = (img[:, :, c] * 255).astype(np.int64)
        hist = np.bincount(ch.ravel(), minlength=256)
        cdf = hist.cumsum()
        nonzero = cdf[cdf > 0]
        if len(nonzero) == 0 or nonzero[0] == cdf[-1]:
            continue
        lut = (cdf - nonzero[0]) / (cdf[-1] - nonzero[0])
        out[:, :, c] = lut[ch].astype(np.float32)
    return out


def _posterize(img, bits):
    levels = 2 ** int(bits)
    return np.floor(np.clip(img, 0.0, 1.0) * (levels - 1) + 0.5) / (levels - 1)


def _solarize(img, threshold):
    return np.where(img >= threshold, 1.0 - img, img)


def _sharpness(img, factor):
    smooth = gaussian_filter(img, sigma=(1.0, 1.0, 0), mode="reflect")
    return smooth + (img - smooth) * factor


# (name, apply(img, magnitude, rng), signed) with magnitude in [0, 1]
def _signed(rng, value):
    return value if rng.random() < 0.5 else -value


_RANDAUGMENT_OPS = [
    ("identity", lambda img, m, rng: img),
    ("autocontrast", lambda img, m, rng: _autocontrast(img)),
    ("equalize", lambda img, m, rng: _equalize(img)),
    ("rotate", lambda img, m, rng: _rotate(img, _signed(rng, 30.0 * m))),
    ("posterize", lambda img, m, rng: _posterize(img, 8 - int(4 * m))),
    ("solarize", lambda img, m, rng: _solarize(img, 1.0 - m)),
    ("color", lambda img, m, rng: _saturation(img, 1.0 + _signed(rng, 0.9 * m))),
    ("contrast", lambda img, m, rng: _contrast(img, 1.0 + _signed(rng, 0.9 * m))),
    ("brightness", lambda img, m, rng: _brightness(img, 1.0 + _signed(rng, 0.9 * m))),
    ("sharpness", lambda img, m, rng: _sharpness(img, 1.0 + _signed(rng, 0.9 * m))),
    ("shear_x", lambda img, m, rng: _shear_x(img, _signed(rng, 0.3 * m))),
    ("shear_y", lambda img, m, rng: _shear_y(img, _signed(rng, 0.3 * m))),
    ("translate_x", lambda img, m, rng: _translate_x(img, _signed(rng, 0.3 * m * img.shape[1]))),
    ("translate_y", lambda img, m, rng: _translate_y(img, _signed(rng, 0.3 * m * img.shape[0]))),
]


def _randaugment(img: np.ndarray, num_ops: int, magnitude: int, rng: np.random.Generator) -> np.ndarray:
    m = magnitude / 30.0
    for _ in range(num_ops):
        _, op = _RANDAUGMENT_OPS[int(rng.integers(0, len(_RANDAUGMENT_OPS)))]
        img = op(img, m, rng)
    return img


def _cutout(img: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    h, w = img.shape[:2]
    cy = int(rng.integers(0, h))
    cx = int(rng.integers(0, w))
    y0, y1 = max(0, cy - size // 2), min(h, cy - size // 2 + size)
    x0, x1 = max(0, cx - size // 2), min(w, cx - size // 2 + size)
    out = img.copy()
    out[y0:y1, x0:x1] = 0.0
    return out


# ---------------------------------------------------------------------------
# policy application


def apply(policy: AugmentPolicy, img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One seeded draw of the policy; consumes RNG state on every call."""
    out = np.asarray(img, dtype=np.float32)
    if policy.kind == "weak":
        if rng.random() < policy.flip_prob:
            out = _hflip(out)
    elif policy.kind == "contrastive":
        out = _pad_crop(out, policy.crop_padding, rng)
        if rng.random() < policy.flip_prob:
            out = _hflip(out)
        if rng.random() < policy.color_prob:
            out = _color_jitter(out, policy.color_strength, rng)
        if rng.random() < policy.gray_prob:
            out = _grayscale(out)
        if rng.random() < policy.blur_prob:
            out = _blur(out, rng)
    elif policy.kind == "strong":
        if policy.cutout_size > min(out.shape[:2]):
            raise AugmentConfigError("cutout larger than image")
        if rng.random() < policy.flip_prob:
            out = _hflip(out)
        out = _randaugment(out, policy.ra_num_ops, policy.ra_magnitude, rng)
        out = _cutout(out, policy.cutout_size, rng)
    else:
        raise AugmentConfigError(f"unknown policy kind {policy.kind!r}")
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def contrastive_pair(
    img: np.ndarray, rng: np.random.Generator, policy: AugmentPolicy | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Two independent draws of the contrastive policy from one image."""
    policy = policy or contrastive_policy()
    return apply(policy, img, rng), apply(policy, img, rng)


def weak_strong_pair(
    img: np.ndarray,
    rng: np.random.Generator,
    weak: AugmentPolicy | None = None,
    strong: AugmentPolicy | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """A weakly and a strongly augmented view of one image."""
    weak = weak or weak_policy()
    strong = strong or strong_policy(img.shape[0])
    return apply(weak, img, rng), apply(strong, img, rng)
