# relit is licensed under the Apache License, Version 2.0.
# SPDX: Apache-2.0
"""Physically based G-buffer relighting and demonstration augmentation."""

from _relit import (  # noqa: F401
    IoError,
    ValidationError,
    __version__,
    background,
    degrade,
    depth_to_mesh,
    estimate_env,
    psnr,
    quotient_propagate,
    refine,
    relight,
    sample_jitter,
    srgb_decode,
    srgb_encode,
    ssim,
    temporal_ssim,
)
