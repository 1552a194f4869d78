# Copyright 2026 The bitedit Authors
# SPDX-License-Identifier: Apache-2.0
"""Bitwise multi-scale token editing: Python bindings of the C++ core."""

from bitedit._core import (
    CodecSettings,
    decode_image,
    dequantize,
    encode_image,
    gaussian_kernel,
    linear_kernel,
    load_pgm,
    load_pyramid,
    manhattan_distance_field,
    mse,
    psnr,
    quantize_bsq,
    reconstruct,
    run_cli,
    save_pgm,
    save_pyramid,
    ssim,
    tokenize,
)

__all__ = [
    "CodecSettings",
    "decode_image",
    "dequantize",
    "encode_image",
    "gaussian_kernel",
    "linear_kernel",
    "load_pgm",
    "load_pyramid",
    "manhattan_distance_field",
    "mse",
    "psnr",
    "quantize_bsq",
    "reconstruct",
    "run_cli",
    "save_pgm",
    "save_pyramid",
    "ssim",
    "tokenize",
]
