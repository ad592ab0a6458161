#!/usr/bin/env python3
"""Convert a NumPy volume (.npy, z-major: arr[z, y, x]) into the raw f32 +
JSON sidecar layout that gpile loads.

Values are rescaled to [0, 1] unless --no-normalize is given.

    convert_volume.py stack.npy out/volume.raw --spacing 0.5 0.5 2.0
"""

import argparse
import json
import pathlib

import numpy as np


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src", help="input .npy volume, indexed [z, y, x]")
    ap.add_argument("dst", help="output .raw path (sidecar written next to it)")
    ap.add_argument("--spacing", nargs=3, type=float, default=[1.0, 1.0, 1.0],
                    metavar=("SX", "SY", "SZ"))
    ap.add_argument("--origin", nargs=3, type=float, default=[0.0, 0.0, 0.0],
                    metavar=("OX", "OY", "OZ"))
    ap.add_argument("--no-normalize", action="store_true",
                    help="fail on values outside [0, 1] instead of rescaling")
    args = ap.parse_args()

    vol = np.load(args.src)
    if vol.ndim != 3:
        raise SystemExit(f"expected a 3-d array, got shape {vol.shape}")
    vol = vol.astype(np.float64)
    if not np.isfinite(vol).all():
        raise SystemExit("volume contains non-finite samples")

    if args.no_normalize:
        if vol.min() < 0.0 or vol.max() > 1.0:
            raise SystemExit("values outside [0, 1]; drop --no-normalize to rescale")
    else:
        lo, hi = vol.min(), vol.max()
        vol = (vol - lo) / (hi - lo) if hi > lo else np.zeros_like(vol)

    dst = pathlib.Path(args.dst)
    dst.parent.mkdir(parents=True, exist_ok=True)
    vol.astype("<f4").tofile(dst)

    z, y, x = vol.shape
    sidecar = {"dims": [x, y, z], "spacing": args.spacing, "origin": args.origin}
    with open(f"{dst}.json", "w") as f:
        json.dump(sidecar, f, indent=2)
    print(f"wrote {x}x{y}x{z} volume to {dst}")


if __name__ == "__main__":
    main()
