#!/usr/bin/env python3
"""How the three similarity metrics react to growing distortion.

Builds one random texture, corrupts it with increasing amounts of noise
and of blur, and prints all three metric values side by side. PSNR falls
without bound (until the cap), SSIM and HaarPSI saturate toward 0 and
stay inside [0, 1].
"""

import numpy as np

from mapqa.metrics import haarpsi, psnr, ssim
from mapqa.rng import Rng, derive


def smooth(img, passes=3):
    # cheap separable box blur, edge-replicated
    out = img.copy()
    for _ in range(passes):
        p = np.pad(out, 1, mode="edge")
        out = (
            p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
            + p[1:-1, 1:-1]
        ) / 5.0
    return out


def main():
    rng = Rng(derive(7, "metric-demo"))
    base = smooth(rng.uniform((64, 64)))
    base = (base - base.min()) / (base.max() - base.min())

    print("noise (std grows)")
    print(f"{'std':>6s} {'psnr':>8s} {'ssim':>8s} {'haarpsi':>8s}")
    for std in (0.0, 0.02, 0.05, 0.1, 0.2, 0.5):
        noisy = np.clip(base + std * rng.normal(base.shape), 0.0, 1.0)
        print(
            f"{std:6.2f} {psnr(base, noisy, 1.0):8.2f} "
            f"{ssim(base, noisy, 1.0):8.4f} {haarpsi(base, noisy, 1.0):8.4f}"
        )

    print()
    print("blur (passes grow)")
    print(f"{'n':>6s} {'psnr':>8s} {'ssim':>8s} {'haarpsi':>8s}")
    for passes in (1, 2, 4, 8, 16):
        blurred = smooth(base, passes)
        print(
            f"{passes:6d} {psnr(base, blurred, 1.0):8.2f} "
            f"{ssim(base, blurred, 1.0):8.4f} {haarpsi(base, blurred, 1.0):8.4f}"
        )


if __name__ == "__main__":
    main()
