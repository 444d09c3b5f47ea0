"""Compare Shannon, Renyi, and Tsallis entropy on simple distributions.

Shows the closed forms on uniform distributions, the alpha -> 1 limit,
and generalized mutual information on a noisy scene pair.
"""

import numpy as np

from entrobench import (
    SHANNON,
    EntropyKind,
    entropy,
    joint_histogram,
    mutual_information,
    normalize,
)
from entrobench.scenes import named_scene


def label(kd):
    return kd.name if kd.param is None else f"{kd.name}:{kd.param:g}"


def main():
    rng = np.random.default_rng(0)

    print("== entropy of three 8-bin distributions (nats) ==")
    peaked = normalize(np.array([100, 1, 1, 1, 1, 1, 1, 1], dtype=float))
    bimodal = normalize(np.array([40, 5, 1, 1, 1, 1, 5, 40], dtype=float))
    uniform = normalize(np.ones(8))
    kinds = [SHANNON, EntropyKind.renyi(2.0), EntropyKind.tsallis(2.0)]
    print(f"{'distribution':<12}" + "".join(f"{label(kd):>14}" for kd in kinds))
    for name, p in [("peaked", peaked), ("bimodal", bimodal),
                    ("uniform", uniform)]:
        vals = "".join(f"{entropy(p, kd):>14.6f}" for kd in kinds)
        print(f"{name:<12}{vals}")
    # uniform closed forms: ln 8 for Shannon and Renyi, (1 - 1/8) for Tsallis
    print(f"ln 8 = {np.log(8):.6f}, 1 - 1/8 = {1 - 1 / 8:.6f}")

    print()
    print("== Renyi alpha -> 1 recovers Shannon ==")
    h_sh = entropy(bimodal, SHANNON)
    for alpha in (2.0, 1.5, 1.1, 1.01, 1.001):
        h_r = entropy(bimodal, EntropyKind.renyi(alpha))
        print(f"alpha={alpha:<6} H={h_r:.6f}  |H - Shannon|={abs(h_r - h_sh):.2e}")

    print()
    print("== mutual information: shared structure vs independent noise ==")
    img = named_scene("five-region", 96, 96, noise=8.0, seed=1)[0]
    noisy = np.clip(img.astype(float) + rng.normal(0, 12, img.shape),
                    0, 255).astype(np.uint8)
    indep = rng.integers(0, 256, img.shape).astype(np.uint8)
    for kd in kinds:
        mi_same = mutual_information(joint_histogram(img, noisy), kd)
        mi_none = mutual_information(joint_histogram(img, indep), kd)
        print(f"{label(kd):<12} MI(img, noisy copy)={mi_same:8.4f}"
              f"   MI(img, noise)={mi_none:8.4f}")
    print("Shannon MI separates shared structure cleanly; the generalized")
    print("H(A) + H(B) - H(A,B) forms keep no such ordering guarantee.")


if __name__ == "__main__":
    main()
