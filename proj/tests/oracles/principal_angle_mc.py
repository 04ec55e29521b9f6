"""Monte-Carlo reference values for Haar-random subspace pairs.

Independent of the C++ implementation: uses numpy's Gaussian sampler,
LAPACK QR and LAPACK SVD. The printed constants are frozen into
tests/test_anglelab.cpp and tests/acceptance.cpp.
"""
import numpy as np


def haar(rng, d, n):
    q, r = np.linalg.qr(rng.standard_normal((d, n)))
    return q * np.sign(np.diag(r))


def cosines(rng, d, n):
    return np.linalg.svd(haar(rng, d, n).T @ haar(rng, d, n), compute_uv=False)


def main():
    rng = np.random.default_rng(20261016)

    s1 = np.array([cosines(rng, 256, 8)[0] for _ in range(40000)])
    print(f"d=256 n=8  E[sigma_1] = {s1.mean():.6f}  sd = {s1.std(ddof=1):.6f}"
          f"  se = {s1.std(ddof=1) / np.sqrt(len(s1)):.2e}")

    t1 = np.array([np.arccos(min(1.0, cosines(rng, 1024, 4)[0])) for _ in range(40000)])
    print(f"d=1024 n=4 P[theta_1 >= pi/6] = {(t1 >= np.pi / 6).mean():.6f}"
          f"  min theta_1 = {t1.min():.6f}")

    t512 = np.array([np.arccos(min(1.0, cosines(rng, 512, 8)[0])) for _ in range(60000)])
    for q in (0.001, 0.002, 0.01, 0.5):
        print(f"d=512 n=8 quantile {q:.3f} of theta_1 = {np.quantile(t512, q):.6f}")


if __name__ == "__main__":
    main()
