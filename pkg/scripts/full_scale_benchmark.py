"""Time fit, scoring and signatures at full scale (2485 x 578, n=1024, T=3000)."""

import argparse
import time

import numpy as np

from sigforest import ForestConfig, fit, score_samples, signature_batch


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=2485)
    parser.add_argument("--bins", type=int, default=289)
    parser.add_argument("--subsample", type=int, default=1024)
    parser.add_argument("--trees", type=int, default=3000)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    X = np.hstack([rng.normal(1.0, 0.2, size=(args.rows, args.bins)), np.abs(rng.normal(0.1, 0.02, size=(args.rows, args.bins)))])

    t0 = time.perf_counter()
    model = fit(X, ForestConfig(args.subsample, args.trees, 0), n_jobs=args.threads)
    t1 = time.perf_counter()
    score_samples(model, X, n_jobs=args.threads)
    t2 = time.perf_counter()
    signature_batch(model, X, n_jobs=args.threads)
    t3 = time.perf_counter()
    print(f"fit {t1 - t0:.1f}s  score {t2 - t1:.1f}s  signatures {t3 - t2:.1f}s  total {t3 - t0:.1f}s")


if __name__ == "__main__":
    main()
