"""Cluster the most anomalous rows of a two-type synthetic set by their signatures.

Reports cluster purity and the triage ratio (selected rows per row of the
smallest cluster) over a range of seeds.

    python3 scripts/triage_demo.py --seeds 20 --noise 200
"""

import argparse

import numpy as np

from sigforest import ClusterConfig, ForestConfig, cluster_signatures, fit
from sigforest.synthetic import two_type_anomalies


def purity(assignments, labels) -> float:
    total = 0
    for c in np.unique(assignments):
        total += np.bincount(labels[assignments == c]).max()
    return total / len(labels)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--nominal", type=int, default=400)
    parser.add_argument("--noise", type=int, default=20)
    parser.add_argument("--point", type=int, default=20)
    parser.add_argument("--k", type=int, default=2)
    parser.add_argument("--top-fraction", type=float, default=0.10)
    parser.add_argument("--trees", type=int, default=500)
    args = parser.parse_args()

    ratios, purities = [], []
    for seed in range(args.seeds):
        X, labels = two_type_anomalies(seed, args.nominal, args.noise, args.point)
        model = fit(X, ForestConfig(256, args.trees, seed))
        report = cluster_signatures(model, X, ClusterConfig(k=args.k, top_fraction=args.top_fraction, seed=seed))
        p = purity(report.assignments, labels[report.selected_positions])
        ratios.append(report.triage_ratio)
        purities.append(p)
        print(f"seed {seed:3d}  selected {len(report.selected_ids):4d}  sizes {report.sizes.tolist()}  purity {p:.3f}  ratio {report.triage_ratio:.2f}")
    print(f"median purity {np.median(purities):.3f}, median triage ratio {np.median(ratios):.2f}")


if __name__ == "__main__":
    main()
