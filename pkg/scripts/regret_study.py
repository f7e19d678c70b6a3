"""Share of the oracle's welfare gain over random allocation that a trained
tree recovers on synthetic data with a planted rule."""
import argparse

import numpy as np

from policytree.evaluation import random_welfare_expectation
from policytree.search import SearchConfig, search
from policytree.synthdata import GeneratorSpec, generate
from policytree.tree import tree_welfare


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument('--seeds', type=int, default=20)
    ap.add_argument('--n', type=int, default=5000)
    ap.add_argument('--d', type=int, default=3)
    ap.add_argument('--depth', type=int, default=2)
    ap.add_argument('--signal', type=float, default=1.0)
    ap.add_argument('--noise-sd', type=float, default=0.5)
    ap.add_argument('--features',
                    default='continuous,ordered,categorical,continuous')
    ap.add_argument('--approx', type=int, default=100)
    args = ap.parse_args()

    ratios = []
    print('seed  ratio   seconds')
    for seed in range(args.seeds):
        data, oracle = generate(GeneratorSpec(
            n=args.n, d=args.d, features=tuple(args.features.split(',')),
            planted_depth=args.depth, signal=args.signal,
            noise_sd=args.noise_sd, seed=seed))
        res = search(data, SearchConfig(depth=args.depth,
                                        approx_points=args.approx))
        w_rand = random_welfare_expectation(data.scores,
                                            np.full(data.d, 1 / data.d))
        w_oracle = tree_welfare(oracle, data) / data.n
        ratio = (res.reward / data.n - w_rand) / (w_oracle - w_rand)
        ratios.append(ratio)
        print(f'{seed:4d}  {ratio:.4f}  {res.wall_time:7.2f}')
    print(f'mean {np.mean(ratios):.4f}  min {np.min(ratios):.4f}')


if __name__ == '__main__':
    main()
