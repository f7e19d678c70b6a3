"""Wall time and training welfare of optimal versus sequential trees."""
import argparse

from policytree.errors import SearchTimeout
from policytree.search import SearchConfig, search
from policytree.sequential import parse_stages, search_sequential
from policytree.synthdata import random_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument('--n', type=int, default=5000)
    ap.add_argument('--d', type=int, default=3)
    ap.add_argument('--approx', type=int, default=100)
    ap.add_argument('--stages', default='2,2+1,3,2+2,4')
    ap.add_argument('--time-limit', type=float, default=120.0,
                    help='seconds allowed per run')
    ap.add_argument('--threads', type=int, default=1)
    ap.add_argument('--seed', type=int, default=7)
    args = ap.parse_args()

    data = random_instance(args.n, args.d, ('continuous',) * 3
                           + ('ordered', 'categorical'), args.seed,
                           n_levels=20, n_categories=6)
    cfg = SearchConfig(approx_points=args.approx, threads=args.threads)
    print(f'{"stages":>8}  {"seconds":>9}  {"mean welfare":>12}')
    for text in args.stages.split(','):
        first, extra = parse_stages(text)
        try:
            if extra:
                res = search_sequential(data, first, extra, cfg)
            else:
                res = search(data, cfg.replace(depth=first),
                             time_limit=args.time_limit)
        except SearchTimeout:
            print(f'{text:>8}  {">" + str(args.time_limit):>9}  {"-":>12}')
            continue
        print(f'{text:>8}  {res.wall_time:9.2f}  {res.mean_reward:12.5f}')


if __name__ == '__main__':
    main()
