"""Regenerate the synthetic fixture (prices, tweets, toy lexicons, stub rules, config)."""

import argparse

from emostock import synthetic


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default=synthetic.bundled_dir())
    p.add_argument("--days", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    args = p.parse_args()
    classes = synthetic.write(args.out, n_days=args.days, seed=args.seed)
    counts = {k: classes.count(k) for k in sorted(set(classes))}
    print(f"wrote fixture to {args.out}; planted class counts {counts}")


if __name__ == "__main__":
    main()
