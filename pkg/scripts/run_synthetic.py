"""Run the experiment grid on the bundled synthetic fixture and write the report bundle."""

import argparse
import os
import time

from emostock import experiment as ex
from emostock import synthetic


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results/synthetic")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--only", nargs="+", choices=list(ex.MODES))
    args = p.parse_args()

    configs = ex.load_config(os.path.join(synthetic.bundled_dir(), "config.json"))
    if args.only:
        configs = [c for c in configs if c.mode in args.only]
    for c in configs:
        if args.repetitions:
            c.repetitions = args.repetitions
        if args.epochs:
            c.model = {**c.model, "epochs": args.epochs}

    start = time.perf_counter()
    suite = ex.run_suite(configs)
    ex.write_bundle(suite, args.out)
    print(ex.emit_report(suite, "md").decode())
    print(f"{len(configs)} configs in {time.perf_counter() - start:.0f}s, bundle in {args.out}")


if __name__ == "__main__":
    main()
