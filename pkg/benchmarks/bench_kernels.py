"""Compare the compiled and pure-Python kernels on a search-sized workload.

    python benchmarks/bench_kernels.py [--rows 10000] [--inputs 1000] [--repeat 5]

The default shape is one fitness evaluation of a 2 x 32 node network over
1000 input columns and a 10,000-row scrambled sample.
"""
import argparse
import timeit

import numpy as np

from hyperocc import kernels
from hyperocc.search import ParamLayout, decode_compiled
from hyperocc.search.ga import initial_vector


def workload(n_inputs, n_rows, layers, seed):
    rng = np.random.default_rng(seed)
    layout = ParamLayout(n_inputs, layers)
    index, ptr, quorum = decode_compiled(initial_vector(layout, rng, 4.0), layout)
    inputs = np.ascontiguousarray(rng.integers(0, 2, (n_inputs, n_rows)), dtype=np.uint8)
    scores = rng.random(len(quorum))
    order = np.argsort(-scores).astype(np.int64)
    return inputs, index, ptr, quorum, np.ascontiguousarray(scores[order]), order


def bench(mod, case, top_h, repeat):
    inputs, index, ptr, quorum, hs, order = case
    nodes = np.zeros((len(quorum), inputs.shape[1]), dtype=np.uint8)

    def prop():
        mod.propagate_nodes(inputs, nodes, index, ptr, quorum)

    prop()

    def cov():
        mod.coverage_d(nodes, hs, order, top_h)

    t_prop = min(timeit.repeat(prop, number=1, repeat=repeat))
    t_cov = min(timeit.repeat(cov, number=1, repeat=repeat))
    return t_prop, t_cov, nodes.copy()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=10_000)
    ap.add_argument("--inputs", type=int, default=1000)
    ap.add_argument("--layers", default="32,32")
    ap.add_argument("--top-h", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    case = workload(args.inputs, args.rows, [int(x) for x in args.layers.split(",")], args.seed)
    print(f"inputs={args.inputs} rows={args.rows} layers={args.layers} edges={len(case[1])}")
    print(f"{'backend':<8} {'propagate ms':>13} {'coverage ms':>12}")
    results = {}
    for name, mod in kernels.backends().items():
        t_prop, t_cov, nodes = bench(mod, case, args.top_h, args.repeat)
        results[name] = (t_prop, t_cov, nodes)
        print(f"{name:<8} {t_prop * 1e3:13.3f} {t_cov * 1e3:12.3f}")
    if len(results) == 2:
        (pp, pc, pn), (cp, cc, cn) = results["python"], results["cython"]
        assert np.array_equal(pn, cn), "backends disagree"
        print(f"speedup  {pp / cp:13.1f}x {pc / cc:11.1f}x")


if __name__ == "__main__":
    main()
