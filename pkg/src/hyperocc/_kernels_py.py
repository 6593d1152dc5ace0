"""Pure numpy versions of the compiled kernels, same signatures and results."""
import numpy as np


def propagate_nodes(inputs, nodes, input_index, input_ptr, quorum):
    n_in = inputs.shape[0]
    n_rows = nodes.shape[1]
    for n in range(len(quorum)):
        counts = np.zeros(n_rows, dtype=np.int32)
        for src in input_index[input_ptr[n]:input_ptr[n + 1]]:
            counts += inputs[src] if src < n_in else nodes[src - n_in]
        nodes[n] = counts >= quorum[n]


def coverage_d(act, hoc_sorted, order, top_h):
    n_rows = act.shape[1]
    total = np.zeros(n_rows, dtype=np.float64)
    taken = np.zeros(n_rows, dtype=np.int64)
    for node, h in zip(order, hoc_sorted):
        if h <= 0.0:
            break
        hit = (act[node] != 0) & (taken < top_h)
        total[hit] += h
        taken[hit] += 1
    return np.sqrt(total / top_h)
