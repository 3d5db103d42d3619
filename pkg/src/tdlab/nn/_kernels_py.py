"""Pure-numpy twin of the compiled MLP kernels (same signatures, same layout)."""

import numpy as np


def _layers(values, sizes):
    off = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        W = values[off:off + n_out * n_in].reshape(n_out, n_in)
        off += n_out * n_in
        b = values[off:off + n_out]
        off += n_out
        yield W, b


def forward(values, sizes, X):
    layers = list(_layers(values, sizes))
    a = np.asarray(X, dtype=np.float64)
    for k, (W, b) in enumerate(layers):
        a = a @ W.T + b
        if k < len(layers) - 1:
            a = np.maximum(a, 0.0)
    return a


def backward(values, sizes, X, G):
    layers = list(_layers(values, sizes))
    acts = [np.asarray(X, dtype=np.float64)]
    for k, (W, b) in enumerate(layers):
        z = acts[-1] @ W.T + b
        if k < len(layers) - 1:
            z = np.maximum(z, 0.0)
        acts.append(z)
    d = np.asarray(G, dtype=np.float64)
    grads = []
    for k in range(len(layers) - 1, -1, -1):
        W, _ = layers[k]
        grads.append((d.sum(axis=0), (d.T @ acts[k]).ravel()))
        if k > 0:
            d = (d @ W) * (acts[k] > 0.0)
    flat = []
    for gb, gW in reversed(grads):
        flat.append(gW)
        flat.append(gb)
    return np.concatenate(flat)
