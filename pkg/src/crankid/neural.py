"""One-hidden-layer ReLU network that absorbs the unmodelled load force.

The net is deliberately small: z = relu(q_scaled @ w_h + b_h) @ w_o + b_o,
where q_scaled divides each input column by a fixed scale (population std of
the training inputs, frozen before training so train/validation see the same
normalization).  Weights start uniform in +-sqrt(6/fan_in), biases at zero.
"""

from dataclasses import dataclass, replace

import numpy as np


class DegenerateInput(Exception):
    """An input channel is (numerically) constant; its scale is undefined."""


class ShapeMismatch(Exception):
    pass


SCALE_FLOOR = 1e-12


@dataclass
class NetParams:
    w_h: np.ndarray      # (n_i, n_h)
    b_h: np.ndarray      # (n_h,)
    w_o: np.ndarray      # (n_h, n_o)
    b_o: np.ndarray      # (n_o,)
    sigma: np.ndarray    # (n_i,) frozen input scales

    @property
    def n_inputs(self):
        return self.w_h.shape[0]

    @property
    def n_hidden(self):
        return self.w_h.shape[1]

    def copy(self):
        return NetParams(*(np.array(a, copy=True) for a in
                           (self.w_h, self.b_h, self.w_o, self.b_o, self.sigma)))

    def to_dict(self):
        return {
            "w_h": self.w_h.tolist(), "b_h": self.b_h.tolist(),
            "w_o": self.w_o.tolist(), "b_o": self.b_o.tolist(),
            "sigma": self.sigma.tolist(),
        }

    @staticmethod
    def from_dict(d):
        return NetParams(*(np.asarray(d[k], dtype=np.float64)
                           for k in ("w_h", "b_h", "w_o", "b_o", "sigma")))


def init(n_inputs, n_hidden=32, n_outputs=1, seed=0):
    """Fresh weights; the draw order (w_h then w_o) is part of the contract
    so a seed pins the whole initialization."""
    rng = np.random.default_rng(seed)
    lim_h = np.sqrt(6.0 / n_inputs)
    lim_o = np.sqrt(6.0 / n_hidden)
    return NetParams(
        w_h=rng.uniform(-lim_h, lim_h, size=(n_inputs, n_hidden)),
        b_h=np.zeros(n_hidden),
        w_o=rng.uniform(-lim_o, lim_o, size=(n_hidden, n_outputs)),
        b_o=np.zeros(n_outputs),
        sigma=np.ones(n_inputs),
    )


def fit_input_scaling(net, inputs):
    """Freeze per-channel scales to the population std of `inputs` (K, n_i)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != net.n_inputs:
        raise ShapeMismatch("expected (K, %d) inputs, got %s"
                            % (net.n_inputs, inputs.shape))
    sigma = inputs.std(axis=0)
    if np.any(sigma < SCALE_FLOOR):
        ch = int(np.argmin(sigma))
        raise DegenerateInput("input channel %d has std %.3e" % (ch, sigma[ch]))
    return replace(net, sigma=sigma)


def eval_net(net, q):
    """Network output for a batch of inputs q (K, n_i) -> (K, n_o)."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != net.n_inputs:
        raise ShapeMismatch("expected (K, %d) inputs, got %s"
                            % (net.n_inputs, q.shape))
    h = np.maximum((q / net.sigma) @ net.w_h + net.b_h, 0.0)
    return h @ net.w_o + net.b_o


def eval_taped(tape, q_cols, params, sigma):
    """Taped network value from a list of (B, 1) column Values.

    params maps 'w_h', 'b_h', 'w_o', 'b_o' to tape Values; sigma is the
    frozen scale vector (plain array, becomes a constant).  The input matrix
    is assembled with basis-row matmuls so only listed tape ops appear.
    """
    n_i = len(q_cols)
    q = None
    for j, col in enumerate(q_cols):
        basis = np.zeros((1, n_i))
        basis[0, j] = 1.0
        term = col @ tape.constant(basis)
        q = term if q is None else q + term
    qs = q * tape.constant(1.0 / np.asarray(sigma, dtype=np.float64))
    h = (qs @ params["w_h"] + params["b_h"]).relu()
    return h @ params["w_o"] + params["b_o"]
