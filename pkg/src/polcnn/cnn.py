"""
Compact adaptive 2-D CNN.

A hidden CNN neuron convolves every previous-layer output map with its own
kernel ("valid" mode, no zero padding), sums them with a bias, applies the
activation and then average-pools the result. The last CNN layer always
pools over its entire map so it emits one scalar per neuron, whatever the
window size; fully-connected layers follow. Training minimises the summed
squared error against +1/-1 one-hot targets with per-sample gradient steps
and a multiplicative learning-rate schedule driven by the epoch train MSE.

Everything runs in float64. Internally maps are laid out
``(batch, channel, rows, cols)``; patches come in as ``(N, N, C)``.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg.blas import dger

from .errors import DataError, TrainingDiverged
from .rng import make_rng

ACTIVATIONS = ("tanh", "identity")


@dataclass(frozen=True)
class CnnLayer:
    neurons: int
    kernel: tuple = (3, 3)
    subsample: tuple = (2, 2)

    def __post_init__(self):
        object.__setattr__(self, "kernel", tuple(int(k) for k in self.kernel))
        object.__setattr__(self, "subsample", tuple(int(s) for s in self.subsample))
        if self.neurons < 1 or min(self.kernel) < 1 or min(self.subsample) < 1:
            raise DataError(f"invalid CNN layer {self}")


@dataclass(frozen=True)
class NetworkConfig:
    """Network topology.

    ``mlp_layers`` lists the hidden fully-connected widths; the output layer
    of ``num_classes`` neurons is implied.
    """

    input_channels: int = 3
    window: int = 7
    cnn_layers: tuple = (CnnLayer(20),)
    mlp_layers: tuple = (10,)
    num_classes: int = 4
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        layers = tuple(
            l if isinstance(l, CnnLayer) else CnnLayer(*l) for l in self.cnn_layers
        )
        object.__setattr__(self, "cnn_layers", layers)
        object.__setattr__(self, "mlp_layers", tuple(int(n) for n in self.mlp_layers))
        if self.input_channels < 1:
            raise DataError("input_channels must be >= 1")
        if self.window < 1 or self.window % 2 == 0:
            raise DataError(f"window must be a positive odd integer, got {self.window}")
        if not layers:
            raise DataError("at least one CNN layer is required")
        if not self.mlp_layers or min(self.mlp_layers) < 1:
            raise DataError("at least one hidden MLP layer is required")
        if self.num_classes < 2:
            raise DataError("num_classes must be >= 2")
        if self.activation not in ACTIVATIONS:
            raise DataError(f"unknown activation {self.activation!r}")
        self.map_sizes()

    def map_sizes(self):
        """Per CNN layer: ``(conv_shape, pooled_shape, pool_factors)``.

        Raises DataError when a layer's map would vanish.
        """
        h = w = self.window
        sizes = []
        last = len(self.cnn_layers) - 1
        for i, layer in enumerate(self.cnn_layers):
            kx, ky = layer.kernel
            ch, cw = h - kx + 1, w - ky + 1
            if ch < 1 or cw < 1:
                raise DataError(
                    f"CNN layer {i + 1}: {kx}x{ky} kernel does not fit a {h}x{w} map"
                )
            ss = (ch, cw) if i == last else layer.subsample
            if ss[0] > ch or ss[1] > cw:
                raise DataError(
                    f"CNN layer {i + 1}: subsampling {ss} exceeds the {ch}x{cw} map"
                )
            h, w = ch // ss[0], cw // ss[1]
            sizes.append(((ch, cw), (h, w), ss))
        return sizes

    def layer_shapes(self):
        """Parameter shapes ``(weights, bias)`` for every layer, in order."""
        shapes = []
        n_in = self.input_channels
        for layer in self.cnn_layers:
            shapes.append(((layer.neurons, n_in) + layer.kernel, (layer.neurons,)))
            n_in = layer.neurons
        for n_out in self.mlp_layers + (self.num_classes,):
            shapes.append(((n_out, n_in), (n_out,)))
            n_in = n_out
        return shapes

    def scaled(self, m=1, n=1):
        """Multiply hidden neuron counts by ``m`` and CNN depth by ``n``."""
        cnn = tuple(
            replace(l, neurons=l.neurons * m) for _ in range(n) for l in self.cnn_layers
        )
        mlp = tuple(k * m for k in self.mlp_layers)
        return replace(self, cnn_layers=cnn, mlp_layers=mlp)


@dataclass(frozen=True)
class TrainConfig:
    max_iterations: int = 400
    initial_lr: float = 0.05
    lr_up: float = 1.05
    lr_down: float = 0.70
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise DataError("max_iterations must be >= 1")
        if not 0 < self.lr_down < 1 < self.lr_up:
            raise DataError("need 0 < lr_down < 1 < lr_up")
        if not self.initial_lr > 0:
            raise DataError("initial_lr must be positive")


@dataclass
class TrainHistory:
    initial_mse: float = float("nan")
    train_mse: list = field(default_factory=list)
    learning_rate: list = field(default_factory=list)
    next_learning_rate: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)

    @property
    def final_epoch(self):
        return len(self.train_mse)

    def rows(self):
        for i in range(self.final_epoch):
            val = self.val_accuracy[i] if self.val_accuracy else float("nan")
            yield (i + 1, self.train_mse[i], self.learning_rate[i], self.next_learning_rate[i], val)


class CompactCnn:
    """Weights, biases and the metadata needed to apply them to new images.

    ``params`` is a list of ``(weights, bias)`` pairs, CNN layers first.
    CNN weights have shape ``(out, in, kx, ky)``; MLP weights ``(out, in)``.
    """

    def __init__(self, config, params, channel_names=None, scaling=None, class_names=None):
        self.config = config
        self.class_names = tuple(class_names) if class_names is not None else None
        self.params = [(np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64))
                       for w, b in params]
        self.channel_names = tuple(channel_names) if channel_names is not None else None
        self.scaling = tuple(tuple(p) for p in scaling) if scaling is not None else None
        expected = config.layer_shapes()
        if len(expected) != len(self.params):
            raise DataError(f"expected {len(expected)} layers, got {len(self.params)}")
        for i, ((ws, bs), (w, b)) in enumerate(zip(expected, self.params)):
            if w.shape != ws or b.shape != bs:
                raise DataError(
                    f"layer {i + 1}: parameter shapes {w.shape}/{b.shape}, expected {ws}/{bs}"
                )
        if not all(np.all(np.isfinite(a)) for pair in self.params for a in pair):
            raise DataError("non-finite network parameter")

    def copy(self):
        return CompactCnn(self.config, [(w.copy(), b.copy()) for w, b in self.params],
                          self.channel_names, self.scaling, self.class_names)

    def flat_parameters(self):
        return np.concatenate([a.ravel() for pair in self.params for a in pair])

    def set_flat_parameters(self, theta):
        theta = np.array(theta, dtype=np.float64)
        pos = 0
        params = []
        for w, b in self.params:
            nw, nb = w.size, b.size
            params.append((theta[pos:pos + nw].reshape(w.shape),
                           theta[pos + nw:pos + nw + nb].reshape(b.shape)))
            pos += nw + nb
        if pos != theta.size:
            raise DataError(f"expected {pos} parameters, got {theta.size}")
        self.params = params

    @property
    def n_parameters(self):
        return sum(w.size + b.size for w, b in self.params)

    def __repr__(self):
        return f"CompactCnn({self.config!r}, {self.n_parameters} parameters)"


def init_weights(config):
    """Uniform [-0.1, 0.1] initialisation drawn from ``config.seed``."""
    rng = make_rng(config.seed)
    params = [(rng.uniform(-0.1, 0.1, ws), rng.uniform(-0.1, 0.1, bs))
              for ws, bs in config.layer_shapes()]
    return CompactCnn(config, params)


# -- primitives ---------------------------------------------------------------

def valid_conv2d(kernel, x):
    """Unpadded 2-D cross-correlation of one map with one kernel."""
    kernel = np.asarray(kernel, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if kernel.shape[0] > x.shape[0] or kernel.shape[1] > x.shape[1]:
        raise DataError(f"kernel {kernel.shape} larger than input {x.shape}")
    win = sliding_window_view(x, kernel.shape)
    return np.tensordot(win, kernel, axes=([2, 3], [0, 1]))


def subsample(m, ssx, ssy):
    """Average-pool non-overlapping ``ssx x ssy`` blocks; ragged edges drop."""
    m = np.asarray(m, dtype=np.float64)
    if ssx < 1 or ssy < 1:
        raise DataError("subsampling factors must be >= 1")
    if ssx > m.shape[0] or ssy > m.shape[1]:
        raise DataError(f"subsampling ({ssx}, {ssy}) exceeds map {m.shape}")
    return _pool(m[None, None], (ssx, ssy))[0, 0]


def _pool(y, ss):
    sx, sy = ss
    b, c, h, w = y.shape
    hb, wb = h // sx, w // sy
    return y[:, :, :hb * sx, :wb * sy].reshape(b, c, hb, sx, wb, sy).mean(axis=(3, 5))


def _unpool(d, ss, shape):
    sx, sy = ss
    b, c, hb, wb = d.shape
    out = np.zeros(shape)
    up = np.broadcast_to(d[:, :, :, None, :, None] / (sx * sy), (b, c, hb, sx, wb, sy))
    out[:, :, :hb * sx, :wb * sy] = up.reshape(b, c, hb * sx, wb * sy)
    return out


def _conv_forward(s, w, bias):
    kx, ky = w.shape[2:]
    win = sliding_window_view(s, (kx, ky), axis=(2, 3))
    x = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))
    return x.transpose(0, 3, 1, 2) + bias[None, :, None, None]


def _conv_backward_input(dx, w):
    # adjoint of the valid correlation: full correlation with the flipped kernel
    kx, ky = w.shape[2:]
    padded = np.pad(dx, ((0, 0), (0, 0), (kx - 1, kx - 1), (ky - 1, ky - 1)))
    win = sliding_window_view(padded, (kx, ky), axis=(2, 3))
    ds = np.tensordot(win, w[:, :, ::-1, ::-1], axes=([1, 4, 5], [0, 2, 3]))
    return ds.transpose(0, 3, 1, 2)


def _activate(x, kind):
    return np.tanh(x) if kind == "tanh" else x


def _activation_grad(y, kind):
    return 1.0 - y * y if kind == "tanh" else np.ones_like(y)


def _as_batch(net, patches):
    p = np.asarray(patches, dtype=np.float64)
    single = p.ndim == 3
    if single:
        p = p[None]
    cfg = net.config
    expected = (cfg.window, cfg.window, cfg.input_channels)
    if p.ndim != 4 or p.shape[1:] != expected:
        raise DataError(f"patch shape {p.shape[-3:]} does not match network input {expected}")
    return np.ascontiguousarray(p.transpose(0, 3, 1, 2)), single


# -- forward / backward -------------------------------------------------------

def _forward(net, s):
    cfg = net.config
    act = cfg.activation
    n_cnn = len(cfg.cnn_layers)
    trace = [{"s": s}]
    for i, (_, _, ss) in enumerate(cfg.map_sizes()):
        w, b = net.params[i]
        x = _conv_forward(s, w, b)
        y = _activate(x, act)
        s = _pool(y, ss)
        trace.append({"x": x, "y": y, "s": s, "ss": ss})
    s = s.reshape(s.shape[0], -1)
    for w, b in net.params[n_cnn:]:
        x = s @ w.T + b
        s = _activate(x, act)
        trace.append({"x": x, "y": s, "s": s})
    return s, trace


def forward(net, patch):
    """Class scores for one ``(N, N, C)`` patch or a ``(B, N, N, C)`` batch.

    Returns ``(scores, trace)``; the trace holds each layer's pre-activation
    ``x``, activation ``y`` and pooled output ``s`` for back-propagation.
    """
    s, single = _as_batch(net, patch)
    scores, trace = _forward(net, s)
    return (scores[0] if single else scores), trace


def encode_target(target_class, num_classes):
    t = np.full(num_classes, -1.0)
    t[target_class] = 1.0
    return t


def _targets(classes, num_classes):
    classes = np.atleast_1d(np.asarray(classes))
    if classes.size and (classes.min() < 0 or classes.max() >= num_classes):
        raise DataError(f"class index out of range [0, {num_classes})")
    t = np.full((classes.size, num_classes), -1.0)
    t[np.arange(classes.size), classes] = 1.0
    return t


def mse_loss(scores, target_class):
    """Summed squared error against the +1/-1 encoding of ``target_class``."""
    scores = np.asarray(scores, dtype=np.float64)
    t = _targets(target_class, scores.shape[-1])
    return float(np.sum((scores.reshape(t.shape) - t) ** 2))


def _backward(net, trace, scores, targets):
    cfg = net.config
    act = cfg.activation
    n_cnn = len(cfg.cnn_layers)
    grads = [None] * len(net.params)
    delta = 2.0 * (scores - targets) * _activation_grad(scores, act)
    for li in range(len(net.params) - 1, n_cnn - 1, -1):
        w, _ = net.params[li]
        s_prev = trace[li]["s"]
        s_prev = s_prev.reshape(s_prev.shape[0], -1)
        grads[li] = (delta.T @ s_prev, delta.sum(axis=0))
        ds = delta @ w
        if li > n_cnn:
            delta = ds * _activation_grad(trace[li]["y"], act)
    # MLP -> last CNN layer: one pooled scalar per neuron
    ds = ds.reshape(trace[n_cnn]["s"].shape)
    for li in range(n_cnn - 1, -1, -1):
        t = trace[li + 1]
        dy = _unpool(ds, t["ss"], t["y"].shape)
        dx = dy * _activation_grad(t["y"], act)
        s_prev = trace[li]["s"]
        w, _ = net.params[li]
        kx, ky = w.shape[2:]
        win = sliding_window_view(s_prev, (kx, ky), axis=(2, 3))
        gw = np.tensordot(dx, win, axes=([0, 2, 3], [0, 2, 3]))
        grads[li] = (gw, dx.sum(axis=(0, 2, 3)))
        if li > 0:
            ds = _conv_backward_input(dx, w)
    return grads


def backward(net, patch, target_class):
    """Exact loss gradients for one patch (or the summed loss of a batch).

    Returns ``(grads, loss)`` where ``grads`` mirrors ``net.params``.
    """
    s, _ = _as_batch(net, patch)
    scores, trace = _forward(net, s)
    targets = _targets(target_class, net.config.num_classes)
    if targets.shape[0] != scores.shape[0]:
        raise DataError("one target class per patch is required")
    grads = _backward(net, trace, scores, targets)
    return grads, float(np.sum((scores - targets) ** 2))


def predict(net, patches, batch_size=4096):
    """Scores for a ``(B, N, N, C)`` batch, evaluated in chunks."""
    patches = np.asarray(patches, dtype=np.float64)
    out = np.empty((patches.shape[0], net.config.num_classes))
    for start in range(0, patches.shape[0], batch_size):
        s, _ = _as_batch(net, patches[start:start + batch_size])
        out[start:start + batch_size] = _forward(net, s)[0]
    return out


# -- per-sample fast path ------------------------------------------------------

class _Stepper:
    """Single-sample forward/backward with precomputed gather indices.

    Maps are kept channel-last and flattened, so im2col is one fancy-index
    gather and pooling one small matrix product. Weights live in matrix form
    ``(out, kx * ky * in)`` while training and are written back afterwards.
    Numerically this is the same computation as :func:`backward`.
    """

    def __init__(self, net):
        cfg = net.config
        self.act = cfg.activation
        self.n_cnn = len(cfg.cnn_layers)
        self.gather = []
        self.pool = []
        self.in_size = []
        h = w = cfg.window
        c = cfg.input_channels
        for layer, (conv, pooled, ss) in zip(cfg.cnn_layers, cfg.map_sizes()):
            kx, ky = layer.kernel
            ch, cw = conv
            r, q = np.meshgrid(np.arange(ch), np.arange(cw), indexing="ij")
            u, v, k = np.meshgrid(np.arange(kx), np.arange(ky), np.arange(c), indexing="ij")
            base = (r.ravel() * w + q.ravel()) * c
            offs = (u.ravel() * w + v.ravel()) * c + k.ravel()
            self.gather.append(base[:, None] + offs[None, :])
            self.in_size.append(h * w * c)
            sx, sy = ss
            hb, wb = pooled
            pm = np.zeros((hb * wb, ch * cw))
            for i in range(hb):
                for j in range(wb):
                    blk = np.zeros((ch, cw))
                    blk[i * sx:(i + 1) * sx, j * sy:(j + 1) * sy] = 1.0 / (sx * sy)
                    pm[i * wb + j] = blk.ravel()
            self.pool.append(pm)
            h, w, c = hb, wb, layer.neurons
        self.weights = []
        self.biases = []
        for i, (wt, b) in enumerate(net.params):
            if i < self.n_cnn:
                wt = wt.transpose(0, 2, 3, 1).reshape(wt.shape[0], -1)
            self.weights.append(np.array(wt, order="C"))
            self.biases.append(b.copy())

    def write_back(self, net):
        params = []
        for i, ((wt, b), wm, bm) in enumerate(zip(net.params, self.weights, self.biases)):
            if i < self.n_cnn:
                o, cin, kx, ky = wt.shape
                wm = wm.reshape(o, kx, ky, cin).transpose(0, 3, 1, 2)
            params.append((np.ascontiguousarray(wm), bm.copy()))
        net.params = params

    def _backprop(self, patch_flat, target):
        # Weight gradients come back factored where they are rank one:
        # (u, v, gb) means gw = outer(u, v); (None, gw, gb) is a full matrix.
        tanh = self.act == "tanh"
        n_cnn = self.n_cnn
        cols, ys, ss = [], [], [patch_flat]
        s = patch_flat
        for i in range(n_cnn):
            col = s[self.gather[i]]
            x = col @ self.weights[i].T + self.biases[i]
            y = np.tanh(x) if tanh else x
            s = (self.pool[i] @ y).ravel()
            cols.append(col)
            ys.append(y)
            ss.append(s)
        for i in range(n_cnn, len(self.weights)):
            x = self.weights[i] @ s + self.biases[i]
            s = np.tanh(x) if tanh else x
            ys.append(s)
            ss.append(s)
        grads = [None] * len(self.weights)
        y = ys[-1]
        delta = 2.0 * (y - target)
        if tanh:
            delta *= 1.0 - y * y
        for i in range(len(self.weights) - 1, n_cnn - 1, -1):
            grads[i] = (delta, ss[i], delta)
            ds = self.weights[i].T @ delta
            if i > n_cnn:
                delta = ds * (1.0 - ss[i] * ss[i]) if tanh else ds
        for i in range(n_cnn - 1, -1, -1):
            pm = self.pool[i]
            dy = pm.T @ ds.reshape(pm.shape[0], -1)
            dx = dy * (1.0 - ys[i] * ys[i]) if tanh else dy
            if dx.shape[0] == 1:
                grads[i] = (dx[0], cols[i][0], dx[0])
            else:
                grads[i] = (None, dx.T @ cols[i], dx.sum(axis=0))
            if i > 0:
                dcol = dx @ self.weights[i]
                ds = np.bincount(self.gather[i].ravel(), weights=dcol.ravel(),
                                 minlength=self.in_size[i])
        return grads

    def gradients(self, patch_flat, target):
        """Weight and bias gradients in the stepper's matrix layout."""
        return [(np.outer(u, v) if u is not None else v, gb)
                for u, v, gb in self._backprop(patch_flat, target)]

    def step(self, patch_flat, target, lr):
        for w, b, (u, v, gb) in zip(self.weights, self.biases,
                                    self._backprop(patch_flat, target)):
            if u is None:
                v *= lr
                w -= v
            else:
                # w -= lr * outer(u, v), in place on the transposed (Fortran) view
                dger(-lr, v, u, a=w.T, overwrite_a=True)
            b -= lr * gb


# -- training -----------------------------------------------------------------

def adapt_learning_rate(lr, prev_mse, new_mse, up=1.05, down=0.70):
    """Grow ``lr`` by ``up`` when the train MSE fell, otherwise shrink by ``down``."""
    if not lr > 0:
        raise DataError("learning rate must be positive")
    return lr * up if new_mse < prev_mse else lr * down


def dataset_mse(net, patches, classes, batch_size=4096):
    scores = predict(net, patches, batch_size)
    t = _targets(classes, net.config.num_classes)
    return float(np.mean(np.sum((scores - t) ** 2, axis=1)))


def accuracy(net, patches, classes):
    scores = predict(net, patches)
    return float(np.mean(np.argmax(scores, axis=1) == np.asarray(classes)))


def _stack_samples(samples):
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[1]) == 1:
        patches, classes = samples
    else:
        samples = list(samples)
        if not samples:
            raise DataError("empty training set")
        patches = np.stack([p for p, _ in samples])
        classes = np.array([c for _, c in samples])
    patches = np.asarray(patches, dtype=np.float64)
    classes = np.asarray(classes, dtype=np.int64)
    if patches.shape[0] == 0:
        raise DataError("empty training set")
    return patches, classes


def train(net, samples, cfg, validation=None, callback=None):
    """Per-sample gradient descent for ``cfg.max_iterations`` epochs.

    ``samples`` is a list of ``(patch, class)`` pairs or a ``(patches,
    classes)`` tuple of arrays, classes 0-based. Each epoch visits the
    samples in a freshly shuffled order, then recomputes the mean train MSE
    over the whole set to steer the learning rate for the next epoch.
    ``validation`` is an optional set in the same form whose accuracy is
    recorded per epoch; it does not influence training.

    Returns ``(trained_net, history)``; ``net`` itself is left untouched.
    """
    patches, classes = _stack_samples(samples)
    nc = net.config.num_classes
    targets = _targets(classes, nc)
    if validation is not None:
        vpatches, vclasses = _stack_samples(validation)
    net = net.copy()
    _as_batch(net, patches[:1])
    flat = patches.reshape(patches.shape[0], -1)
    stepper = _Stepper(net)
    order_rng = make_rng(cfg.shuffle_seed)
    history = TrainHistory(initial_mse=dataset_mse(net, patches, classes))
    prev_mse = history.initial_mse
    lr = cfg.initial_lr
    for epoch in range(1, cfg.max_iterations + 1):
        for j in order_rng.permutation(len(classes)):
            stepper.step(flat[j], targets[j], lr)
        stepper.write_back(net)
        mse = dataset_mse(net, patches, classes)
        if not np.isfinite(mse):
            raise TrainingDiverged(epoch, mse)
        next_lr = adapt_learning_rate(lr, prev_mse, mse, cfg.lr_up, cfg.lr_down)
        history.train_mse.append(mse)
        history.learning_rate.append(lr)
        history.next_learning_rate.append(next_lr)
        if validation is not None:
            history.val_accuracy.append(accuracy(net, vpatches, vclasses))
        if callback is not None:
            callback(epoch, history)
        prev_mse, lr = mse, next_lr
    return net, history


# -- gradient verification ----------------------------------------------------

def numerical_gradient(net, patches, classes, h=1e-6):
    """Central finite differences of the summed loss for every parameter."""
    theta = net.flat_parameters()
    probe = net.copy()
    s, _ = _as_batch(net, patches)
    targets = _targets(classes, net.config.num_classes)

    def loss(th):
        probe.set_flat_parameters(th)
        return np.sum((_forward(probe, s)[0] - targets) ** 2)

    g = np.empty_like(theta)
    for i in range(theta.size):
        old = theta[i]
        theta[i] = old + h
        fp = loss(theta)
        theta[i] = old - h
        fm = loss(theta)
        theta[i] = old
        g[i] = (fp - fm) / (2.0 * h)
    return g


@dataclass(frozen=True)
class GradcheckReport:
    """Agreement between back-propagation and finite differences.

    ``max_rel_error`` is the largest normwise relative error
    ``||a - n|| / max(||a||, ||n||)`` over the individual parameter tensors
    (each layer's kernels, each layer's biases). ``max_abs_error`` and
    ``max_elementwise_rel`` are per-parameter figures; the latter is
    dominated by finite-difference roundoff (about ``eps * loss / h``) on
    parameters whose gradient is itself tiny.
    """

    max_rel_error: float
    max_abs_error: float
    max_elementwise_rel: float
    n_parameters: int


def relative_error(analytic, numeric):
    """Normwise ``||a - n|| / max(||a||, ||n||)``; 0 when both vanish."""
    a = np.ravel(analytic)
    n = np.ravel(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(n))
    return float(np.linalg.norm(a - n) / scale) if scale > 0 else 0.0


def gradcheck(config, seed=0, n_patches=2, h=1e-6, param_range=0.5):
    """Compare :func:`backward` with central finite differences.

    Parameters and patches are drawn uniformly at random from ``seed``;
    parameters from ``[-param_range, param_range]``, patches from [-1, 1].
    """
    rng = make_rng(seed)
    net = init_weights(config)
    net.set_flat_parameters(rng.uniform(-param_range, param_range, net.n_parameters))
    shape = (n_patches, config.window, config.window, config.input_channels)
    patches = rng.uniform(-1.0, 1.0, shape)
    classes = rng.integers(0, config.num_classes, n_patches)
    grads, _ = backward(net, patches, classes)
    analytic = np.concatenate([a.ravel() for pair in grads for a in pair])
    numeric = numerical_gradient(net, patches, classes, h)
    worst = 0.0
    pos = 0
    for pair in grads:
        for a in pair:
            worst = max(worst, relative_error(a, numeric[pos:pos + a.size]))
            pos += a.size
    diff = np.abs(analytic - numeric)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    elementwise = np.divide(diff, denom, out=np.zeros_like(diff), where=denom > 0)
    return GradcheckReport(worst, float(diff.max()), float(elementwise.max()), analytic.size)
