"""LSTM and temporal-convolutional forecasters, trained from scratch.

Both models map a window of 35 consecutive states to the next state and
are trained on mean-squared error with minibatch Adam (exponentially
decaying learning rate, consecutive batches, no shuffling).  Gradients
are hand-derived: backpropagation through time for the LSTM, transposed
convolutions through the dilated causal stack for the TCN.  gradient_check
compares them against central finite differences.

As elsewhere, every array and every arithmetic step lives at the model's
declared precision; float32 models train in float32 end to end.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import IntegrationDivergedError, Trajectory
from .precision import DOUBLE, Precision


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries (epoch, batch)."""

    def __init__(self, epoch, batch):
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class TrainConfig:
    window: int = 35
    batch: int = 32
    epochs: int = 10
    lr0: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    lr_decay: float = 0.9          # multiplicative, per epoch
    seed: int = 0
    precision: Precision = DOUBLE

    def __post_init__(self):
        if isinstance(self.precision, str):
            self.precision = Precision.parse(self.precision)
        if self.window < 1 or self.batch < 1 or self.epochs < 1:
            raise ValueError("window, batch and epochs must be >= 1")


def _sigmoid(a):
    # Split by sign so exp never overflows, in either float width.
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class _WindowModel:
    """Shared plumbing: input normalization, closed-loop mechanics."""

    window = 35

    @property
    def dtype(self):
        return self.precision.dtype

    def _normalize(self, pts):
        pts = pts.as_double() if isinstance(pts, Trajectory) else np.asarray(pts)
        return ((pts - self.u_shift) / self.u_scale).astype(self.dtype)

    def _denormalize(self, pts):
        return pts * self.u_scale + self.u_shift

    # -- closed loop ----------------------------------------------------
    # The closed-loop system is the sliding-window map: drop the oldest
    # point, append the model's prediction.  Its state is the flattened
    # normalized window.

    def closed_loop_state(self, warm):
        u = self._normalize(warm)
        if len(u) < self.window:
            raise ValueError(f"need at least {self.window} warm points")
        return u[-self.window:].astype(np.float64).ravel()

    def closed_loop_step(self, state):
        w = state.reshape(self.window, 3).astype(self.dtype)
        nxt = self.forward(w[None])[0]
        return np.concatenate([state[3:], nxt.astype(np.float64)])

    def predict_closed_loop(self, warm, n):
        u = self._normalize(warm)
        if len(u) < self.window:
            raise ValueError(f"need at least {self.window} warm points")
        dt = self.dtype
        w = u[-self.window:].copy()
        out = np.empty((n, 3), dtype=dt)
        for k in range(n):
            nxt = self.forward(w[None])[0]
            if not np.all(np.isfinite(nxt)):
                raise IntegrationDivergedError(k)
            out[k] = nxt
            w = np.concatenate([w[1:], nxt[None]])
        return Trajectory(warm.system, warm.dt, self._denormalize(out),
                          self.precision, seed=self.seed)


# ----------------------------------------------------------------------
# LSTM
# ----------------------------------------------------------------------

_LSTM_GATES = ("f", "i", "c", "o")


@dataclass
class LstmModel(_WindowModel):
    """Single-layer LSTM (hidden 64) with a dense 3-output head.

    Gate order everywhere is forget, input, candidate, output; the gate
    input is the concatenation [h_{t-1}, u_t].
    """

    W_f: np.ndarray
    b_f: np.ndarray
    W_i: np.ndarray
    b_i: np.ndarray
    W_c: np.ndarray
    b_c: np.ndarray
    W_o: np.ndarray
    b_o: np.ndarray
    W_y: np.ndarray
    b_y: np.ndarray
    precision: Precision = DOUBLE
    seed: int = 0
    u_shift: np.ndarray = None
    u_scale: np.ndarray = None

    kind = "lstm"
    _params = ("W_f", "b_f", "W_i", "b_i", "W_c", "b_c",
               "W_o", "b_o", "W_y", "b_y")

    def _param_names(self):
        return list(self._params)

    def _get_param(self, name):
        return getattr(self, name)

    def _set_param(self, name, value):
        setattr(self, name, value)

    def __post_init__(self):
        if isinstance(self.precision, str):
            self.precision = Precision.parse(self.precision)
        if self.u_shift is None:
            self.u_shift = np.zeros(3, dtype=self.dtype)
        if self.u_scale is None:
            self.u_scale = np.ones(3, dtype=self.dtype)

    @property
    def hidden(self):
        return self.W_f.shape[0]

    @property
    def n_trainable(self):
        return sum(getattr(self, p).size for p in self._params)

    def cell_step(self, h_prev, c_prev, u_t):
        """One LSTM cell update; returns (h_t, c_t)."""
        z = np.concatenate([h_prev, u_t])
        f = _sigmoid(self.W_f @ z + self.b_f)
        i = _sigmoid(self.W_i @ z + self.b_i)
        g = np.tanh(self.W_c @ z + self.b_c)
        o = _sigmoid(self.W_o @ z + self.b_o)
        c = f * c_prev + i * g
        return o * np.tanh(c), c

    def forward(self, U, cache=None):
        """Unroll over a batch of windows U (B, T, 3); zero initial (h, c).
        Returns the head output (B, 3).  If `cache` is a list, per-step
        intermediates are appended for the backward pass.
        """
        B, T, _ = U.shape
        dt = self.dtype
        H = self.hidden
        h = np.zeros((B, H), dtype=dt)
        c = np.zeros((B, H), dtype=dt)
        for t in range(T):
            z = np.concatenate([h, U[:, t]], axis=1)
            f = _sigmoid(z @ self.W_f.T + self.b_f)
            i = _sigmoid(z @ self.W_i.T + self.b_i)
            g = np.tanh(z @ self.W_c.T + self.b_c)
            o = _sigmoid(z @ self.W_o.T + self.b_o)
            c_prev = c
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            if cache is not None:
                cache.append((z, f, i, g, o, c_prev, tc))
        return h @ self.W_y.T + self.b_y

    def backward(self, U, dY, cache):
        """Gradients of sum(dY * output) w.r.t. every parameter.

        dY is the loss gradient at the head output (B, 3); cache comes
        from forward().  Returns a dict keyed like _params.
        """
        dt = self.dtype
        H = self.hidden
        B, T, _ = U.shape
        g_ = {p: np.zeros_like(getattr(self, p)) for p in self._params}
        h_last = cache[-1][4] * cache[-1][6]          # o * tanh(c)
        g_["W_y"] += dY.T @ h_last
        g_["b_y"] += dY.sum(axis=0)
        dh = dY @ self.W_y
        dc = np.zeros((B, H), dtype=dt)
        for t in range(T - 1, -1, -1):
            z, f, i, g, o, c_prev, tc = cache[t]
            do = dh * tc
            dc = dc + dh * o * (1.0 - tc * tc)
            df = dc * c_prev
            di = dc * g
            dg = dc * i
            a_f = df * f * (1.0 - f)
            a_i = di * i * (1.0 - i)
            a_g = dg * (1.0 - g * g)
            a_o = do * o * (1.0 - o)
            g_["W_f"] += a_f.T @ z
            g_["b_f"] += a_f.sum(axis=0)
            g_["W_i"] += a_i.T @ z
            g_["b_i"] += a_i.sum(axis=0)
            g_["W_c"] += a_g.T @ z
            g_["b_c"] += a_g.sum(axis=0)
            g_["W_o"] += a_o.T @ z
            g_["b_o"] += a_o.sum(axis=0)
            dz = a_f @ self.W_f + a_i @ self.W_i \
                + a_g @ self.W_c + a_o @ self.W_o
            dh = dz[:, :H]
            dc = dc * f
        return g_


def init_lstm(hidden=64, precision=DOUBLE, seed=0):
    """Fresh LSTM with uniform(-1, 1)/sqrt(fan-in) weights, zero biases
    except the forget gate's, which starts at 1 so early training does not
    flush the cell state.
    """
    if isinstance(precision, str):
        precision = Precision.parse(precision)
    dt = precision.dtype
    rng = np.random.Generator(np.random.Philox(seed))
    fan = hidden + 3

    def draw(rows, cols):
        return (rng.uniform(-1.0, 1.0, (rows, cols))
                / np.sqrt(cols)).astype(dt)

    kw = {}
    for gate in _LSTM_GATES:
        kw[f"W_{gate}"] = draw(hidden, fan)
        kw[f"b_{gate}"] = np.zeros(hidden, dtype=dt)
    kw["b_f"] += dt(1)
    kw["W_y"] = draw(3, hidden)
    kw["b_y"] = np.zeros(3, dtype=dt)
    return LstmModel(precision=precision, seed=seed, **kw)


# ----------------------------------------------------------------------
# TCN
# ----------------------------------------------------------------------

@dataclass
class TcnModel(_WindowModel):
    """Stack of dilated causal convolutions with a dense head.

    Layer l computes H(u)_n = b + sum_i h(i) u_{n - d*i} (zero-padded on
    the left), followed by ReLU; the head reads the last time index of the
    final layer.  Weights[l] has shape (k, C_out, C_in).
    """

    weights: list
    biases: list
    W_y: np.ndarray
    b_y: np.ndarray
    dilations: tuple
    precision: Precision = DOUBLE
    seed: int = 0
    u_shift: np.ndarray = None
    u_scale: np.ndarray = None

    kind = "tcn"

    def __post_init__(self):
        if isinstance(self.precision, str):
            self.precision = Precision.parse(self.precision)
        self.dilations = tuple(int(d) for d in self.dilations)
        for a, b in zip(self.dilations, self.dilations[1:]):
            if b <= a or b & (b - 1):
                raise ValueError("dilations must be increasing powers of 2")
        if self.u_shift is None:
            self.u_shift = np.zeros(3, dtype=self.dtype)
        if self.u_scale is None:
            self.u_scale = np.ones(3, dtype=self.dtype)

    @property
    def kernel(self):
        return self.weights[0].shape[0]

    @property
    def receptive_field(self):
        return 1 + (self.kernel - 1) * sum(self.dilations)

    @property
    def n_trainable(self):
        return (sum(w.size for w in self.weights)
                + sum(b.size for b in self.biases)
                + self.W_y.size + self.b_y.size)

    def _param_names(self):
        names = []
        for l in range(len(self.weights)):
            names += [("weights", l), ("biases", l)]
        return names + ["W_y", "b_y"]

    def _get_param(self, name):
        if isinstance(name, tuple):
            return getattr(self, name[0])[name[1]]
        return getattr(self, name)

    def _set_param(self, name, value):
        if isinstance(name, tuple):
            getattr(self, name[0])[name[1]] = value
        else:
            setattr(self, name, value)

    def forward(self, U, cache=None):
        """Causal conv stack on windows U (B, T, 3); head output (B, 3).

        Windows shorter than the receptive field are legal: the left zero
        padding of each causal layer supplies the missing history (the
        receptive field ≥ window by construction, so the whole window
        always reaches the head).
        """
        if U.shape[1] < 1:
            raise ValueError("window must hold at least one point")
        dt = self.dtype
        B, T, _ = U.shape
        x = U
        for l, (W, b, d) in enumerate(
                zip(self.weights, self.biases, self.dilations)):
            k = W.shape[0]
            pad = d * (k - 1)
            xp = np.concatenate(
                [np.zeros((B, pad, x.shape[2]), dtype=dt), x], axis=1)
            a = np.broadcast_to(b, (B, T, b.size)).copy()
            for i in range(k):
                a += xp[:, pad - d * i:pad - d * i + T] @ W[i].T
            y = np.maximum(a, dt(0))
            if cache is not None:
                cache.append((xp, a))
            x = y
        return x[:, -1] @ self.W_y.T + self.b_y

    def backward(self, U, dY, cache):
        """Gradients of sum(dY * output); mirror image of forward()."""
        dt = self.dtype
        B, T, _ = U.shape
        gW = [np.zeros_like(w) for w in self.weights]
        gb = [np.zeros_like(b) for b in self.biases]
        xp_last, a_last = cache[-1]
        y_last = np.maximum(a_last, dt(0))
        gWy = dY.T @ y_last[:, -1]
        gby = dY.sum(axis=0)
        dx = np.zeros_like(y_last)
        dx[:, -1] = dY @ self.W_y
        for l in range(len(self.weights) - 1, -1, -1):
            W = self.weights[l]
            d = self.dilations[l]
            k = W.shape[0]
            pad = d * (k - 1)
            xp, a = cache[l]
            da = dx * (a > 0)
            gb[l] += da.sum(axis=(0, 1))
            dxp = np.zeros_like(xp)
            for i in range(k):
                sl = slice(pad - d * i, pad - d * i + T)
                gW[l][i] += np.einsum("btc,btd->cd", da, xp[:, sl])
                dxp[:, sl] += da @ W[i]
            dx = dxp[:, pad:]
        grads = {}
        for l in range(len(self.weights)):
            grads[("weights", l)] = gW[l]
            grads[("biases", l)] = gb[l]
        grads["W_y"] = gWy
        grads["b_y"] = gby
        return grads


def init_tcn(channels=64, kernel=3, dilations=(1, 2, 4, 8, 16),
             precision=DOUBLE, seed=0):
    """Fresh TCN; five dilated layers give receptive field 63 >= 35."""
    if isinstance(precision, str):
        precision = Precision.parse(precision)
    dt = precision.dtype
    rng = np.random.Generator(np.random.Philox(seed))
    weights, biases = [], []
    c_in = 3
    for _ in dilations:
        fan = c_in * kernel
        weights.append((rng.uniform(-1.0, 1.0, (kernel, channels, c_in))
                        / np.sqrt(fan)).astype(dt))
        biases.append(np.zeros(channels, dtype=dt))
        c_in = channels
    W_y = (rng.uniform(-1.0, 1.0, (3, channels))
           / np.sqrt(channels)).astype(dt)
    return TcnModel(weights=weights, biases=biases, W_y=W_y,
                    b_y=np.zeros(3, dtype=dt), dilations=dilations,
                    precision=precision, seed=seed)


# ----------------------------------------------------------------------
# training
# ----------------------------------------------------------------------

def _windows(pts, window):
    """All (window -> next point) pairs of one trajectory, as views."""
    n = len(pts) - window
    if n < 1:
        raise ValueError("trajectory too short to form one window")
    stride = pts.strides[0]
    U = np.lib.stride_tricks.as_strided(
        pts, shape=(n, window, 3), strides=(stride, stride, pts.strides[1]),
        writeable=False)
    return U, pts[window:]


def train_rnn(model, trajs, cfg=None):
    """Windowed supervised training: MSE on (35-window -> next point)
    pairs, consecutive batches of 32, Adam with lr0 * decay^epoch, 10
    epochs.  Normalization statistics are fit here.  Returns (model,
    per-epoch mean losses); deterministic for a fixed seed and data.
    """
    if cfg is None:
        cfg = TrainConfig(precision=model.precision, seed=model.seed)
    if cfg.precision is not model.precision:
        raise ValueError("config and model precision disagree")
    dt = model.dtype
    if isinstance(trajs, Trajectory):
        trajs = [trajs]

    allpts = np.concatenate([tr.as_double() for tr in trajs])
    model.u_shift = allpts.mean(axis=0).astype(dt)
    scale = allpts.std(axis=0)
    scale[scale == 0.0] = 1.0
    model.u_scale = scale.astype(dt)

    pairs = [_windows(model._normalize(tr), cfg.window) for tr in trajs]
    names = model._param_names()
    m1 = {n: np.zeros_like(model._get_param(n)) for n in names}
    m2 = {n: np.zeros_like(model._get_param(n)) for n in names}
    b1, b2 = dt(cfg.beta1), dt(cfg.beta2)
    eps = dt(cfg.eps_adam)
    step = 0
    losses = []
    for epoch in range(cfg.epochs):
        lr = dt(cfg.lr0 * cfg.lr_decay ** epoch)
        total = dt(0)
        count = 0
        batch_idx = 0
        for U_all, Y_all in pairs:
            for s in range(0, len(U_all), cfg.batch):
                U = np.ascontiguousarray(U_all[s:s + cfg.batch])
                Y = Y_all[s:s + cfg.batch]
                cache = []
                out = model.forward(U, cache=cache)
                r = out - Y
                loss = np.mean(r * r)
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch, batch_idx)
                dY = (dt(2) / dt(r.size)) * r
                grads = model.backward(U, dY, cache)
                step += 1
                corr1 = dt(1) - b1 ** step
                corr2 = dt(1) - b2 ** step
                for n in names:
                    g = grads[n]
                    m1[n] = b1 * m1[n] + (dt(1) - b1) * g
                    m2[n] = b2 * m2[n] + (dt(1) - b2) * g * g
                    upd = lr * (m1[n] / corr1) / (
                        np.sqrt(m2[n] / corr2) + eps)
                    model._set_param(n, model._get_param(n) - upd)
                total += loss * dt(U.shape[0])
                count += U.shape[0]
                batch_idx += 1
        losses.append(float(total) / count)
    return model, losses


def gradient_check(model, U=None, Y=None, n_coords=200, eps=1e-6, seed=0):
    """Max relative error between analytic and central-FD gradients of the
    MSE loss, over n_coords randomly chosen parameter coordinates.

    The denominator is floored at 1e-4 of the largest gradient magnitude:
    coordinates whose gradient sits many orders below the rest carry no
    information about the backward pass, and central differences on them
    measure nothing but f64 roundoff (~1e-10 for an O(1) loss).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    if U is None:
        U = rng.standard_normal((4, model.window, 3)).astype(model.dtype)
    if Y is None:
        Y = rng.standard_normal((U.shape[0], 3)).astype(model.dtype)

    def loss():
        r = model.forward(U) - Y
        return float(np.mean(r * r))

    cache = []
    out = model.forward(U, cache=cache)
    r = out - Y
    dY = (2.0 / r.size) * r.astype(model.dtype)
    grads = model.backward(U, dY, cache)
    flat = []
    for n in model._param_names():
        g = grads[n].ravel()
        for idx in range(g.size):
            flat.append((n, idx, g[idx]))
    picks = rng.choice(len(flat), size=min(n_coords, len(flat)),
                       replace=False)
    floor = 1e-4 * max(abs(g) for _, _, g in flat)
    worst = 0.0
    for p in picks:
        n, idx, g_analytic = flat[p]
        view = model._get_param(n).ravel()
        old = view[idx]
        view[idx] = old + eps
        lp = loss()
        view[idx] = old - eps
        lm = loss()
        view[idx] = old
        g_fd = (lp - lm) / (2.0 * eps)
        denom = max(abs(g_fd), abs(float(g_analytic)), floor, 1e-12)
        worst = max(worst, abs(float(g_analytic) - g_fd) / denom)
    return worst


# -- serialization ------------------------------------------------------

_FORMAT_VERSION = 1


def save_rnn(model, path):
    meta = {"precision": str(model.precision), "seed": model.seed,
            "kind": model.kind}
    arrays = {"u_shift": model.u_shift, "u_scale": model.u_scale}
    if isinstance(model, LstmModel):
        for p in model._params:
            arrays[p] = getattr(model, p)
    else:
        meta["dilations"] = list(model.dilations)
        for l, (w, b) in enumerate(zip(model.weights, model.biases)):
            arrays[f"conv_w_{l}"] = w
            arrays[f"conv_b_{l}"] = b
        arrays["W_y"] = model.W_y
        arrays["b_y"] = model.b_y
    np.savez(path, format=np.array([_FORMAT_VERSION]),
             kind=np.array([model.kind]),
             config=np.array([json.dumps(meta)]), **arrays)


def load_rnn(path):
    data = np.load(path, allow_pickle=False)
    if int(data["format"][0]) != _FORMAT_VERSION:
        raise ValueError("not a version-1 model file")
    kind = str(data["kind"][0])
    meta = json.loads(str(data["config"][0]))
    common = dict(precision=Precision.parse(meta["precision"]),
                  seed=int(meta["seed"]), u_shift=data["u_shift"],
                  u_scale=data["u_scale"])
    if kind == "lstm":
        kw = {p: data[p] for p in LstmModel._params}
        return LstmModel(**kw, **common)
    if kind == "tcn":
        dil = tuple(meta["dilations"])
        weights = [data[f"conv_w_{l}"] for l in range(len(dil))]
        biases = [data[f"conv_b_{l}"] for l in range(len(dil))]
        return TcnModel(weights=weights, biases=biases, W_y=data["W_y"],
                        b_y=data["b_y"], dilations=dil, **common)
    raise ValueError(f"unknown model kind {kind!r}")
