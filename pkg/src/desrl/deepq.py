"""Deep Q-learning from first principles: a small feedforward approximator
with a learned state embedding, uniform experience replay and a
periodically copied target network.  Forward and backward passes are
hand-written numpy; gradients flow only through the output of the action
actually taken in each sampled transition, and the bootstrap max is
masked to the events enabled at the successor state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .automata import Fsm, ModelError
from .environment import Environment, TraceRecorder
from .model_io import TrainingConfig
from .policy import QTable, controllable_epsilon_greedy

DEFAULT_LR = 1e-3
INIT_SCALE = 0.08
EMBED_DIM = 10
HIDDEN = 50


class ApproxNet:
    """Q-value approximator: state id -> embedding row -> three rectified
    hidden layers -> one linear output per action.

    Parameters are float64 arrays in declaration order (embedding, then
    weight/bias per layer); ``parameters()`` exposes them in that order
    for dumps and gradient checks.
    """

    PARAM_NAMES = ("embed", "w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4")

    def __init__(self, n_states: int, n_actions: int,
                 rng: np.random.Generator | None = None,
                 embed_dim: int = EMBED_DIM, hidden: int = HIDDEN):
        if n_states <= 0 or n_actions <= 0:
            raise ModelError("network needs at least one state and one action")
        self.n_states = n_states
        self.n_actions = n_actions
        self.embed_dim = embed_dim
        self.hidden = hidden

        def init(*shape):
            if rng is None:
                return np.zeros(shape)
            return rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape)

        self.embed = init(n_states, embed_dim)
        self.w1 = init(embed_dim, hidden)
        self.b1 = init(hidden)
        self.w2 = init(hidden, hidden)
        self.b2 = init(hidden)
        self.w3 = init(hidden, hidden)
        self.b3 = init(hidden)
        self.w4 = init(hidden, n_actions)
        self.b4 = init(n_actions)

    def parameters(self) -> list[np.ndarray]:
        return [getattr(self, name) for name in self.PARAM_NAMES]

    def dims(self) -> tuple[int, int, int, int]:
        return (self.n_states, self.embed_dim, self.hidden, self.n_actions)

    def copy(self) -> "ApproxNet":
        clone = ApproxNet(self.n_states, self.n_actions, rng=None,
                          embed_dim=self.embed_dim, hidden=self.hidden)
        sync_target(self, clone)
        return clone

    def _forward_batch(self, states: np.ndarray):
        x0 = self.embed[states]
        z1 = x0 @ self.w1 + self.b1
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ self.w2 + self.b2
        a2 = np.maximum(z2, 0.0)
        z3 = a2 @ self.w3 + self.b3
        a3 = np.maximum(z3, 0.0)
        out = a3 @ self.w4 + self.b4
        return out, (states, x0, z1, a1, z2, a2, z3, a3)

    def forward(self, s: int) -> np.ndarray:
        """Q-values of all actions for one state id."""
        if not 0 <= s < self.n_states:
            raise ModelError("state id %d outside [0, %d)" % (s, self.n_states))
        out, _ = self._forward_batch(np.array([s]))
        return out[0]


def sync_target(net: ApproxNet, net_target: ApproxNet) -> None:
    """Copy every parameter of ``net`` into ``net_target`` (theta' := theta)."""
    if net.dims() != net_target.dims():
        raise ModelError("architecture mismatch: %s vs %s" % (net.dims(), net_target.dims()))
    for name in ApproxNet.PARAM_NAMES:
        getattr(net_target, name)[...] = getattr(net, name)


def td_target(net_target: ApproxNet, r: float, s_next: int,
              enabled_next: Sequence[int], gamma: float, done: bool) -> float:
    """Bootstrapped regression target: r alone at terminal transitions (or
    when nothing is enabled next), else r + gamma times the target net's
    best value among the actions enabled at the successor.  Outputs of
    impossible actions are never read."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0, 1], got %g" % gamma)
    if done or not len(enabled_next):
        return float(r)
    values = net_target.forward(s_next)
    return float(r + gamma * max(values[i] for i in enabled_next))


def backprop(net: ApproxNet, states: np.ndarray, actions: np.ndarray,
             targets: np.ndarray):
    """Loss and gradients of the mean squared TD error over one batch.

    Only the taken-action entry of each output row receives error signal.
    Returns (loss, grads) with grads in ``parameters()`` order.
    """
    out, cache = net._forward_batch(states)
    idx, x0, z1, a1, z2, a2, z3, a3 = cache
    batch = len(states)
    qsa = out[np.arange(batch), actions]
    diff = qsa - targets
    loss = float(np.mean(diff ** 2))

    dout = np.zeros_like(out)
    dout[np.arange(batch), actions] = 2.0 * diff / batch
    dw4 = a3.T @ dout
    db4 = dout.sum(axis=0)
    da3 = dout @ net.w4.T
    dz3 = da3 * (z3 > 0.0)
    dw3 = a2.T @ dz3
    db3 = dz3.sum(axis=0)
    da2 = dz3 @ net.w3.T
    dz2 = da2 * (z2 > 0.0)
    dw2 = a1.T @ dz2
    db2 = dz2.sum(axis=0)
    da1 = dz2 @ net.w2.T
    dz1 = da1 * (z1 > 0.0)
    dw1 = x0.T @ dz1
    db1 = dz1.sum(axis=0)
    dx0 = dz1 @ net.w1.T
    dembed = np.zeros_like(net.embed)
    np.add.at(dembed, idx, dx0)
    return loss, [dembed, dw1, db1, dw2, db2, dw3, db3, dw4, db4]


def train_step(net: ApproxNet, net_target: ApproxNet, batch, lr: float, gamma: float,
               enabled_next: Mapping[int, Sequence[int]]) -> float:
    """One gradient-descent step on a sampled batch of transitions
    (s, a, r, s_next, done); ``enabled_next`` maps a state id to the
    action indices enabled there.  Returns the pre-step loss."""
    if not batch:
        raise ModelError("empty training batch")
    states = np.array([t[0] for t in batch])
    actions = np.array([t[1] for t in batch])
    targets = np.array([
        td_target(net_target, r, s_next, enabled_next[s_next], gamma, done)
        for _, _, r, s_next, done in batch])
    loss, grads = backprop(net, states, actions, targets)
    for param, grad in zip(net.parameters(), grads):
        param -= lr * grad
    return loss


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions with uniform
    without-replacement batch sampling."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ModelError("capacity must be positive, got %d" % capacity)
        self.capacity = capacity
        self._items: list = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._next] = transition
        self._next = (self._next + 1) % self.capacity

    def sample(self, k: int, rng: np.random.Generator) -> list:
        if k > len(self._items):
            raise ModelError("cannot sample %d items from %d" % (k, len(self._items)))
        picks = rng.choice(len(self._items), size=k, replace=False)
        return [self._items[i] for i in picks]


class NetQView:
    """Adapter exposing a network as the Q-value source the policies
    expect, restricted to the machine's defined (state, event) pairs."""

    def __init__(self, net: ApproxNet, f: Fsm):
        self.net = net
        self.model = f

    def value(self, s: int, event) -> float:
        name = event if isinstance(event, str) else event.name
        if (s, name) not in self.model.transitions:
            raise ModelError("(%r, %r) is not a possible transition" % (s, name))
        return float(self.net.forward(s)[self.model.event_index(name)])

    def best(self, s: int, candidates):
        if not candidates:
            raise ModelError("argmax over empty candidate list")
        values = self.net.forward(s)
        best = candidates[0]
        best_v = values[self.model.event_index(best.name)]
        for e in candidates[1:]:
            v = values[self.model.event_index(e.name)]
            if v > best_v:
                best, best_v = e, v
        return best


def net_qtable(net: ApproxNet, f: Fsm) -> QTable:
    """Tabulate the network over the machine's defined pairs (the layout
    used for the derived Q-table CSV)."""
    q = QTable.from_model(f)
    for s in range(f.n_states):
        values = net.forward(s)
        for e in f.enabled(s):
            q.set(s, e, float(values[f.event_index(e.name)]))
    return q


@dataclass
class DeepRun:
    """Result of one deep-Q training run with its hyperparameter echo."""

    net: ApproxNet
    returns: list[float]
    capacity: int
    batch_size: int
    target_period: int
    lr: float
    gamma: float
    epsilon: float
    episodes: int
    horizon: int
    seed: int


def train_dqn(env: Environment, config: TrainingConfig,
              recorder: TraceRecorder | None = None) -> DeepRun:
    """Deep Q-learning loop: act with the controllable epsilon-greedy
    policy over the network's values, store transitions, train on uniform
    batches once the buffer holds one, and copy the target network every
    ``config.target_period`` environment steps."""
    lr = config.alpha if config.alpha is not None else DEFAULT_LR
    model = env.model
    rng = np.random.default_rng(config.seed)
    net = ApproxNet(model.n_states, len(model.alphabet), rng)
    target = net.copy()
    buffer = ReplayBuffer(config.capacity)
    qview = NetQView(net, model)
    enabled_idx = {s: tuple(model.event_index(e.name) for e in model.enabled(s))
                   for s in range(model.n_states)}
    returns: list[float] = []
    env_steps = 0
    for episode in range(config.episodes):
        env.reset()
        total = 0.0
        for _ in range(config.horizon):
            s = env.current
            a_all, a_c, a_u = env.action_sets()
            if not a_all:
                break
            action = controllable_epsilon_greedy(s, qview, config.epsilon,
                                                 a_all, a_c, a_u, env.probs, rng)
            if action is None:
                continue
            res = env.step(action)
            total += res.reward
            if recorder is not None:
                recorder.record(episode, env.step_count, res.info["state"],
                                action.name, res.reward, res.done)
            terminal = res.info["done_reason"] in ("marked", "deadlock")
            buffer.push((s, model.event_index(action.name), res.reward,
                         res.observation, terminal))
            env_steps += 1
            if len(buffer) >= config.batch_size:
                train_step(net, target, buffer.sample(config.batch_size, rng),
                           lr, config.gamma, enabled_idx)
            if env_steps % config.target_period == 0:
                sync_target(net, target)
            if res.done:
                break
        returns.append(total)
    return DeepRun(net, returns, config.capacity, config.batch_size,
                   config.target_period, lr, config.gamma, config.epsilon,
                   config.episodes, config.horizon, config.seed)


# ---------------------------------------------------------------------------
# parameter dump
# ---------------------------------------------------------------------------

def dump_params(net: ApproxNet) -> bytes:
    """Serialize a network: one text header line with the layer dimensions,
    then every parameter as raw little-endian 64-bit reals in declaration
    order."""
    header = "approxnet %d %d %d %d %d %d\n" % (
        net.n_states, net.embed_dim, net.hidden, net.hidden, net.hidden, net.n_actions)
    blob = b"".join(p.astype("<f8").tobytes() for p in net.parameters())
    return header.encode("ascii") + blob


def load_params(data: bytes) -> ApproxNet:
    """Rebuild a network from ``dump_params`` output."""
    newline = data.index(b"\n")
    fields = data[:newline].decode("ascii").split()
    if len(fields) != 7 or fields[0] != "approxnet":
        raise ModelError("not an approxnet parameter dump")
    n_states, embed_dim, h1, h2, h3, n_actions = map(int, fields[1:])
    if not h1 == h2 == h3:
        raise ModelError("hidden layers must share one width, got %s" % fields[3:6])
    net = ApproxNet(n_states, n_actions, rng=None, embed_dim=embed_dim, hidden=h1)
    flat = np.frombuffer(data[newline + 1:], dtype="<f8")
    offset = 0
    for param in net.parameters():
        count = param.size
        if offset + count > flat.size:
            raise ModelError("parameter dump truncated")
        param[...] = flat[offset:offset + count].reshape(param.shape)
        offset += count
    if offset != flat.size:
        raise ModelError("parameter dump has %d trailing values" % (flat.size - offset))
    return net
