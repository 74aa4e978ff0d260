"""Recursive, direct, direct-recursive hybrid and multiple-output strategies.

All fitting and prediction here happens in z-scored units; the strategy
keeps the :class:`~gasforecast.series.ZScoreParams` so that
:func:`forecast` and :func:`evaluate` can report gwei.

When a model's input is extended with earlier predictions, only the target
channel receives the prediction. Other channels repeat their last observed
value so the input stays rectangular.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..neural import Network, architecture, train
from ..series import zscore_invert

logger = logging.getLogger(__name__)

KINDS = ("recursive", "direct", "hybrid", "multi-output", "multi-output-block-recursive")
DIVERGENCE_LIMIT = 1e6


class StrategyError(RuntimeError):
    pass


@dataclass(frozen=True)
class StrategySpec:
    kind: str = "hybrid"
    horizon: int = 10
    input_len: int = 288
    network: str = "lstm"
    network_options: dict = field(default_factory=lambda: {"units": (50,)})
    variables: tuple = ("min_gas_price",)
    target: str = "min_gas_price"
    mp: bool = False
    mp_reversed: bool = False
    mp_window: int = 288
    denoise_wavelet: Optional[str] = None
    denoise_lambda: float = 3.0
    denoise_levels: tuple = (1, 2)
    block: Optional[int] = None
    epochs: int = 15
    batch_size: int = 32
    lr: float = 1e-3
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}; have {', '.join(KINDS)}")
        if self.horizon < 1 or self.input_len < 1:
            raise ValueError("horizon and input_len must be >= 1")
        if self.mp_reversed and not self.mp:
            raise ValueError("mp_reversed requires mp")
        if self.target not in self.variables:
            raise ValueError(f"target {self.target!r} must be one of the input variables")
        if self.block is not None and self.block < 1:
            raise ValueError("block must be >= 1")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "denoise_levels", tuple(self.denoise_levels))

    @property
    def input_variables(self):
        """Model input channels, including the appended profile column."""
        return self.variables + (("matrix_profile",) if self.mp else ())

    @property
    def n_models(self):
        if self.kind in ("direct", "hybrid"):
            return self.horizon
        if self.kind == "multi-output-block-recursive":
            return len(self.blocks())
        return 1

    def blocks(self):
        """``(first_lookahead_index, width)`` for each block of the horizon."""
        b = self.horizon if self.block is None else self.block
        return [(lo, min(b, self.horizon - lo)) for lo in range(0, self.horizon, b)]

    def network_spec(self, n_steps, n_out):
        opts = {k: tuple(v) if isinstance(v, list) else v for k, v in self.network_options.items()}
        if self.network == "attention" and opts.get("heads") == "per_variable":
            opts["heads"] = len(self.input_variables)
        return architecture(self.network, n_steps, len(self.input_variables), n_out, **opts)

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["variables"] = list(self.variables)
        d["denoise_levels"] = list(self.denoise_levels)
        d["network_options"] = {k: list(v) if isinstance(v, tuple) else v
                                for k, v in self.network_options.items()}
        return d

    @classmethod
    def from_dict(cls, d):
        """Build from a mapping; the table shorthand keys are accepted too.

        ``strategy`` is read as ``kind``, ``n`` as ``input_len`` and
        ``att_heads`` / ``att_layers`` select the attention network.
        """
        d = dict(d)
        if "strategy" in d:
            d["kind"] = d.pop("strategy")
        if "n" in d:
            d["input_len"] = d.pop("n")
        heads, layers = d.pop("att_heads", None), d.pop("att_layers", None)
        if heads is not None or layers is not None:
            opts = dict(d.get("network_options", {})) if d.get("network") == "attention" else {}
            opts["heads"] = 1 if heads is None else heads
            opts["layers"] = 1 if layers is None else layers
            d["network"], d["network_options"] = "attention", opts
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown strategy key(s): {', '.join(sorted(unknown))}")
        return cls(**d)


@dataclass
class TrainedStrategy:
    spec: StrategySpec
    members: list
    reports: list
    norm: object
    target_index: int
    seed: int = 0
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class HorizonForecast:
    values: np.ndarray
    lookaheads: np.ndarray
    step_minutes: float = 5.0
    aborted: bool = False

    @property
    def minutes(self):
        return self.lookaheads * self.step_minutes


def extend_inputs(x, preds, target_index):
    """Append prediction columns ``preds`` (N, k) as k new timesteps of ``x`` (N, n, V)."""
    preds = np.asarray(preds, dtype=float).reshape(len(x), -1)
    k = preds.shape[1]
    if k == 0:
        return x
    tail = np.repeat(x[:, -1:, :], k, axis=1)
    tail[:, :, target_index] = preds
    return np.concatenate([x, tail], axis=1)


def _fit_member(spec, x_tr, y_tr, x_va, y_va, seed):
    net = Network(spec.network_spec(x_tr.shape[1], y_tr.shape[1]), seed=seed)
    rep = train(net, x_tr, y_tr, x_va, y_va, epochs=spec.epochs, batch_size=spec.batch_size,
                lr=spec.lr)
    return net, rep


def _check(spec, train_ds, val_ds, kinds):
    if spec.kind not in kinds:
        raise StrategyError(f"strategy kind {spec.kind!r} cannot be fitted here")
    for ds in (train_ds, val_ds):
        if ds.H < spec.horizon or ds.n != spec.input_len:
            raise StrategyError(f"dataset windows (n={ds.n}, H={ds.H}) do not fit "
                                f"n={spec.input_len}, H={spec.horizon}")
    if len(train_ds) == 0:
        raise StrategyError("empty training set")


def _sequential_fit(spec, train_ds, val_ds, norm, seed, blocks):
    """Shared loop for hybrid and block-recursive fitting.

    Model ``k`` predicts lookaheads ``lo .. lo + width - 1`` from the input
    window extended by the predictions of models ``0 .. k - 1``.
    """
    x_tr, y_tr = train_ds.inputs(), train_ds.targets()
    x_va, y_va = val_ds.inputs(), val_ds.targets()
    t = train_ds.target
    members, reports = [], []
    p_tr = np.zeros((len(x_tr), 0))
    p_va = np.zeros((len(x_va), 0))
    for k, (lo, width) in enumerate(blocks):
        xt = extend_inputs(x_tr, p_tr, t)
        xv = extend_inputs(x_va, p_va, t)
        try:
            net, rep = _fit_member(spec, xt, y_tr[:, lo:lo + width], xv, y_va[:, lo:lo + width],
                                   seed + k)
        except Exception as exc:
            raise StrategyError(f"member {k} failed: {exc}") from exc
        members.append(net)
        reports.append(rep)
        if k < len(blocks) - 1:
            p_tr = np.hstack([p_tr, net.predict(xt)])
            p_va = np.hstack([p_va, net.predict(xv)])
    return TrainedStrategy(spec, members, reports, norm, t, seed)


def fit_recursive(spec, train_ds, val_ds, norm, seed=0):
    _check(spec, train_ds, val_ds, ("recursive",))
    net, rep = _fit_member(spec, train_ds.inputs(), train_ds.targets()[:, :1],
                           val_ds.inputs(), val_ds.targets()[:, :1], seed)
    return TrainedStrategy(spec, [net], [rep], norm, train_ds.target, seed)


def fit_direct(spec, train_ds, val_ds, norm, seed=0):
    _check(spec, train_ds, val_ds, ("direct",))
    x_tr, y_tr = train_ds.inputs(), train_ds.targets()
    x_va, y_va = val_ds.inputs(), val_ds.targets()
    members, reports = [], []
    for h in range(spec.horizon):
        try:
            net, rep = _fit_member(spec, x_tr, y_tr[:, h:h + 1], x_va, y_va[:, h:h + 1], seed + h)
        except Exception as exc:
            raise StrategyError(f"member {h} failed: {exc}") from exc
        members.append(net)
        reports.append(rep)
    return TrainedStrategy(spec, members, reports, norm, train_ds.target, seed)


def fit_hybrid(spec, train_ds, val_ds, norm, seed=0):
    _check(spec, train_ds, val_ds, ("hybrid",))
    return _sequential_fit(spec, train_ds, val_ds, norm, seed, [(h, 1) for h in range(spec.horizon)])


def fit_multioutput(spec, train_ds, val_ds, norm, seed=0):
    _check(spec, train_ds, val_ds, ("multi-output", "multi-output-block-recursive"))
    blocks = spec.blocks() if spec.kind == "multi-output-block-recursive" else [(0, spec.horizon)]
    return _sequential_fit(spec, train_ds, val_ds, norm, seed, blocks)


FITTERS = {
    "recursive": fit_recursive,
    "direct": fit_direct,
    "hybrid": fit_hybrid,
    "multi-output": fit_multioutput,
    "multi-output-block-recursive": fit_multioutput,
}


def fit(spec, train_ds, val_ds, norm, seed=0):
    return FITTERS[spec.kind](spec, train_ds, val_ds, norm, seed)


def hybrid_training_inputs(trained, dataset, member):
    """Inputs that hybrid member ``member`` sees for ``dataset`` (for audits)."""
    x = dataset.inputs()
    preds = np.zeros((len(x), 0))
    for net in trained.members[:member]:
        preds = np.hstack([preds, net.predict(extend_inputs(x, preds, trained.target_index))])
    return extend_inputs(x, preds, trained.target_index)


def predict_normalized(trained, x):
    """Forecast every lookahead for inputs ``x`` (N, n, V) in z-scored units.

    Returns ``(preds, aborted)`` where ``aborted`` flags rows whose recursive
    rollout exceeded the divergence limit; their later lookaheads are NaN.
    """
    spec = trained.spec
    x = np.asarray(x, dtype=float)
    N, H, t = len(x), spec.horizon, trained.target_index
    aborted = np.zeros(N, dtype=bool)
    if spec.kind == "recursive":
        net = trained.members[0]
        out = np.full((N, H), np.nan)
        window = x.copy()
        for h in range(H):
            live = ~aborted
            if not live.any():
                break
            p = net.predict(window[live])[:, 0]
            out[live, h] = p
            blown = np.abs(p) > DIVERGENCE_LIMIT
            if blown.any():
                logger.warning("recursive forecast diverged at lookahead %d", h + 1)
                idx = np.flatnonzero(live)[blown]
                aborted[idx] = True
            window = extend_inputs(window, out[:, h:h + 1], t)[:, 1:, :]
        return out, aborted
    if spec.kind == "direct":
        return np.hstack([net.predict(x) for net in trained.members]), aborted
    preds = np.zeros((N, 0))
    for net in trained.members:
        preds = np.hstack([preds, net.predict(extend_inputs(x, preds, t))])
    return preds, aborted


def _target_params(trained):
    from ..series import ZScoreParams
    t = trained.target_index
    return ZScoreParams(trained.norm.mean[t], trained.norm.std[t])


def denormalize_target(trained, values):
    return zscore_invert(values, _target_params(trained))


def forecast(trained, history, step_minutes=5.0):
    """Forecast gwei values for the next ``H`` steps after ``history``.

    ``history`` is raw (un-normalized) with shape (rows, V) in the strategy's
    input-variable order; only its last ``input_len`` rows are used.
    """
    spec = trained.spec
    hist = np.asarray(history, dtype=float)
    if hist.ndim == 1:
        hist = hist[:, None]
    if hist.shape[1] != len(spec.input_variables):
        raise StrategyError(f"history has {hist.shape[1]} variables, model expects "
                            f"{len(spec.input_variables)} ({', '.join(spec.input_variables)})")
    if hist.shape[0] < spec.input_len:
        raise StrategyError(f"need {spec.input_len} rows of history, got {hist.shape[0]}")
    window = (hist[-spec.input_len:] - trained.norm.mean) / trained.norm.std
    preds, aborted = predict_normalized(trained, window[None])
    return HorizonForecast(denormalize_target(trained, preds[0]), np.arange(1, spec.horizon + 1),
                           step_minutes, bool(aborted[0]))


def leakage_audit(dataset, horizon):
    """Check that every input row precedes every target row of its example.

    Predictions appended to inputs are functions of the input rows only, so
    the row ranges are the whole story.
    """
    last_input = dataset.starts + dataset.n - 1
    first_target = dataset.starts + dataset.n
    ok = np.all(last_input < first_target)
    in_frame = np.all(dataset.starts + dataset.n + horizon <= dataset.values.shape[0])
    return bool(ok and in_frame)


def with_kind(spec, kind, **changes):
    return replace(spec, kind=kind, **changes)
