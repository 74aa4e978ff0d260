"""Mini-batch training with best-validation checkpointing."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)


class TrainingDiverged(ArithmeticError):
    def __init__(self, epoch, batch):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = -1
    checkpoint: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def best_val_loss(self):
        return self.val_loss[self.best_epoch]

    def to_text(self):
        lines = [f"seed={self.seed}", f"best_epoch={self.best_epoch}", "epoch,train_loss,val_loss"]
        lines += [f"{i},{t!r},{v!r}" for i, (t, v) in enumerate(zip(self.train_loss, self.val_loss))]
        return "\n".join(lines) + "\n"


def mse(pred, target):
    d = pred - target
    return float(np.mean(d * d))


def evaluate_loss(network, x, y, batch_size=1024):
    if len(x) == 0:
        return float("nan")
    return mse(network.predict(x, batch_size), y)


def train(network, x_train, y_train, x_val, y_val, epochs=15, batch_size=32, lr=1e-3):
    """Fit ``network`` on MSE, batches in chronological order.

    After the last epoch the parameters from the epoch with the lowest
    validation loss are restored and also returned in the report.
    """
    y_train = np.asarray(y_train, dtype=float).reshape(len(y_train), -1)
    y_val = np.asarray(y_val, dtype=float).reshape(len(y_val), -1)
    state = AdamState(lr=lr)
    report = TrainReport(seed=network.seed)
    best = np.inf
    N = len(x_train)
    for epoch in range(epochs):
        total = 0.0
        for b, lo in enumerate(range(0, N, batch_size)):
            xb = x_train[lo:lo + batch_size]
            yb = y_train[lo:lo + batch_size]
            pred, cache = network.forward(xb)
            diff = pred - yb
            loss = float(np.mean(diff * diff))
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, b)
            total += loss * len(xb)
            grads = network.backward(cache, 2.0 * diff / diff.size)
            adam_step(network.params, grads, state)
            network.touch()
        report.train_loss.append(total / N)
        val = evaluate_loss(network, x_val, y_val)
        if not np.isfinite(val):
            raise TrainingDiverged(epoch, -1)
        report.val_loss.append(val)
        logger.debug("epoch %d train %.6g val %.6g", epoch, report.train_loss[-1], val)
        if val < best:
            best = val
            report.best_epoch = epoch
            report.checkpoint = network.get_params()
    if report.checkpoint:
        network.set_params(report.checkpoint)
    return report
