"""Map model names in the style of the result tables onto strategy specs.

A label is a sequence of tokens, for example ``"Multi-Att 2 Layer MP Rev DB4"``:

* ``Hybrid`` (default) or ``Recursive`` / ``Direct``: strategy with the base LSTM
* ``Att 1 Head``: multi-output single-head attention
* ``Multi-Att``: multi-output attention with one head per input variable
* ``N Layer``: number of attention layers
* ``CNN``: multi-output CNN-LSTM
* ``MP`` / ``Rev``: append the (reversed) matrix profile
* ``DB4`` / ``Bior3.3``: denoise the target with that wavelet
"""

import re

from .strategies import StrategySpec

_WAVELETS = {"db4": "db4", "bior3.3": "bior3.3"}


def spec_from_label(label, **base):
    """Parse ``label`` into a :class:`StrategySpec`; ``base`` supplies other fields."""
    tokens = label.split()
    low = [t.lower() for t in tokens]
    fields = dict(base)
    fields.setdefault("kind", "hybrid")
    fields.setdefault("network", "lstm")
    fields["label"] = label
    i = 0
    layers = None
    while i < len(low):
        t = low[i]
        if t in ("hybrid", "recursive", "direct"):
            fields["kind"], fields["network"] = t, "lstm"
            fields.setdefault("network_options", {"units": (50,)})
        elif t == "att":
            m = re.fullmatch(r"\d+", low[i + 1]) if i + 1 < len(low) else None
            if not m or i + 2 >= len(low) or not low[i + 2].startswith("head"):
                raise ValueError(f"expected 'Att <k> Head' in {label!r}")
            fields.update(kind="multi-output", network="attention",
                          network_options={"heads": int(m.group(0)), "layers": 1})
            i += 2
        elif t == "multi-att":
            fields.update(kind="multi-output", network="attention",
                          network_options={"heads": "per_variable", "layers": 1})
        elif t.isdigit() and i + 1 < len(low) and low[i + 1].startswith("layer"):
            layers = int(t)
            i += 1
        elif t == "cnn":
            fields.update(kind="multi-output", network="cnn_lstm", network_options={})
        elif t == "mp":
            fields["mp"] = True
        elif t == "rev":
            fields["mp_reversed"] = True
        elif t in _WAVELETS:
            fields["denoise_wavelet"] = _WAVELETS[t]
        else:
            raise ValueError(f"unknown token {tokens[i]!r} in model name {label!r}")
        i += 1
    if layers is not None:
        if fields["network"] != "attention":
            raise ValueError(f"'Layer' applies to attention models only ({label!r})")
        fields["network_options"] = dict(fields["network_options"], layers=layers)
    return StrategySpec(**fields)


TABLE_MODELS = (
    "Hybrid", "Att 1 Head", "Multi-Att 1 Layer", "Multi-Att 2 Layer", "CNN",
    "Multi-Att 2 Layer MP", "Multi-Att 2 Layer MP Rev", "Multi-Att 2 Layer MP Rev DB4",
    "Multi-Att 2 Layer MP Rev Bior3.3",
)
