from __future__ import annotations

import json

import numpy as np
from sklearn.utils.validation import check_is_fitted

from ..exceptions import DataError


def check_binary_target(y):
    """Return ``(classes, y01)`` for a two-class target."""
    classes = np.unique(y)
    if classes.shape[0] != 2:
        raise DataError(f"binary target with both classes required, found {classes.tolist()}")
    return classes, (y == classes[1]).astype(np.float64)


class SerializableMixin:
    """JSON export as ``{kind, params, payload, training_meta}``."""

    kind = "model"

    def _payload(self):
        raise NotImplementedError

    def _meta(self):
        return {}

    def to_dict(self):
        check_is_fitted(self)
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.get_params().items()}
        return {"kind": self.kind, "params": params, "payload": self._payload(),
                "training_meta": self._meta()}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)
