from dataclasses import dataclass, field
from typing import Dict, Iterable, Tuple

import numpy as np

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
# decay applies to W, Θ and the classifier only
NO_DECAY = ("w_att", "bias")


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], state: AdamState,
              lr: float, betas: Tuple[float, float] = ADAM_BETAS, eps: float = ADAM_EPS,
              weight_decay: float = 0.0, no_decay: Iterable[str] = NO_DECAY):
    """
    Bias-corrected Adam with decoupled weight decay (lr * wd * param subtracted
    from the pre-step value). Moments start at zero on the first call.
    Returns:
        (new params, new state); inputs are left untouched
    """
    b1, b2 = betas
    t = state.step + 1
    skip = set(no_decay)
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        m = b1 * state.m.get(name, np.zeros_like(p)) + (1.0 - b1) * g
        v = b2 * state.v.get(name, np.zeros_like(p)) + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        update = lr * m_hat / (np.sqrt(v_hat) + eps)
        if weight_decay and name not in skip:
            update = update + lr * weight_decay * p
        new_params[name] = p - update
        new_m[name], new_v[name] = m, v
    return new_params, AdamState(m=new_m, v=new_v, step=t)
