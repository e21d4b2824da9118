import numpy as np

Params = dict[str, np.ndarray]


class Adam:
    """Adam с поправкой смещения моментов; обновляет параметры на месте."""

    def __init__(
            self,
            params: Params,
            learning_rate: float,
            beta1: float = 0.9,
            beta2: float = 0.999,
            eps: float = 1e-5,
    ) -> None:
        self.params = params
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(value) for name, value in params.items()}
        self.v = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, grads: Params) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, grad in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * grad * grad
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            self.params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_grad_norm(grads: Params, max_norm: float) -> float:
    """Масштабирует градиенты так, чтобы их общая L2-норма не превышала max_norm.

    Returns:
        float: Норма до масштабирования.

    """
    total_norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    coef = max_norm / (total_norm + 1e-6)
    if coef < 1.0:
        for name in grads:
            grads[name] = grads[name] * coef
    return total_norm
