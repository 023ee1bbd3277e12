"""Built-in models and their shipped solver defaults."""

from dataclasses import fields as dataclass_fields

from ..errors import ConfigError
from ..optimizer import SolverConfig
from .burgers import BurgersDiscretization, BurgersParams, assemble_burgers, make_burgers
from .linear import LinearTestParams, make_scalar_linear
from .lotka_volterra import LotkaVolterraParams, make_lotka_volterra
from .pendulum import PendulumParams, make_pendulum

__all__ = [
    "BurgersDiscretization",
    "BurgersParams",
    "LinearTestParams",
    "LotkaVolterraParams",
    "PendulumParams",
    "assemble_burgers",
    "available_models",
    "default_config",
    "get_model",
    "make_burgers",
    "make_lotka_volterra",
    "make_pendulum",
    "make_scalar_linear",
]

# model id -> (params dataclass, factory, factory horizon kwarg allowed)
_REGISTRY = {
    "lotka-volterra": (LotkaVolterraParams, make_lotka_volterra),
    "pendulum": (PendulumParams, make_pendulum),
    "burgers": (BurgersParams, make_burgers),
    "linear": (LinearTestParams, make_scalar_linear),
}

# solver defaults per model: (n_steps, horizon, tau0, extra solver settings)
_DEFAULTS = {
    "lotka-volterra": (3000, 30.0, 15.0, {}),
    "pendulum": (2500, 25.0, 17.0, {}),   # the useful maximum needs tau0 near 17
    # the stiff control (alpha = 2e-9) needs the signed BB dynamics and a
    # deeper Krylov space for the Newton systems; the cap keeps one Newton
    # iteration near a minute of wall time
    "burgers": (1000, 10.0, 5.0, {"bb_step_policy": "signed", "gmres_max_iters": 600,
                                  "max_newton_iters": 15}),
    "linear": (400, 2.0, 1.0, {}),
}


def available_models():
    return sorted(_REGISTRY)


def get_model(model_id, params=None, horizon=None):
    """Build the ProblemSpec for a registered model id.

    `params` is a flat mapping of parameter overrides; for lotka-volterra a
    `terminal` entry may itself be a mapping {beta, y_des} enabling the
    terminal penalty.
    """
    if model_id not in _REGISTRY:
        raise ConfigError(
            f"unknown model {model_id!r}; available: {', '.join(available_models())}"
        )
    params_cls, factory = _REGISTRY[model_id]
    overrides = dict(params or {})
    if model_id == "lotka-volterra" and isinstance(overrides.get("terminal"), dict):
        term = overrides["terminal"]
        unknown = set(term) - {"beta", "y_des"}
        if unknown:
            raise ConfigError(f"unknown terminal keys: {sorted(unknown)}")
        overrides["terminal"] = (float(term.get("beta", 25.0)), float(term.get("y_des", 1.0)))
    if model_id == "linear":
        # interior optimum by default: the decaying state crosses the target
        # inside the horizon, so the peak time is well-defined
        overrides.setdefault("phi1_quadratic", (1.0, 0.5))
        for key in ("phi1_quadratic", "phi2_quadratic"):
            if isinstance(overrides.get(key), list):
                overrides[key] = tuple(float(v) for v in overrides[key])
    allowed = {f.name for f in dataclass_fields(params_cls)}
    unknown = set(overrides) - allowed
    if unknown:
        raise ConfigError(
            f"unknown parameters for {model_id}: {sorted(unknown)}; allowed: {sorted(allowed)}"
        )
    model_params = params_cls(**overrides)
    kwargs = {}
    if horizon is not None:
        kwargs["horizon"] = float(horizon)
    else:
        kwargs["horizon"] = _DEFAULTS[model_id][1]
    return factory(model_params, **kwargs)


def default_config(model_id, **overrides):
    """Shipped SolverConfig for a model id (step count, tau0, tolerances)."""
    if model_id not in _DEFAULTS:
        raise ConfigError(f"unknown model {model_id!r}")
    n_steps, _, tau0, extra = _DEFAULTS[model_id]
    base = dict(n_steps=n_steps, tau0=tau0, **extra)
    base.update(overrides)
    return SolverConfig(**base)


def default_horizon(model_id):
    if model_id not in _DEFAULTS:
        raise ConfigError(f"unknown model {model_id!r}")
    return _DEFAULTS[model_id][1]
