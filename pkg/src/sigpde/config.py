"""Run configuration shared by the CLI and the service.

A :class:`RunConfig` collects the knobs that determine a kernel computation:
static kernel, refinement level, scheme, rescaling, worker count, and seed.
Configs load from JSON (unknown keys rejected), are overridden by flags, and
are echoed into outputs for provenance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

from .errors import InputError
from .static_kernels import StaticKernel

__all__ = ["RunConfig"]

_JSON_KEYS = {
    "static_kernel": "static_kernel",
    "sigma": "sigma",
    "lambda": "lam",
    "scheme": "scheme",
    "rescale": "rescale",
    "threads": "threads",
    "seed": "seed",
}


@dataclass(frozen=True)
class RunConfig:
    """Validated bundle of computation options.

    Parameters
    ----------
    static_kernel : {'linear', 'rbf'}
    sigma : float, optional
        rbf bandwidth; required when ``static_kernel`` is ``rbf``.
    lam : int
        Dyadic refinement level (JSON key ``lambda``).
    scheme : {'explicit', 'implicit'}
    rescale : bool
        Rescale inputs to maximum absolute entry 1 before solving.
    threads : int
        Gram worker count; 0 means one worker per CPU.
    seed : int
        PRNG seed for commands that sample.
    """

    static_kernel: str = "linear"
    sigma: float | None = None
    lam: int = 3
    scheme: str = "explicit"
    rescale: bool = True
    threads: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.static_kernel not in ("linear", "rbf"):
            raise InputError(
                f"static_kernel must be 'linear' or 'rbf', got {self.static_kernel!r}"
            )
        if self.static_kernel == "rbf":
            if self.sigma is None:
                raise InputError("rbf static kernel needs sigma")
            if not isinstance(self.sigma, (int, float)) or isinstance(self.sigma, bool) \
                    or not self.sigma > 0:
                raise InputError(f"sigma must be a positive number, got {self.sigma!r}")
            object.__setattr__(self, "sigma", float(self.sigma))
        elif self.sigma is not None:
            raise InputError("sigma is only meaningful with the rbf static kernel")
        if isinstance(self.lam, bool) or not isinstance(self.lam, int) or self.lam < 0:
            raise InputError(f"lambda must be a nonnegative integer, got {self.lam!r}")
        if self.scheme not in ("explicit", "implicit"):
            raise InputError(
                f"scheme must be 'explicit' or 'implicit', got {self.scheme!r}"
            )
        if not isinstance(self.rescale, bool):
            raise InputError(f"rescale must be a boolean, got {self.rescale!r}")
        if isinstance(self.threads, bool) or not isinstance(self.threads, int) \
                or self.threads < 0:
            raise InputError(
                f"threads must be a nonnegative integer, got {self.threads!r}"
            )
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise InputError(f"seed must be a nonnegative integer, got {self.seed!r}")

    @classmethod
    def from_dict(cls, data: dict, base: "RunConfig | None" = None) -> "RunConfig":
        """Build a config from a JSON-style dict, rejecting unknown keys.

        Parameters
        ----------
        data : dict
            Keys as in the JSON schema (``lambda``, not ``lam``).
        base : RunConfig, optional
            Values to start from; ``data`` overrides field by field.

        Returns
        -------
        RunConfig
        """
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        unknown = set(data) - set(_JSON_KEYS)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = {_JSON_KEYS[k]: v for k, v in data.items()}
        if base is None:
            return cls(**kwargs)
        return replace(base, **kwargs)

    @classmethod
    def load(cls, path, base: "RunConfig | None" = None) -> "RunConfig":
        """Load a config from a JSON file.

        Parameters
        ----------
        path : str or pathlib.Path
        base : RunConfig, optional

        Returns
        -------
        RunConfig
        """
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(data, base=base)

    def override(self, **kwargs) -> "RunConfig":
        """Return a copy with the given non-None fields replaced.

        Parameters
        ----------
        **kwargs
            Field names as on the dataclass (``lam``); None values are
            ignored so absent CLI flags pass through.

        Returns
        -------
        RunConfig
        """
        names = {f.name for f in fields(self)}
        unknown = set(kwargs) - names
        if unknown:
            raise InputError(f"unknown config fields: {', '.join(sorted(unknown))}")
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates)

    def to_static_kernel(self) -> StaticKernel:
        """The configured static kernel as a StaticKernel instance."""
        if self.static_kernel == "rbf":
            return StaticKernel("rbf", bandwidth=self.sigma)
        return StaticKernel("linear")

    def as_dict(self) -> dict:
        """JSON-ready dict using the schema keys (``lambda``)."""
        out = {
            "static_kernel": self.static_kernel,
            "lambda": self.lam,
            "scheme": self.scheme,
            "rescale": self.rescale,
            "threads": self.threads,
            "seed": self.seed,
        }
        if self.static_kernel == "rbf":
            out["sigma"] = self.sigma
        return out
