"""Run configuration for the command-line harness and the MCP server.

Settings resolve in this order, first match winning:

1. explicit command-line flags,
2. the JSON file given with ``--config``,
3. the ``IPP_SEED`` environment variable (seed only),
4. the defaults below.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .errors import InputError
from .models.prediction import DEFAULT_PSEUDOS_ALPHA, ScoreKind
from .models.results import DEFAULT_ALPHA, DEFAULT_BOX, DEFAULT_LAMBDA_GRID, FitConfig, OptimizerConfig
from .models.scm import DEFAULT_INTERVENTIONS, INTERVENTION_NAMES

SEED_ENV_VAR = "IPP_SEED"

#: Per-environment sample sizes of the replication study.
REPLICATION_SIZES = (100, 150, 200, 250, 500, 1000)
DEFAULT_N_PER_ENV = 1000
DEFAULT_N_TEST = 10_000
DEFAULT_REPLICATIONS = 50
#: Intervention strengths of the two-covariate example.
DEFAULT_T_GRID = tuple(round(0.1 * k, 10) for k in range(11))


def _default_threads() -> int:
    return os.cpu_count() or 1


def parse_float_list(text: str) -> tuple[float, ...]:
    """Parse ``"0,0.5,1"`` or the range form ``"start:stop:step"`` (stop included)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise InputError(f"Range step must be positive in '{text}'")
            count = int(round((stop - start) / step))
            return tuple(round(start + k * step, 12) for k in range(count + 1))
        return tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise InputError(f"Cannot parse '{text}' as a list of numbers") from None


def parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise InputError(f"Cannot parse '{text}' as a list of integers") from None


def parse_box(text: str) -> tuple[float, float]:
    values = parse_float_list(text)
    if len(values) != 2:
        raise InputError(f"Box must be 'lo,hi', got '{text}'")
    return values[0], values[1]


def parse_names(text: str) -> tuple[str, ...]:
    return tuple(p.strip().lower() for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class RunConfig:
    """Every setting a harness run depends on, fully resolved."""

    score: str = "logs"
    pseudos_alpha: float = DEFAULT_PSEUDOS_ALPHA
    alpha: float = DEFAULT_ALPHA
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    box: tuple[float, float] = DEFAULT_BOX
    d: int = 5
    #: Per-environment sample sizes; ``None`` means the command's default.
    n: tuple[int, ...] | None = None
    confounded: bool = True
    seed: int = 0
    replications: int = DEFAULT_REPLICATIONS
    threads: int = field(default_factory=_default_threads)
    starts: int = 20
    n_test: int = DEFAULT_N_TEST
    interventions: tuple[str, ...] = DEFAULT_INTERVENTIONS
    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    input: str | None = None
    output_dir: str = "."

    def __post_init__(self) -> None:
        ScoreKind.parse(self.score, self.pseudos_alpha)
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.d < 1:
            raise InputError(f"d must be at least 1, got {self.d}")
        if self.n is not None:
            if not self.n:
                raise InputError("n must list at least one sample size")
            if any(v < 2 for v in self.n):
                raise InputError(f"Sample sizes must be at least 2, got {list(self.n)}")
        if self.seed < 0:
            raise InputError(f"seed must be non-negative, got {self.seed}")
        if self.replications < 2:
            raise InputError(f"replications must be at least 2, got {self.replications}")
        if self.threads < 1:
            raise InputError(f"threads must be at least 1, got {self.threads}")
        if self.starts < 1:
            raise InputError(f"starts must be at least 1, got {self.starts}")
        if self.n_test < 2:
            raise InputError(f"n_test must be at least 2, got {self.n_test}")
        unknown = [name for name in self.interventions if name not in INTERVENTION_NAMES]
        if unknown:
            raise InputError(f"Unknown intervention(s) {unknown}. Valid: {list(INTERVENTION_NAMES)}")
        if not self.interventions:
            raise InputError("At least one intervention is required")
        # FitConfig validates the grid and the box.
        self.fit_config()

    @property
    def kind(self) -> ScoreKind:
        return ScoreKind.parse(self.score, self.pseudos_alpha)

    @property
    def n_per_env(self) -> int:
        if self.n is None:
            return DEFAULT_N_PER_ENV
        if len(self.n) != 1:
            raise InputError(f"Expected a single sample size, got {list(self.n)}")
        return self.n[0]

    @property
    def sample_sizes(self) -> tuple[int, ...]:
        return REPLICATION_SIZES if self.n is None else self.n

    def fit_config(self, threads: int | None = None) -> FitConfig:
        """The estimator settings; ``threads`` overrides the restart pool size."""
        return FitConfig(
            kind=self.kind,
            lambda_grid=self.lambda_grid,
            box=self.box,
            optimizer=OptimizerConfig(n_starts=self.starts, threads=threads or self.threads),
            seed=self.seed,
        )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    def reproducibility_dict(self) -> dict[str, Any]:
        """``to_dict`` without the settings that cannot change a result.

        Restarts and replications are reduced in a fixed order, so the
        pool size is left out and outputs match across machines.
        """
        data = self.to_dict()
        data.pop("threads")
        return data

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], base: RunConfig | None = None) -> RunConfig:
        """Overlay ``data`` on ``base`` (or the defaults), coercing list values."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"Unknown configuration key(s) {unknown}. Valid: {sorted(known)}")
        values: dict[str, Any] = {}
        for key, value in data.items():
            if value is None and key not in ("n", "input"):
                continue
            if key in ("lambda_grid", "t_grid"):
                value = parse_float_list(value) if isinstance(value, str) else tuple(float(v) for v in value)
            elif key == "box":
                value = parse_box(value) if isinstance(value, str) else tuple(float(v) for v in value)
            elif key == "n" and value is not None:
                value = parse_int_list(str(value)) if isinstance(value, (str, int)) else tuple(int(v) for v in value)
            elif key == "interventions":
                value = parse_names(value) if isinstance(value, str) else tuple(str(v).lower() for v in value)
            values[key] = value
        return replace(base or cls(), **values)

    @classmethod
    def resolve(
        cls,
        flags: Mapping[str, Any],
        config_path: str | Path | None = None,
        environ: Mapping[str, str] | None = None,
    ) -> RunConfig:
        """Merge flags, the JSON config file and the environment.

        ``flags`` entries that are ``None`` count as not given.

        Raises:
            InputError: On an unreadable config file, an unknown key or
                an invalid value.
        """
        environ = os.environ if environ is None else environ
        base = cls()
        seed_text = environ.get(SEED_ENV_VAR)
        if seed_text:
            try:
                base = replace(base, seed=int(seed_text))
            except ValueError:
                raise InputError(f"{SEED_ENV_VAR} must be an integer, got '{seed_text}'") from None
        if config_path is not None:
            path = Path(config_path)
            try:
                document = json.loads(path.read_text(encoding="utf-8"))
            except OSError as exc:
                raise InputError(f"Cannot read config file {path}: {exc.strerror}") from None
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
            if not isinstance(document, dict):
                raise InputError(f"{path}: the config file must hold a JSON object")
            base = cls.from_mapping(document, base)
        given = {k: v for k, v in flags.items() if v is not None}
        return cls.from_mapping(given, base)
