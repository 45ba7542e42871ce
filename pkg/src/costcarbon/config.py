"""Run configuration: a flat ``key = value`` text file plus command-line overrides."""

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

PATH_KEYS = (
    "tariff_dir",
    "metadata_file",
    "aef_dir",
    "dam_dir",
    "genemis_dir",
    "regions_file",
    "gazetteer_file",
    "idropp_programs",
    "idropp_parameters",
    "ibdr_rates_file",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    tariff_dir: Optional[Path] = None
    metadata_file: Optional[Path] = None
    aef_dir: Optional[Path] = None
    dam_dir: Optional[Path] = None
    genemis_dir: Optional[Path] = None
    regions_file: Optional[Path] = None
    gazetteer_file: Optional[Path] = None
    idropp_programs: Optional[Path] = None
    idropp_parameters: Optional[Path] = None
    ibdr_rates_file: Optional[Path] = None
    output_dir: Path = Path("out")
    year: int = 2023
    summer_months: tuple = (6, 7, 8, 9)
    flip_months: tuple = (1, 7)
    bundling: str = "bundled"
    reference_demand_kw: float = 1000.0
    reference_price: float = 0.08
    jobs: int = 1
    # directory that relative paths in the config file were resolved against
    base_dir: Path = Path(".")

    def check(self):
        if self.year < 2000:
            raise ConfigError(f"year must be >= 2000, got {self.year}")
        if not self.reference_demand_kw > 0:
            raise ConfigError("reference_demand_kw must be positive")
        if not self.reference_price > 0:
            raise ConfigError("reference_price must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if len(self.flip_months) != 2:
            raise ConfigError("flip_months needs exactly two months")
        for m in (*self.summer_months, *self.flip_months):
            if not 1 <= m <= 12:
                raise ConfigError(f"month {m} outside 1..12")
        return self

    def missing_paths(self):
        return [
            (key, path) for key in PATH_KEYS
            if (path := getattr(self, key)) is not None and not path.exists()
        ]

    def display(self, path):
        """Path as written relative to the config base, for stable output files."""
        try:
            return Path(path).resolve().relative_to(self.base_dir.resolve()).as_posix()
        except ValueError:
            return Path(path).as_posix()


def _months(text):
    return tuple(int(p) for p in text.replace(" ", "").split(",") if p)


_CASTS = {
    "year": int,
    "jobs": int,
    "reference_demand_kw": float,
    "reference_price": float,
    "summer_months": _months,
    "flip_months": _months,
    "bundling": str,
}


def parse_config_text(text, base_dir=Path(".")):
    known = {f.name for f in fields(RunConfig)} - {"base_dir"}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = value
    return build_config(values, base_dir)


def build_config(values, base_dir=Path(".")):
    base_dir = Path(base_dir)
    kwargs = {"base_dir": base_dir}
    for key, value in values.items():
        if value is None or value == "":
            continue
        try:
            if key in PATH_KEYS or key == "output_dir":
                path = Path(value)
                kwargs[key] = path if path.is_absolute() else base_dir / path
            else:
                kwargs[key] = _CASTS[key](value)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return RunConfig(**kwargs)


def load_config(path=None, overrides=None):
    """Read ``path`` (if any), then apply non-None ``overrides``; paths in overrides are cwd-relative."""
    if path is not None:
        path = Path(path)
        config = parse_config_text(path.read_text(encoding="utf-8"), path.parent)
    else:
        config = RunConfig()
    changes = {}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        changes[key] = Path(value) if key == "output_dir" else value
    return replace(config, **changes).check()
