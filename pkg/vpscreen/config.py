from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional
from .constants import ALPHA
from .nucleus import NuclearModel, make_nucleus, default_rms_fm
from .wk import WKConfig


MODES = ("table1", "table2", "potentials", "properties")
FORMATS = ("table", "csv", "json")
NUCLEI = ("point", "fermi", "shell", "uniform")


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    elif lowered in ("0", "false", "no", "off"):
        return False

    raise ValueError(f"Expected a boolean, got '{value}'")


def _parse_charges(value: str) -> List[int]:
    return [int(v) for v in value.replace(",", " ").split()]


def _parse_optional_float(value: str) -> Optional[float]:
    return None if value.strip().lower() in ("", "none") else float(value)


def _parse_optional_str(value: str) -> Optional[str]:
    return None if value.strip().lower() in ("", "none") else value.strip()


_PARSERS = {
    "z_list": _parse_charges,
    "nucleus": str.strip,
    "rms_fm": _parse_optional_float,
    "mode": str.strip,
    "splines": int,
    "order": int,
    "r_max": float,
    "kappa_max": int,
    "omega_nodes": int,
    "tol": float,
    "wk_finite_size": _parse_bool,
    "format": str.strip,
    "cache_dir": _parse_optional_str,
    "output_dir": str.strip,
    "threads": int,
    "verbose": _parse_bool,
}


@dataclass
class RunConfig:
    """
    Settings of a command line run. The numerical defaults are the ones used for the reference tables.
    """

    z_list: List[int] = field(default_factory=lambda: [92])
    nucleus: str = "fermi"
    rms_fm: Optional[float] = None
    mode: str = "table2"

    # ===== Dirac basis, r_max in units of 1 / (alpha Z) ===== #
    splines: int = 60
    order: int = 8
    r_max: float = 40.0

    # ===== WK loop ===== #
    kappa_max: int = 5
    omega_nodes: int = 24
    # Relative tolerance of the WK partial wave tail only; quadrature and solver tolerances are fixed
    tol: float = 1e-3
    wk_finite_size: bool = False

    format: str = "table"
    cache_dir: Optional[str] = None
    output_dir: str = "."
    threads: int = 1
    verbose: bool = False

    def validate(self) -> "RunConfig":
        if not self.z_list:
            raise ValueError("No nuclear charges given")

        for z in self.z_list:
            if not (1 <= z and ALPHA * z < 1.0):
                raise ValueError(f"Nuclear charge must satisfy 1 <= Z and alpha Z < 1, got {z}")

        if self.mode not in MODES:
            raise ValueError(f"Unknown mode '{self.mode}', expected one of {MODES}")

        if self.format not in FORMATS:
            raise ValueError(f"Unknown format '{self.format}', expected one of {FORMATS}")

        if self.nucleus not in NUCLEI:
            raise ValueError(f"Unknown nucleus '{self.nucleus}', expected one of {NUCLEI}")

        if self.rms_fm is not None:
            if self.rms_fm <= 0.0:
                raise ValueError(f"rms radius must be positive, got {self.rms_fm}")

            if len(self.z_list) > 1:
                raise ValueError("An explicit rms radius requires a single nuclear charge")
        elif self.nucleus != "point" and self.mode != "table1":
            for z in self.z_list:
                default_rms_fm(z)

        if self.kappa_max < 1:
            raise ValueError(f"kappa_max must be at least 1, got {self.kappa_max}")

        if self.threads < 1:
            raise ValueError(f"Number of threads must be at least 1, got {self.threads}")

        return self

    @staticmethod
    def read_file(path: str) -> Dict[str, object]:
        """
        Reads `key = value` lines, `#` starts a comment. Returns the parsed values by field name.
        """

        values = dict()

        with open(path, "r") as f:
            for number, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue

                if "=" not in line:
                    raise ValueError(f"{path}:{number}: expected 'key = value', got '{line}'")

                key, value = (s.strip() for s in line.split("=", 1))
                key = key.replace("-", "_")

                if key not in _PARSERS:
                    raise ValueError(f"{path}:{number}: unknown key '{key}'")

                values[key] = _PARSERS[key](value)

        return values

    @classmethod
    def load(cls, path: Optional[str] = None, **overrides) -> "RunConfig":
        """
        Defaults, then the values of the file at `path`, then `overrides` that are not None.
        """

        names = {f.name for f in fields(cls)}
        unknown = set(overrides) - names
        if unknown:
            raise ValueError(f"Unknown settings: {sorted(unknown)}")

        config = cls()
        if path is not None:
            config = replace(config, **cls.read_file(path))

        return replace(config, **{k: v for k, v in overrides.items() if v is not None}).validate()

    def wk_config(self) -> WKConfig:
        return WKConfig(kappa_max=self.kappa_max, omega_nodes=self.omega_nodes, tol=self.tol)

    def grid_kwargs(self) -> Dict[str, object]:
        return {"n_splines": self.splines, "order": self.order, "r_max": self.r_max}

    def model(self, z: int) -> NuclearModel:
        """
        The nuclear model of charge `z`; the control table always uses the point nucleus.
        """

        if self.mode == "table1":
            return make_nucleus("point", z)

        return make_nucleus(self.nucleus, z, self.rms_fm)
