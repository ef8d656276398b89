import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple


class Diagram(Enum):
    UehlA = "uehl_a"
    UehlB = "uehl_b"
    WKA = "wk_a"
    WKB = "wk_b"

    @property
    def is_uehling(self) -> bool:
        return self in (Diagram.UehlA, Diagram.UehlB)

    @property
    def is_one_body(self) -> bool:
        return self in (Diagram.UehlA, Diagram.WKA)


@dataclass(frozen=True)
class Contribution:
    """
    One screening diagram for one ion, in eV.
    """

    z: float
    diagram: Diagram
    value: float
    uncertainty: float = 0.0
    model: str = ""

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"Contribution {self.diagram.value} at Z = {self.z:g} is not finite: {self.value}")

        if not (self.uncertainty >= 0.0):
            raise ValueError(f"Uncertainty must be non-negative, got {self.uncertainty}")


@dataclass(frozen=True)
class ScreeningTotal:
    z: float
    rms_fm: float
    contributions: Tuple[Contribution, ...]
    uncertainty: float = 0.0

    @property
    def total(self) -> float:
        return sum(c.value for c in self.contributions)

    def __getitem__(self, diagram: Diagram) -> Contribution:
        for c in self.contributions:
            if c.diagram is diagram:
                return c

        raise KeyError(diagram)

    def as_row(self) -> Dict[str, float]:
        """
        Flat row with energies in eV, in the column order of the reports.
        """

        row = {"Z": self.z, "rms_fm": self.rms_fm}
        row.update({f"{d.value}_eV": self[d].value for d in Diagram})
        row.update({"total_eV": self.total, "unc_eV": self.uncertainty})

        return row


@dataclass(frozen=True)
class ControlReport:
    """
    Screening diagrams with the second electron replaced by the static source -alpha / r, compared against the
    charge derivative of the one-electron vacuum polarization energy. The corrections carry the sign of the energy
    shifts they represent; the identity is checked on magnitudes.
    """

    z: float
    uehl_a: float
    uehl_b: float
    wk_a: float
    wk_b: float
    derivative: float

    @property
    def sum(self) -> float:
        return self.uehl_a + self.uehl_b + self.wk_a + self.wk_b

    @property
    def discrepancy(self) -> float:
        return abs(abs(self.sum) - abs(self.derivative))

    @property
    def relative_discrepancy(self) -> float:
        return self.discrepancy / abs(self.derivative)

    def as_row(self) -> Dict[str, float]:
        return {
            "Z": self.z,
            "uehl_a_eV": self.uehl_a,
            "uehl_b_eV": self.uehl_b,
            "wk_a_eV": self.wk_a,
            "wk_b_eV": self.wk_b,
            "sum_eV": self.sum,
            "dEdZ_eV": self.derivative,
            "discrepancy": self.relative_discrepancy
        }


@dataclass(frozen=True)
class IonProperties:
    z: float
    rms_fm: float
    binding_ev: float
    uehling_ev: float
    wk_ev: float

    def as_row(self) -> Dict[str, float]:
        return {
            "Z": self.z,
            "rms_fm": self.rms_fm,
            "binding_eV": self.binding_ev,
            "uehling_eV": self.uehling_ev,
            "wk_eV": self.wk_ev
        }
