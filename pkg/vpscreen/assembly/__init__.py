from .result import Diagram, Contribution, ControlReport, ScreeningTotal, IonProperties
from .pipeline import ScreeningCalculator, screening_total, control_table1, RMS_VARIATION, CHARGE_STEP
