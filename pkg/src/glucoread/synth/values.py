"""Random generation of the displayed value and its measurement unit.

Half of the values are integers (mg/dL), 35% have one decimal digit and
the remainder two (both mmol/L; decimal readings are capped at 55.0 for
plausibility). The unit is always compatible with the value form.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from ..readout import Unit

INTEGER_FRACTION = 0.50
ONE_DECIMAL_FRACTION = 0.35
DECIMAL_CAP = 55.0


def generate_value(rng: np.random.Generator) -> Tuple[str, Unit]:
    form = rng.random()
    if form < INTEGER_FRACTION:
        return str(int(rng.integers(0, 1000))), Unit.MG_DL
    if form < INTEGER_FRACTION + ONE_DECIMAL_FRACTION:
        tenths = int(rng.integers(0, int(DECIMAL_CAP * 10)))
        return f"{tenths // 10}.{tenths % 10}", Unit.MMOL_L
    hundredths = int(rng.integers(0, int(DECIMAL_CAP * 100)))
    return f"{hundredths // 100}.{hundredths % 100:02d}", Unit.MMOL_L
