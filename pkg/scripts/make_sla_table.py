#!/usr/bin/env python3
"""Print the service-model availability/performability comparison.

Also prints the closed-form response-time breakdown for the headline
payload (8192 B over a 512 kbps uplink with a 100 ms round trip and
250 ms of server-side inference) next to the raw-frame alternative.
"""

import sys
from fractions import Fraction

from glucoread.netsim import (
    Connectivity,
    NetworkCondition,
    RAW_IMAGE_BYTES,
    compare_service_models,
    response_breakdown,
)


def main() -> int:
    print(compare_service_models().render())
    print()
    uplink = NetworkCondition(512_000, Fraction(100), Connectivity.POOR)
    for name, payload in (("compressed", 8192), ("raw frame", RAW_IMAGE_BYTES)):
        b = response_breakdown(payload, uplink, 250)
        print(
            f"{name:>10}: {float(b.transmission_ms):8.1f} ms wire "
            f"+ {float(b.rtt_ms):.0f} ms rtt + {float(b.server_ms):.0f} ms server "
            f"= {float(b.total_ms):8.1f} ms"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
