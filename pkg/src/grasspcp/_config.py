"""Resource caps. Each can be overridden by an environment variable."""

import os


def _env_int(name, default):
    raw = os.environ.get(name)
    return int(float(raw)) if raw else default


#: maximum number of subspaces a single enumeration may emit
ENUM_CAP = _env_int("GRASSPCP_ENUM_CAP", 10**7)
#: maximum n*m for dense tables on F_2^{n x m}
TABLE_BITS_CAP = _env_int("GRASSPCP_TABLE_BITS_CAP", 26)
#: maximum number of zooms checked by a pseudo-randomness scan
ZOOM_CAP = _env_int("GRASSPCP_ZOOM_CAP", 10**7)
#: maximum product of alphabet sizes for exhaustive CSP search
CSP_CAP = _env_int("GRASSPCP_CSP_CAP", 10**8)
#: maximum hyperedges for exact matching
MATCHING_CAP = _env_int("GRASSPCP_MATCHING_CAP", 24)
