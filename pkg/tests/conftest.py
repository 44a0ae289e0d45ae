import os
import tempfile

import pytest

# Keep dlog tables written by the suite out of the user's cache.
os.environ.setdefault("TKLOOS_CACHE_DIR", tempfile.mkdtemp(prefix="tkloos-test-cache-"))

SMALL_MODULI = [(3, 2), (5, 2), (3, 3), (7, 2), (11, 2), (5, 3), (7, 3)]


@pytest.fixture(params=SMALL_MODULI, ids=lambda pk: f"{pk[0]}^{pk[1]}")
def small_modulus(request):
    from tkloos.modular import PrimePowerModulus

    return PrimePowerModulus(*request.param)
