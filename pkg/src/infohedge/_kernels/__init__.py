"""Hot-kernel backend selection.

Imports the compiled extension when available, otherwise the numpy
reference implementation.  Set INFOHEDGE_PURE_PYTHON=1 to force the
fallback (used by the benchmark and by backend-equivalence tests).
"""

import os

from . import _ref

if os.environ.get("INFOHEDGE_PURE_PYTHON") == "1":
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from . import _fastcore as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

OK = _ref.OK
MAX_ITERS = _ref.MAX_ITERS
STEP_FLOORED = _ref.STEP_FLOORED
R_CLIP = _ref.R_CLIP

kl_ba_run = _impl.kl_ba_run
pgd_run = _impl.pgd_run
residual = _impl.residual
free_energy = _impl.free_energy
mlp_train = _impl.mlp_train
