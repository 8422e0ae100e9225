"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy fallback. Set ``HETNET_KERNELS=python`` to force the fallback.
"""

import os

if os.environ.get("HETNET_KERNELS", "").lower() == "python":
    from ._kernels_py import *  # noqa: F401,F403
    from ._kernels_py import BACKEND
else:
    try:
        from ._ckernels import *  # noqa: F401,F403
        from ._ckernels import BACKEND
    except ImportError:
        from ._kernels_py import *  # noqa: F401,F403
        from ._kernels_py import BACKEND

__all__ = ["BACKEND", "eval_power_sum", "invert_power_sum", "box_muller", "ks_uniform_stat"]
