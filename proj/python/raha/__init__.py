# Copyright 2026 The raha Authors
# SPDX-License-Identifier: Apache-2.0
"""Python surface of the hierarchical text rating core."""

try:
    from ._raha import *  # noqa: F401,F403  (installed wheel layout)
    from ._raha import __doc__ as _core_doc
except ImportError:  # pragma: no cover - in-tree runs against the build dir
    from _raha import *  # noqa: F401,F403
    from _raha import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
