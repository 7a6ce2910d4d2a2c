"""Per-instruction dynamic frequency scaling driven by an ML delay classifier.

Modules: ``isa`` (mini-ISA, assembler, reference interpreter), ``delay``
(execute-unit delay model and classes), ``profiler`` (profiles and features),
``ml`` (random forest / MLP training and metrics), ``codegen`` (classifier
cost model), ``pipeline`` (cycle-level simulator), ``workloads`` and ``cli``.
"""

from ._core import BACKEND_NAME

__version__ = "0.1.0"
__all__ = ["BACKEND_NAME", "__version__"]
