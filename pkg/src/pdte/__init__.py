"""Non-interactive private decision tree evaluation over levelled HE.

The package is organised around a pluggable homomorphic-evaluation backend
(`pdte.backend`): a bit-exact cleartext simulator and an RLWE levelled
scheme expose the same handle-based interface.  Comparison operators
(`pdte.comparators`), tree evaluation protocols (`pdte.protocols`), the
client/server wire protocol (`pdte.wire`, `pdte.server`, `pdte.client`)
and the benchmark harness (`pdte.bench`) are written against that
interface only.
"""

__version__ = "0.1.0"
