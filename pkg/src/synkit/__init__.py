"""synkit: model, simulate, and prove synchronous dataflow controllers."""

__version__ = "0.1.0"
