"""Schema-gated workflow orchestration engine.

A versioned registry of machine-checkable tool and workflow definitions, a
conversational gate that refuses to execute anything that does not validate
at the composed-workflow level, an asynchronous DAG executor with provenance
capture, and HTTP/CLI surfaces on top.
"""

__version__ = "0.1.0"
