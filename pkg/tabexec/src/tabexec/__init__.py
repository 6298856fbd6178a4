"""Isolated execution of model-generated table programs.

A worker process receives line-delimited JSON requests on stdin, runs the
screened program against a preloaded table, and answers one JSON response
per request on stdout. The first line a worker emits is the handshake
{"protocol": "tabexec", "version": 1}.
"""

__version__ = "0.1.0"

PROTOCOL_NAME = "tabexec"
PROTOCOL_VERSION = 1
