"""Shared fixtures."""

from __future__ import annotations

import importlib
import sys
from unittest.mock import MagicMock, patch

import pytest


def _passthrough(*_args, **_kwargs):
    return lambda fn: fn


@pytest.fixture(scope="module")
def server():
    """``ipp.server`` imported against a stand-in FastMCP.

    The tool, resource and prompt decorators hand the functions back
    unchanged, so tests call the tools as plain functions. The real
    ``sys.modules`` is restored afterwards.
    """
    app = MagicMock(name="FastMCP()")
    app.tool.side_effect = _passthrough
    app.resource.side_effect = _passthrough
    app.prompt.side_effect = _passthrough

    with patch.dict(sys.modules), patch("mcp.server.fastmcp.FastMCP", return_value=app):
        sys.modules.pop("ipp.server", None)
        module = importlib.import_module("ipp.server")
    return module
