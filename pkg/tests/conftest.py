"""Shared fixtures for the test suite (data builders live in helpers.py)."""

from __future__ import annotations

import importlib

import pytest


@pytest.fixture(params=["python", "native"])
def kernel_impl(request):
    """Both kernel implementations, importable side by side."""
    if request.param == "python":
        return importlib.import_module("groupsched.kernels._numpy")
    mod = importlib.util.find_spec("groupsched.kernels._core")
    if mod is None:
        pytest.skip("compiled kernel core not built")
    return importlib.import_module("groupsched.kernels._core")
