# Copyright 2026 The vibromix Authors
# SPDX-License-Identifier: Apache-2.0
import os
import shutil
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def cli() -> str:
    path = os.environ.get("VIBROMIX_CLI") or shutil.which("vibromix")
    if not path or not Path(path).exists():
        pytest.skip("vibromix executable not found")
    return path
