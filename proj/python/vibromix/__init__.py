# Copyright 2026 The vibromix Authors
# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the vibromix vibrotactile feedback engine."""

from ._core import (
    AnalysisError,
    BuildError,
    ContractError,
    ControlService,
    DesignError,
    Error,
    Filter,
    ParseError,
    Pipeline,
    RangeError,
    SchemaError,
    aligned_r,
    ase,
    band_center_hz,
    contact_energy_closed_form,
    control_protocol_schema,
    demo_script,
    design_bandpass,
    e_ratio,
    gate,
    render_scenario,
    rms,
    snr_db,
    xcorr_lag,
    zcr,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
