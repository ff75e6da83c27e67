"""Level-set topology optimization of compliant mechanisms and stress-aware structures."""

from ._core import (
    ConfigError,
    LsmechError,
    ObjectiveMode,
    ProblemSpec,
    RunStatus,
    __version__,
    heaviside,
    initial_displacements,
    inverter_problem,
    lbeam_problem,
    load_config,
    magnifier_problem,
    mesh,
    parse_config,
    run,
    volume_fraction,
    von_mises,
    write_svg,
)

HISTORY_COLUMNS = (
    "iter", "J", "W", "E", "volume", "sigma_pn", "max_stress_ratio", "U_o", "U_i", "lambda", "max_von_mises",
)

__all__ = [
    "ConfigError", "LsmechError", "ObjectiveMode", "ProblemSpec", "RunStatus", "HISTORY_COLUMNS",
    "heaviside", "initial_displacements", "inverter_problem", "lbeam_problem", "load_config",
    "magnifier_problem", "mesh", "parse_config", "run", "volume_fraction", "von_mises", "write_svg",
]
